#pragma once

#include <cstdint>
#include <vector>

namespace turngcn {

/// Logical N x N attention mask over {allowed, disallowed}, plus the turn
/// window size it was built with. The additive -inf realization happens
/// inside the softmax; tests and invariants compare the logical state.
struct SurroundMask {
  int n = 0;
  int window = 0;
  std::vector<uint8_t> allowed;  // row-major n*n, 1 = allowed

  SurroundMask() = default;
  SurroundMask(int n_, int window_) : n(n_), window(window_), allowed(static_cast<std::size_t>(n_) * n_, 0) {}

  static SurroundMask all_allowed(int n) {
    SurroundMask m(n, 0);
    for (auto& a : m.allowed) a = 1;
    return m;
  }

  bool is_allowed(int r, int c) const { return allowed[static_cast<std::size_t>(r) * n + c] != 0; }
  void set(int r, int c, bool v) { allowed[static_cast<std::size_t>(r) * n + c] = v ? 1 : 0; }

  bool operator==(const SurroundMask& o) const { return n == o.n && allowed == o.allowed; }
};

}  // namespace turngcn
