#pragma once

#include <memory>
#include <string>
#include <vector>

#include "turngcn/corpus.hpp"

namespace turngcn {

/// Lowercases and splits text on whitespace; every ASCII punctuation
/// character becomes its own token. Bytes >= 0x80 are treated as word
/// characters so multi-byte sequences stay intact.
std::vector<std::string> split_words(const std::string& text);

/// Word-level vocabulary with fixed special tokens at the head. File format:
/// one token per line, id = line number.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kS1 = 4;
  static constexpr int kS2 = 5;

  Vocab();  // specials only

  int add(const std::string& token);           // idempotent
  int id(const std::string& token) const;      // kUnk when absent
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }

  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

  bool operator==(const Vocab& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> index_;
};

/// Maps normalized words to ids; unknown words collapse to the single OOV id.
class Tokenizer {
 public:
  explicit Tokenizer(std::shared_ptr<const Vocab> vocab) : vocab_(std::move(vocab)) {}

  std::vector<int> encode(const std::string& text) const;
  std::vector<int> encode_words(const std::vector<std::string>& words) const;
  const Vocab& vocab() const { return *vocab_; }
  std::shared_ptr<const Vocab> vocab_ptr() const { return vocab_; }

 private:
  std::shared_ptr<const Vocab> vocab_;
};

/// Vocabulary over every turn text, speaker id, and argument of the corpus,
/// plus the ":" separator used when assembling turn token runs.
Vocab build_vocab(const Dataset& data);

}  // namespace turngcn
