#include "turngcn/tokenizer.hpp"

#include <cctype>
#include <fstream>

namespace turngcn {

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (unsigned char ch : text) {
    if (ch < 0x80 && std::isspace(ch)) {
      flush();
    } else if (ch < 0x80 && std::ispunct(ch)) {
      flush();
      out.push_back(std::string(1, static_cast<char>(ch)));
    } else {
      cur.push_back(ch < 0x80 ? static_cast<char>(std::tolower(ch)) : static_cast<char>(ch));
    }
  }
  flush();
  return out;
}

namespace {
const std::vector<std::string>& special_tokens() {
  static const std::vector<std::string> specials{"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[S1]", "[S2]"};
  return specials;
}
}  // namespace

Vocab::Vocab() {
  for (const std::string& s : special_tokens()) add(s);
}

int Vocab::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const int id = size();
  tokens_.push_back(token);
  index_[token] = id;
  return id;
}

int Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size()) throw ShapeError("token id out of vocabulary range");
  return tokens_[static_cast<std::size_t>(id)];
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary: " + path);
  for (const std::string& t : tokens_) out << t << '\n';
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary: " + path);
  Vocab v;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    if (lineno < static_cast<int>(special_tokens().size())) {
      if (line != special_tokens()[static_cast<std::size_t>(lineno)])
        throw DataError("vocabulary header does not carry the expected special tokens");
    } else {
      v.add(line);
    }
    ++lineno;
  }
  if (lineno < static_cast<int>(special_tokens().size()))
    throw DataError("vocabulary file truncated");
  return v;
}

std::vector<int> Tokenizer::encode(const std::string& text) const {
  return encode_words(split_words(text));
}

std::vector<int> Tokenizer::encode_words(const std::vector<std::string>& words) const {
  std::vector<int> ids;
  ids.reserve(words.size());
  for (const std::string& w : words) ids.push_back(vocab_->id(w));
  return ids;
}

Vocab build_vocab(const Dataset& data) {
  Vocab v;
  v.add(":");
  for (const RelationInstance& inst : data.instances) {
    for (const Turn& t : inst.dialogue->turns) {
      for (const std::string& w : split_words(t.speaker_id)) v.add(w);
      for (const std::string& w : split_words(t.text)) v.add(w);
    }
    for (const std::string& w : split_words(inst.subject)) v.add(w);
    for (const std::string& w : split_words(inst.object)) v.add(w);
  }
  return v;
}

}  // namespace turngcn
