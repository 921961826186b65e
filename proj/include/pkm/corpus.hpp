#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pkm {

enum class TokenizeMode { Char, Whitespace };

/// Token id streams for the three splits plus the symbol table. The vocab
/// is built from the train split only; symbols unseen in train map to UNK.
/// Ids 0 and 1 are reserved for UNK and BOS; each split stream starts with
/// one BOS.
struct TokenizedCorpus {
  static constexpr int32_t kUnk = 0;
  static constexpr int32_t kBos = 1;

  std::vector<std::string> vocab;  // id -> symbol; [0]="<unk>", [1]="<bos>"
  std::vector<int32_t> train;
  std::vector<int32_t> valid;
  std::vector<int32_t> test;

  int32_t vocab_size() const { return static_cast<int32_t>(vocab.size()); }

  const std::vector<int32_t>& split(std::string_view name) const {
    if (name == "train") return train;
    if (name == "valid") return valid;
    if (name == "test") return test;
    throw std::invalid_argument("unknown split: " + std::string(name));
  }
};

namespace detail {

inline std::vector<std::string> split_symbols(std::string_view text, TokenizeMode mode) {
  std::vector<std::string> out;
  if (mode == TokenizeMode::Char) {
    out.reserve(text.size());
    for (char c : text) out.emplace_back(1, c);
  } else {
    size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
      size_t j = i;
      while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      if (j > i) out.emplace_back(text.substr(i, j - i));
      i = j;
    }
  }
  return out;
}

}  // namespace detail

inline TokenizedCorpus tokenize_corpus(std::string_view train_text,
                                       std::string_view valid_text,
                                       std::string_view test_text, TokenizeMode mode) {
  if (train_text.empty())
    throw std::invalid_argument("tokenize_corpus: empty train text");

  const std::vector<std::string> train_syms = detail::split_symbols(train_text, mode);
  if (train_syms.empty())
    throw std::invalid_argument("tokenize_corpus: train text has no tokens");

  TokenizedCorpus corpus;
  corpus.vocab = {"<unk>", "<bos>"};
  std::set<std::string> uniq(train_syms.begin(), train_syms.end());
  corpus.vocab.insert(corpus.vocab.end(), uniq.begin(), uniq.end());

  std::unordered_map<std::string, int32_t> to_id;
  for (size_t i = 0; i < corpus.vocab.size(); ++i)
    to_id[corpus.vocab[i]] = static_cast<int32_t>(i);

  auto encode = [&](const std::vector<std::string>& syms) {
    std::vector<int32_t> ids;
    ids.reserve(syms.size() + 1);
    ids.push_back(TokenizedCorpus::kBos);
    for (const std::string& s : syms) {
      auto it = to_id.find(s);
      ids.push_back(it == to_id.end() ? TokenizedCorpus::kUnk : it->second);
    }
    return ids;
  };

  corpus.train = encode(train_syms);
  corpus.valid = encode(detail::split_symbols(valid_text, mode));
  corpus.test = encode(detail::split_symbols(test_text, mode));
  return corpus;
}

/// Raw corpus text split into the three spans. The manifest is a three-line
/// text file of byte offsets, one per split, each the offset where that
/// split starts; the last split runs to end of file. Without a manifest the
/// text splits 90/5/5.
struct RawCorpus {
  std::string train;
  std::string valid;
  std::string test;
};

inline RawCorpus split_raw_text(std::string text, const std::string& manifest_text) {
  int64_t off[3];
  if (manifest_text.empty()) {
    off[0] = 0;
    off[1] = static_cast<int64_t>(text.size()) * 90 / 100;
    off[2] = static_cast<int64_t>(text.size()) * 95 / 100;
  } else {
    std::istringstream is(manifest_text);
    for (int i = 0; i < 3; ++i) {
      if (!(is >> off[i]))
        throw std::invalid_argument("split manifest: expected three byte offsets");
    }
  }
  const int64_t size = static_cast<int64_t>(text.size());
  if (!(0 <= off[0] && off[0] <= off[1] && off[1] <= off[2] && off[2] <= size))
    throw std::invalid_argument("split manifest: offsets out of order or out of range");
  RawCorpus raw;
  raw.train = text.substr(static_cast<size_t>(off[0]), static_cast<size_t>(off[1] - off[0]));
  raw.valid = text.substr(static_cast<size_t>(off[1]), static_cast<size_t>(off[2] - off[1]));
  raw.test = text.substr(static_cast<size_t>(off[2]));
  return raw;
}

inline std::string read_file_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Loads `path` and, if present, the `path + ".splits"` manifest.
inline TokenizedCorpus load_corpus(const std::string& path, TokenizeMode mode) {
  std::string text = read_file_text(path);
  if (text.empty()) throw std::invalid_argument("corpus file is empty: " + path);
  std::string manifest;
  {
    std::ifstream in(path + ".splits", std::ios::binary);
    if (in) {
      std::ostringstream os;
      os << in.rdbuf();
      manifest = os.str();
    }
  }
  RawCorpus raw = split_raw_text(std::move(text), manifest);
  return tokenize_corpus(raw.train, raw.valid, raw.test, mode);
}

}  // namespace pkm
