#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "pkm/rng.hpp"

namespace pkm {

/// Deterministic synthetic text: a Zipf-distributed lexicon of pronounceable
/// words with bigram successor structure, rendered as lowercase sentences.
/// Small enough to bundle nothing, rich enough that a character model has
/// spellings and word transitions to learn.
struct SynthCorpusConfig {
  uint64_t seed = 1;
  int64_t train_bytes = 1 << 20;
  int64_t valid_bytes = 48 << 10;
  int64_t test_bytes = 48 << 10;
  int lexicon_size = 4000;
};

namespace detail {

class WordModel {
 public:
  explicit WordModel(uint64_t seed, int lexicon_size) : rng_(seed) {
    static const char* kOnsets[] = {"b",  "c",  "d",  "f",  "g",  "h",  "j",  "k",
                                    "l",  "m",  "n",  "p",  "r",  "s",  "t",  "v",
                                    "w",  "z",  "br", "ch", "cl", "cr", "dr", "fl",
                                    "fr", "gl", "gr", "pl", "pr", "sh", "sl", "sp",
                                    "st", "th", "tr", "qu"};
    static const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ea", "ee", "io", "ou"};
    static const char* kCodas[] = {"",   "",   "",  "b", "d",  "g",  "k",  "l",  "m",
                                   "n",  "p",  "r", "s", "t",  "x",  "ng", "nt", "st",
                                   "rd", "ck", "ss"};

    std::set<std::string> seen;
    while (static_cast<int>(words_.size()) < lexicon_size) {
      std::string w;
      const int syllables = 1 + static_cast<int>(rng_.integer(3));
      for (int s = 0; s < syllables; ++s) {
        w += kOnsets[rng_.integer(sizeof(kOnsets) / sizeof(*kOnsets))];
        w += kVowels[rng_.integer(sizeof(kVowels) / sizeof(*kVowels))];
        if (s + 1 == syllables) w += kCodas[rng_.integer(sizeof(kCodas) / sizeof(*kCodas))];
      }
      if (seen.insert(w).second) words_.push_back(w);
    }

    // Zipf cumulative over ranks.
    cumulative_.resize(words_.size());
    double total = 0.0;
    for (size_t r = 0; r < words_.size(); ++r) {
      total += 1.0 / std::pow(static_cast<double>(r) + 2.7, 1.05);
      cumulative_[r] = total;
    }
    for (double& c : cumulative_) c /= total;

    // Bigram structure: each word prefers a small set of successors.
    successors_.resize(words_.size());
    for (auto& succ : successors_) {
      succ.resize(12);
      for (int& s : succ) s = static_cast<int>(zipf_draw(rng_));
    }
  }

  int64_t zipf_draw(Rng& rng) {
    const double u = rng.uniform(0.0, 1.0);
    const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
    return it == cumulative_.end() ? static_cast<int64_t>(cumulative_.size()) - 1
                                   : it - cumulative_.begin();
  }

  int64_t next_word(Rng& rng, int64_t prev) {
    if (prev >= 0 && rng.uniform(0.0, 1.0) < 0.55) {
      const auto& succ = successors_[static_cast<size_t>(prev)];
      return succ[rng.integer(succ.size())];
    }
    return zipf_draw(rng);
  }

  const std::string& word(int64_t id) const { return words_[static_cast<size_t>(id)]; }

 private:
  Rng rng_;
  std::vector<std::string> words_;
  std::vector<double> cumulative_;
  std::vector<std::vector<int>> successors_;
};

inline std::string generate_stream(WordModel& model, Rng rng, int64_t target_bytes) {
  std::string out;
  out.reserve(static_cast<size_t>(target_bytes) + 128);
  int sentences_in_paragraph = 0;
  int paragraph_len = 6 + static_cast<int>(rng.integer(7));
  while (static_cast<int64_t>(out.size()) < target_bytes) {
    const int len = 4 + static_cast<int>(rng.integer(11));
    int64_t prev = -1;
    for (int i = 0; i < len; ++i) {
      const int64_t w = model.next_word(rng, prev);
      prev = w;
      if (i > 0) {
        if (rng.uniform(0.0, 1.0) < 0.1) out += ',';
        out += ' ';
      }
      out += model.word(w);
    }
    const double punct = rng.uniform(0.0, 1.0);
    out += punct < 0.8 ? '.' : (punct < 0.9 ? '?' : '!');
    if (++sentences_in_paragraph >= paragraph_len) {
      out += '\n';
      sentences_in_paragraph = 0;
      paragraph_len = 6 + static_cast<int>(rng.integer(7));
    } else {
      out += ' ';
    }
  }
  out.resize(static_cast<size_t>(target_bytes));
  return out;
}

}  // namespace detail

/// Returns (text, manifest): the concatenated splits plus the three-line
/// byte-offset manifest describing where each split starts.
inline std::pair<std::string, std::string> make_synthetic_corpus(
    const SynthCorpusConfig& config) {
  detail::WordModel model(config.seed, config.lexicon_size);
  Rng root(config.seed ^ 0x9e3779b97f4a7c15ull);
  std::string text = detail::generate_stream(model, root.child(), config.train_bytes);
  const int64_t train_end = static_cast<int64_t>(text.size());
  text += detail::generate_stream(model, root.child(), config.valid_bytes);
  const int64_t valid_end = static_cast<int64_t>(text.size());
  text += detail::generate_stream(model, root.child(), config.test_bytes);

  std::string manifest = "0\n" + std::to_string(train_end) + "\n" +
                         std::to_string(valid_end) + "\n";
  return {std::move(text), std::move(manifest)};
}

/// Writes `corpus.txt` and `corpus.txt.splits` under `dir`; returns the text path.
inline std::string write_synthetic_corpus(const std::string& dir,
                                          const SynthCorpusConfig& config) {
  const std::string path = dir + "/corpus.txt";
  auto [text, manifest] = make_synthetic_corpus(config);
  std::ofstream t(path, std::ios::binary);
  if (!t) throw std::runtime_error("cannot write " + path);
  t << text;
  std::ofstream m(path + ".splits", std::ios::binary);
  m << manifest;
  return path;
}

}  // namespace pkm
