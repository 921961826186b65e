#include <catch_amalgamated.hpp>

#include "pkm/corpus.hpp"
#include "pkm/synth_corpus.hpp"

using pkm::TokenizedCorpus;
using pkm::TokenizeMode;
using pkm::tokenize_corpus;

TEST_CASE("char tokenizer builds unk/bos plus the train alphabet", "[corpus]") {
  const auto corpus = tokenize_corpus("abab", "ab", "ba", TokenizeMode::Char);
  REQUIRE(corpus.vocab.size() == 4);
  CHECK(corpus.vocab[0] == "<unk>");
  CHECK(corpus.vocab[1] == "<bos>");
  CHECK(corpus.vocab[2] == "a");
  CHECK(corpus.vocab[3] == "b");
  CHECK(corpus.train == std::vector<int32_t>{1, 2, 3, 2, 3});
  CHECK(corpus.valid == std::vector<int32_t>{1, 2, 3});
  CHECK(corpus.test == std::vector<int32_t>{1, 3, 2});
}

TEST_CASE("tokenization is deterministic", "[corpus]") {
  const std::string text = "the quick brown fox jumps";
  const auto a = tokenize_corpus(text, text, text, TokenizeMode::Whitespace);
  const auto b = tokenize_corpus(text, text, text, TokenizeMode::Whitespace);
  CHECK(a.vocab == b.vocab);
  CHECK(a.train == b.train);
}

TEST_CASE("symbols unseen in train map to unk", "[corpus]") {
  const auto corpus = tokenize_corpus("aaa", "", "abz", TokenizeMode::Char);
  CHECK(corpus.test == std::vector<int32_t>{1, 2, TokenizedCorpus::kUnk,
                                            TokenizedCorpus::kUnk});
  const auto words =
      tokenize_corpus("cat dog", "", "dog emu", TokenizeMode::Whitespace);
  CHECK(words.test ==
        std::vector<int32_t>{1, words.train[2], TokenizedCorpus::kUnk});
}

TEST_CASE("empty train text is rejected", "[corpus]") {
  CHECK_THROWS_AS(tokenize_corpus("", "x", "y", TokenizeMode::Char),
                  std::invalid_argument);
  CHECK_THROWS_AS(tokenize_corpus("   ", "", "", TokenizeMode::Whitespace),
                  std::invalid_argument);
}

TEST_CASE("manifest offsets slice the raw text", "[corpus]") {
  const std::string text = "0123456789";
  const auto raw = pkm::split_raw_text(text, "0\n6\n8\n");
  CHECK(raw.train == "012345");
  CHECK(raw.valid == "67");
  CHECK(raw.test == "89");
  CHECK_THROWS_AS(pkm::split_raw_text(text, "5\n2\n8\n"), std::invalid_argument);
  CHECK_THROWS_AS(pkm::split_raw_text(text, "0\n4\n"), std::invalid_argument);
  CHECK_THROWS_AS(pkm::split_raw_text(text, "0\n4\n99\n"), std::invalid_argument);
}

TEST_CASE("the synthetic corpus is deterministic and split correctly", "[corpus]") {
  pkm::SynthCorpusConfig config;
  config.seed = 12;
  config.train_bytes = 4096;
  config.valid_bytes = 512;
  config.test_bytes = 512;
  config.lexicon_size = 200;
  const auto [text_a, manifest_a] = pkm::make_synthetic_corpus(config);
  const auto [text_b, manifest_b] = pkm::make_synthetic_corpus(config);
  CHECK(text_a == text_b);
  CHECK(manifest_a == manifest_b);
  CHECK(static_cast<int64_t>(text_a.size()) == 4096 + 512 + 512);

  const auto raw = pkm::split_raw_text(text_a, manifest_a);
  CHECK(static_cast<int64_t>(raw.train.size()) == 4096);
  CHECK(static_cast<int64_t>(raw.valid.size()) == 512);
  CHECK(static_cast<int64_t>(raw.test.size()) == 512);

  // valid/test should introduce almost no new characters
  const auto corpus = tokenize_corpus(raw.train, raw.valid, raw.test, TokenizeMode::Char);
  int64_t unk = 0;
  for (int32_t id : corpus.valid) unk += id == TokenizedCorpus::kUnk;
  for (int32_t id : corpus.test) unk += id == TokenizedCorpus::kUnk;
  CHECK(unk == 0);

  // different seeds give different text
  config.seed = 13;
  const auto [text_c, manifest_c] = pkm::make_synthetic_corpus(config);
  CHECK(text_a != text_c);
}
