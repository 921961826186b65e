#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "pkm/checkpoint.hpp"
#include "pkm/synth_corpus.hpp"

namespace fs = std::filesystem;

using pkm::CheckpointError;
using pkm::CheckpointReader;
using pkm::CheckpointWriter;
using pkm::Matrix;
using pkm::TrainConfig;
using pkm::TrainState;

namespace {

std::string tmp_dir() {
  const std::string dir = std::string(PKM_TEST_TMP) + "/checkpoint";
  fs::create_directories(dir);
  return dir;
}

pkm::TokenizedCorpus tiny_corpus() {
  pkm::SynthCorpusConfig synth;
  synth.seed = 21;
  synth.train_bytes = 4000;
  synth.valid_bytes = 500;
  synth.test_bytes = 500;
  synth.lexicon_size = 40;
  const auto [text, manifest] = pkm::make_synthetic_corpus(synth);
  const auto raw = pkm::split_raw_text(text, manifest);
  return pkm::tokenize_corpus(raw.train, raw.valid, raw.test, pkm::TokenizeMode::Char);
}

TrainConfig tiny_config(const pkm::TokenizedCorpus& corpus) {
  TrainConfig config;
  config.model.vocab = corpus.vocab_size();
  config.model.n_layers = 2;
  config.model.d = 16;
  config.model.attn_heads = 2;
  config.model.context = 10;
  config.model.memory_positions = {2};
  config.model.mem.dq = 8;
  config.model.mem.n_sub = 4;
  config.model.mem.heads = 2;
  config.model.mem.k = 2;
  config.model.mem.batch_norm = true;
  config.model.seed = 31;
  config.batch = 4;
  config.steps = 4;
  config.warmup = 2;
  return config;
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
}

}  // namespace

TEST_CASE("save/load round trip restores every tensor bitwise", "[checkpoint]") {
  const auto corpus = tiny_corpus();
  auto config = tiny_config(corpus);
  auto state = TrainState<float>::init(config);
  for (int s = 0; s < 4; ++s) pkm::train_step(state, corpus);

  const std::string path = tmp_dir() + "/trip.pkm";
  pkm::save_checkpoint(path, state);
  auto loaded = pkm::load_checkpoint<float>(path);

  auto pa = state.model.params();
  auto pb = loaded.model.params();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) {
    INFO(pa[i].name);
    REQUIRE(*pa[i].value == *pb[i].value);
  }
  for (size_t i = 0; i < state.optimizer.slots_m().size(); ++i) {
    REQUIRE(state.optimizer.slots_m()[i] == loaded.optimizer.slots_m()[i]);
    REQUIRE(state.optimizer.slots_v()[i] == loaded.optimizer.slots_v()[i]);
  }
  auto& va = state.model.blocks()[1].mem.values();
  auto& vb = loaded.model.blocks()[1].mem.values();
  REQUIRE(va.values() == vb.values());
  REQUIRE(va.moments_m() == vb.moments_m());
  REQUIRE(va.moments_v() == vb.moments_v());
  REQUIRE(va.steps() == vb.steps());
  REQUIRE(state.data_rng == loaded.data_rng);
  REQUIRE(state.step == loaded.step);
  REQUIRE(state.history.size() == loaded.history.size());

  // a second save of the loaded state is byte-identical
  const std::string path2 = tmp_dir() + "/trip2.pkm";
  pkm::save_checkpoint(path2, loaded);
  CHECK(read_bytes(path) == read_bytes(path2));
}

TEST_CASE("saved-then-loaded evaluation equals the in-memory result exactly",
          "[checkpoint]") {
  const auto corpus = tiny_corpus();
  auto config = tiny_config(corpus);
  auto state = TrainState<float>::init(config);
  for (int s = 0; s < 3; ++s) pkm::train_step(state, corpus);

  const std::string path = tmp_dir() + "/eval.pkm";
  pkm::save_checkpoint(path, state);
  auto loaded = pkm::load_checkpoint<float>(path);

  const auto a = pkm::evaluate(state.model, corpus, "valid");
  const auto b = pkm::evaluate(loaded.model, corpus, "valid");
  CHECK(a.perplexity == b.perplexity);
  REQUIRE(a.memory.size() == b.memory.size());
  for (size_t i = 0; i < a.memory.size(); ++i) {
    CHECK(a.memory[i].usage == b.memory[i].usage);
    CHECK(a.memory[i].kl == b.memory[i].kl);
  }
}

TEST_CASE("training after a checkpoint resume matches uninterrupted training",
          "[checkpoint]") {
  const auto corpus = tiny_corpus();
  auto config = tiny_config(corpus);
  auto straight = TrainState<double>::init(config);
  for (int s = 0; s < 6; ++s) pkm::train_step(straight, corpus);

  auto resumed = TrainState<double>::init(config);
  for (int s = 0; s < 3; ++s) pkm::train_step(resumed, corpus);
  const std::string path = tmp_dir() + "/resume.pkm";
  pkm::save_checkpoint(path, resumed);
  auto restored = pkm::load_checkpoint<double>(path);
  for (int s = 0; s < 3; ++s) pkm::train_step(restored, corpus);

  auto pa = straight.model.params();
  auto pb = restored.model.params();
  for (size_t i = 0; i < pa.size(); ++i) {
    INFO(pa[i].name);
    REQUIRE(*pa[i].value == *pb[i].value);
  }
}

TEST_CASE("bad magic is a distinct structured error", "[checkpoint]") {
  const std::string path = tmp_dir() + "/magic.pkm";
  write_bytes(path, "NOTACKPT_____________________");
  try {
    CheckpointReader reader(path);
    FAIL("expected CheckpointError");
  } catch (const CheckpointError& e) {
    CHECK(e.kind == CheckpointError::Kind::BadMagic);
  }
}

TEST_CASE("a truncated file fails the checksum or length check, not a crash",
          "[checkpoint]") {
  const auto corpus = tiny_corpus();
  auto config = tiny_config(corpus);
  auto state = TrainState<float>::init(config);
  const std::string path = tmp_dir() + "/full.pkm";
  pkm::save_checkpoint(path, state);
  const std::string bytes = read_bytes(path);

  const std::string cut_path = tmp_dir() + "/cut.pkm";
  write_bytes(cut_path, bytes.substr(0, bytes.size() / 2));
  try {
    CheckpointReader reader(cut_path);
    FAIL("expected CheckpointError");
  } catch (const CheckpointError& e) {
    CHECK((e.kind == CheckpointError::Kind::Truncated ||
           e.kind == CheckpointError::Kind::ChecksumMismatch));
  }
}

TEST_CASE("a corrupted payload byte fails its section checksum", "[checkpoint]") {
  const auto corpus = tiny_corpus();
  auto config = tiny_config(corpus);
  auto state = TrainState<float>::init(config);
  const std::string path = tmp_dir() + "/corrupt.pkm";
  pkm::save_checkpoint(path, state);
  std::string bytes = read_bytes(path);
  bytes[bytes.size() - 3] ^= 0x5a;
  write_bytes(path, bytes);
  try {
    CheckpointReader reader(path);
    FAIL("expected CheckpointError");
  } catch (const CheckpointError& e) {
    CHECK(e.kind == CheckpointError::Kind::ChecksumMismatch);
    CHECK_FALSE(e.section.empty());
  }
}

TEST_CASE("shape mismatches name the offending tensor", "[checkpoint]") {
  CheckpointWriter writer;
  Matrix<float> t(3, 4);
  writer.add_tensor("tok_emb", t);
  const std::string path = tmp_dir() + "/shape.pkm";
  writer.write(path);

  CheckpointReader reader(path);
  Matrix<float> wrong(2, 4);
  try {
    reader.read_tensor_into("tok_emb", wrong);
    FAIL("expected CheckpointError");
  } catch (const CheckpointError& e) {
    CHECK(e.kind == CheckpointError::Kind::ShapeMismatch);
    CHECK(e.section == "tok_emb");
    CHECK(std::string(e.what()).find("tok_emb") != std::string::npos);
  }
  Matrix<double> wrong_type(3, 4);
  CHECK_THROWS_AS(reader.read_tensor_into("tok_emb", wrong_type), CheckpointError);
  CHECK_THROWS_AS(reader.read_text("missing"), CheckpointError);
}

TEST_CASE("precision is checked before loading tensors", "[checkpoint]") {
  const auto corpus = tiny_corpus();
  auto config = tiny_config(corpus);
  auto state = TrainState<float>::init(config);
  const std::string path = tmp_dir() + "/precision.pkm";
  pkm::save_checkpoint(path, state);
  CHECK(pkm::peek_checkpoint_config(path).at("precision") == "f32");
  CHECK_THROWS_AS(pkm::load_checkpoint<double>(path), CheckpointError);
}
