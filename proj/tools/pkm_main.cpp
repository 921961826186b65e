// Command-line front end: corpus generation, search benchmarks, training,
// evaluation, ablation sweeps and plot-data extraction.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pkm/ablate.hpp"
#include "pkm/bench.hpp"
#include "pkm/checkpoint.hpp"
#include "pkm/corpus.hpp"
#include "pkm/records.hpp"
#include "pkm/synth_corpus.hpp"
#include "pkm/trainer.hpp"

namespace {

namespace fs = std::filesystem;

struct CommonFlags {
  std::string data;
  std::string out = "out";
  std::string tokenize = "char";
  std::string precision = "f32";
  uint64_t seed = 1;

  // model
  int64_t layers = 2;
  int64_t dim = 64;
  int64_t attn_heads = 4;
  int64_t context = 64;
  std::string mem_positions = "none";

  // memory
  int64_t subkeys = 64;
  int64_t dq = 32;
  int k = 32;
  int heads = 4;
  std::string bn = "on";
  std::string mode = "product";

  // training
  int64_t steps = 500;
  int64_t batch = 16;
  double lr = 2.5e-4;
  int64_t warmup = 400;
  double value_lr = 1e-3;
  int64_t checkpoint_every = 0;
  int64_t log_every = 50;
};

std::vector<int> parse_positions(const std::string& text, int64_t layers) {
  std::vector<int> out;
  if (text == "none" || text.empty()) return out;
  std::string tok;
  std::istringstream is(text);
  while (std::getline(is, tok, ',')) out.push_back(std::stoi(tok));
  for (int p : out)
    if (p < 1 || p > layers)
      throw CLI::ValidationError("--mem-positions", "position out of [1, layers]");
  return out;
}

pkm::TrainConfig make_train_config(const CommonFlags& flags) {
  pkm::TrainConfig config;
  config.model.n_layers = flags.layers;
  config.model.d = flags.dim;
  config.model.attn_heads = flags.attn_heads;
  config.model.context = flags.context;
  config.model.seed = flags.seed;
  config.model.memory_positions = parse_positions(flags.mem_positions, flags.layers);
  config.model.mem.d = flags.dim;
  config.model.mem.dq = flags.dq;
  config.model.mem.n_sub = flags.subkeys;
  config.model.mem.heads = flags.heads;
  config.model.mem.k = flags.k;
  config.model.mem.batch_norm = (flags.bn == "on");
  config.model.mem.key_mode =
      flags.mode == "flat" ? pkm::KeyMode::Flat : pkm::KeyMode::Product;
  config.batch = flags.batch;
  config.steps = flags.steps;
  config.lr = flags.lr;
  config.warmup = flags.warmup;
  config.value_lr = flags.value_lr;
  return config;
}

pkm::TokenizedCorpus load_data(const CommonFlags& flags) {
  const auto mode = flags.tokenize == "whitespace" ? pkm::TokenizeMode::Whitespace
                                                   : pkm::TokenizeMode::Char;
  return pkm::load_corpus(flags.data, mode);
}

void print_eval(const pkm::EvalResult& eval, const std::string& split) {
  std::printf("split=%s\n", split.c_str());
  std::printf("perplexity=%.6f\n", eval.perplexity);
  std::printf("tokens=%lld\n", static_cast<long long>(eval.tokens));
  for (const auto& m : eval.memory) {
    std::printf("layer=%d usage=%.4f kl=%.6f overlap=%.4f\n", m.layer, m.usage, m.kl,
                m.overlap);
  }
}

// one summary record plus one record per memory layer
std::vector<pkm::Record> eval_records(const pkm::EvalResult& eval,
                                      const std::string& split, uint64_t seed) {
  std::vector<pkm::Record> out;
  pkm::Record summary;
  summary.set("kind", std::string("eval")).set("split", split);
  summary.set("seed", static_cast<int64_t>(seed));
  summary.set("ppl", eval.perplexity);
  summary.set("tokens", eval.tokens);
  out.push_back(summary);
  for (const auto& m : eval.memory) {
    pkm::Record rec;
    rec.set("kind", std::string("eval_layer")).set("split", split);
    rec.set("seed", static_cast<int64_t>(seed));
    rec.set("layer", m.layer);
    rec.set("usage", m.usage);
    rec.set("kl", m.kl);
    rec.set("overlap", m.overlap);
    out.push_back(rec);
  }
  return out;
}

template <typename T>
int run_train(const CommonFlags& flags) {
  pkm::TrainConfig config = make_train_config(flags);
  pkm::TokenizedCorpus corpus = load_data(flags);
  config.model.vocab = corpus.vocab_size();

  fs::create_directories(flags.out);
  pkm::TrainState<T> state = pkm::TrainState<T>::init(config);
  std::printf("vocab=%d params=%lld\n", corpus.vocab_size(),
              static_cast<long long>(state.model.param_count()));

  for (int64_t s = 1; s <= config.steps; ++s) {
    const double loss = pkm::train_step(state, corpus);
    if (flags.log_every > 0 && (s % flags.log_every == 0 || s == config.steps))
      std::printf("step=%lld loss=%.6f lr=%.3e\n", static_cast<long long>(s), loss,
                  pkm::warmup_inv_sqrt_lr(config.lr, s, config.warmup));
    if (flags.checkpoint_every > 0 && s % flags.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "ckpt_%06lld.pkm", static_cast<long long>(s));
      pkm::save_checkpoint(flags.out + "/" + name, state);
    }
  }
  const std::string final_path = flags.out + "/final.pkm";
  pkm::save_checkpoint(final_path, state);
  std::printf("checkpoint=%s\n", final_path.c_str());

  const pkm::EvalResult eval = pkm::evaluate(state.model, corpus, "valid");
  print_eval(eval, "valid");
  for (const auto& rec : eval_records(eval, "valid", flags.seed))
    pkm::append_record(flags.out + "/train.records", rec);
  return 0;
}

template <typename T>
int run_eval(const std::string& ckpt_path, const CommonFlags& flags,
             const std::string& split) {
  pkm::TrainState<T> state = pkm::load_checkpoint<T>(ckpt_path);
  CommonFlags data_flags = flags;
  pkm::TokenizedCorpus corpus = load_data(data_flags);
  if (corpus.vocab_size() != state.config.model.vocab)
    throw std::runtime_error("corpus vocab does not match the checkpoint");
  const pkm::EvalResult eval = pkm::evaluate(state.model, corpus, split);
  print_eval(eval, split);
  if (!flags.out.empty()) {
    fs::create_directories(flags.out);
    for (const auto& rec : eval_records(eval, split, flags.seed))
      pkm::append_record(flags.out + "/eval.records", rec);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"product-key memory layer: bench, train, eval, ablate"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto add_model_flags = [&](CLI::App* cmd) {
    cmd->add_option("--layers", flags.layers, "transformer layers");
    cmd->add_option("--dim", flags.dim, "model dimension d");
    cmd->add_option("--attn-heads", flags.attn_heads, "attention heads");
    cmd->add_option("--context", flags.context, "context length");
    cmd->add_option("--mem-positions", flags.mem_positions,
                    "comma-separated 1-based layers with memory, or 'none'");
    cmd->add_option("--subkeys", flags.subkeys, "|C| sub-keys per codebook");
    cmd->add_option("--dq", flags.dq, "query dimension");
    cmd->add_option("--k", flags.k, "neighbors per head");
    cmd->add_option("--heads", flags.heads, "memory heads");
    cmd->add_option("--bn", flags.bn, "query batch norm: on|off")
        ->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--mode", flags.mode, "key structure: product|flat")
        ->check(CLI::IsMember({"product", "flat"}));
  };
  auto add_train_flags = [&](CLI::App* cmd) {
    cmd->add_option("--data", flags.data, "corpus text path")->required();
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_option("--tokenize", flags.tokenize, "char|whitespace")
        ->check(CLI::IsMember({"char", "whitespace"}));
    cmd->add_option("--steps", flags.steps, "training steps");
    cmd->add_option("--batch", flags.batch, "batch size");
    cmd->add_option("--lr", flags.lr, "peak dense learning rate");
    cmd->add_option("--warmup", flags.warmup, "warmup steps");
    cmd->add_option("--value-lr", flags.value_lr, "value-table learning rate");
    cmd->add_option("--seed", flags.seed, "RNG seed");
    cmd->add_option("--precision", flags.precision, "f32|f64")
        ->check(CLI::IsMember({"f32", "f64"}));
  };

  // make-corpus
  auto* mk = app.add_subcommand("make-corpus", "write the bundled synthetic corpus");
  pkm::SynthCorpusConfig synth;
  mk->add_option("--out", flags.out, "output directory");
  mk->add_option("--seed", synth.seed, "corpus seed");
  mk->add_option("--train-bytes", synth.train_bytes, "train split size");
  mk->add_option("--valid-bytes", synth.valid_bytes, "valid split size");
  mk->add_option("--test-bytes", synth.test_bytes, "test split size");
  mk->add_option("--lexicon", synth.lexicon_size, "distinct words");

  // bench
  auto* bench = app.add_subcommand("bench", "timed exact-search benchmark");
  pkm::BenchConfig bench_config;
  std::string bench_subkeys = "128,256,512";
  std::string bench_mode = "both";
  bench->add_option("--subkeys", bench_subkeys, "comma-separated |C| values");
  bench->add_option("--dq", bench_config.dq, "query dimension");
  bench->add_option("--k", bench_config.k, "neighbors");
  bench->add_option("--heads", bench_config.heads, "searches per query");
  bench->add_option("--mode", bench_mode, "product|flat|both")
      ->check(CLI::IsMember({"product", "flat", "both"}));
  bench->add_option("--flat-ceiling", bench_config.flat_ceiling,
                    "max |K| for flat mode");
  bench->add_option("--queries", bench_config.queries, "timed queries per rep");
  bench->add_option("--reps", bench_config.reps, "timing repetitions");
  bench->add_option("--verify-queries", bench_config.verify_queries,
                    "oracle-checked queries per configuration");
  bench->add_option("--seed", bench_config.seed, "RNG seed");
  bench->add_option("--out", flags.out, "output directory");
  std::string bench_precision = "f32";
  bench->add_option("--precision", bench_precision, "f32|f64")
      ->check(CLI::IsMember({"f32", "f64"}));

  // train
  auto* train = app.add_subcommand("train", "train the language model");
  add_train_flags(train);
  add_model_flags(train);
  train->add_option("--checkpoint-every", flags.checkpoint_every,
                    "periodic checkpoint interval (0 = final only)");
  train->add_option("--log-every", flags.log_every, "loss log interval");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string ckpt_path;
  std::string split = "valid";
  eval->add_option("--checkpoint", ckpt_path, "checkpoint path")->required();
  eval->add_option("--data", flags.data, "corpus text path")->required();
  eval->add_option("--split", split, "valid|test")
      ->check(CLI::IsMember({"valid", "test"}));
  eval->add_option("--out", flags.out, "output directory for records");
  eval->add_option("--tokenize", flags.tokenize, "char|whitespace")
      ->check(CLI::IsMember({"char", "whitespace"}));

  // ablate
  auto* ablate = app.add_subcommand("ablate", "one-axis ablation sweep");
  std::string axis;
  ablate->add_option("--axis", axis, "size|bn|position|heads_knn|flat_vs_product")
      ->required();
  add_train_flags(ablate);
  add_model_flags(ablate);

  // plot-data
  auto* plot = app.add_subcommand("plot-data", "extract CSV columns from records");
  std::string records_path, keys_csv;
  std::vector<std::string> filters;
  plot->add_option("--records", records_path, "records file")->required();
  plot->add_option("--keys", keys_csv, "comma-separated record keys")->required();
  plot->add_option("--filter", filters, "key=value filters (repeatable)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (mk->parsed()) {
      fs::create_directories(flags.out);
      const std::string path = pkm::write_synthetic_corpus(flags.out, synth);
      std::printf("corpus=%s\n", path.c_str());
      return 0;
    }

    if (bench->parsed()) {
      bench_config.mode = bench_mode;
      bench_config.subkeys.clear();
      std::istringstream is(bench_subkeys);
      std::string tok;
      while (std::getline(is, tok, ',')) bench_config.subkeys.push_back(std::stoll(tok));

      const pkm::BenchReport report = bench_precision == "f64"
                                          ? pkm::run_bench<double>(bench_config)
                                          : pkm::run_bench<float>(bench_config);
      fs::create_directories(flags.out);
      for (const auto& row : report.rows) {
        const pkm::Record rec = row.record();
        std::printf("%s\n", rec.line().c_str());
        pkm::append_record(flags.out + "/bench.records", rec);
      }
      if (!report.all_exact) {
        std::fprintf(stderr, "bench: exactness check FAILED\n");
        return 2;
      }
      return 0;
    }

    if (train->parsed())
      return flags.precision == "f64" ? run_train<double>(flags) : run_train<float>(flags);

    if (eval->parsed()) {
      const nlohmann::json config = pkm::peek_checkpoint_config(ckpt_path);
      const std::string precision = config.at("precision");
      return precision == "f64" ? run_eval<double>(ckpt_path, flags, split)
                                : run_eval<float>(ckpt_path, flags, split);
    }

    if (ablate->parsed()) {
      pkm::TrainConfig config = make_train_config(flags);
      pkm::TokenizedCorpus corpus = load_data(flags);
      fs::create_directories(flags.out);
      const std::vector<pkm::Record> records =
          flags.precision == "f64" ? pkm::run_ablation<double>(axis, config, corpus)
                                   : pkm::run_ablation<float>(axis, config, corpus);
      for (const auto& rec : records) {
        std::printf("%s\n", rec.line().c_str());
        pkm::append_record(flags.out + "/ablate.records", rec);
      }
      return 0;
    }

    if (plot->parsed()) {
      std::vector<std::string> keys;
      std::istringstream is(keys_csv);
      std::string tok;
      while (std::getline(is, tok, ',')) keys.push_back(tok);
      std::vector<std::pair<std::string, std::string>> parsed_filters;
      for (const std::string& f : filters) {
        const size_t eq = f.find('=');
        if (eq == std::string::npos)
          throw std::invalid_argument("--filter expects key=value, got " + f);
        parsed_filters.emplace_back(f.substr(0, eq), f.substr(eq + 1));
      }
      std::printf("%s", pkm::records_to_csv(pkm::read_records(records_path), keys,
                                            parsed_filters)
                            .c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
