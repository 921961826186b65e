#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "pkm/rng.hpp"
#include "pkm/transformer.hpp"
#include "support/gradcheck.hpp"

using pkm::Matrix;
using pkm::Mode;
using pkm::Model;
using pkm::ModelConfig;

namespace {

ModelConfig tiny_config(int64_t layers, std::vector<int> positions) {
  ModelConfig config;
  config.vocab = 11;
  config.n_layers = layers;
  config.d = 8;
  config.attn_heads = 2;
  config.context = 6;
  config.memory_positions = std::move(positions);
  config.mem.dq = 4;
  config.mem.n_sub = 4;
  config.mem.heads = 2;
  config.mem.k = 2;
  config.mem.batch_norm = true;
  config.seed = 5;
  return config;
}

// closed-form parameter counts, derived independently of the registry
int64_t baseline_params(const ModelConfig& c) {
  const int64_t embeddings = c.vocab * c.d + c.context * c.d;
  const int64_t ln = 2 * c.d;
  const int64_t attn = 4 * (c.d * c.d + c.d);
  const int64_t ffn = (4 * c.d * c.d + 4 * c.d) + (4 * c.d * c.d + c.d);
  const int64_t head = c.vocab * c.d + c.vocab;
  return embeddings + c.n_layers * (ln + attn + ln + ffn) + ln + head;
}

int64_t pkm_params(const ModelConfig& c) {
  const auto& m = c.mem;
  const int64_t query = m.heads * (m.dq * c.d + m.dq + (m.batch_norm ? 2 * m.dq : 0));
  const int64_t subkeys = m.heads * 2 * m.n_sub * (m.dq / 2);
  const int64_t values = m.n_sub * m.n_sub * c.d;
  return query + subkeys + values;
}

int64_t ffn_params(const ModelConfig& c) {
  return (4 * c.d * c.d + 4 * c.d) + (4 * c.d * c.d + c.d);
}

std::vector<int32_t> random_ids(pkm::Rng& rng, int64_t n, int64_t vocab) {
  std::vector<int32_t> ids(static_cast<size_t>(n));
  for (auto& id : ids) id = static_cast<int32_t>(rng.integer(static_cast<uint64_t>(vocab)));
  return ids;
}

}  // namespace

TEST_CASE("parameter count matches the closed form without memory", "[transformer]") {
  const auto config = tiny_config(3, {});
  auto model = Model<double>::build(config);
  CHECK(model.param_count() == baseline_params(config));
  CHECK(model.memory_layers().empty());
}

TEST_CASE("replacing one FFN swaps in exactly the memory parameters", "[transformer]") {
  const auto base = tiny_config(6, {});
  const auto with_mem = tiny_config(6, {5});
  auto a = Model<double>::build(base);
  auto b = Model<double>::build(with_mem);
  CHECK(b.param_count() - a.param_count() == pkm_params(with_mem) - ffn_params(base));
  CHECK(b.memory_layers() == std::vector<int>{5});
  CHECK(b.blocks()[4].is_memory);
  CHECK_FALSE(b.blocks()[3].is_memory);
}

TEST_CASE("same seed builds bit-identical models", "[transformer]") {
  const auto config = tiny_config(2, {2});
  auto a = Model<double>::build(config);
  auto b = Model<double>::build(config);
  auto pa = a.params();
  auto pb = b.params();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) {
    INFO(pa[i].name);
    CHECK(*pa[i].value == *pb[i].value);
  }
  CHECK(a.blocks()[1].mem.values().values() == b.blocks()[1].mem.values().values());
}

TEST_CASE("causal mask: changing a token never moves earlier logits",
          "[transformer]") {
  const auto config = tiny_config(2, {2});
  auto model = Model<double>::build(config);
  pkm::Rng rng(9);
  std::vector<int32_t> ids = random_ids(rng, config.context, config.vocab);
  const Matrix<double> before = model.forward(ids, 1, config.context, Mode::Eval, nullptr);
  for (int64_t t = 1; t < config.context; ++t) {
    std::vector<int32_t> perturbed = ids;
    perturbed[static_cast<size_t>(t)] =
        (perturbed[static_cast<size_t>(t)] + 1) % static_cast<int32_t>(config.vocab);
    const Matrix<double> after =
        model.forward(perturbed, 1, config.context, Mode::Eval, nullptr);
    for (int64_t r = 0; r < t; ++r)
      for (int64_t v = 0; v < config.vocab; ++v) CHECK(after(r, v) == before(r, v));
  }
}

TEST_CASE("untrained logits are near uniform: perplexity within 5% of vocab",
          "[transformer]") {
  auto config = tiny_config(2, {});
  config.vocab = 29;
  auto model = Model<double>::build(config);
  pkm::Rng rng(13);
  const int64_t batch = 8;
  std::vector<int32_t> ids = random_ids(rng, batch * config.context, config.vocab);
  std::vector<int32_t> targets = random_ids(rng, batch * config.context, config.vocab);
  const Matrix<double> logits = model.forward(ids, batch, config.context, Mode::Eval, nullptr);
  const double nll = Model<double>::cross_entropy(logits, targets, nullptr);
  const double ppl = std::exp(nll);
  CHECK(std::abs(ppl - static_cast<double>(config.vocab)) <
        0.05 * static_cast<double>(config.vocab));
}

TEST_CASE("bad configs and inputs are rejected", "[transformer]") {
  auto config = tiny_config(2, {3});  // position out of range
  CHECK_THROWS_AS(Model<double>::build(config), std::invalid_argument);
  config = tiny_config(2, {});
  config.attn_heads = 3;  // does not divide d=8
  CHECK_THROWS_AS(Model<double>::build(config), std::invalid_argument);

  config = tiny_config(1, {});
  auto model = Model<double>::build(config);
  std::vector<int32_t> ids(static_cast<size_t>(config.context), 0);
  ids[0] = static_cast<int32_t>(config.vocab);  // out of range
  CHECK_THROWS_AS(model.forward(ids, 1, config.context, Mode::Eval, nullptr),
                  std::invalid_argument);
}

TEST_CASE("full-model gradients match finite differences", "[transformer]") {
  const auto config = tiny_config(2, {2});
  auto model = Model<double>::build(config);
  pkm::Rng rng(21);
  const int64_t batch = 2;
  const std::vector<int32_t> ids = random_ids(rng, batch * config.context, config.vocab);
  const std::vector<int32_t> targets =
      random_ids(rng, batch * config.context, config.vocab);

  auto loss = [&]() {
    Model<double> tmp = model;
    const Matrix<double> logits =
        tmp.forward(ids, batch, config.context, Mode::Train, nullptr);
    return Model<double>::cross_entropy(logits, targets, nullptr);
  };

  typename Model<double>::Cache cache;
  {
    Model<double> work = model;
    const Matrix<double> logits =
        work.forward(ids, batch, config.context, Mode::Train, &cache);
    Matrix<double> dlogits(logits.rows(), logits.cols());
    (void)Model<double>::cross_entropy(logits, targets, &dlogits);
    model.zero_grads();
    model.backward(cache, dlogits);
  }

  auto params = model.params();
  // value rows: densify the sparse grads so the checker sees one tensor
  Matrix<double> value_grads(model.config().mem.key_count(), config.d);
  for (const auto& [row, g] : model.value_grads()[1].rows)
    for (int64_t f = 0; f < config.d; ++f) value_grads(row, f) = g[static_cast<size_t>(f)];
  params.push_back({"layer1.mem.values", &model.blocks()[1].mem.values().values_mut(),
                    &value_grads});

  // step 2e-5 sits in the f64 central-difference sweet spot for this loss
  const auto res = testsupport::finite_difference_check(params, loss, 2e-5, 1e-4, 1e-7);
  INFO(res.worst_name << " analytic=" << res.analytic << " numeric=" << res.numeric
                      << " rel=" << res.worst_rel);
  CHECK(res.ok);
}
