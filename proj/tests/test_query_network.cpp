#include <catch_amalgamated.hpp>

#include "pkm/query_network.hpp"
#include "pkm/rng.hpp"
#include "support/gradcheck.hpp"

using pkm::Matrix;
using pkm::Mode;
using pkm::QueryNetwork;

TEST_CASE("identity weights pass the input through", "[query_network]") {
  QueryNetwork<double> net(2, 2, false);
  net.linear.weight(0, 0) = 1.0;
  net.linear.weight(1, 1) = 1.0;
  Matrix<double> x(1, 2, {1.0, -2.0});
  const Matrix<double> q = net.forward(x, Mode::Eval, nullptr);
  CHECK(q(0, 0) == 1.0);
  CHECK(q(0, 1) == -2.0);
}

TEST_CASE("BN eval with default running stats is near-identity on the linear output",
          "[query_network]") {
  pkm::Rng rng(3);
  QueryNetwork<double> with_bn(3, 4, true);
  with_bn.init(rng);
  QueryNetwork<double> plain(3, 4, false);
  plain.linear.weight = with_bn.linear.weight;
  plain.linear.bias = with_bn.linear.bias;

  Matrix<double> x(2, 3);
  for (int64_t i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.0, 1.0);
  const auto qa = with_bn.forward(x, Mode::Eval, nullptr);
  const auto qb = plain.forward(x, Mode::Eval, nullptr);
  const double scale = 1.0 / std::sqrt(1.0 + with_bn.bn->epsilon);
  for (int64_t i = 0; i < qa.size(); ++i)
    CHECK_THAT(qa.data()[i], Catch::Matchers::WithinAbs(qb.data()[i] * scale, 1e-12));
}

TEST_CASE("train-mode queries are batch-normalized per coordinate", "[query_network]") {
  pkm::Rng rng(5);
  QueryNetwork<double> net(6, 4, true);
  net.init(rng);
  const int64_t n = 32;
  Matrix<double> x(n, 6);
  for (int64_t i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-2.0, 2.0);
  const auto q = net.forward(x, Mode::Train, nullptr);
  for (int64_t j = 0; j < 4; ++j) {
    double mean = 0.0;
    for (int64_t i = 0; i < n; ++i) mean += q(i, j);
    mean /= static_cast<double>(n);
    CHECK_THAT(mean, Catch::Matchers::WithinAbs(0.0, 1e-5));
  }
}

TEST_CASE("odd query dimension is rejected", "[query_network]") {
  CHECK_THROWS_AS(QueryNetwork<double>(4, 3, false), std::invalid_argument);
}

TEST_CASE("backward matches finite differences with and without BN",
          "[query_network]") {
  for (const bool use_bn : {false, true}) {
    pkm::Rng rng(use_bn ? 7 : 9);
    QueryNetwork<double> net(3, 4, use_bn);
    net.init(rng);
    const int64_t n = 5;
    Matrix<double> x(n, 3), grad_out(n, 4);
    for (int64_t i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.5, 1.5);
    for (int64_t i = 0; i < grad_out.size(); ++i)
      grad_out.data()[i] = rng.uniform(-1.0, 1.0);

    auto loss = [&]() {
      QueryNetwork<double> tmp = net;
      const auto q = tmp.forward(x, Mode::Train, nullptr);
      double acc = 0.0;
      for (int64_t i = 0; i < q.size(); ++i) acc += q.data()[i] * grad_out.data()[i];
      return acc;
    };

    typename QueryNetwork<double>::Cache cache;
    {
      QueryNetwork<double> work = net;
      (void)work.forward(x, Mode::Train, &cache);
    }
    net.zero_grads();
    Matrix<double> dx(n, 3);
    net.backward(x, cache, grad_out, dx);

    std::vector<pkm::ParamRef<double>> params = {
        {"weight", &net.linear.weight, &net.linear.dweight},
        {"bias", &net.linear.bias, &net.linear.dbias},
        {"x", &x, &dx},
    };
    if (use_bn) {
      params.push_back({"gamma", &net.bn->gamma, &net.bn->dgamma});
      params.push_back({"beta", &net.bn->beta, &net.bn->dbeta});
    }
    const auto res =
        testsupport::finite_difference_check(params, loss, 1e-5, 1e-6, 1e-9);
    INFO("bn=" << use_bn << " " << res.worst_name << " analytic=" << res.analytic
               << " numeric=" << res.numeric);
    CHECK(res.ok);
  }
}
