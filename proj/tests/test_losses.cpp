#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "feddag/errors.hpp"
#include "feddag/losses.hpp"
#include "fixtures.hpp"
#include "oracle.hpp"

using namespace feddag;
using V = std::vector<double>;

TEST_CASE("normalized_sq_dist worked values") {
  CHECK(normalized_sq_dist(V{0.3, -2}, V{0.3, -2}) == 0.0);
  CHECK(normalized_sq_dist(V{1, 0}, V{-1, 0}) == doctest::Approx(4.0).epsilon(1e-15));
  // 2 - sqrt(2) from the closed form ||(1,0) - (1,1)/sqrt 2||^2.
  CHECK(normalized_sq_dist(V{1, 0}, V{1, 1}) == doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-14));
  CHECK(normalized_sq_dist(V{1, 0}, V{1, 1}) ==
        doctest::Approx(oracle::sq_dist_normalized({1, 0}, {1, 1})).epsilon(1e-14));
}

TEST_CASE("normalized_sq_dist rejects degenerate features") {
  CHECK_THROWS_AS(normalized_sq_dist(V{0, 0}, V{1, 0}), ContractError);
  CHECK_THROWS_AS(normalized_sq_dist(V{1, 0}, V{1e-13, 0}), ContractError);
  CHECK_THROWS_AS(normalized_sq_dist(V{1, 0}, V{1, 0, 0}), ContractError);
}

TEST_CASE("loss_dis caps at m") {
  const CapM small(0.1);
  CHECK(loss_dis(V{1, 2}, V{1, 2}, small) == 0.0);
  CHECK(loss_dis(V{1, 0}, V{0, 1}, small) == 0.1);
  CHECK(loss_dis(V{1, 0}, V{1, 1}, CapM(4.0)) == doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(CapM(0.0), ContractError);
  CHECK_THROWS_AS(CapM(-1.0), ContractError);
}

TEST_CASE("loss_sim examples") {
  CHECK(loss_sim(V{2, 2}, V{1, 1}) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(loss_sim(V{0, 3}, V{0, -1}) == doctest::Approx(4.0));
  CHECK(loss_sim(V{1, 0}, V{1, 1}) == doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("loss_cls worked values") {
  CHECK(loss_cls(V{0.7, 0.7, 0.7}, 2) == doctest::Approx(std::log(3.0)).epsilon(1e-15));
  CHECK(loss_cls(V{0, 0}, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  // ln(1 + e^-10) needs log1p to keep full relative precision.
  const double expected = std::log1p(std::exp(-10.0));
  CHECK(std::abs(loss_cls(V{10, 0}, 0) - expected) <= 1e-15 * expected);
  CHECK(loss_cls(V{10, 0}, 0) == doctest::Approx(4.5399e-5).epsilon(1e-4));
  // Large logits stay finite thanks to the max shift.
  CHECK(std::isfinite(loss_cls(V{1000, -1000, 0}, 1)));
  CHECK(loss_cls(V{1000, -1000, 0}, 1) == doctest::Approx(2000.0));
}

TEST_CASE("loss_cls agrees with a long-double oracle and its gradient with FD") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 200; ++t) {
    const auto z = fixtures::uniform(rng, 4, -8, 8);
    const std::size_t y = static_cast<std::size_t>(t % 4);
    CHECK(loss_cls(z, y) == doctest::Approx(oracle::cross_entropy(z, y)).epsilon(1e-12));
    const auto g = loss_cls_grad(z, y);
    const auto fd = oracle::fd_gradient([&](const V& v) { return loss_cls(v, y); }, z);
    CHECK(oracle::rel_error(g, fd) < 1e-7);
  }
}

TEST_CASE("normalized_sq_dist gradient matches FD") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const auto f = fixtures::uniform(rng, 5, -1, 1);
    const auto g = fixtures::uniform(rng, 5, -1, 1);
    const auto d = normalized_sq_dist_grad(f, g);
    CHECK(d.value == doctest::Approx(normalized_sq_dist(f, g)).epsilon(1e-15));
    const auto fd_f = oracle::fd_gradient([&](const V& v) { return normalized_sq_dist(v, g); }, f);
    const auto fd_g = oracle::fd_gradient([&](const V& v) { return normalized_sq_dist(f, v); }, g);
    CHECK(oracle::rel_error(d.d_f, fd_f) < 1e-7);
    CHECK(oracle::rel_error(d.d_f_hat, fd_g) < 1e-7);
  }
}

TEST_CASE("distance properties: bound, symmetry, scale invariance, cap") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int t = 0; t < 1000; ++t) {
    const auto f = fixtures::uniform(rng, 6, -2, 2);
    const auto g = fixtures::uniform(rng, 6, -2, 2);
    const double d = normalized_sq_dist(f, g);
    CHECK(d >= 0.0);
    CHECK(d <= 4.0 + 1e-12);
    CHECK(normalized_sq_dist(g, f) == doctest::Approx(d).epsilon(1e-14));
    auto cf = f;
    const double c = scale(rng);
    for (auto& v : cf) v *= c;
    CHECK(std::abs(normalized_sq_dist(cf, g) - d) <= 1e-12);
    CHECK(loss_dis(f, g, CapM(0.1)) <= 0.1);
  }
}

TEST_CASE("loss_cls is non-negative and vanishes with the margin") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 500; ++t) {
    const auto z = fixtures::uniform(rng, 3, -20, 20);
    CHECK(loss_cls(z, static_cast<std::size_t>(t % 3)) >= 0.0);
  }
  double prev = loss_cls(V{1, 0, 0}, 0);
  for (double margin = 2; margin < 100; margin *= 2) {
    const double l = loss_cls(V{margin, 0, 0}, 0);
    CHECK(l < prev);
    prev = l;
  }
  CHECK(prev < 1e-20);
}

TEST_CASE("softmax sums to one") {
  const auto p = softmax(V{1, 2, 3, 1000});
  double s = 0;
  for (double v : p) s += v;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
}
