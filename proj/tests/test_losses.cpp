#include <cmath>
#include <vector>

#include "doctest.h"
#include "omd/linalg.hpp"
#include "omd/losses.hpp"
#include "omd/oracles.hpp"
#include "omd/prng.hpp"

using namespace omd;

TEST_CASE("hinge examples") {
  auto a = hinge(1.0);
  CHECK(a.value == 0.0);
  CHECK(a.subgrad_scalar == 0.0);
  CHECK_FALSE(a.active);
  auto b = hinge(0.0);
  CHECK(b.value == 1.0);
  CHECK(b.subgrad_scalar == -1.0);
  auto c = hinge(-0.5);
  CHECK(c.value == 1.5);
  CHECK(c.subgrad_scalar == -1.0);
  CHECK(hinge(3.0).value == 0.0);
}

TEST_CASE("square examples") {
  auto a = square(1.0, 1.0);
  CHECK(a.value == 0.0);
  CHECK(a.subgrad_scalar == 0.0);
  auto b = square(0.0, 2.0);
  CHECK(b.value == 2.0);
  CHECK(b.subgrad_scalar == -2.0);
  auto c = square(3.0, 1.0);
  CHECK(c.value == 2.0);
  CHECK(c.subgrad_scalar == 2.0);
}

TEST_CASE("absolute loss") {
  CHECK(absolute(2.0, 1.0).value == 1.0);
  CHECK(absolute(2.0, 1.0).subgrad_scalar == 1.0);
  CHECK(absolute(0.0, 1.0).subgrad_scalar == -1.0);
  CHECK(absolute(1.0, 1.0).subgrad_scalar == 0.0);
  CHECK(lipschitz_constant(LossKind::absolute) == 1.0);
  CHECK(std::isinf(lipschitz_constant(LossKind::square)));
}

TEST_CASE("evaluate_loss and names") {
  auto h = evaluate_loss(LossKind::hinge, 0.25, -1.0);
  CHECK(h.value == 1.25);
  CHECK(h.subgrad_scalar == 1.0);
  CHECK(parse_loss_kind("square") == LossKind::square);
  CHECK(to_string(LossKind::absolute) == "absolute");
  CHECK_THROWS_AS(parse_loss_kind("logistic"), std::invalid_argument);
}

TEST_CASE("hinge condition examples") {
  CHECK(hinge_condition_check(0.0, 0.0, 5.0));
  CHECK(hinge_condition_check(0.7, 1.0, 0.0));
}

namespace {

struct Draw {
  std::vector<double> u, w;
  SparseVec x;
  double y;
};

Draw draw(Xoshiro256& rng, std::size_t d) {
  Draw s;
  std::vector<double> x(d);
  for (std::size_t i = 0; i < d; ++i) {
    s.u.push_back(rng.normal());
    s.w.push_back(rng.normal());
    x[i] = rng.normal();
  }
  s.x = SparseVec::from_dense(x);
  s.y = rng.sign();
  return s;
}

}  // namespace

TEST_CASE("hinge condition and subgradient inequality on random draws") {
  Xoshiro256 rng(2024);
  int failures_condition = 0, failures_subgrad = 0;
  for (int k = 0; k < 10000; ++k) {
    Draw s = draw(rng, 5);
    const auto lw = hinge(s.y * s.x.dot(s.w));
    const auto lu = hinge(s.y * s.x.dot(s.u));
    // l' = subgrad * y * x
    const double inner_u = lw.subgrad_scalar * s.y * s.x.dot(s.u);
    const double inner_w = lw.subgrad_scalar * s.y * s.x.dot(s.w);
    if (!hinge_condition_check(lw.value, lu.value, inner_u)) ++failures_condition;
    if (lu.value < lw.value + (inner_u - inner_w) - 1e-12) ++failures_subgrad;
  }
  CHECK(failures_condition == 0);
  CHECK(failures_subgrad == 0);
}

TEST_CASE("square gradient matches finite differences") {
  Xoshiro256 rng(5);
  for (int k = 0; k < 200; ++k) {
    const double p = rng.normal() * 3.0, y = rng.normal() * 3.0;
    auto f = [y](std::span<const double> v) { return square(v[0], y).value; };
    std::vector<double> at{p};
    const double fd = oracle::fd_gradient(f, at)[0];
    const double g = square(p, y).subgrad_scalar;
    CHECK(std::abs(fd - g) <= 1e-6 * std::max(1.0, std::abs(g)));
  }
}
