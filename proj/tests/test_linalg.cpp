#include <cmath>
#include <vector>

#include "doctest.h"
#include "omd/linalg.hpp"
#include "omd/oracles.hpp"
#include "omd/prng.hpp"

using namespace omd;

namespace {

SparseVec dense(std::vector<double> v) { return SparseVec::from_dense(v); }

SparseVec random_vec(Xoshiro256& rng, std::size_t d, double density = 1.0) {
  std::vector<double> v(d, 0.0);
  for (auto& x : v) {
    if (rng.uniform() < density) x = rng.normal();
  }
  return SparseVec::from_dense(v);
}

}  // namespace

TEST_CASE("sparse vector basics") {
  SparseVec x(5, {{0, 0.5}, {2, 2.0}, {4, 0.0}});
  CHECK(x.nnz() == 2);
  CHECK(x.dim() == 5);
  std::vector<double> w{1, 1, 1, 1, 1};
  CHECK(x.dot(w) == doctest::Approx(2.5));
  CHECK(x.squared_norm() == doctest::Approx(4.25));
  CHECK(x.max_abs() == 2.0);
  CHECK(x.to_dense() == std::vector<double>{0.5, 0, 2.0, 0, 0});
  CHECK(SparseVec::from_dense(x.to_dense()) == x);
  CHECK(x.scaled(2.0).to_dense() == std::vector<double>{1, 0, 4, 0, 0});
  CHECK(x.with_dim(8).dim() == 8);
  CHECK_THROWS_AS(x.with_dim(2), DimensionError);
  CHECK_THROWS(SparseVec(3, {{2, 1.0}, {1, 1.0}}));
  CHECK_THROWS(SparseVec(3, {{1, 1.0}, {1, 2.0}}));
  CHECK_THROWS(SparseVec(3, {{3, 1.0}}));
}

TEST_CASE("dense helpers") {
  std::vector<double> a{1, 2}, b{3, 4};
  CHECK(dot(a, b) == 11.0);
  CHECK(squared_norm(b) == 25.0);
  axpy(2.0, dense({1, 0}), a);
  CHECK(a == std::vector<double>{3, 2});
  std::vector<double> c{1, 2, 3};
  CHECK_THROWS_AS(dot(a, c), DimensionError);
  CHECK_THROWS_AS(dense({1, 2, 3}).dot(a), DimensionError);
}

TEST_CASE("quad_form examples") {
  RankOneInverse id(2, 1.0);
  CHECK(quad_form(id, dense({1, 0})) == 1.0);
  CHECK(quad_form(id, SparseVec(2)) == 0.0);
  RankOneInverse a = rank_one_update(id, dense({1, 0}));
  CHECK(quad_form(a, dense({1, 1})) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK_THROWS_AS(quad_form(id, dense({1, 0, 0})), DimensionError);
}

TEST_CASE("rank_one_update examples") {
  RankOneInverse id(2, 1.0);
  RankOneInverse a = rank_one_update(id, dense({1, 0}));
  CHECK(a.inverse()(0, 0) == doctest::Approx(0.5));
  CHECK(a.inverse()(1, 1) == doctest::Approx(1.0));
  CHECK(a.inverse()(0, 1) == 0.0);
  CHECK(a.logdet() == doctest::Approx(std::log(2.0)));

  RankOneInverse z = rank_one_update(a, SparseVec(2));
  CHECK(z.inverse() == a.inverse());
  CHECK(z.logdet() == a.logdet());

  RankOneInverse two(2, 2.0);
  const double chi = two.update(dense({1, 1}));
  CHECK(chi == doctest::Approx(2.0));
  CHECK(two.inverse()(0, 0) == doctest::Approx(0.75));
  CHECK(two.inverse()(0, 1) == doctest::Approx(-0.25));
  CHECK(two.inverse()(1, 0) == doctest::Approx(-0.25));
  CHECK(two.inverse()(1, 1) == doctest::Approx(0.75));

  CHECK_THROWS_AS(rank_one_update(id, dense({1})), DimensionError);
  CHECK_THROWS(RankOneInverse(2, 0.0));
}

TEST_CASE("diag_update examples") {
  DiagInverse d = diag_update(DiagInverse(2, 1.0), dense({2, 0}));
  CHECK(d.diag()[0] == 5.0);
  CHECK(d.diag()[1] == 1.0);
  DiagInverse z = diag_update(d, SparseVec(2));
  CHECK(std::vector<double>(z.diag().begin(), z.diag().end()) == std::vector<double>{5, 1});
  DiagInverse e = diag_update(DiagInverse(2, 4.0), dense({2, 2}));
  CHECK(e.diag()[0] == 2.0);
  CHECK(e.diag()[1] == 2.0);
  CHECK(e.quad_form(dense({2, 2})) == doctest::Approx(4.0));
  CHECK(e.logdet() == doctest::Approx(2 * std::log(2.0)));
  CHECK_THROWS_AS(diag_update(e, dense({1, 1, 1})), DimensionError);
}

TEST_CASE("incremental inverse tracks the direct inverse") {
  Xoshiro256 rng(7);
  const std::size_t d = 20;
  const double r = 1.7;
  RankOneInverse inv(d, r);
  std::vector<oracle::Vec> a(d, oracle::Vec(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) a[i][i] = 1.0;
  for (int t = 0; t < 1000; ++t) {
    SparseVec x = random_vec(rng, d, 0.6);
    inv.update(x);
    const auto xd = x.to_dense();
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) a[i][j] += xd[i] * xd[j] / r;
    }
  }
  const auto direct = oracle::direct_inverse(a);
  double worst = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) worst = std::max(worst, std::abs(direct.inverse[i][j] - inv.inverse()(i, j)));
  }
  CHECK(worst <= 1e-8);
  CHECK(std::abs(direct.logdet - inv.logdet()) <= 1e-8);
}

TEST_CASE("post-update quad form equals chi r / (r + chi)") {
  Xoshiro256 rng(11);
  for (double r : {0.3, 1.0, 5.0}) {
    RankOneInverse inv(6, r);
    for (int t = 0; t < 200; ++t) {
      SparseVec x = random_vec(rng, 6, 0.7);
      const double chi = quad_form(inv, x);
      CHECK(chi >= 0.0);
      CHECK((chi == 0.0) == x.empty());
      inv.update(x);
      const double after = quad_form(inv, x);
      CHECK(std::abs(after - chi * r / (r + chi)) <= 1e-12 * std::max(1.0, chi));
    }
  }
}

TEST_CASE("forward matrix and bilinear forms agree") {
  Xoshiro256 rng(3);
  RankOneInverse inv(4, 2.0, 0.5);
  for (int t = 0; t < 30; ++t) inv.update(random_vec(rng, 4));
  std::vector<double> u{0.3, -1.0, 2.0, 0.1};
  const auto au = inv.apply_forward(u);
  const auto back = inv.apply_inverse(au);
  for (std::size_t i = 0; i < 4; ++i) CHECK(back[i] == doctest::Approx(u[i]).epsilon(1e-10));
  CHECK(inv.forward_quad_form(u) == doctest::Approx(dot(u, au)));
  SparseVec x = dense({1, 0, -2, 0.5});
  CHECK(inv.bilinear(au, x) == doctest::Approx(x.dot(u)).epsilon(1e-10));
}
