#include "omd/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "omd/prng.hpp"

namespace omd::oracle {

namespace {

double inner(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Compass search: + and - along coordinates and along pairwise diagonals.
std::vector<Vec> directions(std::size_t d) {
  std::vector<Vec> out;
  for (std::size_t i = 0; i < d; ++i) {
    for (double s : {1.0, -1.0}) {
      Vec e(d, 0.0);
      e[i] = s;
      out.push_back(e);
    }
    for (std::size_t j = i + 1; j < d; ++j) {
      for (double si : {1.0, -1.0}) {
        for (double sj : {1.0, -1.0}) {
          Vec e(d, 0.0);
          e[i] = si * M_SQRT1_2;
          e[j] = sj * M_SQRT1_2;
          out.push_back(e);
        }
      }
    }
  }
  return out;
}

template <class Objective>
void maximize(const Objective& g, Vec& x, double& best, double step, int iters) {
  const auto dirs = directions(x.size());
  Vec trial(x.size());
  for (int it = 0; it < iters; ++it) {
    for (int moves = 0; moves < 200; ++moves) {
      bool improved = false;
      for (const auto& d : dirs) {
        for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + step * d[i];
        const double v = g(trial);
        if (v > best) {
          best = v;
          x = trial;
          improved = true;
        }
      }
      if (!improved) break;
    }
    step *= 0.5;
  }
}

}  // namespace

void GridSpec::validate() const {
  if (!(lo < hi)) throw std::invalid_argument("GridSpec: lo must be < hi");
  if (points_per_axis < 11) throw std::invalid_argument("GridSpec: need >= 11 points per axis");
  if (dim < 1 || dim > 3) throw std::invalid_argument("GridSpec: dim must be 1..3");
}

SupResult numeric_sup(const Function& f, std::span<const double> theta, const GridSpec& grid,
                      int refine_iters) {
  grid.validate();
  if (theta.size() != grid.dim) throw std::invalid_argument("numeric_sup: dimension mismatch");
  const std::size_t d = grid.dim;
  const int n = grid.points_per_axis;
  const double h = (grid.hi - grid.lo) / (n - 1);
  auto objective = [&](std::span<const double> v) {
    const double fv = f(v);
    if (!std::isfinite(fv)) return -std::numeric_limits<double>::infinity();
    return inner(v, theta) - fv;
  };

  Vec best_x(d, 0.0);
  double best = -std::numeric_limits<double>::infinity();
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= static_cast<std::size_t>(n);
  Vec v(d);
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t rem = k;
    for (std::size_t i = 0; i < d; ++i) {
      v[i] = grid.lo + h * static_cast<double>(rem % static_cast<std::size_t>(n));
      rem /= static_cast<std::size_t>(n);
    }
    const double val = objective(v);
    if (val > best) {
      best = val;
      best_x = v;
    }
  }
  if (!std::isfinite(best)) throw std::domain_error("numeric_sup: f is not finite anywhere on the grid");
  maximize(objective, best_x, best, h, refine_iters);
  return {best, best_x};
}

double numeric_conjugate(const Function& f, std::span<const double> theta, const GridSpec& grid,
                         int refine_iters) {
  return numeric_sup(f, theta, grid, refine_iters).value;
}

Vec fd_gradient(const Function& f, std::span<const double> v, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("fd_gradient: h must be positive");
  Vec x(v.begin(), v.end());
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x);
    x[i] = orig - h;
    const double fm = f(x);
    x[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw std::domain_error("fd_gradient: non-finite evaluation");
    }
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

double numeric_dual_norm(const Function& primal_norm, std::span<const double> z, std::size_t samples,
                         std::uint64_t seed) {
  const std::size_t d = z.size();
  if (std::all_of(z.begin(), z.end(), [](double v) { return v == 0.0; })) return 0.0;
  Xoshiro256 rng(seed);

  for (int k = 0; k < 10; ++k) {
    Vec u(d);
    for (auto& c : u) c = rng.normal();
    const double c = 0.5 + 3.0 * rng.uniform();
    Vec cu(u);
    for (auto& e : cu) e *= c;
    const double a = primal_norm(cu);
    const double b = c * primal_norm(u);
    if (std::abs(a - b) > 1e-9 * std::max(1.0, std::abs(b))) {
      throw std::domain_error("numeric_dual_norm: primal norm is not positively homogeneous");
    }
  }

  auto on_sphere = [&](std::span<const double> u) {
    const double n = primal_norm(u);
    if (!(n > 0.0)) return -std::numeric_limits<double>::infinity();
    return inner(u, z) / n;
  };
  Vec best_u(d, 0.0);
  double best = -std::numeric_limits<double>::infinity();
  Vec u(d);
  for (std::size_t s = 0; s < samples; ++s) {
    for (auto& c : u) c = rng.normal();
    const double v = on_sphere(u);
    if (v > best) {
      best = v;
      best_u = u;
    }
  }
  const double n = primal_norm(best_u);
  for (auto& c : best_u) c /= n;
  maximize(on_sphere, best_u, best, 0.05, 40);
  return best;
}

double implicit_scan(const std::function<bool(double)>& predicate, double hi, double step) {
  if (!(step > 0.0) || !(hi > 0.0)) throw std::invalid_argument("implicit_scan: bad range");
  if (predicate(hi)) throw std::domain_error("implicit_scan: predicate holds at hi");
  const auto n = static_cast<long long>(std::floor(hi / step));
  for (long long k = n; k >= 1; --k) {
    const double x = static_cast<double>(k) * step;
    if (x < hi && predicate(x)) return x;
  }
  return 0.0;
}

DirectInverse direct_inverse(std::vector<Vec> a) {
  const std::size_t n = a.size();
  std::vector<Vec> inv(n, Vec(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  double logdet = 0.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    if (a[piv][col] == 0.0) throw std::domain_error("direct_inverse: singular matrix");
    std::swap(a[piv], a[col]);
    std::swap(inv[piv], inv[col]);
    const double p = a[col][col];
    logdet += std::log(std::abs(p));
    for (std::size_t j = 0; j < n; ++j) {
      a[col][j] /= p;
      inv[col][j] /= p;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double factor = a[r][col];
      if (factor == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= factor * a[col][j];
        inv[r][j] -= factor * inv[col][j];
      }
    }
  }
  return {std::move(inv), logdet};
}

std::vector<std::size_t> perceptron_mistakes(const std::vector<Vec>& xs, const Vec& ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("perceptron_mistakes: length mismatch");
  std::vector<std::size_t> out;
  if (xs.empty()) return out;
  Vec w(xs.front().size(), 0.0);
  for (std::size_t t = 0; t < xs.size(); ++t) {
    if (ys[t] * inner(w, xs[t]) <= 0.0) {
      out.push_back(t + 1);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] += ys[t] * xs[t][i];
    }
  }
  return out;
}

}  // namespace omd::oracle
