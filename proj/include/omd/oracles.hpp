#pragma once

// Brute-force numerical oracles.  Deliberately naive: grids, random search and
// compass search, with no knowledge of the analytic formulas they check.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace omd::oracle {

using Vec = std::vector<double>;
using Function = std::function<double(std::span<const double>)>;

struct GridSpec {
  double lo = -3.0;
  double hi = 3.0;
  int points_per_axis = 21;
  std::size_t dim = 1;

  void validate() const;
};

struct SupResult {
  double value;
  Vec argmax;
};

/// sup_v <v, theta> - f(v): best grid point, then compass search that halves its
/// step refine_iters times.  The search may leave the grid box.
SupResult numeric_sup(const Function& f, std::span<const double> theta, const GridSpec& grid,
                      int refine_iters = 45);

double numeric_conjugate(const Function& f, std::span<const double> theta, const GridSpec& grid,
                         int refine_iters = 45);

/// Central differences with step h.
Vec fd_gradient(const Function& f, std::span<const double> v, double h = 1e-5);

/// sup { <u, z> : ||u|| <= 1 } over random directions scaled onto the unit
/// sphere of primal_norm, then a compass refinement of the best direction.
/// Throws if primal_norm fails a positive-homogeneity check.
double numeric_dual_norm(const Function& primal_norm, std::span<const double> z,
                         std::size_t samples = 100000, std::uint64_t seed = 1);

/// Largest x = k*step <= hi with predicate(x) true; 0 when there is none.
/// Throws if predicate(hi) holds, since the range may be too small.
double implicit_scan(const std::function<bool(double)>& predicate, double hi, double step);

/// Gauss-Jordan inverse with partial pivoting; row-major d x d.
struct DirectInverse {
  std::vector<Vec> inverse;
  double logdet;
};
DirectInverse direct_inverse(std::vector<Vec> a);

/// Mistake rounds (1-based) of the classical Perceptron run on (xs, ys).
std::vector<std::size_t> perceptron_mistakes(const std::vector<Vec>& xs, const Vec& ys);

}  // namespace omd::oracle
