#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "omd/linalg.hpp"
#include "omd/trace.hpp"

namespace omd {

namespace slack_tolerance {
inline constexpr double standard = 1e-9;
/// The scale-invariant regret bounds carry more cancellation.
inline constexpr double scale_invariant = 1e-6;
}  // namespace slack_tolerance

/// A theoretical bound evaluated on one run against one comparator.
struct BoundReport {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  double slack = 0.0;  // bound - measured
  double tolerance = slack_tolerance::standard;
  std::map<std::string, double> terms;
  /// Side conditions; every flag listed in `required` must be true for ok.
  std::map<std::string, bool> flags;
  std::vector<std::string> required;
  bool ok = false;

  /// Sets slack and ok from measured, bound, tolerance and the required flags.
  void finalize();
};

nlohmann::json to_json(const BoundReport& r);

struct Comparator {
  std::string name;
  RealVec u;
};

/// Evaluates one bound at a comparator; built once per trace.
using BoundEvaluator = std::function<BoundReport(std::span<const double> u)>;

// Per-trace evaluators.  Each throws std::invalid_argument when the trace
// comes from a learner the bound does not cover.

/// General OMD audit: measured = sum <z_t, u - w_t>, bound = f_T(u) + sum
/// (||z_t||^2_{*,t} / (2 beta_t) + residue_t); also checks each residue
/// against f_{t-1}(w_t) - f_t(w_t).
BoundEvaluator lemma1_audit(const RunTrace& trace);

enum class Cor1Form { general, sqrt_time, linear_time };
/// Composite regret of z_t = -eta l'_t learners under the three schedules.
BoundEvaluator cor1_bound(const RunTrace& trace, Cor1Form form);
/// VAW: R_T(u) <= a/2 ||u||^2 + Y^2/2 sum x_t^T A_t^{-1} x_t.
BoundEvaluator vaw_bound(const RunTrace& trace);
/// Adaptive filtering: sum (w_t x_t - u x_t)^2 <= 2 X_T^2 f(u) + sum (y_t - u x_t)^2.
BoundEvaluator af_bound(const RunTrace& trace);
/// Regret of the scale-invariant learners.
BoundEvaluator theorem3_bound(const RunTrace& trace);
/// First-order mistake bound with the D-term and the Perceptron baseline.
BoundEvaluator cor3_bound(const RunTrace& trace);
/// Second-order full-matrix bound (also valid for the AROW trigger).
BoundEvaluator second_order_bound(const RunTrace& trace);
/// Looser full-matrix bound with U in place of the m_t sum.
BoundEvaluator second_order_arow_bound(const RunTrace& trace);
/// Diagonal second-order bound with the 2U term.
BoundEvaluator diag_bound(const RunTrace& trace);
/// Rare-feature refinement for the conservative diagonal learner.  With s
/// unset the smallest s satisfying the hypothesis for u is used.
BoundEvaluator diag_rare_feature_bound(const RunTrace& trace, std::optional<double> s = std::nullopt);

/// Names of the bounds that apply to the trace's learner, in report order.
std::vector<std::string> applicable_bounds(const RunTrace& trace);
BoundEvaluator make_bound(const std::string& name, const RunTrace& trace);

/// Evaluates at every comparator and returns the report with the smallest
/// slack, named "<bound>@<label>".  Comparator coordinates land in terms as u[i]
/// when there is more than one comparator.
BoundReport worst_case(const BoundEvaluator& eval, const std::string& bound_name, const std::string& label,
                       const std::vector<Comparator>& comparators);

// Comparators.

struct ComparatorSpec {
  enum class Kind { zero, target, fixed, grid, batch };
  Kind kind = Kind::zero;
  std::string text = "zero";
  RealVec values;              // fixed
  double radius = 2.0;         // grid
  std::size_t points = 41;     // grid
  std::size_t iterations = 2000;  // batch
};

/// "zero", "target", "fixed:v1,v2,...", "grid:R=2,n=41", "batch:iters=2000".
ComparatorSpec parse_comparator_spec(const std::string& text);
/// Grids are limited to d <= 3.
std::vector<Comparator> resolve_comparators(const ComparatorSpec& spec, const RunTrace& trace,
                                            const std::optional<RealVec>& target);
/// Deterministic normalized subgradient descent on the cumulative loss of u
/// over the trace's examples, projected on the ball of the given radius.  The
/// iterations run in five phases with steps scale/(2 sqrt k), scale starting at
/// the radius and shrinking by 4 per phase, each phase restarting from the
/// best iterate, which is returned.
RealVec batch_comparator(const RunTrace& trace, std::size_t iterations, double radius = 10.0);

/// All applicable bounds at all comparator specs; first-order runs also get
/// "cor3@min", the smallest bound over every comparator.
std::vector<BoundReport> evaluate_bounds(const RunTrace& trace, const std::vector<ComparatorSpec>& specs,
                                         const std::optional<RealVec>& target);

// Appendix inequalities.

/// Largest x with x <= a ln x is at most n/(n-1) a ln(n a / e).
double lemma_log1(double a, double n);
/// x <= a ln(b x + c) + d implies x <= n/(n-1) (a ln(n a b / e) + d) + c / (b (n-1)).
double cor_log1(double a, double b, double c, double d, double n);
/// x <= sqrt(a ln(b x + 1) + c) + d implies
/// x <= sqrt(a ln(sqrt(8) a b^2 / e + 2 b sqrt(c) + 2 d b + 2) + c) + d.
double cor_log2(double a, double b, double c, double d);

/// sum_t x_t D_t^{-1} x_t with D_t = I + (1/r) sum_{s<=t} diag(x_s^2).
double diag_log_lhs(const std::vector<SparseVec>& xs, double r);
/// r sum_i ln(1/r sum_t x_{t,i}^2 + 1).
double diag_log_rhs(const std::vector<SparseVec>& xs, double r);

/// sum_t a_t / sqrt(sum_{s<=t} a_s) <= 2 sqrt(sum_t a_t) within 1e-12, 0/0 read as 0.
bool sqrt_sum_inequality_check(std::span<const double> a);

}  // namespace omd
