#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"
#include "omd/linalg.hpp"

namespace omd {

namespace tolerance {
inline constexpr double grid_oracle = 1e-4;
inline constexpr double argmax = 1e-6;
inline constexpr double algebraic = 1e-9;
}  // namespace tolerance

/// Raised when a learner drives a regularizer out of protocol order.
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A member f_t of a sequence of strongly convex regularizers.
///
/// The object holds the state that defines f_t at its current step.  Reads
/// (value, conjugate, mirror_map, norms) are pure.  advance_instance moves the
/// state to a later round using that round's instance; advance_gradient records
/// the round's (sub)gradient, which only affects f_{t+1} and later.
///
/// Coordinates on which a family is degenerate (e.g. never-seen features of the
/// scale-invariant families) contribute 0 to f and force 0 in the mirror map;
/// conjugate returns +inf if theta is nonzero there.
class Regularizer {
 public:
  explicit Regularizer(std::size_t dim) : dim_(dim) {}
  virtual ~Regularizer() = default;

  virtual std::string_view kind() const = 0;
  virtual std::unique_ptr<Regularizer> clone() const = 0;

  std::size_t dim() const { return dim_; }
  /// Last round whose instance was consumed (0 before the first round).
  std::size_t step() const { return step_; }

  double value(std::span<const double> w) const;
  double conjugate(std::span<const double> theta) const;
  /// grad f*_t(theta) = argmax_v <v, theta> - f_t(v).
  RealVec mirror_map(std::span<const double> theta) const;
  /// Modulus beta_t of strong convexity with respect to norm().
  double strong_convexity() const { return do_strong_convexity(); }
  double norm(std::span<const double> v) const;
  double dual_norm(std::span<const double> z) const;
  double dual_norm(const SparseVec& z) const;
  /// One element of the subdifferential of f_t at w.
  RealVec subgradient(std::span<const double> w) const;

  /// Round t must be strictly later than step().
  void advance_instance(const SparseVec& x, std::size_t t);
  /// Round t must be the current step and not already recorded.
  void advance_gradient(const SparseVec& g, std::size_t t);

  nlohmann::json to_json() const;

 protected:
  virtual double do_value(std::span<const double> w) const = 0;
  virtual double do_conjugate(std::span<const double> theta) const = 0;
  virtual RealVec do_mirror_map(std::span<const double> theta) const = 0;
  virtual double do_strong_convexity() const = 0;
  virtual double do_norm(std::span<const double> v) const = 0;
  virtual double do_dual_norm(std::span<const double> z) const = 0;
  virtual RealVec do_subgradient(std::span<const double> w) const = 0;
  virtual void on_instance(const SparseVec&) {}
  virtual void on_gradient(const SparseVec&) {}
  virtual void state_to_json(nlohmann::json& out) const = 0;

  friend std::unique_ptr<Regularizer> regularizer_from_json(const nlohmann::json&);
  void restore_steps(std::size_t step, std::size_t gradient_step) {
    step_ = step;
    gradient_step_ = gradient_step;
  }

 private:
  std::size_t dim_;
  std::size_t step_ = 0;
  std::size_t gradient_step_ = 0;
};

using RegularizerPtr = std::unique_ptr<Regularizer>;

/// c/2 ||w||^2.
class FixedQuadratic final : public Regularizer {
 public:
  FixedQuadratic(std::size_t dim, double scale = 1.0);
  std::string_view kind() const override { return "fixed_quadratic"; }
  RegularizerPtr clone() const override { return std::make_unique<FixedQuadratic>(*this); }
  double scale() const { return scale_; }

 protected:
  double do_value(std::span<const double> w) const override;
  double do_conjugate(std::span<const double> theta) const override;
  RealVec do_mirror_map(std::span<const double> theta) const override;
  double do_strong_convexity() const override { return scale_; }
  double do_norm(std::span<const double> v) const override;
  double do_dual_norm(std::span<const double> z) const override;
  RealVec do_subgradient(std::span<const double> w) const override;
  void state_to_json(nlohmann::json& out) const override;

 private:
  double scale_;
};

/// 1/2 ||w||_p^2 for p in (1, 2]; (p-1)-strongly convex w.r.t. ||.||_p.
class PNorm final : public Regularizer {
 public:
  PNorm(std::size_t dim, double p);
  std::string_view kind() const override { return "pnorm"; }
  RegularizerPtr clone() const override { return std::make_unique<PNorm>(*this); }
  double p() const { return p_; }
  double dual_exponent() const { return q_; }

 protected:
  double do_value(std::span<const double> w) const override;
  double do_conjugate(std::span<const double> theta) const override;
  RealVec do_mirror_map(std::span<const double> theta) const override;
  double do_strong_convexity() const override { return p_ - 1.0; }
  double do_norm(std::span<const double> v) const override;
  double do_dual_norm(std::span<const double> z) const override;
  RealVec do_subgradient(std::span<const double> w) const override;
  void state_to_json(nlohmann::json& out) const override;

 private:
  double p_;
  double q_;
};

/// 1/(2(q-1)) (sum_i |w_i|^q a_i)^(2/q) for q in (1, 2] and a_i > 0; 1-strongly
/// convex w.r.t. the weighted q-norm.
class WeightedQNorm final : public Regularizer {
 public:
  WeightedQNorm(double q, RealVec weights);
  std::string_view kind() const override { return "weighted_qnorm"; }
  RegularizerPtr clone() const override { return std::make_unique<WeightedQNorm>(*this); }
  double q() const { return q_; }
  double dual_exponent() const { return p_; }
  std::span<const double> weights() const { return weights_; }

 protected:
  double do_value(std::span<const double> w) const override;
  double do_conjugate(std::span<const double> theta) const override;
  RealVec do_mirror_map(std::span<const double> theta) const override;
  double do_strong_convexity() const override { return 1.0; }
  double do_norm(std::span<const double> v) const override;
  double do_dual_norm(std::span<const double> z) const override;
  RealVec do_subgradient(std::span<const double> w) const override;
  void state_to_json(nlohmann::json& out) const override;

 private:
  double q_;
  double p_;
  RealVec weights_;
  RealVec primal_scale_;  // a_i^(1/q)
  RealVec dual_scale_;    // a_i^((1-p)/p)
};

/// 1/2 u^T A_t u with A_0 = a I and A_t = A_{t-1} + (1/r) x_t x_t^T.
class FullQuadratic final : public Regularizer {
 public:
  FullQuadratic(std::size_t dim, double r, double initial_scale = 1.0);
  explicit FullQuadratic(RankOneInverse state);
  std::string_view kind() const override { return "growing_quadratic_full"; }
  RegularizerPtr clone() const override { return std::make_unique<FullQuadratic>(*this); }
  const RankOneInverse& matrix() const { return inv_; }
  /// chi of the last instance update.
  double last_chi() const { return last_chi_; }

 protected:
  double do_value(std::span<const double> w) const override;
  double do_conjugate(std::span<const double> theta) const override;
  RealVec do_mirror_map(std::span<const double> theta) const override;
  double do_strong_convexity() const override { return 1.0; }
  double do_norm(std::span<const double> v) const override;
  double do_dual_norm(std::span<const double> z) const override;
  RealVec do_subgradient(std::span<const double> w) const override;
  void on_instance(const SparseVec& x) override;
  void state_to_json(nlohmann::json& out) const override;

 private:
  friend RegularizerPtr regularizer_from_json(const nlohmann::json&);
  RankOneInverse inv_;
  double last_chi_ = 0.0;
};

/// 1/2 u^T D_t u with D_t = diag(A_t).
class DiagQuadratic final : public Regularizer {
 public:
  DiagQuadratic(std::size_t dim, double r);
  explicit DiagQuadratic(DiagInverse state);
  std::string_view kind() const override { return "growing_quadratic_diag"; }
  RegularizerPtr clone() const override { return std::make_unique<DiagQuadratic>(*this); }
  const DiagInverse& matrix() const { return diag_; }

 protected:
  double do_value(std::span<const double> w) const override;
  double do_conjugate(std::span<const double> theta) const override;
  RealVec do_mirror_map(std::span<const double> theta) const override;
  double do_strong_convexity() const override { return 1.0; }
  double do_norm(std::span<const double> v) const override;
  double do_dual_norm(std::span<const double> z) const override;
  RealVec do_subgradient(std::span<const double> w) const override;
  void on_instance(const SparseVec& x) override;
  void state_to_json(nlohmann::json& out) const override;

 private:
  friend RegularizerPtr regularizer_from_json(const nlohmann::json&);
  DiagInverse diag_;
};

/// Per-coordinate maxima b_{t,i} and support size m_t shared by the two
/// scale-invariant families.
struct FeatureRange {
  RealVec b;
  std::size_t max_support = 0;
  void observe(const SparseVec& x);
};

/// beta_t/2 (sum_i (|u_i| b_{t,i})^{q_t})^{2/q_t}, with p_t = max(2 ln m_t, 2),
/// q_t = p_t/(p_t - 1) and
///   beta_t = sqrt(e L^2 (p_t - 1) + sum_{s<t} (p_s - 1) ||l'_s / b_s||_{p_s}^2).
/// Strongly convex with modulus beta_t w.r.t. sqrt(q_t - 1) ||b_t o u||_{q_t}.
class ScaleInvPNorm final : public Regularizer {
 public:
  ScaleInvPNorm(std::size_t dim, double lipschitz);
  std::string_view kind() const override { return "scale_inv_pnorm"; }
  RegularizerPtr clone() const override { return std::make_unique<ScaleInvPNorm>(*this); }

  double lipschitz() const { return lipschitz_; }
  std::span<const double> b() const { return range_.b; }
  std::size_t max_support() const { return range_.max_support; }
  double p() const;
  double q() const;
  double beta() const;
  /// Committed gradient statistic sum_{s<t} (p_s - 1) ||l'_s / b_s||_{p_s}^2.
  double gradient_sum() const { return grad_sum_; }
  /// Statistic of the current round, folded in at the next instance.
  double pending() const { return pending_; }

 protected:
  double do_value(std::span<const double> w) const override;
  double do_conjugate(std::span<const double> theta) const override;
  RealVec do_mirror_map(std::span<const double> theta) const override;
  double do_strong_convexity() const override { return beta(); }
  double do_norm(std::span<const double> v) const override;
  double do_dual_norm(std::span<const double> z) const override;
  RealVec do_subgradient(std::span<const double> w) const override;
  void on_instance(const SparseVec& x) override;
  void on_gradient(const SparseVec& g) override;
  void state_to_json(nlohmann::json& out) const override;

 private:
  friend RegularizerPtr regularizer_from_json(const nlohmann::json&);
  double lipschitz_;
  FeatureRange range_;
  double grad_sum_ = 0.0;
  double pending_ = 0.0;
};

/// sqrt(d)/2 sum_i (u_i b_{t,i})^2 sqrt(L^2 + sum_{s<t} (l'_{s,i}/b_{s,i})^2).
class ScaleInvDiag final : public Regularizer {
 public:
  ScaleInvDiag(std::size_t dim, double lipschitz);
  std::string_view kind() const override { return "scale_inv_diag"; }
  RegularizerPtr clone() const override { return std::make_unique<ScaleInvDiag>(*this); }

  double lipschitz() const { return lipschitz_; }
  std::span<const double> b() const { return range_.b; }
  std::size_t max_support() const { return range_.max_support; }
  std::span<const double> gradient_stats() const { return grad_stats_; }
  /// Per-coordinate curvature sqrt(d) b_i^2 sqrt(L^2 + G_i).
  double curvature(std::size_t i) const;

 protected:
  double do_value(std::span<const double> w) const override;
  double do_conjugate(std::span<const double> theta) const override;
  RealVec do_mirror_map(std::span<const double> theta) const override;
  double do_strong_convexity() const override { return 1.0; }
  double do_norm(std::span<const double> v) const override;
  double do_dual_norm(std::span<const double> z) const override;
  RealVec do_subgradient(std::span<const double> w) const override;
  void on_instance(const SparseVec& x) override;
  void on_gradient(const SparseVec& g) override;
  void state_to_json(nlohmann::json& out) const override;

 private:
  friend RegularizerPtr regularizer_from_json(const nlohmann::json&);
  double lipschitz_;
  FeatureRange range_;
  RealVec grad_stats_;
  RealVec pending_;
};

enum class QuadSchedule { constant, sqrt_time, none };

QuadSchedule parse_quad_schedule(std::string_view name);
std::string_view to_string(QuadSchedule s);

/// g_t + eta t F with g_t = (c phi(t))/2 ||w||^2, phi in {1, sqrt(t), 0}, and the
/// composite penalty F(w) = mu/2 ||w||^2 + lambda ||w||_1.
class CompositeQuadL1 final : public Regularizer {
 public:
  struct Params {
    QuadSchedule schedule = QuadSchedule::sqrt_time;
    double base_scale = 1.0;  // c
    double eta = 1.0;
    double l1 = 0.0;  // lambda
    double l2 = 0.0;  // mu
  };

  CompositeQuadL1(std::size_t dim, Params params);
  std::string_view kind() const override { return "composite_quad_l1"; }
  RegularizerPtr clone() const override { return std::make_unique<CompositeQuadL1>(*this); }

  const Params& params() const { return params_; }
  double curvature() const;
  double threshold() const;
  double penalty(std::span<const double> w) const;
  /// g_t(u) at the current step.
  double quadratic_part(std::span<const double> u) const;

 protected:
  double do_value(std::span<const double> w) const override;
  double do_conjugate(std::span<const double> theta) const override;
  RealVec do_mirror_map(std::span<const double> theta) const override;
  double do_strong_convexity() const override { return curvature(); }
  double do_norm(std::span<const double> v) const override;
  double do_dual_norm(std::span<const double> z) const override;
  RealVec do_subgradient(std::span<const double> w) const override;
  void state_to_json(nlohmann::json& out) const override;

 private:
  friend RegularizerPtr regularizer_from_json(const nlohmann::json&);
  Params params_;
};

enum class ScalePolicy { sqrt_time, linear_time, max_dual_norm_sq };

ScalePolicy parse_scale_policy(std::string_view name);
std::string_view to_string(ScalePolicy s);

/// s_t f for a fixed base f, with s_t = sqrt(t), t, or X_t^2 where
/// X_t = max_{s<=t} ||x_s||_* in the base dual norm.
class Scaled final : public Regularizer {
 public:
  Scaled(RegularizerPtr base, ScalePolicy policy);
  Scaled(const Scaled& other);
  Scaled& operator=(const Scaled&) = delete;

  std::string_view kind() const override;
  RegularizerPtr clone() const override { return std::make_unique<Scaled>(*this); }

  const Regularizer& base() const { return *base_; }
  ScalePolicy policy() const { return policy_; }
  double scale() const;
  double max_dual_norm() const { return max_dual_norm_; }

 protected:
  double do_value(std::span<const double> w) const override;
  double do_conjugate(std::span<const double> theta) const override;
  RealVec do_mirror_map(std::span<const double> theta) const override;
  double do_strong_convexity() const override;
  double do_norm(std::span<const double> v) const override;
  double do_dual_norm(std::span<const double> z) const override;
  RealVec do_subgradient(std::span<const double> w) const override;
  void on_instance(const SparseVec& x) override;
  void state_to_json(nlohmann::json& out) const override;

 private:
  friend RegularizerPtr regularizer_from_json(const nlohmann::json&);
  RegularizerPtr base_;
  ScalePolicy policy_;
  double max_dual_norm_ = 0.0;
};

RegularizerPtr regularizer_from_json(const nlohmann::json& j);

// Free-function spelling of the read operations.
double value(const Regularizer& f, std::span<const double> w);
double conjugate(const Regularizer& f, std::span<const double> theta);
RealVec mirror_map(const Regularizer& f, std::span<const double> theta);
double strong_convexity(const Regularizer& f);
double dual_norm(const Regularizer& f, std::span<const double> z);

}  // namespace omd
