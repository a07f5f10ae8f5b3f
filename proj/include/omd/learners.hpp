#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "json.hpp"
#include "omd/linalg.hpp"
#include "omd/losses.hpp"
#include "omd/regularizers.hpp"

namespace omd {

/// theta_t, w_t = grad f*_t(theta_t), the number of completed rounds, and f_t.
struct LearnerState {
  RealVec theta;
  RealVec w;
  std::size_t t = 0;
  RegularizerPtr reg;

  explicit LearnerState(RegularizerPtr r);
  LearnerState(const LearnerState& other);
  LearnerState& operator=(const LearnerState& other);
  LearnerState(LearnerState&&) = default;
  LearnerState& operator=(LearnerState&&) = default;
};

/// theta += z, w = mirror_map(theta), t += 1.  The regularizer is not advanced.
void omd_step(LearnerState& state, std::span<const double> z);
/// Same with z = scale * x.
void omd_step(LearnerState& state, const SparseVec& x, double scale);

/// Outcome of one round plus the per-round terms of the general OMD regret
/// inequality.  Every learner here plays z_t = z_scale * x_t.
struct StepOutcome {
  double prediction = 0.0;
  double loss = 0.0;
  double eta = 0.0;
  double z_scale = 0.0;
  bool mistake = false;
  bool margin_error = false;
  bool updated = false;

  double inner_zw = 0.0;        // <z_t, w_t>
  double z_dual_norm_sq = 0.0;  // ||z_t||_{*,t}^2
  double beta = 0.0;            // beta_t
  double residue = 0.0;         // f*_t(theta_t) - f*_{t-1}(theta_t)
  double residue_upper = 0.0;   // f_{t-1}(w_t) - f_t(w_t)
  double penalty = 0.0;         // F(w_t), composite learners only

  std::map<std::string, double> extras;
};

enum class EtaMode { conservative, pa_optimal, fixed };
enum class SecondOrderVariant { full, diagonal };
enum class UpdateTrigger { omd_margin, arow_margin, conservative };
enum class ScaleInvKind { pnorm, diag };

EtaMode parse_eta_mode(std::string_view name);
std::string_view to_string(EtaMode m);
SecondOrderVariant parse_variant(std::string_view name);
std::string_view to_string(SecondOrderVariant v);
UpdateTrigger parse_trigger(std::string_view name);
std::string_view to_string(UpdateTrigger t);
ScaleInvKind parse_scale_inv_kind(std::string_view name);
std::string_view to_string(ScaleInvKind k);

/// Two-phase online protocol: predict(x) opens round t, update(y) closes it.
class Learner {
 public:
  explicit Learner(RegularizerPtr reg);
  virtual ~Learner() = default;

  virtual std::string_view name() const = 0;
  /// Hyperparameters; together with name() they identify the learner.
  virtual nlohmann::json params() const = 0;
  /// Classification learners require labels in {-1, +1}.
  virtual bool is_classifier() const = 0;

  double predict(const SparseVec& x);
  StepOutcome update(double y);
  StepOutcome round(const SparseVec& x, double y);

  const LearnerState& state() const { return s_; }
  const Regularizer& regularizer() const { return *s_.reg; }
  std::size_t dim() const { return s_.theta.size(); }
  bool in_round() const { return open_; }

 protected:
  virtual double begin_round(const SparseVec& x, std::size_t t) = 0;
  virtual StepOutcome finish_round(const SparseVec& x, double y, std::size_t t) = 0;

  /// Fills the regret-inequality terms for z = z_scale * x at the point w_t,
  /// with prev describing f_{t-1}.
  void audit_terms(StepOutcome& out, const Regularizer& prev, std::span<const double> w_t,
                   const SparseVec& x, double z_scale) const;
  static void require_label(double y);

  LearnerState s_;

 private:
  SparseVec x_;
  bool open_ = false;
};

using LearnerPtr = std::unique_ptr<Learner>;

/// OMD on z_t = -eta l'_t for a convex loss of the linear prediction.  Covers
/// online gradient descent with scheduled quadratics, the composite
/// regularizer family and the two scale-invariant families.
class GradientLearner final : public Learner {
 public:
  GradientLearner(std::string name, RegularizerPtr reg, LossKind loss, double eta,
                  nlohmann::json extra_params = nlohmann::json::object());

  std::string_view name() const override { return name_; }
  nlohmann::json params() const override;
  bool is_classifier() const override { return loss_ == LossKind::hinge; }
  LossKind loss() const { return loss_; }
  double eta() const { return eta_; }

 protected:
  double begin_round(const SparseVec& x, std::size_t t) override;
  StepOutcome finish_round(const SparseVec& x, double y, std::size_t t) override;

 private:
  std::string name_;
  LossKind loss_;
  double eta_;
  double lipschitz_limit_;
  nlohmann::json extra_;
  RegularizerPtr prev_;
  RealVec w_round_;
};

/// f_t = f fixed; z_t = eta_t y_t x_t whenever the hinge loss is positive.
class FirstOrderClassifier final : public Learner {
 public:
  FirstOrderClassifier(RegularizerPtr reg, EtaMode mode, double fixed_eta = 1.0);

  std::string_view name() const override { return "first_order"; }
  nlohmann::json params() const override;
  bool is_classifier() const override { return true; }
  double max_dual_norm() const { return max_dual_norm_; }

 protected:
  double begin_round(const SparseVec& x, std::size_t t) override;
  StepOutcome finish_round(const SparseVec& x, double y, std::size_t t) override;

 private:
  EtaMode mode_;
  double fixed_eta_;
  double max_dual_norm_ = 0.0;
  double x_dual_norm_ = 0.0;
  double prediction_ = 0.0;
};

/// Second-order Perceptron / AROW-style classifier with f_t = 1/2 u^T A_t u
/// (full) or 1/2 u^T D_t u (diagonal).  f_t only moves on update rounds.
class SecondOrderClassifier final : public Learner {
 public:
  SecondOrderClassifier(std::size_t dim, SecondOrderVariant variant, UpdateTrigger trigger, double r);

  std::string_view name() const override { return "second_order"; }
  nlohmann::json params() const override;
  bool is_classifier() const override { return true; }
  SecondOrderVariant variant() const { return variant_; }
  UpdateTrigger trigger() const { return trigger_; }
  double r() const { return r_; }

 protected:
  double begin_round(const SparseVec& x, std::size_t t) override;
  StepOutcome finish_round(const SparseVec& x, double y, std::size_t t) override;

 private:
  SecondOrderVariant variant_;
  UpdateTrigger trigger_;
  double r_;
  double m_ = 0.0;
  double chi_ = 0.0;
  double tentative_ = 0.0;
};

/// Vovk-Azoury-Warmuth forecaster: f_t = 1/2 u^T (aI + sum_{s<=t} x_s x_s^T) u,
/// z_t = y_t x_t.
class VawRegressor final : public Learner {
 public:
  VawRegressor(std::size_t dim, double a);

  std::string_view name() const override { return "vaw"; }
  nlohmann::json params() const override;
  bool is_classifier() const override { return false; }
  double a() const { return a_; }

 protected:
  double begin_round(const SparseVec& x, std::size_t t) override;
  StepOutcome finish_round(const SparseVec& x, double y, std::size_t t) override;

 private:
  double a_;
  RegularizerPtr prev_;
  RealVec w_round_;
};

/// f_t = X_t^2 f for a fixed 1-strongly convex f; z_t = (y_t - w_t^T x_t) x_t.
class AdaptiveFilter final : public Learner {
 public:
  explicit AdaptiveFilter(RegularizerPtr base);

  std::string_view name() const override { return "adaptive_filter"; }
  nlohmann::json params() const override;
  bool is_classifier() const override { return false; }

 protected:
  double begin_round(const SparseVec& x, std::size_t t) override;
  StepOutcome finish_round(const SparseVec& x, double y, std::size_t t) override;

 private:
  RegularizerPtr prev_;
  RealVec w_round_;
};

// Convenience constructors.
enum class QuadraticSchedule { constant, sqrt_time, linear_time };
QuadraticSchedule parse_quadratic_schedule(std::string_view name);
std::string_view to_string(QuadraticSchedule s);

/// z_t = -eta l'_t with f_t = s_t c/2 ||.||^2, s_t in {1, sqrt(t), t}.
LearnerPtr make_ogd(std::size_t dim, double eta, LossKind loss, QuadraticSchedule schedule,
                    double scale = 1.0);
LearnerPtr make_composite(std::size_t dim, CompositeQuadL1::Params params, LossKind loss);
LearnerPtr make_scale_invariant(std::size_t dim, ScaleInvKind kind, double lipschitz, double eta,
                                LossKind loss);

}  // namespace omd
