#include "omd/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace omd {

using nlohmann::json;

LearnerState::LearnerState(RegularizerPtr r) : reg(std::move(r)) {
  if (!reg) throw std::invalid_argument("LearnerState: null regularizer");
  theta.assign(reg->dim(), 0.0);
  w = reg->mirror_map(theta);
}

LearnerState::LearnerState(const LearnerState& other)
    : theta(other.theta), w(other.w), t(other.t), reg(other.reg->clone()) {}

LearnerState& LearnerState::operator=(const LearnerState& other) {
  if (this != &other) {
    theta = other.theta;
    w = other.w;
    t = other.t;
    reg = other.reg->clone();
  }
  return *this;
}

void omd_step(LearnerState& state, std::span<const double> z) {
  require_dim("omd_step", state.theta.size(), z.size());
  for (std::size_t i = 0; i < z.size(); ++i) state.theta[i] += z[i];
  state.w = state.reg->mirror_map(state.theta);
  ++state.t;
}

void omd_step(LearnerState& state, const SparseVec& x, double scale) {
  require_dim("omd_step", state.theta.size(), x.dim());
  axpy(scale, x, state.theta);
  state.w = state.reg->mirror_map(state.theta);
  ++state.t;
}

// ---------------------------------------------------------------------------

EtaMode parse_eta_mode(std::string_view name) {
  if (name == "conservative") return EtaMode::conservative;
  if (name == "pa_optimal") return EtaMode::pa_optimal;
  if (name == "fixed") return EtaMode::fixed;
  throw std::invalid_argument("unknown eta mode '" + std::string(name) + "'");
}

std::string_view to_string(EtaMode m) {
  switch (m) {
    case EtaMode::conservative:
      return "conservative";
    case EtaMode::pa_optimal:
      return "pa_optimal";
    case EtaMode::fixed:
      return "fixed";
  }
  return "?";
}

SecondOrderVariant parse_variant(std::string_view name) {
  if (name == "full") return SecondOrderVariant::full;
  if (name == "diag" || name == "diagonal") return SecondOrderVariant::diagonal;
  throw std::invalid_argument("unknown second-order variant '" + std::string(name) + "'");
}

std::string_view to_string(SecondOrderVariant v) {
  return v == SecondOrderVariant::full ? "full" : "diag";
}

UpdateTrigger parse_trigger(std::string_view name) {
  if (name == "omd_margin") return UpdateTrigger::omd_margin;
  if (name == "arow_margin") return UpdateTrigger::arow_margin;
  if (name == "conservative") return UpdateTrigger::conservative;
  throw std::invalid_argument("unknown trigger '" + std::string(name) + "'");
}

std::string_view to_string(UpdateTrigger t) {
  switch (t) {
    case UpdateTrigger::omd_margin:
      return "omd_margin";
    case UpdateTrigger::arow_margin:
      return "arow_margin";
    case UpdateTrigger::conservative:
      return "conservative";
  }
  return "?";
}

ScaleInvKind parse_scale_inv_kind(std::string_view name) {
  if (name == "pnorm") return ScaleInvKind::pnorm;
  if (name == "diag") return ScaleInvKind::diag;
  throw std::invalid_argument("unknown scale-invariant kind '" + std::string(name) + "'");
}

std::string_view to_string(ScaleInvKind k) { return k == ScaleInvKind::pnorm ? "pnorm" : "diag"; }

QuadraticSchedule parse_quadratic_schedule(std::string_view name) {
  if (name == "constant") return QuadraticSchedule::constant;
  if (name == "sqrt") return QuadraticSchedule::sqrt_time;
  if (name == "linear") return QuadraticSchedule::linear_time;
  throw std::invalid_argument("unknown schedule '" + std::string(name) + "'");
}

std::string_view to_string(QuadraticSchedule s) {
  switch (s) {
    case QuadraticSchedule::constant:
      return "constant";
    case QuadraticSchedule::sqrt_time:
      return "sqrt";
    case QuadraticSchedule::linear_time:
      return "linear";
  }
  return "?";
}

// ---------------------------------------------------------------------------

Learner::Learner(RegularizerPtr reg) : s_(std::move(reg)) {}

double Learner::predict(const SparseVec& x) {
  if (open_) throw ProtocolError("predict: previous round has not been closed by update");
  require_dim("Learner::predict", dim(), x.dim());
  const double p = begin_round(x, s_.t + 1);
  x_ = x;
  open_ = true;
  return p;
}

StepOutcome Learner::update(double y) {
  if (!open_) throw ProtocolError("update: no open round");
  if (!std::isfinite(y)) throw std::invalid_argument("update: label is not finite");
  if (is_classifier()) require_label(y);
  StepOutcome out = finish_round(x_, y, s_.t + 1);
  s_.t += 1;
  open_ = false;
  return out;
}

StepOutcome Learner::round(const SparseVec& x, double y) {
  predict(x);
  return update(y);
}

void Learner::require_label(double y) {
  if (y != 1.0 && y != -1.0) {
    throw std::invalid_argument("classification label must be -1 or +1, got " + std::to_string(y));
  }
}

void Learner::audit_terms(StepOutcome& out, const Regularizer& prev, std::span<const double> w_t,
                          const SparseVec& x, double z_scale) const {
  const Regularizer& cur = *s_.reg;
  out.beta = cur.strong_convexity();
  out.inner_zw = z_scale * x.dot(w_t);
  if (z_scale != 0.0 && !x.empty()) {
    const double dn = cur.dual_norm(x);
    out.z_dual_norm_sq = z_scale * z_scale * dn * dn;
  } else {
    out.z_dual_norm_sq = 0.0;
  }
  if (&prev == &cur) {
    out.residue = 0.0;
    out.residue_upper = 0.0;
  } else {
    out.residue = cur.conjugate(s_.theta) - prev.conjugate(s_.theta);
    out.residue_upper = prev.value(w_t) - cur.value(w_t);
  }
}

// ---------------------------------------------------------------------------

GradientLearner::GradientLearner(std::string name, RegularizerPtr reg, LossKind loss, double eta,
                                 json extra_params)
    : Learner(std::move(reg)),
      name_(std::move(name)),
      loss_(loss),
      eta_(eta),
      lipschitz_limit_(std::numeric_limits<double>::infinity()),
      extra_(std::move(extra_params)) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw std::invalid_argument("GradientLearner: eta must be positive");
  }
  if (const auto* p = dynamic_cast<const ScaleInvPNorm*>(s_.reg.get())) lipschitz_limit_ = p->lipschitz();
  if (const auto* d = dynamic_cast<const ScaleInvDiag*>(s_.reg.get())) lipschitz_limit_ = d->lipschitz();
  if (lipschitz_constant(loss) > lipschitz_limit_) {
    throw std::invalid_argument("GradientLearner: loss '" + std::string(to_string(loss)) +
                                "' is not Lipschitz with the declared L");
  }
}

json GradientLearner::params() const {
  json p = extra_;
  p["loss"] = std::string(to_string(loss_));
  p["eta"] = eta_;
  return p;
}

double GradientLearner::begin_round(const SparseVec& x, std::size_t t) {
  prev_ = s_.reg->clone();
  s_.reg->advance_instance(x, t);
  w_round_ = s_.reg->mirror_map(s_.theta);
  return x.dot(w_round_);
}

StepOutcome GradientLearner::finish_round(const SparseVec& x, double y, std::size_t t) {
  StepOutcome out;
  out.prediction = x.dot(w_round_);
  const LossEval e = evaluate_loss(loss_, out.prediction, y);
  if (std::abs(e.subgrad_scalar) > lipschitz_limit_ * (1.0 + 1e-12)) {
    throw std::invalid_argument("GradientLearner: loss derivative exceeds the declared L");
  }
  out.loss = e.value;
  out.eta = eta_;
  out.z_scale = -eta_ * e.subgrad_scalar;
  out.updated = out.z_scale != 0.0 && !x.empty();
  if (loss_ == LossKind::hinge) {
    out.mistake = y * out.prediction <= 0.0;
    out.margin_error = !out.mistake && e.value > 0.0;
  }
  if (const auto* c = dynamic_cast<const CompositeQuadL1*>(s_.reg.get())) {
    out.penalty = c->penalty(w_round_);
  }
  // Scale of the terms of the prediction; each w_j x_j is rescaling invariant
  // for the scale-invariant families, so this is the natural yardstick for
  // comparing predictions across rescaled runs.
  double abs_sum = 0.0;
  for (const auto& e : x.entries()) abs_sum += std::abs(w_round_[e.index] * e.value);
  out.extras["abs_sum"] = abs_sum;
  audit_terms(out, *prev_, w_round_, x, out.z_scale);

  axpy(out.z_scale, x, s_.theta);
  s_.reg->advance_gradient(x.scaled(e.subgrad_scalar), t);
  s_.w = s_.reg->mirror_map(s_.theta);
  prev_.reset();
  return out;
}

// ---------------------------------------------------------------------------

namespace {

bool is_fixed_family(const Regularizer& r) {
  return dynamic_cast<const FixedQuadratic*>(&r) || dynamic_cast<const PNorm*>(&r) ||
         dynamic_cast<const WeightedQNorm*>(&r);
}

}  // namespace

FirstOrderClassifier::FirstOrderClassifier(RegularizerPtr reg, EtaMode mode, double fixed_eta)
    : Learner(std::move(reg)), mode_(mode), fixed_eta_(fixed_eta) {
  if (!is_fixed_family(*s_.reg)) {
    throw std::invalid_argument("FirstOrderClassifier: regularizer must be time-invariant");
  }
  if (mode == EtaMode::fixed && !(fixed_eta >= 0.0 && fixed_eta <= 1.0)) {
    throw std::invalid_argument("FirstOrderClassifier: fixed eta must lie in [0, 1]");
  }
}

json FirstOrderClassifier::params() const {
  json p;
  p["eta_mode"] = std::string(to_string(mode_));
  if (mode_ == EtaMode::fixed) p["eta"] = fixed_eta_;
  p["regularizer"] = s_.reg->to_json();
  return p;
}

double FirstOrderClassifier::begin_round(const SparseVec& x, std::size_t) {
  x_dual_norm_ = s_.reg->dual_norm(x);
  max_dual_norm_ = std::max(max_dual_norm_, x_dual_norm_);
  prediction_ = x.dot(s_.w);
  return prediction_;
}

StepOutcome FirstOrderClassifier::finish_round(const SparseVec& x, double y, std::size_t) {
  StepOutcome out;
  out.prediction = prediction_;
  const double margin = y * prediction_;
  const LossEval e = hinge(margin);
  out.loss = e.value;
  out.mistake = margin <= 0.0;
  out.margin_error = !out.mistake && e.value > 0.0;
  const double beta = s_.reg->strong_convexity();

  double eta = 0.0;
  if (e.value > 0.0) {
    if (out.mistake) {
      eta = 1.0;
    } else if (mode_ == EtaMode::fixed) {
      eta = fixed_eta_;
    } else if (mode_ == EtaMode::pa_optimal) {
      const double xn2 = x_dual_norm_ * x_dual_norm_;
      if (xn2 > 0.0) {
        const double big_x = max_dual_norm_;
        eta = std::clamp((big_x * big_x - beta * margin) / xn2, 0.0, 1.0);
      }
    }
  }
  out.eta = eta;
  out.z_scale = eta * y;
  out.updated = out.z_scale != 0.0 && !x.empty();
  out.extras["x_dual_norm"] = x_dual_norm_;
  out.extras["X"] = max_dual_norm_;
  out.extras["margin"] = margin;

  const RealVec w_t = s_.w;
  audit_terms(out, *s_.reg, w_t, x, out.z_scale);
  if (out.updated) {
    axpy(out.z_scale, x, s_.theta);
    s_.w = s_.reg->mirror_map(s_.theta);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

RegularizerPtr second_order_reg(std::size_t dim, SecondOrderVariant v, double r) {
  if (v == SecondOrderVariant::full) return std::make_unique<FullQuadratic>(dim, r, 1.0);
  return std::make_unique<DiagQuadratic>(dim, r);
}

}  // namespace

SecondOrderClassifier::SecondOrderClassifier(std::size_t dim, SecondOrderVariant variant,
                                             UpdateTrigger trigger, double r)
    : Learner(second_order_reg(dim, variant, r)), variant_(variant), trigger_(trigger), r_(r) {}

json SecondOrderClassifier::params() const {
  json p;
  p["variant"] = std::string(to_string(variant_));
  p["trigger"] = std::string(to_string(trigger_));
  p["r"] = r_;
  return p;
}

double SecondOrderClassifier::begin_round(const SparseVec& x, std::size_t) {
  if (variant_ == SecondOrderVariant::full) {
    const auto& reg = static_cast<const FullQuadratic&>(*s_.reg);
    m_ = reg.matrix().bilinear(s_.theta, x);
    chi_ = reg.matrix().quad_form(x);
    tentative_ = m_ * r_ / (r_ + chi_);
  } else {
    const auto& d = static_cast<const DiagQuadratic&>(*s_.reg).matrix();
    m_ = d.bilinear(s_.theta, x);
    chi_ = d.quad_form(x);
    tentative_ = 0.0;
    for (const auto& e : x.entries()) {
      const double a = d.diag()[e.index];
      tentative_ += s_.theta[e.index] * e.value / (a + e.value * e.value / r_);
    }
  }
  return trigger_ == UpdateTrigger::arow_margin ? m_ : tentative_;
}

StepOutcome SecondOrderClassifier::finish_round(const SparseVec& x, double y, std::size_t t) {
  StepOutcome out;
  out.prediction = trigger_ == UpdateTrigger::arow_margin ? m_ : tentative_;
  const double margin = y * out.prediction;
  const LossEval e = hinge(margin);
  out.loss = e.value;
  out.mistake = margin <= 0.0;
  out.margin_error = !out.mistake && e.value > 0.0;
  out.beta = 1.0;
  out.extras["m"] = m_;
  out.extras["chi"] = chi_;
  out.extras["tentative"] = tentative_;
  out.extras["margin"] = margin;
  if (x.empty()) return out;

  bool update = false;
  switch (trigger_) {
    case UpdateTrigger::omd_margin:
      update = y * tentative_ < 1.0;
      break;
    case UpdateTrigger::arow_margin:
      update = y * m_ < 1.0;
      break;
    case UpdateTrigger::conservative:
      update = out.mistake;
      break;
  }
  if (!update) return out;

  const RegularizerPtr prev = s_.reg->clone();
  s_.reg->advance_instance(x, t);
  const RealVec w_t = s_.reg->mirror_map(s_.theta);
  out.eta = 1.0;
  out.z_scale = y;
  out.updated = true;
  audit_terms(out, *prev, w_t, x, y);
  axpy(y, x, s_.theta);
  s_.w = s_.reg->mirror_map(s_.theta);
  if (variant_ == SecondOrderVariant::full) {
    out.extras["logdet"] = static_cast<const FullQuadratic&>(*s_.reg).matrix().logdet();
  } else {
    out.extras["logdet"] = static_cast<const DiagQuadratic&>(*s_.reg).matrix().logdet();
  }
  return out;
}

// ---------------------------------------------------------------------------

VawRegressor::VawRegressor(std::size_t dim, double a)
    : Learner(std::make_unique<FullQuadratic>(dim, 1.0, a)), a_(a) {}

json VawRegressor::params() const {
  json p;
  p["a"] = a_;
  return p;
}

double VawRegressor::begin_round(const SparseVec& x, std::size_t t) {
  prev_ = s_.reg->clone();
  s_.reg->advance_instance(x, t);
  w_round_ = s_.reg->mirror_map(s_.theta);
  return x.dot(w_round_);
}

StepOutcome VawRegressor::finish_round(const SparseVec& x, double y, std::size_t) {
  StepOutcome out;
  out.prediction = x.dot(w_round_);
  out.loss = square(out.prediction, y).value;
  out.eta = 1.0;
  out.z_scale = y;
  out.updated = y != 0.0 && !x.empty();
  out.extras["x_inv_norm_sq"] = static_cast<const FullQuadratic&>(*s_.reg).matrix().quad_form(x);
  audit_terms(out, *prev_, w_round_, x, y);
  axpy(y, x, s_.theta);
  s_.w = s_.reg->mirror_map(s_.theta);
  prev_.reset();
  return out;
}

// ---------------------------------------------------------------------------

AdaptiveFilter::AdaptiveFilter(RegularizerPtr base)
    : Learner([&] {
        if (!base) throw std::invalid_argument("AdaptiveFilter: null base");
        if (!is_fixed_family(*base)) {
          throw std::invalid_argument("AdaptiveFilter: base regularizer must be time-invariant");
        }
        if (std::abs(base->strong_convexity() - 1.0) > 1e-12) {
          throw std::invalid_argument("AdaptiveFilter: base must be 1-strongly convex");
        }
        return std::make_unique<Scaled>(std::move(base), ScalePolicy::max_dual_norm_sq);
      }()) {}

json AdaptiveFilter::params() const {
  json p;
  p["base"] = static_cast<const Scaled&>(*s_.reg).base().to_json();
  return p;
}

double AdaptiveFilter::begin_round(const SparseVec& x, std::size_t t) {
  prev_ = s_.reg->clone();
  s_.reg->advance_instance(x, t);
  w_round_ = s_.reg->mirror_map(s_.theta);
  return x.dot(w_round_);
}

StepOutcome AdaptiveFilter::finish_round(const SparseVec& x, double y, std::size_t) {
  StepOutcome out;
  out.prediction = x.dot(w_round_);
  const double residual = y - out.prediction;
  out.loss = square(out.prediction, y).value;
  out.eta = 1.0;
  out.z_scale = residual;
  out.updated = residual != 0.0 && !x.empty();
  out.extras["X"] = static_cast<const Scaled&>(*s_.reg).max_dual_norm();
  audit_terms(out, *prev_, w_round_, x, residual);
  axpy(residual, x, s_.theta);
  s_.w = s_.reg->mirror_map(s_.theta);
  prev_.reset();
  return out;
}

// ---------------------------------------------------------------------------

LearnerPtr make_ogd(std::size_t dim, double eta, LossKind loss, QuadraticSchedule schedule,
                    double scale) {
  RegularizerPtr base = std::make_unique<FixedQuadratic>(dim, scale);
  RegularizerPtr reg;
  switch (schedule) {
    case QuadraticSchedule::constant:
      reg = std::move(base);
      break;
    case QuadraticSchedule::sqrt_time:
      reg = std::make_unique<Scaled>(std::move(base), ScalePolicy::sqrt_time);
      break;
    case QuadraticSchedule::linear_time:
      reg = std::make_unique<Scaled>(std::move(base), ScalePolicy::linear_time);
      break;
  }
  json extra;
  extra["schedule"] = std::string(to_string(schedule));
  extra["scale"] = scale;
  return std::make_unique<GradientLearner>("ogd", std::move(reg), loss, eta, extra);
}

LearnerPtr make_composite(std::size_t dim, CompositeQuadL1::Params params, LossKind loss) {
  json extra;
  extra["schedule"] = std::string(to_string(params.schedule));
  extra["scale"] = params.base_scale;
  extra["l1"] = params.l1;
  extra["l2"] = params.l2;
  const double eta = params.eta;
  return std::make_unique<GradientLearner>(
      "composite", std::make_unique<CompositeQuadL1>(dim, params), loss, eta, extra);
}

LearnerPtr make_scale_invariant(std::size_t dim, ScaleInvKind kind, double lipschitz, double eta,
                                LossKind loss) {
  RegularizerPtr reg;
  if (kind == ScaleInvKind::pnorm) {
    reg = std::make_unique<ScaleInvPNorm>(dim, lipschitz);
  } else {
    reg = std::make_unique<ScaleInvDiag>(dim, lipschitz);
  }
  json extra;
  extra["kind"] = std::string(to_string(kind));
  extra["L"] = lipschitz;
  return std::make_unique<GradientLearner>("scale_invariant", std::move(reg), loss, eta, extra);
}

}  // namespace omd
