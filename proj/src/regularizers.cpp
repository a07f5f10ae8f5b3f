#include "omd/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace omd {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// (sum_i v_i^p)^(1/p) for v_i >= 0, scaled by the max to avoid overflow.
double lp_of_abs(std::span<const double> v, double p) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  if (m == 0.0) return 0.0;
  double s = 0.0;
  for (double x : v) {
    if (x > 0.0) s += std::pow(x / m, p);
  }
  return m * std::pow(s, 1.0 / p);
}

// d/dv_j of 1/2 ||v||_p^2 at v_j >= 0 given N = ||v||_p.
double half_sq_grad(double vj, double n, double p) {
  if (vj == 0.0 || n == 0.0) return 0.0;
  return n * std::pow(vj / n, p - 1.0);
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

bool all_zero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

void require_exponent(const char* what, double e) {
  if (!(e > 1.0 && e <= 2.0)) {
    throw std::invalid_argument(std::string(what) + ": exponent must lie in (1, 2]");
  }
}

RealVec abs_scaled(std::span<const double> v, std::span<const double> scale) {
  RealVec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::abs(v[i]) * scale[i];
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  if (!j.is_array() || j.size() != dim) throw std::invalid_argument("matrix: bad row count");
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (!row.is_array() || row.size() != dim) throw std::invalid_argument("matrix: bad row");
    for (Eigen::Index k = 0; k < n; ++k) m(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
  }
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------

double Regularizer::value(std::span<const double> w) const {
  require_dim("Regularizer::value", dim_, w.size());
  return do_value(w);
}

double Regularizer::conjugate(std::span<const double> theta) const {
  require_dim("Regularizer::conjugate", dim_, theta.size());
  return do_conjugate(theta);
}

RealVec Regularizer::mirror_map(std::span<const double> theta) const {
  require_dim("Regularizer::mirror_map", dim_, theta.size());
  return do_mirror_map(theta);
}

double Regularizer::norm(std::span<const double> v) const {
  require_dim("Regularizer::norm", dim_, v.size());
  return do_norm(v);
}

double Regularizer::dual_norm(std::span<const double> z) const {
  require_dim("Regularizer::dual_norm", dim_, z.size());
  if (all_zero(z)) return 0.0;
  return do_dual_norm(z);
}

double Regularizer::dual_norm(const SparseVec& z) const {
  require_dim("Regularizer::dual_norm", dim_, z.dim());
  if (z.empty()) return 0.0;
  const RealVec dense = z.to_dense();
  return do_dual_norm(dense);
}

RealVec Regularizer::subgradient(std::span<const double> w) const {
  require_dim("Regularizer::subgradient", dim_, w.size());
  return do_subgradient(w);
}

void Regularizer::advance_instance(const SparseVec& x, std::size_t t) {
  require_dim("Regularizer::advance_instance", dim_, x.dim());
  if (t <= step_) {
    throw ProtocolError("advance_instance: round " + std::to_string(t) +
                        " is not after step " + std::to_string(step_));
  }
  on_instance(x);
  step_ = t;
}

void Regularizer::advance_gradient(const SparseVec& g, std::size_t t) {
  require_dim("Regularizer::advance_gradient", dim_, g.dim());
  if (t != step_ || t <= gradient_step_) {
    throw ProtocolError("advance_gradient: round " + std::to_string(t) +
                        " out of order (instance step " + std::to_string(step_) +
                        ", gradient step " + std::to_string(gradient_step_) + ")");
  }
  on_gradient(g);
  gradient_step_ = t;
}

json Regularizer::to_json() const {
  json out;
  out["kind"] = std::string(kind());
  out["dim"] = dim_;
  out["step"] = step_;
  out["gradient_step"] = gradient_step_;
  state_to_json(out);
  return out;
}

// ---------------------------------------------------------------------------

FixedQuadratic::FixedQuadratic(std::size_t dim, double scale) : Regularizer(dim), scale_(scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("FixedQuadratic: scale must be positive");
}

double FixedQuadratic::do_value(std::span<const double> w) const {
  return 0.5 * scale_ * squared_norm(w);
}

double FixedQuadratic::do_conjugate(std::span<const double> theta) const {
  return squared_norm(theta) / (2.0 * scale_);
}

RealVec FixedQuadratic::do_mirror_map(std::span<const double> theta) const {
  RealVec w(theta.begin(), theta.end());
  for (double& v : w) v /= scale_;
  return w;
}

double FixedQuadratic::do_norm(std::span<const double> v) const { return std::sqrt(squared_norm(v)); }

double FixedQuadratic::do_dual_norm(std::span<const double> z) const {
  return std::sqrt(squared_norm(z));
}

RealVec FixedQuadratic::do_subgradient(std::span<const double> w) const {
  RealVec g(w.begin(), w.end());
  for (double& v : g) v *= scale_;
  return g;
}

void FixedQuadratic::state_to_json(json& out) const { out["scale"] = scale_; }

// ---------------------------------------------------------------------------

PNorm::PNorm(std::size_t dim, double p) : Regularizer(dim), p_(p), q_(p / (p - 1.0)) {
  require_exponent("PNorm", p);
}

double PNorm::do_value(std::span<const double> w) const {
  const double n = do_norm(w);
  return 0.5 * n * n;
}

double PNorm::do_conjugate(std::span<const double> theta) const {
  const double n = do_dual_norm(theta);
  return 0.5 * n * n;
}

RealVec PNorm::do_mirror_map(std::span<const double> theta) const {
  const RealVec a = abs_scaled(theta, RealVec(theta.size(), 1.0));
  const double n = lp_of_abs(a, q_);
  RealVec w(theta.size());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = sign(theta[j]) * half_sq_grad(a[j], n, q_);
  return w;
}

double PNorm::do_norm(std::span<const double> v) const {
  RealVec a(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) a[i] = std::abs(v[i]);
  return lp_of_abs(a, p_);
}

double PNorm::do_dual_norm(std::span<const double> z) const {
  RealVec a(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) a[i] = std::abs(z[i]);
  return lp_of_abs(a, q_);
}

RealVec PNorm::do_subgradient(std::span<const double> w) const {
  RealVec a(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) a[i] = std::abs(w[i]);
  const double n = lp_of_abs(a, p_);
  RealVec g(w.size());
  for (std::size_t j = 0; j < g.size(); ++j) g[j] = sign(w[j]) * half_sq_grad(a[j], n, p_);
  return g;
}

void PNorm::state_to_json(json& out) const { out["p"] = p_; }

// ---------------------------------------------------------------------------

WeightedQNorm::WeightedQNorm(double q, RealVec weights)
    : Regularizer(weights.size()), q_(q), p_(q / (q - 1.0)), weights_(std::move(weights)) {
  require_exponent("WeightedQNorm", q);
  primal_scale_.resize(weights_.size());
  dual_scale_.resize(weights_.size());
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const double a = weights_[i];
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw std::invalid_argument("WeightedQNorm: weights must be positive and finite");
    }
    primal_scale_[i] = std::pow(a, 1.0 / q_);
    dual_scale_[i] = std::pow(a, (1.0 - p_) / p_);
  }
}

double WeightedQNorm::do_value(std::span<const double> w) const {
  const double n = do_norm(w);
  return n * n / (2.0 * (q_ - 1.0));
}

double WeightedQNorm::do_conjugate(std::span<const double> theta) const {
  const double n = do_dual_norm(theta);
  return n * n / (2.0 * (p_ - 1.0));
}

RealVec WeightedQNorm::do_mirror_map(std::span<const double> theta) const {
  const RealVec v = abs_scaled(theta, dual_scale_);
  const double n = lp_of_abs(v, p_);
  RealVec w(theta.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    w[j] = sign(theta[j]) * half_sq_grad(v[j], n, p_) * dual_scale_[j] / (p_ - 1.0);
  }
  return w;
}

double WeightedQNorm::do_norm(std::span<const double> v) const {
  return lp_of_abs(abs_scaled(v, primal_scale_), q_);
}

double WeightedQNorm::do_dual_norm(std::span<const double> z) const {
  return lp_of_abs(abs_scaled(z, dual_scale_), p_);
}

RealVec WeightedQNorm::do_subgradient(std::span<const double> w) const {
  const RealVec v = abs_scaled(w, primal_scale_);
  const double n = lp_of_abs(v, q_);
  RealVec g(w.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    g[j] = sign(w[j]) * half_sq_grad(v[j], n, q_) * primal_scale_[j] / (q_ - 1.0);
  }
  return g;
}

void WeightedQNorm::state_to_json(json& out) const {
  out["q"] = q_;
  out["weights"] = weights_;
}

// ---------------------------------------------------------------------------

FullQuadratic::FullQuadratic(std::size_t dim, double r, double initial_scale)
    : Regularizer(dim), inv_(dim, r, initial_scale) {}

FullQuadratic::FullQuadratic(RankOneInverse state) : Regularizer(state.dim()), inv_(std::move(state)) {}

double FullQuadratic::do_value(std::span<const double> w) const {
  return 0.5 * inv_.forward_quad_form(w);
}

double FullQuadratic::do_conjugate(std::span<const double> theta) const {
  return 0.5 * inv_.quad_form(theta);
}

RealVec FullQuadratic::do_mirror_map(std::span<const double> theta) const {
  return inv_.apply_inverse(theta);
}

double FullQuadratic::do_norm(std::span<const double> v) const {
  return std::sqrt(std::max(inv_.forward_quad_form(v), 0.0));
}

double FullQuadratic::do_dual_norm(std::span<const double> z) const {
  return std::sqrt(inv_.quad_form(z));
}

RealVec FullQuadratic::do_subgradient(std::span<const double> w) const {
  return inv_.apply_forward(w);
}

void FullQuadratic::on_instance(const SparseVec& x) { last_chi_ = inv_.update(x); }

void FullQuadratic::state_to_json(json& out) const {
  out["r"] = inv_.r();
  out["logdet"] = inv_.logdet();
  out["last_chi"] = last_chi_;
  out["matrix"] = matrix_to_json(inv_.matrix());
  out["inverse"] = matrix_to_json(inv_.inverse());
}

// ---------------------------------------------------------------------------

DiagQuadratic::DiagQuadratic(std::size_t dim, double r) : Regularizer(dim), diag_(dim, r) {}

DiagQuadratic::DiagQuadratic(DiagInverse state) : Regularizer(state.dim()), diag_(std::move(state)) {}

double DiagQuadratic::do_value(std::span<const double> w) const {
  return 0.5 * diag_.forward_quad_form(w);
}

double DiagQuadratic::do_conjugate(std::span<const double> theta) const {
  return 0.5 * diag_.quad_form(theta);
}

RealVec DiagQuadratic::do_mirror_map(std::span<const double> theta) const {
  return diag_.apply_inverse(theta);
}

double DiagQuadratic::do_norm(std::span<const double> v) const {
  return std::sqrt(diag_.forward_quad_form(v));
}

double DiagQuadratic::do_dual_norm(std::span<const double> z) const {
  return std::sqrt(diag_.quad_form(z));
}

RealVec DiagQuadratic::do_subgradient(std::span<const double> w) const {
  RealVec g(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) g[i] = diag_.diag()[i] * w[i];
  return g;
}

void DiagQuadratic::on_instance(const SparseVec& x) { diag_.update(x); }

void DiagQuadratic::state_to_json(json& out) const {
  out["r"] = diag_.r();
  out["diag"] = RealVec(diag_.diag().begin(), diag_.diag().end());
}

// ---------------------------------------------------------------------------

void FeatureRange::observe(const SparseVec& x) {
  for (const auto& e : x.entries()) b[e.index] = std::max(b[e.index], std::abs(e.value));
  max_support = std::max(max_support, x.nnz());
}

ScaleInvPNorm::ScaleInvPNorm(std::size_t dim, double lipschitz)
    : Regularizer(dim), lipschitz_(lipschitz) {
  if (!(lipschitz > 0.0) || !std::isfinite(lipschitz)) {
    throw std::invalid_argument("ScaleInvPNorm: L must be positive and finite");
  }
  range_.b.assign(dim, 0.0);
}

double ScaleInvPNorm::p() const {
  if (range_.max_support == 0) return 2.0;
  return std::max(2.0 * std::log(static_cast<double>(range_.max_support)), 2.0);
}

double ScaleInvPNorm::q() const {
  const double pp = p();
  return pp / (pp - 1.0);
}

double ScaleInvPNorm::beta() const {
  return std::sqrt(std::numbers::e * lipschitz_ * lipschitz_ * (p() - 1.0) + grad_sum_);
}

double ScaleInvPNorm::do_value(std::span<const double> w) const {
  const double qq = q();
  const double n = lp_of_abs(abs_scaled(w, range_.b), qq);
  return 0.5 * beta() * n * n;
}

double ScaleInvPNorm::do_conjugate(std::span<const double> theta) const {
  RealVec v(theta.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (range_.b[i] > 0.0) {
      v[i] = std::abs(theta[i]) / range_.b[i];
    } else if (theta[i] != 0.0) {
      return kInf;
    }
  }
  const double n = lp_of_abs(v, p());
  return n * n / (2.0 * beta());
}

RealVec ScaleInvPNorm::do_mirror_map(std::span<const double> theta) const {
  const double pp = p();
  RealVec v(theta.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (range_.b[i] > 0.0) v[i] = std::abs(theta[i]) / range_.b[i];
  }
  const double n = lp_of_abs(v, pp);
  const double beta_t = beta();
  RealVec w(theta.size(), 0.0);
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (range_.b[j] > 0.0) w[j] = sign(theta[j]) * half_sq_grad(v[j], n, pp) / (range_.b[j] * beta_t);
  }
  return w;
}

double ScaleInvPNorm::do_norm(std::span<const double> v) const {
  const double qq = q();
  return std::sqrt(qq - 1.0) * lp_of_abs(abs_scaled(v, range_.b), qq);
}

double ScaleInvPNorm::do_dual_norm(std::span<const double> z) const {
  RealVec v(z.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (range_.b[i] > 0.0) {
      v[i] = std::abs(z[i]) / range_.b[i];
    } else if (z[i] != 0.0) {
      return kInf;
    }
  }
  const double pp = p();
  return std::sqrt(pp - 1.0) * lp_of_abs(v, pp);
}

RealVec ScaleInvPNorm::do_subgradient(std::span<const double> w) const {
  const double qq = q();
  const RealVec v = abs_scaled(w, range_.b);
  const double n = lp_of_abs(v, qq);
  const double beta_t = beta();
  RealVec g(w.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    g[j] = sign(w[j]) * beta_t * half_sq_grad(v[j], n, qq) * range_.b[j];
  }
  return g;
}

void ScaleInvPNorm::on_instance(const SparseVec& x) {
  grad_sum_ += pending_;
  pending_ = 0.0;
  range_.observe(x);
}

void ScaleInvPNorm::on_gradient(const SparseVec& g) {
  const double pp = p();
  RealVec v(dim(), 0.0);
  for (const auto& e : g.entries()) {
    if (!(range_.b[e.index] > 0.0)) {
      throw std::invalid_argument("ScaleInvPNorm: gradient on a coordinate never observed");
    }
    v[e.index] = std::abs(e.value) / range_.b[e.index];
  }
  const double n = lp_of_abs(v, pp);
  pending_ = (pp - 1.0) * n * n;
}

void ScaleInvPNorm::state_to_json(json& out) const {
  out["L"] = lipschitz_;
  out["b"] = range_.b;
  out["m"] = range_.max_support;
  out["grad_sum"] = grad_sum_;
  out["pending"] = pending_;
}

// ---------------------------------------------------------------------------

ScaleInvDiag::ScaleInvDiag(std::size_t dim, double lipschitz)
    : Regularizer(dim), lipschitz_(lipschitz), grad_stats_(dim, 0.0), pending_(dim, 0.0) {
  if (!(lipschitz > 0.0) || !std::isfinite(lipschitz)) {
    throw std::invalid_argument("ScaleInvDiag: L must be positive and finite");
  }
  range_.b.assign(dim, 0.0);
}

double ScaleInvDiag::curvature(std::size_t i) const {
  const double b = range_.b[i];
  return std::sqrt(static_cast<double>(dim())) * b * b *
         std::sqrt(lipschitz_ * lipschitz_ + grad_stats_[i]);
}

double ScaleInvDiag::do_value(std::span<const double> w) const {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += curvature(i) * w[i] * w[i];
  return 0.5 * s;
}

double ScaleInvDiag::do_conjugate(std::span<const double> theta) const {
  double s = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (theta[i] == 0.0) continue;
    const double c = curvature(i);
    if (!(c > 0.0)) return kInf;
    s += theta[i] * theta[i] / c;
  }
  return 0.5 * s;
}

RealVec ScaleInvDiag::do_mirror_map(std::span<const double> theta) const {
  RealVec w(theta.size(), 0.0);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double c = curvature(i);
    if (c > 0.0) w[i] = theta[i] / c;
  }
  return w;
}

double ScaleInvDiag::do_norm(std::span<const double> v) const { return std::sqrt(2.0 * do_value(v)); }

double ScaleInvDiag::do_dual_norm(std::span<const double> z) const {
  return std::sqrt(2.0 * do_conjugate(z));
}

RealVec ScaleInvDiag::do_subgradient(std::span<const double> w) const {
  RealVec g(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) g[i] = curvature(i) * w[i];
  return g;
}

void ScaleInvDiag::on_instance(const SparseVec& x) {
  for (std::size_t i = 0; i < dim(); ++i) {
    grad_stats_[i] += pending_[i];
    pending_[i] = 0.0;
  }
  range_.observe(x);
}

void ScaleInvDiag::on_gradient(const SparseVec& g) {
  for (const auto& e : g.entries()) {
    const double b = range_.b[e.index];
    if (!(b > 0.0)) {
      throw std::invalid_argument("ScaleInvDiag: gradient on a coordinate never observed");
    }
    const double r = e.value / b;
    pending_[e.index] = r * r;
  }
}

void ScaleInvDiag::state_to_json(json& out) const {
  out["L"] = lipschitz_;
  out["b"] = range_.b;
  out["m"] = range_.max_support;
  out["grad_stats"] = grad_stats_;
  out["pending"] = pending_;
}

// ---------------------------------------------------------------------------

QuadSchedule parse_quad_schedule(std::string_view name) {
  if (name == "constant") return QuadSchedule::constant;
  if (name == "sqrt") return QuadSchedule::sqrt_time;
  if (name == "none") return QuadSchedule::none;
  throw std::invalid_argument("unknown quadratic schedule '" + std::string(name) + "'");
}

std::string_view to_string(QuadSchedule s) {
  switch (s) {
    case QuadSchedule::constant:
      return "constant";
    case QuadSchedule::sqrt_time:
      return "sqrt";
    case QuadSchedule::none:
      return "none";
  }
  return "?";
}

CompositeQuadL1::CompositeQuadL1(std::size_t dim, Params params)
    : Regularizer(dim), params_(params) {
  if (!(params.eta > 0.0)) throw std::invalid_argument("CompositeQuadL1: eta must be positive");
  if (params.l1 < 0.0 || params.l2 < 0.0) {
    throw std::invalid_argument("CompositeQuadL1: penalty weights must be nonnegative");
  }
  if (params.schedule != QuadSchedule::none && !(params.base_scale > 0.0)) {
    throw std::invalid_argument("CompositeQuadL1: base scale must be positive");
  }
  if (params.schedule == QuadSchedule::none && !(params.l2 > 0.0)) {
    throw std::invalid_argument("CompositeQuadL1: schedule 'none' needs a strongly convex penalty");
  }
}

double CompositeQuadL1::curvature() const {
  const double t = static_cast<double>(step());
  double phi = 0.0;
  switch (params_.schedule) {
    case QuadSchedule::constant:
      phi = 1.0;
      break;
    case QuadSchedule::sqrt_time:
      phi = std::sqrt(t);
      break;
    case QuadSchedule::none:
      phi = 0.0;
      break;
  }
  return params_.base_scale * phi + params_.eta * t * params_.l2;
}

double CompositeQuadL1::threshold() const {
  return params_.eta * static_cast<double>(step()) * params_.l1;
}

double CompositeQuadL1::penalty(std::span<const double> w) const {
  require_dim("CompositeQuadL1::penalty", dim(), w.size());
  double l1 = 0.0;
  for (double v : w) l1 += std::abs(v);
  return 0.5 * params_.l2 * squared_norm(w) + params_.l1 * l1;
}

double CompositeQuadL1::quadratic_part(std::span<const double> u) const {
  require_dim("CompositeQuadL1::quadratic_part", dim(), u.size());
  return 0.5 * (curvature() - params_.eta * static_cast<double>(step()) * params_.l2) *
         squared_norm(u);
}

double CompositeQuadL1::do_value(std::span<const double> w) const {
  double l1 = 0.0;
  for (double v : w) l1 += std::abs(v);
  return 0.5 * curvature() * squared_norm(w) + threshold() * l1;
}

double CompositeQuadL1::do_conjugate(std::span<const double> theta) const {
  const double kappa = curvature();
  const double tau = threshold();
  double s = 0.0;
  for (double th : theta) {
    const double e = std::max(std::abs(th) - tau, 0.0);
    if (e == 0.0) continue;
    if (!(kappa > 0.0)) return kInf;
    s += e * e;
  }
  return s == 0.0 ? 0.0 : s / (2.0 * kappa);
}

RealVec CompositeQuadL1::do_mirror_map(std::span<const double> theta) const {
  const double kappa = curvature();
  const double tau = threshold();
  RealVec w(theta.size(), 0.0);
  if (!(kappa > 0.0)) return w;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double e = std::max(std::abs(theta[i]) - tau, 0.0);
    w[i] = sign(theta[i]) * e / kappa;
  }
  return w;
}

double CompositeQuadL1::do_norm(std::span<const double> v) const { return std::sqrt(squared_norm(v)); }

double CompositeQuadL1::do_dual_norm(std::span<const double> z) const {
  return std::sqrt(squared_norm(z));
}

RealVec CompositeQuadL1::do_subgradient(std::span<const double> w) const {
  const double kappa = curvature();
  const double tau = threshold();
  RealVec g(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) g[i] = kappa * w[i] + tau * sign(w[i]);
  return g;
}

void CompositeQuadL1::state_to_json(json& out) const {
  out["schedule"] = std::string(to_string(params_.schedule));
  out["base_scale"] = params_.base_scale;
  out["eta"] = params_.eta;
  out["l1"] = params_.l1;
  out["l2"] = params_.l2;
}

// ---------------------------------------------------------------------------

ScalePolicy parse_scale_policy(std::string_view name) {
  if (name == "sqrt_time") return ScalePolicy::sqrt_time;
  if (name == "linear_time") return ScalePolicy::linear_time;
  if (name == "max_dual_norm_sq") return ScalePolicy::max_dual_norm_sq;
  throw std::invalid_argument("unknown scale policy '" + std::string(name) + "'");
}

std::string_view to_string(ScalePolicy s) {
  switch (s) {
    case ScalePolicy::sqrt_time:
      return "sqrt_time";
    case ScalePolicy::linear_time:
      return "linear_time";
    case ScalePolicy::max_dual_norm_sq:
      return "max_dual_norm_sq";
  }
  return "?";
}

Scaled::Scaled(RegularizerPtr base, ScalePolicy policy)
    : Regularizer(base ? base->dim() : 0), base_(std::move(base)), policy_(policy) {
  if (!base_) throw std::invalid_argument("Scaled: null base");
}

Scaled::Scaled(const Scaled& other)
    : Regularizer(other),
      base_(other.base_->clone()),
      policy_(other.policy_),
      max_dual_norm_(other.max_dual_norm_) {}

std::string_view Scaled::kind() const { return "scaled"; }

double Scaled::scale() const {
  const double t = static_cast<double>(step());
  switch (policy_) {
    case ScalePolicy::sqrt_time:
      return std::sqrt(t);
    case ScalePolicy::linear_time:
      return t;
    case ScalePolicy::max_dual_norm_sq:
      return max_dual_norm_ * max_dual_norm_;
  }
  return 0.0;
}

double Scaled::do_value(std::span<const double> w) const { return scale() * base_->value(w); }

double Scaled::do_conjugate(std::span<const double> theta) const {
  const double s = scale();
  if (!(s > 0.0)) return all_zero(theta) ? 0.0 : kInf;
  RealVec th(theta.begin(), theta.end());
  for (double& v : th) v /= s;
  return s * base_->conjugate(th);
}

RealVec Scaled::do_mirror_map(std::span<const double> theta) const {
  const double s = scale();
  if (!(s > 0.0)) return RealVec(theta.size(), 0.0);
  RealVec th(theta.begin(), theta.end());
  for (double& v : th) v /= s;
  return base_->mirror_map(th);
}

double Scaled::do_strong_convexity() const { return scale() * base_->strong_convexity(); }

double Scaled::do_norm(std::span<const double> v) const { return base_->norm(v); }

double Scaled::do_dual_norm(std::span<const double> z) const { return base_->dual_norm(z); }

RealVec Scaled::do_subgradient(std::span<const double> w) const {
  RealVec g = base_->subgradient(w);
  const double s = scale();
  for (double& v : g) v *= s;
  return g;
}

void Scaled::on_instance(const SparseVec& x) {
  if (policy_ == ScalePolicy::max_dual_norm_sq) {
    max_dual_norm_ = std::max(max_dual_norm_, base_->dual_norm(x));
  }
}

void Scaled::state_to_json(json& out) const {
  out["policy"] = std::string(to_string(policy_));
  out["max_dual_norm"] = max_dual_norm_;
  out["base"] = base_->to_json();
}

// ---------------------------------------------------------------------------

namespace {

std::size_t get_size(const json& j, const char* key) { return j.at(key).get<std::size_t>(); }
double get_double(const json& j, const char* key) { return j.at(key).get<double>(); }

RealVec get_vec(const json& j, const char* key, std::size_t dim) {
  RealVec v = j.at(key).get<RealVec>();
  if (v.size() != dim) throw DimensionError(std::string("regularizer field ") + key, dim, v.size());
  return v;
}

}  // namespace

// Restores a regularizer, including protocol counters, from to_json() output.
RegularizerPtr regularizer_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("regularizer: expected an object");
  const std::string kind = j.at("kind").get<std::string>();
  const std::size_t dim = get_size(j, "dim");
  const std::size_t step = get_size(j, "step");
  const std::size_t gstep = get_size(j, "gradient_step");

  RegularizerPtr out;
  if (kind == "fixed_quadratic") {
    out = std::make_unique<FixedQuadratic>(dim, get_double(j, "scale"));
  } else if (kind == "pnorm") {
    out = std::make_unique<PNorm>(dim, get_double(j, "p"));
  } else if (kind == "weighted_qnorm") {
    out = std::make_unique<WeightedQNorm>(get_double(j, "q"), get_vec(j, "weights", dim));
  } else if (kind == "growing_quadratic_full") {
    auto r = std::make_unique<FullQuadratic>(RankOneInverse::from_parts(
        get_double(j, "r"), matrix_from_json(j.at("matrix"), dim),
        matrix_from_json(j.at("inverse"), dim), get_double(j, "logdet")));
    r->last_chi_ = get_double(j, "last_chi");
    out = std::move(r);
  } else if (kind == "growing_quadratic_diag") {
    out = std::make_unique<DiagQuadratic>(DiagInverse(get_vec(j, "diag", dim), get_double(j, "r")));
  } else if (kind == "scale_inv_pnorm") {
    auto r = std::make_unique<ScaleInvPNorm>(dim, get_double(j, "L"));
    r->range_.b = get_vec(j, "b", dim);
    r->range_.max_support = get_size(j, "m");
    r->grad_sum_ = get_double(j, "grad_sum");
    r->pending_ = get_double(j, "pending");
    out = std::move(r);
  } else if (kind == "scale_inv_diag") {
    auto r = std::make_unique<ScaleInvDiag>(dim, get_double(j, "L"));
    r->range_.b = get_vec(j, "b", dim);
    r->range_.max_support = get_size(j, "m");
    r->grad_stats_ = get_vec(j, "grad_stats", dim);
    r->pending_ = get_vec(j, "pending", dim);
    out = std::move(r);
  } else if (kind == "composite_quad_l1") {
    CompositeQuadL1::Params p;
    p.schedule = parse_quad_schedule(j.at("schedule").get<std::string>());
    p.base_scale = get_double(j, "base_scale");
    p.eta = get_double(j, "eta");
    p.l1 = get_double(j, "l1");
    p.l2 = get_double(j, "l2");
    out = std::make_unique<CompositeQuadL1>(dim, p);
  } else if (kind == "scaled") {
    auto r = std::make_unique<Scaled>(regularizer_from_json(j.at("base")),
                                      parse_scale_policy(j.at("policy").get<std::string>()));
    r->max_dual_norm_ = get_double(j, "max_dual_norm");
    out = std::move(r);
  } else {
    throw std::invalid_argument("regularizer: unknown kind '" + kind + "'");
  }
  require_dim("regularizer_from_json", dim, out->dim());
  out->restore_steps(step, gstep);
  return out;
}

double value(const Regularizer& f, std::span<const double> w) { return f.value(w); }
double conjugate(const Regularizer& f, std::span<const double> theta) { return f.conjugate(theta); }
RealVec mirror_map(const Regularizer& f, std::span<const double> theta) { return f.mirror_map(theta); }
double strong_convexity(const Regularizer& f) { return f.strong_convexity(); }
double dual_norm(const Regularizer& f, std::span<const double> z) { return f.dual_norm(z); }

}  // namespace omd
