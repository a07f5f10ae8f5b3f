#include "omd/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace omd {

DimensionError::DimensionError(const std::string& what, std::size_t expected, std::size_t got)
    : std::invalid_argument(what + ": dimension mismatch (expected " + std::to_string(expected) +
                            ", got " + std::to_string(got) + ")") {}

void require_dim(const char* what, std::size_t expected, std::size_t got) {
  if (expected != got) throw DimensionError(what, expected, got);
}

SparseVec::SparseVec(std::size_t dim, std::vector<Entry> entries) : dim_(dim) {
  entries_.reserve(entries.size());
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    if (e.index >= dim) {
      throw std::invalid_argument("SparseVec: index " + std::to_string(e.index) +
                                  " out of range for dim " + std::to_string(dim));
    }
    if (k > 0 && e.index <= entries[k - 1].index) {
      throw std::invalid_argument("SparseVec: indices must be strictly increasing");
    }
    if (e.value != 0.0) entries_.push_back(e);
  }
}

SparseVec SparseVec::from_dense(std::span<const double> dense) {
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) entries.push_back({i, dense[i]});
  }
  return SparseVec(dense.size(), std::move(entries));
}

double SparseVec::dot(std::span<const double> dense) const {
  require_dim("SparseVec::dot", dim_, dense.size());
  double s = 0.0;
  for (const auto& e : entries_) s += e.value * dense[e.index];
  return s;
}

double SparseVec::squared_norm() const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.value * e.value;
  return s;
}

double SparseVec::max_abs() const {
  double m = 0.0;
  for (const auto& e : entries_) m = std::max(m, std::abs(e.value));
  return m;
}

RealVec SparseVec::to_dense() const {
  RealVec out(dim_, 0.0);
  for (const auto& e : entries_) out[e.index] = e.value;
  return out;
}

SparseVec SparseVec::scaled(double factor) const {
  SparseVec out(dim_);
  if (factor == 0.0) return out;
  out.entries_ = entries_;
  for (auto& e : out.entries_) e.value *= factor;
  return out;
}

SparseVec SparseVec::with_dim(std::size_t dim) const {
  if (!entries_.empty() && entries_.back().index >= dim) {
    throw DimensionError("SparseVec::with_dim", entries_.back().index + 1, dim);
  }
  SparseVec out(dim);
  out.entries_ = entries_;
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_dim("dot", a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

void axpy(double alpha, const SparseVec& x, std::span<double> v) {
  require_dim("axpy", v.size(), x.dim());
  for (const auto& e : x.entries()) v[e.index] += alpha * e.value;
}

// ---------------------------------------------------------------------------

RankOneInverse::RankOneInverse(std::size_t dim, double r, double initial_scale)
    : dim_(dim), r_(r) {
  if (!(r > 0.0)) throw std::invalid_argument("RankOneInverse: r must be positive");
  if (!(initial_scale > 0.0)) {
    throw std::invalid_argument("RankOneInverse: initial scale must be positive");
  }
  const auto n = static_cast<Eigen::Index>(dim);
  forward_ = Eigen::MatrixXd::Identity(n, n) * initial_scale;
  inv_ = Eigen::MatrixXd::Identity(n, n) / initial_scale;
  logdet_ = static_cast<double>(dim) * std::log(initial_scale);
}

RankOneInverse RankOneInverse::from_parts(double r, Eigen::MatrixXd forward,
                                          Eigen::MatrixXd inverse, double logdet) {
  if (forward.rows() != forward.cols() || inverse.rows() != forward.rows() ||
      inverse.cols() != forward.cols()) {
    throw std::invalid_argument("RankOneInverse: malformed matrices");
  }
  RankOneInverse out;
  out.dim_ = static_cast<std::size_t>(forward.rows());
  out.r_ = r;
  out.logdet_ = logdet;
  out.forward_ = std::move(forward);
  out.inv_ = std::move(inverse);
  return out;
}

Eigen::VectorXd RankOneInverse::inverse_times(const SparseVec& x) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
  for (const auto& e : x.entries()) out += inv_.col(static_cast<Eigen::Index>(e.index)) * e.value;
  return out;
}

double RankOneInverse::quad_form(const SparseVec& x) const {
  require_dim("RankOneInverse::quad_form", dim_, x.dim());
  double s = 0.0;
  for (const auto& a : x.entries()) {
    for (const auto& b : x.entries()) {
      s += a.value * b.value *
           inv_(static_cast<Eigen::Index>(a.index), static_cast<Eigen::Index>(b.index));
    }
  }
  return std::max(s, 0.0);
}

double RankOneInverse::quad_form(std::span<const double> v) const {
  require_dim("RankOneInverse::quad_form", dim_, v.size());
  Eigen::Map<const Eigen::VectorXd> m(v.data(), static_cast<Eigen::Index>(v.size()));
  return std::max(m.dot(inv_ * m), 0.0);
}

double RankOneInverse::bilinear(std::span<const double> theta, const SparseVec& x) const {
  require_dim("RankOneInverse::bilinear", dim_, theta.size());
  require_dim("RankOneInverse::bilinear", dim_, x.dim());
  Eigen::Map<const Eigen::VectorXd> t(theta.data(), static_cast<Eigen::Index>(theta.size()));
  return t.dot(inverse_times(x));
}

double RankOneInverse::forward_quad_form(std::span<const double> u) const {
  require_dim("RankOneInverse::forward_quad_form", dim_, u.size());
  Eigen::Map<const Eigen::VectorXd> m(u.data(), static_cast<Eigen::Index>(u.size()));
  return m.dot(forward_ * m);
}

RealVec RankOneInverse::apply_inverse(std::span<const double> theta) const {
  require_dim("RankOneInverse::apply_inverse", dim_, theta.size());
  Eigen::Map<const Eigen::VectorXd> t(theta.data(), static_cast<Eigen::Index>(theta.size()));
  Eigen::VectorXd w = inv_ * t;
  return RealVec(w.data(), w.data() + w.size());
}

RealVec RankOneInverse::apply_forward(std::span<const double> u) const {
  require_dim("RankOneInverse::apply_forward", dim_, u.size());
  Eigen::Map<const Eigen::VectorXd> m(u.data(), static_cast<Eigen::Index>(u.size()));
  Eigen::VectorXd out = forward_ * m;
  return RealVec(out.data(), out.data() + out.size());
}

double RankOneInverse::update(const SparseVec& x) {
  require_dim("RankOneInverse::update", dim_, x.dim());
  if (x.empty()) return 0.0;
  const Eigen::VectorXd ax = inverse_times(x);
  double chi = 0.0;
  for (const auto& e : x.entries()) chi += e.value * ax(static_cast<Eigen::Index>(e.index));
  chi = std::max(chi, 0.0);
  inv_.noalias() -= (ax * ax.transpose()) / (r_ + chi);
  // Keep exact symmetry; the two triangles drift apart by rounding otherwise.
  inv_ = 0.5 * (inv_ + inv_.transpose()).eval();
  for (const auto& a : x.entries()) {
    for (const auto& b : x.entries()) {
      forward_(static_cast<Eigen::Index>(a.index), static_cast<Eigen::Index>(b.index)) +=
          a.value * b.value / r_;
    }
  }
  logdet_ += std::log1p(chi / r_);
  return chi;
}

// ---------------------------------------------------------------------------

DiagInverse::DiagInverse(std::size_t dim, double r) : diag_(dim, 1.0), r_(r) {
  if (!(r > 0.0)) throw std::invalid_argument("DiagInverse: r must be positive");
}

DiagInverse::DiagInverse(RealVec diag, double r) : diag_(std::move(diag)), r_(r) {
  if (!(r > 0.0)) throw std::invalid_argument("DiagInverse: r must be positive");
  for (double a : diag_) {
    if (!(a >= 1.0)) throw std::invalid_argument("DiagInverse: diagonal entries must be >= 1");
  }
}

double DiagInverse::quad_form(const SparseVec& x) const {
  require_dim("DiagInverse::quad_form", dim(), x.dim());
  double s = 0.0;
  for (const auto& e : x.entries()) s += e.value * e.value / diag_[e.index];
  return s;
}

double DiagInverse::quad_form(std::span<const double> v) const {
  require_dim("DiagInverse::quad_form", dim(), v.size());
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * v[i] / diag_[i];
  return s;
}

double DiagInverse::bilinear(std::span<const double> theta, const SparseVec& x) const {
  require_dim("DiagInverse::bilinear", dim(), theta.size());
  require_dim("DiagInverse::bilinear", dim(), x.dim());
  double s = 0.0;
  for (const auto& e : x.entries()) s += theta[e.index] * e.value / diag_[e.index];
  return s;
}

double DiagInverse::forward_quad_form(std::span<const double> u) const {
  require_dim("DiagInverse::forward_quad_form", dim(), u.size());
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * u[i] * diag_[i];
  return s;
}

RealVec DiagInverse::apply_inverse(std::span<const double> theta) const {
  require_dim("DiagInverse::apply_inverse", dim(), theta.size());
  RealVec w(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) w[i] = theta[i] / diag_[i];
  return w;
}

double DiagInverse::logdet() const {
  double s = 0.0;
  for (double a : diag_) s += std::log(a);
  return s;
}

void DiagInverse::update(const SparseVec& x) {
  require_dim("DiagInverse::update", dim(), x.dim());
  for (const auto& e : x.entries()) diag_[e.index] += e.value * e.value / r_;
}

double quad_form(const RankOneInverse& inv, const SparseVec& x) { return inv.quad_form(x); }

RankOneInverse rank_one_update(RankOneInverse inv, const SparseVec& x) {
  inv.update(x);
  return inv;
}

DiagInverse diag_update(DiagInverse d, const SparseVec& x) {
  d.update(x);
  return d;
}

}  // namespace omd
