#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace omd {

using RealVec = std::vector<double>;

/// Raised when two operands disagree on dimension.
class DimensionError : public std::invalid_argument {
 public:
  DimensionError(const std::string& what, std::size_t expected, std::size_t got);
};

void require_dim(const char* what, std::size_t expected, std::size_t got);

/// Sparse vector with strictly increasing indices and no stored zeros.
class SparseVec {
 public:
  struct Entry {
    std::size_t index;
    double value;
    bool operator==(const Entry&) const = default;
  };

  SparseVec() = default;
  explicit SparseVec(std::size_t dim) : dim_(dim) {}
  /// Zero values are dropped; out-of-range or non-increasing indices throw.
  SparseVec(std::size_t dim, std::vector<Entry> entries);

  static SparseVec from_dense(std::span<const double> dense);

  std::size_t dim() const { return dim_; }
  std::size_t nnz() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::span<const Entry> entries() const { return entries_; }

  double dot(std::span<const double> dense) const;
  double squared_norm() const;
  double max_abs() const;
  RealVec to_dense() const;
  SparseVec scaled(double factor) const;
  /// Same entries, larger ambient dimension.
  SparseVec with_dim(std::size_t dim) const;

  bool operator==(const SparseVec&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<Entry> entries_;
};

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> v);
/// v += alpha * x
void axpy(double alpha, const SparseVec& x, std::span<double> v);

/// Incrementally maintained inverse and log-determinant of
///   A_0 = a I,  A_t = A_{t-1} + (1/r) x_t x_t^T.
/// Both A and A^{-1} are stored in full symmetric form.
class RankOneInverse {
 public:
  RankOneInverse(std::size_t dim, double r, double initial_scale = 1.0);

  std::size_t dim() const { return dim_; }
  double r() const { return r_; }
  double logdet() const { return logdet_; }
  const Eigen::MatrixXd& inverse() const { return inv_; }
  const Eigen::MatrixXd& matrix() const { return forward_; }

  /// x^T A^{-1} x
  double quad_form(const SparseVec& x) const;
  double quad_form(std::span<const double> v) const;
  /// theta^T A^{-1} x
  double bilinear(std::span<const double> theta, const SparseVec& x) const;
  /// u^T A u
  double forward_quad_form(std::span<const double> u) const;
  RealVec apply_inverse(std::span<const double> theta) const;
  RealVec apply_forward(std::span<const double> u) const;

  /// Sherman-Morrison step; returns chi = x^T A_{t-1}^{-1} x.
  double update(const SparseVec& x);

  /// Rebuild from stored matrices (deserialization).
  static RankOneInverse from_parts(double r, Eigen::MatrixXd forward, Eigen::MatrixXd inverse,
                                   double logdet);

 private:
  RankOneInverse() = default;
  Eigen::VectorXd inverse_times(const SparseVec& x) const;

  std::size_t dim_ = 0;
  double r_ = 1.0;
  double logdet_ = 0.0;
  Eigen::MatrixXd forward_;
  Eigen::MatrixXd inv_;
};

/// Diagonal of A_t under the same recurrence; A_0 = I.
class DiagInverse {
 public:
  DiagInverse(std::size_t dim, double r);
  DiagInverse(RealVec diag, double r);

  std::size_t dim() const { return diag_.size(); }
  double r() const { return r_; }
  std::span<const double> diag() const { return diag_; }

  double quad_form(const SparseVec& x) const;
  double quad_form(std::span<const double> v) const;
  double bilinear(std::span<const double> theta, const SparseVec& x) const;
  double forward_quad_form(std::span<const double> u) const;
  RealVec apply_inverse(std::span<const double> theta) const;
  double logdet() const;

  void update(const SparseVec& x);

 private:
  RealVec diag_;
  double r_;
};

double quad_form(const RankOneInverse& inv, const SparseVec& x);
RankOneInverse rank_one_update(RankOneInverse inv, const SparseVec& x);
DiagInverse diag_update(DiagInverse d, const SparseVec& x);

}  // namespace omd
