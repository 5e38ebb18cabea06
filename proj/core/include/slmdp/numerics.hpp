#pragma once

#include <Eigen/Dense>

namespace slmdp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Decomposition of a vector against a one-dimensional anchor subspace.
/// parallel + orthogonal == input, <orthogonal, anchor> == 0.
struct ProjectionSplit {
  Vec parallel;
  Vec orthogonal;
};

/// x / ||x||. Throws std::invalid_argument("degenerate anchor") on the zero vector.
Vec normalize(const Vec& x);

ProjectionSplit project_onto_anchor(const Vec& x, const Vec& anchor);

/// Regularized least-squares accumulator:
///   gram   = lambda*I + sum_i x_i x_i^T
///   target = sum_i y_i x_i
/// Solves and inverse-Gram norms go through a lazily refreshed Cholesky
/// factorization, so a burst of updates costs one refactorization.
class RidgeState {
 public:
  RidgeState(int dim, double lambda);

  void update(const Vec& x, double y);
  /// Folds in pre-aggregated data: gram += gram_add, target += target_add.
  void update_batch(const Mat& gram_add, const Vec& target_add, int count_add);

  /// gram^{-1} * target.
  Vec solve() const;
  /// gram^{-1} * rhs for an externally assembled right-hand side.
  Vec solve_for(const Vec& rhs) const;
  /// sqrt(x^T gram^{-1} x).
  double inv_weighted_norm(const Vec& x) const;
  /// sqrt(x^T gram x).
  double weighted_norm(const Vec& x) const;
  /// L^{-1} x for gram = L L^T, so that inv_weighted_norm(x) == whiten(x).norm().
  Vec whiten(const Vec& x) const;

  const Mat& gram() const { return gram_; }
  const Vec& target() const { return target_; }
  double lambda() const { return lambda_; }
  int dim() const { return static_cast<int>(gram_.rows()); }
  int count() const { return count_; }

 private:
  const Eigen::LLT<Mat>& factor() const;

  Mat gram_;
  Vec target_;
  double lambda_;
  int count_ = 0;
  mutable Eigen::LLT<Mat> llt_;
  mutable bool fresh_ = false;
};

}  // namespace slmdp
