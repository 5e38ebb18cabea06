#include "slmdp/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace slmdp {

Vec normalize(const Vec& x) {
  const double n = x.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("degenerate anchor");
  }
  return x / n;
}

ProjectionSplit project_onto_anchor(const Vec& x, const Vec& anchor) {
  const Vec unit = normalize(anchor);
  ProjectionSplit split;
  split.parallel = unit.dot(x) * unit;
  split.orthogonal = x - split.parallel;
  return split;
}

RidgeState::RidgeState(int dim, double lambda)
    : gram_(Mat::Identity(dim, dim) * lambda),
      target_(Vec::Zero(dim)),
      lambda_(lambda) {
  if (dim <= 0) throw std::invalid_argument("ridge dim must be positive");
  if (!(lambda > 0.0)) throw std::invalid_argument("ridge lambda must be positive");
}

void RidgeState::update(const Vec& x, double y) {
  if (!x.allFinite() || !std::isfinite(y)) {
    throw std::invalid_argument("non-finite ridge update");
  }
  gram_.selfadjointView<Eigen::Lower>().rankUpdate(x);
  gram_.triangularView<Eigen::StrictlyUpper>() = gram_.transpose();
  target_ += y * x;
  ++count_;
  fresh_ = false;
}

void RidgeState::update_batch(const Mat& gram_add, const Vec& target_add, int count_add) {
  if (!gram_add.allFinite() || !target_add.allFinite() || count_add < 0) {
    throw std::invalid_argument("non-finite ridge batch update");
  }
  gram_ += gram_add;
  target_ += target_add;
  count_ += count_add;
  fresh_ = false;
}

const Eigen::LLT<Mat>& RidgeState::factor() const {
  if (!fresh_) {
    llt_.compute(gram_);
    if (llt_.info() != Eigen::Success) {
      throw std::runtime_error("ridge gram not positive definite");
    }
    // Cheap condition estimate from the Cholesky diagonal.
    const Vec diag = llt_.matrixLLT().diagonal();
    const double dmax = diag.maxCoeff();
    const double dmin = diag.minCoeff();
    if (!(dmin > 0.0) || (dmax / dmin) * (dmax / dmin) > 1e12) {
      throw std::runtime_error("ridge gram numerically singular");
    }
    fresh_ = true;
  }
  return llt_;
}

Vec RidgeState::solve() const { return solve_for(target_); }

Vec RidgeState::solve_for(const Vec& rhs) const { return factor().solve(rhs); }

double RidgeState::inv_weighted_norm(const Vec& x) const {
  // x^T A^{-1} x = ||L^{-1} x||^2 with A = L L^T.
  return whiten(x).norm();
}

Vec RidgeState::whiten(const Vec& x) const { return factor().matrixL().solve(x); }

double RidgeState::weighted_norm(const Vec& x) const {
  return std::sqrt(x.dot(gram_.selfadjointView<Eigen::Lower>() * x));
}

}  // namespace slmdp
