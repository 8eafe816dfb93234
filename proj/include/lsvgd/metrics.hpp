#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "lsvgd/error.hpp"
#include "lsvgd/kernel.hpp"

namespace lsvgd {

/// Square root of the biased (V-statistic) MMD^2 estimate between row-sample sets a and b.
inline double mmd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Bandwidth h) {
  detail::require(a.rows() >= 1 && b.rows() >= 1, "mmd needs non-empty sample sets");
  detail::check_same_dim(a.cols(), b.cols());
  const double kaa = rbf_gram(a, a, h).mean();
  const double kbb = rbf_gram(b, b, h).mean();
  const double kab = rbf_gram(a, b, h).mean();
  return std::sqrt(std::max(0.0, kaa + kbb - 2.0 * kab));
}

/// MMD with the bandwidth taken from the reference set b by the median heuristic.
inline double mmd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& reference) {
  return mmd(a, reference, median_bandwidth(reference));
}

/// ||estimate - truth||_2 / ||truth||_2 over matching grid values.
inline double rel_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
  detail::check_same_dim(estimate.size(), truth.size());
  const double denom = truth.norm();
  if (denom == 0.0) throw InvalidInput("relative error undefined for a zero truth field");
  return (estimate - truth).norm() / denom;
}

}  // namespace lsvgd
