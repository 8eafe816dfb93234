#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lsvgd/error.hpp"

namespace lsvgd {

/// Squared-distance length scale h of the Gaussian kernel exp(-|x - x'|^2 / h).
class Bandwidth {
 public:
  explicit Bandwidth(double h) : h_(h) {
    if (!(h > 0.0) || !std::isfinite(h)) {
      throw InvalidInput("bandwidth must be positive and finite, got " + std::to_string(h));
    }
  }

  double value() const noexcept { return h_; }

 private:
  double h_;
};

inline constexpr double kBandwidthFloor = 1e-12;

namespace detail {

inline void check_same_dim(Eigen::Index a, Eigen::Index b) {
  if (a != b) {
    throw InvalidInput("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

// Median of a list, averaging the two middle elements for even lengths.
inline double median_inplace(std::vector<double>& v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace detail

/// Pairwise Euclidean distances over distinct unordered pairs (rows are points).
inline std::vector<double> pairwise_distances(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      out.push_back((points.row(i) - points.row(j)).norm());
    }
  }
  return out;
}

/// Median heuristic h = med^2 / ln N, where med is the median pairwise distance.
inline Bandwidth median_bandwidth(const Eigen::MatrixXd& points) {
  if (points.rows() < 2) {
    throw InvalidInput("median bandwidth needs at least 2 particles");
  }
  auto dists = pairwise_distances(points);
  const double med = detail::median_inplace(dists);
  if (med == 0.0) {
    throw DegenerateBandwidth("median pairwise distance is zero");
  }
  const double h = med * med / std::log(static_cast<double>(points.rows()));
  return Bandwidth(std::max(h, kBandwidthFloor));
}

inline double rbf_evaluate(const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& x_prime, Bandwidth h) {
  detail::check_same_dim(x.size(), x_prime.size());
  return std::exp(-(x - x_prime).squaredNorm() / h.value());
}

/// Gradient of the kernel with respect to its first argument: -(2/h)(x - x') k(x, x').
inline Eigen::VectorXd rbf_grad_first_arg(const Eigen::Ref<const Eigen::VectorXd>& x,
                                          const Eigen::Ref<const Eigen::VectorXd>& x_prime,
                                          Bandwidth h) {
  detail::check_same_dim(x.size(), x_prime.size());
  const Eigen::VectorXd diff = x - x_prime;
  const double k = std::exp(-diff.squaredNorm() / h.value());
  return (-2.0 / h.value()) * k * diff;
}

/// Kernel matrix K(i, j) = k(a_i, b_j) for row-point sets a and b.
inline Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Bandwidth h) {
  detail::check_same_dim(a.cols(), b.cols());
  Eigen::MatrixXd k(a.rows(), b.rows());
  const double inv_h = 1.0 / h.value();
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      k(i, j) = std::exp(-(a.row(i) - b.row(j)).squaredNorm() * inv_h);
    }
  }
  return k;
}

}  // namespace lsvgd
