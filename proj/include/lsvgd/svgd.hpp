#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "lsvgd/error.hpp"
#include "lsvgd/kernel.hpp"

namespace lsvgd {

/// N particles in R^d stored as the rows of an N x d matrix.
struct ParticleSet {
  Eigen::MatrixXd points;
  std::size_t iteration = 0;

  ParticleSet() = default;
  explicit ParticleSet(Eigen::MatrixXd pts, std::size_t iter = 0)
      : points(std::move(pts)), iteration(iter) {
    detail::require(points.rows() >= 1 && points.cols() >= 1, "particle set must be non-empty");
    detail::require(points.allFinite(), "particle coordinates must be finite");
  }

  Eigen::Index size() const noexcept { return points.rows(); }
  Eigen::Index dim() const noexcept { return points.cols(); }
};

/// Momentum-smoothed AdaGrad step sizing, one accumulator entry per coordinate.
struct AdaGradState {
  Eigen::MatrixXd accumulator;
  double master_step = 1.0;
  double momentum = 0.9;
  double fudge = 1e-6;
  bool initialized = false;
};

using ScoreFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Axis-aligned support of the target; infinite bounds mean unbounded.
struct SupportBox {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  static constexpr double kMargin = 1e-8;

  bool interior(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      if (!(x[k] > lo[k] && x[k] < hi[k])) return false;
    }
    return true;
  }

  /// Moves coordinates outside (lo, hi) to the boundary, pulled in by kMargin.
  Eigen::VectorXd project(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    Eigen::VectorXd out = x;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      if (!(out[k] > lo[k])) out[k] = lo[k] + kMargin;
      if (!(out[k] < hi[k])) out[k] = hi[k] - kMargin;
    }
    return out;
  }
};

/// Evaluates the score once per particle; throws NumericalError naming the first bad particle.
inline Eigen::MatrixXd evaluate_scores(const Eigen::MatrixXd& points, const ScoreFunction& score) {
  Eigen::MatrixXd scores(points.rows(), points.cols());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Eigen::VectorXd s = score(points.row(i).transpose());
    if (s.size() != points.cols()) {
      throw InvalidInput("score returned dimension " + std::to_string(s.size()) + ", expected " +
                         std::to_string(points.cols()));
    }
    if (!s.allFinite()) {
      throw NumericalError("non-finite score at particle " + std::to_string(i));
    }
    scores.row(i) = s.transpose();
  }
  return scores;
}

/// Empirical optimal perturbation given precomputed scores:
/// row i = (1/N) sum_j [k(x_j, x_i) s_j + grad_{x_j} k(x_j, x_i)].
inline Eigen::MatrixXd svgd_direction_from_scores(const Eigen::MatrixXd& points,
                                                  const Eigen::MatrixXd& scores, Bandwidth h) {
  detail::require(points.rows() == scores.rows() && points.cols() == scores.cols(),
                  "points and scores must have identical shape");
  const double n = static_cast<double>(points.rows());
  const Eigen::MatrixXd k = rbf_gram(points, points, h);
  const Eigen::VectorXd row_sums = k.rowwise().sum();
  Eigen::MatrixXd repulsion = points.array().colwise() * row_sums.array();
  repulsion.noalias() -= k * points;
  Eigen::MatrixXd dir = k * scores;
  dir += (2.0 / h.value()) * repulsion;
  return dir / n;
}

inline Eigen::MatrixXd svgd_direction(const ParticleSet& particles, const ScoreFunction& score,
                                      Bandwidth h) {
  detail::require(particles.size() >= 2, "svgd direction needs at least 2 particles");
  return svgd_direction_from_scores(particles.points, evaluate_scores(particles.points, score), h);
}

/// One AdaGrad update. The first call seeds the accumulator with direction^2,
/// later calls blend with weight `momentum` on the history.
inline std::pair<ParticleSet, AdaGradState> adagrad_step(const ParticleSet& particles,
                                                         const Eigen::MatrixXd& direction,
                                                         AdaGradState state) {
  detail::require(direction.rows() == particles.size() && direction.cols() == particles.dim(),
                  "direction shape must match particle set");
  const Eigen::ArrayXXd g2 = direction.array().square();
  if (!state.initialized) {
    state.accumulator = g2.matrix();
    state.initialized = true;
  } else {
    detail::require(state.accumulator.rows() == direction.rows() &&
                        state.accumulator.cols() == direction.cols(),
                    "AdaGrad accumulator shape must match direction");
    state.accumulator =
        (state.momentum * state.accumulator.array() + (1.0 - state.momentum) * g2).matrix();
  }
  ParticleSet next = particles;
  next.points.array() +=
      state.master_step * direction.array() / (state.fudge + state.accumulator.array().sqrt());
  next.iteration = particles.iteration + 1;
  return {std::move(next), std::move(state)};
}

/// Called after every SVGD iteration with the updated particle set.
using IterationObserver = std::function<void(const ParticleSet&)>;

/// T iterations of {bandwidth -> direction -> AdaGrad step}. When a support box is
/// given, particles that left its interior are projected back before the score is taken.
inline std::pair<ParticleSet, AdaGradState> run_svgd(ParticleSet particles,
                                                     const ScoreFunction& score, std::size_t steps,
                                                     AdaGradState state,
                                                     const std::optional<SupportBox>& support = {},
                                                     const IterationObserver& observer = {}) {
  for (std::size_t t = 0; t < steps; ++t) {
    if (support) {
      for (Eigen::Index i = 0; i < particles.size(); ++i) {
        if (!support->interior(particles.points.row(i).transpose())) {
          particles.points.row(i) = support->project(particles.points.row(i).transpose()).transpose();
        }
      }
    }
    const Bandwidth h = median_bandwidth(particles.points);
    const Eigen::MatrixXd dir = svgd_direction(particles, score, h);
    std::tie(particles, state) = adagrad_step(particles, dir, std::move(state));
    if (observer) observer(particles);
  }
  return {std::move(particles), std::move(state)};
}

}  // namespace lsvgd
