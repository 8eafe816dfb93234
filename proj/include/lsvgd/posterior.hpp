#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "lsvgd/error.hpp"
#include "lsvgd/forward_model.hpp"
#include "lsvgd/svgd.hpp"

namespace lsvgd {

class Prior {
 public:
  enum class Kind { normal, uniform_box, log_normal };

  /// Independent N(0, std^2) per coordinate.
  static Prior normal(int dim, double std = 1.0) {
    detail::require(dim >= 1 && std > 0.0, "normal prior needs dim >= 1 and std > 0");
    Prior p(Kind::normal, dim);
    p.std_ = std;
    return p;
  }

  static Prior standard_normal(int dim) { return normal(dim, 1.0); }

  static Prior uniform_box(Eigen::VectorXd lo, Eigen::VectorXd hi) {
    detail::require(lo.size() >= 1 && lo.size() == hi.size(), "uniform box bounds must match in size");
    detail::require((lo.array() < hi.array()).all(), "uniform box needs lo < hi in every dimension");
    Prior p(Kind::uniform_box, static_cast<int>(lo.size()));
    p.lo_ = std::move(lo);
    p.hi_ = std::move(hi);
    return p;
  }

  /// log x_i ~ N(0, 1) independently.
  static Prior log_normal(int dim) {
    detail::require(dim >= 1, "log-normal prior needs dim >= 1");
    return Prior(Kind::log_normal, dim);
  }

  Kind kind() const noexcept { return kind_; }
  int dim() const noexcept { return dim_; }
  double normal_std() const noexcept { return std_; }
  const Eigen::VectorXd& lower() const noexcept { return lo_; }
  const Eigen::VectorXd& upper() const noexcept { return hi_; }

  /// Unnormalized log density; -inf outside the support.
  double log_density(const Eigen::VectorXd& x) const {
    detail::require(x.size() == dim_, "prior dimension mismatch");
    switch (kind_) {
      case Kind::normal:
        return -0.5 * x.squaredNorm() / (std_ * std_);
      case Kind::uniform_box:
        return support().interior(x) ? 0.0 : -std::numeric_limits<double>::infinity();
      case Kind::log_normal: {
        if (!(x.array() > 0.0).all()) return -std::numeric_limits<double>::infinity();
        const Eigen::ArrayXd lx = x.array().log();
        return -(0.5 * lx.square() + lx).sum();
      }
    }
    return 0.0;
  }

  Eigen::VectorXd score(const Eigen::VectorXd& x) const {
    detail::require(x.size() == dim_, "prior dimension mismatch");
    switch (kind_) {
      case Kind::normal:
        return -x / (std_ * std_);
      case Kind::uniform_box:
        return Eigen::VectorXd::Zero(dim_);
      case Kind::log_normal:
        return (-(x.array().log() + 1.0) / x.array()).matrix();
    }
    return Eigen::VectorXd::Zero(dim_);
  }

  SupportBox support() const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    switch (kind_) {
      case Kind::uniform_box:
        return {lo_, hi_};
      case Kind::log_normal:
        return {Eigen::VectorXd::Zero(dim_), Eigen::VectorXd::Constant(dim_, inf)};
      case Kind::normal:
        break;
    }
    return {Eigen::VectorXd::Constant(dim_, -inf), Eigen::VectorXd::Constant(dim_, inf)};
  }

  bool bounded_support() const noexcept { return kind_ != Kind::normal; }

  /// n x d matrix of independent prior draws.
  Eigen::MatrixXd sample(Eigen::Index n, std::mt19937_64& rng) const {
    Eigen::MatrixXd out(n, dim_);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int k = 0; k < dim_; ++k) {
        switch (kind_) {
          case Kind::normal:
            out(i, k) = std_ * gauss(rng);
            break;
          case Kind::uniform_box:
            out(i, k) = lo_[k] + (hi_[k] - lo_[k]) * unif(rng);
            break;
          case Kind::log_normal:
            out(i, k) = std::exp(gauss(rng));
            break;
        }
      }
    }
    return out;
  }

  /// Affine input map for surrogates: z = (x - shift) .* scale. Uniform boxes map
  /// to [-1, 1]; normal and log-normal priors are whitened by their mean and std.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> standardization() const {
    switch (kind_) {
      case Kind::uniform_box:
        return {0.5 * (lo_ + hi_), (2.0 / (hi_ - lo_).array()).matrix()};
      case Kind::log_normal: {
        const double e = std::exp(1.0);
        const double mean = std::sqrt(e);
        const double sd = std::sqrt((e - 1.0) * e);
        return {Eigen::VectorXd::Constant(dim_, mean), Eigen::VectorXd::Constant(dim_, 1.0 / sd)};
      }
      case Kind::normal:
        break;
    }
    return {Eigen::VectorXd::Zero(dim_), Eigen::VectorXd::Constant(dim_, 1.0 / std_)};
  }

 private:
  Prior(Kind k, int d) : kind_(k), dim_(d) {}

  Kind kind_;
  int dim_;
  double std_ = 1.0;
  Eigen::VectorXd lo_, hi_;
};

struct GaussianLikelihood {
  Eigen::VectorXd observations;
  Eigen::VectorXd noise_std;  // per component

  GaussianLikelihood(Eigen::VectorXd y, double sigma)
      : observations(std::move(y)), noise_std(Eigen::VectorXd::Constant(observations.size(), sigma)) {
    validate();
  }
  GaussianLikelihood(Eigen::VectorXd y, Eigen::VectorXd sigma)
      : observations(std::move(y)), noise_std(std::move(sigma)) {
    validate();
  }

  void validate() const {
    detail::require(observations.size() >= 1, "likelihood needs at least one observation");
    detail::require(noise_std.size() == observations.size(), "noise std must match observation count");
    detail::require((noise_std.array() > 0.0).all(), "noise std must be positive");
  }

  double log_likelihood(const Eigen::VectorXd& f) const {
    return -0.5 * ((observations - f).array() / noise_std.array()).square().sum();
  }

  /// (y - f) / sigma^2, the cotangent pulled back through the model Jacobian.
  Eigen::VectorXd weighted_residual(const Eigen::VectorXd& f) const {
    return ((observations - f).array() / noise_std.array().square()).matrix();
  }
};

/// Prior + Gaussian likelihood around a forward map (exact or surrogate).
class Posterior {
 public:
  Posterior(Prior prior, GaussianLikelihood likelihood, const DifferentiableMap& model)
      : prior_(std::move(prior)), likelihood_(std::move(likelihood)), model_(&model) {
    detail::require(model.input_dim() == prior_.dim(), "model input dimension does not match prior");
    detail::require(model.output_dim() == likelihood_.observations.size(),
                    "model output dimension does not match observations");
  }

  const Prior& prior() const noexcept { return prior_; }
  const GaussianLikelihood& likelihood() const noexcept { return likelihood_; }
  const DifferentiableMap& model() const noexcept { return *model_; }

  /// Same prior and likelihood around a different map.
  Posterior with_model(const DifferentiableMap& model) const { return Posterior(prior_, likelihood_, model); }

  double log_posterior(const Eigen::VectorXd& x) const {
    const double lp = prior_.log_density(x);
    if (!std::isfinite(lp)) return lp;
    return lp + likelihood_.log_likelihood(model_->value(x));
  }

  /// grad log p0(x) + J(x)^T (y - f(x)) / sigma^2.
  Eigen::VectorXd score(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd f = model_->value(x);
    return prior_.score(x) + model_->pullback(x, likelihood_.weighted_residual(f));
  }

  ScoreFunction score_function() const {
    return [this](const Eigen::VectorXd& x) { return score(x); };
  }

 private:
  Prior prior_;
  GaussianLikelihood likelihood_;
  const DifferentiableMap* model_;
};

// ---------------------------------------------------------------------------
// Double banana target: pi(x) ~ exp(-|x|^2 / (2 s1^2) - (y - f(x))^2 / (2 s2^2))

struct DoubleBananaTarget {
  double sigma_prior = 1.0;
  double sigma_noise = 0.3;
  double observation = std::log(30.0);

  double log_density(const Eigen::VectorXd& x) const {
    const double r = observation - double_banana_forward(x);
    return -0.5 * x.squaredNorm() / (sigma_prior * sigma_prior) - 0.5 * r * r / (sigma_noise * sigma_noise);
  }

  Eigen::VectorXd score(const Eigen::VectorXd& x) const {
    const double r = observation - double_banana_forward(x);
    return -x / (sigma_prior * sigma_prior) +
           (r / (sigma_noise * sigma_noise)) * double_banana_jacobian(x).transpose();
  }

  Prior prior() const { return Prior::normal(2, sigma_prior); }
  GaussianLikelihood likelihood() const {
    return GaussianLikelihood(Eigen::VectorXd::Constant(1, observation), sigma_noise);
  }
};

}  // namespace lsvgd
