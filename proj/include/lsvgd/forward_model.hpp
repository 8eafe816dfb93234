#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "lsvgd/error.hpp"
#include "lsvgd/mlp.hpp"

namespace lsvgd {

/// A map R^d -> R^n that can be pulled back through its Jacobian.
class DifferentiableMap {
 public:
  virtual ~DifferentiableMap() = default;

  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual Eigen::VectorXd value(const Eigen::VectorXd& x) const = 0;
  virtual bool has_jacobian() const = 0;
  virtual Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const = 0;

  /// J(x)^T w.
  virtual Eigen::VectorXd pullback(const Eigen::VectorXd& x, const Eigen::VectorXd& w) const {
    return jacobian(x).transpose() * w;
  }
};

/// An exact (high-fidelity) forward model. Every value() call is counted.
class ForwardModel : public DifferentiableMap {
 public:
  ForwardModel(std::string name, int in, int out) : name_(std::move(name)), in_(in), out_(out) {}
  ForwardModel(const ForwardModel&) = delete;
  ForwardModel& operator=(const ForwardModel&) = delete;

  const std::string& name() const noexcept { return name_; }
  int input_dim() const override { return in_; }
  int output_dim() const override { return out_; }

  Eigen::VectorXd value(const Eigen::VectorXd& x) const final {
    detail::require(x.size() == in_, name_ + ": expected input of dimension " + std::to_string(in_) +
                                         ", got " + std::to_string(x.size()));
    evals_.fetch_add(1, std::memory_order_relaxed);
    return evaluate(x);
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const final {
    if (!has_jacobian()) throw InvalidInput(name_ + " exposes no exact Jacobian");
    detail::require(x.size() == in_, name_ + ": Jacobian input dimension mismatch");
    jacobian_evals_.fetch_add(1, std::memory_order_relaxed);
    return exact_jacobian(x);
  }

  std::size_t eval_count() const noexcept { return evals_.load(std::memory_order_relaxed); }
  std::size_t jacobian_count() const noexcept { return jacobian_evals_.load(std::memory_order_relaxed); }

 protected:
  virtual Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::MatrixXd exact_jacobian(const Eigen::VectorXd&) const {
    throw InvalidInput(name_ + " exposes no exact Jacobian");
  }

 private:
  std::string name_;
  int in_;
  int out_;
  mutable std::atomic<std::size_t> evals_{0};
  mutable std::atomic<std::size_t> jacobian_evals_{0};
};

/// MLP emulator viewed as a differentiable map.
class SurrogateMap final : public DifferentiableMap {
 public:
  explicit SurrogateMap(const SurrogateParams& params) : params_(&params) {}

  int input_dim() const override { return params_->arch.input_dim; }
  int output_dim() const override { return params_->arch.output_dim; }
  Eigen::VectorXd value(const Eigen::VectorXd& x) const override { return mlp_forward(*params_, x); }
  bool has_jacobian() const override { return true; }
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const override { return input_jacobian(*params_, x); }
  Eigen::VectorXd pullback(const Eigen::VectorXd& x, const Eigen::VectorXd& w) const override {
    return value_and_vjp(*params_, x, w).second;
  }

 private:
  const SurrogateParams* params_;
};

// ---------------------------------------------------------------------------
// Double banana: f(x) = log((1 - x1)^2 + 100 (x2 - x1^2)^2)

inline double double_banana_argument(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double a = 1.0 - x[0];
  const double b = x[1] - x[0] * x[0];
  return a * a + 100.0 * b * b;
}

inline double double_banana_forward(const Eigen::Ref<const Eigen::VectorXd>& x) {
  detail::require(x.size() == 2, "double banana takes a 2-vector");
  const double g = double_banana_argument(x);
  if (!(g > 0.0)) throw SingularInput("double banana: log argument is zero at (1, 1)");
  return std::log(g);
}

inline Eigen::RowVector2d double_banana_jacobian(const Eigen::Ref<const Eigen::VectorXd>& x) {
  detail::require(x.size() == 2, "double banana takes a 2-vector");
  const double g = double_banana_argument(x);
  if (!(g > 0.0)) throw SingularInput("double banana: log argument is zero at (1, 1)");
  const double b = x[1] - x[0] * x[0];
  return {(-2.0 * (1.0 - x[0]) - 400.0 * x[0] * b) / g, 200.0 * b / g};
}

class DoubleBananaModel final : public ForwardModel {
 public:
  DoubleBananaModel() : ForwardModel("double-banana", 2, 1) {}
  bool has_jacobian() const override { return true; }

 protected:
  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const override {
    return Eigen::VectorXd::Constant(1, double_banana_forward(x));
  }
  Eigen::MatrixXd exact_jacobian(const Eigen::VectorXd& x) const override {
    return double_banana_jacobian(x);
  }
};

/// Wraps any callable as a counted model; used for linear test models and PDE maps.
template <typename Fn>
class FunctionModel final : public ForwardModel {
 public:
  FunctionModel(std::string name, int in, int out, Fn fn) : ForwardModel(std::move(name), in, out), fn_(std::move(fn)) {}
  bool has_jacobian() const override { return false; }

 protected:
  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const override { return fn_(x); }

 private:
  Fn fn_;
};

/// f(x) = A x + c with its exact Jacobian.
class LinearModel final : public ForwardModel {
 public:
  LinearModel(Eigen::MatrixXd a, Eigen::VectorXd c)
      : ForwardModel("linear", static_cast<int>(a.cols()), static_cast<int>(a.rows())), a_(std::move(a)), c_(std::move(c)) {}
  bool has_jacobian() const override { return true; }

 protected:
  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const override { return a_ * x + c_; }
  Eigen::MatrixXd exact_jacobian(const Eigen::VectorXd&) const override { return a_; }

 private:
  Eigen::MatrixXd a_;
  Eigen::VectorXd c_;
};

}  // namespace lsvgd
