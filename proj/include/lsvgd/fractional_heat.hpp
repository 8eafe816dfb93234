#pragma once

// Time-fractional diffusion on the unit square with homogeneous Neumann
// boundaries, and the two observation models built on it.
//
// Discretization: vertex-centered grid with (M+1)^2 nodes, ghost-node
// reflection at the boundary, L1 scheme for the Caputo derivative, implicit
// in space. Rows are scaled by trapezoid weights so the per-step system is
// symmetric positive definite; it is factored once per solve.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "lsvgd/error.hpp"
#include "lsvgd/forward_model.hpp"

namespace lsvgd {

struct FractionalGrid {
  int M = 24;             // intervals per axis
  double dt = 0.01;
  double alpha = 0.5;     // Caputo order in (0, 1)
  double final_time = 1.0;

  void validate() const {
    detail::require(M >= 8, "fractional grid needs M >= 8");
    detail::require(dt > 0.0, "time step must be positive");
    detail::require(alpha > 0.0 && alpha < 1.0, "fractional order must lie in (0, 1)");
    const double n = final_time / dt;
    detail::require(std::abs(n - std::round(n)) < 1e-9 * std::max(1.0, n), "dt must divide the final time");
  }

  int steps() const { return static_cast<int>(std::lround(final_time / dt)); }
  int nodes_per_axis() const { return M + 1; }
  Eigen::Index num_nodes() const { return static_cast<Eigen::Index>(M + 1) * (M + 1); }
  double spacing() const { return 1.0 / M; }
  Eigen::Index node(int i, int j) const { return static_cast<Eigen::Index>(i) + static_cast<Eigen::Index>(M + 1) * j; }
};

/// L1 weights b_j = (j+1)^(1-alpha) - j^(1-alpha), j = 0..k-1.
inline std::vector<double> caputo_l1_coefficients(double alpha, int k) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("fractional order must lie in (0, 1)");
  detail::require(k >= 1, "need at least one L1 coefficient");
  std::vector<double> b(static_cast<std::size_t>(k));
  const double p = 1.0 - alpha;
  for (int j = 0; j < k; ++j) b[static_cast<std::size_t>(j)] = std::pow(j + 1.0, p) - std::pow(static_cast<double>(j), p);
  return b;
}

/// Nodal solution at every time level; level n is time n * dt.
struct SpaceTimeField {
  int M = 0;
  double dt = 0.0;
  std::vector<Eigen::VectorXd> levels;

  double at(int step, int i, int j) const {
    return levels[static_cast<std::size_t>(step)][i + static_cast<Eigen::Index>(M + 1) * j];
  }
};

/// Inputs to the generic solver. Empty vectors mean zero source, unit
/// coefficient, and zero initial state respectively.
struct HeatProblem {
  Eigen::VectorXd source_profile;
  std::function<double(double)> time_factor = [](double t) { return std::exp(-t); };
  Eigen::VectorXd kappa;
  Eigen::VectorXd initial;
};

/// Trapezoid weight of node (i, j): 1, 1/2 on edges, 1/4 at corners.
inline Eigen::VectorXd trapezoid_weights(const FractionalGrid& g) {
  Eigen::VectorXd w(g.num_nodes());
  for (int j = 0; j <= g.M; ++j) {
    for (int i = 0; i <= g.M; ++i) {
      const double wi = (i == 0 || i == g.M) ? 0.5 : 1.0;
      const double wj = (j == 0 || j == g.M) ? 0.5 : 1.0;
      w[g.node(i, j)] = wi * wj;
    }
  }
  return w;
}

/// Trapezoid-weighted spatial mean of a nodal vector.
inline double spatial_mean(const FractionalGrid& g, const Eigen::VectorXd& u) {
  const Eigen::VectorXd w = trapezoid_weights(g);
  return w.dot(u) / w.sum();
}

inline Eigen::VectorXd gaussian_bump(const FractionalGrid& g, const Eigen::Vector2d& center, double width) {
  Eigen::VectorXd v(g.num_nodes());
  const double h = g.spacing();
  for (int j = 0; j <= g.M; ++j) {
    for (int i = 0; i <= g.M; ++i) {
      const Eigen::Vector2d s(i * h, j * h);
      v[g.node(i, j)] = std::exp(-0.5 * (s - center).squaredNorm() / (width * width));
    }
  }
  return v;
}

namespace detail {

// Weighted stiffness for -div(kappa grad u) with harmonic-mean face coefficients.
inline std::vector<Eigen::Triplet<double>> stiffness_triplets(const FractionalGrid& g, const Eigen::VectorXd& kappa) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(g.num_nodes()) * 5);
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  auto face = [&](Eigen::Index a, Eigen::Index b, double transverse_weight) {
    const double ka = kappa.size() ? kappa[a] : 1.0;
    const double kb = kappa.size() ? kappa[b] : 1.0;
    const double c = transverse_weight * (2.0 * ka * kb / (ka + kb)) * inv_h2;
    trips.emplace_back(a, a, c);
    trips.emplace_back(b, b, c);
    trips.emplace_back(a, b, -c);
    trips.emplace_back(b, a, -c);
  };
  for (int j = 0; j <= g.M; ++j) {
    const double wj = (j == 0 || j == g.M) ? 0.5 : 1.0;
    for (int i = 0; i < g.M; ++i) face(g.node(i, j), g.node(i + 1, j), wj);
  }
  for (int i = 0; i <= g.M; ++i) {
    const double wi = (i == 0 || i == g.M) ? 0.5 : 1.0;
    for (int j = 0; j < g.M; ++j) face(g.node(i, j), g.node(i, j + 1), wi);
  }
  return trips;
}

}  // namespace detail

inline SpaceTimeField solve_fractional_heat(const FractionalGrid& g, const HeatProblem& problem) {
  g.validate();
  const Eigen::Index n = g.num_nodes();
  detail::require(problem.source_profile.size() == 0 || problem.source_profile.size() == n, "source profile size mismatch");
  detail::require(problem.kappa.size() == 0 || problem.kappa.size() == n, "coefficient size mismatch");
  detail::require(problem.initial.size() == 0 || problem.initial.size() == n, "initial state size mismatch");
  if (problem.kappa.size() && !(problem.kappa.array() > 0.0).all()) {
    throw InvalidCoefficient("diffusion coefficient must be positive on every grid node");
  }

  const int steps = g.steps();
  const double c0 = std::pow(g.dt, -g.alpha) / std::tgamma(2.0 - g.alpha);
  const std::vector<double> b = caputo_l1_coefficients(g.alpha, steps);
  const Eigen::VectorXd w = trapezoid_weights(g);

  auto trips = detail::stiffness_triplets(g, problem.kappa);
  for (Eigen::Index k = 0; k < n; ++k) trips.emplace_back(k, k, c0 * w[k]);
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(a);
  if (solver.info() != Eigen::Success) throw NumericalError("factorization of the time-step matrix failed");

  SpaceTimeField field{g.M, g.dt, {}};
  field.levels.reserve(static_cast<std::size_t>(steps) + 1);
  field.levels.push_back(problem.initial.size() ? problem.initial : Eigen::VectorXd::Zero(n));
  std::vector<Eigen::VectorXd> increments;
  increments.reserve(static_cast<std::size_t>(steps));

  Eigen::VectorXd history(n), rhs(n);
  for (int step = 1; step <= steps; ++step) {
    history.setZero();
    for (int j = 1; j < step; ++j) history += b[static_cast<std::size_t>(j)] * increments[static_cast<std::size_t>(step - j - 1)];
    rhs = c0 * (field.levels.back() - history);
    if (problem.source_profile.size()) rhs += problem.time_factor(step * g.dt) * problem.source_profile;
    rhs.array() *= w.array();
    Eigen::VectorXd u = solver.solve(rhs);
    if (solver.info() != Eigen::Success || !u.allFinite()) {
      throw NumericalError("time step " + std::to_string(step) + " failed to solve");
    }
    increments.push_back(u - field.levels.back());
    field.levels.push_back(std::move(u));
  }
  return field;
}

// ---------------------------------------------------------------------------
// Sensors

struct SensorLayout {
  std::vector<Eigen::Vector2d> locations;
  std::vector<double> times;

  std::size_t size() const { return locations.size() * times.size(); }

  /// Tensor layout listed row by row (s2 outer, s1 inner).
  static SensorLayout uniform(const std::vector<double>& coords, std::vector<double> times) {
    SensorLayout l;
    for (double s2 : coords) {
      for (double s1 : coords) l.locations.emplace_back(s1, s2);
    }
    l.times = std::move(times);
    return l;
  }
};

/// 3 x 3 sensors at {0.25, 0.5, 0.75}^2, observed at t = 0.25 and 0.75.
inline SensorLayout heat_source_layout() { return SensorLayout::uniform({0.25, 0.5, 0.75}, {0.25, 0.75}); }

/// 5 x 5 sensors at {1/6, ..., 5/6}^2, observed at t = 0.25, 0.75 and 1.
inline SensorLayout diffusion_layout() {
  return SensorLayout::uniform({1.0 / 6, 2.0 / 6, 3.0 / 6, 4.0 / 6, 5.0 / 6}, {0.25, 0.75, 1.0});
}

/// Field values at snapped sensor nodes, time-major then location order.
inline Eigen::VectorXd observe(const SpaceTimeField& field, const SensorLayout& layout) {
  const int steps = static_cast<int>(field.levels.size()) - 1;
  Eigen::VectorXd out(static_cast<Eigen::Index>(layout.size()));
  Eigen::Index k = 0;
  for (double t : layout.times) {
    const double sn = t / field.dt;
    const long step = std::lround(sn);
    if (std::abs(sn - step) > 1e-9 * std::max(1.0, sn) || step < 0 || step > steps) {
      throw InvalidInput("observation time " + std::to_string(t) + " is not a grid time level");
    }
    for (const auto& s : layout.locations) {
      if (!(s[0] >= 0.0 && s[0] <= 1.0 && s[1] >= 0.0 && s[1] <= 1.0)) {
        throw InvalidInput("sensor location outside the unit square");
      }
      const int i = static_cast<int>(std::lround(s[0] * field.M));
      const int j = static_cast<int>(std::lround(s[1] * field.M));
      out[k++] = field.at(static_cast<int>(step), i, j);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Permeability field: kappa(s; x) = sum_i x_i exp(-0.5 |s - c_i|^2 / l^2)

inline constexpr double kPermeabilityLengthScale = 0.15;

/// 3 x 3 grid of RBF centers over [0.2, 0.8]^2.
inline std::vector<Eigen::Vector2d> default_rbf_centers() {
  std::vector<Eigen::Vector2d> c;
  for (double s2 : {0.2, 0.5, 0.8}) {
    for (double s1 : {0.2, 0.5, 0.8}) c.emplace_back(s1, s2);
  }
  return c;
}

inline double permeability_field(const Eigen::Vector2d& s, const Eigen::Ref<const Eigen::VectorXd>& x,
                                 const std::vector<Eigen::Vector2d>& centers,
                                 double length_scale = kPermeabilityLengthScale) {
  detail::require(x.size() == static_cast<Eigen::Index>(centers.size()), "one weight per RBF center required");
  double k = 0.0;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    k += x[static_cast<Eigen::Index>(i)] * std::exp(-0.5 * (s - centers[i]).squaredNorm() / (length_scale * length_scale));
  }
  return k;
}

/// Permeability at the (res+1)^2 nodes of a uniform grid on the unit square.
inline Eigen::VectorXd permeability_on_grid(int res, const Eigen::Ref<const Eigen::VectorXd>& x,
                                           const std::vector<Eigen::Vector2d>& centers) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(res + 1) * (res + 1));
  for (int j = 0; j <= res; ++j) {
    for (int i = 0; i <= res; ++i) {
      v[i + static_cast<Eigen::Index>(res + 1) * j] =
          permeability_field(Eigen::Vector2d(static_cast<double>(i) / res, static_cast<double>(j) / res), x, centers);
    }
  }
  return v;
}

inline constexpr double kSourceWidth = 0.1;

inline SpaceTimeField solve_source_location(const FractionalGrid& g, const Eigen::Vector2d& center) {
  HeatProblem p;
  p.source_profile = gaussian_bump(g, center, kSourceWidth);
  return solve_fractional_heat(g, p);
}

inline SpaceTimeField solve_diffusion_coefficient(const FractionalGrid& g, const Eigen::Ref<const Eigen::VectorXd>& weights,
                                                  const std::vector<Eigen::Vector2d>& centers) {
  HeatProblem p;
  p.source_profile = gaussian_bump(g, Eigen::Vector2d(0.25, 0.75), kSourceWidth);
  p.kappa = permeability_on_grid(g.M, weights, centers);
  return solve_fractional_heat(g, p);
}

enum class PdeProblem { heat_source, diffusion };

/// Everything needed to evaluate one of the PDE observation maps.
struct PdeModelConfig {
  PdeProblem problem = PdeProblem::heat_source;
  FractionalGrid grid;
  SensorLayout layout = heat_source_layout();
  std::vector<Eigen::Vector2d> centers = default_rbf_centers();

  int parameter_dim() const { return problem == PdeProblem::heat_source ? 2 : static_cast<int>(centers.size()); }

  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const {
    detail::require(x.size() == parameter_dim(), "parameter dimension mismatch for PDE model");
    const SpaceTimeField f = problem == PdeProblem::heat_source
                                 ? solve_source_location(grid, Eigen::Vector2d(x[0], x[1]))
                                 : solve_diffusion_coefficient(grid, x, centers);
    return observe(f, layout);
  }

  /// Same problem on a grid refined by `factor` in space and time.
  PdeModelConfig refined(int factor) const {
    detail::require(factor >= 1, "refinement factor must be >= 1");
    PdeModelConfig c = *this;
    c.grid.M *= factor;
    c.grid.dt /= factor;
    return c;
  }
};

inline PdeModelConfig heat_source_config() { return {}; }

inline PdeModelConfig diffusion_config() {
  PdeModelConfig c;
  c.problem = PdeProblem::diffusion;
  c.layout = diffusion_layout();
  return c;
}

/// Counted forward model backed by the fractional solver. No exact Jacobian.
class PdeForwardModel final : public ForwardModel {
 public:
  explicit PdeForwardModel(PdeModelConfig cfg)
      : ForwardModel(cfg.problem == PdeProblem::heat_source ? "heat-source" : "diffusion", cfg.parameter_dim(),
                     static_cast<int>(cfg.layout.size())),
        cfg_(std::move(cfg)) {}

  bool has_jacobian() const override { return false; }
  const PdeModelConfig& config() const noexcept { return cfg_; }

 protected:
  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const override { return cfg_.evaluate(x); }

 private:
  PdeModelConfig cfg_;
};

struct SyntheticData {
  Eigen::VectorXd clean;
  Eigen::VectorXd observations;
};

/// Solves on a grid `fine_factor` times finer than `cfg` and adds i.i.d. N(0, noise_std^2) noise.
inline SyntheticData generate_synthetic_data(const PdeModelConfig& cfg, const Eigen::VectorXd& truth, double noise_std,
                                             int fine_factor, std::uint64_t seed) {
  detail::require(fine_factor >= 2, "fine factor must be >= 2");
  detail::require(noise_std >= 0.0, "noise std must be non-negative");
  SyntheticData d;
  d.clean = cfg.refined(fine_factor).evaluate(truth);
  d.observations = d.clean;
  if (noise_std > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_std);
    for (Eigen::Index k = 0; k < d.observations.size(); ++k) d.observations[k] += noise(rng);
  }
  return d;
}

}  // namespace lsvgd
