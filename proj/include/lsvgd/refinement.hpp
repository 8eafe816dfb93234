#pragma once

// Adaptive local surrogate loop: SVGD on the surrogate posterior interleaved
// with design-point checks and space-filling enrichment of the training set.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lsvgd/error.hpp"
#include "lsvgd/forward_model.hpp"
#include "lsvgd/mlp.hpp"
#include "lsvgd/posterior.hpp"
#include "lsvgd/svgd.hpp"

namespace lsvgd {

/// SplitMix64 step; derives independent seeds for sub-streams of one run.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct RefinementConfig {
  int Q = 5;          // max new points per refinement
  double R = 0.2;     // separation radius
  double tol = 1e-2;  // error-indicator threshold
  double rho = 0.8;   // radius shrink factor
  int I_max = 30;     // outer iterations
  int T = 10;         // SVGD steps per outer iteration

  void validate() const {
    detail::require(Q >= 1, "Q must be positive");
    detail::require(R > 0.0, "R must be positive");
    detail::require(tol > 0.0, "tol must be positive");
    detail::require(rho > 0.0 && rho < 1.0, "rho must lie in (0, 1)");
    detail::require(I_max >= 0 && T >= 1, "I_max must be >= 0 and T >= 1");
  }

  std::size_t eval_bound() const { return static_cast<std::size_t>(Q + 1) * static_cast<std::size_t>(I_max); }
};

struct EvalBudget {
  std::size_t online_evals = 0;
  std::size_t offline_evals = 0;
};

/// Componentwise particle mean.
inline Eigen::VectorXd design_point(const Eigen::MatrixXd& particles) {
  detail::require(particles.rows() >= 1, "design point needs at least one particle");
  return particles.colwise().mean().transpose();
}

struct IndicatorResult {
  double value = 0.0;
  bool degenerate = false;  // ||f(x*)|| = 0, absolute error reported
  Eigen::VectorXd exact_output;
};

/// ||f(x*) - f~(x*)|| / ||f(x*)||, one exact evaluation charged to the online budget.
inline IndicatorResult error_indicator(const Eigen::VectorXd& x_star, const ForwardModel& exact,
                                       const SurrogateParams& surrogate, EvalBudget& budget) {
  IndicatorResult r;
  r.exact_output = exact.value(x_star);
  ++budget.online_evals;
  const double diff = (r.exact_output - mlp_forward(surrogate, x_star)).norm();
  const double denom = r.exact_output.norm();
  if (denom == 0.0) {
    r.degenerate = true;
    r.value = diff;
  } else {
    r.value = diff / denom;
  }
  return r;
}

/// Greedy constrained selection: repeatedly take the particle nearest x* that is at
/// least R from every existing input and every point already taken in this call.
inline std::vector<Eigen::VectorXd> select_points(const Eigen::MatrixXd& particles, const Eigen::VectorXd& x_star,
                                                  const Eigen::MatrixXd& existing, int Q, double R) {
  detail::require(R > 0.0, "separation radius must be positive");
  detail::require(existing.rows() == 0 || existing.cols() == particles.cols(), "existing inputs dimension mismatch");
  std::vector<Eigen::VectorXd> chosen;
  const Eigen::Index n = particles.rows();
  std::vector<bool> feasible(static_cast<std::size_t>(n), true);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index e = 0; e < existing.rows(); ++e) {
      if ((particles.row(i) - existing.row(e)).norm() < R) {
        feasible[static_cast<std::size_t>(i)] = false;
        break;
      }
    }
  }
  for (int l = 0; l < Q; ++l) {
    Eigen::Index best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!feasible[static_cast<std::size_t>(i)]) continue;
      const double d = (particles.row(i).transpose() - x_star).norm();
      if (d < best_dist) {
        best_dist = d;
        best = i;
      }
    }
    if (best < 0) break;
    const Eigen::VectorXd pick = particles.row(best).transpose();
    chosen.push_back(pick);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (feasible[static_cast<std::size_t>(i)] && (particles.row(i).transpose() - pick).norm() < R) {
        feasible[static_cast<std::size_t>(i)] = false;
      }
    }
  }
  return chosen;
}

struct RefineReport {
  double err = 0.0;
  bool degenerate = false;
  bool refined = false;       // err > tol
  int points_added = 0;
  double radius_used = 0.0;   // R at selection time
  double radius_after = 0.0;
  bool shrunk = false;
  bool retrained = false;
  bool retrain_rejected = false;  // monotone guard kept the previous surrogate
  Eigen::VectorXd x_star;
};

struct RefineOutcome {
  SurrogateParams surrogate;
  TrainingSet trainset;
  double radius = 0.0;
  RefineReport report;
};

/// One refinement: check the surrogate at the particle mean; if it is off by more
/// than tol, enrich the training set near x* and warm-start retrain. When no point
/// can be placed the radius shrinks by rho instead.
inline RefineOutcome refine_step(const Eigen::MatrixXd& particles, TrainingSet trainset, SurrogateParams surrogate,
                                 const ForwardModel& exact, const RefinementConfig& cfg, const TrainConfig& train_cfg,
                                 double radius, EvalBudget& budget, std::uint64_t seed) {
  RefineOutcome out;
  RefineReport& rep = out.report;
  rep.x_star = design_point(particles);
  const IndicatorResult ind = error_indicator(rep.x_star, exact, surrogate, budget);
  rep.err = ind.value;
  rep.degenerate = ind.degenerate;
  rep.radius_used = radius;

  if (rep.err > cfg.tol) {
    rep.refined = true;
    const auto picks = select_points(particles, rep.x_star, trainset.inputs, cfg.Q, radius);
    for (const auto& x : picks) {
      trainset.append(x, exact.value(x));
      ++budget.online_evals;
    }
    rep.points_added = static_cast<int>(picks.size());
    if (picks.empty()) {
      radius *= cfg.rho;
      rep.shrunk = true;
    } else {
      TrainResult tr = warm_start_refine(surrogate, trainset, train_cfg, seed);
      rep.retrained = true;
      rep.retrain_rejected = !tr.improved;
      surrogate = std::move(tr.params);
    }
  }
  rep.radius_after = radius;
  out.surrogate = std::move(surrogate);
  out.trainset = std::move(trainset);
  out.radius = radius;
  return out;
}

struct LdnnConfig {
  RefinementConfig refine;
  std::vector<int> hidden{20, 20, 20};
  TrainConfig offline_train{};
  TrainConfig refine_train = [] {
    TrainConfig c;
    c.epochs = 1000;
    return c;
  }();
  AdaGradState adagrad{};  // step-size settings; also the reset state when not persisting
  bool persist_adagrad = true;
};

struct TraceRecord {
  int iteration = 0;  // outer iteration, 1-based
  std::size_t svgd_iteration = 0;
  RefineReport report;
  std::size_t trainset_size = 0;
  double radius = 0.0;
  std::size_t online_evals = 0;
  Eigen::MatrixXd particles;
};

struct SurrogateFit {
  SurrogateParams params;
  TrainingSet trainset;
  bool improved = true;
};

/// Offline surrogate on an initial design. Each design point costs one exact
/// evaluation, charged to the offline budget.
inline SurrogateFit fit_offline_surrogate(const Eigen::MatrixXd& design, const ForwardModel& exact, const Prior& prior,
                                          const std::vector<int>& hidden, const TrainConfig& cfg, std::uint64_t seed,
                                          EvalBudget& budget) {
  detail::require(design.rows() >= 1 && design.cols() == exact.input_dim(), "initial design shape mismatch");
  SurrogateFit fit;
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    fit.trainset.append(design.row(i).transpose(), exact.value(design.row(i).transpose()));
    ++budget.offline_evals;
  }
  Architecture arch;
  arch.input_dim = exact.input_dim();
  arch.output_dim = exact.output_dim();
  arch.hidden = hidden;
  SurrogateParams p = init_params(arch, derive_seed(seed, 1));
  std::tie(p.in_shift, p.in_scale) = prior.standardization();
  fit_output_map(p, fit.trainset.outputs);
  TrainResult tr = train(p, fit.trainset, cfg, derive_seed(seed, 2));
  fit.improved = tr.improved;
  fit.params = std::move(tr.params);
  return fit;
}

struct LdnnResult {
  ParticleSet particles;
  SurrogateParams surrogate;
  TrainingSet trainset;
  EvalBudget budget;
  std::vector<TraceRecord> trace;
  AdaGradState adagrad;
  double radius = 0.0;
};

/// Full adaptive loop: offline fit, then I_max rounds of {T SVGD steps on the
/// surrogate posterior, refine_step}.
inline LdnnResult run_lsvgd(const ParticleSet& initial, const Eigen::MatrixXd& design, const ForwardModel& exact,
                            const Prior& prior, const GaussianLikelihood& likelihood, const LdnnConfig& cfg,
                            std::uint64_t seed, const IterationObserver& observer = {}) {
  cfg.refine.validate();
  detail::require(initial.dim() == exact.input_dim(), "particle dimension does not match model input");
  LdnnResult res;
  SurrogateFit fit = fit_offline_surrogate(design, exact, prior, cfg.hidden, cfg.offline_train, seed, res.budget);
  res.surrogate = std::move(fit.params);
  res.trainset = std::move(fit.trainset);
  res.particles = initial;
  res.radius = cfg.refine.R;
  res.adagrad = cfg.adagrad;

  SurrogateMap map(res.surrogate);
  const Posterior post(prior, likelihood, map);
  const ScoreFunction score = post.score_function();
  const std::optional<SupportBox> support =
      prior.bounded_support() ? std::optional<SupportBox>(prior.support()) : std::nullopt;

  for (int t = 1; t <= cfg.refine.I_max; ++t) {
    AdaGradState state = cfg.persist_adagrad ? std::move(res.adagrad) : cfg.adagrad;
    std::tie(res.particles, res.adagrad) =
        run_svgd(std::move(res.particles), score, static_cast<std::size_t>(cfg.refine.T), std::move(state), support,
                 observer);
    RefineOutcome o = refine_step(res.particles.points, std::move(res.trainset), res.surrogate, exact, cfg.refine,
                                  cfg.refine_train, res.radius, res.budget, derive_seed(seed, 100 + static_cast<std::uint64_t>(t)));
    res.surrogate = std::move(o.surrogate);
    res.trainset = std::move(o.trainset);
    res.radius = o.radius;

    TraceRecord rec;
    rec.iteration = t;
    rec.svgd_iteration = res.particles.iteration;
    rec.report = std::move(o.report);
    rec.trainset_size = static_cast<std::size_t>(res.trainset.size());
    rec.radius = res.radius;
    rec.online_evals = res.budget.online_evals;
    rec.particles = res.particles.points;
    res.trace.push_back(std::move(rec));
  }
  return res;
}

}  // namespace lsvgd
