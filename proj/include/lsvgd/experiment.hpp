#pragma once

// Experiment driver: configuration, synthetic data, the Direct / prior-DNN /
// LDNN pipelines, reference samples, and run-directory output.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lsvgd/error.hpp"
#include "lsvgd/forward_model.hpp"
#include "lsvgd/fractional_heat.hpp"
#include "lsvgd/io.hpp"
#include "lsvgd/metrics.hpp"
#include "lsvgd/mlp.hpp"
#include "lsvgd/posterior.hpp"
#include "lsvgd/refinement.hpp"
#include "lsvgd/svgd.hpp"

#ifndef LSVGD_VERSION
#define LSVGD_VERSION "0.1.0"
#endif

namespace lsvgd {

inline constexpr const char* kVersion = LSVGD_VERSION;

/// Configuration rejected before any compute (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ProblemKind { double_banana, heat_source, diffusion };
enum class Method { direct, prior_dnn, ldnn };

inline std::string to_string(ProblemKind p) {
  switch (p) {
    case ProblemKind::double_banana: return "double-banana";
    case ProblemKind::heat_source: return "heat-source";
    case ProblemKind::diffusion: return "diffusion";
  }
  return "?";
}

inline std::string to_string(Method m) {
  switch (m) {
    case Method::direct: return "direct";
    case Method::prior_dnn: return "prior-dnn";
    case Method::ldnn: return "ldnn";
  }
  return "?";
}

inline ProblemKind parse_problem(const std::string& s) {
  if (s == "double-banana") return ProblemKind::double_banana;
  if (s == "heat-source") return ProblemKind::heat_source;
  if (s == "diffusion") return ProblemKind::diffusion;
  throw ConfigError("unknown problem '" + s + "' (expected double-banana, heat-source or diffusion)");
}

inline Method parse_method(const std::string& s) {
  if (s == "direct") return Method::direct;
  if (s == "prior-dnn") return Method::prior_dnn;
  if (s == "ldnn") return Method::ldnn;
  throw ConfigError("unknown method '" + s + "' (expected direct, prior-dnn or ldnn)");
}

struct Seeds {
  std::uint64_t particles = 1;
  std::uint64_t design = 2;
  std::uint64_t network = 3;  // initialization and training shuffles
  std::uint64_t data = 4;
};

/// Initial design: `count` points drawn from the prior, or uniformly from [lo, hi] when a box is given.
struct DesignSpec {
  int count = 10;
  std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> box;
};

struct ExperimentConfig {
  ProblemKind problem = ProblemKind::double_banana;
  Method method = Method::ldnn;
  int particles = 100;
  std::string initial_particles = "prior";  // "prior" or "standard-normal"
  RefinementConfig refine;
  std::vector<int> hidden{20, 20, 20};
  TrainConfig offline_train{};
  TrainConfig refine_train = [] {
    TrainConfig c;
    c.epochs = 1000;
    return c;
  }();
  int iterations = 0;  // direct / prior-dnn; 0 means I_max * T
  double master_step = 0.1;
  double momentum = 0.9;
  bool persist_adagrad = true;
  DesignSpec design;
  Seeds seeds;

  // PDE problems
  FractionalGrid grid;
  int fine_factor = 2;
  double noise_std = 0.2;
  Eigen::VectorXd true_parameter;
  int rel_grid = 64;

  std::string data_file;
  std::string reference_file;
  std::string output_dir = "runs/default";

  int total_iterations() const { return iterations > 0 ? iterations : refine.I_max * refine.T; }
  int dim() const { return problem == ProblemKind::diffusion ? static_cast<int>(default_rbf_centers().size()) : 2; }
};

/// Shipped ground-truth weights for the diffusion problem (exp of a seeded N(0, I) draw).
inline Eigen::VectorXd load_true_weights(const std::string& path) {
  const json j = read_json_file(path);
  return vector_from_json(j.at("weights"));
}

inline std::string default_data_dir() {
  if (const char* d = std::getenv("LSVGD_DATA_DIR")) return d;
#ifdef LSVGD_SOURCE_DATA_DIR
  return LSVGD_SOURCE_DATA_DIR;
#else
  return "data";
#endif
}

inline ExperimentConfig default_config(ProblemKind problem, Method method = Method::ldnn) {
  ExperimentConfig c;
  c.problem = problem;
  c.method = method;
  switch (problem) {
    case ProblemKind::double_banana:
      c.initial_particles = "standard-normal";
      c.output_dir = "runs/double-banana-" + to_string(method);
      break;
    case ProblemKind::heat_source:
      c.initial_particles = "prior";
      c.noise_std = 0.2;
      c.true_parameter = Eigen::Vector2d(0.7, 0.7);
      c.output_dir = "runs/heat-source-" + to_string(method);
      break;
    case ProblemKind::diffusion:
      c.initial_particles = "prior";
      c.hidden = {50, 50, 50};
      c.refine.Q = 10;
      c.design.count = 100;
      c.noise_std = 0.01;
      c.output_dir = "runs/diffusion-" + to_string(method);
      break;
  }
  return c;
}

// ---------------------------------------------------------------------------
// JSON (de)serialization of the configuration

inline json train_to_json(const TrainConfig& t) {
  return {{"learning_rate", t.learning_rate}, {"reg_constant", t.reg_constant}, {"epochs", t.epochs},
          {"batch_size", t.batch_size},       {"full_batch_threshold", t.full_batch_threshold}};
}

inline void train_from_json(const json& j, TrainConfig& t) {
  t.learning_rate = j.value("learning_rate", t.learning_rate);
  t.reg_constant = j.value("reg_constant", t.reg_constant);
  t.epochs = j.value("epochs", t.epochs);
  t.batch_size = j.value("batch_size", t.batch_size);
  t.full_batch_threshold = j.value("full_batch_threshold", t.full_batch_threshold);
}

inline json config_to_json(const ExperimentConfig& c) {
  json j;
  j["problem"] = to_string(c.problem);
  j["method"] = to_string(c.method);
  j["particles"] = c.particles;
  j["initial_particles"] = c.initial_particles;
  j["refinement"] = {{"Q", c.refine.Q},       {"R", c.refine.R},         {"tol", c.refine.tol},
                     {"rho", c.refine.rho},   {"I_max", c.refine.I_max}, {"T", c.refine.T}};
  j["hidden"] = c.hidden;
  j["offline_train"] = train_to_json(c.offline_train);
  j["refine_train"] = train_to_json(c.refine_train);
  j["iterations"] = c.iterations;
  j["master_step"] = c.master_step;
  j["momentum"] = c.momentum;
  j["persist_adagrad"] = c.persist_adagrad;
  json d = {{"count", c.design.count}};
  if (c.design.box) {
    d["lo"] = to_json_array(c.design.box->first);
    d["hi"] = to_json_array(c.design.box->second);
  }
  j["design"] = d;
  j["seeds"] = {{"particles", c.seeds.particles}, {"design", c.seeds.design},
                {"network", c.seeds.network},     {"data", c.seeds.data}};
  j["grid"] = {{"M", c.grid.M}, {"dt", c.grid.dt}, {"alpha", c.grid.alpha}, {"final_time", c.grid.final_time}};
  j["fine_factor"] = c.fine_factor;
  j["noise_std"] = c.noise_std;
  j["true_parameter"] = to_json_array(c.true_parameter);
  j["rel_grid"] = c.rel_grid;
  j["data_file"] = c.data_file;
  j["reference_file"] = c.reference_file;
  j["output_dir"] = c.output_dir;
  return j;
}

/// Reads a config (or a run manifest, which nests it under "config"); absent
/// fields take the problem defaults.
inline ExperimentConfig config_from_json(const json& in) {
  const json& j = in.contains("config") ? in.at("config") : in;
  try {
    if (!j.contains("problem")) throw ConfigError("config must name a problem");
    const ProblemKind problem = parse_problem(j.at("problem").get<std::string>());
    const Method method = parse_method(j.value("method", std::string("ldnn")));
    ExperimentConfig c = default_config(problem, method);
    c.particles = j.value("particles", c.particles);
    c.initial_particles = j.value("initial_particles", c.initial_particles);
    if (j.contains("refinement")) {
      const json& r = j.at("refinement");
      c.refine.Q = r.value("Q", c.refine.Q);
      c.refine.R = r.value("R", c.refine.R);
      c.refine.tol = r.value("tol", c.refine.tol);
      c.refine.rho = r.value("rho", c.refine.rho);
      c.refine.I_max = r.value("I_max", c.refine.I_max);
      c.refine.T = r.value("T", c.refine.T);
    }
    c.hidden = j.value("hidden", c.hidden);
    if (j.contains("offline_train")) train_from_json(j.at("offline_train"), c.offline_train);
    if (j.contains("refine_train")) train_from_json(j.at("refine_train"), c.refine_train);
    c.iterations = j.value("iterations", c.iterations);
    c.master_step = j.value("master_step", c.master_step);
    c.momentum = j.value("momentum", c.momentum);
    c.persist_adagrad = j.value("persist_adagrad", c.persist_adagrad);
    if (j.contains("design")) {
      const json& d = j.at("design");
      c.design.count = d.value("count", c.design.count);
      if (d.contains("lo") && d.contains("hi")) {
        c.design.box = std::make_pair(vector_from_json(d.at("lo")), vector_from_json(d.at("hi")));
      } else {
        c.design.box.reset();
      }
    }
    if (j.contains("seeds")) {
      const json& s = j.at("seeds");
      c.seeds.particles = s.value("particles", c.seeds.particles);
      c.seeds.design = s.value("design", c.seeds.design);
      c.seeds.network = s.value("network", c.seeds.network);
      c.seeds.data = s.value("data", c.seeds.data);
    }
    if (j.contains("grid")) {
      const json& g = j.at("grid");
      c.grid.M = g.value("M", c.grid.M);
      c.grid.dt = g.value("dt", c.grid.dt);
      c.grid.alpha = g.value("alpha", c.grid.alpha);
      c.grid.final_time = g.value("final_time", c.grid.final_time);
    }
    c.fine_factor = j.value("fine_factor", c.fine_factor);
    c.noise_std = j.value("noise_std", c.noise_std);
    if (j.contains("true_parameter")) c.true_parameter = vector_from_json(j.at("true_parameter"));
    c.rel_grid = j.value("rel_grid", c.rel_grid);
    c.data_file = j.value("data_file", c.data_file);
    c.reference_file = j.value("reference_file", c.reference_file);
    c.output_dir = j.value("output_dir", c.output_dir);
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

inline void validate_config(const ExperimentConfig& c) {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  try {
    c.refine.validate();
    for (int w : c.hidden) {
      if (w < 1) fail("hidden widths must be >= 1");
    }
    if (c.hidden.empty()) fail("at least one hidden layer is required");
    if (c.problem != ProblemKind::double_banana) c.grid.validate();
  } catch (const InvalidInput& e) {
    fail(e.what());
  }
  if (c.particles < 2) fail("need at least 2 particles");
  if (c.method == Method::direct && c.problem != ProblemKind::double_banana) {
    fail("direct method needs an exact Jacobian; only double-banana exposes one");
  }
  if (c.initial_particles != "prior" && c.initial_particles != "standard-normal") {
    fail("initial_particles must be 'prior' or 'standard-normal'");
  }
  if (c.method != Method::direct && c.design.count < 1) fail("design count must be >= 1");
  if (c.design.box) {
    const auto& [lo, hi] = *c.design.box;
    if (lo.size() != c.dim() || hi.size() != c.dim() || !(lo.array() < hi.array()).all()) {
      fail("design box must have lo < hi in every one of the problem's dimensions");
    }
  }
  if (c.master_step <= 0.0 || c.momentum < 0.0 || c.momentum >= 1.0) fail("invalid AdaGrad settings");
  if (c.offline_train.epochs < 0 || c.refine_train.epochs < 0) fail("epochs must be non-negative");
  if (c.problem != ProblemKind::double_banana) {
    if (c.fine_factor < 2) fail("fine_factor must be >= 2");
    if (c.noise_std <= 0.0) fail("noise_std must be positive");
  }
}

// ---------------------------------------------------------------------------
// Synthetic data

struct DataSet {
  ProblemKind problem = ProblemKind::heat_source;
  FractionalGrid grid;
  int fine_factor = 2;
  SensorLayout layout;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
  Eigen::VectorXd true_parameter;
  Eigen::VectorXd clean;
  Eigen::VectorXd observations;
};

inline PdeModelConfig pde_config(ProblemKind problem, const FractionalGrid& grid) {
  detail::require(problem != ProblemKind::double_banana, "double banana is not a PDE problem");
  PdeModelConfig m = problem == ProblemKind::heat_source ? heat_source_config() : diffusion_config();
  m.grid = grid;
  return m;
}

inline Eigen::VectorXd resolved_truth(const ExperimentConfig& c) {
  if (c.true_parameter.size()) return c.true_parameter;
  if (c.problem == ProblemKind::diffusion) {
    return load_true_weights(default_data_dir() + "/diffusion_true_weights.json");
  }
  throw ConfigError("no true parameter configured for " + to_string(c.problem));
}

inline DataSet generate_dataset(const ExperimentConfig& c) {
  if (c.problem == ProblemKind::double_banana) throw ConfigError("double-banana has analytic data; nothing to generate");
  validate_config(c);
  DataSet d;
  d.problem = c.problem;
  d.grid = c.grid;
  d.fine_factor = c.fine_factor;
  const PdeModelConfig m = pde_config(c.problem, c.grid);
  d.layout = m.layout;
  d.noise_std = c.noise_std;
  d.seed = c.seeds.data;
  d.true_parameter = resolved_truth(c);
  if (d.true_parameter.size() != c.dim()) throw ConfigError("true parameter has the wrong dimension");
  auto syn = generate_synthetic_data(m, d.true_parameter, c.noise_std, c.fine_factor, c.seeds.data);
  d.clean = std::move(syn.clean);
  d.observations = std::move(syn.observations);
  return d;
}

inline json dataset_to_json(const DataSet& d) {
  json locs = json::array();
  for (const auto& s : d.layout.locations) locs.push_back({s[0], s[1]});
  return {{"format", "lsvgd-synthetic-data"},
          {"problem", to_string(d.problem)},
          {"grid", {{"M", d.grid.M}, {"dt", d.grid.dt}, {"alpha", d.grid.alpha}, {"final_time", d.grid.final_time}}},
          {"fine_factor", d.fine_factor},
          {"sensors", {{"locations", locs}, {"times", d.layout.times}}},
          {"noise_std", d.noise_std},
          {"seed", d.seed},
          {"true_parameter", to_json_array(d.true_parameter)},
          {"clean_observations", to_json_array(d.clean)},
          {"observations", to_json_array(d.observations)}};
}

inline DataSet dataset_from_json(const json& j) {
  detail::require(j.value("format", "") == "lsvgd-synthetic-data", "not a synthetic-data file");
  DataSet d;
  d.problem = parse_problem(j.at("problem").get<std::string>());
  const json& g = j.at("grid");
  d.grid.M = g.at("M").get<int>();
  d.grid.dt = g.at("dt").get<double>();
  d.grid.alpha = g.at("alpha").get<double>();
  d.grid.final_time = g.at("final_time").get<double>();
  d.fine_factor = j.at("fine_factor").get<int>();
  for (const json& s : j.at("sensors").at("locations")) d.layout.locations.emplace_back(s[0].get<double>(), s[1].get<double>());
  d.layout.times = j.at("sensors").at("times").get<std::vector<double>>();
  d.noise_std = j.at("noise_std").get<double>();
  d.seed = j.at("seed").get<std::uint64_t>();
  d.true_parameter = vector_from_json(j.at("true_parameter"));
  d.clean = vector_from_json(j.at("clean_observations"));
  d.observations = vector_from_json(j.at("observations"));
  return d;
}

// ---------------------------------------------------------------------------
// Problem assembly

struct ProblemSetup {
  Prior prior = Prior::standard_normal(2);
  std::optional<GaussianLikelihood> likelihood;
  std::unique_ptr<ForwardModel> model;
};

inline ProblemSetup make_problem(const ExperimentConfig& c, const DataSet* data) {
  ProblemSetup s;
  switch (c.problem) {
    case ProblemKind::double_banana: {
      const DoubleBananaTarget t;
      s.prior = t.prior();
      s.likelihood = t.likelihood();
      s.model = std::make_unique<DoubleBananaModel>();
      return s;
    }
    case ProblemKind::heat_source:
    case ProblemKind::diffusion: {
      if (!data) throw ConfigError(to_string(c.problem) + " needs a synthetic-data file");
      if (data->problem != c.problem) throw ConfigError("data file belongs to problem " + to_string(data->problem));
      PdeModelConfig m = pde_config(c.problem, c.grid);
      m.layout = data->layout;
      s.prior = c.problem == ProblemKind::heat_source
                    ? Prior::uniform_box(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2))
                    : Prior::log_normal(static_cast<int>(m.centers.size()));
      s.likelihood = GaussianLikelihood(data->observations, data->noise_std);
      s.model = std::make_unique<PdeForwardModel>(std::move(m));
      return s;
    }
  }
  return s;
}

inline Eigen::MatrixXd initial_particles(const ExperimentConfig& c, const Prior& prior) {
  std::mt19937_64 rng(c.seeds.particles);
  if (c.initial_particles == "standard-normal") return Prior::standard_normal(prior.dim()).sample(c.particles, rng);
  return prior.sample(c.particles, rng);
}

inline Eigen::MatrixXd initial_design(const ExperimentConfig& c, const Prior& prior) {
  std::mt19937_64 rng(c.seeds.design);
  if (!c.design.box) return prior.sample(c.design.count, rng);
  const auto& [lo, hi] = *c.design.box;
  return Prior::uniform_box(lo, hi).sample(c.design.count, rng);
}

// ---------------------------------------------------------------------------
// Running

struct Checkpoint {
  std::size_t iteration = 0;
  Eigen::MatrixXd points;
};

struct RunOutput {
  std::vector<Checkpoint> checkpoints;
  ParticleSet final_particles;
  EvalBudget budget;
  std::size_t exact_evals = 0;      // model counter delta over the run
  std::size_t exact_jacobians = 0;
  std::vector<TraceRecord> trace;
  std::optional<SurrogateParams> surrogate;
  TrainingSet trainset;
  double wall_seconds = 0.0;
};

/// Snapshot iterations: every T steps, plus 10, 100 and the final iteration.
inline std::set<std::size_t> checkpoint_schedule(const ExperimentConfig& c) {
  std::set<std::size_t> s;
  const auto total = static_cast<std::size_t>(c.total_iterations());
  for (std::size_t t = static_cast<std::size_t>(c.refine.T); t <= total; t += static_cast<std::size_t>(c.refine.T)) s.insert(t);
  for (std::size_t t : {std::size_t{10}, std::size_t{100}, total}) {
    if (t <= total) s.insert(t);
  }
  s.insert(0);
  return s;
}

inline RunOutput run_experiment(const ExperimentConfig& c, const DataSet* data) {
  validate_config(c);
  ProblemSetup setup = make_problem(c, data);
  const auto start = std::chrono::steady_clock::now();
  RunOutput out;
  const std::size_t evals0 = setup.model->eval_count();
  const std::size_t jac0 = setup.model->jacobian_count();

  const ParticleSet init(initial_particles(c, setup.prior));
  const auto schedule = checkpoint_schedule(c);
  out.checkpoints.push_back({0, init.points});
  IterationObserver observer = [&](const ParticleSet& p) {
    if (schedule.count(p.iteration)) out.checkpoints.push_back({p.iteration, p.points});
  };
  AdaGradState adagrad;
  adagrad.master_step = c.master_step;
  adagrad.momentum = c.momentum;
  const std::optional<SupportBox> support =
      setup.prior.bounded_support() ? std::optional<SupportBox>(setup.prior.support()) : std::nullopt;

  switch (c.method) {
    case Method::direct: {
      const Posterior post(setup.prior, *setup.likelihood, *setup.model);
      out.final_particles = run_svgd(init, post.score_function(), static_cast<std::size_t>(c.total_iterations()),
                                     adagrad, support, observer)
                                .first;
      break;
    }
    case Method::prior_dnn: {
      const Eigen::MatrixXd design = initial_design(c, setup.prior);
      SurrogateFit fit = fit_offline_surrogate(design, *setup.model, setup.prior, c.hidden, c.offline_train,
                                               c.seeds.network, out.budget);
      out.surrogate = std::move(fit.params);
      out.trainset = std::move(fit.trainset);
      SurrogateMap map(*out.surrogate);
      const Posterior post(setup.prior, *setup.likelihood, map);
      out.final_particles = run_svgd(init, post.score_function(), static_cast<std::size_t>(c.total_iterations()),
                                     adagrad, support, observer)
                                .first;
      break;
    }
    case Method::ldnn: {
      const Eigen::MatrixXd design = initial_design(c, setup.prior);
      LdnnConfig lc;
      lc.refine = c.refine;
      lc.hidden = c.hidden;
      lc.offline_train = c.offline_train;
      lc.refine_train = c.refine_train;
      lc.adagrad = adagrad;
      lc.persist_adagrad = c.persist_adagrad;
      LdnnResult r = run_lsvgd(init, design, *setup.model, setup.prior, *setup.likelihood, lc, c.seeds.network, observer);
      out.final_particles = std::move(r.particles);
      out.budget = r.budget;
      out.trace = std::move(r.trace);
      out.surrogate = std::move(r.surrogate);
      out.trainset = std::move(r.trainset);
      break;
    }
  }
  out.exact_evals = setup.model->eval_count() - evals0;
  out.exact_jacobians = setup.model->jacobian_count() - jac0;
  if (c.method == Method::direct) out.budget.online_evals = out.exact_evals;
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

// ---------------------------------------------------------------------------
// Reference samples

/// Direct SVGD with many particles (double banana) or importance resampling from
/// a dense grid evaluation of the exact posterior (heat source).
inline Eigen::MatrixXd build_reference(const ExperimentConfig& c, const DataSet* data, int samples = 1000,
                                       int iterations = 2000, int grid_res = 64) {
  ProblemSetup setup = make_problem(c, data);
  std::mt19937_64 rng(c.seeds.particles ^ 0x5EEDULL);
  switch (c.problem) {
    case ProblemKind::double_banana: {
      const Posterior post(setup.prior, *setup.likelihood, *setup.model);
      AdaGradState a;
      a.master_step = c.master_step;
      a.momentum = c.momentum;
      const ParticleSet init(setup.prior.sample(samples, rng));
      return run_svgd(init, post.score_function(), static_cast<std::size_t>(iterations), a).first.points;
    }
    case ProblemKind::heat_source: {
      const Posterior post(setup.prior, *setup.likelihood, *setup.model);
      const double cell = 1.0 / grid_res;
      std::vector<double> logp(static_cast<std::size_t>(grid_res * grid_res));
      for (int a = 0; a < grid_res; ++a) {
        for (int b = 0; b < grid_res; ++b) {
          logp[static_cast<std::size_t>(a * grid_res + b)] = post.log_posterior(Eigen::Vector2d((a + 0.5) * cell, (b + 0.5) * cell));
        }
      }
      const double mx = *std::max_element(logp.begin(), logp.end());
      std::vector<double> w(logp.size());
      for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::exp(logp[k] - mx);
      std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
      std::uniform_real_distribution<double> jitter(0.0, 1.0);
      Eigen::MatrixXd out(samples, 2);
      for (int i = 0; i < samples; ++i) {
        const std::size_t k = pick(rng);
        const auto a = static_cast<double>(k / static_cast<std::size_t>(grid_res));
        const auto b = static_cast<double>(k % static_cast<std::size_t>(grid_res));
        out(i, 0) = (a + jitter(rng)) * cell;
        out(i, 1) = (b + jitter(rng)) * cell;
      }
      return out;
    }
    case ProblemKind::diffusion:
      break;
  }
  throw ConfigError("no reference sampler for the 9-parameter diffusion problem; use rel(k)");
}

inline std::string samples_to_csv(const Eigen::MatrixXd& s) {
  std::vector<std::string> header;
  for (Eigen::Index k = 0; k < s.cols(); ++k) header.push_back("x" + std::to_string(k));
  CsvWriter w(header);
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    std::vector<std::string> row;
    for (Eigen::Index k = 0; k < s.cols(); ++k) row.push_back(format_double(s(i, k)));
    w.row(row);
  }
  return w.str();
}

inline Eigen::MatrixXd samples_from_csv(const std::string& text) {
  const auto rows = parse_csv(text);
  detail::require(rows.size() >= 2, "sample CSV needs a header and at least one row");
  const std::size_t d = rows[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size() - 1), static_cast<Eigen::Index>(d));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    detail::require(rows[i].size() == d, "ragged sample CSV at row " + std::to_string(i));
    for (std::size_t k = 0; k < d; ++k) m(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(k)) = std::stod(rows[i][k]);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Run directory

/// rel(k) of the permeability built from the particle-mean weights, on res x res points of the unit square.
inline double permeability_rel_error(const Eigen::MatrixXd& particles, const Eigen::VectorXd& truth, int res) {
  detail::require(res >= 2, "rel(k) grid needs at least 2 points per axis");
  const auto centers = default_rbf_centers();
  const Eigen::VectorXd mean = particles.colwise().mean().transpose();
  return rel_error(permeability_on_grid(res - 1, mean, centers), permeability_on_grid(res - 1, truth, centers));
}

inline std::string particles_csv(const std::vector<Checkpoint>& cps) {
  const Eigen::Index d = cps.empty() ? 0 : cps.front().points.cols();
  std::vector<std::string> header{"iteration", "particle"};
  for (Eigen::Index k = 0; k < d; ++k) header.push_back("x" + std::to_string(k));
  CsvWriter w(header);
  for (const auto& cp : cps) {
    for (Eigen::Index i = 0; i < cp.points.rows(); ++i) {
      std::vector<std::string> row{std::to_string(cp.iteration), std::to_string(i)};
      for (Eigen::Index k = 0; k < d; ++k) row.push_back(format_double(cp.points(i, k)));
      w.row(row);
    }
  }
  return w.str();
}

inline json trace_record_to_json(const TraceRecord& r) {
  return {{"iteration", r.iteration},
          {"svgd_iteration", r.svgd_iteration},
          {"err", r.report.err},
          {"degenerate", r.report.degenerate},
          {"x_star", to_json_array(r.report.x_star)},
          {"refined", r.report.refined},
          {"points_added", r.report.points_added},
          {"trainset_size", r.trainset_size},
          {"R_used", r.report.radius_used},
          {"R", r.radius},
          {"shrunk", r.report.shrunk},
          {"retrained", r.report.retrained},
          {"retrain_rejected", r.report.retrain_rejected},
          {"online_evals", r.online_evals}};
}

/// Metric curve over checkpoints: MMD against a reference, or rel(k) for diffusion.
inline std::vector<std::pair<std::size_t, double>> metric_curve(const ExperimentConfig& c,
                                                                const std::vector<Checkpoint>& cps,
                                                                const Eigen::MatrixXd* reference,
                                                                const Eigen::VectorXd* truth) {
  std::vector<std::pair<std::size_t, double>> curve;
  if (reference) {
    const Bandwidth h = median_bandwidth(*reference);
    for (const auto& cp : cps) curve.emplace_back(cp.iteration, mmd(cp.points, *reference, h));
  } else if (truth && c.problem == ProblemKind::diffusion) {
    for (const auto& cp : cps) curve.emplace_back(cp.iteration, permeability_rel_error(cp.points, *truth, c.rel_grid));
  }
  return curve;
}

inline json budget_to_json(const ExperimentConfig& c, const RunOutput& r) {
  json j = {{"method", to_string(c.method)},
            {"online_evals", r.budget.online_evals},
            {"offline_evals", r.budget.offline_evals},
            {"exact_evals", r.exact_evals},
            {"exact_jacobian_evals", r.exact_jacobians},
            {"trainset_size", r.trainset.size()},
            {"wall_seconds", r.wall_seconds}};
  if (c.method == Method::ldnn) {
    j["eval_bound"] = c.refine.eval_bound();
    j["within_bound"] = r.budget.online_evals <= c.refine.eval_bound();
  }
  return j;
}

inline json manifest_json(const ExperimentConfig& c, const std::string& status, const std::string& error = {}) {
  json j = {{"format", "lsvgd-run-manifest"}, {"version", kVersion}, {"config", config_to_json(c)}, {"status", status}};
  if (!error.empty()) j["error"] = error;
  return j;
}

/// Writes manifest.json, particles.csv, budget.json, metrics.csv, and for
/// surrogate methods surrogate.json (plus trace.jsonl for LDNN).
inline void write_run_directory(const std::string& dir, const ExperimentConfig& c, const RunOutput& r,
                                const Eigen::MatrixXd* reference, const Eigen::VectorXd* truth) {
  std::filesystem::create_directories(dir);
  write_json_file(dir + "/manifest.json", manifest_json(c, "ok"));
  write_text_file(dir + "/particles.csv", particles_csv(r.checkpoints));
  write_json_file(dir + "/budget.json", budget_to_json(c, r));
  if (r.surrogate) save_surrogate(dir + "/surrogate.json", *r.surrogate);
  if (c.method == Method::ldnn) {
    std::string lines;
    for (const auto& rec : r.trace) lines += trace_record_to_json(rec).dump() + "\n";
    write_text_file(dir + "/trace.jsonl", lines);
  }
  const auto curve = metric_curve(c, r.checkpoints, reference, truth);
  if (!curve.empty()) {
    CsvWriter w({"iteration", reference ? "mmd" : "rel_k"});
    for (const auto& [it, v] : curve) w.row({std::to_string(it), format_double(v)});
    write_text_file(dir + "/metrics.csv", w.str());
  }
}

/// Output root override: relative output directories resolve under $LSVGD_OUTPUT_ROOT.
inline std::string resolve_output_dir(const std::string& dir) {
  const char* root = std::getenv("LSVGD_OUTPUT_ROOT");
  if (!root || std::filesystem::path(dir).is_absolute()) return dir;
  return (std::filesystem::path(root) / dir).string();
}

// ---------------------------------------------------------------------------
// Comparison

struct RunSummary {
  std::string dir;
  ExperimentConfig config;
  std::vector<Checkpoint> checkpoints;
  json budget;
};

inline RunSummary load_run(const std::string& dir) {
  RunSummary s;
  s.dir = dir;
  s.config = config_from_json(read_json_file(dir + "/manifest.json"));
  s.budget = read_json_file(dir + "/budget.json");
  const auto rows = parse_csv(read_text_file(dir + "/particles.csv"));
  detail::require(rows.size() >= 2, dir + "/particles.csv has no data");
  const std::size_t d = rows[0].size() - 2;
  std::map<std::size_t, std::vector<std::vector<double>>> by_iter;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::vector<double> x;
    for (std::size_t k = 0; k < d; ++k) x.push_back(std::stod(rows[i][2 + k]));
    by_iter[std::stoul(rows[i][0])].push_back(std::move(x));
  }
  for (auto& [it, pts] : by_iter) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t k = 0; k < d; ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = pts[i][k];
    }
    s.checkpoints.push_back({it, std::move(m)});
  }
  return s;
}

struct ComparisonReport {
  std::string table_csv;   // method, run, final metric, online/offline evals, wall time
  std::string curves_csv;  // run, iteration, metric
};

/// Compares runs of one problem against reference samples (or rel(k) for diffusion).
inline ComparisonReport compare_runs(const std::vector<RunSummary>& runs, const Eigen::MatrixXd* reference,
                                     const Eigen::VectorXd* truth) {
  detail::require(!runs.empty(), "nothing to compare");
  for (const auto& r : runs) {
    if (r.config.problem != runs.front().config.problem) throw InvalidInput("runs belong to different problems");
    if (r.config.particles != runs.front().config.particles) throw InvalidInput("runs use different particle counts");
  }
  const std::string metric = reference ? "mmd" : "rel_k";
  CsvWriter table({"method", "run", "final_" + metric, "online_evals", "offline_evals", "wall_seconds"});
  CsvWriter curves({"run", "iteration", metric});
  for (const auto& r : runs) {
    const auto curve = metric_curve(r.config, r.checkpoints, reference, truth);
    detail::require(!curve.empty(), "no metric available for run " + r.dir);
    for (const auto& [it, v] : curve) curves.row({r.dir, std::to_string(it), format_double(v)});
    table.row({to_string(r.config.method), r.dir, format_double(curve.back().second),
               std::to_string(r.budget.value("online_evals", std::size_t{0})),
               std::to_string(r.budget.value("offline_evals", std::size_t{0})),
               format_double(r.budget.value("wall_seconds", 0.0))});
  }
  return {table.str(), curves.str()};
}

}  // namespace lsvgd
