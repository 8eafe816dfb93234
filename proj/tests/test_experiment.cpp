#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "lsvgd/experiment.hpp"

using namespace lsvgd;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lsvgd_test_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig quick_ldnn() {
  ExperimentConfig c = default_config(ProblemKind::double_banana, Method::ldnn);
  c.particles = 30;
  c.refine.I_max = 4;
  c.offline_train.epochs = 200;
  c.refine_train.epochs = 50;
  return c;
}

}  // namespace

TEST(Config, JsonRoundTrip) {
  ExperimentConfig c = default_config(ProblemKind::heat_source, Method::prior_dnn);
  c.design.box = std::make_pair(Eigen::Vector2d(0, 0), Eigen::Vector2d(0.5, 0.5));
  c.seeds.network = 77;
  c.refine.tol = 0.05;
  const ExperimentConfig d = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(d), config_to_json(c));
  EXPECT_EQ(d.problem, ProblemKind::heat_source);
  EXPECT_EQ(d.method, Method::prior_dnn);
  EXPECT_EQ(d.design.box->second, Eigen::Vector2d(0.5, 0.5));
}

TEST(Config, ManifestIsAcceptedAsConfig) {
  const ExperimentConfig c = quick_ldnn();
  const ExperimentConfig d = config_from_json(manifest_json(c, "ok"));
  EXPECT_EQ(config_to_json(d), config_to_json(c));
}

TEST(Config, PerProblemDefaults) {
  const ExperimentConfig db = default_config(ProblemKind::double_banana);
  EXPECT_EQ(db.particles, 100);
  EXPECT_EQ(db.design.count, 10);
  EXPECT_EQ(db.total_iterations(), 300);
  EXPECT_EQ(db.initial_particles, "standard-normal");
  const ExperimentConfig hs = default_config(ProblemKind::heat_source);
  EXPECT_EQ(hs.noise_std, 0.2);
  EXPECT_EQ(hs.initial_particles, "prior");
  const ExperimentConfig df = default_config(ProblemKind::diffusion);
  EXPECT_EQ(df.hidden, (std::vector<int>{50, 50, 50}));
  EXPECT_EQ(df.design.count, 100);
  EXPECT_EQ(resolved_truth(df).size(), 9);
  EXPECT_EQ(df.initial_particles, "prior");
}

TEST(Config, ValidationErrors) {
  ExperimentConfig c = default_config(ProblemKind::heat_source, Method::direct);
  EXPECT_THROW(validate_config(c), ConfigError);
  c = default_config(ProblemKind::double_banana);
  c.particles = 1;
  EXPECT_THROW(validate_config(c), ConfigError);
  c = default_config(ProblemKind::double_banana);
  c.refine.rho = 1.5;
  EXPECT_THROW(validate_config(c), ConfigError);
  EXPECT_THROW(config_from_json(json{{"problem", "banana"}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"problem", "diffusion"}, {"particles", "many"}}), ConfigError);
  EXPECT_THROW(config_from_json(json::object()), ConfigError);
}

TEST(Checkpoints, ScheduleHasSnapshotsAndCadence) {
  ExperimentConfig c = default_config(ProblemKind::double_banana, Method::direct);
  const auto s = checkpoint_schedule(c);
  for (std::size_t t : {0, 10, 20, 100, 290, 300}) EXPECT_TRUE(s.count(t)) << t;
  EXPECT_FALSE(s.count(15));
  c.iterations = 105;
  c.refine.T = 50;
  const auto s2 = checkpoint_schedule(c);
  EXPECT_EQ(s2, (std::set<std::size_t>{0, 10, 50, 100, 105}));
}

TEST(Data, GenerateAndRoundTrip) {
  ExperimentConfig c = default_config(ProblemKind::heat_source);
  const DataSet d = generate_dataset(c);
  EXPECT_EQ(d.observations.size(), 18);
  const DataSet e = dataset_from_json(json::parse(dataset_to_json(d).dump()));
  EXPECT_EQ(e.observations, d.observations);
  EXPECT_EQ(e.true_parameter, d.true_parameter);
  EXPECT_EQ(dataset_to_json(e).dump(), dataset_to_json(d).dump());
  EXPECT_EQ(dataset_to_json(generate_dataset(c)).dump(), dataset_to_json(d).dump());

  const DataSet f = generate_dataset(default_config(ProblemKind::diffusion));
  EXPECT_EQ(f.observations.size(), 75);
  EXPECT_THROW(generate_dataset(default_config(ProblemKind::double_banana)), ConfigError);
}

TEST(Run, PdeProblemNeedsData) {
  EXPECT_THROW(run_experiment(default_config(ProblemKind::heat_source), nullptr), ConfigError);
}

TEST(Run, DirectDoubleBananaCheckpoints) {
  const ExperimentConfig c = default_config(ProblemKind::double_banana, Method::direct);
  const RunOutput r = run_experiment(c, nullptr);
  std::set<std::size_t> its;
  for (const auto& cp : r.checkpoints) {
    its.insert(cp.iteration);
    EXPECT_EQ(cp.points.rows(), 100);
  }
  EXPECT_TRUE(its.count(10) && its.count(100) && its.count(300));
  EXPECT_EQ(r.budget.online_evals, 30000u);
  EXPECT_EQ(r.exact_jacobians, 30000u);
}

TEST(Run, LdnnDirectoryAndReplay) {
  const fs::path dir = scratch("ldnn_run");
  ExperimentConfig c = quick_ldnn();
  c.output_dir = dir.string();
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd ref = DoubleBananaTarget().prior().sample(50, rng);
  const RunOutput r = run_experiment(c, nullptr);
  write_run_directory(c.output_dir, c, r, &ref, nullptr);
  for (const char* f : {"manifest.json", "particles.csv", "trace.jsonl", "budget.json", "metrics.csv", "surrogate.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const json budget = read_json_file((dir / "budget.json").string());
  EXPECT_LE(budget.at("online_evals").get<std::size_t>(), 24u);
  EXPECT_TRUE(budget.at("within_bound").get<bool>());

  // particles.csv: iteration, particle, x0, x1
  const auto rows = parse_csv(read_text_file((dir / "particles.csv").string()));
  EXPECT_EQ(rows[0], (std::vector<std::string>{"iteration", "particle", "x0", "x1"}));
  EXPECT_EQ((rows.size() - 1) % 30, 0u);

  // replay from the manifest alone
  const fs::path dir2 = scratch("ldnn_replay");
  ExperimentConfig c2 = config_from_json(read_json_file((dir / "manifest.json").string()));
  c2.output_dir = dir2.string();
  write_run_directory(c2.output_dir, c2, run_experiment(c2, nullptr), &ref, nullptr);
  for (const char* f : {"particles.csv", "metrics.csv", "trace.jsonl", "surrogate.json"}) {
    EXPECT_EQ(read_text_file((dir / f).string()), read_text_file((dir2 / f).string())) << f;
  }
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST(Compare, RunAgainstItselfAndMismatch) {
  const fs::path dir = scratch("cmp_run");
  ExperimentConfig c = default_config(ProblemKind::double_banana, Method::direct);
  c.iterations = 20;
  c.particles = 40;
  const RunOutput r = run_experiment(c, nullptr);
  write_run_directory(dir.string(), c, r, nullptr, nullptr);
  const RunSummary s = load_run(dir.string());
  ASSERT_FALSE(s.checkpoints.empty());
  EXPECT_EQ(s.checkpoints.back().iteration, 20u);
  EXPECT_EQ(s.checkpoints.back().points, r.final_particles.points);

  const Eigen::MatrixXd self = s.checkpoints.back().points;
  const ComparisonReport rep = compare_runs({s}, &self, nullptr);
  const auto table = parse_csv(rep.table_csv);
  ASSERT_EQ(table.size(), 2u);
  EXPECT_EQ(table[1][0], "direct");
  EXPECT_EQ(std::stod(table[1][2]), 0.0);
  EXPECT_EQ(rep.table_csv, compare_runs({s}, &self, nullptr).table_csv);

  RunSummary other = s;
  other.config.problem = ProblemKind::heat_source;
  EXPECT_THROW(compare_runs({s, other}, &self, nullptr), InvalidInput);
  fs::remove_all(dir);
}

TEST(Reference, HeatSourceResamplingStaysInBox) {
  ExperimentConfig c = default_config(ProblemKind::heat_source);
  c.grid.M = 12;
  c.grid.dt = 0.05;
  const DataSet d = generate_dataset(c);
  const Eigen::MatrixXd ref = build_reference(c, &d, 200, 0, 16);
  EXPECT_EQ(ref.rows(), 200);
  EXPECT_GE(ref.minCoeff(), 0.0);
  EXPECT_LE(ref.maxCoeff(), 1.0);
  EXPECT_THROW(build_reference(default_config(ProblemKind::diffusion), nullptr), ConfigError);
}

TEST(Output, RelativeDirectoriesResolveUnderRoot) {
  ::setenv("LSVGD_OUTPUT_ROOT", "/tmp/root_override", 1);
  EXPECT_EQ(resolve_output_dir("runs/a"), "/tmp/root_override/runs/a");
  EXPECT_EQ(resolve_output_dir("/abs/b"), "/abs/b");
  ::unsetenv("LSVGD_OUTPUT_ROOT");
  EXPECT_EQ(resolve_output_dir("runs/a"), "runs/a");
}

TEST(Metrics, PermeabilityRelErrorOfTruthIsZero) {
  const Eigen::VectorXd w = resolved_truth(default_config(ProblemKind::diffusion));
  Eigen::MatrixXd particles(3, 9);
  particles.row(0) = w.transpose() * 0.5;
  particles.row(1) = w.transpose() * 1.5;
  particles.row(2) = w.transpose();
  EXPECT_NEAR(permeability_rel_error(particles, w, 64), 0.0, 1e-15);
}
