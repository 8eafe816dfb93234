// lsvgd: generate synthetic data, run samplers, build references, compare runs.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lsvgd/experiment.hpp"

namespace {

using namespace lsvgd;

struct Overrides {
  std::string config;
  std::string problem, method, initial_particles;
  std::optional<int> particles, q, i_max, t, iterations, design_count, epochs, refine_epochs;
  std::optional<double> r, tol, rho, master_step, noise_std;
  std::optional<std::uint64_t> seed_particles, seed_design, seed_network, seed_data;
  std::vector<int> hidden;
  std::string data, reference, output;
};

void add_config_options(CLI::App* app, Overrides& o) {
  app->add_option("-c,--config", o.config, "JSON config or run manifest");
  app->add_option("--problem", o.problem, "double-banana | heat-source | diffusion");
  app->add_option("--method", o.method, "direct | prior-dnn | ldnn");
  app->add_option("--particles", o.particles, "number of particles N");
  app->add_option("--initial-particles", o.initial_particles, "prior | standard-normal");
  app->add_option("--q", o.q, "max points added per refinement");
  app->add_option("--r", o.r, "initial separation radius");
  app->add_option("--tol", o.tol, "error-indicator tolerance");
  app->add_option("--rho", o.rho, "radius shrink factor");
  app->add_option("--i-max", o.i_max, "outer refinement iterations");
  app->add_option("--t", o.t, "SVGD steps between refinements");
  app->add_option("--iterations", o.iterations, "total SVGD iterations (default I_max * T)");
  app->add_option("--master-step", o.master_step, "AdaGrad master step size");
  app->add_option("--hidden", o.hidden, "hidden layer widths");
  app->add_option("--epochs", o.epochs, "offline training epochs");
  app->add_option("--refine-epochs", o.refine_epochs, "epochs per warm-start retrain");
  app->add_option("--design-count", o.design_count, "initial design size");
  app->add_option("--noise-std", o.noise_std, "measurement noise standard deviation");
  app->add_option("--seed-particles", o.seed_particles);
  app->add_option("--seed-design", o.seed_design);
  app->add_option("--seed-network", o.seed_network);
  app->add_option("--seed-data", o.seed_data);
  app->add_option("--data", o.data, "synthetic-data JSON (PDE problems)");
  app->add_option("--reference", o.reference, "reference samples CSV");
}

ExperimentConfig resolve(const Overrides& o) {
  json j = o.config.empty() ? json::object() : read_json_file(o.config);
  if (j.contains("config")) j = j.at("config");
  if (!o.problem.empty()) j["problem"] = o.problem;
  if (!j.contains("problem")) throw ConfigError("no problem given (use --problem or a config file)");
  if (!o.method.empty()) j["method"] = o.method;
  ExperimentConfig c = config_from_json(j);
  if (o.particles) c.particles = *o.particles;
  if (!o.initial_particles.empty()) c.initial_particles = o.initial_particles;
  if (o.q) c.refine.Q = *o.q;
  if (o.r) c.refine.R = *o.r;
  if (o.tol) c.refine.tol = *o.tol;
  if (o.rho) c.refine.rho = *o.rho;
  if (o.i_max) c.refine.I_max = *o.i_max;
  if (o.t) c.refine.T = *o.t;
  if (o.iterations) c.iterations = *o.iterations;
  if (o.master_step) c.master_step = *o.master_step;
  if (!o.hidden.empty()) c.hidden = o.hidden;
  if (o.epochs) c.offline_train.epochs = *o.epochs;
  if (o.refine_epochs) c.refine_train.epochs = *o.refine_epochs;
  if (o.design_count) c.design.count = *o.design_count;
  if (o.noise_std) c.noise_std = *o.noise_std;
  if (o.seed_particles) c.seeds.particles = *o.seed_particles;
  if (o.seed_design) c.seeds.design = *o.seed_design;
  if (o.seed_network) c.seeds.network = *o.seed_network;
  if (o.seed_data) c.seeds.data = *o.seed_data;
  if (!o.data.empty()) c.data_file = o.data;
  if (!o.reference.empty()) c.reference_file = o.reference;
  if (!o.output.empty()) c.output_dir = o.output;
  validate_config(c);
  return c;
}

std::optional<DataSet> load_data(const ExperimentConfig& c) {
  if (c.problem == ProblemKind::double_banana) return std::nullopt;
  if (c.data_file.empty()) throw ConfigError(to_string(c.problem) + " needs --data (see generate-data)");
  if (!std::filesystem::exists(c.data_file)) throw ConfigError("data file not found: " + c.data_file);
  return dataset_from_json(read_json_file(c.data_file));
}

int cmd_generate_data(const Overrides& o) {
  const ExperimentConfig c = resolve(o);
  const DataSet d = generate_dataset(c);
  const std::string path = o.output.empty() ? "data/" + to_string(c.problem) + "-data.json" : o.output;
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  write_json_file(path, dataset_to_json(d));
  std::cout << "wrote " << path << " (" << d.observations.size() << " observations)\n";
  return 0;
}

int cmd_config(const Overrides& o) {
  Overrides in = o;
  in.output.clear();  // -o names the file here, not the run directory
  const json j = config_to_json(resolve(in));
  if (o.output.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    write_json_file(o.output, j);
    std::cout << "wrote " << o.output << "\n";
  }
  return 0;
}

int cmd_run(const Overrides& o) {
  ExperimentConfig c = resolve(o);
  const std::optional<DataSet> data = load_data(c);
  std::optional<Eigen::MatrixXd> reference;
  if (!c.reference_file.empty()) {
    reference = samples_from_csv(read_text_file(c.reference_file));
    if (reference->cols() != c.dim()) throw ConfigError("reference dimension does not match problem");
  }
  const std::string dir = resolve_output_dir(c.output_dir);
  std::filesystem::create_directories(dir);
  try {
    const RunOutput r = run_experiment(c, data ? &*data : nullptr);
    const Eigen::VectorXd* truth = data ? &data->true_parameter : nullptr;
    write_run_directory(dir, c, r, reference ? &*reference : nullptr, truth);
    std::cout << to_string(c.method) << " on " << to_string(c.problem) << ": online evals " << r.budget.online_evals
              << ", offline evals " << r.budget.offline_evals << ", " << r.wall_seconds << " s -> " << dir << "\n";
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    write_json_file(dir + "/manifest.json", manifest_json(c, "error", e.what()));
    throw;
  }
  return 0;
}

int cmd_reference(const Overrides& o, int samples, int iterations, int grid) {
  const ExperimentConfig c = resolve(o);
  const std::optional<DataSet> data = load_data(c);
  const Eigen::MatrixXd ref = build_reference(c, data ? &*data : nullptr, samples, iterations, grid);
  const std::string path = o.output.empty() ? to_string(c.problem) + "-reference.csv" : o.output;
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  write_text_file(path, samples_to_csv(ref));
  std::cout << "wrote " << path << " (" << ref.rows() << " samples)\n";
  return 0;
}

int cmd_compare(const std::vector<std::string>& runs, const std::string& reference_file, const std::string& data_file,
                const std::string& output) {
  std::vector<RunSummary> loaded;
  for (const auto& r : runs) loaded.push_back(load_run(r));
  std::optional<Eigen::MatrixXd> reference;
  std::optional<Eigen::VectorXd> truth;
  if (!reference_file.empty()) reference = samples_from_csv(read_text_file(reference_file));
  if (!data_file.empty()) truth = dataset_from_json(read_json_file(data_file)).true_parameter;
  if (!reference && !truth) throw ConfigError("compare needs --reference (MMD) or --data (rel(k))");
  const ComparisonReport rep = compare_runs(loaded, reference ? &*reference : nullptr, truth ? &*truth : nullptr);
  if (output.empty()) {
    std::cout << rep.table_csv;
  } else {
    std::filesystem::create_directories(output);
    write_text_file(output + "/comparison.csv", rep.table_csv);
    write_text_file(output + "/curves.csv", rep.curves_csv);
    std::cout << "wrote " << output << "/comparison.csv and curves.csv\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SVGD with adaptive local neural-network surrogates"};
  app.require_subcommand(1);

  Overrides gen_o, run_o, ref_o, cfg_o;
  auto* cfg = app.add_subcommand("config", "print the resolved configuration as JSON");
  add_config_options(cfg, cfg_o);
  cfg->add_option("-o,--output", cfg_o.output, "write to a file instead");

  auto* gen = app.add_subcommand("generate-data", "write a synthetic-data JSON for a PDE problem");
  add_config_options(gen, gen_o);
  gen->add_option("-o,--output", gen_o.output, "output file");

  auto* run = app.add_subcommand("run", "run one sampler and write a run directory");
  add_config_options(run, run_o);
  run->add_option("-o,--output", run_o.output, "run directory");

  int samples = 1000, ref_iterations = 2000, grid = 64;
  auto* ref = app.add_subcommand("reference", "build reference posterior samples");
  add_config_options(ref, ref_o);
  ref->add_option("-o,--output", ref_o.output, "output CSV");
  ref->add_option("--samples", samples, "number of reference samples");
  ref->add_option("--ref-iterations", ref_iterations, "SVGD iterations (double banana)");
  ref->add_option("--grid", grid, "grid resolution per axis (heat source)");

  std::vector<std::string> runs;
  std::string cmp_reference, cmp_data, cmp_output;
  auto* cmp = app.add_subcommand("compare", "tabulate final metrics and per-iteration curves");
  cmp->add_option("runs", runs, "run directories")->required();
  cmp->add_option("--reference", cmp_reference, "reference samples CSV");
  cmp->add_option("--data", cmp_data, "synthetic-data JSON with the true parameter (diffusion)");
  cmp->add_option("-o,--output", cmp_output, "output directory");

  app.add_subcommand("version", "print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*cfg) return cmd_config(cfg_o);
    if (*gen) return cmd_generate_data(gen_o);
    if (*run) return cmd_run(run_o);
    if (*ref) return cmd_reference(ref_o, samples, ref_iterations, grid);
    if (*cmp) return cmd_compare(runs, cmp_reference, cmp_data, cmp_output);
    std::cout << "lsvgd " << kVersion << "\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
