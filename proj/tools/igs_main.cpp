// igs: generate synthetic cohorts, run sparsification experiments, build
// reports and aggregate masks by subnetwork.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "igs/csv_io.hpp"
#include "igs/errors.hpp"
#include "igs/graphdata.hpp"
#include "igs/harness.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

int cmd_generate(const igs::graphdata::SyntheticConfig& config, std::uint64_t seed,
                 const fs::path& out) {
  const auto dataset = igs::graphdata::generate_synthetic(config, seed);
  igs::graphdata::write_dataset(dataset, out);
  std::cout << "wrote " << dataset.graphs.size() << " graphs to " << out.string() << "\n";
  return 0;
}

int cmd_run(const fs::path& config_path, const std::optional<fs::path>& output_dir,
            std::optional<std::size_t> workers) {
  auto plan = igs::harness::load_plan(config_path);
  if (output_dir) plan.output_dir = *output_dir;
  if (workers) plan.workers = *workers;
  plan.validate();
  const auto result = igs::harness::run_experiment_suite(plan);
  std::size_t failed = 0;
  for (const auto& run : result.runs)
    if (run.status == "failed") ++failed;
  std::cout << igs::io::read_text(plan.output_dir / "reports" / "summary.csv");
  if (failed == result.runs.size()) {
    std::cerr << "error: every run failed\n";
    return kExitRuntime;
  }
  return 0;
}

int cmd_report(const fs::path& dir) {
  igs::harness::emit_reports(dir);
  std::cout << igs::io::read_text(dir / "reports" / "summary.csv");
  return 0;
}

int cmd_explain(const std::optional<fs::path>& mask, const std::optional<fs::path>& run_dir,
                const std::optional<fs::path>& subnetworks, const std::optional<fs::path>& out) {
  if (mask.has_value() == run_dir.has_value())
    throw igs::ConfigError("explain needs exactly one of --mask or --run");
  fs::path matrix_file;
  fs::path map_file;
  if (mask) {
    matrix_file = *mask;
    if (!subnetworks) throw igs::ConfigError("--mask requires --subnetworks");
    map_file = *subnetworks;
  } else {
    matrix_file = *run_dir / "scores" / "final_scores.csv";
    if (!fs::exists(matrix_file))
      throw igs::ConfigError(run_dir->string() + " has no final scores (individual-mask method?)");
    map_file = subnetworks ? *subnetworks : run_dir->parent_path().parent_path().parent_path() / "subnetworks.csv";
  }
  const auto values = igs::io::read_matrix_csv(matrix_file);
  const auto map = igs::graphdata::read_subnetwork_map(map_file, values.rows());
  const std::string csv = igs::harness::format_aggregate(igs::harness::subnetwork_aggregate(values, map));
  if (out)
    igs::io::write_text(*out, csv);
  else
    std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterative gradient-guided sparsification of graph cohorts"};
  app.require_subcommand(1);

  igs::graphdata::SyntheticConfig synth;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "Write a synthetic planted-subnetwork cohort");
  generate->add_option("--out", gen_out, "Output manifest directory")->required();
  generate->add_option("--nodes", synth.nodes, "Nodes per graph")->capture_default_str();
  generate->add_option("--graphs", synth.graphs, "Number of graphs")->capture_default_str();
  generate->add_option("--subnetworks", synth.subnetworks, "Number of node blocks")->capture_default_str();
  generate->add_option("--block-a", synth.block_a, "First signal block")->capture_default_str();
  generate->add_option("--block-b", synth.block_b, "Second signal block")->capture_default_str();
  generate->add_option("--shift", synth.shift, "Class-1 weight shift on signal edges")->capture_default_str();
  generate->add_option("--noise", synth.noise, "Half-width of uniform edge noise")->capture_default_str();
  generate->add_option("--seed", gen_seed, "Random seed")->capture_default_str();

  std::string run_config;
  std::optional<std::string> run_out;
  std::optional<std::size_t> run_workers;
  auto* run = app.add_subcommand("run", "Execute an experiment plan");
  run->add_option("--config", run_config, "JSON experiment plan")->required();
  run->add_option("--output-dir", run_out, "Override output_dir from the plan");
  run->add_option("--workers", run_workers, "Override worker count");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Rebuild reports for a run directory");
  report->add_option("--dir", report_dir, "Experiment output directory")->required();

  std::optional<std::string> explain_mask, explain_run, explain_map, explain_out;
  auto* explain = app.add_subcommand("explain", "Aggregate a mask or score matrix by subnetwork");
  explain->add_option("--mask", explain_mask, "Square mask/score CSV");
  explain->add_option("--run", explain_run, "Run directory (uses its final scores)");
  explain->add_option("--subnetworks", explain_map, "node_id,subnetwork CSV");
  explain->add_option("--out", explain_out, "Write the aggregate here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  auto as_path = [](const std::optional<std::string>& s) -> std::optional<fs::path> {
    if (!s) return std::nullopt;
    return fs::path(*s);
  };

  try {
    if (generate->parsed()) return cmd_generate(synth, gen_seed, gen_out);
    if (run->parsed()) return cmd_run(run_config, as_path(run_out), run_workers);
    if (report->parsed()) return cmd_report(report_dir);
    if (explain->parsed())
      return cmd_explain(as_path(explain_mask), as_path(explain_run), as_path(explain_map),
                         as_path(explain_out));
  } catch (const igs::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const igs::IngestionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const igs::ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
