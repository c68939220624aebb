#pragma once

// Experiment suite: JSON plans, (method, split) fan-out, run directories,
// summary/sparsity reports and subnetwork-level mask aggregation.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "igs/framework.hpp"
#include "igs/graphdata.hpp"
#include "igs/sparsifiers.hpp"

namespace igs::harness {

/// Either a manifest on disk or a synthetic cohort generated on the fly.
struct DatasetSource {
  std::optional<std::filesystem::path> manifest;
  std::optional<graphdata::SyntheticConfig> synthetic;
  std::uint64_t synthetic_seed = 0;
};

struct ExperimentPlan {
  DatasetSource dataset;
  std::vector<sparsifiers::Method> methods{sparsifiers::Method::kIGS};
  /// Method hyperparameters; the method field is ignored.
  sparsifiers::SparsifierSpec method_params;
  /// Framework and GCN settings; the spec and seed fields are filled per run.
  framework::FrameworkConfig framework;
  std::uint64_t seed = 0;
  std::size_t split_seeds = 4;
  std::array<double, 3> split_fractions{0.7, 0.15, 0.15};
  double initial_keep_fraction = 0.5;
  std::optional<graphdata::FeatureMode> features;
  /// Also train the GCN on the thresholded, otherwise unsparsified graphs.
  bool include_original = false;
  std::size_t workers = 1;
  bool export_masks = true;
  std::filesystem::path output_dir = "runs";

  void validate() const;
};

/// Parses a JSON plan. Relative paths resolve against `base_dir`.
ExperimentPlan parse_plan(const std::string& json_text, const std::filesystem::path& base_dir = {});
ExperimentPlan load_plan(const std::filesystem::path& path);
/// Fully resolved plan as JSON (every default spelled out).
std::string plan_to_json(const ExperimentPlan& plan);

/// Name used for the unsparsified baseline in run directories and reports.
inline constexpr const char* kOriginalMethod = "Original";

struct RunOutcome {
  std::string method;
  std::size_t split = 0;
  std::uint64_t seed = 0;
  std::string status;  // "ok", "partial" (diverged after some iterations) or "failed"
  std::string error;
  std::vector<framework::IterationRecord> records;
  std::size_t best_iteration = 0;
  double test_acc = 0.0;
  double sparsity = 0.0;  // at the best iteration
  std::optional<Matrix> survival;
  std::optional<Matrix> final_scores;
  std::filesystem::path directory;
};

struct SummaryRow {
  std::string method;
  std::size_t runs = 0;
  double mean_test_acc = 0.0;
  double std_test_acc = 0.0;  // population standard deviation
  double mean_sparsity = 0.0;  // fraction at the best iteration
  double average_rank = 0.0;

  friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

struct SuiteResult {
  std::vector<SummaryRow> summary;
  std::vector<RunOutcome> runs;
};

/// Loads the dataset named by the plan and applies the feature override.
graphdata::GraphDataset load_dataset(const ExperimentPlan& plan);

/// Seed of split `split`: plan seed + split index.
std::uint64_t run_seed(const ExperimentPlan& plan, std::size_t split);

/// Stratified split with the run seed, then the initial weak-edge threshold.
graphdata::GraphDataset prepare_split(const graphdata::GraphDataset& dataset,
                                      const ExperimentPlan& plan, std::size_t split);

/// Runs the framework on a prepared split (or, for the Original baseline, one
/// normal training run) and writes the run directory. Run failures do not
/// throw; they are reported through the outcome's status.
RunOutcome run_single(const graphdata::GraphDataset& prepared, const ExperimentPlan& plan,
                      const std::string& method, std::size_t split,
                      const std::filesystem::path& run_dir);

/// Runs every (method, split) job, writes run directories under
/// output_dir/runs and the reports under output_dir/reports.
SuiteResult run_experiment_suite(const ExperimentPlan& plan);

/// Mean and population std of best-iteration test accuracy per method,
/// ranked by mean accuracy (rank 1 = best, ties share the mean rank).
/// Failed runs are skipped with a warning.
std::vector<SummaryRow> summarize(const std::vector<RunOutcome>& runs);

/// 1-based fractional ranks of `scores`, higher is better.
std::vector<double> fractional_ranks(const std::vector<double>& scores);

/// Reads the run directories under `output_dir` back into outcomes.
std::vector<RunOutcome> load_runs(const std::filesystem::path& output_dir);

/// Writes output_dir/reports from the run directories. Idempotent.
std::vector<SummaryRow> emit_reports(const std::filesystem::path& output_dir);

struct SubnetworkAggregate {
  std::vector<std::string> names;  // in order of first appearance by node id
  Matrix values;                   // names.size() x names.size(), symmetric for symmetric input
};

/// Entry (P, Q) = mean of values[i][j] over i in P, j in Q, i != j.
SubnetworkAggregate subnetwork_aggregate(const Matrix& values, const graphdata::SubnetworkMap& map);

/// CSV with a header row of names and one labelled row per subnetwork.
std::string format_aggregate(const SubnetworkAggregate& aggregate);

/// Upper-triangle positions of `support`, most retained first: by
/// iterations survived, then by final score, then lexicographically.
graphdata::EdgeList retained_edge_ranking(const Matrix& survival, const Matrix& final_scores,
                                          const masking::BinaryMask& support);

/// Fraction of the first k ranked edges that are planted.
double precision_at_k(const graphdata::EdgeList& ranking, const graphdata::EdgeList& planted,
                      std::size_t k);

}  // namespace igs::harness
