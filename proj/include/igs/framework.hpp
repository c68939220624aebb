#pragma once

// The iterative sparsification loop: learn a mask, apply it, retrain a fresh
// GCN normally on the sparsified graphs, extract the joint gradient map for
// the next iteration, and finally pick the iteration with the lowest
// validation loss.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "igs/gcn.hpp"
#include "igs/graphdata.hpp"
#include "igs/masking.hpp"
#include "igs/sparsifiers.hpp"

namespace igs::framework {

struct FrameworkConfig {
  std::size_t iterations = 55;
  double removal_percent = 5.0;
  sparsifiers::SparsifierSpec spec;
  gcn::GcnConfig gcn;
  std::uint64_t seed = 0;
  /// Record wall-clock seconds per iteration. Off by default so that
  /// trajectories are reproducible byte for byte.
  bool timing = false;

  void validate() const;
};

struct IterationRecord {
  std::size_t iteration = 0;  // 1-based
  double sparsity = 0.0;      // mean fraction of upper-triangle positions still non-zero
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  std::string mask_file;  // export reference, empty when not exported
  double seconds = 0.0;

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

struct IterationOutput {
  graphdata::GraphDataset graphs;  // sparsified cohort
  IterationRecord record;
  sparsifiers::MaskProduct mask;
  std::optional<masking::GradientMap> gradient_map;
};

/// Steps 1-4 of one iteration. `gradient_map` is the previous iteration's T
/// (absent at iteration 1).
IterationOutput run_iteration(const graphdata::GraphDataset& current,
                              const masking::GradientMap* gradient_map,
                              const FrameworkConfig& config, std::size_t iteration);

struct FrameworkResult {
  std::vector<IterationRecord> records;
  std::size_t best_iteration = 0;  // 1-based, 0 when no iteration completed
  graphdata::GraphDataset best_graphs;
  /// Iterations each upper-triangle position stayed in the joint support
  /// (joint-mask methods only; zero outside the initial support).
  std::optional<Matrix> survival;
  /// Last iteration's soft scores restricted to the surviving support
  /// (joint-mask methods only).
  std::optional<Matrix> final_scores;
  /// Set when an iteration diverged and the run was cut short.
  std::optional<std::string> error;
};

/// Called after every completed iteration, e.g. to export masks. May set
/// record.mask_file.
using IterationObserver = std::function<void(IterationRecord&, const IterationOutput&)>;

FrameworkResult run_framework(const graphdata::GraphDataset& dataset, const FrameworkConfig& config,
                              const IterationObserver& observer = {});

/// Earliest 1-based index with the minimum validation loss.
std::size_t select_best(std::span<const IterationRecord> records);

/// CSV `iteration,sparsity,train_loss,val_loss,val_acc,test_acc,seconds`.
void write_trajectory(const std::filesystem::path& path, std::span<const IterationRecord> records);
std::vector<IterationRecord> read_trajectory(const std::filesystem::path& path);

/// Seeds of the per-iteration stages. They do not depend on the method, so
/// two methods with the same seed differ only in what they do with them.
std::uint64_t mask_stage_seed(std::uint64_t seed, std::size_t iteration);
std::uint64_t retrain_stage_seed(std::uint64_t seed, std::size_t iteration);
std::uint64_t phi_init_seed(std::uint64_t seed, std::size_t iteration);

}  // namespace igs::framework
