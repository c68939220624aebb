#pragma once

// Graph cohorts: representation, ingestion, synthetic generation, splitting
// and the initial weak-edge thresholding.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "igs/matrix.hpp"

namespace igs::graphdata {

enum class FeatureMode {
  kAdjacencyRow,  // X = A, recomputed whenever A changes
  kIdentity,      // X = I_n
  kProvided,      // loaded from files, never recomputed
};

FeatureMode parse_feature_mode(const std::string& name);
std::string to_string(FeatureMode mode);

/// Symmetric signed weighted graph with zero diagonal.
struct WeightedGraph {
  Matrix adjacency;
  Matrix features;
  std::size_t label = 0;
};

struct SplitIndex {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

enum class SplitPart { kTrain, kVal, kTest };

/// node id -> subnetwork label
using SubnetworkMap = std::vector<std::string>;

using EdgeList = std::vector<std::pair<std::size_t, std::size_t>>;

struct GraphDataset {
  std::vector<WeightedGraph> graphs;
  std::size_t num_classes = 0;
  SplitIndex split;
  std::optional<SubnetworkMap> subnetworks;
  FeatureMode feature_mode = FeatureMode::kAdjacencyRow;
  /// Ground-truth discriminative edges (i < j), when known.
  std::optional<EdgeList> planted_edges;

  std::size_t node_count() const { return graphs.empty() ? 0 : graphs.front().adjacency.rows(); }
  const std::vector<std::size_t>& part(SplitPart which) const;
};

struct SyntheticConfig {
  std::size_t nodes = 20;
  std::size_t graphs = 200;
  std::size_t subnetworks = 4;
  std::size_t block_a = 0;
  std::size_t block_b = 1;
  double shift = 0.4;  // added to a-b edges of class-1 graphs
  double noise = 0.3;  // half-width of the uniform edge noise
};

GraphDataset ingest_dataset(const std::filesystem::path& manifest);

/// Writes a manifest directory readable by ingest_dataset (plus the planted
/// edge sidecar when ground truth is known).
void write_dataset(const GraphDataset& dataset, const std::filesystem::path& directory);

/// Reads a `node_id,subnetwork` CSV. With `nodes` given, ids must cover
/// exactly 0..nodes-1; otherwise the row count sets the node count.
SubnetworkMap read_subnetwork_map(const std::filesystem::path& path,
                                  std::optional<std::size_t> nodes = std::nullopt);
void write_subnetwork_map(const std::filesystem::path& path, const SubnetworkMap& map);

GraphDataset generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

/// Node -> subnetwork index for the contiguous block layout of the generator.
std::vector<std::size_t> block_assignment(std::size_t nodes, std::size_t blocks);

SplitIndex stratified_split(const GraphDataset& dataset, std::array<double, 3> fractions,
                            std::uint64_t seed);

/// Keeps the top `keep_fraction` of each graph's upper-triangle positions by
/// |weight| (ties broken by lexicographic (i, j)) and zeroes the rest.
GraphDataset initial_threshold(const GraphDataset& dataset, double keep_fraction);

GraphDataset default_node_features(const GraphDataset& dataset, FeatureMode mode);

/// Recomputes X from A for the adjacency-row mode; no-op otherwise.
void refresh_features(WeightedGraph& graph, FeatureMode mode);

/// Non-zero strictly-upper-triangle entries.
std::size_t edge_count(const Matrix& adjacency);

/// edge_count / (n (n - 1) / 2).
double sparsity(const Matrix& adjacency);

/// Mean per-graph sparsity over the cohort.
double mean_sparsity(const GraphDataset& dataset);

/// Checks the dataset invariants; throws ContractError on violation.
void validate(const GraphDataset& dataset);

}  // namespace igs::graphdata
