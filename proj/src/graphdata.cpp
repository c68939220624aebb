#include "igs/graphdata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "igs/csv_io.hpp"
#include "igs/errors.hpp"
#include "igs/log.hpp"

namespace igs::graphdata {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Asymmetry up to this level is averaged away with a warning; above it the
// file is rejected.
constexpr double kSymmetryWarn = 1e-8;
constexpr double kSymmetryReject = 1e-6;

void symmetrize_in_place(Matrix& a) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    a(i, i) = 0.0;
    for (std::size_t j = i + 1; j < a.cols(); ++j) {
      const double mean = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = mean;
      a(j, i) = mean;
    }
  }
}

}  // namespace

FeatureMode parse_feature_mode(const std::string& name) {
  if (name == "adjacency-row") return FeatureMode::kAdjacencyRow;
  if (name == "identity") return FeatureMode::kIdentity;
  if (name == "provided") return FeatureMode::kProvided;
  throw ConfigError("unknown feature mode '" + name + "' (expected adjacency-row or identity)");
}

std::string to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::kAdjacencyRow: return "adjacency-row";
    case FeatureMode::kIdentity: return "identity";
    case FeatureMode::kProvided: return "provided";
  }
  return "unknown";
}

const std::vector<std::size_t>& GraphDataset::part(SplitPart which) const {
  switch (which) {
    case SplitPart::kTrain: return split.train;
    case SplitPart::kVal: return split.val;
    case SplitPart::kTest: return split.test;
  }
  return split.test;
}

void refresh_features(WeightedGraph& graph, FeatureMode mode) {
  switch (mode) {
    case FeatureMode::kAdjacencyRow:
      graph.features = graph.adjacency;
      break;
    case FeatureMode::kIdentity:
      if (graph.features.rows() != graph.adjacency.rows() || graph.features.cols() != graph.adjacency.rows())
        graph.features = Matrix::identity(graph.adjacency.rows());
      break;
    case FeatureMode::kProvided:
      break;
  }
}

GraphDataset default_node_features(const GraphDataset& dataset, FeatureMode mode) {
  GraphDataset out = dataset;
  out.feature_mode = mode;
  for (auto& g : out.graphs) {
    if (mode == FeatureMode::kIdentity) g.features = Matrix::identity(g.adjacency.rows());
    refresh_features(g, mode);
  }
  return out;
}

GraphDataset ingest_dataset(const fs::path& manifest) {
  if (!fs::exists(manifest)) throw IngestionError("manifest not found: " + manifest.string());
  json doc;
  try {
    doc = json::parse(io::read_text(manifest));
  } catch (const json::exception& e) {
    throw IngestionError(manifest.string() + ": " + e.what());
  }
  const fs::path root = manifest.parent_path();
  GraphDataset ds;
  std::size_t n = 0;
  try {
    n = doc.at("n").get<std::size_t>();
    ds.num_classes = doc.at("k").get<std::size_t>();
  } catch (const json::exception& e) {
    throw IngestionError(manifest.string() + ": " + e.what());
  }
  if (!doc.contains("graphs") || !doc["graphs"].is_array() || doc["graphs"].empty())
    throw IngestionError(manifest.string() + ": 'graphs' must be a non-empty list");

  bool any_features = false;
  bool all_features = true;
  for (const auto& entry : doc["graphs"]) {
    const std::string rel = entry.at("matrix").get<std::string>();
    const std::string name = "graph '" + rel + "'";
    WeightedGraph g;
    g.adjacency = io::read_matrix_csv(root / rel);
    if (g.adjacency.rows() != n || g.adjacency.cols() != n)
      throw IngestionError(name + ": expected " + std::to_string(n) + "x" + std::to_string(n) +
                           ", found " + g.adjacency.shape_string());
    const long long label = entry.at("label").get<long long>();
    if (label < 0 || static_cast<std::size_t>(label) >= ds.num_classes)
      throw IngestionError(name + ": label " + std::to_string(label) + " outside [0," +
                           std::to_string(ds.num_classes) + ")");
    g.label = static_cast<std::size_t>(label);
    const double asym = max_asymmetry(g.adjacency);
    if (asym > kSymmetryReject)
      throw IngestionError(name + ": asymmetric adjacency (max |A-A^T| = " +
                           io::format_double(asym) + ")");
    if (asym > kSymmetryWarn) warn(name + ": averaging asymmetry " + io::format_double(asym));
    symmetrize_in_place(g.adjacency);
    if (entry.contains("features")) {
      any_features = true;
      g.features = io::read_matrix_csv(root / entry["features"].get<std::string>());
      if (g.features.rows() != n) throw IngestionError(name + ": feature rows must equal n");
    } else {
      all_features = false;
    }
    ds.graphs.push_back(std::move(g));
  }
  if (any_features && !all_features)
    throw IngestionError(manifest.string() + ": features must be given for all graphs or none");
  if (any_features) {
    const std::size_t d = ds.graphs.front().features.cols();
    for (const auto& g : ds.graphs)
      if (g.features.cols() != d) throw IngestionError("feature dimension differs across graphs");
    ds.feature_mode = FeatureMode::kProvided;
  } else {
    ds.feature_mode = FeatureMode::kAdjacencyRow;
    for (auto& g : ds.graphs) refresh_features(g, ds.feature_mode);
  }

  if (doc.contains("subnetworks") && !doc["subnetworks"].is_null()) {
    const SubnetworkMap map = read_subnetwork_map(root / doc["subnetworks"].get<std::string>(), n);
    if (map.size() != n) throw IngestionError("subnetwork map does not cover every node");
    ds.subnetworks = std::move(map);
  }
  if (doc.contains("planted_edges") && !doc["planted_edges"].is_null()) {
    const json edges = json::parse(io::read_text(root / doc["planted_edges"].get<std::string>()));
    EdgeList list;
    for (const auto& e : edges) list.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
    ds.planted_edges = std::move(list);
  }
  return ds;
}

SubnetworkMap read_subnetwork_map(const fs::path& path, std::optional<std::size_t> nodes) {
  std::istringstream lines(io::read_text(path));
  std::string line;
  std::getline(lines, line);
  const auto header = io::split_csv_line(line);
  if (header.size() != 2 || header[0] != "node_id" || header[1] != "subnetwork")
    throw IngestionError(path.string() + ": header must be node_id,subnetwork");
  std::vector<std::pair<std::size_t, std::string>> rows;
  while (std::getline(lines, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = io::split_csv_line(line);
    if (cells.size() != 2 || cells[1].empty())
      throw IngestionError(path.string() + ": bad row '" + line + "'");
    std::size_t node = 0;
    try {
      std::size_t used = 0;
      node = std::stoul(cells[0], &used);
      if (used != cells[0].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::logic_error&) {
      throw IngestionError(path.string() + ": bad node id '" + cells[0] + "'");
    }
    rows.emplace_back(node, cells[1]);
  }
  const std::size_t n = nodes.value_or(rows.size());
  SubnetworkMap map(n);
  std::vector<bool> seen(n, false);
  for (const auto& [node, name] : rows) {
    if (node >= n || seen[node])
      throw IngestionError(path.string() + ": node " + std::to_string(node) +
                           " out of range or repeated");
    seen[node] = true;
    map[node] = name;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw IngestionError(path.string() + ": every node must be mapped exactly once");
  return map;
}

void write_subnetwork_map(const fs::path& path, const SubnetworkMap& map) {
  std::string csv = "node_id,subnetwork\n";
  for (std::size_t v = 0; v < map.size(); ++v) csv += std::to_string(v) + "," + map[v] + "\n";
  io::write_text(path, csv);
}

void write_dataset(const GraphDataset& dataset, const fs::path& directory) {
  fs::create_directories(directory / "graphs");
  json doc;
  doc["n"] = dataset.node_count();
  doc["k"] = dataset.num_classes;
  doc["graphs"] = json::array();
  for (std::size_t i = 0; i < dataset.graphs.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "graphs/g%05zu.csv", i);
    io::write_matrix_csv(directory / name, dataset.graphs[i].adjacency);
    json entry{{"matrix", name}, {"label", dataset.graphs[i].label}};
    if (dataset.feature_mode == FeatureMode::kProvided) {
      char fname[32];
      std::snprintf(fname, sizeof(fname), "graphs/x%05zu.csv", i);
      io::write_matrix_csv(directory / fname, dataset.graphs[i].features);
      entry["features"] = fname;
    }
    doc["graphs"].push_back(entry);
  }
  if (dataset.subnetworks) {
    write_subnetwork_map(directory / "subnetworks.csv", *dataset.subnetworks);
    doc["subnetworks"] = "subnetworks.csv";
  }
  if (dataset.planted_edges) {
    json edges = json::array();
    for (const auto& [i, j] : *dataset.planted_edges) edges.push_back({i, j});
    io::write_text(directory / "planted_edges.json", edges.dump() + "\n");
    doc["planted_edges"] = "planted_edges.json";
  }
  io::write_text(directory / "manifest.json", doc.dump(2) + "\n");
}

std::vector<std::size_t> block_assignment(std::size_t nodes, std::size_t blocks) {
  std::vector<std::size_t> assign(nodes);
  const std::size_t base = nodes / blocks, extra = nodes % blocks;
  std::size_t v = 0;
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t size = base + (b < extra ? 1 : 0);
    for (std::size_t k = 0; k < size; ++k) assign[v++] = b;
  }
  return assign;
}

GraphDataset generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
  if (config.shift < 0.0) throw ConfigError("synthetic shift must be non-negative");
  if (config.subnetworks == 0 || config.subnetworks > config.nodes)
    throw ConfigError("subnetwork count must lie in [1, n]");
  if (config.graphs == 0 || config.graphs % 2 != 0)
    throw ConfigError("synthetic graph count must be even and positive");
  if (config.block_a >= config.subnetworks || config.block_b >= config.subnetworks ||
      config.block_a == config.block_b)
    throw ConfigError("signal blocks must be two distinct subnetworks");
  if (config.noise < 0.0) throw ConfigError("noise scale must be non-negative");

  const std::size_t n = config.nodes;
  const auto block = block_assignment(n, config.subnetworks);
  std::mt19937_64 rng(seed);

  GraphDataset ds;
  ds.num_classes = 2;
  ds.feature_mode = FeatureMode::kAdjacencyRow;
  std::vector<std::size_t> labels(config.graphs);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 2;
  std::shuffle(labels.begin(), labels.end(), rng);

  EdgeList planted;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if ((block[i] == config.block_a && block[j] == config.block_b) ||
          (block[i] == config.block_b && block[j] == config.block_a))
        planted.emplace_back(i, j);

  std::uniform_real_distribution<double> noise(-config.noise, config.noise);
  for (std::size_t label : labels) {
    WeightedGraph g;
    g.label = label;
    g.adjacency = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double w = config.noise > 0.0 ? noise(rng) : 0.0;
        g.adjacency(i, j) = w;
        g.adjacency(j, i) = w;
      }
    if (label == 1)
      for (const auto& [i, j] : planted) {
        const double w = std::clamp(g.adjacency(i, j) + config.shift, -1.0, 1.0);
        g.adjacency(i, j) = w;
        g.adjacency(j, i) = w;
      }
    refresh_features(g, ds.feature_mode);
    ds.graphs.push_back(std::move(g));
  }
  SubnetworkMap map(n);
  for (std::size_t v = 0; v < n; ++v) map[v] = "SN" + std::to_string(block[v]);
  ds.subnetworks = std::move(map);
  ds.planted_edges = std::move(planted);
  return ds;
}

SplitIndex stratified_split(const GraphDataset& dataset, std::array<double, 3> fractions,
                            std::uint64_t seed) {
  const double total = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  for (double f : fractions)
    if (!(f > 0.0)) throw ConfigError("every split fraction must be positive");

  std::vector<std::vector<std::size_t>> by_class(dataset.num_classes);
  for (std::size_t i = 0; i < dataset.graphs.size(); ++i) {
    const std::size_t y = dataset.graphs[i].label;
    if (y >= dataset.num_classes) throw ContractError("label out of range");
    by_class[y].push_back(i);
  }
  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].size() < 3)
      throw ConfigError("class " + std::to_string(c) + " has fewer than 3 graphs");
    std::shuffle(by_class[c].begin(), by_class[c].end(), rng);
  }

  // Global targets by largest remainder, then per-class floors topped up
  // toward whichever split is furthest below its target.
  const std::size_t n_total = dataset.graphs.size();
  std::array<std::size_t, 3> target{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (int s = 0; s < 3; ++s) {
    const double exact = fractions[s] * static_cast<double>(n_total);
    target[s] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainder[s] = exact - static_cast<double>(target[s]);
    assigned += target[s];
  }
  while (assigned < n_total) {
    int best = 0;
    for (int s = 1; s < 3; ++s)
      if (remainder[s] > remainder[best] + 1e-12) best = s;
    ++target[best];
    remainder[best] = -1.0;
    ++assigned;
  }

  std::array<std::size_t, 3> current{};
  std::vector<std::array<std::size_t, 3>> counts(by_class.size());
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const double m = static_cast<double>(by_class[c].size());
    for (int s = 0; s < 3; ++s) {
      counts[c][s] = static_cast<std::size_t>(std::floor(fractions[s] * m + 1e-9));
      current[s] += counts[c][s];
    }
  }
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    std::size_t used = counts[c][0] + counts[c][1] + counts[c][2];
    for (; used < by_class[c].size(); ++used) {
      int best = 0;
      long long best_gap = static_cast<long long>(target[0]) - static_cast<long long>(current[0]);
      for (int s = 1; s < 3; ++s) {
        const long long gap = static_cast<long long>(target[s]) - static_cast<long long>(current[s]);
        if (gap > best_gap) {
          best = s;
          best_gap = gap;
        }
      }
      ++counts[c][best];
      ++current[best];
    }
  }

  SplitIndex split;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const auto& ids = by_class[c];
    auto it = ids.begin();
    split.train.insert(split.train.end(), it, it + counts[c][0]);
    it += counts[c][0];
    split.val.insert(split.val.end(), it, it + counts[c][1]);
    it += counts[c][1];
    split.test.insert(split.test.end(), it, it + counts[c][2]);
  }
  if (split.train.empty() || split.val.empty() || split.test.empty())
    throw ConfigError("split produced an empty subset");
  for (auto* part : {&split.train, &split.val, &split.test}) std::sort(part->begin(), part->end());
  return split;
}

GraphDataset initial_threshold(const GraphDataset& dataset, double keep_fraction) {
  if (!(keep_fraction > 0.0) || keep_fraction > 1.0)
    throw ConfigError("keep fraction must lie in (0, 1]");
  GraphDataset out = dataset;
  for (auto& g : out.graphs) {
    const std::size_t n = g.adjacency.rows();
    struct Entry {
      double magnitude;
      std::size_t i, j;
    };
    std::vector<Entry> entries;
    entries.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) entries.push_back({std::abs(g.adjacency(i, j)), i, j});
    const auto keep = static_cast<std::size_t>(
        std::floor(keep_fraction * static_cast<double>(entries.size()) + 1e-9));
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) { return a.magnitude > b.magnitude; });
    for (std::size_t r = keep; r < entries.size(); ++r) {
      g.adjacency(entries[r].i, entries[r].j) = 0.0;
      g.adjacency(entries[r].j, entries[r].i) = 0.0;
    }
    refresh_features(g, out.feature_mode);
  }
  return out;
}

std::size_t edge_count(const Matrix& adjacency) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < adjacency.rows(); ++i)
    for (std::size_t j = i + 1; j < adjacency.cols(); ++j)
      if (adjacency(i, j) != 0.0) ++count;
  return count;
}

double sparsity(const Matrix& adjacency) {
  const std::size_t n = adjacency.rows();
  if (n < 2) return 0.0;
  return static_cast<double>(edge_count(adjacency)) / static_cast<double>(n * (n - 1) / 2);
}

double mean_sparsity(const GraphDataset& dataset) {
  if (dataset.graphs.empty()) return 0.0;
  double total = 0.0;
  for (const auto& g : dataset.graphs) total += sparsity(g.adjacency);
  return total / static_cast<double>(dataset.graphs.size());
}

void validate(const GraphDataset& dataset) {
  if (dataset.graphs.empty()) throw ContractError("dataset has no graphs");
  const std::size_t n = dataset.node_count();
  const std::size_t d = dataset.graphs.front().features.cols();
  for (std::size_t idx = 0; idx < dataset.graphs.size(); ++idx) {
    const auto& g = dataset.graphs[idx];
    const std::string name = "graph " + std::to_string(idx);
    if (g.adjacency.rows() != n || g.adjacency.cols() != n)
      throw ContractError(name + ": node count differs from the cohort");
    if (g.features.rows() != n || g.features.cols() != d)
      throw ContractError(name + ": feature shape differs from the cohort");
    if (g.label >= dataset.num_classes) throw ContractError(name + ": label out of range");
    for (std::size_t i = 0; i < n; ++i) {
      if (g.adjacency(i, i) != 0.0) throw ContractError(name + ": non-zero diagonal");
      for (std::size_t j = i + 1; j < n; ++j)
        if (g.adjacency(i, j) != g.adjacency(j, i)) throw ContractError(name + ": not symmetric");
    }
  }
  std::set<std::size_t> seen;
  for (const auto* part : {&dataset.split.train, &dataset.split.val, &dataset.split.test}) {
    if (part->empty()) throw ContractError("split subsets must be non-empty");
    for (std::size_t i : *part) {
      if (i >= dataset.graphs.size() || !seen.insert(i).second)
        throw ContractError("split subsets must be disjoint and in range");
    }
  }
  if (seen.size() != dataset.graphs.size()) throw ContractError("split must cover every graph");
}

}  // namespace igs::graphdata
