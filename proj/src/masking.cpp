#include "igs/masking.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "igs/errors.hpp"
#include "igs/log.hpp"

namespace igs::masking {

std::size_t BinaryMask::edge_count() const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < indicator.rows(); ++i)
    for (std::size_t j = i + 1; j < indicator.cols(); ++j)
      if (indicator(i, j) != 0.0) ++count;
  return count;
}

bool BinaryMask::contains(const BinaryMask& other) const {
  if (!indicator.same_shape(other.indicator)) return false;
  for (std::size_t k = 0; k < indicator.size(); ++k)
    if (other.indicator.data()[k] != 0.0 && indicator.data()[k] == 0.0) return false;
  return true;
}

BinaryMask BinaryMask::full(std::size_t n) {
  BinaryMask m{Matrix(n, n, 1.0)};
  for (std::size_t i = 0; i < n; ++i) m.indicator(i, i) = 0.0;
  return m;
}

BinaryMask BinaryMask::support_of(const Matrix& adjacency) {
  BinaryMask m{Matrix(adjacency.rows(), adjacency.cols())};
  for (std::size_t i = 0; i < adjacency.rows(); ++i)
    for (std::size_t j = 0; j < adjacency.cols(); ++j)
      if (i != j && adjacency(i, j) != 0.0) m.indicator(i, j) = 1.0;
  return m;
}

BinaryMask BinaryMask::union_support(const graphdata::GraphDataset& dataset) {
  const std::size_t n = dataset.node_count();
  BinaryMask m{Matrix(n, n)};
  for (const auto& g : dataset.graphs)
    for (std::size_t k = 0; k < g.adjacency.size(); ++k)
      if (g.adjacency.data()[k] != 0.0) m.indicator.data()[k] = 1.0;
  for (std::size_t i = 0; i < n; ++i) m.indicator(i, i) = 0.0;
  return m;
}

Matrix soft_mask(const Matrix& phi) {
  if (!phi.is_square()) throw ConfigError("phi must be square, got " + phi.shape_string());
  numgrad::Tape tape;
  const auto p = tape.input(phi, false);
  return tape.value(record_soft_mask(tape, p, true));
}

numgrad::Var record_soft_mask(numgrad::Tape& tape, numgrad::Var phi, bool symmetric) {
  if (!symmetric) return tape.sigmoid(phi);
  return tape.sigmoid(tape.add(tape.transpose(phi), phi));
}

std::size_t removal_count(std::size_t support_size, double percent) {
  if (percent < 0.0 || percent > 100.0) throw ConfigError("removal percent must lie in [0, 100]");
  const double exact = percent * static_cast<double>(support_size) / 100.0;
  return std::min(support_size, static_cast<std::size_t>(std::floor(exact + 1e-9)));
}

BinaryMask binarize_mask(const Matrix& scores, const BinaryMask& support, double percent) {
  if (!scores.same_shape(support.indicator) || !scores.is_square())
    throw ConfigError("score matrix " + scores.shape_string() + " does not match support " +
                      support.indicator.shape_string());
  struct Entry {
    double score;
    std::size_t i, j;
  };
  std::vector<Entry> entries;
  const std::size_t n = scores.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (support.indicator(i, j) != 0.0) entries.push_back({scores(i, j), i, j});
  const std::size_t remove = removal_count(entries.size(), percent);
  // entries are already in lexicographic order, so a stable sort keeps that
  // order among equal scores.
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.score < b.score; });
  BinaryMask out{Matrix(n, n)};
  for (std::size_t r = remove; r < entries.size(); ++r) {
    out.indicator(entries[r].i, entries[r].j) = 1.0;
    out.indicator(entries[r].j, entries[r].i) = 1.0;
  }
  return out;
}

graphdata::WeightedGraph apply_mask(const BinaryMask& mask, const graphdata::WeightedGraph& graph,
                                    graphdata::FeatureMode mode) {
  graphdata::WeightedGraph out = graph;
  out.adjacency = hadamard(mask.indicator, graph.adjacency);
  graphdata::refresh_features(out, mode);
  return out;
}

double xavier_std(std::size_t n) { return std::sqrt(2.0 / static_cast<double>(n + n)); }

SoftMask init_phi(std::size_t n, PhiInit mode, const GradientMap* map, const BinaryMask* support,
                  std::uint64_t seed) {
  const double std_dev = xavier_std(n);
  const auto xavier = [&] {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, std_dev);
    SoftMask m{Matrix(n, n)};
    for (double& v : m.phi.values()) v = normal(rng);
    return m;
  };
  if (mode == PhiInit::kXavier) return xavier();
  if (map == nullptr) throw ContractError("gradient-map initialization requires a gradient map");
  if (map->values.rows() != n || map->values.cols() != n)
    throw ConfigError("gradient map shape " + map->values.shape_string() + " does not match n");

  const BinaryMask active = support ? *support : BinaryMask::full(n);
  double mean = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < map->values.size(); ++k)
    if (active.indicator.data()[k] != 0.0) {
      mean += map->values.data()[k];
      ++count;
    }
  if (count == 0) {
    warn("gradient map has empty support; falling back to Xavier initialization");
    return xavier();
  }
  mean /= static_cast<double>(count);
  double var = 0.0;
  for (std::size_t k = 0; k < map->values.size(); ++k)
    if (active.indicator.data()[k] != 0.0) {
      const double d = map->values.data()[k] - mean;
      var += d * d;
    }
  const double sd = std::sqrt(var / static_cast<double>(count));
  if (!(sd > 1e-12 * std::max(std::abs(mean), 1e-300))) {
    warn("gradient map is constant on its support; falling back to Xavier initialization");
    return xavier();
  }
  SoftMask m{Matrix(n, n)};
  for (std::size_t k = 0; k < map->values.size(); ++k)
    if (active.indicator.data()[k] != 0.0)
      m.phi.data()[k] = (map->values.data()[k] - mean) / sd * std_dev;
  return m;
}

}  // namespace igs::masking
