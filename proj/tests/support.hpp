#pragma once

// Shared fixtures for the C++ test binaries.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "igs/gcn.hpp"
#include "igs/graphdata.hpp"
#include "igs/matrix.hpp"

namespace igs::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                            double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

inline Matrix random_symmetric(std::size_t n, std::mt19937_64& rng, double lo = -1.0,
                               double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m(i, j) = m(j, i) = dist(rng);
  return m;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    worst = std::max(worst, std::abs(a.data()[k] - b.data()[k]));
  return worst;
}

/// Small cohort with graphs cycling through labels. The split is assigned
/// when every class has at least five graphs; otherwise every part holds all graphs.
inline graphdata::GraphDataset small_cohort(std::size_t graphs, std::size_t n, std::size_t classes,
                                            std::uint64_t seed,
                                            graphdata::FeatureMode mode = graphdata::FeatureMode::kAdjacencyRow) {
  std::mt19937_64 rng(seed);
  graphdata::GraphDataset ds;
  ds.num_classes = classes;
  ds.feature_mode = mode;
  for (std::size_t g = 0; g < graphs; ++g) {
    graphdata::WeightedGraph wg;
    wg.adjacency = random_symmetric(n, rng);
    wg.label = g % classes;
    graphdata::refresh_features(wg, mode);
    if (mode == graphdata::FeatureMode::kIdentity) wg.features = Matrix::identity(n);
    ds.graphs.push_back(std::move(wg));
  }
  if (graphs >= 5 * classes) {
    ds.split = graphdata::stratified_split(ds, {0.6, 0.2, 0.2}, seed);
  } else {
    for (std::size_t g = 0; g < graphs; ++g) ds.split.train.push_back(g);
    ds.split.val = ds.split.test = ds.split.train;
  }
  return ds;
}

inline gcn::GcnConfig tiny_gcn(std::size_t layers = 2, std::size_t hidden = 5) {
  gcn::GcnConfig c;
  c.layers = layers;
  c.hidden = hidden;
  c.dropout = 0.0;
  c.learning_rate = 0.01;
  c.batch_size = 8;
  c.patience = 5;
  c.max_epochs = 20;
  return c;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("igs_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace igs::testing
