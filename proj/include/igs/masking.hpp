#pragma once

// Edge-importance masks: the symmetric soft mask sigma(Phi^T + Phi), the
// percentage-thresholded binary mask, and Phi initialization.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "igs/graphdata.hpp"
#include "igs/matrix.hpp"
#include "igs/tape.hpp"

namespace igs::masking {

struct SoftMask {
  Matrix phi;
};

/// {0,1} indicator; symmetric with zero diagonal.
struct BinaryMask {
  Matrix indicator;

  std::size_t edge_count() const;  // ones in the strict upper triangle
  bool contains(const BinaryMask& other) const;  // support(other) subset of support(this)
  static BinaryMask full(std::size_t n);         // every off-diagonal position
  static BinaryMask support_of(const Matrix& adjacency);
  /// Positions non-zero in at least one graph of the cohort.
  static BinaryMask union_support(const graphdata::GraphDataset& dataset);

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

enum class MapProvenance { kPerClassPerGraph, kUnifiedClass, kJoint };

struct GradientMap {
  Matrix values;
  MapProvenance provenance = MapProvenance::kPerClassPerGraph;
};

/// sigma(Phi^T + Phi); exactly symmetric.
Matrix soft_mask(const Matrix& phi);

/// Records sigma(Phi^T + Phi) (or sigma(Phi) when `symmetric` is false).
numgrad::Var record_soft_mask(numgrad::Tape& tape, numgrad::Var phi, bool symmetric);

/// Zeroes the floor(p/100 * |support|) lowest-scoring upper-triangle
/// positions of `support` (ties by lexicographic (i, j)) and mirrors.
BinaryMask binarize_mask(const Matrix& scores, const BinaryMask& support, double percent);

/// Number of edges binarize_mask removes from a support of `support_size`.
std::size_t removal_count(std::size_t support_size, double percent);

/// M (.) A, with features refreshed for the adjacency-row mode.
graphdata::WeightedGraph apply_mask(const BinaryMask& mask, const graphdata::WeightedGraph& graph,
                                    graphdata::FeatureMode mode);

enum class PhiInit { kXavier, kFromGradientMap };

/// Xavier normal (std sqrt(2 / (n + n))) or the standardized gradient map
/// rescaled to the Xavier std. Standardization statistics are taken over
/// `support` (off-diagonal positions); entries outside it are zero.
/// An all-constant map falls back to Xavier with a warning.
SoftMask init_phi(std::size_t n, PhiInit mode, const GradientMap* map, const BinaryMask* support,
                  std::uint64_t seed);

double xavier_std(std::size_t n);

}  // namespace igs::masking
