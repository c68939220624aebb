#pragma once

// Gradient maps: d(logit_j)/dA for raw adjacency entries, taken through the
// full forward pass (normalization included) with dropout off.

#include <cstddef>
#include <span>
#include <vector>

#include "igs/gcn.hpp"
#include "igs/graphdata.hpp"
#include "igs/masking.hpp"

namespace igs::masking {

GradientMap class_gradient_map(const gcn::GcnParams& params, const graphdata::WeightedGraph& graph,
                               std::size_t cls);

/// All k per-class maps from one forward pass.
std::vector<Matrix> class_gradient_maps(const gcn::GcnParams& params,
                                        const graphdata::WeightedGraph& graph);

/// T = sum_j sum_i |grad_j(G_i)| over `ids`, summed with correct rounding so
/// the result is independent of graph and class order.
GradientMap joint_gradient_map(const gcn::GcnParams& params, const graphdata::GraphDataset& dataset,
                               std::span<const std::size_t> ids);

/// g (.) g where g is the map of the predicted class.
GradientMap grad_indi_map(const gcn::GcnParams& params, const graphdata::WeightedGraph& graph);

}  // namespace igs::masking
