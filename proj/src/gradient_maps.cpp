#include "igs/gradient_maps.hpp"

#include <cmath>
#include <random>

#include "igs/errors.hpp"
#include "igs/summation.hpp"

namespace igs::masking {
using numgrad::Tape;
using numgrad::Var;

std::vector<Matrix> class_gradient_maps(const gcn::GcnParams& params,
                                        const graphdata::WeightedGraph& graph) {
  Tape tape;
  const auto pv = gcn::bind_params(tape, params, false);
  const Var adjacency = tape.input(graph.adjacency, true);
  const Var features = tape.input(graph.features, false);
  std::mt19937_64 rng(0);
  const Var logits = gcn::record_forward(tape, pv, tape.gcn_normalize(adjacency), features,
                                         std::nullopt, 0.0, false, rng);
  const std::size_t k = params.num_classes();
  std::vector<Matrix> maps;
  maps.reserve(k);
  const Var wrt[] = {adjacency};
  for (std::size_t j = 0; j < k; ++j) {
    Matrix onehot(1, k);
    onehot(0, j) = 1.0;
    const Var root = tape.sum(tape.hadamard(logits, tape.input(std::move(onehot), false)));
    maps.push_back(tape.backward(root, wrt)[adjacency]);
  }
  return maps;
}

GradientMap class_gradient_map(const gcn::GcnParams& params, const graphdata::WeightedGraph& graph,
                               std::size_t cls) {
  if (cls >= params.num_classes())
    throw ContractError("class " + std::to_string(cls) + " out of range");
  auto maps = class_gradient_maps(params, graph);
  return {std::move(maps[cls]), MapProvenance::kPerClassPerGraph};
}

GradientMap joint_gradient_map(const gcn::GcnParams& params, const graphdata::GraphDataset& dataset,
                               std::span<const std::size_t> ids) {
  if (ids.empty()) throw ContractError("joint gradient map needs at least one training graph");
  const std::size_t n = dataset.node_count();
  std::vector<ExactAccumulator> acc(n * n);
  for (std::size_t id : ids) {
    for (const Matrix& map : class_gradient_maps(params, dataset.graphs.at(id)))
      for (std::size_t e = 0; e < map.size(); ++e) acc[e].add(std::abs(map.data()[e]));
  }
  GradientMap out{Matrix(n, n), MapProvenance::kJoint};
  for (std::size_t e = 0; e < acc.size(); ++e) out.values.data()[e] = acc[e].result();
  return out;
}

GradientMap grad_indi_map(const gcn::GcnParams& params, const graphdata::WeightedGraph& graph) {
  const std::size_t predicted = gcn::predict(params, graph);
  Matrix g = class_gradient_maps(params, graph)[predicted];
  return {hadamard(g, g), MapProvenance::kPerClassPerGraph};
}

}  // namespace igs::masking
