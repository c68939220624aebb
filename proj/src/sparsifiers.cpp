#include "igs/sparsifiers.hpp"

#include <algorithm>
#include <cmath>

#include "igs/errors.hpp"
#include "igs/gradient_maps.hpp"
#include "igs/seeding.hpp"

namespace igs::sparsifiers {
using graphdata::GraphDataset;
using masking::BinaryMask;
using numgrad::Tape;
using numgrad::Var;

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

MaskProduct joint_product(Matrix scores, const GraphDataset& dataset, double percent) {
  MaskProduct product;
  product.joint = masking::binarize_mask(scores, BinaryMask::union_support(dataset), percent);
  product.soft_scores.push_back(std::move(scores));
  return product;
}

}  // namespace

const std::array<Method, 7>& all_methods() {
  static const std::array<Method, 7> methods = {
      Method::kIGS,          Method::kGradIndi,         Method::kGradJoint,
      Method::kGradTrained,  Method::kGNNExplainerIndi, Method::kGNNExplainerJoint,
      Method::kGNNExplainerTrained};
  return methods;
}

std::string to_string(Method method) {
  switch (method) {
    case Method::kIGS: return "IGS";
    case Method::kGradIndi: return "GradIndi";
    case Method::kGradJoint: return "GradJoint";
    case Method::kGradTrained: return "GradTrained";
    case Method::kGNNExplainerIndi: return "GNNExplainerIndi";
    case Method::kGNNExplainerJoint: return "GNNExplainerJoint";
    case Method::kGNNExplainerTrained: return "GNNExplainerTrained";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : all_methods())
    if (to_string(m) == name) return m;
  throw ConfigError("unknown method '" + name + "'");
}

MaskTime SparsifierSpec::mask_time() const {
  switch (method) {
    case Method::kIGS:
    case Method::kGradTrained:
    case Method::kGNNExplainerTrained:
      return MaskTime::kTrained;
    default:
      return MaskTime::kPostTrain;
  }
}

MaskType SparsifierSpec::mask_type() const {
  return method == Method::kGradIndi || method == Method::kGNNExplainerIndi ? MaskType::kIndividual
                                                                            : MaskType::kJoint;
}

bool SparsifierSpec::consumes_gradient_map() const {
  return method == Method::kIGS || method == Method::kGradTrained;
}

void SparsifierSpec::validate() const {
  if (lambda < 0.0) throw ConfigError("lambda must be non-negative");
  if (entropy_weight < 0.0) throw ConfigError("entropy weight must be non-negative");
  if (!(mask_learning_rate > 0.0)) throw ConfigError("mask learning rate must be positive");
}

Matrix symmetrized_scores(const Matrix& phi) {
  const std::size_t n = phi.rows();
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double v = 0.5 * (sigmoid(phi(i, j)) + sigmoid(phi(j, i)));
      s(i, j) = v;
      s(j, i) = v;
    }
  return s;
}

LearnedMask igs_learn_mask(const GraphDataset& dataset, const gcn::GcnConfig& config,
                           const SparsifierSpec& spec, const masking::SoftMask& phi_init,
                           double percent) {
  const std::size_t n = dataset.node_count();
  if (phi_init.phi.rows() != n || phi_init.phi.cols() != n)
    throw ConfigError("phi-init must be " + std::to_string(n) + "x" + std::to_string(n));
  gcn::EdgeMaskTraining mask{phi_init.phi, true, spec.lambda};
  gcn::TrainResult trained = gcn::train_model(dataset, config, &mask);
  LearnedMask out{joint_product(masking::soft_mask(*trained.phi), dataset, percent),
                  std::move(trained.params)};
  return out;
}

LearnedMask grad_trained_learn_mask(const GraphDataset& dataset, const gcn::GcnConfig& config,
                                    const SparsifierSpec& spec, const masking::SoftMask& phi_init,
                                    double percent) {
  (void)spec;  // no l1 term for this baseline
  const std::size_t n = dataset.node_count();
  if (phi_init.phi.rows() != n || phi_init.phi.cols() != n)
    throw ConfigError("phi-init must be " + std::to_string(n) + "x" + std::to_string(n));
  gcn::EdgeMaskTraining mask{phi_init.phi, false, 0.0};
  gcn::TrainResult trained = gcn::train_model(dataset, config, &mask);
  LearnedMask out{joint_product(symmetrized_scores(*trained.phi), dataset, percent),
                  std::move(trained.params)};
  return out;
}

MaskProduct post_train_grad_mask(const GraphDataset& dataset, const gcn::GcnParams& trained,
                                 GradVariant variant, double percent) {
  if (variant == GradVariant::kJoint) {
    auto map = masking::joint_gradient_map(trained, dataset, dataset.split.train);
    return joint_product(std::move(map.values), dataset, percent);
  }
  MaskProduct product;
  product.per_graph.emplace();
  for (const auto& g : dataset.graphs) {
    auto map = masking::grad_indi_map(trained, g);
    product.per_graph->push_back(
        masking::binarize_mask(map.values, BinaryMask::support_of(g.adjacency), percent));
    product.soft_scores.push_back(std::move(map.values));
  }
  return product;
}

Matrix optimize_frozen_mask(const gcn::GcnParams& params, const GraphDataset& dataset,
                            std::span<const std::size_t> ids, std::span<const std::size_t> targets,
                            const Matrix& phi_init, const SparsifierSpec& spec) {
  if (ids.empty()) throw ContractError("mask optimization needs at least one graph");
  if (ids.size() != targets.size()) throw ContractError("one target class per graph required");
  // Fixed summation order regardless of how the caller lists the graphs.
  std::vector<std::pair<std::size_t, std::size_t>> work;
  for (std::size_t k = 0; k < ids.size(); ++k) work.emplace_back(ids[k], targets[k]);
  std::sort(work.begin(), work.end());

  Matrix phi = phi_init;
  gcn::Adam optimizer(spec.mask_learning_rate);
  std::mt19937_64 unused_rng(0);
  for (std::size_t step = 0; step < spec.mask_epochs; ++step) {
    Tape tape;
    const auto pv = gcn::bind_params(tape, params, false);
    const Var phi_var = tape.input(phi, true);
    const Var mask = masking::record_soft_mask(tape, phi_var, true);
    Var total{};
    for (std::size_t k = 0; k < work.size(); ++k) {
      const auto& g = dataset.graphs.at(work[k].first);
      const Var adjacency = tape.input(g.adjacency, false);
      const Var normalized = tape.gcn_normalize(tape.hadamard(adjacency, mask));
      const Var logits = gcn::record_forward(tape, pv, normalized, tape.input(g.features, false),
                                             std::nullopt, 0.0, false, unused_rng);
      const Var ce = tape.softmax_xent(logits, work[k].second);
      total = k == 0 ? ce : tape.add(total, ce);
    }
    Var loss = tape.scale(total, 1.0 / static_cast<double>(work.size()));
    if (spec.lambda != 0.0) loss = tape.add(loss, tape.scale(tape.sum(mask), spec.lambda));
    if (spec.entropy_weight != 0.0)
      loss = tape.add(loss, tape.scale(tape.entropy_sum(mask), spec.entropy_weight));
    const Var wrt[] = {phi_var};
    const Matrix grad = tape.backward(loss, wrt)[phi_var];
    Matrix* targets_ptr[] = {&phi};
    optimizer.step(targets_ptr, std::span<const Matrix>(&grad, 1));
  }
  return phi;
}

MaskProduct gnnexplainer_learn_mask(const GraphDataset& dataset, const gcn::GcnParams* trained,
                                    ExplainerVariant variant, const gcn::GcnConfig& config,
                                    const SparsifierSpec& spec, double percent,
                                    std::uint64_t seed) {
  const std::size_t n = dataset.node_count();
  if (variant == ExplainerVariant::kTrained) {
    const auto phi = masking::init_phi(n, masking::PhiInit::kXavier, nullptr, nullptr, seed);
    return igs_learn_mask(dataset, config, spec, phi, percent).product;
  }
  if (trained == nullptr) throw ContractError("post-training explainer needs a trained model");

  if (variant == ExplainerVariant::kJoint) {
    const auto& ids = dataset.split.train;
    std::vector<std::size_t> targets;
    for (std::size_t id : ids) targets.push_back(dataset.graphs[id].label);
    const auto phi0 = masking::init_phi(n, masking::PhiInit::kXavier, nullptr, nullptr, seed);
    const Matrix phi = optimize_frozen_mask(*trained, dataset, ids, targets, phi0.phi, spec);
    return joint_product(masking::soft_mask(phi), dataset, percent);
  }

  // Individual masks: true label for training graphs, the frozen model's
  // prediction elsewhere, so evaluation labels are never consulted.
  std::vector<bool> is_train(dataset.graphs.size(), false);
  for (std::size_t id : dataset.split.train) is_train[id] = true;
  MaskProduct product;
  product.per_graph.emplace();
  for (std::size_t id = 0; id < dataset.graphs.size(); ++id) {
    const auto& g = dataset.graphs[id];
    const std::size_t target = is_train[id] ? g.label : gcn::predict(*trained, g);
    const std::size_t one_id[] = {id};
    const std::size_t one_target[] = {target};
    const auto phi0 =
        masking::init_phi(n, masking::PhiInit::kXavier, nullptr, nullptr, derive_seed(seed, {id}));
    const Matrix phi = optimize_frozen_mask(*trained, dataset, one_id, one_target, phi0.phi, spec);
    Matrix scores = masking::soft_mask(phi);
    product.per_graph->push_back(
        masking::binarize_mask(scores, BinaryMask::support_of(g.adjacency), percent));
    product.soft_scores.push_back(std::move(scores));
  }
  return product;
}

}  // namespace igs::sparsifiers
