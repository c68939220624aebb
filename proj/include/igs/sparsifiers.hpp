#pragma once

// The seven mask producers, classified along two axes: when the mask is
// learned (after GNN training, or jointly with it) and whether it is shared
// by the cohort or learned per graph.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "igs/gcn.hpp"
#include "igs/graphdata.hpp"
#include "igs/masking.hpp"

namespace igs::sparsifiers {

enum class Method {
  kIGS,
  kGradIndi,
  kGradJoint,
  kGradTrained,
  kGNNExplainerIndi,
  kGNNExplainerJoint,
  kGNNExplainerTrained,
};

enum class MaskTime { kPostTrain, kTrained };
enum class MaskType { kIndividual, kJoint };

const std::array<Method, 7>& all_methods();
std::string to_string(Method method);
Method parse_method(const std::string& name);

struct SparsifierSpec {
  Method method = Method::kIGS;
  double lambda = 0.0001;            // l1 coefficient on the soft mask
  std::size_t mask_epochs = 300;     // post-hoc mask optimization steps
  double entropy_weight = 0.1;       // GNNExplainer mask-entropy coefficient
  double mask_learning_rate = 0.01;  // post-hoc mask optimizer step size

  MaskTime mask_time() const;
  MaskType mask_type() const;
  /// Whether the method reads the previous iteration's joint gradient map.
  bool consumes_gradient_map() const;
  void validate() const;
};

struct MaskProduct {
  std::optional<masking::BinaryMask> joint;
  std::optional<std::vector<masking::BinaryMask>> per_graph;
  /// Pre-threshold scores: one matrix for a joint mask, one per graph otherwise.
  std::vector<Matrix> soft_scores;
};

struct LearnedMask {
  MaskProduct product;
  gcn::GcnParams params;
};

/// Co-trains the GCN and a symmetric mask on the train split, minimizing
/// mean CE on A (.) sigma(Phi^T + Phi) plus lambda * sum(mask), then
/// removes p% of the current joint support.
LearnedMask igs_learn_mask(const graphdata::GraphDataset& dataset, const gcn::GcnConfig& config,
                           const SparsifierSpec& spec, const masking::SoftMask& phi_init,
                           double percent);

/// As igs_learn_mask with mask sigma(Phi), no symmetry and no l1 term; the
/// removal ranking uses (sigma(Phi) + sigma(Phi)^T) / 2.
LearnedMask grad_trained_learn_mask(const graphdata::GraphDataset& dataset,
                                    const gcn::GcnConfig& config, const SparsifierSpec& spec,
                                    const masking::SoftMask& phi_init, double percent);

enum class GradVariant { kIndividual, kJoint };

MaskProduct post_train_grad_mask(const graphdata::GraphDataset& dataset,
                                 const gcn::GcnParams& trained, GradVariant variant, double percent);

enum class ExplainerVariant { kIndividual, kJoint, kTrained };

/// kIndividual/kJoint optimize masks against the frozen `trained` model;
/// kTrained ignores `trained` and co-trains from a Xavier-initialized Phi.
MaskProduct gnnexplainer_learn_mask(const graphdata::GraphDataset& dataset,
                                    const gcn::GcnParams* trained, ExplainerVariant variant,
                                    const gcn::GcnConfig& config, const SparsifierSpec& spec,
                                    double percent, std::uint64_t seed);

/// Full-batch Adam on Phi with the model frozen: mean CE of the graphs in
/// `ids` against `targets` plus lambda * sum(S) + entropy_weight * sum(H(S)).
Matrix optimize_frozen_mask(const gcn::GcnParams& params, const graphdata::GraphDataset& dataset,
                            std::span<const std::size_t> ids, std::span<const std::size_t> targets,
                            const Matrix& phi_init, const SparsifierSpec& spec);

/// (sigma(Phi) + sigma(Phi)^T) / 2.
Matrix symmetrized_scores(const Matrix& phi);

}  // namespace igs::sparsifiers
