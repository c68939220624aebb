#pragma once

// GCN graph classifier: stacked ReLU(A_hat H W) layers, global mean pooling
// and a linear head, trained with Adam and validation-loss early stopping.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "igs/graphdata.hpp"
#include "igs/matrix.hpp"
#include "igs/tape.hpp"

namespace igs::gcn {

struct GcnConfig {
  std::size_t layers = 4;
  std::size_t hidden = 256;
  double dropout = 0.5;
  double learning_rate = 0.001;
  std::size_t batch_size = 16;
  std::size_t patience = 100;
  std::size_t max_epochs = 2000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GcnParams {
  std::vector<Matrix> weights;  // layer l: d_in x d_out
  Matrix classifier;            // hidden x k
  Matrix bias;                  // 1 x k

  /// Glorot-uniform weights, zero bias.
  static GcnParams init(std::size_t input_dim, std::size_t num_classes, const GcnConfig& config,
                        std::uint64_t seed);

  std::size_t num_classes() const { return bias.cols(); }
  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
};

/// Tape handles for a bound parameter set.
struct ParamVars {
  std::vector<numgrad::Var> weights;
  numgrad::Var classifier;
  numgrad::Var bias;

  std::vector<numgrad::Var> all() const;
};

ParamVars bind_params(numgrad::Tape& tape, const GcnParams& params, bool differentiable);

/// Records the forward pass and returns the 1 x k logits.
/// `normalized` is the propagation matrix (already normalized). When
/// `propagated_input` is given it must hold normalized * features and is used
/// for the first layer instead of recomputing that product.
numgrad::Var record_forward(numgrad::Tape& tape, const ParamVars& params, numgrad::Var normalized,
                            numgrad::Var features, std::optional<numgrad::Var> propagated_input,
                            double dropout, bool training, std::mt19937_64& rng);

/// D^-1/2 (A + I) D^-1/2 with D_ii = 1 + A_ii + sum_{j != i} |A_ij|.
Matrix normalize_adjacency(const Matrix& adjacency);

/// 1 x k logits. Dropout active only when `training` is set.
Matrix gcn_forward(const GcnParams& params, const Matrix& adjacency, const Matrix& features,
                   bool training, std::uint64_t seed, double dropout = 0.0);

/// Mean cross-entropy over the batch (evaluation mode).
double batch_loss(const GcnParams& params, std::span<const graphdata::WeightedGraph> graphs,
                  std::span<const std::size_t> labels);

/// Lowest index among maximal logits.
std::size_t argmax(const Matrix& logits);

std::size_t predict(const GcnParams& params, const graphdata::WeightedGraph& graph);

double evaluate_accuracy(const GcnParams& params, const graphdata::GraphDataset& dataset,
                         graphdata::SplitPart part);

/// A mask trained jointly with the model: the adjacency seen by the GCN is
/// A (.) sigma(Phi^T + Phi) (or A (.) sigma(Phi) when not symmetric), and the
/// objective gains l1_weight * sum(mask).
struct EdgeMaskTraining {
  Matrix phi;
  bool symmetric = true;
  double l1_weight = 0.0;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

struct TrainResult {
  GcnParams params;
  std::optional<Matrix> phi;  // learned mask parameters, when trained with a mask
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  double best_train_loss = 0.0;
};

/// Adam over shuffled mini-batches of the train split; stops once the
/// validation objective has not improved for `patience` epochs (or at
/// max_epochs) and returns the best-validation epoch's parameters.
TrainResult train_model(const graphdata::GraphDataset& dataset, const GcnConfig& config,
                        const EdgeMaskTraining* mask = nullptr);

/// Validation objective for fixed parameters: mean CE over `part` (+ l1 term
/// when a mask is given).
double evaluate_objective(const GcnParams& params, const graphdata::GraphDataset& dataset,
                          graphdata::SplitPart part, const EdgeMaskTraining* mask = nullptr);

/// CSV `epoch,train_loss,val_loss,val_acc`.
void write_epoch_log(const std::filesystem::path& path, std::span<const EpochLog> log);

class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);
  void step(std::span<Matrix* const> params, std::span<const Matrix> grads);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<Matrix> m_, v_;
};

}  // namespace igs::gcn
