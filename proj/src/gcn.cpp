#include "igs/gcn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "igs/csv_io.hpp"
#include "igs/errors.hpp"
#include "igs/masking.hpp"
#include "igs/seeding.hpp"

namespace igs::gcn {
using graphdata::GraphDataset;
using graphdata::SplitPart;
using graphdata::WeightedGraph;
using numgrad::Tape;
using numgrad::Var;

namespace {

enum Stream : std::uint64_t { kInitStream = 1, kShuffleStream = 2, kDropoutStream = 3 };

// Normalized adjacency and its product with the features, reused across
// epochs when the adjacency is not being masked.
struct Prepared {
  Matrix normalized;
  Matrix propagated;
};

Prepared prepare(const WeightedGraph& g) {
  Prepared p;
  p.normalized = normalize_adjacency(g.adjacency);
  p.propagated = matmul(p.normalized, g.features);
  return p;
}

struct Evaluation {
  double objective = 0.0;
  double accuracy = 0.0;
};

// Records the logits of one graph on `tape`, using the cached propagation
// when there is no mask.
Var record_graph(Tape& tape, const ParamVars& pv, const WeightedGraph& g, const Prepared* prepared,
                 std::optional<Var> mask_var, double dropout, bool training, std::mt19937_64& rng) {
  const Var features = tape.input(g.features, false);
  if (mask_var) {
    const Var adjacency = tape.input(g.adjacency, false);
    const Var normalized = tape.gcn_normalize(tape.hadamard(adjacency, *mask_var));
    return record_forward(tape, pv, normalized, features, std::nullopt, dropout, training, rng);
  }
  const Var normalized = tape.input(prepared->normalized, false);
  const Var propagated = tape.input(prepared->propagated, false);
  return record_forward(tape, pv, normalized, features, propagated, dropout, training, rng);
}

Evaluation evaluate(const GcnParams& params, const GraphDataset& dataset,
                    std::span<const std::size_t> ids, const std::vector<Prepared>* cache,
                    const Matrix* phi, bool symmetric, double l1_weight) {
  if (ids.empty()) throw ContractError("evaluation split is empty");
  Tape tape;
  const ParamVars pv = bind_params(tape, params, false);
  std::optional<Var> mask_var;
  if (phi) mask_var = masking::record_soft_mask(tape, tape.input(*phi, false), symmetric);
  std::mt19937_64 unused_rng(0);
  double ce = 0.0;
  std::size_t correct = 0;
  for (std::size_t id : ids) {
    const WeightedGraph& g = dataset.graphs[id];
    Prepared local;
    const Prepared* prep = nullptr;
    if (!phi) {
      if (cache) {
        prep = &(*cache)[id];
      } else {
        local = prepare(g);
        prep = &local;
      }
    }
    const Var logits = record_graph(tape, pv, g, prep, mask_var, 0.0, false, unused_rng);
    ce += tape.value(tape.softmax_xent(logits, g.label))(0, 0);
    if (argmax(tape.value(logits)) == g.label) ++correct;
  }
  Evaluation e;
  e.objective = ce / static_cast<double>(ids.size());
  if (mask_var && l1_weight != 0.0) {
    double total = 0.0;
    for (double s : tape.value(*mask_var).values()) total += s;
    e.objective += l1_weight * total;
  }
  e.accuracy = static_cast<double>(correct) / static_cast<double>(ids.size());
  return e;
}

}  // namespace

void GcnConfig::validate() const {
  if (layers < 1) throw ConfigError("gcn layers must be at least 1");
  if (hidden < 1) throw ConfigError("gcn hidden dimension must be at least 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (max_epochs < 1) throw ConfigError("max epochs must be at least 1");
}

GcnParams GcnParams::init(std::size_t input_dim, std::size_t num_classes, const GcnConfig& config,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto glorot = [&rng](std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix w(fan_in, fan_out);
    for (double& v : w.values()) v = dist(rng);
    return w;
  };
  GcnParams p;
  std::size_t in = input_dim;
  for (std::size_t l = 0; l < config.layers; ++l) {
    p.weights.push_back(glorot(in, config.hidden));
    in = config.hidden;
  }
  p.classifier = glorot(config.hidden, num_classes);
  p.bias = Matrix(1, num_classes);
  return p;
}

std::vector<Matrix*> GcnParams::tensors() {
  std::vector<Matrix*> out;
  for (auto& w : weights) out.push_back(&w);
  out.push_back(&classifier);
  out.push_back(&bias);
  return out;
}

std::vector<const Matrix*> GcnParams::tensors() const {
  std::vector<const Matrix*> out;
  for (const auto& w : weights) out.push_back(&w);
  out.push_back(&classifier);
  out.push_back(&bias);
  return out;
}

std::vector<Var> ParamVars::all() const {
  std::vector<Var> out = weights;
  out.push_back(classifier);
  out.push_back(bias);
  return out;
}

ParamVars bind_params(Tape& tape, const GcnParams& params, bool differentiable) {
  ParamVars pv;
  for (const auto& w : params.weights) pv.weights.push_back(tape.input(w, differentiable));
  pv.classifier = tape.input(params.classifier, differentiable);
  pv.bias = tape.input(params.bias, differentiable);
  return pv;
}

Var record_forward(Tape& tape, const ParamVars& params, Var normalized, Var features,
                   std::optional<Var> propagated_input, double dropout, bool training,
                   std::mt19937_64& rng) {
  Var h = features;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    Var propagated;
    if (l == 0 && propagated_input) {
      propagated = *propagated_input;
    } else {
      if (l > 0) h = tape.dropout(h, dropout, training, rng);
      propagated = tape.matmul(normalized, h);
    }
    h = tape.relu(tape.matmul(propagated, params.weights[l]));
  }
  const Var pooled = tape.row_mean(h);
  return tape.add(tape.matmul(pooled, params.classifier), params.bias);
}

Matrix normalize_adjacency(const Matrix& adjacency) {
  Tape tape;
  return tape.value(tape.gcn_normalize(tape.input(adjacency, false)));
}

Matrix gcn_forward(const GcnParams& params, const Matrix& adjacency, const Matrix& features,
                   bool training, std::uint64_t seed, double dropout) {
  if (adjacency.rows() != features.rows())
    throw ContractError("adjacency " + adjacency.shape_string() + " and features " +
                        features.shape_string() + " disagree on node count");
  if (params.weights.empty() || params.weights.front().rows() != features.cols())
    throw ContractError("feature dimension does not match the first layer");
  Tape tape;
  const ParamVars pv = bind_params(tape, params, false);
  std::mt19937_64 rng(seed);
  const Var normalized = tape.gcn_normalize(tape.input(adjacency, false));
  const Var logits = record_forward(tape, pv, normalized, tape.input(features, false), std::nullopt,
                                    dropout, training, rng);
  return tape.value(logits);
}

double batch_loss(const GcnParams& params, std::span<const WeightedGraph> graphs,
                  std::span<const std::size_t> labels) {
  if (graphs.empty()) throw ContractError("batch_loss needs a non-empty batch");
  if (graphs.size() != labels.size()) throw ContractError("one label per graph required");
  Tape tape;
  const ParamVars pv = bind_params(tape, params, false);
  std::mt19937_64 rng(0);
  Var total{};
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const Var normalized = tape.gcn_normalize(tape.input(graphs[i].adjacency, false));
    const Var logits = record_forward(tape, pv, normalized, tape.input(graphs[i].features, false),
                                      std::nullopt, 0.0, false, rng);
    const Var ce = tape.softmax_xent(logits, labels[i]);
    total = i == 0 ? ce : tape.add(total, ce);
  }
  return tape.value(tape.scale(total, 1.0 / static_cast<double>(graphs.size())))(0, 0);
}

std::size_t argmax(const Matrix& logits) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < logits.cols(); ++c)
    if (logits(0, c) > logits(0, best)) best = c;
  return best;
}

std::size_t predict(const GcnParams& params, const WeightedGraph& graph) {
  return argmax(gcn_forward(params, graph.adjacency, graph.features, false, 0));
}

double evaluate_accuracy(const GcnParams& params, const GraphDataset& dataset, SplitPart part) {
  return evaluate(params, dataset, dataset.part(part), nullptr, nullptr, true, 0.0).accuracy;
}

double evaluate_objective(const GcnParams& params, const GraphDataset& dataset, SplitPart part,
                          const EdgeMaskTraining* mask) {
  return evaluate(params, dataset, dataset.part(part), nullptr, mask ? &mask->phi : nullptr,
                  mask ? mask->symmetric : true, mask ? mask->l1_weight : 0.0)
      .objective;
}

TrainResult train_model(const GraphDataset& dataset, const GcnConfig& config,
                        const EdgeMaskTraining* mask) {
  config.validate();
  if (dataset.split.train.empty()) throw ContractError("train split is empty");
  if (dataset.split.val.empty()) throw ContractError("validation split is empty");
  const std::size_t n = dataset.node_count();
  if (mask && (mask->phi.rows() != n || mask->phi.cols() != n))
    throw ConfigError("mask parameters must be " + std::to_string(n) + "x" + std::to_string(n));

  GcnParams params = GcnParams::init(dataset.graphs.front().features.cols(), dataset.num_classes,
                                     config, derive_seed(config.seed, {kInitStream}));
  std::optional<Matrix> phi;
  if (mask) phi = mask->phi;

  std::vector<Prepared> cache;
  if (!mask) {
    cache.resize(dataset.graphs.size());
    for (const auto* part : {&dataset.split.train, &dataset.split.val})
      for (std::size_t id : *part) cache[id] = prepare(dataset.graphs[id]);
  }

  std::mt19937_64 shuffle_rng(derive_seed(config.seed, {kShuffleStream}));
  std::mt19937_64 dropout_rng(derive_seed(config.seed, {kDropoutStream}));
  Adam optimizer(config.learning_rate);
  std::vector<std::size_t> order = dataset.split.train;

  TrainResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  result.params = params;
  result.phi = phi;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      Tape tape;
      const ParamVars pv = bind_params(tape, params, true);
      std::vector<Var> wrt = pv.all();
      std::optional<Var> mask_var;
      if (phi) {
        const Var phi_var = tape.input(*phi, true);
        wrt.push_back(phi_var);
        mask_var = masking::record_soft_mask(tape, phi_var, mask->symmetric);
      }
      Var total{};
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t id = order[b];
        const WeightedGraph& g = dataset.graphs[id];
        const Var logits = record_graph(tape, pv, g, mask ? nullptr : &cache[id], mask_var,
                                        config.dropout, true, dropout_rng);
        const Var ce = tape.softmax_xent(logits, g.label);
        total = b == start ? ce : tape.add(total, ce);
      }
      Var loss = tape.scale(total, 1.0 / static_cast<double>(stop - start));
      if (mask_var && mask->l1_weight != 0.0)
        loss = tape.add(loss, tape.scale(tape.sum(*mask_var), mask->l1_weight));
      const auto grads = tape.backward(loss, wrt);

      std::vector<Matrix*> targets = params.tensors();
      if (phi) targets.push_back(&*phi);
      std::vector<Matrix> grad_list;
      grad_list.reserve(wrt.size());
      for (Var v : wrt) grad_list.push_back(grads[v]);
      optimizer.step(targets, grad_list);
      loss_total += tape.value(loss)(0, 0);
      ++batches;
    }

    const Evaluation val =
        evaluate(params, dataset, dataset.split.val, mask ? nullptr : &cache,
                 phi ? &*phi : nullptr, mask ? mask->symmetric : true, mask ? mask->l1_weight : 0.0);
    const double train_loss = loss_total / static_cast<double>(batches);
    if (!std::isfinite(train_loss) || !std::isfinite(val.objective))
      throw NumericError("training diverged at epoch " + std::to_string(epoch));
    result.log.push_back({epoch, train_loss, val.objective, val.accuracy});
    if (val.objective < result.best_val_loss) {
      result.best_val_loss = val.objective;
      result.best_train_loss = train_loss;
      result.best_epoch = epoch;
      result.params = params;
      result.phi = phi;
    }
    if (epoch - result.best_epoch >= config.patience) break;
  }
  return result;
}

void write_epoch_log(const std::filesystem::path& path, std::span<const EpochLog> log) {
  std::string out = "epoch,train_loss,val_loss,val_acc\n";
  for (const auto& e : log)
    out += std::to_string(e.epoch) + "," + io::format_double(e.train_loss) + "," +
           io::format_double(e.val_loss) + "," + io::format_double(e.val_acc) + "\n";
  io::write_text(path, out);
}

Adam::Adam(double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

void Adam::step(std::span<Matrix* const> params, std::span<const Matrix> grads) {
  if (params.size() != grads.size()) throw ContractError("Adam: one gradient per parameter");
  if (m_.empty()) {
    for (const Matrix* p : params) {
      m_.emplace_back(p->rows(), p->cols());
      v_.emplace_back(p->rows(), p->cols());
    }
  }
  if (m_.size() != params.size()) throw ContractError("Adam: parameter set changed between steps");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& p = *params[k];
    const Matrix& g = grads[k];
    if (!p.same_shape(g)) throw ContractError("Adam: gradient shape mismatch");
    double* pm = m_[k].data();
    double* pv = v_[k].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g.data()[i];
      pm[i] = beta1_ * pm[i] + (1.0 - beta1_) * gi;
      pv[i] = beta2_ * pv[i] + (1.0 - beta2_) * gi * gi;
      p.data()[i] -= lr_ * (pm[i] / c1) / (std::sqrt(pv[i] / c2) + eps_);
    }
  }
}

}  // namespace igs::gcn
