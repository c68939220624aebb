#include "igs/framework.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "igs/csv_io.hpp"
#include "igs/errors.hpp"
#include "igs/gradient_maps.hpp"
#include "igs/log.hpp"
#include "igs/seeding.hpp"

namespace igs::framework {
using graphdata::GraphDataset;
using masking::BinaryMask;
using sparsifiers::Method;

namespace {
constexpr std::uint64_t kMaskStage = 1;
constexpr std::uint64_t kRetrainStage = 2;
constexpr std::uint64_t kPhiStage = 3;

const char* const kTrajectoryHeader = "iteration,sparsity,train_loss,val_loss,val_acc,test_acc,seconds";

gcn::GcnConfig with_seed(gcn::GcnConfig config, std::uint64_t seed) {
  config.seed = seed;
  return config;
}

sparsifiers::MaskProduct learn_mask(const GraphDataset& current,
                                    const masking::GradientMap* gradient_map,
                                    const FrameworkConfig& config, std::size_t iteration) {
  const auto& spec = config.spec;
  const double p = config.removal_percent;
  const auto gcn_config = with_seed(config.gcn, mask_stage_seed(config.seed, iteration));
  const std::size_t n = current.node_count();
  const std::uint64_t phi_seed = phi_init_seed(config.seed, iteration);

  if (spec.consumes_gradient_map()) {
    masking::SoftMask phi;
    if (gradient_map == nullptr) {
      phi = masking::init_phi(n, masking::PhiInit::kXavier, nullptr, nullptr, phi_seed);
    } else {
      const BinaryMask support = BinaryMask::union_support(current);
      phi = masking::init_phi(n, masking::PhiInit::kFromGradientMap, gradient_map, &support,
                              phi_seed);
    }
    if (spec.method == Method::kIGS)
      return sparsifiers::igs_learn_mask(current, gcn_config, spec, phi, p).product;
    return sparsifiers::grad_trained_learn_mask(current, gcn_config, spec, phi, p).product;
  }

  switch (spec.method) {
    case Method::kGNNExplainerTrained:
      return sparsifiers::gnnexplainer_learn_mask(current, nullptr,
                                                  sparsifiers::ExplainerVariant::kTrained,
                                                  gcn_config, spec, p, phi_seed);
    case Method::kGradIndi:
    case Method::kGradJoint: {
      const auto trained = gcn::train_model(current, gcn_config);
      return sparsifiers::post_train_grad_mask(current, trained.params,
                                               spec.method == Method::kGradIndi
                                                   ? sparsifiers::GradVariant::kIndividual
                                                   : sparsifiers::GradVariant::kJoint,
                                               p);
    }
    case Method::kGNNExplainerIndi:
    case Method::kGNNExplainerJoint: {
      const auto trained = gcn::train_model(current, gcn_config);
      return sparsifiers::gnnexplainer_learn_mask(
          current, &trained.params,
          spec.method == Method::kGNNExplainerIndi ? sparsifiers::ExplainerVariant::kIndividual
                                                   : sparsifiers::ExplainerVariant::kJoint,
          gcn_config, spec, p, phi_seed);
    }
    default:
      break;
  }
  throw ContractError("unhandled method " + sparsifiers::to_string(spec.method));
}

GraphDataset apply_product(const GraphDataset& current, const sparsifiers::MaskProduct& mask) {
  GraphDataset out = current;
  for (std::size_t g = 0; g < out.graphs.size(); ++g) {
    const BinaryMask& m = mask.joint ? *mask.joint : mask.per_graph->at(g);
    out.graphs[g] = masking::apply_mask(m, current.graphs[g], current.feature_mode);
  }
  return out;
}

}  // namespace

std::uint64_t mask_stage_seed(std::uint64_t seed, std::size_t iteration) {
  return derive_seed(seed, {iteration, kMaskStage});
}
std::uint64_t retrain_stage_seed(std::uint64_t seed, std::size_t iteration) {
  return derive_seed(seed, {iteration, kRetrainStage});
}
std::uint64_t phi_init_seed(std::uint64_t seed, std::size_t iteration) {
  return derive_seed(seed, {iteration, kPhiStage});
}

void FrameworkConfig::validate() const {
  if (iterations == 0) throw ConfigError("iterations must be at least 1");
  if (!(removal_percent >= 0.0 && removal_percent < 100.0))
    throw ConfigError("removal percent must lie in [0, 100)");
  spec.validate();
  gcn.validate();
}

IterationOutput run_iteration(const GraphDataset& current, const masking::GradientMap* gradient_map,
                              const FrameworkConfig& config, std::size_t iteration) {
  if (current.graphs.empty()) throw ContractError("run_iteration needs a non-empty cohort");
  const auto start = std::chrono::steady_clock::now();

  IterationOutput out;
  out.mask = learn_mask(current, gradient_map, config, iteration);
  out.graphs = apply_product(current, out.mask);

  const auto retrain_config = with_seed(config.gcn, retrain_stage_seed(config.seed, iteration));
  const gcn::TrainResult model = gcn::train_model(out.graphs, retrain_config);

  out.record.iteration = iteration;
  out.record.sparsity = graphdata::mean_sparsity(out.graphs);
  out.record.train_loss = model.best_train_loss;
  out.record.val_loss = model.best_val_loss;
  out.record.val_acc = gcn::evaluate_accuracy(model.params, out.graphs, graphdata::SplitPart::kVal);
  out.record.test_acc = gcn::evaluate_accuracy(model.params, out.graphs, graphdata::SplitPart::kTest);

  if (config.spec.consumes_gradient_map())
    out.gradient_map = masking::joint_gradient_map(model.params, out.graphs, out.graphs.split.train);

  if (config.timing)
    out.record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

FrameworkResult run_framework(const GraphDataset& dataset, const FrameworkConfig& config,
                              const IterationObserver& observer) {
  config.validate();
  FrameworkResult result;
  const bool joint = config.spec.mask_type() == sparsifiers::MaskType::kJoint;
  const std::size_t n = dataset.node_count();
  if (joint) result.survival = Matrix(n, n);

  GraphDataset current = dataset;
  std::optional<masking::GradientMap> gradient_map;
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    IterationOutput out;
    try {
      out = run_iteration(current, gradient_map ? &*gradient_map : nullptr, config, it);
    } catch (const NumericError& e) {
      result.error = "iteration " + std::to_string(it) + ": " + e.what();
      warn("run aborted, " + *result.error);
      break;
    }
    if (observer) observer(out.record, out);
    result.records.push_back(out.record);

    if (joint) {
      const Matrix& ind = out.mask.joint->indicator;
      for (std::size_t e = 0; e < ind.size(); ++e) result.survival->data()[e] += ind.data()[e];
      result.final_scores = hadamard(out.mask.soft_scores.front(), ind);
    }
    gradient_map = std::move(out.gradient_map);
    current = std::move(out.graphs);
    // Strict improvement keeps the earliest minimum, as select_best does.
    if (result.best_iteration == 0 ||
        out.record.val_loss < result.records[result.best_iteration - 1].val_loss) {
      result.best_iteration = it;
      result.best_graphs = current;
    }
  }
  return result;
}

std::size_t select_best(std::span<const IterationRecord> records) {
  if (records.empty()) throw ContractError("select_best needs at least one record");
  std::size_t best = 0;
  for (std::size_t i = 1; i < records.size(); ++i)
    if (records[i].val_loss < records[best].val_loss) best = i;
  return best + 1;
}

void write_trajectory(const std::filesystem::path& path, std::span<const IterationRecord> records) {
  std::ostringstream os;
  os << kTrajectoryHeader << '\n';
  for (const auto& r : records) {
    os << r.iteration << ',' << io::format_double(r.sparsity) << ','
       << io::format_double(r.train_loss) << ',' << io::format_double(r.val_loss) << ','
       << io::format_double(r.val_acc) << ',' << io::format_double(r.test_acc) << ','
       << io::format_double(r.seconds) << '\n';
  }
  io::write_text(path, os.str());
}

std::vector<IterationRecord> read_trajectory(const std::filesystem::path& path) {
  std::istringstream in(io::read_text(path));
  std::string line;
  if (!std::getline(in, line) || line != kTrajectoryHeader)
    throw IngestionError(path.string() + ": not a trajectory file");
  std::vector<IterationRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = io::split_csv_line(line);
    if (cells.size() != 7)
      throw IngestionError(path.string() + ":" + std::to_string(line_no) + ": expected 7 fields");
    try {
      IterationRecord r;
      r.iteration = std::stoul(cells[0]);
      r.sparsity = std::stod(cells[1]);
      r.train_loss = std::stod(cells[2]);
      r.val_loss = std::stod(cells[3]);
      r.val_acc = std::stod(cells[4]);
      r.test_acc = std::stod(cells[5]);
      r.seconds = std::stod(cells[6]);
      records.push_back(r);
    } catch (const std::logic_error&) {
      throw IngestionError(path.string() + ":" + std::to_string(line_no) + ": malformed number");
    }
  }
  return records;
}

}  // namespace igs::framework
