#include "igs/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "igs/csv_io.hpp"
#include "igs/errors.hpp"
#include "igs/log.hpp"
#include "igs/summation.hpp"

namespace igs::harness {
namespace fs = std::filesystem;
using json = nlohmann::json;
using graphdata::GraphDataset;
using sparsifiers::Method;

namespace {

// Strict reader over one JSON object: every key must be consumed.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) throw ConfigError(where_ + " must be a JSON object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!obj_.contains(key)) return;
    used_.insert(key);
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where_ + "." + key + " has the wrong type");
    }
  }

  const json& sub(const std::string& key) {
    used_.insert(key);
    return obj_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items())
      if (!used_.count(key)) throw ConfigError("unknown configuration key " + where_ + "." + key);
  }

 private:
  const json& obj_;
  std::string where_;
  std::set<std::string> used_;
};

template <typename T>
void read_count(ObjectReader& r, const std::string& key, T& out, const std::string& where) {
  if (!r.has(key)) return;
  long long v = 0;
  r.read(key, v);
  if (v < 0) throw ConfigError(where + "." + key + " must be non-negative");
  out = static_cast<T>(v);
}

void parse_gcn(const json& j, gcn::GcnConfig& c) {
  ObjectReader r(j, "gcn");
  read_count(r, "layers", c.layers, "gcn");
  read_count(r, "hidden", c.hidden, "gcn");
  r.read("dropout", c.dropout);
  r.read("learning_rate", c.learning_rate);
  read_count(r, "batch_size", c.batch_size, "gcn");
  read_count(r, "patience", c.patience, "gcn");
  read_count(r, "max_epochs", c.max_epochs, "gcn");
  r.finish();
}

void parse_method_params(const json& j, sparsifiers::SparsifierSpec& s) {
  ObjectReader r(j, "method_params");
  r.read("lambda", s.lambda);
  read_count(r, "mask_epochs", s.mask_epochs, "method_params");
  r.read("entropy_weight", s.entropy_weight);
  r.read("mask_learning_rate", s.mask_learning_rate);
  r.finish();
}

void parse_framework(const json& j, framework::FrameworkConfig& f) {
  ObjectReader r(j, "framework");
  read_count(r, "iterations", f.iterations, "framework");
  r.read("removal_percent", f.removal_percent);
  r.read("timing", f.timing);
  r.finish();
}

void parse_dataset(const json& j, DatasetSource& d, const fs::path& base_dir) {
  ObjectReader r(j, "dataset");
  if (r.has("manifest")) {
    std::string path;
    r.read("manifest", path);
    fs::path p(path);
    d.manifest = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }
  if (r.has("synthetic")) {
    ObjectReader s(r.sub("synthetic"), "dataset.synthetic");
    graphdata::SyntheticConfig c;
    read_count(s, "nodes", c.nodes, "dataset.synthetic");
    read_count(s, "graphs", c.graphs, "dataset.synthetic");
    read_count(s, "subnetworks", c.subnetworks, "dataset.synthetic");
    read_count(s, "block_a", c.block_a, "dataset.synthetic");
    read_count(s, "block_b", c.block_b, "dataset.synthetic");
    s.read("shift", c.shift);
    s.read("noise", c.noise);
    read_count(s, "seed", d.synthetic_seed, "dataset.synthetic");
    s.finish();
    d.synthetic = c;
  }
  r.finish();
}

std::string method_dir_name(const std::string& method) { return method; }

std::string split_dir_name(std::size_t split) { return "split_" + std::to_string(split); }

std::string iteration_name(std::size_t iteration) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "iter_%03zu", iteration);
  return buf;
}

// Per-graph masks as one long-format file of retained edges.
std::string format_edge_masks(const std::vector<masking::BinaryMask>& masks) {
  std::string out = "graph,i,j\n";
  for (std::size_t g = 0; g < masks.size(); ++g) {
    const Matrix& m = masks[g].indicator;
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = i + 1; j < m.cols(); ++j)
        if (m(i, j) != 0.0)
          out += std::to_string(g) + "," + std::to_string(i) + "," + std::to_string(j) + "\n";
  }
  return out;
}

void write_export_metadata(const fs::path& path, std::size_t iteration, const std::string& method,
                           const std::string& provenance) {
  json doc{{"iteration", iteration}, {"method", method}, {"provenance", provenance}};
  io::write_text(path, doc.dump(2) + "\n");
}

void write_run_json(const fs::path& dir, const RunOutcome& run) {
  json doc{{"method", run.method},   {"split", run.split}, {"seed", run.seed},
           {"status", run.status},   {"error", run.error}};
  io::write_text(dir / "run.json", doc.dump(2) + "\n");
}

void fill_best(RunOutcome& run) {
  if (run.records.empty()) return;
  run.best_iteration = framework::select_best(run.records);
  const auto& best = run.records[run.best_iteration - 1];
  run.test_acc = best.test_acc;
  run.sparsity = best.sparsity;
}

std::vector<std::string> canonical_order(const std::set<std::string>& present) {
  std::vector<std::string> order;
  for (Method m : sparsifiers::all_methods()) {
    const std::string name = sparsifiers::to_string(m);
    if (present.count(name)) order.push_back(name);
  }
  if (present.count(kOriginalMethod)) order.push_back(kOriginalMethod);
  for (const auto& name : present)
    if (std::find(order.begin(), order.end(), name) == order.end()) order.push_back(name);
  return order;
}

}  // namespace

void ExperimentPlan::validate() const {
  if (methods.empty() && !include_original) throw ConfigError("plan needs at least one method");
  if (split_seeds == 0) throw ConfigError("split_seeds must be at least 1");
  if (workers == 0) throw ConfigError("workers must be at least 1");
  if (!(initial_keep_fraction > 0.0 && initial_keep_fraction <= 1.0))
    throw ConfigError("initial_keep_fraction must lie in (0, 1]");
  if (dataset.manifest.has_value() == dataset.synthetic.has_value())
    throw ConfigError("dataset needs exactly one of 'manifest' or 'synthetic'");
  std::set<Method> seen;
  for (Method m : methods)
    if (!seen.insert(m).second) throw ConfigError("method " + sparsifiers::to_string(m) + " listed twice");
  method_params.validate();
  framework.validate();
}

ExperimentPlan parse_plan(const std::string& json_text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  ExperimentPlan plan;
  ObjectReader r(doc, "config");
  if (r.has("method") && r.has("methods"))
    throw ConfigError("give either 'method' or 'methods', not both");
  if (r.has("method")) {
    std::string name;
    r.read("method", name);
    plan.methods = {sparsifiers::parse_method(name)};
  }
  if (r.has("methods")) {
    std::vector<std::string> names;
    r.read("methods", names);
    plan.methods.clear();
    for (const auto& name : names) plan.methods.push_back(sparsifiers::parse_method(name));
  }
  if (r.has("method_params")) parse_method_params(r.sub("method_params"), plan.method_params);
  if (r.has("gcn")) parse_gcn(r.sub("gcn"), plan.framework.gcn);
  if (r.has("framework")) parse_framework(r.sub("framework"), plan.framework);
  if (r.has("dataset")) parse_dataset(r.sub("dataset"), plan.dataset, base_dir);
  read_count(r, "seed", plan.seed, "config");
  read_count(r, "split_seeds", plan.split_seeds, "config");
  if (r.has("split_fractions")) {
    std::vector<double> f;
    r.read("split_fractions", f);
    if (f.size() != 3) throw ConfigError("split_fractions needs three values (train, val, test)");
    plan.split_fractions = {f[0], f[1], f[2]};
  }
  r.read("initial_keep_fraction", plan.initial_keep_fraction);
  if (r.has("features")) {
    std::string mode;
    r.read("features", mode);
    plan.features = graphdata::parse_feature_mode(mode);
  }
  r.read("include_original", plan.include_original);
  read_count(r, "workers", plan.workers, "config");
  r.read("export_masks", plan.export_masks);
  if (r.has("output_dir")) {
    std::string out;
    r.read("output_dir", out);
    fs::path p(out);
    plan.output_dir = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }
  r.finish();
  plan.validate();
  return plan;
}

ExperimentPlan load_plan(const fs::path& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const IngestionError& e) {
    throw ConfigError(e.what());
  }
  return parse_plan(text, path.parent_path());
}

std::string plan_to_json(const ExperimentPlan& plan) {
  json doc;
  json methods = json::array();
  for (Method m : plan.methods) methods.push_back(sparsifiers::to_string(m));
  doc["methods"] = methods;
  const auto& s = plan.method_params;
  doc["method_params"] = {{"lambda", s.lambda},
                          {"mask_epochs", s.mask_epochs},
                          {"entropy_weight", s.entropy_weight},
                          {"mask_learning_rate", s.mask_learning_rate}};
  const auto& g = plan.framework.gcn;
  doc["gcn"] = {{"layers", g.layers},         {"hidden", g.hidden},
                {"dropout", g.dropout},       {"learning_rate", g.learning_rate},
                {"batch_size", g.batch_size}, {"patience", g.patience},
                {"max_epochs", g.max_epochs}};
  doc["framework"] = {{"iterations", plan.framework.iterations},
                      {"removal_percent", plan.framework.removal_percent},
                      {"timing", plan.framework.timing}};
  json dataset = json::object();
  if (plan.dataset.manifest) dataset["manifest"] = plan.dataset.manifest->string();
  if (plan.dataset.synthetic) {
    const auto& c = *plan.dataset.synthetic;
    dataset["synthetic"] = {{"nodes", c.nodes},     {"graphs", c.graphs},   {"subnetworks", c.subnetworks},
                            {"block_a", c.block_a}, {"block_b", c.block_b}, {"shift", c.shift},
                            {"noise", c.noise},     {"seed", plan.dataset.synthetic_seed}};
  }
  doc["dataset"] = dataset;
  doc["seed"] = plan.seed;
  doc["split_seeds"] = plan.split_seeds;
  doc["split_fractions"] = {plan.split_fractions[0], plan.split_fractions[1], plan.split_fractions[2]};
  doc["initial_keep_fraction"] = plan.initial_keep_fraction;
  if (plan.features) doc["features"] = graphdata::to_string(*plan.features);
  doc["include_original"] = plan.include_original;
  doc["workers"] = plan.workers;
  doc["export_masks"] = plan.export_masks;
  doc["output_dir"] = plan.output_dir.string();
  return doc.dump(2) + "\n";
}

GraphDataset load_dataset(const ExperimentPlan& plan) {
  GraphDataset ds = plan.dataset.manifest
                        ? graphdata::ingest_dataset(*plan.dataset.manifest)
                        : graphdata::generate_synthetic(*plan.dataset.synthetic,
                                                        plan.dataset.synthetic_seed);
  if (plan.features && *plan.features != ds.feature_mode) {
    if (*plan.features == graphdata::FeatureMode::kProvided)
      throw ConfigError("features 'provided' requires feature files in the manifest");
    ds = graphdata::default_node_features(ds, *plan.features);
  }
  return ds;
}

std::uint64_t run_seed(const ExperimentPlan& plan, std::size_t split) { return plan.seed + split; }

GraphDataset prepare_split(const GraphDataset& dataset, const ExperimentPlan& plan,
                           std::size_t split) {
  GraphDataset ds = dataset;
  ds.split = graphdata::stratified_split(ds, plan.split_fractions, run_seed(plan, split));
  return graphdata::initial_threshold(ds, plan.initial_keep_fraction);
}

RunOutcome run_single(const GraphDataset& prepared, const ExperimentPlan& plan,
                      const std::string& method, std::size_t split, const fs::path& run_dir) {
  RunOutcome run;
  run.method = method;
  run.split = split;
  run.seed = run_seed(plan, split);
  run.directory = run_dir;
  fs::remove_all(run_dir);
  fs::create_directories(run_dir);

  try {
    framework::FrameworkConfig config = plan.framework;
    config.seed = run.seed;
    if (method == kOriginalMethod) {
      config.gcn.seed = framework::retrain_stage_seed(run.seed, 1);
      const auto model = gcn::train_model(prepared, config.gcn);
      framework::IterationRecord r;
      r.iteration = 1;
      r.sparsity = graphdata::mean_sparsity(prepared);
      r.train_loss = model.best_train_loss;
      r.val_loss = model.best_val_loss;
      r.val_acc = gcn::evaluate_accuracy(model.params, prepared, graphdata::SplitPart::kVal);
      r.test_acc = gcn::evaluate_accuracy(model.params, prepared, graphdata::SplitPart::kTest);
      run.records.push_back(r);
      run.status = "ok";
    } else {
      config.spec = plan.method_params;
      config.spec.method = sparsifiers::parse_method(method);
      framework::IterationObserver observer;
      if (plan.export_masks) {
        observer = [&run_dir, &method](framework::IterationRecord& record,
                                       const framework::IterationOutput& out) {
          const std::string stem = iteration_name(record.iteration);
          const bool joint = out.mask.joint.has_value();
          if (joint) {
            record.mask_file = "masks/" + stem + ".csv";
            io::write_matrix_csv(run_dir / record.mask_file, out.mask.joint->indicator);
          } else {
            record.mask_file = "masks/" + stem + "_edges.csv";
            io::write_text(run_dir / record.mask_file, format_edge_masks(*out.mask.per_graph));
          }
          write_export_metadata(run_dir / "masks" / (stem + ".json"), record.iteration, method,
                                joint ? "joint" : "individual");
          if (out.gradient_map) {
            io::write_matrix_csv(run_dir / "gradmaps" / (stem + ".csv"), out.gradient_map->values);
            write_export_metadata(run_dir / "gradmaps" / (stem + ".json"), record.iteration,
                                  method, "joint");
          }
        };
      }
      auto result = framework::run_framework(prepared, config, observer);
      run.records = std::move(result.records);
      run.survival = std::move(result.survival);
      run.final_scores = std::move(result.final_scores);
      if (result.error) {
        run.error = *result.error;
        run.status = run.records.empty() ? "failed" : "partial";
      } else {
        run.status = "ok";
      }
    }
  } catch (const std::exception& e) {
    run.status = "failed";
    run.error = e.what();
  }

  if (!run.error.empty())
    warn(method + " split " + std::to_string(split) + " " + run.status + ": " + run.error);
  fill_best(run);
  framework::write_trajectory(run_dir / "trajectory.csv", run.records);
  if (run.survival) io::write_matrix_csv(run_dir / "scores" / "survival.csv", *run.survival);
  if (run.final_scores)
    io::write_matrix_csv(run_dir / "scores" / "final_scores.csv", *run.final_scores);
  write_run_json(run_dir, run);
  return run;
}

SuiteResult run_experiment_suite(const ExperimentPlan& plan) {
  plan.validate();
  const GraphDataset dataset = load_dataset(plan);

  fs::create_directories(plan.output_dir);
  io::write_text(plan.output_dir / "plan.json", plan_to_json(plan));
  if (dataset.subnetworks)
    graphdata::write_subnetwork_map(plan.output_dir / "subnetworks.csv", *dataset.subnetworks);
  fs::remove_all(plan.output_dir / "runs");

  // Splitting errors are configuration errors, so prepare all splits before
  // any job starts.
  std::vector<GraphDataset> prepared;
  for (std::size_t s = 0; s < plan.split_seeds; ++s) {
    prepared.push_back(prepare_split(dataset, plan, s));
    graphdata::validate(prepared.back());
  }

  std::vector<std::string> methods;
  for (Method m : plan.methods) methods.push_back(sparsifiers::to_string(m));
  if (plan.include_original) methods.push_back(kOriginalMethod);

  struct Job {
    std::string method;
    std::size_t split;
  };
  std::vector<Job> jobs;
  for (const auto& m : methods)
    for (std::size_t s = 0; s < plan.split_seeds; ++s) jobs.push_back({m, s});

  std::vector<RunOutcome> outcomes(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      const auto& job = jobs[k];
      const fs::path dir =
          plan.output_dir / "runs" / method_dir_name(job.method) / split_dir_name(job.split);
      outcomes[k] = run_single(prepared[job.split], plan, job.method, job.split, dir);
    }
  };
  const std::size_t threads = std::min(plan.workers, jobs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  SuiteResult result;
  result.runs = std::move(outcomes);
  result.summary = emit_reports(plan.output_dir);
  return result;
}

std::vector<double> fractional_ranks(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<double> ranks(scores.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

std::vector<SummaryRow> summarize(const std::vector<RunOutcome>& runs) {
  std::map<std::string, std::vector<const RunOutcome*>> by_method;
  for (const auto& run : runs) {
    if (run.records.empty()) {
      warn("excluding failed run " + run.method + " split " + std::to_string(run.split));
      continue;
    }
    by_method[run.method].push_back(&run);
  }
  std::set<std::string> present;
  for (const auto& [name, list] : by_method) present.insert(name);

  std::vector<SummaryRow> rows;
  for (const auto& name : canonical_order(present)) {
    auto list = by_method[name];
    std::sort(list.begin(), list.end(),
              [](const RunOutcome* a, const RunOutcome* b) { return a->split < b->split; });
    SummaryRow row;
    row.method = name;
    row.runs = list.size();
    double acc = 0.0, sp = 0.0;
    for (const auto* r : list) {
      acc += r->test_acc;
      sp += r->sparsity;
    }
    const double count = static_cast<double>(list.size());
    row.mean_test_acc = acc / count;
    row.mean_sparsity = sp / count;
    double var = 0.0;
    for (const auto* r : list) var += (r->test_acc - row.mean_test_acc) * (r->test_acc - row.mean_test_acc);
    row.std_test_acc = std::sqrt(var / count);
    rows.push_back(row);
  }
  std::vector<double> means;
  for (const auto& row : rows) means.push_back(row.mean_test_acc);
  const auto ranks = fractional_ranks(means);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].average_rank = ranks[i];
  return rows;
}

std::vector<RunOutcome> load_runs(const fs::path& output_dir) {
  std::vector<RunOutcome> runs;
  const fs::path root = output_dir / "runs";
  if (!fs::is_directory(root)) return runs;
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file() && entry.path().filename() == "run.json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    const fs::path dir = file.parent_path();
    json doc;
    try {
      doc = json::parse(io::read_text(file));
      RunOutcome run;
      run.method = doc.at("method").get<std::string>();
      run.split = doc.at("split").get<std::size_t>();
      run.seed = doc.at("seed").get<std::uint64_t>();
      run.status = doc.at("status").get<std::string>();
      run.error = doc.at("error").get<std::string>();
      run.directory = dir;
      run.records = framework::read_trajectory(dir / "trajectory.csv");
      if (fs::exists(dir / "scores" / "survival.csv"))
        run.survival = io::read_matrix_csv(dir / "scores" / "survival.csv");
      if (fs::exists(dir / "scores" / "final_scores.csv"))
        run.final_scores = io::read_matrix_csv(dir / "scores" / "final_scores.csv");
      fill_best(run);
      runs.push_back(std::move(run));
    } catch (const json::exception& e) {
      throw IngestionError(file.string() + ": " + e.what());
    }
  }
  std::sort(runs.begin(), runs.end(), [](const RunOutcome& a, const RunOutcome& b) {
    return std::tie(a.method, a.split) < std::tie(b.method, b.split);
  });
  return runs;
}

std::vector<SummaryRow> emit_reports(const fs::path& output_dir) {
  const auto runs = load_runs(output_dir);
  if (runs.empty()) throw IngestionError("no runs found in " + output_dir.string());
  const auto rows = summarize(runs);

  const fs::path reports = output_dir / "reports";
  fs::remove_all(reports);
  fs::create_directories(reports);

  std::ostringstream summary;
  summary << "method,runs,mean_test_acc,std_test_acc,mean_sparsity_percent,average_rank\n";
  for (const auto& r : rows)
    summary << r.method << ',' << r.runs << ',' << io::format_double(r.mean_test_acc) << ','
            << io::format_double(r.std_test_acc) << ',' << io::format_double(100.0 * r.mean_sparsity)
            << ',' << io::format_double(r.average_rank) << '\n';
  io::write_text(reports / "summary.csv", summary.str());

  std::ostringstream sparsity;
  sparsity << "method,split,status,best_iteration,sparsity_percent,test_acc\n";
  for (const auto& run : runs) {
    sparsity << run.method << ',' << run.split << ',' << run.status << ',' << run.best_iteration << ',';
    if (run.records.empty())
      sparsity << ",\n";
    else
      sparsity << io::format_double(100.0 * run.sparsity) << ',' << io::format_double(run.test_acc)
               << '\n';
  }
  io::write_text(reports / "sparsity.csv", sparsity.str());

  for (const auto& run : runs)
    framework::write_trajectory(
        reports / "trajectories" / (run.method + "_" + split_dir_name(run.split) + ".csv"),
        run.records);

  const fs::path map_file = output_dir / "subnetworks.csv";
  if (fs::exists(map_file)) {
    const auto map = graphdata::read_subnetwork_map(map_file);
    std::map<std::string, std::pair<Matrix, std::size_t>> sums;
    for (const auto& run : runs) {
      if (!run.final_scores || run.records.empty()) continue;
      const auto agg = subnetwork_aggregate(*run.final_scores, map);
      io::write_text(reports / "aggregates" / (run.method + "_" + split_dir_name(run.split) + ".csv"),
                     format_aggregate(agg));
      auto& [sum, count] = sums[run.method];
      if (count == 0) sum = Matrix(run.final_scores->rows(), run.final_scores->cols());
      sum += *run.final_scores;
      ++count;
    }
    for (auto& [method, entry] : sums) {
      auto& [sum, count] = entry;
      sum *= 1.0 / static_cast<double>(count);
      io::write_text(reports / "aggregates" / (method + "_mean.csv"),
                     format_aggregate(subnetwork_aggregate(sum, map)));
    }
  }
  return rows;
}

SubnetworkAggregate subnetwork_aggregate(const Matrix& values, const graphdata::SubnetworkMap& map) {
  if (!values.is_square()) throw ContractError("aggregate input must be square");
  if (map.size() != values.rows())
    throw ContractError("subnetwork map covers " + std::to_string(map.size()) + " nodes, matrix has " +
                        std::to_string(values.rows()));
  SubnetworkAggregate out;
  std::vector<std::size_t> group(map.size());
  for (std::size_t v = 0; v < map.size(); ++v) {
    if (map[v].empty()) throw ContractError("node " + std::to_string(v) + " has no subnetwork");
    auto it = std::find(out.names.begin(), out.names.end(), map[v]);
    if (it == out.names.end()) {
      out.names.push_back(map[v]);
      it = out.names.end() - 1;
    }
    group[v] = static_cast<std::size_t>(it - out.names.begin());
  }
  const std::size_t m = out.names.size();
  std::vector<ExactAccumulator> sum(m * m);
  std::vector<std::size_t> count(m * m, 0);
  for (std::size_t i = 0; i < values.rows(); ++i)
    for (std::size_t j = 0; j < values.cols(); ++j) {
      if (i == j) continue;
      sum[group[i] * m + group[j]].add(values(i, j));
      ++count[group[i] * m + group[j]];
    }
  out.values = Matrix(m, m);
  // A singleton subnetwork has no pairs with itself; its diagonal stays 0.
  for (std::size_t k = 0; k < m * m; ++k)
    if (count[k] > 0) out.values.data()[k] = sum[k].result() / static_cast<double>(count[k]);
  return out;
}

std::string format_aggregate(const SubnetworkAggregate& aggregate) {
  std::string out = "subnetwork";
  for (const auto& name : aggregate.names) out += "," + name;
  out += "\n";
  for (std::size_t p = 0; p < aggregate.names.size(); ++p) {
    out += aggregate.names[p];
    for (std::size_t q = 0; q < aggregate.names.size(); ++q)
      out += "," + io::format_double(aggregate.values(p, q));
    out += "\n";
  }
  return out;
}

graphdata::EdgeList retained_edge_ranking(const Matrix& survival, const Matrix& final_scores,
                                          const masking::BinaryMask& support) {
  struct Entry {
    double survived, score;
    std::size_t i, j;
  };
  std::vector<Entry> entries;
  const Matrix& s = support.indicator;
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = i + 1; j < s.cols(); ++j)
      if (s(i, j) != 0.0) entries.push_back({survival(i, j), final_scores(i, j), i, j});
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.survived != b.survived) return a.survived > b.survived;
    return a.score > b.score;
  });
  graphdata::EdgeList ranking;
  for (const auto& e : entries) ranking.emplace_back(e.i, e.j);
  return ranking;
}

double precision_at_k(const graphdata::EdgeList& ranking, const graphdata::EdgeList& planted,
                      std::size_t k) {
  if (k == 0) throw ContractError("precision needs k >= 1");
  std::set<std::pair<std::size_t, std::size_t>> truth;
  for (auto [i, j] : planted) truth.insert({std::min(i, j), std::max(i, j)});
  std::size_t hits = 0;
  for (std::size_t r = 0; r < std::min(k, ranking.size()); ++r) hits += truth.count(ranking[r]);
  return static_cast<double>(hits) / static_cast<double>(k);
}

}  // namespace igs::harness
