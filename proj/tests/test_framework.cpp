#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "igs/errors.hpp"
#include "igs/framework.hpp"
#include "igs/log.hpp"
#include "support.hpp"

namespace fw = igs::framework;
namespace gd = igs::graphdata;
namespace mk = igs::masking;
namespace sp = igs::sparsifiers;
using igs::Matrix;

namespace {

fw::FrameworkConfig small_config(sp::Method method, std::size_t iterations, double p) {
  fw::FrameworkConfig c;
  c.iterations = iterations;
  c.removal_percent = p;
  c.spec.method = method;
  c.spec.mask_epochs = 5;
  c.gcn = igs::testing::tiny_gcn();
  c.gcn.max_epochs = 8;
  c.seed = 3;
  return c;
}

gd::GraphDataset cohort(std::uint64_t seed, std::size_t n = 6) {
  return gd::initial_threshold(igs::testing::small_cohort(20, n, 2, seed), 0.5);
}

std::vector<fw::IterationRecord> records_with_losses(const std::vector<double>& losses) {
  std::vector<fw::IterationRecord> r;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    fw::IterationRecord rec;
    rec.iteration = i + 1;
    rec.val_loss = losses[i];
    r.push_back(rec);
  }
  return r;
}

}  // namespace

TEST_SUITE("framework") {

TEST_CASE("defaults") {
  const fw::FrameworkConfig c;
  CHECK(c.iterations == 55);
  CHECK(c.removal_percent == 5.0);
  CHECK(c.spec.lambda == 0.0001);
  CHECK_FALSE(c.timing);
}

TEST_CASE("select_best: earliest minimum") {
  CHECK(fw::select_best(records_with_losses({0.7, 0.5, 0.5})) == 2);
  CHECK(fw::select_best(records_with_losses({0.3})) == 1);
  CHECK(fw::select_best(records_with_losses({0.5, 0.4, 0.3, 0.2})) == 4);
  CHECK_THROWS_AS(fw::select_best(std::vector<fw::IterationRecord>{}), igs::ContractError);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> pick(0, 5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> losses(1 + trial % 12);
    for (double& l : losses) l = pick(rng) / 5.0;
    std::size_t want = 0;
    for (std::size_t i = 0; i < losses.size(); ++i)
      if (losses[i] < losses[want]) want = i;
    CHECK(fw::select_best(records_with_losses(losses)) == want + 1);
  }
}

TEST_CASE("p=0 leaves the graphs unchanged") {
  const auto ds = cohort(1);
  const auto out = fw::run_iteration(ds, nullptr, small_config(sp::Method::kGradJoint, 1, 0), 1);
  for (std::size_t g = 0; g < ds.graphs.size(); ++g)
    CHECK(out.graphs.graphs[g].adjacency == ds.graphs[g].adjacency);
  CHECK(out.record.sparsity == gd::mean_sparsity(ds));
}

TEST_CASE("single iteration: one record, best is 1") {
  const auto ds = cohort(2);
  const auto r = fw::run_framework(ds, small_config(sp::Method::kIGS, 1, 5));
  REQUIRE(r.records.size() == 1);
  CHECK(r.best_iteration == 1);
  CHECK(r.records[0].iteration == 1);
  CHECK_FALSE(r.error);
}

TEST_CASE("first iteration sparsity after the initial threshold, by edge counting") {
  // A complete 20-node graph thresholded to 95 edges; a joint mask over
  // one graph removes floor(0.05 * 95) = 4 edges: 91 / 190 of the original.
  std::mt19937_64 rng(3);
  gd::GraphDataset ds;
  ds.num_classes = 2;
  for (int g = 0; g < 12; ++g) {
    gd::WeightedGraph wg;
    wg.adjacency = igs::testing::random_symmetric(20, rng, 0.05, 1.0);
    wg.features = wg.adjacency;
    wg.label = g % 2;
    ds.graphs.push_back(wg);
  }
  // Every graph shares one support so the joint support equals each graph's.
  for (auto& wg : ds.graphs) wg.adjacency = ds.graphs[0].adjacency;
  for (auto& wg : ds.graphs) wg.features = wg.adjacency;
  ds.split = gd::stratified_split(ds, {0.5, 0.25, 0.25}, 0);
  ds = gd::initial_threshold(ds, 0.5);
  CHECK(gd::edge_count(ds.graphs[0].adjacency) == 95);
  const auto out = fw::run_iteration(ds, nullptr, small_config(sp::Method::kGradJoint, 1, 5), 1);
  CHECK(gd::edge_count(out.graphs.graphs[0].adjacency) == 91);
  CHECK(out.record.sparsity == doctest::Approx(91.0 / 190.0));
  CHECK(std::abs(out.record.sparsity - 0.475) <= 1.0 / 190.0);
}

TEST_CASE("supports are nested and sparsity decreases, for joint and individual methods") {
  for (sp::Method m : {sp::Method::kIGS, sp::Method::kGradIndi}) {
    const auto ds = cohort(4);
    std::vector<gd::GraphDataset> history;
    auto cfg = small_config(m, 4, 20);
    const auto r = fw::run_framework(ds, cfg, [&](fw::IterationRecord&, const fw::IterationOutput& out) {
      history.push_back(out.graphs);
    });
    REQUIRE(r.records.size() == 4);
    gd::GraphDataset prev = ds;
    double prev_sparsity = gd::mean_sparsity(ds);
    for (std::size_t it = 0; it < history.size(); ++it) {
      CHECK(r.records[it].iteration == it + 1);
      CHECK(r.records[it].sparsity <= prev_sparsity);
      for (std::size_t g = 0; g < ds.graphs.size(); ++g)
        CHECK(mk::BinaryMask::support_of(prev.graphs[g].adjacency)
                  .contains(mk::BinaryMask::support_of(history[it].graphs[g].adjacency)));
      prev = history[it];
      prev_sparsity = r.records[it].sparsity;
    }
  }
}

TEST_CASE("joint support shrinks geometrically up to floor rounding") {
  const auto ds = cohort(5, 8);
  std::vector<std::size_t> counts{mk::BinaryMask::union_support(ds).edge_count()};
  const auto r = fw::run_framework(ds, small_config(sp::Method::kGradJoint, 5, 10),
                                   [&](fw::IterationRecord&, const fw::IterationOutput& out) {
                                     counts.push_back(out.mask.joint->edge_count());
                                   });
  REQUIRE(r.records.size() == 5);
  for (std::size_t i = 1; i < counts.size(); ++i)
    CHECK(counts[i] == counts[i - 1] - mk::removal_count(counts[i - 1], 10));
  const double geometric = counts[0] * std::pow(0.9, 5);
  CHECK(counts.back() >= geometric);
  CHECK(counts.back() <= geometric + 5);
}

TEST_CASE("identical configuration gives identical trajectories") {
  const auto ds = cohort(6);
  const auto cfg = small_config(sp::Method::kIGS, 3, 10);
  const auto a = fw::run_framework(ds, cfg);
  const auto b = fw::run_framework(ds, cfg);
  CHECK(a.records == b.records);
  CHECK(a.best_iteration == b.best_iteration);
  CHECK(*a.final_scores == *b.final_scores);
}

TEST_CASE("best graphs are those of the best iteration") {
  const auto ds = cohort(7);
  std::vector<gd::GraphDataset> history;
  const auto r = fw::run_framework(ds, small_config(sp::Method::kGradJoint, 4, 15),
                                   [&](fw::IterationRecord&, const fw::IterationOutput& out) {
                                     history.push_back(out.graphs);
                                   });
  CHECK(r.best_iteration == fw::select_best(r.records));
  for (std::size_t g = 0; g < ds.graphs.size(); ++g)
    CHECK(r.best_graphs.graphs[g].adjacency == history[r.best_iteration - 1].graphs[g].adjacency);
}

TEST_CASE("IGS with a constant gradient map falls back to Xavier") {
  const auto ds = cohort(8);
  mk::GradientMap constant{Matrix(6, 6, 1.0), mk::MapProvenance::kJoint};
  const auto cfg = small_config(sp::Method::kIGS, 2, 10);
  igs::set_warnings_enabled(false);
  const unsigned before = igs::warning_count();
  const auto with_const = fw::run_iteration(ds, &constant, cfg, 2);
  igs::set_warnings_enabled(true);
  CHECK(igs::warning_count() > before);
  const auto without = fw::run_iteration(ds, nullptr, cfg, 2);
  CHECK(with_const.record == without.record);
}

TEST_CASE("gradient maps are computed only for methods that consume them") {
  const auto ds = cohort(9);
  CHECK(fw::run_iteration(ds, nullptr, small_config(sp::Method::kIGS, 1, 5), 1).gradient_map);
  CHECK(fw::run_iteration(ds, nullptr, small_config(sp::Method::kGradTrained, 1, 5), 1).gradient_map);
  CHECK_FALSE(fw::run_iteration(ds, nullptr, small_config(sp::Method::kGradJoint, 1, 5), 1).gradient_map);
}

TEST_CASE("divergence aborts the run and keeps the partial trajectory") {
  auto ds = cohort(10);
  auto cfg = small_config(sp::Method::kGradJoint, 3, 5);
  cfg.gcn.learning_rate = 1e200;
  igs::set_warnings_enabled(false);
  const auto r = fw::run_framework(ds, cfg);
  igs::set_warnings_enabled(true);
  CHECK(r.error);
  CHECK(r.records.size() < 3);
}

TEST_CASE("configuration errors") {
  auto cfg = small_config(sp::Method::kIGS, 0, 5);
  CHECK_THROWS_AS(cfg.validate(), igs::ConfigError);
  cfg.iterations = 1;
  cfg.removal_percent = 100;
  CHECK_THROWS_AS(cfg.validate(), igs::ConfigError);
}

TEST_CASE("trajectory CSV round trip") {
  const auto dir = igs::testing::scratch_dir("trajectory");
  auto recs = records_with_losses({0.5, 0.25});
  recs[0].sparsity = 0.475;
  recs[1].test_acc = 2.0 / 3.0;
  fw::write_trajectory(dir / "t.csv", recs);
  const auto back = fw::read_trajectory(dir / "t.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].sparsity == 0.475);
  CHECK(back[1].test_acc == 2.0 / 3.0);
  CHECK(back[1].val_loss == 0.25);
  std::ifstream in(dir / "t.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "iteration,sparsity,train_loss,val_loss,val_acc,test_acc,seconds");
}

}  // TEST_SUITE
