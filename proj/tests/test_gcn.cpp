#include <doctest.h>

#include <cmath>
#include <fstream>

#include "igs/errors.hpp"
#include "igs/gcn.hpp"
#include "igs/masking.hpp"
#include "support.hpp"

namespace gcn = igs::gcn;
namespace gd = igs::graphdata;
using igs::Matrix;
using igs::numgrad::Tape;
using igs::numgrad::Var;

namespace {

// Independent forward pass with plain loops.
Matrix reference_forward(const gcn::GcnParams& p, const Matrix& a, const Matrix& x) {
  const std::size_t n = a.rows();
  std::vector<double> deg(n, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) deg[i] += std::abs(a(i, j));
  Matrix norm(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      norm(i, j) = (a(i, j) + (i == j ? 1.0 : 0.0)) / std::sqrt(deg[i] * deg[j]);
  Matrix h = x;
  for (const Matrix& w : p.weights) {
    Matrix next(n, w.cols());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < w.cols(); ++c) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t d = 0; d < h.cols(); ++d) s += norm(i, j) * h(j, d) * w(d, c);
        next(i, c) = std::max(0.0, s);
      }
    h = next;
  }
  Matrix logits(1, p.bias.cols());
  for (std::size_t c = 0; c < p.bias.cols(); ++c) {
    double s = p.bias(0, c);
    for (std::size_t d = 0; d < h.cols(); ++d) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += h(i, d);
      s += mean / static_cast<double>(n) * p.classifier(d, c);
    }
    logits(0, c) = s;
  }
  return logits;
}

}  // namespace

TEST_SUITE("gcn") {

TEST_CASE("defaults") {
  const gcn::GcnConfig c;
  CHECK(c.layers == 4);
  CHECK(c.hidden == 256);
  CHECK(c.dropout == 0.5);
  CHECK(c.learning_rate == 0.001);
  CHECK(c.batch_size == 16);
  CHECK(c.patience == 100);
  CHECK(c.max_epochs == 2000);
}

TEST_CASE("config validation") {
  gcn::GcnConfig c;
  c.layers = 0;
  CHECK_THROWS_AS(c.validate(), igs::ConfigError);
  c = {};
  c.dropout = 1.0;
  CHECK_THROWS_AS(c.validate(), igs::ConfigError);
}

TEST_CASE("normalization examples") {
  CHECK(gcn::normalize_adjacency(Matrix(2, 2)) == Matrix::identity(2));
  const Matrix half = gcn::normalize_adjacency(Matrix{{0, 1}, {1, 0}});
  for (double v : half.values()) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
  const Matrix neg = gcn::normalize_adjacency(Matrix{{0, -0.5}, {-0.5, 0}});
  CHECK(neg(0, 1) == doctest::Approx(-0.5 / 1.5));
  CHECK(neg(0, 0) == doctest::Approx(1.0 / 1.5));
}

TEST_CASE("zero head gives zero logits") {
  std::mt19937_64 rng(1);
  auto p = gcn::GcnParams::init(3, 2, igs::testing::tiny_gcn(), 0);
  p.classifier.fill(0.0);
  const Matrix a = igs::testing::random_symmetric(3, rng);
  CHECK(gcn::gcn_forward(p, a, a, false, 0) == Matrix(1, 2));
}

TEST_CASE("single node pooling returns that node") {
  gcn::GcnConfig c = igs::testing::tiny_gcn(1, 2);
  auto p = gcn::GcnParams::init(1, 2, c, 3);
  p.weights[0] = Matrix{{1.0, 2.0}};
  p.classifier = Matrix::identity(2);
  const Matrix logits = gcn::gcn_forward(p, Matrix(1, 1), Matrix{{3.0}}, false, 0);
  CHECK(logits == Matrix{{3.0, 6.0}});
}

TEST_CASE("forward matches a hand-written oracle on a 3-node path") {
  const gcn::GcnConfig c = igs::testing::tiny_gcn(2, 2);
  gcn::GcnParams p;
  p.weights = {Matrix{{0.5, -0.2}, {0.1, 0.3}, {-0.4, 0.6}}, Matrix{{1.0, -0.5}, {0.25, 0.75}}};
  p.classifier = Matrix{{0.3, -0.1}, {0.2, 0.4}};
  p.bias = Matrix{{0.05, -0.05}};
  const Matrix a{{0, 1, 0}, {1, 0, 1}, {0, 1, 0}};
  const Matrix got = gcn::gcn_forward(p, a, a, false, 0);
  const Matrix want = reference_forward(p, a, a);
  CHECK(igs::testing::max_abs_diff(got, want) < 1e-14);
}

TEST_CASE("batch loss: uniform logits, saturation, mean of singles") {
  auto ds = igs::testing::small_cohort(4, 4, 2, 5);
  auto p = gcn::GcnParams::init(4, 2, igs::testing::tiny_gcn(), 1);
  p.classifier.fill(0.0);
  const std::size_t l0[] = {0};
  CHECK(gcn::batch_loss(p, std::span(ds.graphs.data(), 1), l0) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-14));

  p.bias = Matrix{{20.0, 0.0}};
  CHECK(gcn::batch_loss(p, std::span(ds.graphs.data(), 1), l0) < 1e-8);

  auto q = gcn::GcnParams::init(4, 2, igs::testing::tiny_gcn(), 2);
  const std::size_t labels[] = {0, 1};
  const std::size_t l1[] = {1};
  const double both = gcn::batch_loss(q, std::span(ds.graphs.data(), 2), labels);
  const double a = gcn::batch_loss(q, std::span(ds.graphs.data(), 1), l0);
  const double b = gcn::batch_loss(q, std::span(ds.graphs.data() + 1, 1), l1);
  CHECK(both == doctest::Approx((a + b) / 2).epsilon(1e-14));

  std::vector<gd::WeightedGraph> swapped{ds.graphs[1], ds.graphs[0]};
  const std::size_t swapped_labels[] = {1, 0};
  CHECK(gcn::batch_loss(q, swapped, swapped_labels) == doctest::Approx(both).epsilon(1e-14));
}

TEST_CASE("gradients of the masked objective pass the finite difference check") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 3; ++trial) {
    const gcn::GcnConfig c = igs::testing::tiny_gcn(2, 5);
    auto p = gcn::GcnParams::init(4, 2, c, 10 + trial);
    for (auto* t : p.tensors())
      for (double& v : t->values()) v += 0.05;  // keep pre-activations off the ReLU kink
    Tape tape;
    const auto pv = gcn::bind_params(tape, p, true);
    const Var phi = tape.input(igs::testing::random_matrix(5, 5, rng), true);
    const Var mask = igs::masking::record_soft_mask(tape, phi, true);
    const Var adj = tape.input(igs::testing::random_symmetric(5, rng), true);
    const Var feats = tape.input(igs::testing::random_matrix(5, 4, rng), false);
    std::mt19937_64 unused(0);
    const Var logits = gcn::record_forward(tape, pv, tape.gcn_normalize(tape.hadamard(adj, mask)),
                                           feats, std::nullopt, 0.0, false, unused);
    const Var root =
        tape.add(tape.softmax_xent(logits, 1), tape.scale(tape.sum(mask), 1e-4));
    std::vector<Var> leaves = pv.all();
    leaves.push_back(phi);
    leaves.push_back(adj);
    for (Var leaf : leaves) {
      const double err = igs::numgrad::finite_difference_check(tape, root, leaf, 1e-5);
      CHECK_MESSAGE(err <= 1e-6, "leaf " << leaf.id << " error " << err);
    }
  }
}

TEST_CASE("argmax ties go to the lower class") {
  CHECK(gcn::argmax(Matrix{{1.0, 1.0, 0.5}}) == 0);
  CHECK(gcn::argmax(Matrix{{0.0, 2.0, 2.0}}) == 1);
}

TEST_CASE("patience zero trains exactly one epoch") {
  auto ds = igs::testing::small_cohort(20, 5, 2, 8);
  auto c = igs::testing::tiny_gcn();
  c.patience = 0;
  const auto r = gcn::train_model(ds, c);
  CHECK(r.log.size() == 1);
  CHECK(r.best_epoch == 0);
}

TEST_CASE("identical seeds give identical epoch logs and best params") {
  auto ds = igs::testing::small_cohort(20, 5, 2, 9);
  auto c = igs::testing::tiny_gcn();
  c.dropout = 0.3;
  c.seed = 17;
  const auto a = gcn::train_model(ds, c);
  const auto b = gcn::train_model(ds, c);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].train_loss == b.log[i].train_loss);
    CHECK(a.log[i].val_loss == b.log[i].val_loss);
  }
  CHECK(a.params.classifier == b.params.classifier);
}

TEST_CASE("returned parameters come from the best validation epoch") {
  auto ds = igs::testing::small_cohort(30, 5, 2, 10);
  auto c = igs::testing::tiny_gcn();
  c.max_epochs = 30;
  const auto r = gcn::train_model(ds, c);
  double best = r.log.front().val_loss;
  for (const auto& e : r.log) best = std::min(best, e.val_loss);
  CHECK(r.best_val_loss == best);
  CHECK(r.log[r.best_epoch].val_loss == best);
  CHECK(gcn::evaluate_objective(r.params, ds, gd::SplitPart::kVal) ==
        doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("separable synthetic cohort reaches high validation accuracy") {
  gd::SyntheticConfig sc;
  sc.shift = 0.8;
  sc.noise = 0.05;
  sc.graphs = 100;
  auto ds = gd::generate_synthetic(sc, 2);
  ds.split = gd::stratified_split(ds, {0.7, 0.15, 0.15}, 2);
  gcn::GcnConfig c;
  c.layers = 2;
  c.hidden = 16;
  c.dropout = 0.0;
  c.learning_rate = 0.01;
  c.patience = 20;
  c.max_epochs = 200;
  const auto r = gcn::train_model(ds, c);
  CHECK(r.log[r.best_epoch].val_acc > 0.9);
}

TEST_CASE("random parameters are near chance on balanced labels") {
  gd::SyntheticConfig sc;
  sc.graphs = 400;
  sc.nodes = 10;
  sc.subnetworks = 2;
  sc.shift = 0.0;
  auto ds = gd::generate_synthetic(sc, 4);
  ds.split.train = {};
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) ds.split.test.push_back(i);
  double total = 0.0;
  const int seeds = 10;
  for (int s = 0; s < seeds; ++s) {
    const auto p = gcn::GcnParams::init(10, 2, igs::testing::tiny_gcn(2, 8), 100 + s);
    total += gcn::evaluate_accuracy(p, ds, gd::SplitPart::kTest);
  }
  CHECK(std::abs(total / seeds - 0.5) <= 0.1);
}

TEST_CASE("single-graph split accuracy is 0 or 1") {
  auto ds = igs::testing::small_cohort(10, 4, 2, 11);
  ds.split.test = {3};
  const auto p = gcn::GcnParams::init(4, 2, igs::testing::tiny_gcn(), 0);
  const double acc = gcn::evaluate_accuracy(p, ds, gd::SplitPart::kTest);
  CHECK((acc == 0.0 || acc == 1.0));
}

TEST_CASE("empty train split is a contract error") {
  auto ds = igs::testing::small_cohort(10, 4, 2, 12);
  ds.split.train.clear();
  CHECK_THROWS_AS(gcn::train_model(ds, igs::testing::tiny_gcn()), igs::ContractError);
}

TEST_CASE("epoch log CSV") {
  const auto dir = igs::testing::scratch_dir("epochlog");
  const gcn::EpochLog log[] = {{0, 0.5, 0.6, 0.75}};
  gcn::write_epoch_log(dir / "log.csv", log);
  std::ifstream in(dir / "log.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "epoch,train_loss,val_loss,val_acc");
  CHECK(row == "0,0.5,0.59999999999999998,0.75");
}

}  // TEST_SUITE
