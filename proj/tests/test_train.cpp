#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "subpop/train.hpp"
#include "test_util.hpp"

using namespace subpop;

namespace {

Dataset bit_dataset(std::vector<std::pair<const char*, int>> rows) {
  Dataset data;
  int max_label = 0;
  for (const auto& [bits, label] : rows) {
    LabeledExample ex;
    ex.features = BitString::from_string(bits);
    ex.label = label;
    ex.subpop = label;
    max_label = std::max(max_label, label);
    data.examples.push_back(std::move(ex));
  }
  data.num_subpops = max_label + 1;
  data.recount_singletons();
  return data;
}

Dataset random_dataset(int n, int d, int num_classes, RngStream& rng) {
  Dataset data;
  data.num_subpops = num_classes;
  for (int i = 0; i < n; ++i) {
    LabeledExample ex;
    ex.features = BitString::random(static_cast<std::size_t>(d), rng);
    ex.label = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(num_classes)));
    ex.subpop = ex.label;
    data.examples.push_back(std::move(ex));
  }
  data.recount_singletons();
  return data;
}

double train_error(const ProbClassifier& clf, const Dataset& data) {
  int errs = 0;
  for (const auto& ex : data.examples)
    if (clf.predict(ex.features) != ex.label) ++errs;
  return static_cast<double>(errs) / static_cast<double>(data.size());
}

}  // namespace

TEST_CASE("training config validation") {
  TrainConfig cfg;
  cfg.validate();
  cfg.updates = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.updates = 10;
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.learning_rate = 0.1;
  cfg.momentum = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.momentum = 0.9;
  cfg.lr_decay = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("design matrix lays out bits and labels") {
  const Dataset data = bit_dataset({{"1010", 2}, {"0001", 0}});
  const Matrix X = design_matrix(data);
  REQUIRE(X.rows() == 2);
  REQUIRE(X.cols() == 4);
  CHECK(X(0, 0) == 1.0);
  CHECK(X(0, 1) == 0.0);
  CHECK(X(0, 2) == 1.0);
  CHECK(X(0, 3) == 0.0);
  CHECK(X(1, 3) == 1.0);
  CHECK(label_vector(data) == std::vector<int>{2, 0});
  CHECK_THROWS_AS(design_matrix(Dataset{}), std::invalid_argument);
  CHECK_THROWS_AS(design_matrix(bit_dataset({{"10", 0}, {"100", 1}})),
                  std::invalid_argument);
}

TEST_CASE("zero-initialized models start at uniform output and loss ln N") {
  const Dataset data = bit_dataset({{"1010", 2}, {"0001", 0}, {"1111", 1}});
  TrainConfig cfg;
  cfg.updates = 0;

  LogitTrainer logit(data, 5, cfg);
  CHECK(logit.current_loss() == doctest::Approx(std::log(5.0)).epsilon(1e-14));

  cfg.init_scale = 0.0;
  MlpTrainer mlp(data, 5, 7, cfg);
  CHECK(mlp.current_loss() == doctest::Approx(std::log(5.0)).epsilon(1e-14));

  const LogitModel& m = logit.model();
  std::vector<double> p(5);
  m.predict_proba(data.examples[0].features, p);
  for (double v : p) CHECK(v == 0.2);
}

TEST_CASE("softmax outputs normalize and shift-invariance holds") {
  RngStream rng(1101, 0);
  LogitModel m(6, 12);
  for (Eigen::Index r = 0; r < m.W.rows(); ++r)
    for (Eigen::Index c = 0; c < m.W.cols(); ++c) m.W(r, c) = 2.0 * rng.next_double() - 1.0;
  for (Eigen::Index r = 0; r < m.b.size(); ++r) m.b(r) = rng.next_double();

  const Features z = BitString::random(12, rng);
  std::vector<double> p(6), q(6);
  m.predict_proba(z, p);
  double sum = 0.0;
  for (double v : p) {
    CHECK(v >= 0.0);
    sum += v;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

  m.b.array() += 17.5;  // constant logit shift
  m.predict_proba(z, q);
  for (int i = 0; i < 6; ++i) CHECK(q[i] == doctest::Approx(p[i]).epsilon(1e-12));
}

TEST_CASE("batch predictions agree with single predictions") {
  RngStream rng(1102, 0);
  MlpModel m(4, 10, 7);
  for (auto* M : {&m.W1, &m.W2}) {
    for (Eigen::Index r = 0; r < M->rows(); ++r)
      for (Eigen::Index c = 0; c < M->cols(); ++c) (*M)(r, c) = rng.next_double() - 0.5;
  }
  for (Eigen::Index r = 0; r < m.b1.size(); ++r) m.b1(r) = rng.next_double() - 0.5;
  for (Eigen::Index r = 0; r < m.b2.size(); ++r) m.b2(r) = rng.next_double() - 0.5;

  std::vector<Features> zs;
  for (int i = 0; i < 9; ++i) zs.push_back(BitString::random(10, rng));
  std::vector<double> batch(9 * 4), single(4);
  m.predict_proba_batch(zs, batch);
  for (int i = 0; i < 9; ++i) {
    m.predict_proba(zs[i], single);
    for (int c = 0; c < 4; ++c)
      CHECK(batch[static_cast<std::size_t>(i * 4 + c)] ==
            doctest::Approx(single[static_cast<std::size_t>(c)]).epsilon(1e-12));
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  RngStream rng(1103, 0);
  const double eps = 1e-5;

  for (int rep = 0; rep < 3; ++rep) {
    const Dataset data = random_dataset(8, 20, 5, rng);
    LogitModel m(5, 20);
    for (Eigen::Index r = 0; r < m.W.rows(); ++r)
      for (Eigen::Index c = 0; c < m.W.cols(); ++c) m.W(r, c) = rng.next_double() - 0.5;
    for (Eigen::Index r = 0; r < m.b.size(); ++r) m.b(r) = rng.next_double() - 0.5;
    CHECK(grad_check(m, data, eps) <= 1e-5);
  }

  for (int rep = 0; rep < 3; ++rep) {
    const Dataset data = random_dataset(6, 10, 4, rng);
    MlpModel m(4, 10, 7);
    for (auto* M : {&m.W1, &m.W2}) {
      for (Eigen::Index r = 0; r < M->rows(); ++r)
        for (Eigen::Index c = 0; c < M->cols(); ++c) (*M)(r, c) = rng.next_double() - 0.5;
    }
    for (Eigen::Index r = 0; r < m.b1.size(); ++r) m.b1(r) = rng.next_double() - 0.5;
    for (Eigen::Index r = 0; r < m.b2.size(); ++r) m.b2(r) = rng.next_double() - 0.5;
    CHECK(grad_check(m, data, eps) <= 1e-4);
  }
}

TEST_CASE("stationary point: zero features and balanced labels give zero gradient") {
  const Dataset data = bit_dataset(
      {{"0000", 0}, {"0000", 1}, {"0000", 2}, {"0000", 0}, {"0000", 1}, {"0000", 2}});
  const LogitModel m(3, 4);
  const LogitGrad g = logit_gradients(m, design_matrix(data), label_vector(data));
  CHECK(g.W.norm() < 1e-15);
  CHECK(g.b.norm() < 1e-15);
  CHECK(grad_check(m, data, 1e-5) <= 1e-3);
}

TEST_CASE("optimizer trajectory matches a hand-rolled reference") {
  // two 1-bit examples; reference update written with plain scalar loops
  const Dataset data = bit_dataset({{"1", 0}, {"0", 1}});

  for (const bool nesterov : {true, false}) {
    TrainConfig cfg;
    cfg.learning_rate = 0.3;
    cfg.momentum = 0.8;
    cfg.nesterov = nesterov;
    cfg.lr_decay = 0.7;
    cfg.updates = 0;
    LogitTrainer tr(data, 2, cfg);

    double W[2] = {0.0, 0.0}, B[2] = {0.0, 0.0};
    double vW[2] = {0.0, 0.0}, vB[2] = {0.0, 0.0};
    double lr = cfg.learning_rate;
    const double x[2] = {1.0, 0.0};
    const int y[2] = {0, 1};

    for (int step = 0; step < 5; ++step) {
      double Wl[2], Bl[2];
      for (int k = 0; k < 2; ++k) {
        Wl[k] = W[k] + (nesterov ? cfg.momentum * vW[k] : 0.0);
        Bl[k] = B[k] + (nesterov ? cfg.momentum * vB[k] : 0.0);
      }
      double gW[2] = {0.0, 0.0}, gB[2] = {0.0, 0.0};
      for (int i = 0; i < 2; ++i) {
        const double z0 = Wl[0] * x[i] + Bl[0];
        const double z1 = Wl[1] * x[i] + Bl[1];
        const double mx = std::max(z0, z1);
        const double e0 = std::exp(z0 - mx), e1 = std::exp(z1 - mx);
        const double p0 = e0 / (e0 + e1), p1 = e1 / (e0 + e1);
        const double d0 = (p0 - (y[i] == 0 ? 1.0 : 0.0)) / 2.0;
        const double d1 = (p1 - (y[i] == 1 ? 1.0 : 0.0)) / 2.0;
        gW[0] += d0 * x[i];
        gW[1] += d1 * x[i];
        gB[0] += d0;
        gB[1] += d1;
      }
      for (int k = 0; k < 2; ++k) {
        vW[k] = cfg.momentum * vW[k] - lr * gW[k];
        vB[k] = cfg.momentum * vB[k] - lr * gB[k];
        W[k] += vW[k];
        B[k] += vB[k];
      }
      lr *= cfg.lr_decay;

      tr.step();
      for (int k = 0; k < 2; ++k) {
        CHECK(tr.model().W(k, 0) == doctest::Approx(W[k]).epsilon(1e-12));
        CHECK(tr.model().b(k) == doctest::Approx(B[k]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("identical seeds give bit-identical trained models") {
  RngStream rng(1104, 0);
  const Dataset data = random_dataset(12, 16, 4, rng);
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.updates = 30;
  cfg.init_scale = 0.01;
  cfg.seed = 77;

  std::vector<double> la, lb;
  const MlpModel a = train_mlp(data, 4, 6, cfg, &la);
  const MlpModel b = train_mlp(data, 4, 6, cfg, &lb);
  CHECK((a.W1.array() == b.W1.array()).all());
  CHECK((a.W2.array() == b.W2.array()).all());
  CHECK((a.b1.array() == b.b1.array()).all());
  CHECK((a.b2.array() == b.b2.array()).all());
  CHECK(la == lb);

  cfg.seed = 78;
  const MlpModel c = train_mlp(data, 4, 6, cfg);
  CHECK(!(a.W1.array() == c.W1.array()).all());
}

TEST_CASE("loss trajectory starts at ln N and a huge step diverges") {
  RngStream rng(1105, 0);
  const Dataset data = random_dataset(8, 6, 3, rng);
  TrainConfig cfg;
  cfg.updates = 5;
  std::vector<double> losses;
  const LogitModel m = train_logit(data, 3, cfg, &losses);
  REQUIRE(losses.size() == 6);
  CHECK(losses.front() == doctest::Approx(std::log(3.0)).epsilon(1e-14));
  CHECK(losses.back() < losses.front());
  (void)m;

  TrainConfig wild = cfg;
  wild.learning_rate = 1e308;
  wild.updates = 50;
  CHECK_THROWS_AS(train_logit(data, 3, wild), std::runtime_error);
}

TEST_CASE("one training example is memorized") {
  const Dataset data = bit_dataset({{"10110", 3}});
  TrainConfig cfg;
  cfg.updates = 25;
  const LogitModel m = train_logit(data, 4, cfg);
  CHECK(train_error(m, data) == 0.0);
}

TEST_CASE("desk-scale logistic regression fits its training set") {
  RngStream rng(1106, 0);
  const int N = 100, n = 100, d = 300;
  const double mu1 = std::pow(1.0 - 1.0 / N, N - 1);
  const double rho = rho_for(n, mu1, 50000.0, d);
  const HCInstance inst = sample_hc_instance(N, d, rho, rng);
  MixtureWeights w{std::vector<double>(N, 1.0 / N)};
  const Dataset data = generate_dataset(inst, w, n, rng);

  TrainConfig cfg;  // library defaults: lr 0.5, momentum 0.9, 50 updates
  const LogitModel m = train_logit(data, N, cfg);
  CHECK(train_error(m, data) <= 0.01);
}

TEST_CASE("desk-scale sigmoid network fits its training set") {
  RngStream rng(1107, 0);
  const int N = 100, n = 100, d = 300, H = 300;
  const double mu1 = std::pow(1.0 - 1.0 / N, N - 1);
  const double rho = rho_for(n, mu1, 50000.0, d);
  const HCInstance inst = sample_hc_instance(N, d, rho, rng);
  MixtureWeights w{std::vector<double>(N, 1.0 / N)};
  const Dataset data = generate_dataset(inst, w, n, rng);

  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.updates = 500;
  cfg.init_scale = 0.01;
  cfg.seed = 5;
  const MlpModel m = train_mlp(data, N, H, cfg);
  CHECK(train_error(m, data) <= 0.01);
}

TEST_CASE("checkpoints round trip through save and load") {
  RngStream rng(1108, 0);
  const Dataset data = random_dataset(10, 8, 3, rng);
  TrainConfig cfg;
  cfg.updates = 15;
  const LogitModel logit = train_logit(data, 3, cfg);

  std::stringstream buf;
  save_model(logit, buf);
  const auto loaded = load_model(buf);
  REQUIRE(loaded != nullptr);
  REQUIRE(loaded->num_classes() == 3);
  const auto* as_logit = dynamic_cast<const LogitModel*>(loaded.get());
  REQUIRE(as_logit != nullptr);
  CHECK((as_logit->W.array() == logit.W.array()).all());
  CHECK((as_logit->b.array() == logit.b.array()).all());

  cfg.learning_rate = 0.1;
  cfg.init_scale = 0.01;
  const MlpModel mlp = train_mlp(data, 3, 5, cfg);
  std::stringstream mbuf;
  save_model(mlp, mbuf);
  const auto mloaded = load_model(mbuf);
  const auto* as_mlp = dynamic_cast<const MlpModel*>(mloaded.get());
  REQUIRE(as_mlp != nullptr);
  CHECK((as_mlp->W1.array() == mlp.W1.array()).all());
  CHECK((as_mlp->b2.array() == mlp.b2.array()).all());

  std::stringstream cut(buf.str().substr(0, buf.str().size() / 2));
  CHECK_THROWS_AS(load_model(cut), std::invalid_argument);
  std::stringstream junk("not a checkpoint\n");
  CHECK_THROWS_AS(load_model(junk), std::invalid_argument);
}
