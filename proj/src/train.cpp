#include "subpop/train.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace subpop {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_labels(const std::vector<int>& y, int num_classes) {
  for (int v : y) {
    if (v < 0 || v >= num_classes)
      throw std::invalid_argument("train: label outside [0, num_classes)");
  }
}

// Mean cross-entropy in nats, log-sum-exp stabilized.
double ce_from_logits(const Matrix& Z, const std::vector<int>& y) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    const double m = Z.row(i).maxCoeff();
    const double s = (Z.row(i).array() - m).exp().sum();
    total += std::log(s) + m - Z(i, y[static_cast<std::size_t>(i)]);
  }
  return total / static_cast<double>(Z.rows());
}

// Replaces logits by softmax probabilities row by row; returns the loss.
double softmax_rows(Matrix& Z, const std::vector<int>& y) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    const double m = Z.row(i).maxCoeff();
    const double zy = Z(i, y[static_cast<std::size_t>(i)]);
    Z.row(i) = (Z.row(i).array() - m).exp();
    const double s = Z.row(i).sum();
    Z.row(i) /= s;
    total += std::log(s) + m - zy;
  }
  return total / static_cast<double>(Z.rows());
}

// P -> (P - Y)/n in place.
void to_output_grad(Matrix& P, const std::vector<int>& y) {
  for (Eigen::Index i = 0; i < P.rows(); ++i) P(i, y[static_cast<std::size_t>(i)]) -= 1.0;
  P /= static_cast<double>(P.rows());
}

void softmax_to(const Eigen::RowVectorXd& z, std::span<double> out) {
  const double m = z.maxCoeff();
  double s = 0.0;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    out[static_cast<std::size_t>(j)] = std::exp(z(j) - m);
    s += out[static_cast<std::size_t>(j)];
  }
  for (auto& v : out) v /= s;
}

Matrix pack_features(std::span<const Features> zs, int d) {
  Matrix X(static_cast<Eigen::Index>(zs.size()), d);
  for (std::size_t i = 0; i < zs.size(); ++i) {
    const BitString& bstr = std::get<BitString>(zs[i]);
    if (static_cast<int>(bstr.size()) != d)
      throw std::invalid_argument("predict: feature dimension mismatch");
    for (int c = 0; c < d; ++c)
      X(static_cast<Eigen::Index>(i), c) = bstr.get(static_cast<std::size_t>(c)) ? 1.0 : 0.0;
  }
  return X;
}

void check_out(std::span<double> out, std::size_t rows, std::size_t classes) {
  if (out.size() != rows * classes)
    throw std::invalid_argument("predict: output span has wrong length");
}

void fill_uniform(Matrix& M, double scale, RngStream& rng) {
  for (Eigen::Index r = 0; r < M.rows(); ++r)
    for (Eigen::Index c = 0; c < M.cols(); ++c)
      M(r, c) = scale * (2.0 * rng.next_double() - 1.0);
}

void write_block(std::ostream& out, const Matrix& M) {
  std::vector<double> buf(static_cast<std::size_t>(M.rows() * M.cols()));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < M.rows(); ++r)
    for (Eigen::Index c = 0; c < M.cols(); ++c) buf[k++] = M(r, c);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(double)));
}

void write_block(std::ostream& out, const Vector& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(static_cast<std::size_t>(v.size()) * sizeof(double)));
}

void read_block(std::istream& in, Matrix& M) {
  std::vector<double> buf(static_cast<std::size_t>(M.rows() * M.cols()));
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != buf.size() * sizeof(double))
    throw std::invalid_argument("load_model: checkpoint truncated");
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < M.rows(); ++r)
    for (Eigen::Index c = 0; c < M.cols(); ++c) M(r, c) = buf[k++];
}

void read_block(std::istream& in, Vector& v) {
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(static_cast<std::size_t>(v.size()) * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(static_cast<std::size_t>(v.size()) * sizeof(double)))
    throw std::invalid_argument("load_model: checkpoint truncated");
}

}  // namespace

void TrainConfig::validate() const {
  if (updates < 0) throw std::invalid_argument("TrainConfig: updates must be >= 0");
  if (!(learning_rate > 0.0))
    throw std::invalid_argument("TrainConfig: learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw std::invalid_argument("TrainConfig: momentum must lie in [0,1)");
  if (!(lr_decay > 0.0)) throw std::invalid_argument("TrainConfig: lr_decay must be positive");
  if (init_scale < 0.0) throw std::invalid_argument("TrainConfig: init_scale must be >= 0");
}

LogitModel::LogitModel(int num_classes, int dim) {
  if (num_classes < 2 || dim < 1)
    throw std::invalid_argument("LogitModel: need num_classes >= 2 and dim >= 1");
  W = Matrix::Zero(num_classes, dim);
  b = Vector::Zero(num_classes);
}

void LogitModel::predict_proba(const Features& z, std::span<double> out) const {
  check_out(out, 1, static_cast<std::size_t>(num_classes()));
  const Matrix X = pack_features(std::span<const Features>(&z, 1), dim());
  const Eigen::RowVectorXd logits = X.row(0) * W.transpose() + b.transpose();
  softmax_to(logits, out);
}

void LogitModel::predict_proba_batch(std::span<const Features> zs,
                                     std::span<double> out) const {
  const std::size_t C = static_cast<std::size_t>(num_classes());
  check_out(out, zs.size(), C);
  const Matrix X = pack_features(zs, dim());
  const Matrix Z = (X * W.transpose()).rowwise() + b.transpose();
  for (std::size_t i = 0; i < zs.size(); ++i)
    softmax_to(Z.row(static_cast<Eigen::Index>(i)), out.subspan(i * C, C));
}

MlpModel::MlpModel(int num_classes, int dim, int hidden) {
  if (num_classes < 2 || dim < 1 || hidden < 1)
    throw std::invalid_argument("MlpModel: need num_classes >= 2, dim >= 1, hidden >= 1");
  W1 = Matrix::Zero(hidden, dim);
  b1 = Vector::Zero(hidden);
  W2 = Matrix::Zero(num_classes, hidden);
  b2 = Vector::Zero(num_classes);
}

void MlpModel::predict_proba(const Features& z, std::span<double> out) const {
  check_out(out, 1, static_cast<std::size_t>(num_classes()));
  const Matrix X = pack_features(std::span<const Features>(&z, 1), dim());
  Eigen::RowVectorXd a = X.row(0) * W1.transpose() + b1.transpose();
  for (Eigen::Index j = 0; j < a.size(); ++j) a(j) = sigmoid(a(j));
  const Eigen::RowVectorXd logits = a * W2.transpose() + b2.transpose();
  softmax_to(logits, out);
}

void MlpModel::predict_proba_batch(std::span<const Features> zs,
                                   std::span<double> out) const {
  const std::size_t C = static_cast<std::size_t>(num_classes());
  check_out(out, zs.size(), C);
  const Matrix X = pack_features(zs, dim());
  Matrix A = (X * W1.transpose()).rowwise() + b1.transpose();
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) A(i, j) = sigmoid(A(i, j));
  const Matrix Z = (A * W2.transpose()).rowwise() + b2.transpose();
  for (std::size_t i = 0; i < zs.size(); ++i)
    softmax_to(Z.row(static_cast<Eigen::Index>(i)), out.subspan(i * C, C));
}

Matrix design_matrix(const Dataset& data) {
  if (data.examples.empty())
    throw std::invalid_argument("design_matrix: empty dataset");
  const auto& first = std::get<BitString>(data.examples.front().features);
  const int d = static_cast<int>(first.size());
  Matrix X(static_cast<Eigen::Index>(data.examples.size()), d);
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    const auto& bstr = std::get<BitString>(data.examples[i].features);
    if (static_cast<int>(bstr.size()) != d)
      throw std::invalid_argument("design_matrix: inconsistent feature lengths");
    for (int c = 0; c < d; ++c)
      X(static_cast<Eigen::Index>(i), c) = bstr.get(static_cast<std::size_t>(c)) ? 1.0 : 0.0;
  }
  return X;
}

std::vector<int> label_vector(const Dataset& data) {
  std::vector<int> y;
  y.reserve(data.examples.size());
  for (const auto& ex : data.examples) y.push_back(ex.label);
  return y;
}

double logit_loss(const LogitModel& m, const Matrix& X, const std::vector<int>& y) {
  const Matrix Z = (X * m.W.transpose()).rowwise() + m.b.transpose();
  return ce_from_logits(Z, y);
}

double mlp_loss(const MlpModel& m, const Matrix& X, const std::vector<int>& y) {
  Matrix A = (X * m.W1.transpose()).rowwise() + m.b1.transpose();
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) A(i, j) = sigmoid(A(i, j));
  const Matrix Z = (A * m.W2.transpose()).rowwise() + m.b2.transpose();
  return ce_from_logits(Z, y);
}

LogitGrad logit_gradients(const LogitModel& m, const Matrix& X, const std::vector<int>& y) {
  Matrix P = (X * m.W.transpose()).rowwise() + m.b.transpose();
  softmax_rows(P, y);
  to_output_grad(P, y);
  LogitGrad g;
  g.W = P.transpose() * X;
  g.b = P.colwise().sum().transpose();
  return g;
}

MlpGrad mlp_gradients(const MlpModel& m, const Matrix& X, const std::vector<int>& y) {
  Matrix A = (X * m.W1.transpose()).rowwise() + m.b1.transpose();
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) A(i, j) = sigmoid(A(i, j));
  Matrix P = (A * m.W2.transpose()).rowwise() + m.b2.transpose();
  softmax_rows(P, y);
  to_output_grad(P, y);
  MlpGrad g;
  g.W2 = P.transpose() * A;
  g.b2 = P.colwise().sum().transpose();
  Matrix dS = P * m.W2;  // n x H
  dS.array() *= A.array() * (1.0 - A.array());
  g.W1 = dS.transpose() * X;
  g.b1 = dS.colwise().sum().transpose();
  return g;
}

namespace {

template <typename ModelT, typename LossFn>
double grad_check_impl(const ModelT& m, const Dataset& data, double epsilon,
                       LossFn&& loss_fn, std::vector<std::pair<double*, double>> params,
                       ModelT& probe) {
  (void)m;
  (void)data;
  double worst = 0.0;
  for (auto [p, analytic] : params) {
    const double orig = *p;
    *p = orig + epsilon;
    const double lp = loss_fn(probe);
    *p = orig - epsilon;
    const double lm = loss_fn(probe);
    *p = orig;
    const double fd = (lp - lm) / (2.0 * epsilon);
    const double scale = std::max({std::abs(analytic), std::abs(fd), 1e-6});
    worst = std::max(worst, std::abs(analytic - fd) / scale);
  }
  return worst;
}

}  // namespace

double grad_check(const LogitModel& m, const Dataset& data, double epsilon) {
  const Matrix X = design_matrix(data);
  const std::vector<int> y = label_vector(data);
  check_labels(y, m.num_classes());
  const LogitGrad g = logit_gradients(m, X, y);
  LogitModel probe = m;
  std::vector<std::pair<double*, double>> params;
  for (Eigen::Index r = 0; r < probe.W.rows(); ++r)
    for (Eigen::Index c = 0; c < probe.W.cols(); ++c)
      params.emplace_back(&probe.W(r, c), g.W(r, c));
  for (Eigen::Index r = 0; r < probe.b.size(); ++r)
    params.emplace_back(&probe.b(r), g.b(r));
  return grad_check_impl(m, data, epsilon,
                         [&](const LogitModel& p) { return logit_loss(p, X, y); },
                         std::move(params), probe);
}

double grad_check(const MlpModel& m, const Dataset& data, double epsilon) {
  const Matrix X = design_matrix(data);
  const std::vector<int> y = label_vector(data);
  check_labels(y, m.num_classes());
  const MlpGrad g = mlp_gradients(m, X, y);
  MlpModel probe = m;
  std::vector<std::pair<double*, double>> params;
  for (Eigen::Index r = 0; r < probe.W1.rows(); ++r)
    for (Eigen::Index c = 0; c < probe.W1.cols(); ++c)
      params.emplace_back(&probe.W1(r, c), g.W1(r, c));
  for (Eigen::Index r = 0; r < probe.b1.size(); ++r)
    params.emplace_back(&probe.b1(r), g.b1(r));
  for (Eigen::Index r = 0; r < probe.W2.rows(); ++r)
    for (Eigen::Index c = 0; c < probe.W2.cols(); ++c)
      params.emplace_back(&probe.W2(r, c), g.W2(r, c));
  for (Eigen::Index r = 0; r < probe.b2.size(); ++r)
    params.emplace_back(&probe.b2(r), g.b2(r));
  return grad_check_impl(m, data, epsilon,
                         [&](const MlpModel& p) { return mlp_loss(p, X, y); },
                         std::move(params), probe);
}

LogitTrainer::LogitTrainer(const Dataset& data, int num_classes, const TrainConfig& cfg)
    : X_(design_matrix(data)),
      y_(label_vector(data)),
      cfg_(cfg),
      lr_(cfg.learning_rate),
      model_(num_classes, static_cast<int>(X_.cols())),
      vW_(Matrix::Zero(num_classes, X_.cols())),
      vb_(Vector::Zero(num_classes)) {
  cfg_.validate();
  check_labels(y_, num_classes);
  if (cfg_.init_scale > 0.0) {
    RngStream rng(cfg_.seed, 0);
    fill_uniform(model_.W, cfg_.init_scale, rng);
  }
}

double LogitTrainer::current_loss() const { return logit_loss(model_, X_, y_); }

void LogitTrainer::step(int count) {
  for (int c = 0; c < count; ++c) {
    Matrix Wl = model_.W;
    Vector bl = model_.b;
    if (cfg_.nesterov) {
      Wl += cfg_.momentum * vW_;
      bl += cfg_.momentum * vb_;
    }
    Matrix P = (X_ * Wl.transpose()).rowwise() + bl.transpose();
    const double loss = softmax_rows(P, y_);
    if (!std::isfinite(loss))
      throw std::runtime_error("logit training diverged (non-finite loss) at step " +
                               std::to_string(steps_));
    losses_.push_back(loss);
    to_output_grad(P, y_);
    const Matrix gW = P.transpose() * X_;
    const Vector gb = P.colwise().sum().transpose();
    vW_ = cfg_.momentum * vW_ - lr_ * gW;
    vb_ = cfg_.momentum * vb_ - lr_ * gb;
    model_.W += vW_;
    model_.b += vb_;
    if (!model_.W.allFinite() || !model_.b.allFinite())
      throw std::runtime_error("logit training diverged (non-finite parameters) at step " +
                               std::to_string(steps_));
    lr_ *= cfg_.lr_decay;
    ++steps_;
  }
}

MlpTrainer::MlpTrainer(const Dataset& data, int num_classes, int hidden,
                       const TrainConfig& cfg)
    : X_(design_matrix(data)),
      y_(label_vector(data)),
      cfg_(cfg),
      lr_(cfg.learning_rate),
      model_(num_classes, static_cast<int>(X_.cols()), hidden) {
  cfg_.validate();
  check_labels(y_, num_classes);
  v_.W1 = Matrix::Zero(hidden, X_.cols());
  v_.b1 = Vector::Zero(hidden);
  v_.W2 = Matrix::Zero(num_classes, hidden);
  v_.b2 = Vector::Zero(num_classes);
  if (cfg_.init_scale > 0.0) {
    RngStream rng(cfg_.seed, 0);
    fill_uniform(model_.W1, cfg_.init_scale, rng);
    fill_uniform(model_.W2, cfg_.init_scale, rng);
  }
}

double MlpTrainer::current_loss() const { return mlp_loss(model_, X_, y_); }

void MlpTrainer::step(int count) {
  for (int c = 0; c < count; ++c) {
    MlpModel look = model_;
    if (cfg_.nesterov) {
      look.W1 += cfg_.momentum * v_.W1;
      look.b1 += cfg_.momentum * v_.b1;
      look.W2 += cfg_.momentum * v_.W2;
      look.b2 += cfg_.momentum * v_.b2;
    }
    Matrix A = (X_ * look.W1.transpose()).rowwise() + look.b1.transpose();
    for (Eigen::Index i = 0; i < A.rows(); ++i)
      for (Eigen::Index j = 0; j < A.cols(); ++j) A(i, j) = sigmoid(A(i, j));
    Matrix P = (A * look.W2.transpose()).rowwise() + look.b2.transpose();
    const double loss = softmax_rows(P, y_);
    if (!std::isfinite(loss))
      throw std::runtime_error("mlp training diverged (non-finite loss) at step " +
                               std::to_string(steps_));
    losses_.push_back(loss);
    to_output_grad(P, y_);
    MlpGrad g;
    g.W2 = P.transpose() * A;
    g.b2 = P.colwise().sum().transpose();
    Matrix dS = P * look.W2;
    dS.array() *= A.array() * (1.0 - A.array());
    g.W1 = dS.transpose() * X_;
    g.b1 = dS.colwise().sum().transpose();

    v_.W1 = cfg_.momentum * v_.W1 - lr_ * g.W1;
    v_.b1 = cfg_.momentum * v_.b1 - lr_ * g.b1;
    v_.W2 = cfg_.momentum * v_.W2 - lr_ * g.W2;
    v_.b2 = cfg_.momentum * v_.b2 - lr_ * g.b2;
    model_.W1 += v_.W1;
    model_.b1 += v_.b1;
    model_.W2 += v_.W2;
    model_.b2 += v_.b2;
    if (!model_.W1.allFinite() || !model_.b1.allFinite() || !model_.W2.allFinite() ||
        !model_.b2.allFinite())
      throw std::runtime_error("mlp training diverged (non-finite parameters) at step " +
                               std::to_string(steps_));
    lr_ *= cfg_.lr_decay;
    ++steps_;
  }
}

LogitModel train_logit(const Dataset& data, int num_classes, const TrainConfig& cfg,
                       std::vector<double>* loss_out) {
  LogitTrainer tr(data, num_classes, cfg);
  tr.step(cfg.updates);
  if (loss_out != nullptr) {
    *loss_out = tr.losses();
    loss_out->push_back(tr.current_loss());
  }
  return tr.model();
}

MlpModel train_mlp(const Dataset& data, int num_classes, int hidden,
                   const TrainConfig& cfg, std::vector<double>* loss_out) {
  MlpTrainer tr(data, num_classes, hidden, cfg);
  tr.step(cfg.updates);
  if (loss_out != nullptr) {
    *loss_out = tr.losses();
    loss_out->push_back(tr.current_loss());
  }
  return tr.model();
}

void save_model(const LogitModel& m, std::ostream& out) {
  out << "model logit d=" << m.dim() << " N=" << m.num_classes() << "\n";
  write_block(out, m.W);
  write_block(out, m.b);
  if (!out) throw std::runtime_error("save_model: write failed");
}

void save_model(const MlpModel& m, std::ostream& out) {
  out << "model mlp d=" << m.dim() << " N=" << m.num_classes() << " H=" << m.hidden()
      << "\n";
  write_block(out, m.W1);
  write_block(out, m.b1);
  write_block(out, m.W2);
  write_block(out, m.b2);
  if (!out) throw std::runtime_error("save_model: write failed");
}

std::unique_ptr<ProbClassifier> load_model(std::istream& in) {
  std::string header;
  if (!std::getline(in, header))
    throw std::invalid_argument("load_model: missing header line");
  std::istringstream hs(header);
  std::string magic, arch;
  hs >> magic >> arch;
  if (magic != "model" || (arch != "logit" && arch != "mlp"))
    throw std::invalid_argument("load_model: not a model checkpoint");
  int d = 0, N = 0, H = 0;
  std::string token;
  while (hs >> token) {
    if (token.rfind("d=", 0) == 0) d = std::stoi(token.substr(2));
    else if (token.rfind("N=", 0) == 0) N = std::stoi(token.substr(2));
    else if (token.rfind("H=", 0) == 0) H = std::stoi(token.substr(2));
    else throw std::invalid_argument("load_model: unknown header token " + token);
  }
  if (arch == "logit") {
    auto m = std::make_unique<LogitModel>(N, d);
    read_block(in, m->W);
    read_block(in, m->b);
    return m;
  }
  auto m = std::make_unique<MlpModel>(N, d, H);
  read_block(in, m->W1);
  read_block(in, m->b1);
  read_block(in, m->W2);
  read_block(in, m->b2);
  return m;
}

}  // namespace subpop
