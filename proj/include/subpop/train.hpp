#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "subpop/predictors.hpp"

namespace subpop {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct TrainConfig {
  double learning_rate = 0.5;
  double momentum = 0.9;
  bool nesterov = true;
  int updates = 50;
  double lr_decay = 1.0;   // multiplies the learning rate after every step
  double init_scale = 0.0; // weights ~ U[-s, s], biases start at zero
  std::uint64_t seed = 0;

  void validate() const;  // updates >= 0, learning_rate > 0, momentum in [0,1)
};

// Multiclass logistic regression: softmax(W z + b).
class LogitModel : public ProbClassifier {
 public:
  LogitModel(int num_classes, int dim);
  int num_classes() const override { return static_cast<int>(W.rows()); }
  int dim() const { return static_cast<int>(W.cols()); }
  void predict_proba(const Features& z, std::span<double> out) const override;
  void predict_proba_batch(std::span<const Features> zs,
                           std::span<double> out) const override;

  Matrix W;  // N x d
  Vector b;  // N
};

// One sigmoid hidden layer, softmax output.
class MlpModel : public ProbClassifier {
 public:
  MlpModel(int num_classes, int dim, int hidden);
  int num_classes() const override { return static_cast<int>(W2.rows()); }
  int dim() const { return static_cast<int>(W1.cols()); }
  int hidden() const { return static_cast<int>(W1.rows()); }
  void predict_proba(const Features& z, std::span<double> out) const override;
  void predict_proba_batch(std::span<const Features> zs,
                           std::span<double> out) const override;

  Matrix W1;  // H x d
  Vector b1;  // H
  Matrix W2;  // N x H
  Vector b2;  // N
};

// Rows are examples, columns the d feature bits as 0/1 reals. All features
// must be BitStrings of one common length.
Matrix design_matrix(const Dataset& data);
std::vector<int> label_vector(const Dataset& data);

// Mean softmax cross-entropy in nats and its analytic gradients.
double logit_loss(const LogitModel& m, const Matrix& X, const std::vector<int>& y);
double mlp_loss(const MlpModel& m, const Matrix& X, const std::vector<int>& y);

struct LogitGrad {
  Matrix W;
  Vector b;
};
struct MlpGrad {
  Matrix W1;
  Vector b1;
  Matrix W2;
  Vector b2;
};
LogitGrad logit_gradients(const LogitModel& m, const Matrix& X, const std::vector<int>& y);
MlpGrad mlp_gradients(const MlpModel& m, const Matrix& X, const std::vector<int>& y);

// Max relative deviation between analytic and central finite-difference
// gradients; intended for small models only.
double grad_check(const LogitModel& m, const Dataset& data, double epsilon);
double grad_check(const MlpModel& m, const Dataset& data, double epsilon);

// Full-batch Nesterov steppers. Losses are recorded at each step's gradient
// evaluation point (entry 0 is the initial loss); current_loss() is exact.
// Throws std::runtime_error when the loss or a parameter goes non-finite.
class LogitTrainer {
 public:
  LogitTrainer(const Dataset& data, int num_classes, const TrainConfig& cfg);
  void step(int count = 1);
  int steps_done() const { return steps_; }
  double current_loss() const;
  const LogitModel& model() const { return model_; }
  const std::vector<double>& losses() const { return losses_; }

 private:
  Matrix X_;
  std::vector<int> y_;
  TrainConfig cfg_;
  double lr_;
  LogitModel model_;
  Matrix vW_;
  Vector vb_;
  int steps_ = 0;
  std::vector<double> losses_;
};

class MlpTrainer {
 public:
  MlpTrainer(const Dataset& data, int num_classes, int hidden, const TrainConfig& cfg);
  void step(int count = 1);
  int steps_done() const { return steps_; }
  double current_loss() const;
  const MlpModel& model() const { return model_; }
  const std::vector<double>& losses() const { return losses_; }

 private:
  Matrix X_;
  std::vector<int> y_;
  TrainConfig cfg_;
  double lr_;
  MlpModel model_;
  MlpGrad v_;
  int steps_ = 0;
  std::vector<double> losses_;
};

// cfg.updates steps end to end; optional loss trajectory (updates + 1
// entries, the last one exact).
LogitModel train_logit(const Dataset& data, int num_classes, const TrainConfig& cfg,
                       std::vector<double>* loss_out = nullptr);
MlpModel train_mlp(const Dataset& data, int num_classes, int hidden,
                   const TrainConfig& cfg, std::vector<double>* loss_out = nullptr);

// Checkpoints: one text header line ("model <arch> d=.. N=.. [H=..]"), then
// the parameter blocks in declaration order as row-major little-endian
// 64-bit floats.
void save_model(const LogitModel& m, std::ostream& out);
void save_model(const MlpModel& m, std::ostream& out);
std::unique_ptr<ProbClassifier> load_model(std::istream& in);

}  // namespace subpop
