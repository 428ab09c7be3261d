#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "subpop/bits.hpp"
#include "subpop/rng.hpp"

namespace subpop {

// Joint distribution of an input X (rows) and a message M (columns).
struct JointPMF {
  Eigen::MatrixXd table;

  int num_inputs() const { return static_cast<int>(table.rows()); }
  int num_messages() const { return static_cast<int>(table.cols()); }
  void validate() const;  // entries >= 0, total == 1 within 1e-12
};

// I(X;M) in bits, with 0 log 0 = 0.
double mutual_information(const JointPMF& joint);

// Joint pmf of (X, map(X)) for X ~ input_dist. num_messages 0 means infer
// max(map)+1.
JointPMF channel_from_map(const std::vector<double>& input_dist,
                          const std::vector<int>& map, int num_messages = 0);

// Strong data-processing check for the chain M - X - Y with X uniform on
// {0,1}^d and Y the output of a binary symmetric channel with flip
// probability (1-rho)/2 applied to X. Verifies I(M;Y) <= rho^2 I(M;X) + 1e-9.
//
// Exact mode enumerates every (x, y) pair and needs d <= 12. Otherwise
// I(M;Y) is estimated by Monte Carlo: H(Y) = d holds exactly by symmetry and
// H(Y|M) is averaged over sampled (m, y) with the inner conditional evaluated
// exactly from the preimage of m.
struct SdpiResult {
  double info_my = 0.0;  // I(M;Y), bits
  double info_mx = 0.0;  // I(M;X), bits
  double rho = 0.0;
  bool holds = false;
  bool exact = true;

  double bound() const { return rho * rho * info_mx; }
};

SdpiResult sdpi_check(const std::vector<int>& map, int d, double rho,
                      bool exact, long mc_samples = 0,
                      RngStream* rng = nullptr);

// A closed-form bound evaluation. `raw` is the formula value whenever it can
// be computed; `value` is the reportable version (clamped, NaN when a
// precondition fails). `note` names the first failed precondition.
struct BoundResult {
  double value = 0.0;
  double raw = 0.0;
  bool valid = true;
  bool clamped = false;
  std::string note;
};

// log2(k) - (err * log2(k) + h(err)): information needed to reach
// classification error `err` among k classes.
BoundResult fano_lower(int k, double err);

// (d+1)/2 * (1 - h(2 eps / (1-delta)^2)) bits for an eps-suboptimal
// prefix-pointer responder; applicable while eps <= (1-delta)^2 / 4.
BoundResult nsp_oneshot_bound(int d, double delta, double eps);

// (k d / (c^2 ln 2)) * (log2 k / log2 n) * (1 - 2 h(eps)) bits; applicable
// for c > sqrt(2), eps <= 1/10, 2 <= k <= n.
BoundResult hc_comm_bound(int k, int d, int n, double c, double eps);

// n * (2 alpha tanh(alpha) + beta d + h(beta)) bits: information ceiling for
// an (alpha, beta)-differentially-private learner on n examples.
BoundResult dp_info_bound(double alpha, double beta, int n, int d);

// H_X - log_Nmax - 1 - (2 eps / alpha) * (log_Xsize - log_Nmax) bits.
// Throws when alpha <= 0; flags log_Nmax > log_Xsize.
BoundResult gh_product_bound(double H_X, double log_Nmax, double log_Xsize,
                             double eps, double alpha);

// Success-probability factor
//   (1 - 2 Phi(-c/sqrt(1-p)) - K1/sqrt(d(1-p))) *
//   (2 Phi(-3c/sqrt(p))     - K2/sqrt(dp))
// clamped to [0,1]; K1, K2 are Berry-Esseen constants.
BoundResult gh_alpha_lower(double c, double p, int d, double k1 = 0.56,
                           double k2 = 0.56);

// Deterministic compressor of k planted strings into one message id.
using Compressor = std::function<int(const std::vector<BitString>&)>;

// Exact I(X;M) for X = k uniform d-bit strings fed through `compressor`,
// paired with the error of the Bayes responder that sees (M, Y) where
// Y flips each bit of a uniformly chosen planted string with probability
// (1-rho)/2 and must name which string it came from. Exact mode enumerates
// every input and noise string; otherwise the error is Monte Carlo.
// Requires d <= 4 and k*d <= 16.
struct SingletonMiResult {
  double info_bits = 0.0;
  double responder_error = 0.0;
  bool exact_error = true;
  int num_messages = 0;
};

SingletonMiResult empirical_singleton_mi(int k, int d,
                                         const Compressor& compressor,
                                         double rho, bool trials_exact,
                                         long mc_trials = 0,
                                         RngStream* rng = nullptr);

}  // namespace subpop
