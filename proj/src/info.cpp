#include "subpop/info.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "subpop/prob.hpp"

namespace subpop {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// q^t (1-q)^(d-t) for t = 0..d
std::vector<double> flip_prob_table(int d, double q) {
  std::vector<double> fp(static_cast<std::size_t>(d) + 1);
  for (int t = 0; t <= d; ++t)
    fp[static_cast<std::size_t>(t)] =
        std::pow(q, t) * std::pow(1.0 - q, d - t);
  return fp;
}

std::vector<std::vector<std::uint32_t>> preimages(
    const std::vector<int>& map, int num_messages) {
  std::vector<std::vector<std::uint32_t>> pre(
      static_cast<std::size_t>(num_messages));
  for (std::size_t x = 0; x < map.size(); ++x)
    pre[static_cast<std::size_t>(map[x])].push_back(
        static_cast<std::uint32_t>(x));
  return pre;
}

double entropy_of_counts(const std::vector<std::vector<std::uint32_t>>& pre,
                         double total) {
  double hm = 0.0;
  for (const auto& bucket : pre) {
    if (bucket.empty()) continue;
    const double p = static_cast<double>(bucket.size()) / total;
    hm -= p * std::log2(p);
  }
  return hm;
}

BoundResult finish_bound(double raw, bool valid, std::string note,
                         double lo = 0.0,
                         double hi = std::numeric_limits<double>::infinity()) {
  BoundResult r;
  r.raw = raw;
  r.valid = valid;
  r.note = std::move(note);
  if (!valid) {
    r.value = kNaN;
    return r;
  }
  r.value = raw;
  if (raw < lo) {
    r.value = lo;
    r.clamped = true;
  } else if (raw > hi) {
    r.value = hi;
    r.clamped = true;
  }
  return r;
}

}  // namespace

void JointPMF::validate() const {
  if (table.rows() < 1 || table.cols() < 1)
    throw std::invalid_argument("joint pmf: empty table");
  double total = 0.0;
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    for (Eigen::Index j = 0; j < table.cols(); ++j) {
      const double v = table(i, j);
      if (!(v >= 0.0))
        throw std::invalid_argument("joint pmf: negative or NaN entry");
      total += v;
    }
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("joint pmf: probabilities do not sum to 1");
}

double mutual_information(const JointPMF& joint) {
  joint.validate();
  const auto& t = joint.table;
  const Eigen::VectorXd px = t.rowwise().sum();
  const Eigen::VectorXd pm = t.colwise().sum();
  double info = 0.0;
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.cols(); ++j) {
      const double p = t(i, j);
      if (p > 0.0) info += p * std::log2(p / (px(i) * pm(j)));
    }
  }
  return info;
}

JointPMF channel_from_map(const std::vector<double>& input_dist,
                          const std::vector<int>& map, int num_messages) {
  if (input_dist.size() != map.size())
    throw std::invalid_argument("channel map and distribution sizes differ");
  if (input_dist.empty()) throw std::invalid_argument("empty channel input");
  int max_msg = 0;
  for (const int m : map) {
    if (m < 0) throw std::invalid_argument("negative message id");
    max_msg = std::max(max_msg, m);
  }
  if (num_messages == 0) num_messages = max_msg + 1;
  if (num_messages <= max_msg)
    throw std::invalid_argument("message id outside declared range");

  JointPMF joint;
  joint.table = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(map.size()),
                                      num_messages);
  for (std::size_t x = 0; x < map.size(); ++x)
    joint.table(static_cast<Eigen::Index>(x), map[x]) = input_dist[x];
  joint.validate();
  return joint;
}

SdpiResult sdpi_check(const std::vector<int>& map, int d, double rho,
                      bool exact, long mc_samples, RngStream* rng) {
  if (d < 1 || d > 30) throw std::invalid_argument("bad dimension");
  const std::size_t states = std::size_t{1} << d;
  if (map.size() != states)
    throw std::invalid_argument("map must cover all of {0,1}^d");
  if (!(rho >= 0.0 && rho <= 1.0))
    throw std::domain_error("rho outside [0,1]");

  int num_messages = 0;
  for (const int m : map) {
    if (m < 0) throw std::invalid_argument("negative message id");
    num_messages = std::max(num_messages, m + 1);
  }
  const auto pre = preimages(map, num_messages);
  const double total = static_cast<double>(states);

  SdpiResult res;
  res.rho = rho;
  res.exact = exact;
  res.info_mx = entropy_of_counts(pre, total);  // deterministic map: I = H(M)

  const double q = (1.0 - rho) / 2.0;
  const std::vector<double> fp = flip_prob_table(d, q);
  const double py = 1.0 / total;  // Y stays uniform by symmetry

  if (exact) {
    if (d > 12)
      throw std::invalid_argument("dimension too large for exact mode");
    double info = 0.0;
    std::vector<double> row(states);
    for (const auto& bucket : pre) {
      if (bucket.empty()) continue;
      const double pm = static_cast<double>(bucket.size()) / total;
      std::fill(row.begin(), row.end(), 0.0);
      for (const std::uint32_t x : bucket)
        for (std::size_t y = 0; y < states; ++y)
          row[y] += py * fp[static_cast<std::size_t>(
                        std::popcount(x ^ static_cast<std::uint32_t>(y)))];
      for (std::size_t y = 0; y < states; ++y)
        if (row[y] > 0.0) info += row[y] * std::log2(row[y] / (pm * py));
    }
    res.info_my = info;
  } else {
    if (mc_samples < 1 || rng == nullptr)
      throw std::invalid_argument("sampled mode needs a trial count and rng");
    double cond_entropy = 0.0;
    for (long s = 0; s < mc_samples; ++s) {
      const auto x = static_cast<std::uint32_t>(rng->uniform_below(states));
      std::uint32_t y = x;
      for (int i = 0; i < d; ++i)
        if (rng->bernoulli(q)) y ^= std::uint32_t{1} << i;
      const auto& bucket = pre[static_cast<std::size_t>(
          map[static_cast<std::size_t>(x)])];
      double py_given_m = 0.0;
      for (const std::uint32_t x2 : bucket)
        py_given_m += fp[static_cast<std::size_t>(std::popcount(x2 ^ y))];
      py_given_m /= static_cast<double>(bucket.size());
      cond_entropy -= std::log2(py_given_m);
    }
    res.info_my = d - cond_entropy / static_cast<double>(mc_samples);
  }

  res.holds = res.info_my <= rho * rho * res.info_mx + 1e-9;
  return res;
}

BoundResult fano_lower(int k, double err) {
  if (k < 2) throw std::invalid_argument("need at least two classes");
  const bool valid = err >= 0.0 && err <= 1.0;
  double raw = kNaN;
  if (err >= 0.0 && err <= 1.0) {
    const double logk = std::log2(static_cast<double>(k));
    raw = logk - (err * logk + binary_entropy(std::min(err, 1.0)));
  }
  return finish_bound(raw, valid, valid ? "" : "error outside [0,1]");
}

BoundResult nsp_oneshot_bound(int d, double delta, double eps) {
  if (d < 1) throw std::invalid_argument("dimension must be positive");
  std::string note;
  if (!(delta >= 0.0 && delta < 1.0))
    note = "delta outside [0,1)";
  else if (!(eps >= 0.0))
    note = "negative eps";
  else if (eps > (1.0 - delta) * (1.0 - delta) / 4.0)
    note = "eps above (1-delta)^2/4";
  double raw = kNaN;
  if (delta >= 0.0 && delta < 1.0 && eps >= 0.0) {
    const double harg = 2.0 * eps / ((1.0 - delta) * (1.0 - delta));
    if (harg <= 1.0)
      raw = 0.5 * (d + 1) * (1.0 - binary_entropy(harg));
  }
  return finish_bound(raw, note.empty(), note);
}

BoundResult hc_comm_bound(int k, int d, int n, double c, double eps) {
  std::string note;
  if (k < 2 || d < 1 || n < 2)
    note = "need k >= 2, d >= 1, n >= 2";
  else if (!(c > std::numbers::sqrt2))
    note = "c not above sqrt(2)";
  else if (!(eps >= 0.0 && eps <= 0.1))
    note = "eps outside [0, 1/10]";
  else if (k > n)
    note = "k above n";
  double raw = kNaN;
  if (k >= 2 && d >= 1 && n >= 2 && c != 0.0 && eps >= 0.0 && eps <= 1.0) {
    raw = (static_cast<double>(k) * d / (c * c * std::numbers::ln2)) *
          (std::log2(static_cast<double>(k)) /
           std::log2(static_cast<double>(n))) *
          (1.0 - 2.0 * binary_entropy(eps));
  }
  return finish_bound(raw, note.empty(), note);
}

BoundResult dp_info_bound(double alpha, double beta, int n, int d) {
  std::string note;
  if (!(alpha >= 0.0))
    note = "negative alpha";
  else if (!(beta >= 0.0 && beta <= 1.0))
    note = "beta outside [0,1]";
  else if (n < 0 || d < 0)
    note = "negative size";
  double raw = kNaN;
  if (beta >= 0.0 && beta <= 1.0 && std::isfinite(alpha)) {
    // 2a(e^{2a}-1)/(e^{2a}+1) == 2a tanh(a), overflow-free
    raw = n * (2.0 * alpha * std::tanh(alpha) + beta * d +
               binary_entropy(beta));
  }
  return finish_bound(raw, note.empty(), note);
}

BoundResult gh_product_bound(double H_X, double log_Nmax, double log_Xsize,
                             double eps, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  const bool valid = log_Nmax <= log_Xsize;
  const double raw =
      H_X - log_Nmax - 1.0 - (2.0 * eps / alpha) * (log_Xsize - log_Nmax);
  return finish_bound(raw, valid, valid ? "" : "log_Nmax above log_Xsize");
}

BoundResult gh_alpha_lower(double c, double p, int d, double k1, double k2) {
  std::string note;
  if (!(c > 0.0))
    note = "c must be positive";
  else if (!(p > 0.0 && p < 1.0))
    note = "p outside (0,1)";
  else if (d < 1)
    note = "d must be positive";
  else if (k1 < 0.0 || k2 < 0.0)
    note = "negative correction constant";
  double raw = kNaN;
  if (note.empty()) {
    const double dd = static_cast<double>(d);
    const double f1 = 1.0 - 2.0 * normal_cdf(-c / std::sqrt(1.0 - p)) -
                      k1 / std::sqrt(dd * (1.0 - p));
    const double f2 =
        2.0 * normal_cdf(-3.0 * c / std::sqrt(p)) - k2 / std::sqrt(dd * p);
    raw = f1 * f2;
  }
  return finish_bound(raw, note.empty(), note, 0.0, 1.0);
}

SingletonMiResult empirical_singleton_mi(int k, int d,
                                         const Compressor& compressor,
                                         double rho, bool trials_exact,
                                         long mc_trials, RngStream* rng) {
  if (k < 2) throw std::invalid_argument("need at least two planted strings");
  if (d < 1 || d > 4) throw std::invalid_argument("d outside [1,4]");
  if (k * d > 16) throw std::invalid_argument("instance too large");
  if (!(rho >= 0.0 && rho <= 1.0))
    throw std::domain_error("rho outside [0,1]");
  if (!trials_exact && (mc_trials < 1 || rng == nullptr))
    throw std::invalid_argument("sampled mode needs a trial count and rng");

  const std::uint32_t kd = static_cast<std::uint32_t>(k * d);
  const std::uint32_t num_states = std::uint32_t{1} << kd;
  const std::uint32_t dmask = (std::uint32_t{1} << d) - 1;
  const auto string_of = [&](std::uint32_t s, int j) {
    return (s >> (static_cast<std::uint32_t>(j) * d)) & dmask;
  };

  // compress every input
  std::vector<int> msg(num_states);
  std::vector<BitString> strings(static_cast<std::size_t>(k),
                                 BitString(static_cast<std::size_t>(d)));
  for (std::uint32_t s = 0; s < num_states; ++s) {
    for (int j = 0; j < k; ++j) {
      const std::uint32_t bits = string_of(s, j);
      for (int i = 0; i < d; ++i)
        strings[static_cast<std::size_t>(j)].set(
            static_cast<std::size_t>(i), ((bits >> i) & 1u) != 0);
    }
    const int m = compressor(strings);
    if (m < 0) throw std::invalid_argument("negative message id");
    msg[s] = m;
  }
  int num_messages = 0;
  for (const int m : msg) num_messages = std::max(num_messages, m + 1);
  const auto pre = preimages(msg, num_messages);

  SingletonMiResult res;
  res.num_messages = num_messages;
  res.info_bits = entropy_of_counts(pre, static_cast<double>(num_states));
  res.exact_error = trials_exact;

  const double q = (1.0 - rho) / 2.0;
  const std::vector<double> fp = flip_prob_table(d, q);
  const std::uint32_t num_obs = std::uint32_t{1} << d;
  std::vector<double> scores(static_cast<std::size_t>(k));

  const auto best_guess = [&](const std::vector<std::uint32_t>& bucket,
                              std::uint32_t y) {
    std::fill(scores.begin(), scores.end(), 0.0);
    for (const std::uint32_t s2 : bucket)
      for (int j = 0; j < k; ++j)
        scores[static_cast<std::size_t>(j)] +=
            fp[static_cast<std::size_t>(std::popcount(string_of(s2, j) ^ y))];
    int jhat = 0;
    for (int j = 1; j < k; ++j)
      if (scores[static_cast<std::size_t>(j)] >
          scores[static_cast<std::size_t>(jhat)])
        jhat = j;
    return jhat;
  };

  if (trials_exact) {
    // error = sum over (message, observation) of the posterior mass the
    // Bayes responder concedes by naming a single index
    double conceded = 0.0;
    for (const auto& bucket : pre) {
      if (bucket.empty()) continue;
      for (std::uint32_t y = 0; y < num_obs; ++y) {
        const int jhat = best_guess(bucket, y);
        double total = 0.0;
        for (int j = 0; j < k; ++j)
          total += scores[static_cast<std::size_t>(j)];
        conceded += total - scores[static_cast<std::size_t>(jhat)];
      }
    }
    res.responder_error =
        conceded / (static_cast<double>(num_states) * static_cast<double>(k));
  } else {
    long fails = 0;
    for (long t = 0; t < mc_trials; ++t) {
      const auto s = static_cast<std::uint32_t>(rng->uniform_below(num_states));
      const int j = static_cast<int>(rng->uniform_below(
          static_cast<std::uint64_t>(k)));
      std::uint32_t y = string_of(s, j);
      for (int i = 0; i < d; ++i)
        if (rng->bernoulli(q)) y ^= std::uint32_t{1} << i;
      if (best_guess(pre[static_cast<std::size_t>(msg[s])], y) != j) ++fails;
    }
    res.responder_error =
        static_cast<double>(fails) / static_cast<double>(mc_trials);
  }
  return res;
}

}  // namespace subpop
