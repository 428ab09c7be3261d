#include "subpop/attacks.hpp"

#include <algorithm>
#include <cassert>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <variant>

namespace subpop {

namespace {

void check_attack_args(const ProbClassifier& f, int target, int d) {
  if (d < 1) throw std::invalid_argument("attack dimension must be positive");
  if (target < 0 || target >= f.num_classes())
    throw std::invalid_argument("target class out of range");
}

}  // namespace

BitString coordinate_ascent_attack(const ProbClassifier& f, int target, int d,
                                   int T, RngStream& rng) {
  check_attack_args(f, target, d);
  if (T < 0) throw std::invalid_argument("iteration count must be nonnegative");

  const int C = f.num_classes();
  BitString x = BitString::random(static_cast<std::size_t>(d), rng);
  std::vector<Features> pair(2);
  std::vector<double> scores(2 * static_cast<std::size_t>(C));
  double accepted = -1.0;
  for (int t = 1; t <= T; ++t) {
    const auto i = static_cast<std::size_t>(t % d);
    BitString x0 = x;
    x0.set(i, false);
    BitString x1 = x;
    x1.set(i, true);
    pair[0] = std::move(x0);
    pair[1] = std::move(x1);
    f.predict_proba_batch(pair, scores);
    const double f0 = scores[static_cast<std::size_t>(target)];
    const double f1 = scores[static_cast<std::size_t>(C + target)];
    const bool bit = !(f0 >= f1);
    x.set(i, bit);
    const double best = bit ? f1 : f0;
    assert(best >= accepted);  // one candidate is the previous iterate
    accepted = best;
    (void)accepted;
  }
  return x;
}

BitString gradient_sign_attack(const ProbClassifier& f, int target, int d,
                               int k, RngStream& rng) {
  check_attack_args(f, target, d);
  if (k < 1) throw std::invalid_argument("probe count must be positive");

  const int C = f.num_classes();
  BitString x(static_cast<std::size_t>(d));
  std::vector<Features> probes(2 * static_cast<std::size_t>(k));
  std::vector<double> scores(probes.size() * static_cast<std::size_t>(C));
  for (std::size_t i = 0; i < static_cast<std::size_t>(d); ++i) {
    for (int l = 0; l < k; ++l) {
      BitString y = BitString::random(static_cast<std::size_t>(d), rng);
      BitString y0 = y;
      y0.set(i, false);
      y.set(i, true);
      probes[static_cast<std::size_t>(2 * l)] = std::move(y0);
      probes[static_cast<std::size_t>(2 * l + 1)] = std::move(y);
    }
    f.predict_proba_batch(probes, scores);
    int count = 0;
    for (int l = 0; l < k; ++l) {
      const double f0 =
          scores[static_cast<std::size_t>(2 * l * C + target)];
      const double f1 =
          scores[static_cast<std::size_t>((2 * l + 1) * C + target)];
      if (f0 >= f1) ++count;
    }
    if (2 * count < k) x.set(i, true);
  }
  return x;
}

double recovery_error(const std::vector<BitString>& estimates,
                      const std::vector<BitString>& truths) {
  if (estimates.size() != truths.size())
    throw std::invalid_argument("estimate and truth counts differ");
  if (estimates.empty()) throw std::invalid_argument("no targets");
  double sum = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (estimates[i].size() != truths[i].size())
      throw std::invalid_argument("estimate and truth lengths differ");
    sum += static_cast<double>(hamming(estimates[i], truths[i])) /
           static_cast<double>(truths[i].size());
  }
  return 100.0 * sum / static_cast<double>(estimates.size());
}

const char* attack_kind_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::coordinate_ascent:
      return "coordinate_ascent";
    case AttackKind::gradient_sign:
      return "gradient_sign";
  }
  throw std::invalid_argument("unknown attack kind");
}

AttackKind attack_kind_from_name(const std::string& name) {
  if (name == "coordinate_ascent") return AttackKind::coordinate_ascent;
  if (name == "gradient_sign") return AttackKind::gradient_sign;
  throw std::invalid_argument("unknown attack kind: " + name);
}

double AttackReport::recovery_error_percent() const {
  if (targets.empty()) throw std::invalid_argument("no targets");
  double sum = 0.0;
  for (const auto& t : targets) sum += t.bit_error_fraction;
  return 100.0 * sum / static_cast<double>(targets.size());
}

std::vector<std::size_t> pick_singleton_targets(const Dataset& data,
                                                std::size_t max_targets,
                                                RngStream& rng) {
  std::vector<std::size_t> singles;
  for (std::size_t i = 0; i < static_cast<std::size_t>(data.size()); ++i)
    if (data.singleton_mask[i]) singles.push_back(i);
  const std::size_t m = std::min(max_targets, singles.size());
  for (std::size_t i = 0; i < m; ++i) {
    const auto j =
        i + static_cast<std::size_t>(rng.uniform_below(singles.size() - i));
    std::swap(singles[i], singles[j]);
  }
  singles.resize(m);
  return singles;
}

AttackReport attack_singletons(const ProbClassifier& clf,
                               const std::string& clf_name, AttackKind kind,
                               const AttackParams& params, const Dataset& data,
                               int d, int trial, RngStream& rng) {
  AttackReport report;
  const auto targets = pick_singleton_targets(data, params.max_targets, rng);
  for (const std::size_t idx : targets) {
    const LabeledExample& ex = data.examples[idx];
    const auto* truth = std::get_if<BitString>(&ex.features);
    if (truth == nullptr)
      throw std::invalid_argument("attack targets need bit-vector features");
    if (truth->size() != static_cast<std::size_t>(d))
      throw std::invalid_argument("target dimension mismatch");
    BitString estimate;
    switch (kind) {
      case AttackKind::coordinate_ascent:
        estimate = coordinate_ascent_attack(
            clf, ex.label, d, params.iterations > 0 ? params.iterations : 2 * d,
            rng);
        break;
      case AttackKind::gradient_sign:
        estimate = gradient_sign_attack(clf, ex.label, d, params.probes, rng);
        break;
    }
    const int errs = static_cast<int>(hamming(estimate, *truth));
    AttackTargetResult row;
    row.trial = trial;
    row.classifier = clf_name;
    row.attack = attack_kind_name(kind);
    row.subpop = ex.subpop + 1;
    row.d = d;
    row.bit_errors = errs;
    row.bit_error_fraction = static_cast<double>(errs) / static_cast<double>(d);
    report.targets.push_back(std::move(row));
  }
  return report;
}

void attack_report_to_csv(const AttackReport& report, std::ostream& out) {
  out << "trial,classifier,attack,target_subpop,d,bit_errors,"
         "bit_error_fraction\n";
  char buf[64];
  for (const auto& r : report.targets) {
    std::snprintf(buf, sizeof buf, "%.17g", r.bit_error_fraction);
    out << r.trial << ',' << r.classifier << ',' << r.attack << ',' << r.subpop
        << ',' << r.d << ',' << r.bit_errors << ',' << buf << '\n';
  }
  // aggregate per (classifier, attack) in order of first appearance
  std::vector<std::pair<std::string, std::string>> seen;
  for (const auto& r : report.targets) {
    const std::pair<std::string, std::string> key{r.classifier, r.attack};
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
    seen.push_back(key);
    long total_errs = 0;
    double sum_frac = 0.0;
    int count = 0;
    int dim = 0;
    for (const auto& s : report.targets) {
      if (s.classifier != key.first || s.attack != key.second) continue;
      total_errs += s.bit_errors;
      sum_frac += s.bit_error_fraction;
      dim = s.d;
      ++count;
    }
    std::snprintf(buf, sizeof buf, "%.17g", sum_frac / count);
    out << "all," << key.first << ',' << key.second << ",," << dim << ','
        << total_errs << ',' << buf << '\n';
  }
}

MonotoneOracle::MonotoneOracle(BitString planted, int target, int num_classes)
    : planted_(std::move(planted)), target_(target), num_classes_(num_classes) {
  if (num_classes_ < 2)
    throw std::invalid_argument("need at least two classes");
  if (target_ < 0 || target_ >= num_classes_)
    throw std::invalid_argument("target class out of range");
  if (planted_.size() == 0) throw std::invalid_argument("empty planted string");
}

void MonotoneOracle::predict_proba(const Features& z,
                                   std::span<double> out) const {
  const auto& x = std::get<BitString>(z);
  if (x.size() != planted_.size())
    throw std::invalid_argument("query dimension mismatch");
  if (out.size() != static_cast<std::size_t>(num_classes_))
    throw std::invalid_argument("output span has wrong length");
  const double d = static_cast<double>(planted_.size());
  const double p = (d - static_cast<double>(hamming(x, planted_))) / d;
  const double rest = (1.0 - p) / static_cast<double>(num_classes_ - 1);
  for (auto& v : out) v = rest;
  out[static_cast<std::size_t>(target_)] = p;
}

}  // namespace subpop
