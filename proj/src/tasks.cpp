#include "subpop/tasks.hpp"

#include "subpop/prob.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace subpop {
namespace {

void check_subpop(int j, int N, const char* who) {
  if (j < 0 || j >= N) throw std::out_of_range(std::string(who) + ": subpop id out of range");
}

std::string join_symbols(const SymbolString& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(s[i]);
  }
  return out;
}

SymbolString parse_symbols(const std::string& text) {
  SymbolString out;
  std::istringstream in(text);
  unsigned long v = 0;
  while (in >> v) out.push_back(static_cast<std::uint32_t>(v));
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace

TaskKind task_kind(const TaskInstance& inst) {
  switch (inst.index()) {
    case 0: return TaskKind::kHypercube;
    case 1: return TaskKind::kNextSymbol;
    case 2: return TaskKind::kLargeAlphabet;
    case 3: return TaskKind::kThreshold;
    default: return TaskKind::kTwoLength;
  }
}

const char* task_kind_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::kHypercube: return "hc";
    case TaskKind::kNextSymbol: return "nsp";
    case TaskKind::kLargeAlphabet: return "la";
    case TaskKind::kThreshold: return "threshold";
    case TaskKind::kTwoLength: return "two_length";
  }
  return "?";
}

TaskKind task_kind_from_name(const std::string& name) {
  if (name == "hc") return TaskKind::kHypercube;
  if (name == "nsp") return TaskKind::kNextSymbol;
  if (name == "la") return TaskKind::kLargeAlphabet;
  if (name == "threshold") return TaskKind::kThreshold;
  if (name == "two_length") return TaskKind::kTwoLength;
  throw std::invalid_argument("unknown task kind: " + name);
}

int task_subpop_count(const TaskInstance& inst) {
  if (const auto* hc = std::get_if<HCInstance>(&inst)) return hc->N;
  if (const auto* nsp = std::get_if<NSPInstance>(&inst)) return nsp->N;
  if (const auto* la = std::get_if<LAInstance>(&inst)) return la->N;
  return 1;
}

int task_dim(const TaskInstance& inst) {
  if (const auto* hc = std::get_if<HCInstance>(&inst)) return hc->d;
  if (const auto* nsp = std::get_if<NSPInstance>(&inst)) return nsp->d;
  if (const auto* la = std::get_if<LAInstance>(&inst)) return la->d;
  if (const auto* th = std::get_if<ThresholdInstance>(&inst)) return th->d;
  return std::get<TwoLengthInstance>(inst).d;
}

HCInstance sample_hc_instance(int N, int d, double rho, RngStream& rng) {
  if (N < 1 || d < 1) throw std::invalid_argument("sample_hc_instance: N, d must be >= 1");
  if (!(rho >= 0.0 && rho <= 1.0))
    throw std::domain_error("sample_hc_instance: rho outside [0,1]");
  HCInstance inst;
  inst.N = N;
  inst.d = d;
  inst.rho = rho;
  inst.fixed_mask.reserve(static_cast<std::size_t>(N));
  inst.fixed_value.reserve(static_cast<std::size_t>(N));
  for (int j = 0; j < N; ++j) {
    BitString mask(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      if (rng.bernoulli(rho)) mask.set(static_cast<std::size_t>(i), true);
    }
    BitString value = BitString::random(static_cast<std::size_t>(d), rng).masked_by(mask);
    inst.fixed_mask.push_back(std::move(mask));
    inst.fixed_value.push_back(std::move(value));
  }
  return inst;
}

LabeledExample sample_hc_example(const HCInstance& inst, int j, RngStream& rng) {
  check_subpop(j, inst.N, "sample_hc_example");
  const auto ju = static_cast<std::size_t>(j);
  LabeledExample ex;
  ex.features = BitString::random_masked(inst.fixed_mask[ju], inst.fixed_value[ju], rng);
  ex.label = j;
  ex.subpop = j;
  return ex;
}

NSPInstance sample_nsp_instance(int N, int d, double delta, RngStream& rng) {
  if (N < 1 || d < 1) throw std::invalid_argument("sample_nsp_instance: N, d must be >= 1");
  if (!(delta >= 0.0 && delta < 1.0))
    throw std::domain_error("sample_nsp_instance: delta outside [0,1)");
  NSPInstance inst;
  inst.N = N;
  inst.d = d;
  inst.delta = delta;
  inst.reference.reserve(static_cast<std::size_t>(N));
  for (int j = 0; j < N; ++j)
    inst.reference.push_back(BitString::random(static_cast<std::size_t>(d), rng));
  return inst;
}

LabeledExample sample_nsp_example_at(const NSPInstance& inst, int j, int ell, RngStream& rng) {
  check_subpop(j, inst.N, "sample_nsp_example");
  if (ell < 0 || ell >= inst.d)
    throw std::out_of_range("sample_nsp_example_at: prefix length out of range");
  const BitString& ref = inst.reference[static_cast<std::size_t>(j)];
  const double q = inst.delta / 2.0;
  LabeledExample ex;
  NspFeatures f;
  f.subpop = j;
  f.prefix = bsc_apply(ref.prefix(static_cast<std::size_t>(ell)), q, rng);
  ex.features = std::move(f);
  ex.label = static_cast<int>(ref.get(static_cast<std::size_t>(ell)) ^ rng.bernoulli(q));
  ex.subpop = j;
  return ex;
}

LabeledExample sample_nsp_example(const NSPInstance& inst, int j, RngStream& rng) {
  check_subpop(j, inst.N, "sample_nsp_example");
  const int ell = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(inst.d)));
  return sample_nsp_example_at(inst, j, ell, rng);
}

LAInstance sample_la_instance(int N, int d, double c_alphabet, RngStream& rng) {
  if (N < 1 || d < 1) throw std::invalid_argument("sample_la_instance: N, d must be >= 1");
  const double traw = std::ceil(c_alphabet * static_cast<double>(N) * static_cast<double>(d));
  if (!(traw >= 2.0)) throw std::invalid_argument("sample_la_instance: alphabet too small");
  if (traw < static_cast<double>(d))
    throw std::invalid_argument("sample_la_instance: alphabet smaller than dimension");
  LAInstance inst;
  inst.N = N;
  inst.d = d;
  inst.alphabet = static_cast<std::uint32_t>(traw);
  inst.key_index.reserve(static_cast<std::size_t>(N));
  inst.key_symbol.reserve(static_cast<std::size_t>(N));
  for (int j = 0; j < N; ++j) {
    inst.key_index.push_back(static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(d))));
    inst.key_symbol.push_back(static_cast<std::uint32_t>(rng.uniform_below(inst.alphabet)));
  }
  return inst;
}

LabeledExample sample_la_example(const LAInstance& inst, int j, RngStream& rng) {
  check_subpop(j, inst.N, "sample_la_example");
  const auto ju = static_cast<std::size_t>(j);
  SymbolString s(static_cast<std::size_t>(inst.d));
  for (auto& v : s) v = static_cast<std::uint32_t>(rng.uniform_below(inst.alphabet));
  s[static_cast<std::size_t>(inst.key_index[ju])] = inst.key_symbol[ju];
  LabeledExample ex;
  ex.features = std::move(s);
  ex.label = j;
  ex.subpop = j;
  return ex;
}

ThresholdInstance sample_threshold_instance(int d, RngStream& rng) {
  if (d < 1) throw std::invalid_argument("sample_threshold_instance: d must be >= 1");
  return ThresholdInstance{d, BitString::random(static_cast<std::size_t>(d), rng)};
}

LabeledExample sample_threshold_example_at(const ThresholdInstance& inst, int ell,
                                           bool copy_branch, RngStream& rng) {
  if (ell < 0 || ell >= inst.d)
    throw std::out_of_range("sample_threshold_example_at: prefix length out of range");
  BitString z(static_cast<std::size_t>(inst.d));
  for (int i = 0; i < ell; ++i) {
    const bool bit = copy_branch ? inst.threshold.get(static_cast<std::size_t>(i))
                                 : rng.bernoulli(0.5);
    z.set(static_cast<std::size_t>(i), bit);
  }
  z.set(static_cast<std::size_t>(ell), true);  // tail past ell stays zero
  LabeledExample ex;
  ex.label = compare_bigendian(inst.threshold, z) >= 0 ? 1 : 0;
  ex.features = std::move(z);
  ex.subpop = 0;
  return ex;
}

LabeledExample sample_threshold_example(const ThresholdInstance& inst, RngStream& rng) {
  const int ell = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(inst.d)));
  const bool copy_branch = rng.bernoulli(0.5);
  return sample_threshold_example_at(inst, ell, copy_branch, rng);
}

TwoLengthInstance sample_two_length_instance(int d, RngStream& rng) {
  if (d < 1) throw std::invalid_argument("sample_two_length_instance: d must be >= 1");
  TwoLengthInstance inst;
  inst.d = d;
  inst.reference = BitString::random(static_cast<std::size_t>(d), rng);
  inst.len_a = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(d)));
  inst.len_b = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(d)));
  return inst;
}

LabeledExample sample_two_length_example(const TwoLengthInstance& inst, RngStream& rng) {
  const int len = rng.bernoulli(0.5) ? inst.len_b : inst.len_a;
  LabeledExample ex;
  NspFeatures f;
  f.subpop = 0;
  f.prefix = inst.reference.prefix(static_cast<std::size_t>(len));
  ex.features = std::move(f);
  ex.label = static_cast<int>(inst.reference.get(static_cast<std::size_t>(len)));
  ex.subpop = 0;
  return ex;
}

TwoLengthKnowledge two_length_learner(const std::vector<LabeledExample>& samples) {
  TwoLengthKnowledge out;
  bool seen = false;
  for (const auto& ex : samples) {
    const auto& f = std::get<NspFeatures>(ex.features);
    const int len = static_cast<int>(f.prefix.size());
    if (!seen) {
      seen = true;
      out.len_a = len;
      out.next_a = ex.label;
    } else if (len != out.len_a) {
      out.len_b = len;
      out.next_b = ex.label;
      out.known = true;
      return out;
    }
  }
  return out;
}

LabeledExample sample_task_example(const TaskInstance& inst, int j, RngStream& rng) {
  if (const auto* hc = std::get_if<HCInstance>(&inst)) return sample_hc_example(*hc, j, rng);
  if (const auto* nsp = std::get_if<NSPInstance>(&inst)) return sample_nsp_example(*nsp, j, rng);
  if (const auto* la = std::get_if<LAInstance>(&inst)) return sample_la_example(*la, j, rng);
  check_subpop(j, 1, "sample_task_example");
  if (const auto* th = std::get_if<ThresholdInstance>(&inst))
    return sample_threshold_example(*th, rng);
  return sample_two_length_example(std::get<TwoLengthInstance>(inst), rng);
}

void Dataset::recount_singletons() {
  std::vector<int> counts(static_cast<std::size_t>(num_subpops), 0);
  for (const auto& ex : examples) {
    if (ex.subpop < 0 || ex.subpop >= num_subpops)
      throw std::out_of_range("Dataset: example subpop outside [0, N)");
    ++counts[static_cast<std::size_t>(ex.subpop)];
  }
  singleton_mask.assign(examples.size(), 0);
  num_singletons = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (counts[static_cast<std::size_t>(examples[i].subpop)] == 1) {
      singleton_mask[i] = 1;
      ++num_singletons;
    }
  }
}

Dataset generate_dataset(const TaskInstance& inst, const MixtureWeights& weights, int n,
                         RngStream& rng) {
  if (n < 0) throw std::invalid_argument("generate_dataset: n must be >= 0");
  const int N = task_subpop_count(inst);
  if (weights.size() != N)
    throw std::invalid_argument("generate_dataset: weights length does not match instance");
  weights.validate();
  Dataset data;
  data.num_subpops = N;
  data.examples.reserve(static_cast<std::size_t>(n));
  if (n > 0) {
    const AliasTable table(weights.weights);
    for (int i = 0; i < n; ++i) {
      const int j = table.sample(rng);
      data.examples.push_back(sample_task_example(inst, j, rng));
    }
  }
  data.recount_singletons();
  return data;
}

double rho_for(int n, double mu1, double a, int d) {
  if (n < 3) throw std::domain_error("rho_for: n must be >= 3");
  if (d < 1) throw std::domain_error("rho_for: d must be >= 1");
  const double amn = a * mu1 * static_cast<double>(n);
  if (!(amn > 1.0)) throw std::domain_error("rho_for: a*mu1*n must exceed 1");
  const double radicand = 2.0 * std::log(amn) - std::log(std::log(static_cast<double>(n)));
  if (radicand < 0.0) throw std::domain_error("rho_for: negative radicand");
  const double rho = std::sqrt(radicand / static_cast<double>(d));
  if (rho > 1.0) throw std::domain_error("rho_for: formula gives rho > 1");
  return rho;
}

std::string dataset_to_text(const Dataset& data, TaskKind kind, int d, double param,
                            std::uint64_t seed) {
  std::string out = "# task=";
  out += task_kind_name(kind);
  char buf[160];
  std::snprintf(buf, sizeof(buf), " n=%d N=%d d=%d", data.size(), data.num_subpops, d);
  out += buf;
  const char* param_key = nullptr;
  switch (kind) {
    case TaskKind::kHypercube: param_key = "rho"; break;
    case TaskKind::kNextSymbol: param_key = "delta"; break;
    case TaskKind::kLargeAlphabet: param_key = "t"; break;
    default: break;
  }
  if (param_key != nullptr) {
    std::snprintf(buf, sizeof(buf), " %s=%.17g", param_key, param);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), " seed=%llu\n", static_cast<unsigned long long>(seed));
  out += buf;

  const bool class_labels =
      kind == TaskKind::kHypercube || kind == TaskKind::kLargeAlphabet;
  for (const auto& ex : data.examples) {
    out += std::to_string(ex.subpop + 1);
    out += '\t';
    out += std::to_string(class_labels ? ex.label + 1 : ex.label);
    out += '\t';
    if (const auto* b = std::get_if<BitString>(&ex.features)) {
      out += b->to_string();
    } else if (const auto* nf = std::get_if<NspFeatures>(&ex.features)) {
      out += nf->prefix.to_string();
    } else {
      out += join_symbols(std::get<SymbolString>(ex.features));
    }
    out += '\n';
  }
  return out;
}

std::pair<Dataset, DatasetHeader> dataset_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# task=", 0) != 0)
    throw std::invalid_argument("dataset_from_text: missing header line");

  DatasetHeader header;
  {
    std::istringstream hs(line.substr(2));
    std::string token;
    while (hs >> token) {
      const std::size_t eq = token.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("dataset_from_text: malformed header token " + token);
      const std::string key = token.substr(0, eq);
      const std::string val = token.substr(eq + 1);
      if (key == "task") header.kind = task_kind_from_name(val);
      else if (key == "n") header.n = std::stoi(val);
      else if (key == "N") header.N = std::stoi(val);
      else if (key == "d") header.d = std::stoi(val);
      else if (key == "rho" || key == "delta" || key == "t") header.param = std::stod(val);
      else if (key == "seed") header.seed = std::stoull(val);
      else throw std::invalid_argument("dataset_from_text: unknown header key " + key);
    }
  }

  Dataset data;
  data.num_subpops = header.N;
  const bool class_labels =
      header.kind == TaskKind::kHypercube || header.kind == TaskKind::kLargeAlphabet;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != 3)
      throw std::invalid_argument("dataset_from_text: expected 3 fields on line " +
                                  std::to_string(lineno));
    LabeledExample ex;
    ex.subpop = std::stoi(fields[0]) - 1;
    ex.label = class_labels ? std::stoi(fields[1]) - 1 : std::stoi(fields[1]);
    switch (header.kind) {
      case TaskKind::kHypercube:
      case TaskKind::kThreshold:
        ex.features = BitString::from_string(fields[2]);
        break;
      case TaskKind::kNextSymbol:
      case TaskKind::kTwoLength: {
        NspFeatures f;
        f.subpop = ex.subpop;
        f.prefix = BitString::from_string(fields[2]);
        ex.features = std::move(f);
        break;
      }
      case TaskKind::kLargeAlphabet:
        ex.features = parse_symbols(fields[2]);
        break;
    }
    data.examples.push_back(std::move(ex));
  }
  if (data.size() != header.n)
    throw std::invalid_argument("dataset_from_text: example count disagrees with header");
  data.recount_singletons();
  return {std::move(data), header};
}

std::string instance_to_text(const TaskInstance& inst, const MixtureWeights& weights) {
  if (weights.size() != task_subpop_count(inst))
    throw std::invalid_argument("instance_to_text: weight count mismatch");
  weights.validate();

  std::string out = "# instance task=";
  out += task_kind_name(task_kind(inst));
  char buf[160];
  std::snprintf(buf, sizeof(buf), " N=%d d=%d", task_subpop_count(inst), task_dim(inst));
  out += buf;
  if (const auto* hc = std::get_if<HCInstance>(&inst)) {
    std::snprintf(buf, sizeof(buf), " rho=%.17g", hc->rho);
    out += buf;
  } else if (const auto* nsp = std::get_if<NSPInstance>(&inst)) {
    std::snprintf(buf, sizeof(buf), " delta=%.17g", nsp->delta);
    out += buf;
  } else if (const auto* la = std::get_if<LAInstance>(&inst)) {
    std::snprintf(buf, sizeof(buf), " alphabet=%u", la->alphabet);
    out += buf;
  } else if (const auto* tl = std::get_if<TwoLengthInstance>(&inst)) {
    std::snprintf(buf, sizeof(buf), " len_a=%d len_b=%d", tl->len_a, tl->len_b);
    out += buf;
  }
  out += '\n';

  out += "weights\t";
  for (int j = 0; j < weights.size(); ++j) {
    std::snprintf(buf, sizeof(buf), j == 0 ? "%.17g" : " %.17g",
                  weights.weights[static_cast<std::size_t>(j)]);
    out += buf;
  }
  out += '\n';

  if (const auto* hc = std::get_if<HCInstance>(&inst)) {
    for (int j = 0; j < hc->N; ++j) {
      out += hc->fixed_mask[static_cast<std::size_t>(j)].to_string();
      out += '\t';
      out += hc->fixed_value[static_cast<std::size_t>(j)].to_string();
      out += '\n';
    }
  } else if (const auto* nsp = std::get_if<NSPInstance>(&inst)) {
    for (int j = 0; j < nsp->N; ++j) {
      out += nsp->reference[static_cast<std::size_t>(j)].to_string();
      out += '\n';
    }
  } else if (const auto* la = std::get_if<LAInstance>(&inst)) {
    for (int j = 0; j < la->N; ++j) {
      out += std::to_string(la->key_index[static_cast<std::size_t>(j)]);
      out += '\t';
      out += std::to_string(la->key_symbol[static_cast<std::size_t>(j)]);
      out += '\n';
    }
  } else if (const auto* th = std::get_if<ThresholdInstance>(&inst)) {
    out += th->threshold.to_string();
    out += '\n';
  } else if (const auto* tl = std::get_if<TwoLengthInstance>(&inst)) {
    out += tl->reference.to_string();
    out += '\n';
  }
  return out;
}

std::pair<TaskInstance, MixtureWeights> instance_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# instance task=", 0) != 0)
    throw std::invalid_argument("instance_from_text: missing header line");

  TaskKind kind = TaskKind::kHypercube;
  int N = 0, d = 0, len_a = -1, len_b = -1;
  double param = 0.0;
  std::uint32_t alphabet = 0;
  {
    std::istringstream hs(line.substr(2));
    std::string token;
    hs >> token;  // "instance"
    while (hs >> token) {
      const std::size_t eq = token.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("instance_from_text: malformed header token " + token);
      const std::string key = token.substr(0, eq);
      const std::string val = token.substr(eq + 1);
      if (key == "task") kind = task_kind_from_name(val);
      else if (key == "N") N = std::stoi(val);
      else if (key == "d") d = std::stoi(val);
      else if (key == "rho" || key == "delta") param = std::stod(val);
      else if (key == "alphabet") alphabet = static_cast<std::uint32_t>(std::stoul(val));
      else if (key == "len_a") len_a = std::stoi(val);
      else if (key == "len_b") len_b = std::stoi(val);
      else
        throw std::invalid_argument("instance_from_text: unknown header key " + key);
    }
  }
  if (N < 1 || d < 1)
    throw std::invalid_argument("instance_from_text: bad header sizes");

  if (!std::getline(in, line) || line.rfind("weights\t", 0) != 0)
    throw std::invalid_argument("instance_from_text: missing weights line");
  MixtureWeights weights;
  {
    std::istringstream ws(line.substr(8));
    double w = 0.0;
    while (ws >> w) weights.weights.push_back(w);
  }
  if (weights.size() != N)
    throw std::invalid_argument("instance_from_text: weight count mismatch");
  weights.validate();

  const auto next_line = [&]() {
    if (!std::getline(in, line))
      throw std::invalid_argument("instance_from_text: truncated body");
    return line;
  };
  const auto parse_bits = [&](const std::string& s, const char* what) {
    if (static_cast<int>(s.size()) != d)
      throw std::invalid_argument(std::string("instance_from_text: bad ") + what +
                                  " length");
    return BitString::from_string(s);
  };

  TaskInstance inst;
  switch (kind) {
    case TaskKind::kHypercube: {
      HCInstance hc;
      hc.N = N;
      hc.d = d;
      hc.rho = param;
      for (int j = 0; j < N; ++j) {
        const std::string& row = next_line();
        const std::size_t tab = row.find('\t');
        if (tab == std::string::npos)
          throw std::invalid_argument("instance_from_text: malformed cluster row");
        hc.fixed_mask.push_back(parse_bits(row.substr(0, tab), "mask"));
        hc.fixed_value.push_back(parse_bits(row.substr(tab + 1), "value"));
      }
      inst = std::move(hc);
      break;
    }
    case TaskKind::kNextSymbol: {
      NSPInstance nsp;
      nsp.N = N;
      nsp.d = d;
      nsp.delta = param;
      for (int j = 0; j < N; ++j)
        nsp.reference.push_back(parse_bits(next_line(), "reference"));
      inst = std::move(nsp);
      break;
    }
    case TaskKind::kLargeAlphabet: {
      LAInstance la;
      la.N = N;
      la.d = d;
      la.alphabet = alphabet;
      for (int j = 0; j < N; ++j) {
        const std::string& row = next_line();
        const std::size_t tab = row.find('\t');
        if (tab == std::string::npos)
          throw std::invalid_argument("instance_from_text: malformed key row");
        la.key_index.push_back(std::stoi(row.substr(0, tab)));
        la.key_symbol.push_back(
            static_cast<std::uint32_t>(std::stoul(row.substr(tab + 1))));
      }
      inst = std::move(la);
      break;
    }
    case TaskKind::kThreshold: {
      ThresholdInstance th;
      th.d = d;
      th.threshold = parse_bits(next_line(), "threshold");
      inst = std::move(th);
      break;
    }
    case TaskKind::kTwoLength: {
      if (len_a < 0 || len_b < 0)
        throw std::invalid_argument("instance_from_text: missing prefix lengths");
      TwoLengthInstance tl;
      tl.d = d;
      tl.len_a = len_a;
      tl.len_b = len_b;
      tl.reference = parse_bits(next_line(), "reference");
      inst = std::move(tl);
      break;
    }
  }
  return {std::move(inst), std::move(weights)};
}

}  // namespace subpop
