#include "cqpt/measmodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <random>
#include <unordered_map>

#include <unsupported/Eigen/KroneckerProduct>

namespace cqpt {

namespace {

constexpr const char* kKetLetters = "HVDARL";
constexpr const char* kInputLetters = "HVDR";
constexpr const char* kObsLetters = "HVDARL";

CVector single_ket(char letter) {
  CVector k(2);
  const double s = 1.0 / std::sqrt(2.0);
  switch (letter) {
    case 'H': k << 1, 0; break;
    case 'V': k << 0, 1; break;
    case 'D': k << s, s; break;
    case 'A': k << s, -s; break;
    case 'R': k << s, Complex(0, s); break;
    case 'L': k << s, Complex(0, -s); break;
    default: throw std::invalid_argument(std::string("unknown ket letter: ") + letter);
  }
  return k;
}

Matrix single_pauli(char letter) {
  Matrix m(2, 2);
  switch (letter) {
    case 'I': m << 1, 0, 0, 1; break;
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, Complex(0, -1), Complex(0, 1), 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: throw std::invalid_argument(std::string("unknown Pauli letter: ") + letter);
  }
  return m;
}

Matrix product_matrix(const std::string& label, const std::function<Matrix(char)>& factor) {
  Matrix m = factor(label[0]);
  for (size_t q = 1; q < label.size(); ++q)
    m = Eigen::kroneckerProduct(m, factor(label[q])).eval();
  return m;
}

// all strings of length n over the given alphabet, first position most
// significant, alphabet order preserved
std::vector<std::string> product_labels(const std::string& alphabet, int n) {
  std::vector<std::string> out{""};
  for (int q = 0; q < n; ++q) {
    std::vector<std::string> next;
    next.reserve(out.size() * alphabet.size());
    for (const auto& prefix : out)
      for (char c : alphabet) next.push_back(prefix + c);
    out = std::move(next);
  }
  return out;
}

bool is_ket_label(const std::string& label) {
  return std::all_of(label.begin(), label.end(), [](char c) {
    return std::string("HVDARLI").find(c) != std::string::npos;
  });
}

char basis_partner(char letter) {
  switch (letter) {
    case 'H': return 'V';
    case 'V': return 'H';
    case 'D': return 'A';
    case 'A': return 'D';
    case 'R': return 'L';
    case 'L': return 'R';
    default: throw std::invalid_argument(std::string("letter has no basis partner: ") + letter);
  }
}

char basis_pair_first(char letter) {
  switch (letter) {
    case 'H': case 'V': return 'H';
    case 'D': case 'A': return 'D';
    case 'R': case 'L': return 'R';
    default: throw std::invalid_argument(std::string("bad basis letter: ") + letter);
  }
}

// deterministic multinomial draw via conditional binomials
std::vector<long long> multinomial(std::mt19937_64& rng, long long shots,
                                   const std::vector<double>& p) {
  std::vector<long long> counts(p.size(), 0);
  long long remaining = shots;
  double mass = 1.0;
  for (size_t i = 0; i + 1 < p.size() && remaining > 0; ++i) {
    const double q = std::clamp(mass > 0 ? p[i] / mass : 1.0, 0.0, 1.0);
    std::binomial_distribution<long long> bin(remaining, q);
    counts[i] = bin(rng);
    remaining -= counts[i];
    mass -= p[i];
  }
  counts.back() += remaining;
  return counts;
}

}  // namespace

const QState& StateLibrary::state(const std::string& label) const {
  auto it = states.find(label);
  if (it == states.end())
    throw std::invalid_argument("unknown state label: " + label);
  return it->second;
}

const Observable& StateLibrary::observable(const std::string& label) const {
  auto it = observables.find(label);
  if (it == observables.end())
    throw std::invalid_argument("unknown observable label: " + label);
  return it->second;
}

const StateLibrary& state_library(int n_qubits) {
  if (n_qubits < 1 || n_qubits > 4)
    throw std::invalid_argument("state_library supports 1..4 qubits");
  static std::array<std::unique_ptr<StateLibrary>, 5> cache;
  auto& slot = cache[n_qubits];
  if (slot) return *slot;

  auto lib = std::make_unique<StateLibrary>();
  lib->n_qubits = n_qubits;

  auto ket_factor = [](char c) {
    if (c == 'I') return Matrix(Matrix::Identity(2, 2));
    const CVector k = single_ket(c);
    return Matrix(k * k.adjoint());
  };

  for (const auto& label : product_labels(kKetLetters, n_qubits))
    lib->states.emplace(label, QState{product_matrix(label, ket_factor)});

  for (const auto& label : product_labels("HVDARLI", n_qubits)) {
    if (label == std::string(size_t(n_qubits), 'I')) continue;
    lib->observables.emplace(
        label, make_observable(product_matrix(label, ket_factor),
                               ObservableKind::projector, label));
  }
  for (const auto& label : product_labels("IXYZ", n_qubits)) {
    if (label == std::string(size_t(n_qubits), 'I')) continue;
    lib->observables.emplace(
        label, make_observable(product_matrix(label, [](char c) { return single_pauli(c); }),
                               ObservableKind::expectation, label));
  }

  slot = std::move(lib);
  return *slot;
}

ConfigSet full_config_set(int n_qubits) {
  if (n_qubits < 1 || n_qubits > 3)
    throw std::invalid_argument(
        "full product set materialized for 1..3 qubits only; "
        "use random_pauli_config_set for larger systems");
  const StateLibrary& lib = state_library(n_qubits);
  ConfigSet set;
  const auto inputs = product_labels(kInputLetters, n_qubits);
  const auto observables = product_labels(kObsLetters, n_qubits);
  set.configs.reserve(inputs.size() * observables.size());
  for (const auto& in : inputs)
    for (const auto& ob : observables)
      set.configs.push_back(Configuration{lib.state(in), lib.observable(ob), in, ob});
  return set;
}

std::vector<std::string> observable_group(const std::string& obs_label) {
  if (!is_ket_label(obs_label))
    throw std::invalid_argument("observable_group needs a projector label, got " + obs_label);
  std::vector<std::string> group{""};
  for (char c : obs_label) {
    std::vector<std::string> next;
    if (c == 'I') {
      for (const auto& g : group) next.push_back(g + 'I');
    } else {
      const char first = basis_pair_first(c);
      for (const auto& g : group) {
        next.push_back(g + first);
        next.push_back(g + basis_partner(first));
      }
    }
    group = std::move(next);
  }
  return group;
}

std::string group_setting(const std::string& obs_label) {
  std::string setting;
  for (char c : obs_label) {
    switch (c) {
      case 'H': case 'V': setting += 'Z'; break;
      case 'D': case 'A': setting += 'X'; break;
      case 'R': case 'L': setting += 'Y'; break;
      case 'I': setting += 'I'; break;
      default:
        throw std::invalid_argument("bad observable letter in " + obs_label);
    }
  }
  return setting;
}

SensingMatrix build_phi(const ConfigSet& set, BasisPtr basis) {
  const int m = set.size();
  if (m == 0) throw std::invalid_argument("empty configuration set");
  const int nb = basis->size();
  const int d = basis->dim();
  const double scale = 1.0 / std::sqrt(double(m));

  SensingMatrix out;
  out.phi = Matrix(m, nb * nb);
  out.basis = basis;
  out.config_ref = std::make_shared<ConfigSet>(set);
  out.dim = d;

  std::vector<Matrix> left(nb), right(nb);
  for (int i = 0; i < m; ++i) {
    const Configuration& cfg = set.configs[i];
    if (cfg.input.rho.rows() != d)
      throw DimensionError("configuration dimension does not match basis");
    for (int a = 0; a < nb; ++a) left[a] = basis->elements[a] * cfg.input.rho;
    for (int b = 0; b < nb; ++b)
      right[b] = (basis->elements[b].adjoint() * cfg.observable.matrix).transpose();
    for (int b = 0; b < nb; ++b)
      for (int a = 0; a < nb; ++a)
        out.phi(i, Eigen::Index(b) * nb + a) =
            scale * left[a].cwiseProduct(right[b]).sum();
  }
  return out;
}

RealMatrix real_sensing_matrix(const SensingMatrix& phi) {
  const int nb = int(std::lround(std::sqrt(double(phi.phi.cols()))));
  const int m = int(phi.phi.rows());
  RealMatrix out(m, nb * nb);
  const double s = 1.0 / std::sqrt(2.0);
  for (int r = 0; r < m; ++r) {
    int k = 0;
    for (int i = 0; i < nb; ++i)
      out(r, k++) = phi.phi(r, Eigen::Index(i) * nb + i).real();
    for (int j = 0; j < nb; ++j)
      for (int i = 0; i < j; ++i) {
        const Complex fij = phi.phi(r, Eigen::Index(j) * nb + i);
        const Complex fji = phi.phi(r, Eigen::Index(i) * nb + j);
        out(r, k++) = (fij + fji).real() * s;
        out(r, k++) = -(fij - fji).imag() * s;
      }
  }
  return out;
}

RealVector predict_expectations(const ProcessMatrix& chi, const ConfigSet& set) {
  RealVector y(set.size());
  std::unordered_map<std::string, Matrix> outputs;
  for (int i = 0; i < set.size(); ++i) {
    const Configuration& cfg = set.configs[i];
    auto it = outputs.find(cfg.input_label);
    if (it == outputs.end())
      it = outputs.emplace(cfg.input_label,
                           apply_channel(chi, cfg.input).rho).first;
    const Complex v = (it->second * cfg.observable.matrix).trace();
    if (std::abs(v.imag()) > 1e-8)
      throw std::invalid_argument("non-real expectation value, check inputs");
    y[i] = v.real();
  }
  return y;
}

namespace {

struct GroupPlan {
  std::vector<int> members;  // config indices, group order
};

// groups of projector configs keyed by (input, setting), in first-appearance
// order; throws if a group is incomplete
std::vector<GroupPlan> plan_groups(const ConfigSet& set) {
  std::unordered_map<std::string, int> index;
  std::vector<GroupPlan> plans;
  std::unordered_map<std::string, int> by_label;  // input|obs -> config index
  for (int i = 0; i < set.size(); ++i)
    if (set.configs[i].observable.kind == ObservableKind::projector)
      by_label.emplace(set.configs[i].input_label + "|" + set.configs[i].obs_label, i);

  for (int i = 0; i < set.size(); ++i) {
    const Configuration& cfg = set.configs[i];
    if (cfg.observable.kind != ObservableKind::projector) continue;
    const std::string key = cfg.input_label + "|" + group_setting(cfg.obs_label);
    if (index.count(key)) continue;
    index.emplace(key, int(plans.size()));
    GroupPlan plan;
    for (const auto& member : observable_group(cfg.obs_label)) {
      auto it = by_label.find(cfg.input_label + "|" + member);
      if (it == by_label.end())
        throw NormalizationError("incomplete measurement group for input " +
                                 cfg.input_label + ", missing " + member);
      plan.members.push_back(it->second);
    }
    plans.push_back(std::move(plan));
  }
  return plans;
}

std::vector<double> group_probabilities(const ConfigSet& set, const GroupPlan& plan,
                                        const RealVector& y) {
  std::vector<double> p;
  p.reserve(plan.members.size());
  for (int idx : plan.members) {
    const double v = y[idx];
    if (v < -1e-9 || v > 1.0 + 1e-9)
      throw std::invalid_argument("predicted probability outside [0,1] for " +
                                  set.configs[idx].obs_label +
                                  "; process matrix is not a valid channel");
    p.push_back(std::clamp(v, 0.0, 1.0));
  }
  return p;
}

}  // namespace

Dataset simulate_counts(const ProcessMatrix& chi, const ConfigSet& set,
                        long long shots, std::uint64_t seed) {
  if (shots < 1) throw std::invalid_argument("shots must be >= 1");
  Dataset data;
  data.seed = seed;
  data.basis = chi.basis->tag;
  data.records.resize(set.size());

  const RealVector y = predict_expectations(chi, set);
  std::mt19937_64 rng(seed);

  // groups drawn in first-appearance order, records emitted in set order
  for (const auto& plan : plan_groups(set)) {
    const auto p = group_probabilities(set, plan, y);
    const auto counts = multinomial(rng, shots, p);
    for (size_t g = 0; g < plan.members.size(); ++g) {
      const int idx = plan.members[g];
      const Configuration& cfg = set.configs[idx];
      data.records[idx] = DataRecord{cfg.input_label, cfg.obs_label,
                                     double(counts[g]), shots, "count"};
    }
  }
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(double(shots)));
  for (int i = 0; i < set.size(); ++i) {
    const Configuration& cfg = set.configs[i];
    if (cfg.observable.kind != ObservableKind::expectation) continue;
    data.records[i] = DataRecord{cfg.input_label, cfg.obs_label,
                                 y[i] + gauss(rng), shots, "expectation"};
  }
  return data;
}

Dataset exact_dataset(const ProcessMatrix& chi, const ConfigSet& set) {
  Dataset data;
  data.basis = chi.basis->tag;
  const RealVector y = predict_expectations(chi, set);
  data.records.reserve(set.size());
  for (int i = 0; i < set.size(); ++i) {
    const Configuration& cfg = set.configs[i];
    const bool proj = cfg.observable.kind == ObservableKind::projector;
    data.records.push_back(DataRecord{cfg.input_label, cfg.obs_label, y[i], 0,
                                      proj ? "probability" : "expectation"});
  }
  return data;
}

Dataset normalize_counts(const Dataset& data) {
  Dataset out = data;
  std::unordered_map<std::string, size_t> by_label;
  for (size_t i = 0; i < data.records.size(); ++i)
    by_label.emplace(data.records[i].input + "|" + data.records[i].obs, i);

  std::unordered_map<std::string, double> totals;
  for (const auto& rec : data.records) {
    if (rec.kind != "count") continue;
    const std::string key = rec.input + "|" + group_setting(rec.obs);
    if (totals.count(key)) continue;
    double total = 0;
    for (const auto& member : observable_group(rec.obs)) {
      auto it = by_label.find(rec.input + "|" + member);
      if (it == by_label.end())
        throw NormalizationError("record (" + rec.input + ", " + rec.obs +
                                 ") lacks its complete group member " + member);
      total += data.records[it->second].value;
    }
    if (total <= 0)
      throw NormalizationError("zero total count in group of (" + rec.input +
                               ", " + rec.obs + ")");
    totals.emplace(key, total);
  }
  for (auto& rec : out.records) {
    if (rec.kind != "count") continue;
    rec.value /= totals.at(rec.input + "|" + group_setting(rec.obs));
    rec.kind = "probability";
  }
  return out;
}

ConfigSet select_random(const ConfigSet& parent, int m, std::uint64_t seed) {
  const int n = parent.size();
  if (m < 1 || m > n)
    throw std::invalid_argument("selection size out of range");
  std::vector<int> pool(n);
  for (int i = 0; i < n; ++i) pool[i] = i;
  std::mt19937_64 rng(seed);
  ConfigSet out;
  out.selection.reserve(m);
  for (int i = 0; i < m; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
    out.selection.push_back(pool[i]);
    out.configs.push_back(parent.configs[pool[i]]);
  }
  return out;
}

namespace {

const std::map<std::string, std::pair<std::string, std::vector<std::string>>>&
named_selection_table() {
  static const std::map<std::string, std::pair<std::string, std::vector<std::string>>>
      table{
          {"HVDR-RI-IR", {"HVDR", {"RI", "IR"}}},
          {"HVDR-DI-ID", {"HVDR", {"DI", "ID"}}},
          {"HVDR-RL", {"HVDR", {"RR", "RL", "LR", "LL"}}},
          {"HVDR-DAXDA", {"HVDR", {"DD", "DA", "AD", "AA"}}},
          {"VDR-RI-IR", {"VDR", {"RI", "IR"}}},
          {"VDR-DI-ID", {"VDR", {"DI", "ID"}}},
          {"VDR-RL", {"VDR", {"RR", "RL", "LR", "LL"}}},
          {"VDR-DA", {"VDR", {"DD", "DA", "AD", "AA"}}},
      };
  return table;
}

std::string canonical_selection_id(const std::string& id) {
  std::string s;
  for (char c : id) {
    if (c == ' ' || c == '{' || c == '}') continue;
    if (c == ',') c = '-';
    s += char(std::toupper(static_cast<unsigned char>(c)));
  }
  // "HVDRX..." from the "HVDR x {...}" spelling
  for (const char* prefix : {"HVDRX", "VDRX"}) {
    if (s.rfind(prefix, 0) == 0) {
      const size_t n = std::strlen(prefix);
      s = s.substr(0, n - 1) + "-" + s.substr(n);
      break;
    }
  }
  return s;
}

}  // namespace

std::vector<std::string> named_selection_ids() {
  std::vector<std::string> ids;
  for (const auto& [id, _] : named_selection_table()) ids.push_back(id);
  return ids;
}

ConfigSet select_named(const ConfigSet& parent, const std::string& id) {
  (void)parent;
  const auto& table = named_selection_table();
  const auto it = table.find(canonical_selection_id(id));
  if (it == table.end())
    throw std::invalid_argument("unknown named selection: " + id);
  const auto& [input_letters, obs_labels] = it->second;
  const StateLibrary& lib = state_library(2);
  ConfigSet out;
  for (const auto& in : product_labels(input_letters, 2))
    for (const auto& ob : obs_labels)
      out.configs.push_back(Configuration{lib.state(in), lib.observable(ob), in, ob});
  return out;
}

ConfigSet select_configs(const ConfigSet& parent, const std::string& spec) {
  if (spec == "all") return parent;
  if (spec.rfind("random:", 0) == 0) {
    const auto rest = spec.substr(7);
    const auto colon = rest.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("random selection needs random:m:seed");
    return select_random(parent, std::stoi(rest.substr(0, colon)),
                         std::stoull(rest.substr(colon + 1)));
  }
  if (spec.rfind("table1:", 0) == 0) return select_named(parent, spec.substr(7));
  throw std::invalid_argument("bad selection spec: " + spec);
}

ConfigSet random_pauli_config_set(int n_qubits, int n_inputs, int n_observables,
                                  std::uint64_t seed) {
  const StateLibrary& lib = state_library(n_qubits);
  std::vector<std::string> pauli_labels;
  for (int q = 0; q < n_qubits; ++q)
    for (char p : {'X', 'Y', 'Z'}) {
      std::string label(size_t(n_qubits), 'I');
      label[q] = p;
      pauli_labels.push_back(label);
    }
  if (n_observables < 1 || n_observables > int(pauli_labels.size()))
    throw std::invalid_argument("observable count out of range");
  if (n_inputs < 1) throw std::invalid_argument("need at least one input");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<std::pair<std::string, QState>> inputs;
  for (int i = 0; i < n_inputs; ++i) {
    Matrix rho(1, 1);
    rho(0, 0) = 1;
    for (int q = 0; q < n_qubits; ++q) {
      CVector k(2);
      k << Complex(gauss(rng), gauss(rng)), Complex(gauss(rng), gauss(rng));
      k /= k.norm();
      rho = Eigen::kroneckerProduct(rho, Matrix(k * k.adjoint())).eval();
    }
    inputs.emplace_back("rand" + std::to_string(i), QState{rho});
  }

  for (int i = 0; i < n_observables; ++i) {
    std::uniform_int_distribution<int> pick(i, int(pauli_labels.size()) - 1);
    std::swap(pauli_labels[i], pauli_labels[size_t(pick(rng))]);
  }
  pauli_labels.resize(size_t(n_observables));

  ConfigSet out;
  for (const auto& [in_label, rho] : inputs)
    for (const auto& ob : pauli_labels)
      out.configs.push_back(Configuration{rho, lib.observable(ob), in_label, ob});
  return out;
}

RealVector dataset_values(const Dataset& data, const ConfigSet& set) {
  std::unordered_map<std::string, double> values;
  for (const auto& rec : data.records) {
    if (rec.kind == "count")
      throw NormalizationError("dataset holds raw counts; normalize first");
    values.emplace(rec.input + "|" + rec.obs, rec.value);
  }
  RealVector y(set.size());
  for (int i = 0; i < set.size(); ++i) {
    const Configuration& cfg = set.configs[i];
    const auto direct = values.find(cfg.input_label + "|" + cfg.obs_label);
    if (direct != values.end()) {
      y[i] = direct->second;
      continue;
    }
    if (!is_ket_label(cfg.obs_label) ||
        cfg.obs_label.find('I') == std::string::npos)
      throw std::invalid_argument("dataset has no record for (" +
                                  cfg.input_label + ", " + cfg.obs_label + ")");
    // marginalize padded positions over the H/V records
    std::vector<std::string> expand{""};
    for (char c : cfg.obs_label) {
      std::vector<std::string> next;
      for (const auto& prefix : expand) {
        if (c == 'I') {
          next.push_back(prefix + 'H');
          next.push_back(prefix + 'V');
        } else {
          next.push_back(prefix + c);
        }
      }
      expand = std::move(next);
    }
    double total = 0;
    for (const auto& label : expand) {
      const auto it = values.find(cfg.input_label + "|" + label);
      if (it == values.end())
        throw std::invalid_argument("cannot marginalize (" + cfg.input_label +
                                    ", " + cfg.obs_label + "): missing " + label);
      total += it->second;
    }
    y[i] = total;
  }
  return y;
}

}  // namespace cqpt
