#pragma once

#include <cstdint>
#include <map>
#include <memory>

#include "cqpt/qcore.hpp"

namespace cqpt {

struct NormalizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One experimental configuration: prepare `input`, measure `observable`.
struct Configuration {
  QState input;
  Observable observable;
  std::string input_label;
  std::string obs_label;
};

struct ConfigSet {
  std::vector<Configuration> configs;
  // Row indices into the parent set when this set was formed by selection
  // (C_sel); empty for generated sets.
  std::vector<int> selection;

  int size() const { return int(configs.size()); }
};

// Single-qubit ket letters: H, V (Z basis), D, A (X basis), R, L (Y basis).
// States are all n-fold products of the six kets. Observables are products
// over {H,V,D,A,R,L,I} (projectors, I = pad) plus Pauli strings over
// {I,X,Y,Z} (expectation kind), all-identity excluded.
struct StateLibrary {
  int n_qubits = 0;
  std::map<std::string, QState> states;
  std::map<std::string, Observable> observables;

  const QState& state(const std::string& label) const;
  const Observable& observable(const std::string& label) const;
};

const StateLibrary& state_library(int n_qubits);

// Inputs over {H,V,D,R}^n (outer loop), projector observables over
// {H,V,D,A,R,L}^n (inner loop); 576 configurations for n = 2.
ConfigSet full_config_set(int n_qubits = 2);

// Complete measurement group of a projector observable: both letters of the
// local basis substituted at every measured position. "RI" -> {RI, LI}.
std::vector<std::string> observable_group(const std::string& obs_label);
// Canonical setting key, one of Z/X/Y/I per position, e.g. "RV" -> "YZ".
std::string group_setting(const std::string& obs_label);

struct SensingMatrix {
  Matrix phi;  // m x d^4, row i = vec of Tr(Gamma_a rho_i Gamma_b' M_i)/sqrt(m)
  BasisPtr basis;
  std::shared_ptr<const ConfigSet> config_ref;
  int dim = 0;
};

SensingMatrix build_phi(const ConfigSet& set, BasisPtr basis);

// The same linear map expressed on the real Hermitian coordinates of chi
// (see herm_to_real); rows stay consistent with the complex phi.
RealMatrix real_sensing_matrix(const SensingMatrix& phi);

// y_i = Tr(S(rho_i) M_i); throws if an imaginary part exceeds 1e-8.
RealVector predict_expectations(const ProcessMatrix& chi, const ConfigSet& set);

struct DataRecord {
  std::string input;
  std::string obs;
  double value = 0;
  long long shots = 0;
  std::string kind;  // "count" | "probability" | "expectation"
};

struct Dataset {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string basis;
  std::vector<DataRecord> records;
};

// Multinomial counts per complete measurement group for projector
// observables; expectation observables get additive Gaussian noise of
// standard deviation 1/sqrt(shots). Deterministic given seed.
Dataset simulate_counts(const ProcessMatrix& chi, const ConfigSet& set,
                        long long shots, std::uint64_t seed);

// Noise-free probabilities/expectations (shots recorded as 0).
Dataset exact_dataset(const ProcessMatrix& chi, const ConfigSet& set);

// count records -> probabilities, dividing by the group total.
Dataset normalize_counts(const Dataset& data);

ConfigSet select_random(const ConfigSet& parent, int m, std::uint64_t seed);

// Named configuration sets over {RI,IR}/{DI,ID} single-body projectors and
// the RL/DA two-qubit settings, e.g. "HVDR-RI-IR" (m=32), "VDR-RL" (m=36).
ConfigSet select_named(const ConfigSet& parent, const std::string& id);
std::vector<std::string> named_selection_ids();

// Parses "random:m:seed", "table1:<id>" or "all".
ConfigSet select_configs(const ConfigSet& parent, const std::string& spec);

// Random product-state inputs paired with distinct single-body Pauli
// expectation observables (m = n_inputs * n_observables).
ConfigSet random_pauli_config_set(int n_qubits, int n_inputs, int n_observables,
                                  std::uint64_t seed);

// Resolves configuration outcomes from a normalized dataset; identity-padded
// projectors are summed out of the H/V records of the padded positions.
RealVector dataset_values(const Dataset& data, const ConfigSet& set);

}  // namespace cqpt
