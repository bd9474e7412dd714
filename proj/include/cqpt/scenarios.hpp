#pragma once

#include <array>

#include "cqpt/analysis.hpp"

namespace cqpt {

// System-environment interaction H = I_e (x) H_sys + gamma * H_tilde with
// ||H_tilde||_2 = 1; the channel is the partial trace of exp(-iHt) over an
// environment prepared in |0>.
struct EnvironmentCoupling {
  double gamma = 0;
  Matrix h_tilde;  // Hermitian on env (x) system, unit spectral norm
  int env_dim = 2;
  double evolution_time = 1.0;
  std::uint64_t seed = 0;
};

EnvironmentCoupling random_coupling(int sys_dim, int env_dim, std::uint64_t seed,
                                    double gamma, double evolution_time = 1.0);

// Kraus blocks K_e = (<e| (x) I) exp(-iHt) (|0> (x) I), chi in the gate
// basis of the ideal unitary.
ProcessMatrix dilated_unitary_channel(const UnitaryGate& ideal,
                                      const EnvironmentCoupling& coupling);

// Two-qubit QFT coupled to the environment.
ProcessMatrix qft_env_channel(const EnvironmentCoupling& coupling);

ProcessMatrix near_identity_channel(int n_qubits, double strength,
                                    std::uint64_t seed, int env_dim = 2);

// Bisects the coupling magnitude (fixed t = 1) until the channel fidelity to
// the ideal unitary hits the target; the fidelity decreases with gamma.
EnvironmentCoupling calibrate_coupling(const UnitaryGate& ideal, double target_fidelity,
                                       std::uint64_t seed, int env_dim = 2,
                                       double tolerance = 0.005);

// (1-lambda) chi_U + lambda chi_depol with lambda bisected so the purity
// matches the target within 1e-6.
ProcessMatrix cz_decohered(double target_purity);

enum class ScenarioKind { cz_mixture, qft_env, near_identity };

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::cz_mixture;
  double target_purity = 0.91;  // cz_mixture
  double gamma = 0;             // qft_env / near_identity coupling magnitude
  double target_fidelity = 0;   // when > 0, the coupling is calibrated to it
  int env_dim = 2;
  int n_qubits = 2;
  long long shots = 0;  // 0 = noise free
  std::uint64_t seed = 0;
};

ProcessMatrix build_scenario_channel(const ScenarioConfig& config);
UnitaryGate scenario_ideal_gate(const ScenarioConfig& config);

// ---------------------------------------------------------------------------
// Local correction search
// ---------------------------------------------------------------------------

struct CorrectionSearchOptions {
  int restarts = 20;
  int max_iters = 800;
  std::uint64_t seed = 1;
  // gains below this return identity corrections; noise-level wiggles on a
  // reconstructed estimate are not identified rotations
  double min_gain = 1e-4;
};

struct LocalCorrection {
  double fidelity = 0;             // best F(U_ideal, post o S o pre)
  std::array<double, 12> angles{};  // zyz angles of A,B (post) and C,D (pre)
  Matrix post;                     // A (x) B
  Matrix pre;                      // C (x) D
  bool improved = false;
};

// Maximizes F(U_ideal, (A(x)B) o S o (C(x)D)) over single-qubit unitaries by
// seeded Nelder-Mead restarts; never returns a fidelity below the input's.
LocalCorrection local_correction_search(const ProcessMatrix& chi,
                                        const UnitaryGate& ideal,
                                        const CorrectionSearchOptions& opts = {});

ProcessMatrix apply_local_corrections(const ProcessMatrix& chi, const Matrix& post,
                                      const Matrix& pre);

// ---------------------------------------------------------------------------
// Convergence experiment (fidelity vs configuration count)
// ---------------------------------------------------------------------------

struct ExperimentOptions {
  int trials = 50;
  double epsilon_factor = 1.05;
  SolverOptions solver{1.0, 30000, 1e-6, 1e-6, 0.0};   // per-trial solves
  SolverOptions full_solver = ls_solver_defaults();    // full-data baseline
  int threads = 0;  // 0: QPT_THREADS env var, then hardware concurrency
};

struct ExperimentRow {
  int m = 0;
  int trials = 0;
  int failed = 0;
  double f_full_mean = 0;
  double f_full_std = 0;
  double f_ideal_mean = 0;
};

struct ExperimentReport {
  ScenarioConfig scenario;
  std::vector<ExperimentRow> rows;
};

// Builds the full dataset once, then reconstructs from `trials` random
// m-configuration selections per entry of m_list.
ExperimentReport convergence_experiment(const ScenarioConfig& config,
                                        const std::vector<int>& m_list,
                                        const ExperimentOptions& opts = {});

// Uniform Haar-like CPTP channel from a random Kraus set; test utility.
ProcessMatrix random_cptp(BasisPtr basis, int kraus_count, std::uint64_t seed);

}  // namespace cqpt
