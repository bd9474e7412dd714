#pragma once

#include "cqpt/measmodel.hpp"

namespace cqpt {

// Constraint sets cannot be satisfied simultaneously (epsilon too small).
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// minimize ||vec chi||_1
// s.t.     ||y - Phi vec chi||_2 <= epsilon,  chi >= 0,  TP(chi) = I
//
// y and Phi carry the 1/sqrt(m) normalization; epsilon and the reported
// residual are in raw outcome units (sqrt(m) times the normalized residual),
// matching the sqrt(m)-sigma calibration rule.
struct RecoveryProblem {
  RealVector y;  // scaled outcomes, y_raw / sqrt(m)
  SensingMatrix phi;
  double epsilon = 0;  // bound on ||y_raw - sqrt(m) Phi vec chi||_2
};

// Scales y_raw by 1/sqrt(m) to match the sensing-matrix convention.
RecoveryProblem make_recovery_problem(const RealVector& y_raw, SensingMatrix phi,
                                      double epsilon);

struct SolverOptions {
  double penalty = 1.0;     // ADMM penalty, residual-balanced during the run
  int max_iters = 100000;
  double tol_primal = 1e-7;  // per sqrt(d^4) coordinate scale
  double tol_dual = 1e-7;
  double psd_eig_floor = 0.0;
};

struct RecoveryResult {
  ProcessMatrix chi_star;
  double objective = 0;  // sum of |chi_ab| in the recovery basis
  double residual = 0;   // raw outcome units, comparable to epsilon
  double epsilon = 0;
  int iterations = 0;
  bool converged = false;
  double min_eig = 0;
  double tp_residual = 0;
  int configurations = 0;  // rows of the sensing matrix used
};

// Modulus shrinkage, phase preserved.
CVector soft_threshold(const CVector& v, double tau);

// Frobenius-nearest PSD matrix: eigenvalues clamped at eig_floor.
Matrix project_psd(const Matrix& chi, double eig_floor = 0.0);

// Euclidean projection onto the trace-preservation affine set
// { chi : sum_ab chi_ab Gamma_b' Gamma_a = I_d }, precomputed per basis.
class TpProjector {
 public:
  explicit TpProjector(const OperatorBasis& basis);

  RealVector project(const RealVector& u) const;
  double residual(const RealVector& u) const;  // ||A u - b||_2

  const RealMatrix& constraint_matrix() const { return a_; }
  const RealVector& constraint_rhs() const { return b_; }

 private:
  RealMatrix a_;     // d^2 x d^4 real constraint map
  RealVector b_;     // coordinates of I_d
  RealMatrix pinv_;  // A^T (A A^T)^{-1}
};

Matrix project_tp(const Matrix& chi, const OperatorBasis& basis);

RecoveryResult solve_cqpt(const RecoveryProblem& problem,
                          const SolverOptions& opts = {});

// The least-squares argument error tracks the consensus residuals through
// the conditioning of the sensing map, so its default stopping is tighter.
inline SolverOptions ls_solver_defaults() {
  SolverOptions opts;
  opts.tol_primal = opts.tol_dual = 1e-12;
  return opts;
}

// Full-data baseline: minimize ||y - Phi vec chi||_2 subject to PSD + TP.
RecoveryResult solve_constrained_ls(const RecoveryProblem& problem,
                                    const SolverOptions& opts = ls_solver_defaults());

// epsilon = factor * sqrt(m) * sigma, sigma = per-configuration RMS residual
// of the full-data fit (its raw residual divided by sqrt of its row count).
double calibrate_epsilon(const RecoveryResult& chi_full, int m_selected,
                         double factor = 1.05);

}  // namespace cqpt
