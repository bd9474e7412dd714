#pragma once

#include <complex>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cqpt {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// Thrown when a Kraus set fails the trace-preservation check.
struct NotTpError : std::runtime_error {
  double residual;
  explicit NotTpError(double r)
      : std::runtime_error("Kraus set is not trace preserving, residual " +
                           std::to_string(r)),
        residual(r) {}
};

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct UnitaryGate {
  Matrix matrix;      // d x d, U'U = I
  std::string label;  // e.g. "CZ", "QFT4", "I4"
};

// Validates unitarity (1e-12 Frobenius) and d = 2^n.
UnitaryGate make_unitary(Matrix m, std::string label);

struct QState {
  Matrix rho;  // d x d density matrix
};

// Validates Hermiticity, unit trace and eigenvalues >= -1e-12.
QState make_state(Matrix rho);
QState pure_state(const CVector& ket);

enum class ObservableKind { projector, expectation };

struct Observable {
  Matrix matrix;  // d x d Hermitian
  ObservableKind kind = ObservableKind::projector;
  std::string label;
};

Observable make_observable(Matrix m, ObservableKind kind, std::string label);

// Orthonormal operator basis {Gamma_a}: Tr(Gamma_b' Gamma_a) = delta_ab.
struct OperatorBasis {
  std::vector<Matrix> elements;  // d^2 matrices, each d x d
  std::string tag;               // "pauli:n" or "gate:<label>"

  int dim() const { return elements.empty() ? 0 : int(elements[0].rows()); }
  int size() const { return int(elements.size()); }
};

using BasisPtr = std::shared_ptr<const OperatorBasis>;

bool same_basis(const OperatorBasis& a, const OperatorBasis& b, double tol = 1e-12);

// Process matrix chi in a tagged operator basis; the channel acts as
//   S(rho) = sum_ab chi_ab Gamma_a rho Gamma_b'.
struct ProcessMatrix {
  Matrix chi;  // d^2 x d^2 Hermitian
  BasisPtr basis;
  int dim = 0;  // d
};

ProcessMatrix make_process_matrix(Matrix chi, BasisPtr basis);

struct CptpReport {
  double min_eigenvalue;
  double tp_residual;  // || sum_ab chi_ab Gamma_b' Gamma_a - I ||_fro
};

// ---------------------------------------------------------------------------
// Norms (Eigen expression friendly)
// ---------------------------------------------------------------------------

template <typename Derived>
double l1_norm(const Eigen::MatrixBase<Derived>& x) {
  return x.cwiseAbs().sum();
}

template <typename Derived>
double l2_norm(const Eigen::MatrixBase<Derived>& x) {
  return x.norm();
}

template <typename Derived>
double frobenius_norm(const Eigen::MatrixBase<Derived>& x) {
  return x.norm();
}

double nuclear_norm(const Matrix& a);

// ---------------------------------------------------------------------------
// Vectorization (column-major) and Hermitian real coordinates
// ---------------------------------------------------------------------------

CVector vec_chi(const Matrix& chi);
Matrix unvec_chi(const CVector& v);

// Isometric real parametrization of Hermitian D x D matrices:
// coords = (diagonal, sqrt(2) Re chi_ij, sqrt(2) Im chi_ij) for i < j,
// so that ||coords||_2 = ||chi||_fro.
RealVector herm_to_real(const Matrix& chi);
Matrix herm_from_real(const RealVector& u);

// ---------------------------------------------------------------------------
// Bases
// ---------------------------------------------------------------------------

// Tensor products of {I,X,Y,Z}/sqrt(2), lexicographic, identity first.
BasisPtr pauli_basis(int n_qubits);

// Gamma_1 = U/sqrt(d), completed by Gram-Schmidt over the Pauli elements in
// lexicographic order; the ideal channel of U is 1-sparse in this basis.
BasisPtr gate_basis(const UnitaryGate& u);

// ---------------------------------------------------------------------------
// Standard gates
// ---------------------------------------------------------------------------

UnitaryGate cz_gate();
UnitaryGate qft_gate(int dim);       // label "QFT<d>"
UnitaryGate identity_gate(int dim);  // label "I<d>"
// Resolves "CZ", "QFT4", "I8", ... ; throws std::invalid_argument otherwise.
UnitaryGate gate_by_label(const std::string& label);
// Resolves a basis tag "pauli:n" or "gate:<label>".
BasisPtr basis_by_tag(const std::string& tag);

// ---------------------------------------------------------------------------
// Channel construction and application
// ---------------------------------------------------------------------------

ProcessMatrix chi_from_kraus(const std::vector<Matrix>& kraus, BasisPtr basis);
ProcessMatrix chi_from_unitary(const UnitaryGate& u, BasisPtr basis);
ProcessMatrix chi_identity(BasisPtr basis);
ProcessMatrix chi_depolarizing(BasisPtr basis);  // chi = I_{d^2}/d in any basis

QState apply_channel(const ProcessMatrix& chi, const QState& rho);
ProcessMatrix change_basis(const ProcessMatrix& chi, BasisPtr target);

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

// Jamiolkowski-state fidelity of the trace-normalized process matrices;
// reduces to |Tr(U'V)|^2/d^2 for unitary pairs.
double process_fidelity(const ProcessMatrix& a, const ProcessMatrix& b);

// P = Tr(chi^2)/d^2, basis invariant; 1 for unitary channels.
double purity(const ProcessMatrix& chi);

CptpReport check_cptp(const ProcessMatrix& chi);

// Hermitian square root of a PSD matrix (eigenvalues clamped at 0);
// eigenvalues below -tol are rejected.
Matrix psd_sqrt(const Matrix& a, double tol = 1e-8);

// Symmetrizes (chi+chi')/2 when the asymmetry is below tol, throws otherwise.
Matrix require_hermitian(const Matrix& chi, double tol = 1e-10);

}  // namespace cqpt
