#include "cqpt/qcore.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <unsupported/Eigen/KroneckerProduct>

namespace cqpt {

namespace {

bool is_power_of_two(int d) { return d >= 2 && (d & (d - 1)) == 0; }

// sum_a chi(a,b) Gamma_a for every column b; the workhorse behind both the
// channel action and the trace-preservation residual.
std::vector<Matrix> column_operators(const Matrix& chi, const OperatorBasis& basis) {
  const int nb = basis.size();
  const int d = basis.dim();
  std::vector<Matrix> cols(nb, Matrix::Zero(d, d));
  for (int b = 0; b < nb; ++b)
    for (int a = 0; a < nb; ++a) {
      const Complex c = chi(a, b);
      if (c != Complex(0, 0)) cols[b] += c * basis.elements[a];
    }
  return cols;
}

}  // namespace

UnitaryGate make_unitary(Matrix m, std::string label) {
  if (m.rows() != m.cols()) throw DimensionError("unitary must be square");
  const int d = int(m.rows());
  if (!is_power_of_two(d))
    throw std::invalid_argument("gate dimension must be 2^n, got " + std::to_string(d));
  const double err = (m.adjoint() * m - Matrix::Identity(d, d)).norm();
  if (err > 1e-12)
    throw std::invalid_argument("matrix is not unitary, ||U'U - I|| = " + std::to_string(err));
  return UnitaryGate{std::move(m), std::move(label)};
}

QState make_state(Matrix rho) {
  if (rho.rows() != rho.cols()) throw DimensionError("density matrix must be square");
  if ((rho - rho.adjoint()).norm() > 1e-12)
    throw std::invalid_argument("density matrix is not Hermitian");
  if (std::abs(rho.trace() - Complex(1, 0)) > 1e-12)
    throw std::invalid_argument("density matrix trace differs from 1");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (rho + rho.adjoint()),
                                            Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-12)
    throw std::invalid_argument("density matrix has a negative eigenvalue");
  return QState{std::move(rho)};
}

QState pure_state(const CVector& ket) {
  CVector k = ket / ket.norm();
  return QState{k * k.adjoint()};
}

Observable make_observable(Matrix m, ObservableKind kind, std::string label) {
  if ((m - m.adjoint()).norm() > 1e-12)
    throw std::invalid_argument("observable is not Hermitian: " + label);
  if (kind == ObservableKind::projector && (m * m - m).norm() > 1e-10)
    throw std::invalid_argument("projector observable fails M^2 = M: " + label);
  return Observable{std::move(m), kind, std::move(label)};
}

bool same_basis(const OperatorBasis& a, const OperatorBasis& b, double tol) {
  if (a.size() != b.size() || a.dim() != b.dim()) return false;
  for (int i = 0; i < a.size(); ++i)
    if ((a.elements[i] - b.elements[i]).norm() > tol) return false;
  return true;
}

ProcessMatrix make_process_matrix(Matrix chi, BasisPtr basis) {
  const int nb = basis->size();
  if (chi.rows() != nb || chi.cols() != nb)
    throw DimensionError("process matrix must be d^2 x d^2 for the given basis");
  return ProcessMatrix{require_hermitian(std::move(chi)), std::move(basis),
                       int(std::lround(std::sqrt(double(nb))))};
}

Matrix require_hermitian(const Matrix& chi, double tol) {
  const double asym = (chi - chi.adjoint()).norm();
  if (asym > tol)
    throw std::invalid_argument("matrix asymmetry " + std::to_string(asym) +
                                " exceeds Hermiticity tolerance");
  return 0.5 * (chi + chi.adjoint());
}

double nuclear_norm(const Matrix& a) {
  return Eigen::JacobiSVD<Matrix>(a).singularValues().sum();
}

CVector vec_chi(const Matrix& chi) {
  if (chi.rows() != chi.cols()) throw DimensionError("vec_chi expects a square matrix");
  return Eigen::Map<const CVector>(chi.data(), chi.size());
}

Matrix unvec_chi(const CVector& v) {
  const int n = int(std::lround(std::sqrt(double(v.size()))));
  if (Eigen::Index(n) * n != v.size())
    throw DimensionError("unvec_chi needs a square-length vector");
  return Eigen::Map<const Matrix>(v.data(), n, n);
}

RealVector herm_to_real(const Matrix& chi) {
  const int n = int(chi.rows());
  RealVector u(n * n);
  int k = 0;
  for (int i = 0; i < n; ++i) u[k++] = chi(i, i).real();
  const double s = std::numbers::sqrt2;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < j; ++i) {
      u[k++] = s * chi(i, j).real();
      u[k++] = s * chi(i, j).imag();
    }
  return u;
}

Matrix herm_from_real(const RealVector& u) {
  const int n = int(std::lround(std::sqrt(double(u.size()))));
  if (Eigen::Index(n) * n != u.size())
    throw DimensionError("hermitian coordinate vector has non-square length");
  Matrix chi(n, n);
  int k = 0;
  for (int i = 0; i < n; ++i) chi(i, i) = u[k++];
  const double s = 1.0 / std::numbers::sqrt2;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < j; ++i) {
      const Complex z(u[k] * s, u[k + 1] * s);
      chi(i, j) = z;
      chi(j, i) = std::conj(z);
      k += 2;
    }
  return chi;
}

BasisPtr pauli_basis(int n_qubits) {
  if (n_qubits < 1) throw std::invalid_argument("pauli_basis needs n >= 1");
  static const std::array<Matrix, 4> sigma = [] {
    std::array<Matrix, 4> s;
    for (auto& m : s) m = Matrix(2, 2);
    s[0] << 1, 0, 0, 1;
    s[1] << 0, 1, 1, 0;
    s[2] << 0, Complex(0, -1), Complex(0, 1), 0;
    s[3] << 1, 0, 0, -1;
    return s;
  }();

  const int count = 1 << (2 * n_qubits);
  const double d = double(1 << n_qubits);
  auto basis = std::make_shared<OperatorBasis>();
  basis->tag = "pauli:" + std::to_string(n_qubits);
  basis->elements.reserve(count);
  for (int idx = 0; idx < count; ++idx) {
    // base-4 digits, first qubit most significant: I...I first
    Matrix p = sigma[(idx >> (2 * (n_qubits - 1))) & 3];
    for (int q = n_qubits - 2; q >= 0; --q)
      p = Eigen::kroneckerProduct(p, sigma[(idx >> (2 * q)) & 3]).eval();
    basis->elements.push_back(p / std::sqrt(d));
  }
  return basis;
}

BasisPtr gate_basis(const UnitaryGate& u) {
  const int d = int(u.matrix.rows());
  const int n_qubits = int(std::lround(std::log2(double(d))));
  const BasisPtr paulis = pauli_basis(n_qubits);

  auto basis = std::make_shared<OperatorBasis>();
  basis->tag = "gate:" + u.label;
  basis->elements.push_back(u.matrix / std::sqrt(double(d)));
  for (const Matrix& cand : paulis->elements) {
    if (basis->size() == d * d) break;
    Matrix v = cand;
    for (const Matrix& g : basis->elements)
      v -= (g.adjoint() * v).trace() * g;
    const double nrm = v.norm();
    if (nrm < 1e-10) continue;  // candidate already spanned
    basis->elements.push_back(v / nrm);
  }
  if (basis->size() != d * d)
    throw std::runtime_error("gate basis completion failed");
  return basis;
}

UnitaryGate cz_gate() {
  Matrix m = Matrix::Identity(4, 4);
  m(3, 3) = -1;
  return UnitaryGate{std::move(m), "CZ"};
}

UnitaryGate qft_gate(int dim) {
  Matrix m(dim, dim);
  const double w = 2.0 * std::numbers::pi / double(dim);
  for (int j = 0; j < dim; ++j)
    for (int k = 0; k < dim; ++k)
      m(j, k) = std::polar(1.0 / std::sqrt(double(dim)), w * j * k);
  return UnitaryGate{std::move(m), "QFT" + std::to_string(dim)};
}

UnitaryGate identity_gate(int dim) {
  return UnitaryGate{Matrix::Identity(dim, dim), "I" + std::to_string(dim)};
}

UnitaryGate gate_by_label(const std::string& label) {
  if (label == "CZ") return cz_gate();
  if (label.rfind("QFT", 0) == 0) {
    const int d = std::stoi(label.substr(3));
    if (!is_power_of_two(d)) throw std::invalid_argument("bad QFT dimension: " + label);
    return qft_gate(d);
  }
  if (label.rfind('I', 0) == 0) {
    const int d = std::stoi(label.substr(1));
    if (!is_power_of_two(d)) throw std::invalid_argument("bad identity dimension: " + label);
    return identity_gate(d);
  }
  throw std::invalid_argument("unknown gate label: " + label);
}

BasisPtr basis_by_tag(const std::string& tag) {
  const auto colon = tag.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("bad basis tag: " + tag);
  const std::string kind = tag.substr(0, colon);
  const std::string arg = tag.substr(colon + 1);
  if (kind == "pauli") return pauli_basis(std::stoi(arg));
  if (kind == "gate") return gate_basis(gate_by_label(arg));
  throw std::invalid_argument("bad basis tag: " + tag);
}

ProcessMatrix chi_from_kraus(const std::vector<Matrix>& kraus, BasisPtr basis) {
  if (kraus.empty()) throw std::invalid_argument("empty Kraus set");
  const int d = basis->dim();
  Matrix tp = Matrix::Zero(d, d);
  for (const Matrix& k : kraus) {
    if (k.rows() != d || k.cols() != d)
      throw DimensionError("Kraus operator dimension mismatch");
    tp += k.adjoint() * k;
  }
  const double tp_err = (tp - Matrix::Identity(d, d)).norm();
  if (tp_err > 1e-8) throw NotTpError(tp_err);

  const int nb = basis->size();
  Matrix chi = Matrix::Zero(nb, nb);
  for (const Matrix& k : kraus) {
    CVector c(nb);
    for (int a = 0; a < nb; ++a)
      c[a] = (basis->elements[a].adjoint() * k).trace();
    chi += c * c.adjoint();
  }
  return ProcessMatrix{std::move(chi), std::move(basis), d};
}

ProcessMatrix chi_from_unitary(const UnitaryGate& u, BasisPtr basis) {
  return chi_from_kraus({u.matrix}, std::move(basis));
}

ProcessMatrix chi_identity(BasisPtr basis) {
  const int d = basis->dim();
  return chi_from_unitary(identity_gate(d), std::move(basis));
}

ProcessMatrix chi_depolarizing(BasisPtr basis) {
  const int nb = basis->size();
  const int d = basis->dim();
  return ProcessMatrix{Matrix::Identity(nb, nb) / double(d), std::move(basis), d};
}

QState apply_channel(const ProcessMatrix& chi, const QState& rho) {
  const int d = chi.basis->dim();
  if (rho.rho.rows() != d) throw DimensionError("state dimension mismatch");
  const auto cols = column_operators(chi.chi, *chi.basis);
  Matrix out = Matrix::Zero(d, d);
  for (int b = 0; b < chi.basis->size(); ++b)
    out += cols[b] * rho.rho * chi.basis->elements[b].adjoint();
  return QState{std::move(out)};
}

ProcessMatrix change_basis(const ProcessMatrix& chi, BasisPtr target) {
  if (target->dim() != chi.basis->dim())
    throw DimensionError("basis dimension mismatch in change_basis");
  if (same_basis(*chi.basis, *target))
    return ProcessMatrix{chi.chi, std::move(target), chi.dim};
  const int nb = target->size();
  Matrix t(nb, nb);
  for (int a = 0; a < nb; ++a)
    for (int b = 0; b < nb; ++b)
      t(a, b) = (target->elements[a].adjoint() * chi.basis->elements[b]).trace();
  Matrix out = t * chi.chi * t.adjoint();
  return ProcessMatrix{0.5 * (out + out.adjoint()), std::move(target), chi.dim};
}

double process_fidelity(const ProcessMatrix& a, const ProcessMatrix& b) {
  if (a.dim != b.dim) throw DimensionError("process dimension mismatch");
  const ProcessMatrix bb = change_basis(b, a.basis);
  const Matrix an = a.chi / a.chi.trace().real();
  const Matrix bn = bb.chi / bb.chi.trace().real();
  // [Tr sqrt(sqrt(a) b sqrt(a))]^2 = ||sqrt(a) sqrt(b)||_nuclear^2
  const double f = nuclear_norm(psd_sqrt(an) * psd_sqrt(bn));
  return std::min(1.0, f * f);
}

double purity(const ProcessMatrix& chi) {
  const double d = double(chi.dim);
  if (std::abs(chi.chi.trace().real() - d) > 1e-6)
    throw std::invalid_argument("purity expects Tr(chi) = d");
  // Tr(chi^2) = ||chi||_fro^2 for Hermitian chi
  return chi.chi.squaredNorm() / (d * d);
}

CptpReport check_cptp(const ProcessMatrix& chi) {
  const Matrix h = 0.5 * (chi.chi + chi.chi.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
  const auto cols = column_operators(h, *chi.basis);
  const int d = chi.basis->dim();
  Matrix tp = Matrix::Zero(d, d);
  for (int b = 0; b < chi.basis->size(); ++b)
    tp += chi.basis->elements[b].adjoint() * cols[b];
  return CptpReport{eig.eigenvalues().minCoeff(),
                    (tp - Matrix::Identity(d, d)).norm()};
}

Matrix psd_sqrt(const Matrix& a, double tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (a + a.adjoint()));
  if (eig.eigenvalues().minCoeff() < -tol)
    throw std::invalid_argument("matrix is not PSD within tolerance");
  // eigenvalue dust below the relative noise floor is treated as exact rank
  // deficiency; sqrt would otherwise amplify it to ~1e-8
  const double cut = std::max(eig.eigenvalues().maxCoeff(), 0.0) * 1e-12;
  RealVector roots(eig.eigenvalues().size());
  for (Eigen::Index i = 0; i < roots.size(); ++i)
    roots[i] = eig.eigenvalues()[i] > cut ? std::sqrt(eig.eigenvalues()[i]) : 0.0;
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().adjoint();
}

}  // namespace cqpt
