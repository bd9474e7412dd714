#include "cqpt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace cqpt {

SparsitySpectrum sorted_spectrum(const ProcessMatrix& chi,
                                 const std::vector<double>& thresholds) {
  RealVector mags = vec_chi(chi.chi).cwiseAbs();
  std::sort(mags.data(), mags.data() + mags.size(), std::greater<double>());
  if (mags[0] <= 0) throw std::invalid_argument("spectrum of a zero matrix");
  mags /= mags[0];
  SparsitySpectrum out;
  out.magnitudes = mags;
  for (double t : thresholds) {
    int count = 0;
    while (count < mags.size() && mags[count] > t) ++count;
    out.threshold_counts[t] = count;
  }
  return out;
}

ProcessMatrix s_sparse_approx(const ProcessMatrix& chi, int s) {
  const Eigen::Index n = chi.chi.size();
  if (s < 1 || s > n) throw std::invalid_argument("sparsity level out of range");
  std::vector<Eigen::Index> order(n);
  for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
  const Complex* data = chi.chi.data();
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     return std::abs(data[a]) > std::abs(data[b]);
                   });
  Matrix kept = Matrix::Zero(chi.chi.rows(), chi.chi.cols());
  for (int k = 0; k < s; ++k) kept.data()[order[k]] = data[order[k]];
  return ProcessMatrix{std::move(kept), chi.basis, chi.dim};
}

std::pair<double, double> recovery_constants(double delta) {
  const double s2 = std::numbers::sqrt2;
  if (!(delta >= 0) || delta >= s2 - 1)
    throw std::invalid_argument(
        "recovery constants are defined for 0 <= delta < sqrt(2)-1");
  const double den = 1.0 - (s2 + 1.0) * delta;
  return {(2.0 + (2.0 * s2 - 2.0) * delta) / den,
          4.0 * std::sqrt(1.0 + delta) / den};
}

BoundReport recovery_bound(const ProcessMatrix& chi0, int s, double epsilon,
                           double delta, double c0) {
  BoundReport rep;
  std::tie(rep.c1, rep.c2) = recovery_constants(delta);
  rep.s = s;
  rep.epsilon = epsilon;
  rep.c0_reference = c0;
  const ProcessMatrix approx = s_sparse_approx(chi0, s);
  rep.approx_error_l1 = l1_norm(vec_chi(approx.chi) - vec_chi(chi0.chi));
  rep.bound_value = rep.c1 / std::sqrt(double(s)) * rep.approx_error_l1 +
                    rep.c2 * epsilon;
  const double big_n = double(chi0.chi.size());
  rep.m_ref = s < big_n
                  ? (long long)std::ceil(c0 * s * std::log(big_n / double(s)))
                  : 0;
  return rep;
}

SensingMatrix hermitian_identity_sensing(BasisPtr basis) {
  const int nb = basis->size();
  const Eigen::Index n = Eigen::Index(nb) * nb;
  SensingMatrix out;
  out.phi = Matrix(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    RealVector e = RealVector::Zero(n);
    e[k] = 1.0;
    const Matrix basis_element = herm_from_real(e);
    out.phi.row(k) = vec_chi(basis_element.transpose()).transpose();
  }
  out.dim = basis->dim();
  out.basis = std::move(basis);
  return out;
}

RipEstimate empirical_rip(const SensingMatrix& phi, int s, int trials,
                          std::uint64_t seed) {
  const Eigen::Index n = phi.phi.cols();
  const Eigen::Index m = phi.phi.rows();
  if (s < 1 || s > n) throw std::invalid_argument("sparsity level out of range");
  if (trials < 1) throw std::invalid_argument("need at least one trial");

  double worst = 0;
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL * (uint64_t(t) + 1));
    std::normal_distribution<double> gauss(0.0, 1.0);

    // support prefixes of two seeded permutations keep the trial nested in s
    std::vector<Eigen::Index> sup1(n), sup2(n);
    for (Eigen::Index i = 0; i < n; ++i) sup1[i] = sup2[i] = i;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
      std::swap(sup1[i], sup1[pick(rng)]);
    }
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
      std::swap(sup2[i], sup2[pick(rng)]);
    }

    CVector x1 = CVector::Zero(n), x2 = CVector::Zero(n);
    CVector p1 = CVector::Zero(m), p2 = CVector::Zero(m);
    const double isq = 1.0 / std::numbers::sqrt2;
    for (int j = 0; j < s; ++j) {
      const Complex e1(gauss(rng) * isq, gauss(rng) * isq);
      const Complex e2(gauss(rng) * isq, gauss(rng) * isq);
      x1[sup1[j]] += e1;
      p1 += e1 * phi.phi.col(sup1[j]);
      x2[sup2[j]] += e2;
      p2 += e2 * phi.phi.col(sup2[j]);

      const double den = (x1 - x2).squaredNorm();
      if (den < 1e-30) continue;
      const double ratio = (p1 - p2).squaredNorm() / den;
      worst = std::max(worst, std::abs(ratio - 1.0));
    }
  }
  return RipEstimate{worst, s, trials, seed};
}

ConcentrationBounds concentration_bounds(const SensingMatrix& phi, double delta) {
  ConcentrationBounds out;
  const Eigen::Index m = phi.phi.rows();
  if (m == 0) throw std::invalid_argument("empty sensing matrix");

  // rank-one rows: lambda_max(phi_i phi_i') = ||phi_i||^2, annihilator gives 0
  double max_row = 0;
  for (Eigen::Index i = 0; i < m; ++i)
    max_row = std::max(max_row, phi.phi.row(i).squaredNorm());
  out.w_u = double(m) * max_row;
  out.w_l = 0;

  // Gram spectrum restricted to the tangent space of the TP affine set
  const RealMatrix phi_u = real_sensing_matrix(phi);
  TpProjector tp(*phi.basis);
  Eigen::JacobiSVD<RealMatrix> svd(tp.constraint_matrix(), Eigen::ComputeFullV);
  const double cut = svd.singularValues()[0] * 1e-12;
  int rank = 0;
  while (rank < svd.singularValues().size() && svd.singularValues()[rank] > cut)
    ++rank;
  const RealMatrix tangent = svd.matrixV().rightCols(phi_u.cols() - rank);
  const RealMatrix restricted = tangent.transpose() *
                                (phi_u.transpose() * phi_u) * tangent;
  Eigen::SelfAdjointEigenSolver<RealMatrix> eig(restricted, Eigen::EigenvaluesOnly);
  out.u = eig.eigenvalues().maxCoeff();
  out.l = eig.eigenvalues().minCoeff();
  out.ratio_ok =
      out.l > 0 && out.u / out.l < (1.0 + delta) / (1.0 - delta);
  return out;
}

ConcentrationBounds concentration_bounds(const ConfigSet& configs, BasisPtr basis,
                                         double delta) {
  return concentration_bounds(build_phi(configs, std::move(basis)), delta);
}

double rip_failure_bound(double m, int s, double delta, double eps_margin,
                         double w_u, double w_l, double big_n) {
  if (!(delta > 0) || delta >= 1)
    throw std::invalid_argument("delta must be in (0,1)");
  if (!(w_u > w_l)) throw std::invalid_argument("requires w_u > w_l");
  if (s < 1 || big_n < s) throw std::invalid_argument("requires 1 <= s <= N");
  if (m < 0 || eps_margin < 0)
    throw std::invalid_argument("m and the margin must be nonnegative");
  const double spread = (w_u - w_l) * (w_u - w_l);
  const double exponent =
      -2.0 * m * (delta / 2.0 + eps_margin) * (delta / 2.0 + eps_margin) / spread +
      double(s) * (std::log(std::numbers::e * big_n / double(s)) +
                   std::log(12.0 / delta));
  return std::clamp(2.0 * std::exp(exponent), 0.0, 1.0);
}

CertificationReport sparsity_certification(
    const std::vector<ProcessMatrix>& estimates, double threshold) {
  if (estimates.size() < 2)
    throw std::invalid_argument("certification needs at least two estimates");
  for (size_t i = 1; i < estimates.size(); ++i)
    if (!same_basis(*estimates[i].basis, *estimates[0].basis, 1e-10))
      throw std::invalid_argument("estimates expressed in different bases");
  CertificationReport rep;
  for (size_t i = 0; i + 1 < estimates.size(); ++i)
    rep.increments.push_back(
        l1_norm(vec_chi(estimates[i + 1].chi) - vec_chi(estimates[i].chi)));
  rep.certified = rep.increments.back() < threshold;
  return rep;
}

}  // namespace cqpt
