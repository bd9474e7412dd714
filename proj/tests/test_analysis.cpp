#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>
#include <random>

#include "cqpt/analysis.hpp"
#include "cqpt/scenarios.hpp"

using namespace cqpt;

namespace {

ProcessMatrix random_process(BasisPtr basis, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int nb = basis->size();
  Matrix chi(nb, nb);
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j) chi(i, j) = Complex(gauss(rng), gauss(rng));
  chi = 0.5 * (chi + chi.adjoint()).eval();
  const int d = int(std::lround(std::sqrt(double(nb))));
  return ProcessMatrix{chi, std::move(basis), d};
}

}  // namespace

TEST_CASE("sorted spectrum of the ideal CZ and of a zero matrix") {
  const auto basis = gate_basis(cz_gate());
  const ProcessMatrix cz = chi_from_unitary(cz_gate(), basis);
  const SparsitySpectrum spec = sorted_spectrum(cz);
  CHECK(spec.magnitudes[0] == doctest::Approx(1.0));
  CHECK(spec.magnitudes.size() == 256);
  for (Eigen::Index i = 1; i < spec.magnitudes.size(); ++i)
    CHECK(spec.magnitudes[i] <= 1e-12);
  CHECK(spec.threshold_counts.at(0.01) == 1);
  CHECK(spec.threshold_counts.at(0.02) == 1);

  CHECK_THROWS_AS(
      sorted_spectrum(ProcessMatrix{Matrix::Zero(16, 16), basis, 4}),
      std::invalid_argument);
}

TEST_CASE("spectrum is nonincreasing and recomputed per basis") {
  const ProcessMatrix chi = cz_decohered(0.8);
  const SparsitySpectrum gate_spec = sorted_spectrum(chi);
  for (Eigen::Index i = 1; i < gate_spec.magnitudes.size(); ++i)
    CHECK(gate_spec.magnitudes[i] <= gate_spec.magnitudes[i - 1] + 1e-15);

  const SparsitySpectrum pauli_spec =
      sorted_spectrum(change_basis(chi, pauli_basis(2)));
  CHECK(pauli_spec.threshold_counts.at(0.02) >
        gate_spec.threshold_counts.at(0.02));
}

TEST_CASE("s_sparse_approx keeps the largest entries") {
  const auto basis = gate_basis(cz_gate());
  const ProcessMatrix cz = chi_from_unitary(cz_gate(), basis);
  // keep-1 drops only float dust for the exactly 1-sparse target
  CHECK((s_sparse_approx(cz, 1).chi - cz.chi).norm() < 1e-12);
  CHECK((s_sparse_approx(cz, 256).chi - cz.chi).norm() == 0.0);

  const ProcessMatrix mixed = cz_decohered(0.7);
  CHECK((s_sparse_approx(mixed, 256).chi - mixed.chi).norm() == 0.0);

  CHECK_THROWS_AS(s_sparse_approx(cz, 0), std::invalid_argument);
  CHECK_THROWS_AS(s_sparse_approx(cz, 257), std::invalid_argument);
}

TEST_CASE("hard thresholding minimizes the l1 error over all 2-supports") {
  // d = 2 so chi has 16 entries: brute force every support of size 2
  const auto basis = pauli_basis(1);
  const ProcessMatrix chi = random_process(basis, 31);
  const ProcessMatrix best = s_sparse_approx(chi, 2);
  const double err_best = l1_norm(vec_chi(best.chi) - vec_chi(chi.chi));

  const CVector v = vec_chi(chi.chi);
  double brute = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 16; ++a)
    for (int b = a + 1; b < 16; ++b) {
      double err = 0;
      for (int k = 0; k < 16; ++k)
        if (k != a && k != b) err += std::abs(v[k]);
      brute = std::min(brute, err);
    }
  CHECK(err_best == doctest::Approx(brute).epsilon(1e-12));

  RealVector mags = v.cwiseAbs();
  std::sort(mags.data(), mags.data() + mags.size(), std::greater<double>());
  CHECK(err_best == doctest::Approx(mags.tail(14).sum()).epsilon(1e-12));
}

TEST_CASE("recovery constants: exact values, pole, monotonicity") {
  const auto [c1_0, c2_0] = recovery_constants(0.0);
  CHECK(c1_0 == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(c2_0 == doctest::Approx(4.0).epsilon(1e-15));

  // frozen from an independent evaluation of the closed forms at delta = 0.2
  const auto [c1, c2] = recovery_constants(0.2);
  CHECK(c1 == doctest::Approx(4.1876726427121085).epsilon(1e-9));
  CHECK(c2 == doctest::Approx(8.4728197121775661).epsilon(1e-9));

  CHECK_THROWS_AS(recovery_constants(std::sqrt(2.0) - 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(recovery_constants(-0.1), std::invalid_argument);

  double prev_c1 = 0, prev_c2 = 0;
  for (double delta = 0.0; delta < 0.41; delta += 0.05) {
    const auto [a, b] = recovery_constants(delta);
    CHECK(a > prev_c1);
    CHECK(b > prev_c2);
    prev_c1 = a;
    prev_c2 = b;
  }
}

TEST_CASE("recovery bound values") {
  const auto basis = gate_basis(cz_gate());
  const ProcessMatrix cz = chi_from_unitary(cz_gate(), basis);

  const BoundReport perfect = recovery_bound(cz, 1, 0.0, 0.0);
  CHECK(perfect.bound_value == doctest::Approx(0.0));
  CHECK(perfect.approx_error_l1 == doctest::Approx(0.0));

  const BoundReport noise_only = recovery_bound(cz, 256, 0.01, 0.0);
  CHECK(noise_only.bound_value == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(noise_only.m_ref == 0);

  const BoundReport generic = recovery_bound(cz_decohered(0.62), 50, 0.01, 0.2);
  CHECK(generic.bound_value > 0);
  CHECK(generic.m_ref == (long long)std::ceil(50 * std::log(256.0 / 50.0)));
}

TEST_CASE("bound soundness under identity sensing (delta exactly 0)") {
  const auto basis = gate_basis(cz_gate());
  const ProcessMatrix chi0 = cz_decohered(0.91);
  SensingMatrix phi = hermitian_identity_sensing(basis);

  const RealMatrix phi_u = real_sensing_matrix(phi);
  const RealVector u0 = herm_to_real(chi0.chi);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> gauss(0.0, 1.0);
  RealVector w(u0.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = gauss(rng);
  // eps bounds ||w|| in the normalized convention of the recovery theory
  const double eps = 1e-3;
  w *= 0.9 * eps / w.norm();

  // identity sensing reads coordinates directly; undo the 1/sqrt(m) scaling
  const double root_m = std::sqrt(double(u0.size()));
  const RealVector y_raw = (phi_u * u0 + w) * root_m;
  const RecoveryResult res =
      solve_cqpt(make_recovery_problem(y_raw, phi, eps * root_m));
  REQUIRE(res.converged);

  const double err = (res.chi_star.chi - chi0.chi).norm();
  for (int s : {20, 40, 80}) {
    const BoundReport rep = recovery_bound(chi0, s, eps, 0.0);
    CHECK(err <= rep.bound_value);
  }
}

TEST_CASE("empirical RIP: identity sensing, determinism, monotone in s") {
  const auto basis = pauli_basis(2);
  const SensingMatrix id = hermitian_identity_sensing(basis);
  const RipEstimate exact = empirical_rip(id, 4, 200, 9);
  CHECK(exact.delta_hat <= 1e-12);

  const SensingMatrix phi =
      build_phi(random_pauli_config_set(2, 16, 6, 5), basis);
  const RipEstimate a = empirical_rip(phi, 2, 300, 7);
  const RipEstimate b = empirical_rip(phi, 2, 300, 7);
  CHECK(a.delta_hat == b.delta_hat);

  const RipEstimate s4 = empirical_rip(phi, 4, 300, 7);
  const RipEstimate s8 = empirical_rip(phi, 8, 300, 7);
  CHECK(a.delta_hat <= s4.delta_hat);
  CHECK(s4.delta_hat <= s8.delta_hat);

  CHECK_THROWS_AS(empirical_rip(phi, 0, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(empirical_rip(phi, 2, 0, 1), std::invalid_argument);
}

TEST_CASE("empirical RIP stays below one for the random Pauli ensemble") {
  const auto basis = gate_basis(qft_gate(4));
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SensingMatrix phi =
        build_phi(random_pauli_config_set(2, 16, 6, seed), basis);
    const RipEstimate est = empirical_rip(phi, 2, 1000, seed);
    if (est.delta_hat < 1.0) ++ok;
  }
  CHECK(ok >= 9);
}

TEST_CASE("concentration bounds") {
  const auto basis = gate_basis(cz_gate());
  const ConcentrationBounds id =
      concentration_bounds(hermitian_identity_sensing(basis), 0.1);
  CHECK(id.u == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(id.l == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(id.ratio_ok);

  const ConfigSet full = full_config_set(2);
  ConfigSet single;
  single.configs.push_back(full.configs[0]);
  const SensingMatrix one_row = build_phi(single, basis);
  const ConcentrationBounds single_bounds = concentration_bounds(one_row, 0.1);
  CHECK(single_bounds.w_u ==
        doctest::Approx(one_row.phi.row(0).squaredNorm()).epsilon(1e-12));
  CHECK(single_bounds.w_l == 0.0);

  const ConcentrationBounds g = concentration_bounds(full, basis, 0.13);
  CHECK(g.u > 0);
  CHECK(g.l > 0);
  CHECK(std::isfinite(g.u / g.l));
}

TEST_CASE("rip failure bound behavior") {
  const double w_u = 1.0, w_l = 0.0;
  CHECK(rip_failure_bound(0, 2, 0.3, 0.05, w_u, w_l, 256) == 1.0);

  double prev = 1.0;
  bool decreasing = true;
  for (double m : {5000.0, 10000.0, 20000.0, 40000.0}) {
    const double p = rip_failure_bound(m, 2, 0.3, 0.05, w_u, w_l, 256);
    if (p > prev + 1e-15) decreasing = false;
    prev = p;
  }
  CHECK(decreasing);
  CHECK(rip_failure_bound(1e9, 2, 0.3, 0.05, w_u, w_l, 256) ==
        doctest::Approx(0.0));

  // direct evaluation of the exponent at a reference point
  const double m = 5000, s = 2, delta = 0.3, eps = 0.05, big_n = 256;
  const double expo =
      -2 * m * std::pow(delta / 2 + eps, 2) +
      s * (std::log(std::numbers::e * big_n / s) + std::log(12.0 / delta));
  CHECK(rip_failure_bound(m, 2, delta, eps, w_u, w_l, big_n) ==
        doctest::Approx(std::clamp(2 * std::exp(expo), 0.0, 1.0)));

  CHECK_THROWS_AS(rip_failure_bound(10, 2, 0.0, 0.05, w_u, w_l, 256),
                  std::invalid_argument);
  CHECK_THROWS_AS(rip_failure_bound(10, 2, 0.3, 0.05, 0.0, 0.0, 256),
                  std::invalid_argument);
}

TEST_CASE("sparsity certification") {
  const auto basis = gate_basis(cz_gate());
  const ProcessMatrix a = chi_from_unitary(cz_gate(), basis);

  const CertificationReport same = sparsity_certification({a, a, a}, 1e-6);
  CHECK(same.increments == std::vector<double>{0.0, 0.0});
  CHECK(same.certified);

  const ProcessMatrix b = random_process(gate_basis(cz_gate()), 3);
  const ProcessMatrix c = random_process(gate_basis(cz_gate()), 4);
  const CertificationReport unrelated = sparsity_certification({a, b, c}, 1e-6);
  CHECK_FALSE(unrelated.certified);

  CHECK_THROWS_AS(sparsity_certification({a}, 1e-6), std::invalid_argument);
  const ProcessMatrix pauli_chi = chi_from_unitary(cz_gate(), pauli_basis(2));
  CHECK_THROWS_AS(sparsity_certification({a, pauli_chi}, 1e-6),
                  std::invalid_argument);
}

TEST_CASE("certification increments shrink for the noise-free sparse target") {
  const auto basis = gate_basis(cz_gate());
  const ProcessMatrix chi0 = chi_from_unitary(cz_gate(), basis);
  const ConfigSet full = full_config_set(2);

  std::vector<ProcessMatrix> estimates;
  for (int m : {16, 32, 64}) {
    const ConfigSet sel = select_random(full, m, 20 + std::uint64_t(m));
    SensingMatrix phi = build_phi(sel, basis);
    estimates.push_back(
        solve_cqpt(make_recovery_problem(predict_expectations(chi0, sel),
                                         std::move(phi), 1e-8))
            .chi_star);
  }
  const CertificationReport rep = sparsity_certification(estimates, 1e-4);
  REQUIRE(rep.increments.size() == 2);
  CHECK(rep.increments[1] <= rep.increments[0]);
  CHECK(rep.increments[1] <= 1e-4);
  CHECK(rep.certified);
}
