#pragma once

#include <map>

#include "cqpt/solver.hpp"

namespace cqpt {

struct SparsitySpectrum {
  RealVector magnitudes;                   // nonincreasing, first element 1
  std::map<double, int> threshold_counts;  // threshold -> entries above it
};

// |chi| entries sorted by relative magnitude with respect to the largest.
SparsitySpectrum sorted_spectrum(const ProcessMatrix& chi,
                                 const std::vector<double>& thresholds = {0.01,
                                                                          0.02});

// Best s-sparse approximation: keep the s largest-modulus entries (ties by
// index order), zero the rest. The result may be non-Hermitian at a tie.
ProcessMatrix s_sparse_approx(const ProcessMatrix& chi, int s);

// C1 = (2+(2sqrt2-2)d)/(1-(sqrt2+1)d), C2 = 4 sqrt(1+d)/(1-(sqrt2+1)d);
// defined for 0 <= d < sqrt2 - 1.
std::pair<double, double> recovery_constants(double delta);

struct BoundReport {
  double c1 = 0;
  double c2 = 0;
  double bound_value = 0;
  int s = 0;
  double epsilon = 0;
  double c0_reference = 1;     // caller-supplied, report only
  double approx_error_l1 = 0;  // ||vec chi0(s) - vec chi0||_1
  long long m_ref = 0;         // ceil(c0 * s * log(d^4/s))
};

// bound_value = (C1/sqrt(s)) ||chi0(s)-chi0||_1 + C2 epsilon.
BoundReport recovery_bound(const ProcessMatrix& chi0, int s, double epsilon,
                           double delta, double c0 = 1.0);

struct RipEstimate {
  double delta_hat = 0;
  int s = 0;
  int trials = 0;
  std::uint64_t seed = 0;
};

// Diagnostic m = d^4 sensing matrix whose rows are the Hermitian coordinate
// functionals: an exact isometry, so its isometry constant is 0.
SensingMatrix hermitian_identity_sensing(BasisPtr basis);

// Samples pairs of random s-sparse complex vectors and records the worst
// deviation of ||Phi(x1-x2)||^2 / ||x1-x2||^2 from 1, cumulatively over all
// sparsity prefixes 1..s so the estimate is nondecreasing in s. A lower
// bound on the true delta_2s.
RipEstimate empirical_rip(const SensingMatrix& phi, int s, int trials,
                          std::uint64_t seed);

struct ConcentrationBounds {
  double w_u = 0;
  double w_l = 0;
  double u = 0;
  double l = 0;
  bool ratio_ok = false;  // u/l < (1+delta)/(1-delta)
};

ConcentrationBounds concentration_bounds(const SensingMatrix& phi, double delta);
ConcentrationBounds concentration_bounds(const ConfigSet& configs, BasisPtr basis,
                                         double delta);

// P_fail = 2 exp(-2m(delta/2+eps)^2/(w_u-w_l)^2 + s[log(eN/s)+log(12/delta)]),
// clamped to [0,1].
double rip_failure_bound(double m, int s, double delta, double eps_margin,
                         double w_u, double w_l, double big_n);

struct CertificationReport {
  std::vector<double> increments;  // ||vec chi_{j+1} - vec chi_j||_1
  bool certified = false;          // last increment below the threshold
};

CertificationReport sparsity_certification(
    const std::vector<ProcessMatrix>& estimates, double threshold);

}  // namespace cqpt
