#include "cqpt/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <thread>

#include <unsupported/Eigen/KroneckerProduct>

namespace cqpt {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Matrix random_hermitian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = Complex(gauss(rng), gauss(rng));
  return 0.5 * (a + a.adjoint());
}

// Hermitian generator with exp(-iH) = U, phases in (-pi, pi] via Schur
Matrix unitary_log_generator(const Matrix& u) {
  Eigen::ComplexSchur<Matrix> schur(u);
  const Matrix& q = schur.matrixU();
  CVector phases(u.rows());
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    phases[i] = -std::arg(schur.matrixT()(i, i));
  return q * phases.asDiagonal() * q.adjoint();
}

Matrix hermitian_exp(const Matrix& h, double scale) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
  CVector phases(h.rows());
  for (Eigen::Index i = 0; i < h.rows(); ++i)
    phases[i] = std::polar(1.0, scale * eig.eigenvalues()[i]);
  return eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
}

Matrix su2(double a, double b, double c) {
  Matrix rz1(2, 2), ry(2, 2), rz2(2, 2);
  rz1 << std::polar(1.0, -a / 2), 0, 0, std::polar(1.0, a / 2);
  ry << std::cos(b / 2), -std::sin(b / 2), std::sin(b / 2), std::cos(b / 2);
  rz2 << std::polar(1.0, -c / 2), 0, 0, std::polar(1.0, c / 2);
  return rz1 * ry * rz2;
}

int thread_budget(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("QPT_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(size_t(threads));
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) body(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

EnvironmentCoupling random_coupling(int sys_dim, int env_dim, std::uint64_t seed,
                                    double gamma, double evolution_time) {
  if (env_dim < 2) throw std::invalid_argument("environment needs dim >= 2");
  if (gamma < 0) throw std::invalid_argument("coupling magnitude must be >= 0");
  std::mt19937_64 rng(seed);
  Matrix h = random_hermitian(sys_dim * env_dim, rng);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
  h /= eig.eigenvalues().cwiseAbs().maxCoeff();
  return EnvironmentCoupling{gamma, std::move(h), env_dim, evolution_time, seed};
}

ProcessMatrix dilated_unitary_channel(const UnitaryGate& ideal,
                                      const EnvironmentCoupling& coupling) {
  const int d = int(ideal.matrix.rows());
  const int total = d * coupling.env_dim;
  if (coupling.h_tilde.rows() != total)
    throw DimensionError("coupling dimension does not match system x environment");

  const Matrix h_sys = unitary_log_generator(ideal.matrix);
  const Matrix h =
      Eigen::kroneckerProduct(Matrix::Identity(coupling.env_dim, coupling.env_dim),
                              h_sys)
          .eval() +
      coupling.gamma * coupling.h_tilde;
  const Matrix w = hermitian_exp(h, -coupling.evolution_time);

  std::vector<Matrix> kraus;
  kraus.reserve(size_t(coupling.env_dim));
  for (int e = 0; e < coupling.env_dim; ++e)
    kraus.push_back(w.block(e * d, 0, d, d));
  return chi_from_kraus(kraus, gate_basis(ideal));
}

ProcessMatrix qft_env_channel(const EnvironmentCoupling& coupling) {
  return dilated_unitary_channel(qft_gate(4), coupling);
}

ProcessMatrix near_identity_channel(int n_qubits, double strength,
                                    std::uint64_t seed, int env_dim) {
  if (n_qubits < 2 || n_qubits > 4)
    throw std::invalid_argument("near-identity scenario covers 2..4 qubits");
  const int d = 1 << n_qubits;
  return dilated_unitary_channel(identity_gate(d),
                                 random_coupling(d, env_dim, seed, strength));
}

EnvironmentCoupling calibrate_coupling(const UnitaryGate& ideal,
                                       double target_fidelity, std::uint64_t seed,
                                       int env_dim, double tolerance) {
  if (target_fidelity <= 0 || target_fidelity >= 1)
    throw std::invalid_argument("target fidelity must lie in (0,1)");
  const int d = int(ideal.matrix.rows());
  EnvironmentCoupling coupling = random_coupling(d, env_dim, seed, 0.0);
  const ProcessMatrix ideal_chi = chi_from_unitary(ideal, gate_basis(ideal));

  auto fidelity_at = [&](double gamma) {
    coupling.gamma = gamma;
    return process_fidelity(ideal_chi, dilated_unitary_channel(ideal, coupling));
  };

  double lo = 0.0, hi = 0.5;
  while (fidelity_at(hi) > target_fidelity) {
    lo = hi;
    hi *= 2;
    if (hi > 64)
      throw std::runtime_error("coupling calibration failed to bracket the target");
  }
  double f = 0;
  for (int it = 0; it < 80; ++it) {
    coupling.gamma = 0.5 * (lo + hi);
    f = fidelity_at(coupling.gamma);
    if (std::abs(f - target_fidelity) <= tolerance * 0.2) break;
    (f > target_fidelity ? lo : hi) = coupling.gamma;
  }
  if (std::abs(f - target_fidelity) > tolerance)
    throw std::runtime_error("coupling calibration did not reach the target");
  return coupling;
}

ProcessMatrix cz_decohered(double target_purity) {
  const int d = 4;
  // the boundary itself is unreachable to bisection accuracy
  if (target_purity <= 1.0 / (d * d) + 1e-6 || target_purity > 1.0)
    throw std::invalid_argument("target purity must lie in (1/d^2, 1]");
  const BasisPtr basis = gate_basis(cz_gate());
  const ProcessMatrix pure = chi_from_unitary(cz_gate(), basis);
  if (target_purity == 1.0) return pure;
  const ProcessMatrix depol = chi_depolarizing(basis);

  auto mix = [&](double lambda) {
    return make_process_matrix((1 - lambda) * pure.chi + lambda * depol.chi, basis);
  };
  double lo = 0.0, hi = 1.0;
  ProcessMatrix out = pure;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    out = mix(mid);
    const double p = purity(out);
    if (std::abs(p - target_purity) <= 1e-6) break;
    (p > target_purity ? lo : hi) = mid;
  }
  if (std::abs(purity(out) - target_purity) > 1e-6)
    throw std::runtime_error("purity bisection failed");
  return out;
}

ProcessMatrix build_scenario_channel(const ScenarioConfig& config) {
  switch (config.kind) {
    case ScenarioKind::cz_mixture:
      return cz_decohered(config.target_purity);
    case ScenarioKind::qft_env: {
      if (config.target_fidelity > 0)
        return qft_env_channel(calibrate_coupling(qft_gate(4), config.target_fidelity,
                                                  config.seed, config.env_dim));
      return qft_env_channel(
          random_coupling(4, config.env_dim, config.seed, config.gamma));
    }
    case ScenarioKind::near_identity: {
      const int d = 1 << config.n_qubits;
      if (config.target_fidelity > 0)
        return dilated_unitary_channel(
            identity_gate(d), calibrate_coupling(identity_gate(d),
                                                 config.target_fidelity, config.seed,
                                                 config.env_dim));
      return near_identity_channel(config.n_qubits, config.gamma, config.seed,
                                   config.env_dim);
    }
  }
  throw std::logic_error("unreachable scenario kind");
}

UnitaryGate scenario_ideal_gate(const ScenarioConfig& config) {
  switch (config.kind) {
    case ScenarioKind::cz_mixture: return cz_gate();
    case ScenarioKind::qft_env: return qft_gate(4);
    case ScenarioKind::near_identity: return identity_gate(1 << config.n_qubits);
  }
  throw std::logic_error("unreachable scenario kind");
}

// ---------------------------------------------------------------------------
// Local corrections
// ---------------------------------------------------------------------------

namespace {

// Choi matrix over system (x) reference with the row-major flatten
// w(G)[a*d+b] = G(a,b)/sqrt(d); trace-normalized.
Matrix choi_state(const ProcessMatrix& chi) {
  const int d = chi.dim;
  const int nb = chi.basis->size();
  Matrix w(d * d, nb);
  for (int a = 0; a < nb; ++a) {
    const Matrix& g = chi.basis->elements[a];
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) w(r * d + c, a) = g(r, c);
  }
  Matrix choi = w * chi.chi * w.adjoint();
  choi /= choi.trace();
  return 0.5 * (choi + choi.adjoint());
}

CVector ideal_choi_ket(const Matrix& u) {
  const int d = int(u.rows());
  CVector psi(d * d);
  const double s = 1.0 / std::sqrt(double(d));
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) psi[r * d + c] = u(r, c) * s;
  return psi;
}

struct CorrectionObjective {
  Matrix choi;  // normalized Choi state of the channel
  CVector psi;  // Choi ket of the ideal unitary

  double fidelity(const std::array<double, 12>& x) const {
    const Matrix post = Eigen::kroneckerProduct(su2(x[0], x[1], x[2]),
                                                su2(x[3], x[4], x[5]))
                            .eval();
    const Matrix pre = Eigen::kroneckerProduct(su2(x[6], x[7], x[8]),
                                               su2(x[9], x[10], x[11]))
                           .eval();
    const Matrix p = Eigen::kroneckerProduct(post, pre.transpose()).eval();
    const CVector phi = p.adjoint() * psi;
    return std::real(phi.dot(choi * phi));
  }
};

// classic 12-dimensional Nelder-Mead on -fidelity
std::pair<double, std::array<double, 12>> nelder_mead(
    const CorrectionObjective& obj, std::array<double, 12> start, double step,
    int max_iters) {
  constexpr int n = 12;
  using Point = std::array<double, n>;
  struct Vertex {
    Point x;
    double f;
  };
  auto eval = [&](const Point& x) { return -obj.fidelity(x); };

  std::vector<Vertex> simplex(n + 1);
  simplex[0] = {start, eval(start)};
  for (int i = 0; i < n; ++i) {
    Point p = start;
    p[size_t(i)] += step;
    simplex[size_t(i) + 1] = {p, eval(p)};
  }

  for (int it = 0; it < max_iters; ++it) {
    std::sort(simplex.begin(), simplex.end(),
              [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    if (simplex.back().f - simplex.front().f < 1e-13) break;

    Point centroid{};
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) centroid[size_t(k)] += simplex[size_t(i)].x[size_t(k)] / n;

    auto blend = [&](double t) {
      Point p;
      for (int k = 0; k < n; ++k)
        p[size_t(k)] = centroid[size_t(k)] +
                       t * (centroid[size_t(k)] - simplex.back().x[size_t(k)]);
      return p;
    };

    const Point reflect = blend(1.0);
    const double fr = eval(reflect);
    if (fr < simplex.front().f) {
      const Point expand = blend(2.0);
      const double fe = eval(expand);
      simplex.back() = fe < fr ? Vertex{expand, fe} : Vertex{reflect, fr};
    } else if (fr < simplex[n - 1].f) {
      simplex.back() = {reflect, fr};
    } else {
      const Point contract = blend(fr < simplex.back().f ? 0.5 : -0.5);
      const double fc = eval(contract);
      if (fc < std::min(fr, simplex.back().f)) {
        simplex.back() = {contract, fc};
      } else {
        for (int i = 1; i <= n; ++i) {
          for (int k = 0; k < n; ++k)
            simplex[size_t(i)].x[size_t(k)] =
                0.5 * (simplex[size_t(i)].x[size_t(k)] + simplex[0].x[size_t(k)]);
          simplex[size_t(i)].f = eval(simplex[size_t(i)].x);
        }
      }
    }
  }
  std::sort(simplex.begin(), simplex.end(),
            [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
  return {-simplex.front().f, simplex.front().x};
}

}  // namespace

LocalCorrection local_correction_search(const ProcessMatrix& chi,
                                        const UnitaryGate& ideal,
                                        const CorrectionSearchOptions& opts) {
  if (chi.dim != 4 || ideal.matrix.rows() != 4)
    throw DimensionError("local correction search expects a two-qubit process");

  CorrectionObjective obj{choi_state(chi), ideal_choi_ket(ideal.matrix)};
  const std::array<double, 12> identity_angles{};
  const double f0 = obj.fidelity(identity_angles);

  double best_f = f0;
  std::array<double, 12> best_x = identity_angles;

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  for (int r = 0; r < opts.restarts; ++r) {
    std::array<double, 12> start{};
    if (r > 0)
      for (auto& v : start) v = 0.5 * angle(rng);
    auto [f, x] = nelder_mead(obj, start, 0.25, opts.max_iters);
    // refine the winner with a tighter simplex
    auto [f2, x2] = nelder_mead(obj, x, 0.02, opts.max_iters);
    if (f2 > f) std::tie(f, x) = std::tie(f2, x2);
    if (f > best_f) {
      best_f = f;
      best_x = x;
    }
  }

  LocalCorrection out;
  if (best_f <= f0 + opts.min_gain) {
    out.fidelity = f0;
    out.post = Matrix::Identity(4, 4);
    out.pre = Matrix::Identity(4, 4);
    out.improved = false;
    return out;
  }
  out.fidelity = best_f;
  out.angles = best_x;
  out.post = Eigen::kroneckerProduct(su2(best_x[0], best_x[1], best_x[2]),
                                     su2(best_x[3], best_x[4], best_x[5]))
                 .eval();
  out.pre = Eigen::kroneckerProduct(su2(best_x[6], best_x[7], best_x[8]),
                                    su2(best_x[9], best_x[10], best_x[11]))
                .eval();
  out.improved = true;
  return out;
}

ProcessMatrix apply_local_corrections(const ProcessMatrix& chi, const Matrix& post,
                                      const Matrix& pre) {
  const int nb = chi.basis->size();
  // basis-space matrix of Gamma_a -> post Gamma_a pre; unitary for unitary
  // corrections, so chi' = M chi M'
  Matrix m(nb, nb);
  for (int a = 0; a < nb; ++a) {
    const Matrix transformed = post * chi.basis->elements[a] * pre;
    for (int b = 0; b < nb; ++b)
      m(b, a) = (chi.basis->elements[b].adjoint() * transformed).trace();
  }
  Matrix out = m * chi.chi * m.adjoint();
  return ProcessMatrix{0.5 * (out + out.adjoint()), chi.basis, chi.dim};
}

// ---------------------------------------------------------------------------
// Convergence experiment
// ---------------------------------------------------------------------------

ExperimentReport convergence_experiment(const ScenarioConfig& config,
                                        const std::vector<int>& m_list,
                                        const ExperimentOptions& opts) {
  const ProcessMatrix chi_true = build_scenario_channel(config);
  const UnitaryGate ideal = scenario_ideal_gate(config);
  const BasisPtr basis = chi_true.basis;
  const ProcessMatrix chi_ideal = chi_from_unitary(ideal, basis);

  const ConfigSet full = full_config_set(config.n_qubits);
  Dataset data = config.shots > 0
                     ? normalize_counts(simulate_counts(chi_true, full,
                                                        config.shots, config.seed))
                     : exact_dataset(chi_true, full);

  const RealVector y_full = dataset_values(data, full);
  const SensingMatrix phi_full = build_phi(full, basis);
  const RecoveryResult full_fit = solve_constrained_ls(
      make_recovery_problem(y_full, phi_full, 0.0), opts.full_solver);

  const int threads = thread_budget(opts.threads);

  ExperimentReport report;
  report.scenario = config;
  for (size_t mi = 0; mi < m_list.size(); ++mi) {
    const int m = m_list[mi];
    if (m < 1 || m > full.size())
      throw std::invalid_argument("m out of range for the full set");
    const double eps = calibrate_epsilon(full_fit, m, opts.epsilon_factor);

    std::vector<double> f_full(size_t(opts.trials), -1.0);
    std::vector<double> f_ideal(size_t(opts.trials), -1.0);

    parallel_for(opts.trials, threads, [&](int t) {
      try {
        const std::uint64_t sel_seed =
            mix_seed(config.seed, (mi + 1) * 100003ULL + std::uint64_t(t));
        const ConfigSet sel = select_random(full, m, sel_seed);
        const RealVector y = dataset_values(data, sel);
        RecoveryResult fit = solve_cqpt(
            make_recovery_problem(y, build_phi(sel, basis), eps), opts.solver);
        if (!fit.converged) return;  // leave the trial marked failed
        f_full[size_t(t)] = process_fidelity(full_fit.chi_star, fit.chi_star);
        f_ideal[size_t(t)] = process_fidelity(chi_ideal, fit.chi_star);
      } catch (const std::exception&) {
        // failed trial, excluded from the averages
      }
    });

    ExperimentRow row;
    row.m = m;
    row.trials = opts.trials;
    double sum = 0, sum_sq = 0, sum_ideal = 0;
    int ok = 0;
    for (int t = 0; t < opts.trials; ++t) {
      if (f_full[size_t(t)] < 0) continue;
      ++ok;
      sum += f_full[size_t(t)];
      sum_sq += f_full[size_t(t)] * f_full[size_t(t)];
      sum_ideal += f_ideal[size_t(t)];
    }
    row.failed = opts.trials - ok;
    if (ok > 0) {
      row.f_full_mean = sum / ok;
      row.f_full_std =
          std::sqrt(std::max(0.0, sum_sq / ok - row.f_full_mean * row.f_full_mean));
      row.f_ideal_mean = sum_ideal / ok;
    }
    report.rows.push_back(row);
  }
  return report;
}

ProcessMatrix random_cptp(BasisPtr basis, int kraus_count, std::uint64_t seed) {
  const int d = basis->dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Matrix> kraus(static_cast<size_t>(kraus_count));
  Matrix s = Matrix::Zero(d, d);
  for (auto& k : kraus) {
    k = Matrix(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) k(i, j) = Complex(gauss(rng), gauss(rng));
    s += k.adjoint() * k;
  }
  // normalize so the set is exactly trace preserving
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  const Matrix inv_root = eig.eigenvectors() *
                          eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                          eig.eigenvectors().adjoint();
  for (auto& k : kraus) k = k * inv_root;
  return chi_from_kraus(kraus, std::move(basis));
}

}  // namespace cqpt
