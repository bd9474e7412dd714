#include "cqpt/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <numbers>

namespace cqpt {

namespace {

// prox of tau * (weighted l1) in Hermitian coordinates: |diag| entries get
// weight 1, each (re,im) off-diagonal pair shrinks jointly with weight
// sqrt(2), matching sum_ab |chi_ab|
RealVector herm_l1_prox(const RealVector& v, double tau, int nb) {
  RealVector x = v;
  for (int i = 0; i < nb; ++i) {
    const double a = std::abs(v[i]);
    x[i] = a <= tau ? 0.0 : v[i] * (1.0 - tau / a);
  }
  const double gtau = std::numbers::sqrt2 * tau;
  for (Eigen::Index k = nb; k < v.size(); k += 2) {
    const double r = std::hypot(v[k], v[k + 1]);
    const double scale = r <= gtau ? 0.0 : 1.0 - gtau / r;
    x[k] = v[k] * scale;
    x[k + 1] = v[k + 1] * scale;
  }
  return x;
}

RealVector psd_project_coords(const RealVector& u, double floor) {
  return herm_to_real(project_psd(herm_from_real(u), floor));
}

// Projection onto { u : ||Phi u - y|| <= eps } via the SVD of Phi; the
// multiplier equation is solved by bisection.
class ResidualBallProjector {
 public:
  ResidualBallProjector(const RealMatrix& phi, const RealVector& y, double eps)
      : eps_(eps) {
    Eigen::BDCSVD<RealMatrix> svd(phi, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVector& sv = svd.singularValues();
    const double cut = sv.size() ? sv[0] * 1e-13 : 0.0;
    int rank = 0;
    while (rank < sv.size() && sv[rank] > cut) ++rank;
    sv_ = sv.head(rank);
    v_ = svd.matrixV().leftCols(rank);
    yhat_ = svd.matrixU().leftCols(rank).transpose() * y;
    // explicit residual; the norm-difference form cancels catastrophically
    unreachable_sq_ =
        (y - svd.matrixU().leftCols(rank) * yhat_).squaredNorm();
  }

  double min_residual() const { return std::sqrt(unreachable_sq_); }

  double residual(const RealVector& u) const {
    const RealVector w = v_.transpose() * u;
    return std::sqrt((sv_.cwiseProduct(w) - yhat_).squaredNorm() + unreachable_sq_);
  }

  RealVector project(const RealVector& u) const {
    const RealVector w = v_.transpose() * u;
    const RealVector r = sv_.cwiseProduct(w) - yhat_;
    const double target_sq = eps_ * eps_ - unreachable_sq_;
    if (r.squaredNorm() + unreachable_sq_ <= eps_ * eps_) return u;
    if (target_sq <= 0) {
      // the best attainable residual: land on the affine set Phi u = P_range y
      const RealVector wstar = yhat_.cwiseQuotient(sv_);
      return u + v_ * (wstar - w);
    }
    auto excess = [&](double lambda) {
      double s = 0;
      for (Eigen::Index i = 0; i < r.size(); ++i) {
        const double t = r[i] / (1.0 + lambda * sv_[i] * sv_[i]);
        s += t * t;
      }
      return s - target_sq;
    };
    double lo = 0.0, hi = 1.0;
    while (excess(hi) > 0) {
      lo = hi;
      hi *= 4.0;
      if (hi > 1e18) break;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      (excess(mid) > 0 ? lo : hi) = mid;
    }
    const double lambda = 0.5 * (lo + hi);
    RealVector wstar(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i)
      wstar[i] = (w[i] + lambda * sv_[i] * yhat_[i]) / (1.0 + lambda * sv_[i] * sv_[i]);
    return u + v_ * (wstar - w);
  }

  // prox of 1/2 ||Phi u - y||^2 with weight 1/rho:
  // x = argmin 1/2||Phi x - y||^2 + rho/2 ||x - v||^2
  RealVector ls_prox(const RealVector& v, double rho) const {
    const RealVector w = v_.transpose() * v;
    RealVector delta(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i)
      delta[i] = (sv_[i] * yhat_[i] - sv_[i] * sv_[i] * w[i]) / (sv_[i] * sv_[i] + rho);
    return v + v_ * delta;
  }

 private:
  RealMatrix v_;
  RealVector sv_, yhat_;
  double unreachable_sq_ = 0;
  double eps_;
};

struct SolveContext {
  const RecoveryProblem* problem;
  RealMatrix phi_u;
  TpProjector tp;
  double radius;  // epsilon mapped into the normalized residual
  ResidualBallProjector ball;
  int nb;

  SolveContext(const RecoveryProblem& p)
      : problem(&p),
        phi_u(real_sensing_matrix(p.phi)),
        tp(*p.phi.basis),
        radius(p.epsilon / std::sqrt(double(p.y.size()))),
        ball(phi_u, p.y, radius),
        nb(p.phi.basis->size()) {}

  double scale() const { return std::sqrt(double(problem->y.size())); }
};

// Least-squares projection onto { u : A u = b } for a stacked constraint
// block; rank revealed by a complete orthogonal decomposition.
class StackedAffineProjector {
 public:
  StackedAffineProjector(const RealMatrix& a, RealVector b)
      : a_(a), b_(std::move(b)), cod_(a_) {}

  RealVector project(const RealVector& u) const {
    return u - cod_.solve(RealVector(a_ * u - b_));
  }

 private:
  RealMatrix a_;
  RealVector b_;
  Eigen::CompleteOrthogonalDecomposition<RealMatrix> cod_;
};

// feasibility targets: polish aims one decade below the reported contract
constexpr double kMinEigTol = 1e-7;
constexpr double kTpTol = 1e-6;

struct PolishOutcome {
  RealVector u;
  double min_eig = 0;
  double tp_res = 0;
  double res = 0;
  bool feasible = false;
};

// Feasibility restoration on the PSD face identified by the solver: with
// chi = V P V' and the face V fixed, trace preservation becomes an equality
// constraint and the residual a least-squares objective in the small
// Hermitian block P. Solving the KKT system lands exactly on the face, so
// the result is PSD by construction; alternating projections stall when the
// constraint sets meet the cone tangentially, this does not.
bool face_polish(const SolveContext& ctx, const RealVector& z, bool with_ball,
                 double face_cut_rel, PolishOutcome* out) {
  const int nb = ctx.nb;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(herm_from_real(z));
  const double lmax = eig.eigenvalues().maxCoeff();
  if (!(lmax > 0)) return false;

  std::vector<int> keep;
  for (int i = 0; i < nb; ++i)
    if (eig.eigenvalues()[i] > lmax * face_cut_rel) keep.push_back(i);
  const int r = int(keep.size());
  if (r == 0 || r == nb) return false;

  Matrix v(nb, r);
  RealVector p0 = RealVector::Zero(Eigen::Index(r) * r);
  for (int i = 0; i < r; ++i) {
    v.col(i) = eig.eigenvectors().col(keep[size_t(i)]);
    p0[i] = eig.eigenvalues()[keep[size_t(i)]];  // diagonal coordinates
  }

  // face coordinate map M: herm coords of P -> herm coords of V P V'
  const Eigen::Index np = Eigen::Index(r) * r;
  RealMatrix face_map(Eigen::Index(nb) * nb, np);
  for (Eigen::Index k = 0; k < np; ++k) {
    RealVector e = RealVector::Zero(np);
    e[k] = 1.0;
    face_map.col(k) = herm_to_real(v * herm_from_real(e) * v.adjoint());
  }

  const RealMatrix c_tp = ctx.tp.constraint_matrix() * face_map;
  const RealVector d_tp = ctx.tp.constraint_rhs();
  const RealMatrix g = ctx.phi_u * face_map;
  const RealVector& y = ctx.problem->y;

  // minimize ||G p - y||^2 + mu ||p - p0||^2 subject to C p = d
  const double mu = 1e-10 * std::max(1.0, lmax);
  const Eigen::Index nc = c_tp.rows();
  RealMatrix kkt = RealMatrix::Zero(np + nc, np + nc);
  kkt.topLeftCorner(np, np) =
      2.0 * (g.transpose() * g) + 2.0 * mu * RealMatrix::Identity(np, np);
  kkt.topRightCorner(np, nc) = c_tp.transpose();
  kkt.bottomLeftCorner(nc, np) = c_tp;
  RealVector rhs(np + nc);
  rhs.head(np) = 2.0 * (g.transpose() * y) + 2.0 * mu * p0;
  rhs.tail(nc) = d_tp;
  const Eigen::FullPivLU<RealMatrix> lu(kkt);
  RealVector sol = lu.solve(rhs);
  sol += lu.solve(RealVector(rhs - kkt * sol));  // one refinement pass
  const RealVector p = sol.head(np);

  // the block must stay strictly PSD for the face to be the right one
  Eigen::SelfAdjointEigenSolver<Matrix> peig(herm_from_real(p));
  if (std::getenv("QPT_DEBUG_POLISH"))
    std::fprintf(stderr, "[face r=%d cut=%.0e] pmin=%.2e tp=%.2e res-rad=%.2e\n",
                 r, face_cut_rel,
                 peig.eigenvalues().minCoeff(),
                 ctx.tp.residual(RealVector(face_map * p)),
                 ctx.ball.residual(RealVector(face_map * p)) - ctx.radius);
  if (peig.eigenvalues().minCoeff() < 1e-12 * std::max(1.0, lmax)) return false;

  RealVector u = face_map * p;
  const double tp_res = ctx.tp.residual(u);
  const double res = ctx.ball.residual(u);
  const bool ball_ok =
      !with_ball || res <= ctx.radius * (1 + 1e-7) + 1e-9 / ctx.scale();
  if (tp_res > 1e-8 || !ball_ok) return false;

  out->u = std::move(u);
  out->min_eig = 0.0;
  out->tp_res = tp_res;
  out->res = res;
  out->feasible = true;
  return true;
}

// Alternating projections until all constraints hold to a margin below the
// certificate tolerances. Each cycle ends on the PSD face so accepted points
// carry no negative eigenvalues at all. A near-degenerate ball behaves like
// the affine set Phi u = y and is merged with the TP constraint; the joint
// affine/PSD alternation avoids the shallow three-set angles there.
PolishOutcome polish(const SolveContext& ctx, RealVector u, bool with_ball,
                     double floor) {
  PolishOutcome out;
  const double radius = ctx.radius;
  const bool degenerate_ball = with_ball && radius <= 1e-7;

  std::unique_ptr<StackedAffineProjector> joint;
  if (degenerate_ball) {
    const RealMatrix& a_tp = ctx.tp.constraint_matrix();
    RealMatrix stacked(a_tp.rows() + ctx.phi_u.rows(), a_tp.cols());
    stacked.topRows(a_tp.rows()) = a_tp;
    stacked.bottomRows(ctx.phi_u.rows()) = ctx.phi_u;
    RealVector rhs(stacked.rows());
    rhs.head(a_tp.rows()) = ctx.tp.constraint_rhs();
    rhs.tail(ctx.phi_u.rows()) = ctx.problem->y;
    joint = std::make_unique<StackedAffineProjector>(stacked, std::move(rhs));
  }

  const int max_cycles = 100000;
  for (int cycle = 0; cycle < max_cycles; ++cycle) {
    RealVector pre_psd;
    if (degenerate_ball) {
      u = joint->project(u);
      pre_psd = u;
    } else {
      if (with_ball) u = ctx.ball.project(u);
      u = ctx.tp.project(u);
    }
    u = herm_to_real(project_psd(herm_from_real(u), floor));

    out.tp_res = ctx.tp.residual(u);
    out.res = ctx.ball.residual(u);
    const bool ball_ok =
        !with_ball || out.res <= radius * (1 + 1e-7) + 1e-9 / ctx.scale();
    if (out.tp_res <= 1e-8 && ball_ok) {
      out.min_eig = 0.0;
      out.feasible = true;
      break;
    }
    // the affine iterate satisfies its constraints exactly; accept it once
    // its smallest eigenvalue is inside the strictest downstream tolerance
    if (degenerate_ball && cycle % 16 == 15) {
      Eigen::SelfAdjointEigenSolver<Matrix> check(herm_from_real(pre_psd),
                                                  Eigen::EigenvaluesOnly);
      if (check.eigenvalues().minCoeff() >= -1e-9) {
        out.u = std::move(pre_psd);
        out.min_eig = check.eigenvalues().minCoeff();
        out.tp_res = ctx.tp.residual(out.u);
        out.res = ctx.ball.residual(out.u);
        out.feasible = true;
        return out;
      }
    }
    // alternation stalls when the active face is tangent to the constraints
    if (cycle == 1000 || cycle == 5000 || cycle == 20000 || cycle == 50000) {
      for (double cut : {1e-2, 1e-3, 1e-4, 1e-5})
        if (face_polish(ctx, u, with_ball, cut, &out)) return out;
    }
  }
  if (!out.feasible) {
    Eigen::SelfAdjointEigenSolver<Matrix> check(herm_from_real(u),
                                                Eigen::EigenvaluesOnly);
    out.min_eig = check.eigenvalues().minCoeff();
    out.tp_res = ctx.tp.residual(u);
    out.res = ctx.ball.residual(u);
    const double raw_res = out.res * ctx.scale();
    out.feasible =
        out.min_eig >= -kMinEigTol && out.tp_res <= kTpTol &&
        (!with_ball || raw_res <= ctx.problem->epsilon * (1 + 1e-6) + 1e-8);
  }
  out.u = std::move(u);
  return out;
}

RecoveryResult assemble(const SolveContext& ctx, const PolishOutcome& fin,
                        int iterations, bool converged) {
  const RecoveryProblem& p = *ctx.problem;
  RecoveryResult res;
  res.chi_star = make_process_matrix(herm_from_real(fin.u), p.phi.basis);
  res.objective = l1_norm(vec_chi(res.chi_star.chi));
  res.residual = (ctx.phi_u * fin.u - p.y).norm() * ctx.scale();
  res.epsilon = p.epsilon;
  res.iterations = iterations;
  res.converged = converged && fin.feasible;
  const CptpReport rep = check_cptp(res.chi_star);
  res.min_eig = rep.min_eigenvalue;
  res.tp_residual = rep.tp_residual;
  res.configurations = int(p.y.size());
  return res;
}

enum class Objective { l1, least_squares };

// Consensus ADMM over K proximable blocks sharing one variable:
//   x_k = prox_{f_k/rho}(z - u_k),  z = mean(x_k + u_k),  u_k += x_k - z
RecoveryResult run_admm(const SolveContext& ctx, Objective objective,
                        const SolverOptions& opts) {
  const RecoveryProblem& p = *ctx.problem;
  const Eigen::Index n = ctx.phi_u.cols();
  const int nb = ctx.nb;

  if (objective == Objective::l1 && ctx.ball.min_residual() > ctx.radius + 1e-12)
    throw InfeasibleError(
        "outcome vector is not within epsilon of the sensing range "
        "(best attainable residual " +
        std::to_string(ctx.ball.min_residual() * ctx.scale()) + ")");

  const int k_blocks = objective == Objective::l1 ? 4 : 3;
  double rho = opts.penalty;

  RealVector z = ctx.tp.project(RealVector::Zero(n));
  std::vector<RealVector> x(k_blocks, z), u(k_blocks, RealVector::Zero(n));

  const double eps_pri = opts.tol_primal * std::sqrt(double(n * k_blocks));
  const double eps_dual = opts.tol_dual * std::sqrt(double(n * k_blocks));

  int iter = 0;
  bool converged = false;
  int stall_count = 0;
  RealVector z_prev = z;

  for (iter = 1; iter <= opts.max_iters; ++iter) {
    for (int k = 0; k < k_blocks; ++k) {
      const RealVector v = z - u[k];
      switch (k) {
        case 0:
          x[k] = objective == Objective::l1 ? herm_l1_prox(v, 1.0 / rho, nb)
                                            : ctx.ball.ls_prox(v, rho);
          break;
        case 1: x[k] = psd_project_coords(v, opts.psd_eig_floor); break;
        case 2: x[k] = ctx.tp.project(v); break;
        default: x[k] = ctx.ball.project(v); break;
      }
    }
    z_prev.swap(z);
    z = RealVector::Zero(n);
    for (int k = 0; k < k_blocks; ++k) z += x[k] + u[k];
    z /= double(k_blocks);

    double primal_sq = 0;
    for (int k = 0; k < k_blocks; ++k) {
      u[k] += x[k] - z;
      primal_sq += (x[k] - z).squaredNorm();
    }
    const double r_primal = std::sqrt(primal_sq);
    const double r_dual = rho * std::sqrt(double(k_blocks)) * (z - z_prev).norm();

    if (r_primal <= eps_pri && r_dual <= eps_dual) {
      converged = true;
      break;
    }

    // residual balancing keeps the two rates comparable
    if (iter % 25 == 0) {
      if (r_primal > 10 * r_dual) {
        rho *= 2;
        for (auto& uk : u) uk /= 2;
      } else if (r_dual > 10 * r_primal) {
        rho /= 2;
        for (auto& uk : u) uk *= 2;
      }
    }

    const double rel_change = (z - z_prev).norm() / std::max(1.0, z.norm());
    if (rel_change < 1e-12 && r_primal > 10 * eps_pri) {
      if (++stall_count >= 1000)
        throw InfeasibleError(
            "iterates stalled with persistent constraint violation; "
            "the feasible set appears empty for epsilon = " +
            std::to_string(p.epsilon));
    } else {
      stall_count = 0;
    }
  }

  const PolishOutcome fin =
      polish(ctx, z, objective == Objective::l1, opts.psd_eig_floor);
  return assemble(ctx, fin, std::min(iter, opts.max_iters), converged);
}

}  // namespace

RecoveryProblem make_recovery_problem(const RealVector& y_raw, SensingMatrix phi,
                                      double epsilon) {
  if (y_raw.size() != phi.phi.rows())
    throw DimensionError("outcome vector length differs from sensing rows");
  if (!(epsilon >= 0) || !std::isfinite(epsilon))
    throw std::invalid_argument("epsilon must be finite and nonnegative");
  RecoveryProblem p;
  p.y = y_raw / std::sqrt(double(y_raw.size()));
  p.phi = std::move(phi);
  p.epsilon = epsilon;
  return p;
}

CVector soft_threshold(const CVector& v, double tau) {
  if (tau < 0) throw std::invalid_argument("soft_threshold needs tau >= 0");
  CVector out = v;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    out[i] = a <= tau ? Complex(0, 0) : v[i] * ((a - tau) / a);
  }
  return out;
}

Matrix project_psd(const Matrix& chi, double eig_floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (chi + chi.adjoint()));
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed in project_psd");
  RealVector vals = eig.eigenvalues().cwiseMax(eig_floor);
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().adjoint();
}

TpProjector::TpProjector(const OperatorBasis& basis) {
  const int nb = basis.size();
  const int d = basis.dim();
  const Eigen::Index n = Eigen::Index(nb) * nb;

  // column k = Hermitian coordinates of sum_ab (E_k)_ab Gamma_b' Gamma_a;
  // the (j,i) entry contributes the adjoint of the (i,j) Gram product
  a_ = RealMatrix(d * d, n);
  Eigen::Index k = 0;
  for (int i = 0; i < nb; ++i)
    a_.col(k++) = herm_to_real(basis.elements[i].adjoint() * basis.elements[i]);
  const double s = 1.0 / std::numbers::sqrt2;
  for (int j = 0; j < nb; ++j)
    for (int i = 0; i < j; ++i) {
      const Matrix g = basis.elements[j].adjoint() * basis.elements[i];
      a_.col(k++) = herm_to_real(s * (g + g.adjoint()));
      a_.col(k++) = herm_to_real(Complex(0, 1) * s * (g - g.adjoint()));
    }
  b_ = herm_to_real(Matrix::Identity(d, d));

  const RealMatrix gramian = a_ * a_.transpose();
  pinv_ = a_.transpose() * gramian.ldlt().solve(RealMatrix::Identity(d * d, d * d));
}

RealVector TpProjector::project(const RealVector& u) const {
  return u - pinv_ * (a_ * u - b_);
}

double TpProjector::residual(const RealVector& u) const {
  return (a_ * u - b_).norm();
}

Matrix project_tp(const Matrix& chi, const OperatorBasis& basis) {
  TpProjector proj(basis);
  return herm_from_real(proj.project(herm_to_real(require_hermitian(chi, 1e-8))));
}

RecoveryResult solve_cqpt(const RecoveryProblem& problem, const SolverOptions& opts) {
  SolveContext ctx(problem);
  return run_admm(ctx, Objective::l1, opts);
}

RecoveryResult solve_constrained_ls(const RecoveryProblem& problem,
                                    const SolverOptions& opts) {
  const Eigen::Index m = problem.phi.phi.rows();
  if (m == 0) throw std::invalid_argument("empty problem");
  const Eigen::Index n = problem.phi.phi.cols();
  if (m < n / 4)
    std::fprintf(stderr,
                 "solve_constrained_ls: m = %lld below the recommended %lld\n",
                 static_cast<long long>(m), static_cast<long long>(n / 4));
  SolveContext ctx(problem);
  return run_admm(ctx, Objective::least_squares, opts);
}

double calibrate_epsilon(const RecoveryResult& chi_full, int m_selected,
                         double factor) {
  if (m_selected < 1) throw std::invalid_argument("selection size must be positive");
  if (chi_full.configurations < 1)
    throw std::invalid_argument(
        "full fit does not record its configuration count");
  const double sigma =
      chi_full.residual / std::sqrt(double(chi_full.configurations));
  return factor * std::sqrt(double(m_selected)) * sigma;
}

}  // namespace cqpt
