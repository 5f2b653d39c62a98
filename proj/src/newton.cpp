#include <cmath>

#include "solver_internal.hpp"

namespace deflation {

namespace {

bool newton_direction(const Mat& J, const Vec& F, Vec& d) {
  Eigen::FullPivLU<Mat> lu(J);
  if (lu.isInvertible()) {
    d = -lu.solve(F);
    if (d.allFinite()) return true;
  }
  Mat shifted = J;
  shifted.diagonal().array() += 1e-8;
  Eigen::FullPivLU<Mat> retry(shifted);
  if (!retry.isInvertible()) return false;
  d = -retry.solve(F);
  return d.allFinite();
}

}  // namespace

SolveReport newton_solve(const NonlinearSystem& system, const Vec& x0, const SolverOptions& opts) {
  opts.validate();
  require(system.residual && system.jacobian, "newton: residual and Jacobian callbacks required");
  require(x0.size() == system.dim, "newton: start has wrong dimension");
  detail::Stopwatch clock;
  SolveReport rep;
  Vec x = x0;
  Vec F = system.residual(x);
  require(F.allFinite(), "newton: residual must be finite at the start");
  double norm = F.norm();
  if (opts.record_trajectory) rep.trajectory.push_back(x);
  rep.status = SolveStatus::MaxIter;

  for (int k = 0; k <= opts.max_iter; ++k) {
    rep.residual = inf_norm(F);
    if (rep.residual <= opts.grad_tol) {
      rep.status = SolveStatus::Converged;
      break;
    }
    if (k == opts.max_iter) break;
    Vec d;
    if (!newton_direction(system.jacobian(x), F, d)) {
      rep.status = SolveStatus::Singular;
      rep.message = "Jacobian singular after diagonal shift";
      break;
    }
    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt <= opts.max_backtracks; ++bt, alpha *= opts.backtrack) {
      const Vec trial = x + alpha * d;
      const Vec Ft = system.residual(trial);
      if (!Ft.allFinite()) continue;
      const double nt = Ft.norm();
      // the strict test stops rounding from accepting a step that changes nothing
      if (nt <= (1.0 - opts.armijo_c1 * alpha) * norm && nt < norm) {
        x = trial;
        F = Ft;
        norm = nt;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      rep.status = SolveStatus::LineSearchFail;
      rep.message = "no sufficient decrease of the residual norm";
      break;
    }
    rep.iterations = k + 1;
    if (opts.record_trajectory) rep.trajectory.push_back(x);
  }
  rep.x_star = x;
  rep.objective = 0.5 * norm * norm;
  rep.wall_time = clock.seconds();
  return rep;
}

}  // namespace deflation
