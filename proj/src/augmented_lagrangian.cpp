#include <cmath>

#include "solver_internal.hpp"

namespace deflation {

SolveReport augmented_lagrangian_solve(const Nlp& nlp, const Vec& x0, const SolverOptions& opts) {
  nlp.validate();
  opts.validate();
  detail::Stopwatch clock;
  const Vec* lo = &nlp.lower;
  const Vec* up = &nlp.upper;
  SolveReport rep;
  Vec x = detail::project(x0, lo, up);
  Vec lambda = Vec::Zero(nlp.num_eq);
  Vec mu = Vec::Zero(nlp.num_ineq);
  double rho = opts.al_rho0;
  double prev_violation = kInf;
  if (opts.record_trajectory) rep.trajectory.push_back(x);

  SolverOptions inner = opts;
  inner.max_iter = opts.al_inner_iter;
  inner.record_trajectory = opts.record_trajectory;

  auto lagrangian_gradient = [&](const Vec& z) {
    Vec g = nlp.gradient(z);
    if (nlp.num_eq) g += nlp.eq_jacobian(z).transpose() * lambda;
    if (nlp.num_ineq) g += nlp.ineq_jacobian(z).transpose() * mu;
    return g;
  };

  for (int outer = 0; outer < opts.max_iter; ++outer) {
    Objective la;
    la.value = [&](const Vec& z) {
      const double f = nlp.objective(z);
      if (!std::isfinite(f)) return kInf;
      double v = f;
      if (nlp.num_eq) {
        const Vec c = nlp.eq(z);
        v += lambda.dot(c) + 0.5 * rho * c.squaredNorm();
      }
      if (nlp.num_ineq) {
        const Vec d = nlp.ineq(z);
        if (!d.allFinite()) return kInf;
        const Vec shifted = (mu + rho * d).cwiseMax(0.0);
        v += (shifted.squaredNorm() - mu.squaredNorm()) / (2.0 * rho);
      }
      return v;
    };
    la.gradient = [&](const Vec& z) {
      Vec g = nlp.gradient(z);
      if (nlp.num_eq) g += nlp.eq_jacobian(z).transpose() * (lambda + rho * nlp.eq(z));
      if (nlp.num_ineq) {
        g += nlp.ineq_jacobian(z).transpose() * (mu + rho * nlp.ineq(z)).cwiseMax(0.0);
      }
      return g;
    };
    const SolveReport sub = lbfgs_minimize(la, x, inner, lo, up);
    x = sub.x_star;
    rep.iterations += sub.iterations;
    if (opts.record_trajectory) {
      rep.trajectory.insert(rep.trajectory.end(), sub.trajectory.begin() + 1, sub.trajectory.end());
    }

    const Vec c = nlp.eq_values(x);
    const Vec d = nlp.ineq_values(x);
    if (nlp.num_eq) lambda += rho * c;
    if (nlp.num_ineq) mu = (mu + rho * d).cwiseMax(0.0);

    double violation = inf_norm(c);
    double complementarity = 0.0;
    for (Eigen::Index j = 0; j < d.size(); ++j) {
      violation = std::max(violation, std::max(d[j], 0.0));
      complementarity = std::max(complementarity, std::abs(mu[j] * d[j]));
    }
    const double stationarity =
        detail::projected_gradient_norm(x, lagrangian_gradient(x), lo, up);
    rep.residual = std::max(stationarity, std::max(violation, complementarity));
    if (stationarity <= opts.grad_tol && violation <= opts.constraint_tol &&
        complementarity <= opts.constraint_tol) {
      rep.status = SolveStatus::Converged;
      rep.message = "KKT tolerances met after " + std::to_string(outer + 1) + " outer iterations";
      break;
    }
    if (sub.status == SolveStatus::LineSearchFail && violation <= opts.constraint_tol &&
        stationarity <= 10.0 * opts.grad_tol) {
      // stalled at the precision floor of the inner solve; one more outer round cannot help
      rep.status = SolveStatus::LineSearchFail;
      rep.message = "inner line search stalled near KKT point";
      break;
    }
    if (violation > 0.25 * prev_violation) {
      if (rho >= opts.al_rho_max && violation > opts.constraint_tol) {
        rep.status = SolveStatus::MaxIter;
        rep.message = "penalty reached rho_max without feasibility (violation " +
                      std::to_string(violation) + ")";
        break;
      }
      rho = std::min(rho * opts.al_growth, opts.al_rho_max);
    }
    prev_violation = violation;
  }
  rep.x_star = x;
  rep.objective = nlp.objective(x);
  rep.wall_time = clock.seconds();
  return rep;
}

}  // namespace deflation
