#include <algorithm>
#include <cmath>
#include <vector>

#include "solver_internal.hpp"

namespace deflation {

namespace {

// Separable convex approximation around the current point plus the dual machinery
// used to solve it. Constraint rows carry an artificial variable y_i >= 0 with
// linear cost c_i and quadratic cost d_i / 2 so the subproblem is always feasible.
struct MmaSubproblem {
  Vec low, upp, alpha, beta;
  Vec p0, q0;
  Mat P, Q;  // m x n
  Vec b;
  double c_art = 1000.0;
  double d_art = 1.0;

  int n() const { return static_cast<int>(low.size()); }
  int m() const { return static_cast<int>(b.size()); }

  Vec primal(const Vec& lam) const {
    Vec x(n());
    for (int j = 0; j < n(); ++j) {
      const double pj = p0[j] + (m() ? P.col(j).dot(lam) : 0.0);
      const double qj = q0[j] + (m() ? Q.col(j).dot(lam) : 0.0);
      const double sp = std::sqrt(pj), sq = std::sqrt(qj);
      const double xj = (sp * low[j] + sq * upp[j]) / (sp + sq);
      x[j] = std::clamp(xj, alpha[j], beta[j]);
    }
    return x;
  }

  Vec artificial(const Vec& lam) const {
    return ((lam.array() - c_art).max(0.0) / d_art).matrix();
  }

  // approximated constraint values sum_j P/(U-x) + Q/(x-L) - b
  Vec approx_constraints(const Vec& x) const {
    Vec g = -b;
    for (int j = 0; j < n(); ++j) {
      g += P.col(j) / (upp[j] - x[j]) + Q.col(j) / (x[j] - low[j]);
    }
    return g;
  }

  double dual(const Vec& lam) const {
    const Vec x = primal(lam);
    const Vec y = artificial(lam);
    double w = 0.0;
    for (int j = 0; j < n(); ++j) {
      const double pj = p0[j] + (m() ? P.col(j).dot(lam) : 0.0);
      const double qj = q0[j] + (m() ? Q.col(j).dot(lam) : 0.0);
      w += pj / (upp[j] - x[j]) + qj / (x[j] - low[j]);
    }
    for (int i = 0; i < m(); ++i) {
      w += c_art * y[i] + 0.5 * d_art * y[i] * y[i] - lam[i] * y[i] - lam[i] * b[i];
    }
    return w;
  }

  Vec dual_gradient(const Vec& lam) const {
    return approx_constraints(primal(lam)) - artificial(lam);
  }

  Mat dual_hessian(const Vec& lam) const {
    const Vec x = primal(lam);
    Mat h = Mat::Zero(m(), m());
    for (int j = 0; j < n(); ++j) {
      if (x[j] <= alpha[j] || x[j] >= beta[j]) continue;
      const double ux = upp[j] - x[j], xl = x[j] - low[j];
      const double pj = p0[j] + P.col(j).dot(lam);
      const double qj = q0[j] + Q.col(j).dot(lam);
      const double curv = 2.0 * pj / (ux * ux * ux) + 2.0 * qj / (xl * xl * xl);
      const Vec a = P.col(j) / (ux * ux) - Q.col(j) / (xl * xl);
      h -= (a * a.transpose()) / curv;
    }
    for (int i = 0; i < m(); ++i) {
      if (lam[i] > c_art) h(i, i) -= 1.0 / d_art;
    }
    return h;
  }
};

// Projected Newton ascent on the concave dual over lambda >= 0.
double projected_dual_gradient(const Vec& lam, const Vec& g) {
  double pg = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam[i] > 0.0 || g[i] > 0.0) pg = std::max(pg, std::abs(g[i]));
  }
  return pg;
}

bool solve_dual(const MmaSubproblem& sub, Vec& lam) {
  const int m = sub.m();
  if (m == 0) return true;
  lam = lam.cwiseMax(0.0);
  double w = sub.dual(lam);
  for (int it = 0; it < 200; ++it) {
    const Vec g = sub.dual_gradient(lam);
    // free set: positive multipliers or ones the gradient pushes upward
    std::vector<int> free;
    for (int i = 0; i < m; ++i) {
      if (lam[i] > 0.0 || g[i] > 0.0) free.push_back(i);
    }
    const double pg = projected_dual_gradient(lam, g);
    if (pg <= 1e-12 * (1.0 + std::abs(w)) || free.empty()) return true;
    const Mat h = sub.dual_hessian(lam);
    const int nf = static_cast<int>(free.size());
    Mat hf(nf, nf);
    Vec gf(nf);
    for (int a = 0; a < nf; ++a) {
      gf[a] = g[free[a]];
      for (int c = 0; c < nf; ++c) hf(a, c) = -h(free[a], free[c]);
    }
    const double shift = 1e-10 * (1.0 + hf.diagonal().cwiseAbs().maxCoeff());
    hf.diagonal().array() += shift;
    Vec step = hf.ldlt().solve(gf);
    if (!step.allFinite() || step.dot(gf) <= 0.0) step = gf;
    // near the artificial-variable kink the ascent gain drops below the rounding
    // of w, so a flat value with a smaller projected gradient also counts
    const double flat = 1e-14 * (1.0 + std::abs(w));
    double t = 1.0;
    bool improved = false;
    for (int bt = 0; bt < 60; ++bt, t *= 0.5) {
      Vec trial = lam;
      for (int a = 0; a < nf; ++a) trial[free[a]] += t * step[a];
      trial = trial.cwiseMax(0.0);
      const double wt = sub.dual(trial);
      if (wt > w || (wt >= w - flat &&
                     projected_dual_gradient(trial, sub.dual_gradient(trial)) < 0.5 * pg)) {
        lam = trial;
        w = std::max(w, wt);
        improved = true;
        break;
      }
    }
    if (!improved) return pg <= 1e-8 * (1.0 + std::abs(w));
  }
  return true;
}

}  // namespace

SolveReport mma_solve(const Nlp& nlp, const Vec& x0, const SolverOptions& opts) {
  nlp.validate();
  opts.validate();
  require(nlp.num_eq == 0, "MMA backend handles inequality constraints only");
  require(nlp.has_finite_bounds(), "MMA backend requires finite bounds");
  detail::Stopwatch clock;
  const int n = nlp.n;
  const int m = nlp.num_ineq;
  const Vec& xmin = nlp.lower;
  const Vec& xmax = nlp.upper;
  const Vec range = (xmax - xmin).cwiseMax(1e-12);

  SolveReport rep;
  Vec x = detail::project(x0, &xmin, &xmax);
  double f = nlp.objective(x);
  require(std::isfinite(f), "objective must be finite at the starting point");
  Vec g = nlp.ineq_values(x);
  require(g.allFinite(), "constraints must be finite at the starting point");
  if (opts.record_trajectory) rep.trajectory.push_back(x);

  Vec xold1 = x, xold2 = x;
  MmaSubproblem sub;
  sub.low = x - opts.mma_asym_init * range;
  sub.upp = x + opts.mma_asym_init * range;
  Vec lam = Vec::Zero(m);
  rep.status = SolveStatus::MaxIter;

  for (int k = 0; k < opts.max_iter; ++k) {
    const Vec df = nlp.gradient(x);
    const Mat dg = nlp.ineq_jac(x);

    // asymptote update
    if (k < 2) {
      sub.low = x - opts.mma_asym_init * range;
      sub.upp = x + opts.mma_asym_init * range;
    } else {
      for (int j = 0; j < n; ++j) {
        const double osc = (x[j] - xold1[j]) * (xold1[j] - xold2[j]);
        const double factor = osc < 0.0 ? opts.mma_asym_dec : (osc > 0.0 ? opts.mma_asym_inc : 1.0);
        sub.low[j] = x[j] - factor * (xold1[j] - sub.low[j]);
        sub.upp[j] = x[j] + factor * (sub.upp[j] - xold1[j]);
        sub.low[j] = std::clamp(sub.low[j], x[j] - 10.0 * range[j], x[j] - 0.01 * range[j]);
        sub.upp[j] = std::clamp(sub.upp[j], x[j] + 0.01 * range[j], x[j] + 10.0 * range[j]);
      }
    }
    sub.alpha = xmin.cwiseMax(sub.low + 0.1 * (x - sub.low)).cwiseMax(x - opts.mma_move * range);
    sub.beta = xmax.cwiseMin(sub.upp - 0.1 * (sub.upp - x)).cwiseMin(x + opts.mma_move * range);

    const Vec ux2 = (sub.upp - x).array().square();
    const Vec xl2 = (x - sub.low).array().square();
    const Vec reg = (1e-5 / range.array()).matrix();
    sub.p0 = ux2.cwiseProduct(1.001 * df.cwiseMax(0.0) + 0.001 * (-df).cwiseMax(0.0) + reg);
    sub.q0 = xl2.cwiseProduct(0.001 * df.cwiseMax(0.0) + 1.001 * (-df).cwiseMax(0.0) + reg);
    sub.P.resize(m, n);
    sub.Q.resize(m, n);
    sub.b.resize(m);
    for (int i = 0; i < m; ++i) {
      const Vec row = dg.row(i).transpose();
      const Vec pi = ux2.cwiseProduct(1.001 * row.cwiseMax(0.0) + 0.001 * (-row).cwiseMax(0.0) + reg);
      const Vec qi = xl2.cwiseProduct(0.001 * row.cwiseMax(0.0) + 1.001 * (-row).cwiseMax(0.0) + reg);
      sub.P.row(i) = pi.transpose();
      sub.Q.row(i) = qi.transpose();
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += pi[j] / (sub.upp[j] - x[j]) + qi[j] / (x[j] - sub.low[j]);
      sub.b[i] = s - g[i];
    }

    if (!solve_dual(sub, lam)) {
      rep.status = SolveStatus::LineSearchFail;
      rep.message = "MMA dual subproblem failed";
      break;
    }
    Vec xnew = sub.primal(lam);

    // deflation singularities can make the exact functions non-finite at the
    // subproblem optimum; pull the step back toward x until they are finite
    double fnew = nlp.objective(xnew);
    Vec gnew = nlp.ineq_values(xnew);
    int halvings = 0;
    while ((!std::isfinite(fnew) || !gnew.allFinite()) && halvings < 40) {
      xnew = x + 0.5 * (xnew - x);
      fnew = nlp.objective(xnew);
      gnew = nlp.ineq_values(xnew);
      ++halvings;
    }
    if (!std::isfinite(fnew) || !gnew.allFinite()) {
      rep.status = SolveStatus::LineSearchFail;
      rep.message = "no finite step toward the subproblem solution";
      break;
    }

    const double change = inf_norm(xnew - x);
    xold2 = xold1;
    xold1 = x;
    x = xnew;
    f = fnew;
    g = gnew;
    rep.iterations = k + 1;
    if (opts.record_trajectory) rep.trajectory.push_back(x);

    Vec grad_l = nlp.gradient(x);
    if (m) grad_l += nlp.ineq_jac(x).transpose() * lam;
    const double stationarity = detail::projected_gradient_norm(x, grad_l, &xmin, &xmax);
    const double violation = m ? g.cwiseMax(0.0).maxCoeff() : 0.0;
    double complementarity = 0.0;
    for (int i = 0; i < m; ++i) complementarity = std::max(complementarity, std::abs(lam[i] * g[i]));
    const double kkt = std::max(stationarity, std::max(violation, complementarity));
    if (violation <= opts.constraint_tol &&
        ((stationarity <= opts.grad_tol && complementarity <= opts.constraint_tol) ||
         change <= opts.mma_xtol)) {
      rep.status = SolveStatus::Converged;
      rep.residual = stationarity <= opts.grad_tol ? kkt : change;
      rep.message = stationarity <= opts.grad_tol ? "KKT tolerance met" : "design change below tolerance";
      break;
    }
    rep.residual = kkt;
  }
  rep.x_star = x;
  rep.objective = f;
  rep.wall_time = clock.seconds();
  return rep;
}

}  // namespace deflation
