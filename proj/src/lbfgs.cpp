#include <cmath>
#include <deque>

#include "solver_internal.hpp"

namespace deflation {

SolveReport lbfgs_minimize(const Objective& f, const Vec& x0, const SolverOptions& opts,
                           const Vec* lower, const Vec* upper) {
  opts.validate();
  detail::Stopwatch clock;
  SolveReport rep;
  Vec x = detail::project(x0, lower, upper);
  double fx = f.value(x);
  require(std::isfinite(fx), "objective must be finite at the starting point");
  Vec g = f.gradient(x);
  if (opts.record_trajectory) rep.trajectory.push_back(x);

  std::deque<Vec> s_hist, y_hist;
  std::deque<double> rho_hist;
  const bool boxed = lower || upper;

  auto finish = [&](SolveStatus status, int iters, std::string msg = {}) {
    rep.x_star = x;
    rep.objective = fx;
    rep.iterations = iters;
    rep.status = status;
    rep.residual = boxed ? detail::projected_gradient_norm(x, g, lower, upper) : inf_norm(g);
    rep.message = std::move(msg);
    rep.wall_time = clock.seconds();
    return rep;
  };

  for (int it = 0; it < opts.max_iter; ++it) {
    const double measure = boxed ? detail::projected_gradient_norm(x, g, lower, upper) : inf_norm(g);
    if (measure <= opts.grad_tol) return finish(SolveStatus::Converged, it);

    // variables pinned at a bound by the gradient are held fixed for this step
    Eigen::Array<bool, Eigen::Dynamic, 1> active = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(x.size(), false);
    if (boxed) {
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        active[i] = (lower && x[i] <= (*lower)[i] && g[i] > 0.0) ||
                    (upper && x[i] >= (*upper)[i] && g[i] < 0.0);
      }
    }
    Vec gf = g;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (active[i]) gf[i] = 0.0;
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      Vec d;
      if (attempt == 0 && !s_hist.empty()) {
        // two-loop recursion
        Vec q = gf;
        std::vector<double> alpha(s_hist.size());
        for (int k = static_cast<int>(s_hist.size()) - 1; k >= 0; --k) {
          alpha[k] = rho_hist[k] * s_hist[k].dot(q);
          q -= alpha[k] * y_hist[k];
        }
        const double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
        Vec r = gamma * q;
        for (std::size_t k = 0; k < s_hist.size(); ++k) {
          const double beta = rho_hist[k] * y_hist[k].dot(r);
          r += s_hist[k] * (alpha[k] - beta);
        }
        d = -r;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
          if (active[i]) d[i] = 0.0;
        }
        if (!(d.dot(gf) < 0.0)) continue;
      } else {
        // steepest descent, scaled so the first trial step has unit length
        d = -gf / std::max(1.0, gf.norm());
      }

      double step = 1.0;
      for (int bt = 0; bt <= opts.max_backtracks; ++bt, step *= opts.backtrack) {
        const Vec trial = detail::project(x + step * d, lower, upper);
        if ((trial - x).squaredNorm() == 0.0) break;
        const double ft = f.value(trial);
        if (!std::isfinite(ft)) continue;
        if (ft <= fx + opts.armijo_c1 * g.dot(trial - x)) {
          const Vec gt = f.gradient(trial);
          const Vec s = trial - x;
          const Vec y = gt - g;
          const double sy = s.dot(y);
          if (sy > 1e-12 * s.norm() * y.norm()) {
            s_hist.push_back(s);
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opts.lbfgs_memory) {
              s_hist.pop_front();
              y_hist.pop_front();
              rho_hist.pop_front();
            }
          }
          x = trial;
          fx = ft;
          g = gt;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
      }
    }
    if (!accepted) return finish(SolveStatus::LineSearchFail, it, "no acceptable step");
    if (opts.record_trajectory) rep.trajectory.push_back(x);
  }
  const double measure = boxed ? detail::projected_gradient_norm(x, g, lower, upper) : inf_norm(g);
  if (measure <= opts.grad_tol) return finish(SolveStatus::Converged, opts.max_iter);
  return finish(SolveStatus::MaxIter, opts.max_iter);
}

}  // namespace deflation
