#include <algorithm>
#include <cmath>

#include "solver_internal.hpp"

namespace deflation {

SolveReport adagrad_minimize(const StochasticObjective& f, const Vec& theta0,
                             const SolverOptions& opts,
                             const std::function<bool(const Vec&)>& feasible) {
  opts.validate();
  require(theta0.size() == f.dim, "adagrad: start has wrong dimension");
  require(!feasible || feasible(theta0), "adagrad: start is infeasible");
  detail::Stopwatch clock;
  SolveReport rep;
  Vec theta = theta0;
  Vec G = Vec::Zero(f.dim);
  const int n_iter = opts.adagrad_iter;
  const int window = std::max(1, n_iter / 10);
  Vec tail_sum = Vec::Zero(f.dim);
  int tail_count = 0;
  if (opts.record_trajectory) rep.trajectory.push_back(theta);

  for (int t = 1; t <= n_iter; ++t) {
    const std::uint64_t seed = detail::mix_seed(opts.seed, static_cast<std::uint64_t>(t));
    const Vec g = f.gradient_estimate(theta, seed, opts.adagrad_samples);
    if (!g.allFinite()) {
      rep.status = SolveStatus::LineSearchFail;
      rep.message = "non-finite gradient estimate";
      break;
    }
    G = opts.adagrad_rho * G + g.cwiseProduct(g);
    const double eta = opts.adagrad_eta0 * std::pow(static_cast<double>(t), -opts.adagrad_decay);
    Vec step = (eta * g.array() / (G.array() + opts.adagrad_eps).sqrt()).matrix();
    Vec trial = theta - step;
    if (feasible) {
      int halvings = 0;
      while (!feasible(trial) && halvings < opts.max_backtracks) {
        step *= opts.backtrack;
        trial = theta - step;
        ++halvings;
      }
      if (!feasible(trial)) trial = theta;
    }
    theta = trial;
    rep.iterations = t;
    if (opts.record_trajectory) rep.trajectory.push_back(theta);
    if (t > n_iter - window) {
      tail_sum += g;
      ++tail_count;
    }
  }

  rep.x_star = theta;
  if (rep.status != SolveStatus::LineSearchFail) {
    rep.residual = tail_count ? inf_norm(tail_sum / tail_count) : kInf;
    rep.status = rep.residual <= opts.grad_tol ? SolveStatus::Converged : SolveStatus::MaxIter;
    rep.message = "iteration budget used; residual is the averaged late gradient";
  }
  rep.objective = f.estimate(theta, f.default_seed, f.default_samples);
  rep.wall_time = clock.seconds();
  return rep;
}

}  // namespace deflation
