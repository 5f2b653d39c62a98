#include <cmath>

#include "solver_internal.hpp"

namespace deflation {

namespace {

bool strictly_feasible(const InequalityConstraints& ineq, const Vec& x) {
  if (ineq.count == 0) return true;
  const Vec d = ineq.value(x);
  return d.allFinite() && (d.array() < 0.0).all();
}

double barrier_term(const InequalityConstraints& ineq, const Vec& x, double r) {
  if (ineq.count == 0) return 0.0;
  const Vec d = ineq.value(x);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < d.size(); ++j) {
    // log of a nonpositive argument is the +inf sentinel
    if (!(d[j] < 0.0) || !std::isfinite(d[j])) return kInf;
    acc -= std::log(-d[j]);
  }
  return r * acc;
}

Vec barrier_gradient(const InequalityConstraints& ineq, const Vec& x, double r) {
  if (ineq.count == 0) return Vec::Zero(x.size());
  const Vec d = ineq.value(x);
  const Mat jac = ineq.jacobian(x);
  Vec w(d.size());
  for (Eigen::Index j = 0; j < d.size(); ++j) w[j] = r / -d[j];
  return jac.transpose() * w;
}

// Multiplier estimates mu_j = r / -d_j give the stationarity residual of the original problem.
double kkt_stationarity(const Vec& grad_f, const InequalityConstraints& ineq, const Vec& x,
                        double r) {
  return inf_norm(grad_f + barrier_gradient(ineq, x, r));
}

std::vector<double> schedule(const SolverOptions& opts) {
  std::vector<double> rs;
  for (double r = opts.barrier_r0;; r *= opts.barrier_decay) {
    rs.push_back(r);
    if (r <= opts.barrier_min) break;
  }
  return rs;
}

}  // namespace

SolveReport log_barrier_solve(const Objective& f, const InequalityConstraints& ineq,
                              const Vec& x0, const SolverOptions& opts) {
  opts.validate();
  if (!strictly_feasible(ineq, x0)) throw Error("barrier requires strictly feasible start");
  detail::Stopwatch clock;
  SolveReport rep;
  Vec x = x0;
  if (opts.record_trajectory) rep.trajectory.push_back(x);
  SolverOptions inner = opts;
  inner.max_iter = opts.barrier_inner_iter;
  SolveReport last;
  double r_last = opts.barrier_r0;
  for (double r : schedule(opts)) {
    Objective phi;
    phi.value = [&, r](const Vec& z) {
      const double b = barrier_term(ineq, z, r);
      if (!std::isfinite(b)) return kInf;
      return f.value(z) + b;
    };
    phi.gradient = [&, r](const Vec& z) { return Vec(f.gradient(z) + barrier_gradient(ineq, z, r)); };
    // warm start from the previous subproblem
    last = lbfgs_minimize(phi, x, inner);
    x = last.x_star;
    rep.iterations += last.iterations;
    r_last = r;
    if (opts.record_trajectory) {
      rep.trajectory.insert(rep.trajectory.end(), last.trajectory.begin() + 1, last.trajectory.end());
    }
    if (rep.iterations >= opts.max_iter * opts.barrier_inner_iter) break;
  }
  rep.x_star = x;
  rep.objective = f.value(x);
  rep.status = last.status;
  rep.residual = last.residual;
  rep.message = "final barrier coefficient " + std::to_string(r_last) +
                ", KKT stationarity " + std::to_string(kkt_stationarity(f.gradient(x), ineq, x, r_last));
  rep.wall_time = clock.seconds();
  return rep;
}

SolveReport log_barrier_solve(const Nlp& nlp, const Vec& x0, const SolverOptions& opts) {
  nlp.validate();
  require(nlp.num_eq == 0, "log barrier backend does not handle equality constraints");
  std::vector<std::pair<int, double>> bound_rows;  // (index, sign): sign*(x_i - bound) <= 0
  std::vector<double> bound_vals;
  for (int i = 0; i < nlp.n; ++i) {
    if (std::isfinite(nlp.upper[i])) {
      bound_rows.push_back({i, 1.0});
      bound_vals.push_back(nlp.upper[i]);
    }
    if (std::isfinite(nlp.lower[i])) {
      bound_rows.push_back({i, -1.0});
      bound_vals.push_back(nlp.lower[i]);
    }
  }
  InequalityConstraints ineq;
  ineq.count = nlp.num_ineq + static_cast<int>(bound_rows.size());
  ineq.value = [&nlp, bound_rows, bound_vals](const Vec& x) {
    Vec d(nlp.num_ineq + bound_rows.size());
    if (nlp.num_ineq) d.head(nlp.num_ineq) = nlp.ineq(x);
    for (std::size_t k = 0; k < bound_rows.size(); ++k) {
      const auto [i, sign] = bound_rows[k];
      d[nlp.num_ineq + k] = sign * (x[i] - bound_vals[k]);
    }
    return d;
  };
  ineq.jacobian = [&nlp, bound_rows](const Vec& x) {
    Mat j = Mat::Zero(nlp.num_ineq + bound_rows.size(), nlp.n);
    if (nlp.num_ineq) j.topRows(nlp.num_ineq) = nlp.ineq_jacobian(x);
    for (std::size_t k = 0; k < bound_rows.size(); ++k) {
      j(nlp.num_ineq + k, bound_rows[k].first) = bound_rows[k].second;
    }
    return j;
  };
  Objective f{nlp.objective, nlp.gradient};
  return log_barrier_solve(f, ineq, x0, opts);
}

SolveReport log_barrier_solve(const StochasticObjective& f, const InequalityConstraints& ineq,
                              const Vec& x0, const SolverOptions& opts) {
  opts.validate();
  if (!strictly_feasible(ineq, x0)) throw Error("barrier requires strictly feasible start");
  detail::Stopwatch clock;
  SolveReport rep;
  Vec x = x0;
  if (opts.record_trajectory) rep.trajectory.push_back(x);
  SolveReport last;
  std::uint64_t stage = 0;
  for (double r : schedule(opts)) {
    StochasticObjective phi;
    phi.dim = f.dim;
    phi.default_samples = f.default_samples;
    phi.default_seed = f.default_seed;
    phi.estimate = [&, r](const Vec& z, std::uint64_t s, int n) {
      const double b = barrier_term(ineq, z, r);
      if (!std::isfinite(b)) return kInf;
      return f.estimate(z, s, n) + b;
    };
    phi.gradient_estimate = [&, r](const Vec& z, std::uint64_t s, int n) {
      return Vec(f.gradient_estimate(z, s, n) + barrier_gradient(ineq, z, r));
    };
    SolverOptions inner = opts;
    inner.seed = detail::mix_seed(opts.seed, stage++);
    last = adagrad_minimize(phi, x, inner, [&](const Vec& z) { return strictly_feasible(ineq, z); });
    x = last.x_star;
    rep.iterations += last.iterations;
    if (opts.record_trajectory) {
      rep.trajectory.insert(rep.trajectory.end(), last.trajectory.begin() + 1, last.trajectory.end());
    }
  }
  rep.x_star = x;
  rep.objective = f.estimate(x, f.default_seed, f.default_samples);
  rep.status = last.status;
  rep.residual = last.residual;
  rep.wall_time = clock.seconds();
  return rep;
}

}  // namespace deflation
