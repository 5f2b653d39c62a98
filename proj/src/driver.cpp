#include "deflation/driver.hpp"

#include <cmath>
#include <random>

#include "solver_internal.hpp"

namespace deflation {

std::string to_string(Backend b) {
  switch (b) {
    case Backend::AugmentedLagrangian: return "al";
    case Backend::Barrier: return "barrier";
    case Backend::Mma: return "mma";
    case Backend::Adagrad: return "adagrad";
    case Backend::Newton: return "newton";
  }
  return "unknown";
}

Backend backend_from_string(const std::string& s) {
  if (s == "al") return Backend::AugmentedLagrangian;
  if (s == "barrier") return Backend::Barrier;
  if (s == "mma") return Backend::Mma;
  if (s == "adagrad") return Backend::Adagrad;
  if (s == "newton") return Backend::Newton;
  throw Error("unknown solver '" + s + "'");
}

void RunConfig::validate() const {
  require(n_solutions >= 1, "n_solutions must be at least 1");
  require(max_outer >= 0, "max_outer must be nonnegative");
  require(intermediate_every >= 0, "intermediate_every must be nonnegative");
  require(failure_budget >= 1, "failure budget must be at least 1");
  require(kkt_tol > 0.0 && y_threshold > 0.0, "tolerances must be positive");
  require(x0.size() > 0, "initial point is empty");
  deflation.validate();
  options.validate();
}

double RunConfig::effective_dedup_tol(int n) const {
  return dedup_tol >= 0.0 ? dedup_tol : dedup_tolerance(deflation.radius, n);
}

std::vector<SolutionRecord> SolutionSet::accepted() const {
  std::vector<SolutionRecord> out;
  for (const auto& r : attempts) {
    if (r.accepted) out.push_back(r);
  }
  return out;
}

std::vector<Vec> SolutionSet::points() const {
  std::vector<Vec> out;
  for (const auto& r : attempts) {
    if (r.accepted) out.push_back(r.x);
  }
  return out;
}

std::size_t SolutionSet::size() const {
  std::size_t n = 0;
  for (const auto& r : attempts) n += r.accepted ? 1 : 0;
  return n;
}

std::vector<Vec> intermediate_deflation_points(const std::vector<Vec>& trajectory, int every_k) {
  std::vector<Vec> out;
  if (every_k <= 0 || trajectory.empty()) return out;
  const std::size_t n = trajectory.size() - 1;
  for (std::size_t t = every_k; t <= n; t += every_k) out.push_back(trajectory[t - every_k]);
  return out;
}

std::vector<Vec> deduplicate(const std::vector<Vec>& candidates, double tol) {
  std::vector<Vec> kept;
  for (const Vec& c : candidates) {
    bool close = false;
    for (const Vec& k : kept) {
      if ((c - k).norm() <= tol) {
        close = true;
        break;
      }
    }
    if (!close) kept.push_back(c);
  }
  return kept;
}

SolutionSet deduplicate(const SolutionSet& set, double tol) {
  SolutionSet out = set;
  std::vector<Vec> kept;
  for (auto& r : out.attempts) {
    if (!r.accepted) continue;
    for (const Vec& k : kept) {
      if ((r.x - k).norm() <= tol) {
        r.accepted = false;
        r.failure = "duplicate of an accepted solution";
        break;
      }
    }
    if (r.accepted) kept.push_back(r.x);
  }
  return out;
}

namespace {

double min_euclidean(const std::vector<Vec>& pts, const Vec& x) {
  double best = kInf;
  for (const Vec& p : pts) best = std::min(best, (x - p).norm());
  return best;
}

SolveReport solve_with(const Nlp& nlp, const Vec& z0, Backend b, const SolverOptions& opts) {
  switch (b) {
    case Backend::AugmentedLagrangian: return augmented_lagrangian_solve(nlp, z0, opts);
    case Backend::Barrier: return log_barrier_solve(nlp, z0, opts);
    case Backend::Mma: return mma_solve(nlp, z0, opts);
    default: throw Error("solver '" + to_string(b) + "' cannot solve constrained problems");
  }
}

struct Attempt {
  SolveReport report;
  int transient = 0;
};

// Segmented solve: after each block of k backend iterations the block's start point is
// deflated for the rest of this solve, provided the current iterate is outside its ball.
Attempt solve_deflated(const Nlp& base, const DeflationPool& pool, const RunConfig& cfg) {
  const DeflatedNlp deflated(base, pool, cfg.deflation, cfg.mode);
  Attempt a;
  const Vec z0 = deflated.initial_point(cfg.x0);
  if (cfg.intermediate_every == 0) {
    a.report = solve_with(deflated.as_nlp(), z0, cfg.solver, cfg.options);
    return a;
  }
  detail::Stopwatch clock;
  DeflationPool transient = pool;
  SolverOptions seg = cfg.options;
  seg.max_iter = cfg.intermediate_every;
  Vec z = z0;
  int used = 0;
  SolveReport last;
  while (true) {
    const DeflatedNlp current(base, transient, cfg.deflation, cfg.mode);
    const Vec start = z;
    last = solve_with(current.as_nlp(), z, cfg.solver, seg);
    used += last.iterations;
    z = last.x_star;
    if (last.converged() || used >= cfg.options.max_iter || last.iterations == 0) break;
    const Vec x = current.x_part(z);
    const Vec candidate = current.x_part(start);
    if (!deflation_term(cfg.deflation, x, candidate).is_singular) {
      transient.add(candidate);
      ++a.transient;
      const DeflatedNlp next(base, transient, cfg.deflation, cfg.mode);
      z = next.initial_point(x);
    }
  }
  a.report = last;
  a.report.iterations = used;
  a.report.wall_time = clock.seconds();
  return a;
}

// Without KKT certification a y held at its upper bound still marks a design at finite
// distance from the pool, so only a numerically unbounded y is rejected.
bool finite_enough(const SolutionRecord& rec, const RunConfig& cfg) {
  if (rec.finite_y) return true;
  return !cfg.require_kkt && std::isfinite(rec.y_star) && std::abs(rec.y_star) < cfg.y_threshold;
}

// Product aggregation has no empty form; an empty Sum pool is the undeflated problem.
DeflationPool working_pool(const DeflationPool& pool) {
  return pool.empty() ? DeflationPool(Aggregation::Sum) : pool;
}

void finish_record(SolutionRecord& rec, const std::vector<Vec>& accepted, double dedup_tol) {
  if (rec.failure.empty() && min_euclidean(accepted, rec.x) <= dedup_tol) {
    rec.failure = "duplicate of an accepted solution";
  }
  rec.accepted = rec.failure.empty();
}

}  // namespace

SolutionSet find_multiple_solutions(const Nlp& problem, const RunConfig& cfg) {
  cfg.validate();
  problem.validate();
  require(cfg.x0.size() == problem.n, "initial point has wrong dimension");
  if (cfg.solver == Backend::Barrier) {
    if (const auto* s = std::get_if<SlackMode>(&cfg.mode)) {
      require(std::isfinite(s->y_upper), "barrier backend needs a finite y_upper in slack mode");
    }
  }
  const double dedup_tol = cfg.effective_dedup_tol(problem.n);
  SolutionSet set;
  DeflationPool pool(cfg.aggregation);
  std::vector<Vec> accepted;
  int consecutive = 0;
  for (int it = 0;; ++it) {
    if (static_cast<int>(accepted.size()) >= cfg.n_solutions) break;
    if (cfg.max_outer > 0 && it >= cfg.max_outer) break;
    if (consecutive >= cfg.failure_budget) break;

    SolutionRecord rec;
    rec.iteration = it;
    rec.pool_size = pool.size();
    const DeflationPool view = working_pool(pool);
    Attempt a;
    Vec z;
    try {
      if (pool.empty()) {
        a.report = solve_with(problem, cfg.x0, cfg.solver, cfg.options);
        const DeflatedNlp trivial(problem, view, cfg.deflation, cfg.mode);
        z = trivial.initial_point(a.report.x_star);
      } else {
        a = solve_deflated(problem, pool, cfg);
        z = a.report.x_star;
      }
    } catch (const Error& e) {
      rec.failure = std::string("solver error: ") + e.what();
      rec.x = cfg.x0;
      set.attempts.push_back(rec);
      ++consecutive;
      continue;
    }
    const DeflatedNlp deflated(problem, view, cfg.deflation, cfg.mode);
    rec.x = deflated.x_part(z);
    rec.objective = problem.objective(rec.x);
    rec.status = a.report.status;
    rec.solver_iterations = a.report.iterations;
    rec.wall_time = a.report.wall_time;
    rec.transient_insertions = a.transient;
    rec.y_star = deflated.y_part(z);
    const DeflationValue m = deflation_value(cfg.deflation, view, rec.x);
    rec.m_value = m.value;

    const Lemma1Verdict v = verify_lemma1(deflated, z, cfg.kkt_tol, cfg.y_threshold);
    rec.kkt = v.base_kkt;
    rec.eta = v.eta;
    rec.finite_y = v.finite_y;
    rec.eta_zero = v.eta_zero;
    rec.original_kkt = v.original_kkt;
    rec.distinct = pool.empty() || v.distinct;
    rec.min_pool_distance = v.min_distance;
    rec.notes = v.notes;
    rec.constraint_active = !m.is_singular && std::abs(m.value - rec.y_star) <= kActiveTol;
    rec.residual = v.base_kkt.worst();

    if (!a.report.converged()) rec.failure = "solver did not converge: " + to_string(rec.status);
    else if (!finite_enough(rec, cfg)) rec.failure = "y* is not finite";
    else if (!rec.distinct) rec.failure = "returned a known solution";
    else if (cfg.require_kkt && !rec.eta_zero) rec.failure = "deflation multiplier is nonzero";
    else if (cfg.require_kkt && !rec.original_kkt) rec.failure = "not a KKT point of the base problem";
    finish_record(rec, accepted, dedup_tol);

    if (rec.accepted) {
      pool.add(rec.x);
      accepted.push_back(rec.x);
      consecutive = 0;
    } else {
      ++consecutive;
    }
    set.attempts.push_back(std::move(rec));
  }
  return set;
}

SolutionSet find_multiple_solutions(const NonlinearSystem& system, const RunConfig& cfg) {
  cfg.validate();
  require(cfg.x0.size() == system.dim, "initial point has wrong dimension");
  require(cfg.solver == Backend::Newton, "nonlinear systems are solved with the newton backend");
  const double dedup_tol = cfg.effective_dedup_tol(system.dim);
  SolutionSet set;
  DeflationPool pool(cfg.aggregation);
  std::vector<Vec> accepted;
  int consecutive = 0;
  for (int it = 0;; ++it) {
    if (static_cast<int>(accepted.size()) >= cfg.n_solutions) break;
    if (cfg.max_outer > 0 && it >= cfg.max_outer) break;
    if (consecutive >= cfg.failure_budget) break;

    SolutionRecord rec;
    rec.iteration = it;
    rec.pool_size = pool.size();
    const DeflationPool view = working_pool(pool);
    const DeflatedSystem deflated(system, view, cfg.deflation, cfg.system_mode);
    SolveReport rep;
    try {
      rep = pool.empty() ? newton_solve(system, cfg.x0, cfg.options)
                         : newton_solve(deflated.as_system(), deflated.initial_point(cfg.x0), cfg.options);
    } catch (const Error& e) {
      rec.failure = std::string("solver error: ") + e.what();
      rec.x = cfg.x0;
      set.attempts.push_back(rec);
      ++consecutive;
      continue;
    }
    rec.x = rep.x_star.head(system.dim);
    rec.status = rep.status;
    rec.solver_iterations = rep.iterations;
    rec.wall_time = rep.wall_time;
    const Vec F = system.residual(rec.x);
    rec.residual = inf_norm(F);
    rec.objective = 0.5 * F.squaredNorm();
    const DeflationValue m = deflation_value(cfg.deflation, view, rec.x);
    rec.m_value = m.value;
    if (cfg.system_mode == SystemMode::Constraint && !pool.empty()) {
      rec.y_star = rep.x_star[system.dim];
    } else {
      rec.y_star = pool.empty() ? 1.0 : m.value;
    }
    rec.finite_y = std::isfinite(rec.y_star) && std::abs(rec.y_star) < cfg.y_threshold;
    rec.min_pool_distance = min_pool_distance(cfg.deflation.measure, pool, rec.x);
    rec.distinct = pool.empty() || (rec.min_pool_distance > cfg.deflation.radius &&
                                    min_euclidean(pool.solutions(), rec.x) > dedup_tolerance(0.0, system.dim));
    rec.original_kkt = rec.residual <= cfg.options.grad_tol;
    rec.eta_zero = true;

    if (!rep.converged()) rec.failure = "solver did not converge: " + to_string(rec.status);
    else if (!rec.finite_y) rec.failure = "y* is not finite";
    else if (!rec.distinct) rec.failure = "returned a known solution";
    else if (!rec.original_kkt) rec.failure = "base residual above tolerance";
    finish_record(rec, accepted, dedup_tol);
    if (rec.accepted) {
      pool.add(rec.x);
      accepted.push_back(rec.x);
      consecutive = 0;
    } else {
      ++consecutive;
    }
    set.attempts.push_back(std::move(rec));
  }
  return set;
}

SolutionSet find_multiple_solutions(const StochasticObjective& objective, const RunConfig& cfg) {
  cfg.validate();
  require(cfg.x0.size() == objective.dim, "initial point has wrong dimension");
  require(cfg.solver == Backend::Barrier || cfg.solver == Backend::Adagrad,
          "stochastic problems use the barrier or adagrad backend");
  const auto* slack = std::get_if<SlackMode>(&cfg.mode);
  require(slack != nullptr, "stochastic problems use slack mode");
  require(std::isfinite(slack->y_upper), "stochastic deflation needs a finite y_upper");
  const int n = objective.dim;
  const double dedup_tol = cfg.effective_dedup_tol(n);
  const double y_lo = slack->y_lower, y_hi = slack->y_upper;

  SolutionSet set;
  DeflationPool pool(cfg.aggregation);
  std::vector<Vec> accepted;
  int consecutive = 0;
  for (int it = 0;; ++it) {
    if (static_cast<int>(accepted.size()) >= cfg.n_solutions) break;
    if (cfg.max_outer > 0 && it >= cfg.max_outer) break;
    if (consecutive >= cfg.failure_budget) break;

    SolutionRecord rec;
    rec.iteration = it;
    rec.pool_size = pool.size();
    const DeflationPool view = working_pool(pool);
    SolverOptions opts = cfg.options;
    opts.seed = detail::mix_seed(cfg.seed, static_cast<std::uint64_t>(it));

    // (theta, y) with rows m(theta) - y, y_lower - y, y - y_upper
    StochasticObjective lifted;
    lifted.dim = n + 1;
    lifted.default_samples = objective.default_samples;
    lifted.default_seed = objective.default_seed;
    lifted.estimate = [&](const Vec& z, std::uint64_t s, int k) { return objective.estimate(z.head(n), s, k); };
    lifted.gradient_estimate = [&](const Vec& z, std::uint64_t s, int k) {
      Vec g = Vec::Zero(n + 1);
      g.head(n) = objective.gradient_estimate(z.head(n), s, k);
      return g;
    };
    InequalityConstraints ineq;
    ineq.count = 3;
    ineq.value = [&](const Vec& z) {
      const DeflationValue m = deflation_value(cfg.deflation, view, z.head(n));
      Vec d(3);
      d << (m.is_singular ? kInf : m.value - z[n]), y_lo - z[n], z[n] - y_hi;
      return d;
    };
    ineq.jacobian = [&](const Vec& z) {
      Mat J = Mat::Zero(3, n + 1);
      J.block(0, 0, 1, n) = deflation_gradient(cfg.deflation, view, z.head(n)).transpose();
      J(0, n) = -1.0;
      J(1, n) = -1.0;
      J(2, n) = 1.0;
      return J;
    };
    const DeflationValue m0 = deflation_value(cfg.deflation, view, cfg.x0);
    double y0 = m0.is_singular ? 0.5 * (y_lo + y_hi) : std::max(m0.value + 1.0, y_lo + 1e-3 * (y_hi - y_lo));
    if (y0 >= y_hi) y0 = m0.is_singular || m0.value >= y_hi ? 0.5 * (y_lo + y_hi) : 0.5 * (m0.value + y_hi);
    Vec z0(n + 1);
    z0 << cfg.x0, y0;

    SolveReport rep;
    try {
      if (cfg.solver == Backend::Barrier) {
        rep = log_barrier_solve(lifted, ineq, z0, opts);
      } else {
        InequalityConstraints ineq_copy = ineq;
        rep = adagrad_minimize(lifted, z0, opts, [&](const Vec& z) {
          const Vec d = ineq_copy.value(z);
          return d.allFinite() && (d.array() < 0.0).all();
        });
      }
    } catch (const Error& e) {
      rec.failure = std::string("solver error: ") + e.what();
      rec.x = cfg.x0;
      set.attempts.push_back(rec);
      ++consecutive;
      continue;
    }
    rec.x = rep.x_star.head(n);
    rec.y_star = rep.x_star[n];
    rec.status = rep.status;
    rec.solver_iterations = rep.iterations;
    rec.wall_time = rep.wall_time;
    rec.objective = objective.estimate(rec.x, objective.default_seed, cfg.stochastic_check_samples);
    const Vec g = objective.gradient_estimate(rec.x, objective.default_seed, cfg.stochastic_check_samples);
    rec.residual = inf_norm(g);
    const DeflationValue m = deflation_value(cfg.deflation, view, rec.x);
    rec.m_value = m.value;
    rec.constraint_active = !m.is_singular && std::abs(m.value - rec.y_star) <= kActiveTol;
    const bool at_upper = y_hi - rec.y_star <= kActiveTol;
    rec.finite_y = std::isfinite(rec.y_star) && std::abs(rec.y_star) < cfg.y_threshold && !at_upper;
    if (at_upper) rec.notes.push_back("y sits at its upper bound");
    rec.min_pool_distance = min_pool_distance(cfg.deflation.measure, pool, rec.x);
    rec.distinct = pool.empty() || (rec.min_pool_distance > cfg.deflation.radius &&
                                    min_euclidean(pool.solutions(), rec.x) > dedup_tolerance(0.0, n));
    rec.original_kkt = rec.residual <= cfg.stochastic_grad_tol;
    rec.eta_zero = rec.original_kkt;
    rec.kkt.stationarity = rec.residual;

    if (!finite_enough(rec, cfg)) rec.failure = "y* is not finite";
    else if (!rec.distinct) rec.failure = "returned a known solution";
    else if (!rec.original_kkt) rec.failure = "averaged gradient above tolerance";
    finish_record(rec, accepted, dedup_tol);
    if (rec.accepted) {
      pool.add(rec.x);
      accepted.push_back(rec.x);
      consecutive = 0;
    } else {
      ++consecutive;
    }
    set.attempts.push_back(std::move(rec));
  }
  return set;
}

SolutionSet multistart_baseline(const Nlp& problem, int n_starts, std::uint64_t seed,
                                const RunConfig& cfg) {
  problem.validate();
  require(n_starts >= 1, "need at least one start");
  require(problem.has_finite_bounds(), "multistart sampling needs finite bounds");
  std::vector<SolutionRecord> recs(n_starts);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n_starts; ++i) {
    SolutionRecord& rec = recs[i];
    rec.iteration = i;
    std::mt19937_64 rng(detail::mix_seed(seed, static_cast<std::uint64_t>(i)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vec x0(problem.n);
    for (int j = 0; j < problem.n; ++j) {
      x0[j] = problem.lower[j] + unit(rng) * (problem.upper[j] - problem.lower[j]);
    }
    try {
      const SolveReport rep = solve_with(problem, x0, cfg.solver, cfg.options);
      rec.x = rep.x_star;
      rec.objective = rep.objective;
      rec.status = rep.status;
      rec.solver_iterations = rep.iterations;
      rec.wall_time = rep.wall_time;
      rec.kkt = kkt_at(problem, rep.x_star);
      rec.original_kkt = rec.kkt.is_kkt(cfg.kkt_tol);
      rec.residual = rec.kkt.worst();
      if (!rep.converged()) rec.failure = "solver did not converge: " + to_string(rep.status);
      else if (!rec.original_kkt) rec.failure = "not a KKT point";
    } catch (const Error& e) {
      rec.x = x0;
      rec.failure = std::string("solver error: ") + e.what();
    }
    rec.finite_y = true;
    rec.eta_zero = true;
    rec.distinct = true;
  }
  SolutionSet set;
  const double tol = cfg.effective_dedup_tol(problem.n);
  std::vector<Vec> kept;
  for (auto& rec : recs) {
    finish_record(rec, kept, tol);
    if (rec.accepted) kept.push_back(rec.x);
    set.attempts.push_back(std::move(rec));
  }
  return set;
}

}  // namespace deflation
