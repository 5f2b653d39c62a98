#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "deflation/problems.hpp"

namespace deflation {

struct SolverOptions {
  int max_iter = 500;
  double grad_tol = 1e-8;
  double constraint_tol = 1e-8;

  // backtracking Armijo line search
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 50;

  int lbfgs_memory = 10;

  // log barrier: r <- r * barrier_decay until r <= barrier_min
  double barrier_r0 = 1.0;
  double barrier_decay = 0.2;
  double barrier_min = 1e-6;
  int barrier_inner_iter = 500;

  // augmented Lagrangian penalty schedule
  double al_rho0 = 10.0;
  double al_growth = 10.0;
  double al_rho_max = 1e10;
  int al_inner_iter = 1000;

  // MMA
  double mma_move = 0.2;
  double mma_asym_init = 0.5;
  double mma_asym_dec = 0.7;
  double mma_asym_inc = 1.2;
  double mma_xtol = 1e-5;

  // decayed ADAGrad: G <- rho G + g^2, eta_t = eta0 * t^-decay, step = eta_t g / sqrt(G + eps).
  // rho = 1 is the plain cumulative accumulator.
  double adagrad_eta0 = 0.1;
  double adagrad_decay = 0.5;
  double adagrad_eps = 1e-8;
  double adagrad_rho = 0.9;
  int adagrad_iter = 5000;
  int adagrad_samples = 100;

  std::uint64_t seed = 0;
  bool record_trajectory = false;

  void validate() const;
};

enum class SolveStatus { Converged, MaxIter, LineSearchFail, Singular };
std::string to_string(SolveStatus s);
SolveStatus solve_status_from_string(const std::string& s);

struct SolveReport {
  Vec x_star;
  double objective = kInf;
  int iterations = 0;
  SolveStatus status = SolveStatus::MaxIter;
  // The stopping measure the status refers to (gradient, KKT or residual norm).
  double residual = kInf;
  std::vector<Vec> trajectory;  // [0] is the start when recording
  double wall_time = 0.0;
  std::string message;

  bool converged() const { return status == SolveStatus::Converged; }
};

// Objective that may return +inf to mark forbidden points.
struct Objective {
  ScalarFn value;
  VectorFn gradient;
};

struct InequalityConstraints {
  int count = 0;
  VectorFn value;      // d(x) <= 0
  MatrixFn jacobian;   // count x n
};

// Two-loop L-BFGS with Armijo backtracking. When bounds are given the method is
// projected: converged once the projected gradient step is below grad_tol.
SolveReport lbfgs_minimize(const Objective& f, const Vec& x0, const SolverOptions& opts,
                           const Vec* lower = nullptr, const Vec* upper = nullptr);

// min f - r sum log(-d_j) with r driven to zero; x0 must be strictly feasible.
SolveReport log_barrier_solve(const Objective& f, const InequalityConstraints& ineq,
                              const Vec& x0, const SolverOptions& opts);
// Finite bounds of nlp become barrier terms; equality constraints are not supported.
SolveReport log_barrier_solve(const Nlp& nlp, const Vec& x0, const SolverOptions& opts);
// Stochastic objective plus deterministic barrier terms; inner solves use ADAGrad.
SolveReport log_barrier_solve(const StochasticObjective& f, const InequalityConstraints& ineq,
                              const Vec& x0, const SolverOptions& opts);

SolveReport augmented_lagrangian_solve(const Nlp& nlp, const Vec& x0, const SolverOptions& opts);

// Requires finite bounds and no equality constraints.
SolveReport mma_solve(const Nlp& nlp, const Vec& x0, const SolverOptions& opts);

// `feasible`, when set, rejects steps by halving until the new point is feasible.
SolveReport adagrad_minimize(const StochasticObjective& f, const Vec& theta0,
                             const SolverOptions& opts,
                             const std::function<bool(const Vec&)>& feasible = {});

// Damped Newton with backtracking on ||F||_2; converged when ||F||_inf <= grad_tol.
SolveReport newton_solve(const NonlinearSystem& system, const Vec& x0, const SolverOptions& opts);

}  // namespace deflation
