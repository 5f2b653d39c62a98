#include "solver_internal.hpp"

namespace deflation {

void SolverOptions::validate() const {
  require(max_iter > 0, "max_iter must be positive");
  require(grad_tol > 0.0 && constraint_tol > 0.0, "tolerances must be positive");
  require(armijo_c1 > 0.0 && armijo_c1 < 1.0, "armijo_c1 must lie in (0, 1)");
  require(backtrack > 0.0 && backtrack < 1.0, "backtracking factor must lie in (0, 1)");
  require(lbfgs_memory >= 1, "L-BFGS memory must be at least 1");
  require(barrier_decay > 0.0 && barrier_decay < 1.0, "barrier decay must lie in (0, 1)");
  require(barrier_r0 > 0.0 && barrier_min > 0.0, "barrier coefficients must be positive");
  require(al_growth > 1.0, "penalty growth must exceed 1");
  require(al_rho0 > 0.0 && al_rho_max >= al_rho0, "invalid penalty schedule");
  require(mma_move > 0.0 && mma_move <= 1.0, "MMA move limit must lie in (0, 1]");
  require(mma_asym_dec > 0.0 && mma_asym_dec < 1.0, "asymptote decrease must lie in (0, 1)");
  require(mma_asym_inc > 1.0, "asymptote increase must exceed 1");
  require(adagrad_eta0 > 0.0 && adagrad_decay >= 0.0 && adagrad_eps > 0.0,
          "invalid ADAGrad parameters");
  require(adagrad_rho > 0.0 && adagrad_rho <= 1.0, "ADAGrad accumulator decay must lie in (0, 1]");
  require(adagrad_iter > 0 && adagrad_samples > 0, "ADAGrad budget must be positive");
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::LineSearchFail: return "line_search_fail";
    case SolveStatus::Singular: return "singular";
  }
  return "unknown";
}

SolveStatus solve_status_from_string(const std::string& s) {
  if (s == "converged") return SolveStatus::Converged;
  if (s == "max_iter") return SolveStatus::MaxIter;
  if (s == "line_search_fail") return SolveStatus::LineSearchFail;
  if (s == "singular") return SolveStatus::Singular;
  throw Error("unknown solve status '" + s + "'");
}

}  // namespace deflation
