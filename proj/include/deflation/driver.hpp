#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deflation/reformulation.hpp"
#include "deflation/solvers.hpp"

namespace deflation {

enum class Backend { AugmentedLagrangian, Barrier, Mma, Adagrad, Newton };
std::string to_string(Backend b);
Backend backend_from_string(const std::string& s);  // al, barrier, mma, adagrad, newton

struct RunConfig {
  int n_solutions = 4;
  // Cap on outer iterations; 0 means no cap beyond n_solutions and the failure budget.
  int max_outer = 0;
  Vec x0;  // reused for every outer iteration
  DeflationFunction deflation;
  Aggregation aggregation = Aggregation::Sum;
  NlpDeflationMode mode = SlackMode{};
  SystemMode system_mode = SystemMode::Multiplicative;
  Backend solver = Backend::AugmentedLagrangian;
  SolverOptions options;
  // Every k backend iterations the segment start joins a transient pool (0 = off).
  int intermediate_every = 0;
  double dedup_tol = -1.0;  // negative: max(r, 1e-3 sqrt(n))
  double kkt_tol = 1e-6;
  double y_threshold = kFiniteYThreshold;
  int failure_budget = 3;  // consecutive failures before stopping
  // When false, distinct finite-y designs are accepted even if eta or the base KKT
  // residual are above kkt_tol (the checks are still recorded).
  bool require_kkt = true;
  // Stochastic problems: accept when the averaged gradient over check_samples is below this.
  double stochastic_grad_tol = 0.05;
  int stochastic_check_samples = 1000000;
  std::uint64_t seed = 0;

  void validate() const;
  double effective_dedup_tol(int n) const;
};

struct SolutionRecord {
  int iteration = 0;           // outer iteration that produced this record
  std::size_t pool_size = 0;   // persistent pool size when the solve started
  Vec x;
  double objective = kInf;
  // Slack variable, M in big-M mode, extra unknown in constraint-mode systems,
  // deflation factor in multiplicative mode.
  double y_star = 0.0;
  double m_value = 0.0;  // deflation value at x against the persistent pool
  SolveStatus status = SolveStatus::MaxIter;
  int solver_iterations = 0;
  double wall_time = 0.0;
  int transient_insertions = 0;
  bool accepted = false;
  std::string failure;  // empty when accepted

  KktReport kkt;  // base problem, multipliers estimated at x
  double residual = 0.0;  // base residual norm for systems, gradient norm for stochastic problems
  double eta = 0.0;
  bool finite_y = false;
  bool eta_zero = false;
  bool original_kkt = false;
  bool distinct = false;
  bool constraint_active = false;
  double min_pool_distance = kInf;
  std::vector<std::string> notes;
};

struct SolutionSet {
  std::vector<SolutionRecord> attempts;  // every outer iteration, in order

  std::vector<SolutionRecord> accepted() const;
  std::vector<Vec> points() const;  // accepted x in discovery order
  std::size_t size() const;         // accepted count
};

SolutionSet find_multiple_solutions(const Nlp& problem, const RunConfig& config);
SolutionSet find_multiple_solutions(const NonlinearSystem& system, const RunConfig& config);
// Barrier + ADAGrad on (theta, y); requires Slack mode with a finite y_upper.
SolutionSet find_multiple_solutions(const StochasticObjective& objective, const RunConfig& config);

// Greedy filter in order: a candidate within tol (Euclidean) of a survivor is dropped.
std::vector<Vec> deduplicate(const std::vector<Vec>& candidates, double tol);
// Applies the filter to the accepted records; rejected ones stay as failed attempts.
SolutionSet deduplicate(const SolutionSet& set, double tol);

// Independent undeflated solves from uniform starts in the bound box, deduplicated.
// Starts may run concurrently; records are ordered by start index.
SolutionSet multistart_baseline(const Nlp& problem, int n_starts, std::uint64_t seed,
                                const RunConfig& config);

// Points deflated by the intermediate hook for a recorded trajectory (trajectory[0] is the
// start): at iterations t = k, 2k, ... the iterate from k steps earlier, so floor(N/k) points.
std::vector<Vec> intermediate_deflation_points(const std::vector<Vec>& trajectory, int every_k);

}  // namespace deflation
