#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "deflation/deflation_core.hpp"
#include "deflation/problems.hpp"

namespace deflation {

// Appends y with m(x) - y <= 0 and y_lower <= y <= y_upper.
struct SlackMode {
  double y_lower = 0.0;
  double y_upper = kInf;
};

// Appends m(x) - M <= 0.
struct BigMMode {
  double M = 1e6;
};

using NlpDeflationMode = std::variant<SlackMode, BigMMode>;

class DeflatedNlp {
 public:
  DeflatedNlp(Nlp base, DeflationPool pool, DeflationFunction fn, NlpDeflationMode mode);

  const Nlp& base() const { return base_; }
  const DeflationPool& pool() const { return pool_; }
  const DeflationFunction& fn() const { return fn_; }
  const NlpDeflationMode& mode() const { return mode_; }
  bool is_slack() const { return std::holds_alternative<SlackMode>(mode_); }

  int dim() const { return base_.n + (is_slack() ? 1 : 0); }
  // Index of the deflation row among the inequality rows of as_nlp().
  int deflation_row() const { return base_.num_ineq; }

  // Base problem plus the deflation row appended after the base inequalities.
  const Nlp& as_nlp() const { return nlp_; }

  // (x0, y0) in Slack mode with y0 = m(x0) + 1 kept inside the y bounds; x0 for BigM.
  Vec initial_point(const Vec& x0) const;
  Vec x_part(const Vec& z) const { return z.head(base_.n); }
  // Slack variable, or M in BigM mode.
  double y_part(const Vec& z) const;

 private:
  Nlp base_;
  DeflationPool pool_;
  DeflationFunction fn_;
  NlpDeflationMode mode_;
  Nlp nlp_;
};

DeflatedNlp deflate_nlp(const Nlp& base, const DeflationPool& pool, const DeflationFunction& fn,
                        const NlpDeflationMode& mode);

enum class SystemMode { Multiplicative, Constraint };

class DeflatedSystem {
 public:
  DeflatedSystem(NonlinearSystem base, DeflationPool pool, DeflationFunction fn, SystemMode mode);

  const NonlinearSystem& base() const { return base_; }
  const DeflationPool& pool() const { return pool_; }
  const DeflationFunction& fn() const { return fn_; }
  SystemMode mode() const { return mode_; }
  int dim() const { return base_.dim + (mode_ == SystemMode::Constraint ? 1 : 0); }

  // Multiplicative: M(x) F(x) with M = 1 for an empty pool.
  // Constraint: (F(x); m(x) - y) in the unknowns (x, y).
  const NonlinearSystem& as_system() const { return system_; }
  Vec initial_point(const Vec& x0) const;
  Vec x_part(const Vec& z) const { return z.head(base_.dim); }

 private:
  NonlinearSystem base_;
  DeflationPool pool_;
  DeflationFunction fn_;
  SystemMode mode_;
  NonlinearSystem system_;
};

DeflatedSystem deflate_system(const NonlinearSystem& base, const DeflationPool& pool,
                              const DeflationFunction& fn, SystemMode mode);

// L = f + c^T lambda + d^T mu + (x - u)^T z_upper - (x - l)^T z_lower, mu, z >= 0.
struct Multipliers {
  Vec lambda;
  Vec mu;
  Vec z_upper;
  Vec z_lower;
};

struct KktReport {
  double stationarity = 0.0;
  double eq_violation = 0.0;
  double ineq_violation = 0.0;
  double bound_violation = 0.0;
  double complementarity = 0.0;
  // Negative part of mu and z (dual infeasibility).
  double dual_violation = 0.0;
  Multipliers multipliers;
  double eta = 0.0;           // deflation-row multiplier, when one exists
  double fit_residual = 0.0;  // least-squares stationarity fit
  bool irregular = false;     // active constraint gradients rank deficient
  std::optional<double> reduced_hessian_min_eig;

  double worst() const;
  bool is_kkt(double tol) const { return worst() <= tol; }
};

inline constexpr double kActiveTol = 1e-6;

KktReport kkt_residual(const Nlp& nlp, const Vec& x, const Multipliers& mult);

struct MultiplierEstimate {
  Multipliers multipliers;
  double fit_residual = 0.0;
  bool irregular = false;
};

// Least squares over the active set with nonnegativity enforced by dropping
// negative inequality/bound multipliers and refitting.
MultiplierEstimate estimate_multipliers(const Nlp& nlp, const Vec& x, double act_tol = kActiveTol);

// estimate_multipliers followed by kkt_residual.
KktReport kkt_at(const Nlp& nlp, const Vec& x, double act_tol = kActiveTol);

// Smallest eigenvalue of the Lagrangian Hessian on the null space of the active
// constraint gradients; nullopt for n > 10 or an empty null space.
std::optional<double> reduced_hessian_min_eigenvalue(const Nlp& nlp, const Vec& x,
                                                     const Multipliers& mult,
                                                     double act_tol = kActiveTol);

inline constexpr double kFiniteYThreshold = 1e8;

// max(r, 1e-3 sqrt(n))
double dedup_tolerance(double radius, int n);

struct Lemma1Verdict {
  bool finite_y = false;
  bool eta_zero = false;
  bool original_kkt = false;
  bool distinct = false;
  bool pass = false;
  double y = 0.0;
  double eta = 0.0;
  double min_distance = kInf;  // in the deflation measure
  KktReport base_kkt;
  std::vector<std::string> notes;
};

// z = (x, y) in Slack mode, z = x in BigM mode.
Lemma1Verdict verify_lemma1(const DeflatedNlp& deflated, const Vec& z, double tol,
                            double y_threshold = kFiniteYThreshold);

}  // namespace deflation
