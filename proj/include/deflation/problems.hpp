#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "deflation/types.hpp"

namespace deflation {

using ScalarFn = std::function<double(const Vec&)>;
using VectorFn = std::function<Vec(const Vec&)>;
using MatrixFn = std::function<Mat(const Vec&)>;

// min f(x)  s.t.  c(x) = 0,  d(x) <= 0,  lower <= x <= upper
struct Nlp {
  std::string name;
  int n = 0;
  ScalarFn objective;
  VectorFn gradient;

  int num_eq = 0;
  VectorFn eq;           // R^n -> R^num_eq
  MatrixFn eq_jacobian;  // num_eq x n

  int num_ineq = 0;
  VectorFn ineq;
  MatrixFn ineq_jacobian;

  Vec lower;
  Vec upper;

  // Optional Hessian of f + c^T lambda; empty means "use finite differences".
  std::function<Mat(const Vec& x, const Vec& lambda)> lagrangian_hessian;

  void validate() const;
  Vec eq_values(const Vec& x) const { return num_eq ? eq(x) : Vec(0); }
  Mat eq_jac(const Vec& x) const { return num_eq ? eq_jacobian(x) : Mat(0, n); }
  Vec ineq_values(const Vec& x) const { return num_ineq ? ineq(x) : Vec(0); }
  Mat ineq_jac(const Vec& x) const { return num_ineq ? ineq_jacobian(x) : Mat(0, n); }
  bool has_finite_bounds() const;
};

// Unbounded box of dimension n.
Vec unbounded_lower(int n);
Vec unbounded_upper(int n);

struct NonlinearSystem {
  std::string name;
  int dim = 0;
  VectorFn residual;
  MatrixFn jacobian;
};

// Deterministic Monte-Carlo objective: identical (theta, seed, n_samples) give identical values.
struct StochasticObjective {
  int dim = 0;
  std::function<double(const Vec&, std::uint64_t seed, int n_samples)> estimate;
  std::function<Vec(const Vec&, std::uint64_t seed, int n_samples)> gradient_estimate;
  int default_samples = 100;
  std::uint64_t default_seed = 0;
};

struct GaussianParams {
  double mu = 0.0;
  double log_sigma = 0.0;

  double sigma() const;
  Vec as_vector() const;
  static GaussianParams from_vector(const Vec& theta);
};

struct MixtureComponent {
  double weight = 1.0;
  double mu = 0.0;
  double sigma = 1.0;
};

class MixtureTarget {
 public:
  explicit MixtureTarget(std::vector<MixtureComponent> components);

  const std::vector<MixtureComponent>& components() const { return components_; }
  double log_density(double z) const;
  // d/dz log p(z)
  double score(double z) const;
  // Evaluates both in one pass.
  void log_density_and_score(double z, double& logp, double& dlogp) const;

 private:
  std::vector<MixtureComponent> components_;
  std::vector<double> log_weights_;
};

// Equal-weight components with means equally spaced on [lo, hi].
MixtureTarget equally_spaced_mixture(int count, double lo, double hi, double sigma);
MixtureTarget default_vi_target();

// f(x, y) = (x^2 + y - 11)^2 + (x + y^2 - 7)^2 on [-6, 6]^2.
Nlp make_himmelblau();

// Reparameterized Monte-Carlo estimate of KL(N(mu, exp(log_sigma)) || target).
StochasticObjective make_mixture_vi(MixtureTarget target, int n_samples, std::uint64_t seed);

// quadratic: x^2 - 1; cubic: x^3 - x; trig2d: (sin x - y, y - x/4).
NonlinearSystem make_poly_system(const std::string& name);

}  // namespace deflation
