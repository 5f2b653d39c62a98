#pragma once

#include <variant>
#include <vector>

#include "deflation/types.hpp"

namespace deflation {

// Distance measures usable inside a deflation function.
struct PowerNorm {
  double q = 2.0;  // norm order, q >= 1
};

// (x - xk)^T Q (x - xk); construct through weighted_quadratic() so Q is validated.
struct WeightedQuadratic {
  Mat Q;
};

// Euclidean distance; pair with DeflationFunction::radius to get the hyper-ball form.
struct RadiusOffsetNorm {};

// Inputs are (mu, log sigma) of a 1D Gaussian; the distance is KL(N(x) || N(xk)).
struct GaussianKl {};

using DistanceMeasure = std::variant<PowerNorm, WeightedQuadratic, RadiusOffsetNorm, GaussianKl>;

// Validates symmetry and positive semi-definiteness of Q.
DistanceMeasure weighted_quadratic(Mat Q);

double distance(const DistanceMeasure& measure, const Vec& x, const Vec& xk);
Vec distance_gradient(const DistanceMeasure& measure, const Vec& x, const Vec& xk);

// m(x; xk) = max(distance - radius, 0)^(-power) + shift
struct DeflationFunction {
  DistanceMeasure measure = PowerNorm{2.0};
  double power = 2.0;
  double shift = 1.0;
  double radius = 0.0;

  void validate() const;
};

enum class Aggregation { Sum, Product };

// Known solutions, in insertion order.
class DeflationPool {
 public:
  explicit DeflationPool(Aggregation aggregation = Aggregation::Sum) : aggregation_(aggregation) {}
  DeflationPool(std::vector<Vec> solutions, Aggregation aggregation);

  void add(const Vec& x);
  Aggregation aggregation() const { return aggregation_; }
  std::size_t size() const { return solutions_.size(); }
  bool empty() const { return solutions_.empty(); }
  // -1 when empty.
  Eigen::Index dim() const { return solutions_.empty() ? -1 : solutions_.front().size(); }
  const Vec& operator[](std::size_t i) const { return solutions_[i]; }
  const std::vector<Vec>& solutions() const { return solutions_; }
  auto begin() const { return solutions_.begin(); }
  auto end() const { return solutions_.end(); }

 private:
  std::vector<Vec> solutions_;
  Aggregation aggregation_;
};

struct DeflationValue {
  double value = 0.0;
  bool is_singular = false;

  static DeflationValue singular() { return {kInf, true}; }
  static DeflationValue finite(double v) { return {v, false}; }
};

DeflationValue deflation_term(const DeflationFunction& fn, const Vec& x, const Vec& xk);

// Empty pool: 0 for Sum; Product requires a nonempty pool.
DeflationValue deflation_value(const DeflationFunction& fn, const DeflationPool& pool, const Vec& x);

// Throws Error at or inside a singularity.
Vec deflation_gradient(const DeflationFunction& fn, const DeflationPool& pool, const Vec& x);

// z = 1 / (y - shift): m(x; x1) <= y  <=>  |x - x1|^p >= z  (single point, radius 0).
double equivalent_min_distance(double y, const DeflationFunction& fn);

// Smallest distance() from x to any pool point (+inf for an empty pool).
double min_pool_distance(const DistanceMeasure& measure, const DeflationPool& pool, const Vec& x);

}  // namespace deflation
