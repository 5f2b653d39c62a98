#include "deflation/deflation_core.hpp"

#include <cmath>

namespace deflation {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_dims(const DistanceMeasure& measure, const Vec& x, const Vec& xk) {
  require(x.size() == xk.size(), "dimension mismatch between point and pool point");
  if (std::holds_alternative<GaussianKl>(measure)) {
    require(x.size() == 2, "GaussianKl expects (mu, log sigma) pairs");
  }
  if (const auto* wq = std::get_if<WeightedQuadratic>(&measure)) {
    require(wq->Q.rows() == x.size(), "weight matrix dimension mismatch");
  }
}

double kl_gaussian(double mu1, double ls1, double mu2, double ls2) {
  const double var1 = std::exp(2.0 * ls1);
  const double var2 = std::exp(2.0 * ls2);
  const double dmu = mu1 - mu2;
  return (ls2 - ls1) + (var1 + dmu * dmu) / (2.0 * var2) - 0.5;
}

}  // namespace

DistanceMeasure weighted_quadratic(Mat Q) {
  require(Q.rows() == Q.cols(), "weight matrix must be square");
  require((Q - Q.transpose()).cwiseAbs().maxCoeff() == 0.0, "weight matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> eig(Q, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
  require(eig.eigenvalues().minCoeff() >= -1e-12 * scale,
          "weight matrix must be positive semi-definite");
  return WeightedQuadratic{std::move(Q)};
}

double distance(const DistanceMeasure& measure, const Vec& x, const Vec& xk) {
  check_dims(measure, x, xk);
  return std::visit(
      Overloaded{
          [&](const PowerNorm& m) {
            const Vec d = x - xk;
            if (m.q == 2.0) return d.norm();
            if (std::isinf(m.q)) return inf_norm(d);
            return std::pow(d.cwiseAbs().array().pow(m.q).sum(), 1.0 / m.q);
          },
          [&](const WeightedQuadratic& m) {
            const Vec d = x - xk;
            return std::max(0.0, d.dot(m.Q * d));
          },
          [&](const RadiusOffsetNorm&) { return (x - xk).norm(); },
          [&](const GaussianKl&) {
            return std::max(0.0, kl_gaussian(x[0], x[1], xk[0], xk[1]));
          },
      },
      measure);
}

Vec distance_gradient(const DistanceMeasure& measure, const Vec& x, const Vec& xk) {
  check_dims(measure, x, xk);
  return std::visit(
      Overloaded{
          [&](const PowerNorm& m) -> Vec {
            const Vec d = x - xk;
            const double dist = distance(measure, x, xk);
            if (dist == 0.0) return Vec::Zero(x.size());
            if (m.q == 2.0) return d / dist;
            require(!std::isinf(m.q), "gradient of the max-norm is not supported");
            Vec g(d.size());
            for (Eigen::Index i = 0; i < d.size(); ++i) {
              const double s = d[i] > 0 ? 1.0 : (d[i] < 0 ? -1.0 : 0.0);
              g[i] = s * std::pow(std::abs(d[i]) / dist, m.q - 1.0);
            }
            return g;
          },
          [&](const WeightedQuadratic& m) -> Vec { return 2.0 * (m.Q * (x - xk)); },
          [&](const RadiusOffsetNorm&) -> Vec {
            const Vec d = x - xk;
            const double dist = d.norm();
            return dist == 0.0 ? Vec::Zero(x.size()) : Vec(d / dist);
          },
          [&](const GaussianKl&) -> Vec {
            const double var1 = std::exp(2.0 * x[1]);
            const double var2 = std::exp(2.0 * xk[1]);
            Vec g(2);
            g[0] = (x[0] - xk[0]) / var2;
            g[1] = -1.0 + var1 / var2;
            return g;
          },
      },
      measure);
}

void DeflationFunction::validate() const {
  require(power > 0.0, "deflation power must be positive");
  require(shift >= 0.0, "deflation shift must be nonnegative");
  require(radius >= 0.0, "deflation radius must be nonnegative");
  if (const auto* pn = std::get_if<PowerNorm>(&measure)) {
    require(pn->q >= 1.0, "norm order must be >= 1");
  }
}

DeflationPool::DeflationPool(std::vector<Vec> solutions, Aggregation aggregation)
    : aggregation_(aggregation) {
  for (const Vec& x : solutions) add(x);
}

void DeflationPool::add(const Vec& x) {
  require(solutions_.empty() || x.size() == solutions_.front().size(),
          "pool points must share one dimension");
  solutions_.push_back(x);
}

DeflationValue deflation_term(const DeflationFunction& fn, const Vec& x, const Vec& xk) {
  const double d = distance(fn.measure, x, xk);
  const double gap = d - fn.radius;
  // closed ball: the boundary itself counts as singular
  if (!(gap > 0.0)) return DeflationValue::singular();
  const double v = std::pow(gap, -fn.power) + fn.shift;
  if (!std::isfinite(v)) return DeflationValue::singular();
  return DeflationValue::finite(v);
}

DeflationValue deflation_value(const DeflationFunction& fn, const DeflationPool& pool, const Vec& x) {
  if (pool.empty()) {
    require(pool.aggregation() == Aggregation::Sum,
            "product aggregation needs a nonempty pool");
    return DeflationValue::finite(0.0);
  }
  double acc = pool.aggregation() == Aggregation::Sum ? 0.0 : 1.0;
  for (const Vec& xk : pool) {
    const DeflationValue t = deflation_term(fn, x, xk);
    if (t.is_singular) return DeflationValue::singular();
    acc = pool.aggregation() == Aggregation::Sum ? acc + t.value : acc * t.value;
  }
  if (!std::isfinite(acc)) return DeflationValue::singular();
  return DeflationValue::finite(acc);
}

Vec deflation_gradient(const DeflationFunction& fn, const DeflationPool& pool, const Vec& x) {
  Vec grad = Vec::Zero(x.size());
  if (pool.empty()) {
    require(pool.aggregation() == Aggregation::Sum,
            "product aggregation needs a nonempty pool");
    return grad;
  }
  std::vector<double> terms;
  std::vector<Vec> term_grads;
  terms.reserve(pool.size());
  term_grads.reserve(pool.size());
  for (const Vec& xk : pool) {
    const double d = distance(fn.measure, x, xk);
    const double gap = d - fn.radius;
    if (!(gap > 0.0) || !std::isfinite(std::pow(gap, -fn.power))) {
      throw Error("gradient undefined at/inside deflation singularity");
    }
    terms.push_back(std::pow(gap, -fn.power) + fn.shift);
    term_grads.push_back(-fn.power * std::pow(gap, -fn.power - 1.0) *
                         distance_gradient(fn.measure, x, xk));
  }
  if (pool.aggregation() == Aggregation::Sum) {
    for (const Vec& g : term_grads) grad += g;
    return grad;
  }
  // product rule without dividing by a possibly-zero factor
  for (std::size_t k = 0; k < terms.size(); ++k) {
    double others = 1.0;
    for (std::size_t j = 0; j < terms.size(); ++j) {
      if (j != k) others *= terms[j];
    }
    grad += others * term_grads[k];
  }
  return grad;
}

double equivalent_min_distance(double y, const DeflationFunction& fn) {
  if (!(y > fn.shift)) throw Error("no finite distance bound");
  return 1.0 / (y - fn.shift);
}

double min_pool_distance(const DistanceMeasure& measure, const DeflationPool& pool, const Vec& x) {
  double best = kInf;
  for (const Vec& xk : pool) best = std::min(best, distance(measure, x, xk));
  return best;
}

}  // namespace deflation
