#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include "deflation/kernels.hpp"
#include "deflation/problems.hpp"

namespace deflation {

namespace {
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
}

double GaussianParams::sigma() const { return std::exp(log_sigma); }

Vec GaussianParams::as_vector() const {
  Vec v(2);
  v << mu, log_sigma;
  return v;
}

GaussianParams GaussianParams::from_vector(const Vec& theta) {
  require(theta.size() >= 2, "Gaussian parameters need (mu, log sigma)");
  return {theta[0], theta[1]};
}

MixtureTarget::MixtureTarget(std::vector<MixtureComponent> components)
    : components_(std::move(components)) {
  require(!components_.empty(), "mixture needs at least one component");
  double total = 0.0;
  for (const auto& c : components_) {
    require(c.sigma > 0.0, "mixture component sigma must be positive");
    require(c.weight > 0.0, "mixture weights must be positive");
    total += c.weight;
  }
  require(std::abs(total - 1.0) <= 1e-12, "mixture weights must sum to 1");
  for (const auto& c : components_) log_weights_.push_back(std::log(c.weight));
}

void MixtureTarget::log_density_and_score(double z, double& logp, double& dlogp) const {
  // log-sum-exp over components; responsibilities weight the component scores
  double best = -kInf;
  thread_local std::vector<double> terms;
  terms.resize(components_.size());
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    const double t = (z - c.mu) / c.sigma;
    terms[k] = log_weights_[k] - 0.5 * t * t - std::log(c.sigma) - kHalfLog2Pi;
    best = std::max(best, terms[k]);
  }
  double sum = 0.0;
  double weighted_score = 0.0;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    const double r = std::exp(terms[k] - best);
    sum += r;
    weighted_score += r * (-(z - c.mu) / (c.sigma * c.sigma));
  }
  logp = best + std::log(sum);
  dlogp = weighted_score / sum;
}

double MixtureTarget::log_density(double z) const {
  double lp = 0.0, s = 0.0;
  log_density_and_score(z, lp, s);
  return lp;
}

double MixtureTarget::score(double z) const {
  double lp = 0.0, s = 0.0;
  log_density_and_score(z, lp, s);
  return s;
}

MixtureTarget equally_spaced_mixture(int count, double lo, double hi, double sigma) {
  require(count >= 1, "mixture needs at least one component");
  std::vector<MixtureComponent> comps;
  for (int k = 0; k < count; ++k) {
    const double mu = count == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * k / (count - 1);
    comps.push_back({1.0 / count, mu, sigma});
  }
  // renormalize the last weight so the sum is exactly representable
  double partial = 0.0;
  for (int k = 0; k + 1 < count; ++k) partial += comps[k].weight;
  comps.back().weight = 1.0 - partial;
  return MixtureTarget(std::move(comps));
}

MixtureTarget default_vi_target() { return equally_spaced_mixture(10, -20.0, 20.0, 1.0); }

namespace {

struct SampleBatch {
  std::vector<double> eps, z, logp, score;
};

void draw(const Vec& theta, std::uint64_t seed, int n, const MixtureTarget& target,
          SampleBatch& b) {
  require(n >= 1, "need at least one Monte-Carlo sample");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sigma = std::exp(theta[1]);
  b.eps.resize(n);
  b.z.resize(n);
  b.logp.resize(n);
  b.score.resize(n);
  for (int i = 0; i < n; ++i) {
    b.eps[i] = normal(rng);
    b.z[i] = theta[0] + sigma * b.eps[i];
  }
  kernels::mixture_log_density_batch(target, b.z, b.logp, b.score);
}

}  // namespace

StochasticObjective make_mixture_vi(MixtureTarget target, int n_samples, std::uint64_t seed) {
  require(n_samples >= 1, "need at least one Monte-Carlo sample");
  StochasticObjective obj;
  obj.dim = 2;
  obj.default_samples = n_samples;
  obj.default_seed = seed;
  auto shared = std::make_shared<const MixtureTarget>(std::move(target));
  obj.estimate = [shared](const Vec& theta, std::uint64_t s, int n) {
    SampleBatch b;
    draw(theta, s, n, *shared, b);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double logq = -0.5 * b.eps[i] * b.eps[i] - theta[1] - kHalfLog2Pi;
      acc += logq - b.logp[i];
    }
    return acc / n;
  };
  obj.gradient_estimate = [shared](const Vec& theta, std::uint64_t s, int n) {
    SampleBatch b;
    draw(theta, s, n, *shared, b);
    const double sigma = std::exp(theta[1]);
    double g_mu = 0.0, g_ls = 0.0;
    for (int i = 0; i < n; ++i) {
      g_mu -= b.score[i];
      g_ls -= b.score[i] * sigma * b.eps[i];
    }
    Vec g(2);
    g << g_mu / n, -1.0 + g_ls / n;
    return g;
  };
  return obj;
}

}  // namespace deflation
