#include <doctest.h>

#include <algorithm>
#include <random>

#include "deflation/deflation_core.hpp"
#include "oracles.hpp"

using namespace deflation;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

Vec random_vec(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec x(n);
  for (int i = 0; i < n; ++i) x[i] = u(rng);
  return x;
}

}  // namespace

TEST_CASE("distance examples") {
  CHECK(distance(PowerNorm{2.0}, v2(1, 0), v2(0, 0)) == doctest::Approx(1.0));
  CHECK(distance(GaussianKl{}, v2(0, 0), v2(0, 0)) == doctest::Approx(0.0));
  CHECK(distance(GaussianKl{}, v2(0, 0), v2(3, 0)) == doctest::Approx(4.5));
}

TEST_CASE("distance matches oracle and is zero on the diagonal") {
  std::mt19937_64 rng(11);
  Mat B = Mat::Random(3, 3);
  const DistanceMeasure wq = weighted_quadratic(B.transpose() * B);
  for (int t = 0; t < 50; ++t) {
    const Vec a = random_vec(rng, 2, -3, 3), b = random_vec(rng, 2, -3, 3);
    CHECK(distance(GaussianKl{}, a, b) == doctest::Approx(oracle::gaussian_kl(a[0], a[1], b[0], b[1])));
    CHECK(distance(PowerNorm{1.0}, a, b) == doctest::Approx((a - b).lpNorm<1>()));
    CHECK(distance(PowerNorm{kInf}, a, b) == doctest::Approx((a - b).lpNorm<Eigen::Infinity>()));
    const Vec c = random_vec(rng, 3, -3, 3);
    CHECK(distance(wq, c, c) == 0.0);
    CHECK(distance(PowerNorm{3.0}, a, a) == 0.0);
    CHECK(distance(GaussianKl{}, a, a) == doctest::Approx(0.0));
    CHECK(distance(RadiusOffsetNorm{}, a, b) >= 0.0);
  }
}

TEST_CASE("distance rejects bad input") {
  CHECK_THROWS_AS(distance(PowerNorm{2.0}, v2(1, 0), Vec::Zero(3)), Error);
  CHECK_THROWS_AS(distance(GaussianKl{}, Vec::Zero(3), Vec::Zero(3)), Error);
  Mat asym(2, 2);
  asym << 1, 1, 0, 1;
  CHECK_THROWS_AS(weighted_quadratic(asym), Error);
  Mat indefinite(2, 2);
  indefinite << 1, 0, 0, -1;
  CHECK_THROWS_AS(weighted_quadratic(indefinite), Error);
}

TEST_CASE("deflation_term examples") {
  const DeflationFunction fn{PowerNorm{2.0}, 2.0, 1.0, 0.0};
  CHECK(deflation_term(fn, v2(1, 0), v2(0, 0)).value == doctest::Approx(2.0));

  const DeflationFunction ball{PowerNorm{2.0}, 4.0, 0.0, 20.0};
  const DeflationValue at21 = deflation_term(ball, v2(21, 0), v2(0, 0));
  CHECK_FALSE(at21.is_singular);
  CHECK(at21.value == doctest::Approx(1.0));

  const DeflationValue same = deflation_term(fn, v2(1, 2), v2(1, 2));
  CHECK(same.is_singular);
  CHECK(same.value == kInf);
}

TEST_CASE("radius ball is closed and singular exactly inside") {
  const DeflationFunction fn{RadiusOffsetNorm{}, 2.0, 0.0, 1.5};
  CHECK(deflation_term(fn, v2(1.5, 0), v2(0, 0)).is_singular);
  CHECK(deflation_term(fn, v2(1.0, 0), v2(0, 0)).is_singular);
  CHECK_FALSE(deflation_term(fn, v2(1.5 + 1e-9, 0), v2(0, 0)).is_singular);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const Vec x = random_vec(rng, 2, -3, 3);
    const DeflationValue v = deflation_term(fn, x, v2(0, 0));
    CHECK(v.is_singular == (x.norm() <= 1.5));
    CHECK(v.is_singular == (v.value == kInf));
  }
}

TEST_CASE("deflation_value examples") {
  const DeflationFunction fn{PowerNorm{2.0}, 2.0, 0.0, 0.0};
  const DeflationPool one({v2(0, 0)}, Aggregation::Sum);
  CHECK(deflation_value(fn, one, v2(2, 0)).value == doctest::Approx(0.25));
  const DeflationPool sum({v2(0, 0), v2(4, 0)}, Aggregation::Sum);
  CHECK(deflation_value(fn, sum, v2(2, 0)).value == doctest::Approx(0.5));
  const DeflationPool prod({v2(0, 0), v2(4, 0)}, Aggregation::Product);
  CHECK(deflation_value(fn, prod, v2(2, 0)).value == doctest::Approx(0.0625));
  CHECK(deflation_value(fn, sum, v2(4, 0)).is_singular);
}

TEST_CASE("empty pool") {
  const DeflationFunction fn;
  CHECK(deflation_value(fn, DeflationPool(Aggregation::Sum), v2(1, 1)).value == 0.0);
  CHECK_THROWS_AS(deflation_value(fn, DeflationPool(Aggregation::Product), v2(1, 1)), Error);
}

TEST_CASE("pool keeps order and one dimension") {
  DeflationPool pool;
  pool.add(v2(1, 0));
  pool.add(v2(2, 0));
  CHECK(pool.size() == 2);
  CHECK(pool[0][0] == 1.0);
  CHECK(pool[1][0] == 2.0);
  CHECK(pool.dim() == 2);
  CHECK_THROWS_AS(pool.add(Vec::Zero(3)), Error);
}

TEST_CASE("function validation") {
  CHECK_THROWS_AS((DeflationFunction{PowerNorm{2.0}, 0.0, 1.0, 0.0}.validate()), Error);
  CHECK_THROWS_AS((DeflationFunction{PowerNorm{2.0}, 2.0, -1.0, 0.0}.validate()), Error);
  CHECK_THROWS_AS((DeflationFunction{PowerNorm{2.0}, 2.0, 1.0, -1.0}.validate()), Error);
  CHECK_THROWS_AS((DeflationFunction{PowerNorm{0.5}, 2.0, 1.0, 0.0}.validate()), Error);
  CHECK_NOTHROW(DeflationFunction{}.validate());
}

TEST_CASE("deflation_gradient example and singularity") {
  const DeflationFunction fn{PowerNorm{2.0}, 2.0, 0.0, 0.0};
  const DeflationPool pool({v2(0, 0)}, Aggregation::Sum);
  const Vec g = deflation_gradient(fn, pool, v2(2, 0));
  CHECK(g[0] == doctest::Approx(-0.25));
  CHECK(g[1] == doctest::Approx(0.0));
  CHECK_THROWS_AS(deflation_gradient(fn, pool, v2(0, 0)), Error);
  const DeflationFunction ball{RadiusOffsetNorm{}, 2.0, 0.0, 1.0};
  CHECK_THROWS_AS(deflation_gradient(ball, pool, v2(0.5, 0)), Error);
}

TEST_CASE("deflation_gradient matches finite differences for every measure") {
  std::mt19937_64 rng(5);
  Mat B = Mat::Random(2, 2);
  const std::vector<std::pair<const char*, DistanceMeasure>> measures = {
      {"l2", PowerNorm{2.0}}, {"l3", PowerNorm{3.0}}, {"l1.5", PowerNorm{1.5}},
      {"quadratic", weighted_quadratic(B.transpose() * B + Mat::Identity(2, 2))},
      {"radius", RadiusOffsetNorm{}}, {"kl", GaussianKl{}}};
  for (const auto& [name, measure] : measures) {
    for (Aggregation agg : {Aggregation::Sum, Aggregation::Product}) {
      const double r = std::holds_alternative<RadiusOffsetNorm>(measure) ? 0.5 : 0.0;
      const DeflationFunction fn{measure, 2.0, 0.5, r};
      const DeflationPool pool({v2(-1, 0.3), v2(1.2, -0.4)}, agg);
      int checked = 0;
      while (checked < 100) {
        const Vec x = random_vec(rng, 2, -2.5, 2.5);
        bool safe = true;
        for (const Vec& xk : pool) safe = safe && distance(measure, x, xk) - r > 0.3;
        if (!safe) continue;
        const Vec g = deflation_gradient(fn, pool, x);
        const Vec fd = oracle::fd_gradient(
            [&](const Vec& p) { return deflation_value(fn, pool, p).value; }, x, 1e-6);
        const double rel = (g - fd).norm() / std::max(1.0, fd.norm());
        INFO(name);
        CHECK(rel <= 1e-6);
        ++checked;
      }
    }
  }
}

TEST_CASE("equivalent_min_distance examples") {
  const DeflationFunction fn{PowerNorm{2.0}, 2.0, 1.0, 0.0};
  CHECK(equivalent_min_distance(2.0, fn) == doctest::Approx(1.0));
  CHECK(equivalent_min_distance(1.0 + 1e-9, fn) == doctest::Approx(1e9).epsilon(1e-6));
  CHECK_THROWS_AS(equivalent_min_distance(1.0, fn), Error);
  CHECK_THROWS_AS(equivalent_min_distance(0.5, fn), Error);
}

TEST_CASE("equivalence of the deflation constraint and the distance constraint") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> up(1.0, 6.0), us(0.0, 2.0), uy(0.01, 10.0);
  int disagreements = 0;
  for (int t = 0; t < 1000; ++t) {
    const DeflationFunction fn{PowerNorm{2.0}, up(rng), us(rng), 0.0};
    const Vec x = random_vec(rng, 3, -2, 2), x1 = random_vec(rng, 3, -2, 2);
    const double y = fn.shift + uy(rng);
    const bool a = deflation_term(fn, x, x1).value <= y;
    const bool b = std::pow((x - x1).norm(), fn.power) >= equivalent_min_distance(y, fn);
    if (a != b) ++disagreements;
  }
  CHECK(disagreements == 0);
}

TEST_CASE("term decreases with distance towards the shift") {
  const DeflationFunction fn{PowerNorm{2.0}, 3.0, 0.7, 0.0};
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.01, 50.0);
  std::vector<double> d(200);
  for (double& v : d) v = u(rng);
  std::sort(d.begin(), d.end());
  double prev = kInf;
  for (double r : d) {
    const double v = deflation_term(fn, v2(r, 0), v2(0, 0)).value;
    CHECK(v < prev);
    CHECK(v > fn.shift);
    prev = v;
  }
  CHECK(deflation_term(fn, v2(1e6, 0), v2(0, 0)).value == doctest::Approx(0.7));
}

TEST_CASE("aggregation lower bounds") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 100; ++t) {
    const DeflationFunction fn{PowerNorm{2.0}, 2.0, 0.3 + 0.1 * (t % 7), 0.0};
    std::vector<Vec> pts;
    for (int k = 0; k < 1 + t % 5; ++k) pts.push_back(random_vec(rng, 2, -5, 5));
    const Vec x = random_vec(rng, 2, -5, 5);
    const double K = static_cast<double>(pts.size());
    CHECK(deflation_value(fn, DeflationPool(pts, Aggregation::Sum), x).value >= K * fn.shift);
    CHECK(deflation_value(fn, DeflationPool(pts, Aggregation::Product), x).value >=
          std::pow(fn.shift, K) * (1 - 1e-12));
  }
}

TEST_CASE("min_pool_distance") {
  const DeflationPool pool({v2(0, 0), v2(3, 0)}, Aggregation::Sum);
  CHECK(min_pool_distance(PowerNorm{2.0}, pool, v2(2, 0)) == doctest::Approx(1.0));
  CHECK(min_pool_distance(PowerNorm{2.0}, DeflationPool(), v2(2, 0)) == kInf);
}
