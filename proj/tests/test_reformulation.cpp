#include <doctest.h>

#include <random>

#include "deflation/reformulation.hpp"
#include "deflation/solvers.hpp"
#include "oracles.hpp"

using namespace deflation;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
Vec v1(double a) { return Vec::Constant(1, a); }

Nlp sphere(int n) {
  Nlp p;
  p.name = "sphere";
  p.n = n;
  p.objective = [](const Vec& x) { return x.squaredNorm(); };
  p.gradient = [](const Vec& x) { return Vec(2.0 * x); };
  p.lower = unbounded_lower(n);
  p.upper = unbounded_upper(n);
  return p;
}

// min x^2 + y^2  s.t.  x + y = 1
Nlp line_quadratic() {
  Nlp p = sphere(2);
  p.num_eq = 1;
  p.eq = [](const Vec& x) { return v1(x[0] + x[1] - 1.0); };
  p.eq_jacobian = [](const Vec&) { return Mat::Ones(1, 2); };
  return p;
}

SolverOptions tight() {
  SolverOptions o;
  o.grad_tol = 1e-9;
  o.constraint_tol = 1e-9;
  return o;
}

const DeflationFunction kHimmelblauFn{PowerNorm{2.0}, 2.0, 1.0, 0.0};
// the pinned Himmelblau experiment function
const DeflationFunction kBallFn{PowerNorm{2.0}, 4.0, 1.0, 3.0};

}  // namespace

TEST_CASE("empty pool reproduces the undeflated minimizer") {
  const Nlp h = make_himmelblau();
  const DeflatedNlp d = deflate_nlp(h, DeflationPool(), kHimmelblauFn, SlackMode{});
  CHECK(d.dim() == 3);
  const Vec z0 = d.initial_point(v2(0, 0));
  CHECK(z0[2] == doctest::Approx(1.0));
  CHECK(d.as_nlp().ineq(z0)[d.deflation_row()] == doctest::Approx(-1.0));

  const SolveReport plain = augmented_lagrangian_solve(h, v2(0, 0), tight());
  const SolveReport def = augmented_lagrangian_solve(d.as_nlp(), z0, tight());
  REQUIRE(plain.converged());
  REQUIRE(def.converged());
  CHECK((d.x_part(def.x_star) - plain.x_star).norm() <= 1e-6);

  const Lemma1Verdict v = verify_lemma1(d, def.x_star, 1e-6);
  CHECK(v.pass);
  CHECK(v.y == doctest::Approx(1.0));
}

TEST_CASE("solver output keeps the equivalent distance bound") {
  const Nlp h = make_himmelblau();
  const Vec known = v2(3, 2);
  const DeflatedNlp d = deflate_nlp(h, DeflationPool({known}, Aggregation::Sum), kHimmelblauFn,
                                    SlackMode{0.0, 1e4});
  const Vec z0 = d.initial_point(v2(0, 0));
  for (int backend = 0; backend < 2; ++backend) {
    const SolveReport rep = backend == 0 ? augmented_lagrangian_solve(d.as_nlp(), z0, tight())
                                         : log_barrier_solve(d.as_nlp(), z0, tight());
    const Vec x = d.x_part(rep.x_star);
    const double y = d.y_part(rep.x_star);
    REQUIRE(y > 1.0);
    INFO("backend " << backend << " distance " << (x - known).norm() << " y " << y);
    CHECK((x - known).norm() >= std::sqrt(1.0 / (y - 1.0)) * (1.0 - 1e-6));
  }
}

TEST_CASE("deflated Himmelblau passes verification at a different minimum") {
  const auto minima = oracle::himmelblau_minima();
  const Nlp h = make_himmelblau();
  const Vec known = v2(3, 2);
  const DeflatedNlp d = deflate_nlp(h, DeflationPool({known}, Aggregation::Product), kBallFn,
                                    SlackMode{0.0, 1e4});
  const SolveReport rep = augmented_lagrangian_solve(d.as_nlp(), d.initial_point(v2(0, 0)), tight());
  REQUIRE(rep.converged());
  const Vec x = d.x_part(rep.x_star);
  const Lemma1Verdict v = verify_lemma1(d, rep.x_star, 1e-6);
  CHECK(v.pass);
  CHECK(std::abs(v.eta) <= 1e-6);
  CHECK(v.base_kkt.stationarity <= 1e-6);
  CHECK(oracle::distance_to_set(minima, x) <= 1e-4);
  CHECK((x - known).norm() > kBallFn.radius);
}

TEST_CASE("big-M row keeps the deflation value below M") {
  const Nlp h = make_himmelblau();
  const DeflationPool pool({v2(3, 2)}, Aggregation::Sum);
  const DeflatedNlp d = deflate_nlp(h, pool, kBallFn, BigMMode{100.0});
  CHECK(d.dim() == 2);
  CHECK(d.y_part(v2(0, 0)) == 100.0);
  const SolveReport rep = augmented_lagrangian_solve(d.as_nlp(), d.initial_point(v2(0, 0)), tight());
  REQUIRE(rep.converged());
  CHECK(deflation_value(kBallFn, pool, rep.x_star).value < 100.0);
}

TEST_CASE("big-M below the deflation floor is rejected") {
  const Nlp h = make_himmelblau();
  const DeflationPool pool({v2(3, 2), v2(-2.8, 3.1)}, Aggregation::Sum);
  CHECK_THROWS_AS(deflate_nlp(h, pool, kHimmelblauFn, BigMMode{2.0}), Error);
  CHECK_THROWS_AS(deflate_nlp(h, pool, kHimmelblauFn, BigMMode{1.5}), Error);
  CHECK_NOTHROW(deflate_nlp(h, pool, kHimmelblauFn, BigMMode{2.5}));
  CHECK_THROWS_AS(deflate_nlp(h, pool, kHimmelblauFn, SlackMode{1.0, 1.0}), Error);
}

TEST_CASE("deflated objective is the base objective and the row derivatives are exact") {
  const Nlp h = make_himmelblau();
  const DeflationPool pool({v2(3, 2), v2(-2.8, 3.1)}, Aggregation::Sum);
  const DeflatedNlp d = deflate_nlp(h, pool, kHimmelblauFn, SlackMode{});
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-6.0, 6.0), uy(0.0, 50.0);
  int checked = 0;
  while (checked < 50) {
    Vec z(3);
    z << u(rng), u(rng), uy(rng);
    const Vec x = z.head(2);
    if (deflation_value(kHimmelblauFn, pool, x).is_singular) continue;
    if ((x - pool[0]).norm() < 0.2 || (x - pool[1]).norm() < 0.2) continue;
    CHECK(d.as_nlp().objective(z) == h.objective(x));
    CHECK(d.as_nlp().gradient(z)[2] == 0.0);
    const Mat J = d.as_nlp().ineq_jac(z);
    CHECK(J(d.deflation_row(), 2) == -1.0);
    const Vec g = deflation_gradient(kHimmelblauFn, pool, x);
    CHECK((J.row(d.deflation_row()).head(2).transpose() - g).norm() == 0.0);
    CHECK(d.as_nlp().ineq(z)[d.deflation_row()] ==
          doctest::Approx(deflation_value(kHimmelblauFn, pool, x).value - z[2]));
    ++checked;
  }
}

TEST_CASE("deflation row goes after the base inequalities") {
  Nlp p = sphere(2);
  p.num_ineq = 1;
  p.ineq = [](const Vec& x) { return v1(1.0 - x[0]); };
  p.ineq_jacobian = [](const Vec&) { return (Mat(1, 2) << -1.0, 0.0).finished(); };
  const DeflatedNlp d = deflate_nlp(p, DeflationPool({v2(1, 0)}, Aggregation::Sum), kHimmelblauFn, SlackMode{});
  CHECK(d.deflation_row() == 1);
  CHECK(d.as_nlp().num_ineq == 2);
  const Vec z = (Vec(3) << 2.0, 0.0, 5.0).finished();
  CHECK(d.as_nlp().ineq(z)[0] == doctest::Approx(-1.0));
  CHECK(d.as_nlp().ineq(z)[1] == doctest::Approx(2.0 - 5.0));
}

TEST_CASE("multiplicative system") {
  const NonlinearSystem q = make_poly_system("quadratic");
  const DeflatedSystem d = deflate_system(q, DeflationPool({v1(1.0)}, Aggregation::Sum), kHimmelblauFn,
                                          SystemMode::Multiplicative);
  CHECK(d.dim() == 1);
  CHECK(d.as_system().residual(v1(3.0))[0] == doctest::Approx(10.0));
  const Vec at_pool = d.as_system().residual(v1(1.0));
  CHECK_FALSE(std::isfinite(at_pool[0]));

  const DeflatedSystem empty = deflate_system(q, DeflationPool(), kHimmelblauFn, SystemMode::Multiplicative);
  CHECK(empty.as_system().residual(v1(3.0))[0] == doctest::Approx(8.0));
}

TEST_CASE("multiplicative Jacobian matches finite differences") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (const char* name : {"cubic", "trig2d"}) {
    const NonlinearSystem s = make_poly_system(name);
    std::vector<Vec> pts = {Vec::Constant(s.dim, 0.5), Vec::Constant(s.dim, -1.5)};
    for (Aggregation agg : {Aggregation::Sum, Aggregation::Product}) {
      const DeflatedSystem d = deflate_system(s, DeflationPool(pts, agg), kHimmelblauFn, SystemMode::Multiplicative);
      int checked = 0;
      while (checked < 50) {
        Vec x(s.dim);
        for (int i = 0; i < s.dim; ++i) x[i] = u(rng);
        if ((x - pts[0]).norm() < 0.3 || (x - pts[1]).norm() < 0.3) continue;
        const Mat J = d.as_system().jacobian(x);
        CHECK(oracle::rel_error(J, oracle::fd_jacobian(d.as_system().residual, x)) <= 1e-5);
        ++checked;
      }
    }
  }
}

TEST_CASE("constraint-mode system") {
  const NonlinearSystem c = make_poly_system("cubic");
  const DeflationPool pool({v1(0.0), v1(1.0)}, Aggregation::Sum);
  const DeflatedSystem d = deflate_system(c, pool, kHimmelblauFn, SystemMode::Constraint);
  CHECK(d.dim() == 2);
  const Vec z0 = d.initial_point(v1(0.6));
  CHECK(z0[1] == doctest::Approx(deflation_value(kHimmelblauFn, pool, v1(0.6)).value));
  CHECK(d.as_system().residual(z0).cwiseAbs().maxCoeff() == doctest::Approx(std::abs(0.216 - 0.6)));
  CHECK(oracle::rel_error(d.as_system().jacobian(z0), oracle::fd_jacobian(d.as_system().residual, z0)) <= 1e-5);

  SolverOptions o;
  o.grad_tol = 1e-10;
  const SolveReport rep = newton_solve(d.as_system(), z0, o);
  if (rep.converged() && std::abs(rep.x_star[1]) < kFiniteYThreshold) {
    CHECK(std::abs(c.residual(d.x_part(rep.x_star))[0]) <= 1e-10);
    CHECK(min_pool_distance(kHimmelblauFn.measure, pool, d.x_part(rep.x_star)) > kHimmelblauFn.radius);
  }
}

TEST_CASE("kkt_residual on known points") {
  const Nlp s = sphere(2);
  Multipliers none;
  none.lambda = Vec(0);
  none.mu = Vec(0);
  none.z_upper = Vec::Zero(2);
  none.z_lower = Vec::Zero(2);
  const KktReport r0 = kkt_residual(s, v2(0, 0), none);
  CHECK(r0.worst() == 0.0);
  CHECK(r0.is_kkt(1e-12));

  const Nlp l = line_quadratic();
  Multipliers m = none;
  m.lambda = v1(-1.0);
  const KktReport r1 = kkt_residual(l, v2(0.5, 0.5), m);
  CHECK(r1.stationarity == doctest::Approx(0.0));
  CHECK(r1.eq_violation == doctest::Approx(0.0));
  const KktReport off = kkt_residual(l, v2(1.0, 0.5), m);
  CHECK(off.eq_violation == doctest::Approx(0.5));
  CHECK(off.stationarity == doctest::Approx(1.0));
}

TEST_CASE("kkt_residual sign convention for bounds") {
  // min (x - 2)^2 on [0, 1]: the upper bound is active with z_upper = 2.
  Nlp p;
  p.n = 1;
  p.objective = [](const Vec& x) { return (x[0] - 2) * (x[0] - 2); };
  p.gradient = [](const Vec& x) { return v1(2 * (x[0] - 2)); };
  p.lower = v1(0.0);
  p.upper = v1(1.0);
  const KktReport rep = kkt_at(p, v1(1.0));
  CHECK(rep.multipliers.z_upper[0] == doctest::Approx(2.0));
  CHECK(rep.multipliers.z_lower[0] == doctest::Approx(0.0));
  CHECK(rep.worst() <= 1e-12);
  const KktReport bad = kkt_at(p, v1(0.5));
  CHECK(bad.stationarity == doctest::Approx(3.0));
}

TEST_CASE("estimate_multipliers") {
  const Nlp h = make_himmelblau();
  const Vec x = v2(0.5, -1.0);
  const MultiplierEstimate est = estimate_multipliers(h, x);
  CHECK(est.multipliers.z_upper.cwiseAbs().maxCoeff() == 0.0);
  CHECK(est.multipliers.z_lower.cwiseAbs().maxCoeff() == 0.0);
  CHECK(est.fit_residual == doctest::Approx(inf_norm(h.gradient(x))));
  CHECK_FALSE(est.irregular);

  const MultiplierEstimate eq = estimate_multipliers(line_quadratic(), v2(0.5, 0.5));
  CHECK(std::abs(eq.multipliers.lambda[0] + 1.0) <= 1e-10);
}

TEST_CASE("rank-deficient active set is irregular") {
  Nlp p = sphere(2);
  p.num_eq = 2;
  p.eq = [](const Vec& x) { return v2(x[0] + x[1] - 1.0, 2 * x[0] + 2 * x[1] - 2.0); };
  p.eq_jacobian = [](const Vec&) { return (Mat(2, 2) << 1, 1, 2, 2).finished(); };
  CHECK(estimate_multipliers(p, v2(0.5, 0.5)).irregular);
}

TEST_CASE("reduced Hessian eigenvalue") {
  const Nlp l = line_quadratic();
  const KktReport rep = kkt_at(l, v2(0.5, 0.5));
  REQUIRE(rep.reduced_hessian_min_eig.has_value());
  CHECK(*rep.reduced_hessian_min_eig == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("a pool point fails verification") {
  const Nlp h = make_himmelblau();
  const DeflatedNlp d = deflate_nlp(h, DeflationPool({v2(3, 2)}, Aggregation::Sum), kHimmelblauFn, SlackMode{});
  const Vec z = (Vec(3) << 3.0, 2.0, 10.0).finished();
  const Lemma1Verdict v = verify_lemma1(d, z, 1e-6);
  CHECK_FALSE(v.distinct);
  CHECK_FALSE(v.pass);
}

TEST_CASE("y at its upper bound fails the finite-y check") {
  const Nlp h = make_himmelblau();
  const DeflatedNlp d =
      deflate_nlp(h, DeflationPool({v2(3, 2)}, Aggregation::Sum), kHimmelblauFn, SlackMode{0.0, 50.0});
  const auto minima = oracle::himmelblau_minima();
  Vec other;
  for (const auto& p : minima) {
    if ((p - v2(3, 2)).norm() > 1) other = p;
  }
  const Vec z = (Vec(3) << other, 50.0).finished();
  const Lemma1Verdict v = verify_lemma1(d, z, 1e-6);
  CHECK_FALSE(v.finite_y);
  CHECK_FALSE(v.pass);
  CHECK(v.original_kkt);
  CHECK(v.distinct);
}

TEST_CASE("dedup tolerance") {
  CHECK(dedup_tolerance(0.0, 4) == doctest::Approx(2e-3));
  CHECK(dedup_tolerance(0.5, 4) == 0.5);
}
