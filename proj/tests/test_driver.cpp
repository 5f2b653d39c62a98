#include <doctest.h>

#include <algorithm>
#include <random>

#include "deflation/experiments.hpp"
#include "deflation/result_io.hpp"
#include "oracles.hpp"

using namespace deflation;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

RunConfig pinned_himmelblau() { return himmelblau_spec(load_experiment_config("himmelblau")).config; }

RunConfig cubic_config() {
  RunConfig c;
  c.n_solutions = 3;
  c.x0 = v1(0.6);
  c.solver = Backend::Newton;
  c.system_mode = SystemMode::Multiplicative;
  c.options.grad_tol = 1e-10;
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  RunConfig c = cubic_config();
  CHECK_NOTHROW(c.validate());
  c.n_solutions = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = cubic_config();
  c.intermediate_every = -1;
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK(backend_from_string("mma") == Backend::Mma);
  CHECK_THROWS_AS(backend_from_string("sgd"), Error);
  CHECK(cubic_config().effective_dedup_tol(4) == doctest::Approx(2e-3));
}

TEST_CASE("Himmelblau from the origin finds all four minima") {
  const auto minima = oracle::himmelblau_minima();
  const RunConfig c = pinned_himmelblau();
  const SolutionSet set = find_multiple_solutions(make_himmelblau(), c);
  const auto acc = set.accepted();
  std::vector<int> hit(minima.size(), 0);
  for (const auto& r : acc) {
    CHECK(oracle::distance_to_set(minima, r.x) <= 1e-4);
    for (std::size_t i = 0; i < minima.size(); ++i) hit[i] += (r.x - minima[i]).norm() <= 1e-4;
  }
  CHECK(acc.size() == 4);
  CHECK(std::count(hit.begin(), hit.end(), 1) == 4);
}

TEST_CASE("accepted Himmelblau records satisfy the acceptance invariants") {
  const RunConfig c = pinned_himmelblau();
  const SolutionSet set = find_multiple_solutions(make_himmelblau(), c);
  REQUIRE(set.size() >= 2);
  std::size_t accepted_so_far = 0;
  std::vector<Vec> before;
  for (const auto& r : set.attempts) {
    CHECK(r.pool_size == accepted_so_far);
    if (!r.accepted) {
      CHECK_FALSE(r.failure.empty());
      continue;
    }
    CHECK(r.failure.empty());
    CHECK(r.kkt.stationarity <= c.kkt_tol);
    CHECK(std::abs(r.eta) <= c.kkt_tol);
    for (const Vec& p : before) CHECK((r.x - p).norm() > c.deflation.radius);
    before.push_back(r.x);
    ++accepted_so_far;
  }
  CHECK(set.points().size() == set.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    for (std::size_t j = i + 1; j < before.size(); ++j) {
      CHECK((before[i] - before[j]).norm() > c.effective_dedup_tol(2));
    }
  }
}

TEST_CASE("cubic roots by multiplicative deflation") {
  const SolutionSet set = find_multiple_solutions(make_poly_system("cubic"), cubic_config());
  REQUIRE(set.size() == 3);
  std::vector<double> roots;
  for (const Vec& x : set.points()) roots.push_back(x[0]);
  std::sort(roots.begin(), roots.end());
  CHECK(std::abs(roots[0] + 1.0) <= 1e-10);
  CHECK(std::abs(roots[1]) <= 1e-10);
  CHECK(std::abs(roots[2] - 1.0) <= 1e-10);
  for (const auto& r : set.accepted()) CHECK(r.residual <= 1e-10);
}

TEST_CASE("cubic roots by constraint deflation") {
  RunConfig c = cubic_config();
  c.system_mode = SystemMode::Constraint;
  const SolutionSet set = find_multiple_solutions(make_poly_system("cubic"), c);
  for (const auto& r : set.accepted()) {
    CHECK(r.residual <= 1e-10);
    CHECK(std::abs(r.y_star) < kFiniteYThreshold);
  }
  CHECK(set.size() == 3);
}

TEST_CASE("a single solution is the plain solve") {
  const NonlinearSystem cubic = make_poly_system("cubic");
  RunConfig c = cubic_config();
  c.n_solutions = 1;
  const SolutionSet set = find_multiple_solutions(cubic, c);
  REQUIRE(set.attempts.size() == 1);
  const SolveReport plain = newton_solve(cubic, c.x0, c.options);
  CHECK(set.attempts[0].x == plain.x_star);
  CHECK(set.attempts[0].solver_iterations == plain.iterations);

  RunConfig h = pinned_himmelblau();
  h.n_solutions = 1;
  const SolutionSet hs = find_multiple_solutions(make_himmelblau(), h);
  REQUIRE(hs.attempts.size() == 1);
  const SolveReport hp = augmented_lagrangian_solve(make_himmelblau(), h.x0, h.options);
  CHECK((hs.attempts[0].x - hp.x_star).norm() <= 1e-8);
}

TEST_CASE("driver is deterministic") {
  const RunConfig c = pinned_himmelblau();
  const SolutionSet a = find_multiple_solutions(make_himmelblau(), c);
  const SolutionSet b = find_multiple_solutions(make_himmelblau(), c);
  const std::map<std::string, std::string> desc = {{"problem", "himmelblau"}};
  CHECK(deterministic_payload(make_result_file("h", desc, c, a, 0.0)) ==
        deterministic_payload(make_result_file("h", desc, c, b, 1.0)));
}

TEST_CASE("failure budget stops the loop") {
  // only two roots exist, so the third request fails over and over
  RunConfig c = cubic_config();
  c.n_solutions = 5;
  c.failure_budget = 2;
  const SolutionSet set = find_multiple_solutions(make_poly_system("quadratic"), c);
  CHECK(set.size() == 2);
  CHECK(set.attempts.size() == 4);
  CHECK_FALSE(set.attempts.back().accepted);
  CHECK_FALSE(set.attempts.back().failure.empty());
}

TEST_CASE("deduplicate examples") {
  CHECK(deduplicate({v2(3, 2), v2(3.0000001, 2)}, 1e-3).size() == 1);
  const std::vector<Vec> disjoint = {v2(0, 0), v2(1, 0), v2(0, 1)};
  const auto kept = deduplicate(disjoint, 1e-3);
  REQUIRE(kept.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(kept[i] == disjoint[i]);
  CHECK(deduplicate(std::vector<Vec>{}, 1.0).empty());
}

TEST_CASE("deduplicate is idempotent") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<Vec> pts;
    for (int k = 0; k < 5 + t % 20; ++k) pts.push_back(v2(u(rng), u(rng)));
    const double tol = 0.05 + 0.01 * (t % 30);
    const auto once = deduplicate(pts, tol);
    const auto twice = deduplicate(once, tol);
    REQUIRE(once.size() == twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(once[i] == twice[i]);
    for (std::size_t i = 0; i < once.size(); ++i) {
      for (std::size_t j = i + 1; j < once.size(); ++j) CHECK((once[i] - once[j]).norm() > tol);
    }
  }
}

TEST_CASE("deduplicate on a solution set keeps rejected attempts") {
  SolutionSet set;
  for (const Vec& x : {v2(0, 0), v2(0, 1e-6), v2(1, 1)}) {
    SolutionRecord r;
    r.x = x;
    r.accepted = true;
    set.attempts.push_back(r);
  }
  const SolutionSet d = deduplicate(set, 1e-3);
  CHECK(d.attempts.size() == 3);
  CHECK(d.size() == 2);
  CHECK_FALSE(d.attempts[1].accepted);
  CHECK_FALSE(d.attempts[1].failure.empty());
}

TEST_CASE("multistart baseline") {
  const RunConfig c = pinned_himmelblau();
  const Nlp h = make_himmelblau();
  const SolutionSet a = multistart_baseline(h, 20, 1, c);
  CHECK(a.attempts.size() == 20);
  CHECK(a.size() >= 2);
  CHECK(a.size() <= 4);
  const SolutionSet b = multistart_baseline(h, 20, 1, c);
  REQUIRE(a.attempts.size() == b.attempts.size());
  for (std::size_t i = 0; i < a.attempts.size(); ++i) {
    CHECK(a.attempts[i].x == b.attempts[i].x);
    CHECK(a.attempts[i].accepted == b.attempts[i].accepted);
    CHECK(a.attempts[i].iteration == static_cast<int>(i));
  }
  CHECK(multistart_baseline(h, 1, 1, c).attempts.size() == 1);
}

TEST_CASE("intermediate deflation points") {
  std::vector<Vec> traj;
  for (int t = 0; t <= 35; ++t) traj.push_back(v1(t));
  CHECK(intermediate_deflation_points(traj, 0).empty());
  const auto pts = intermediate_deflation_points(traj, 10);
  REQUIRE(pts.size() == 3);
  CHECK(pts[0][0] == 0.0);
  CHECK(pts[1][0] == 10.0);
  CHECK(pts[2][0] == 20.0);
}

TEST_CASE("intermediate deflation leaves accepted solutions verifiable") {
  RunConfig c = pinned_himmelblau();
  c.intermediate_every = 5;
  const SolutionSet set = find_multiple_solutions(make_himmelblau(), c);
  REQUIRE(set.size() >= 1);
  DeflationPool persistent(c.aggregation);
  for (const auto& r : set.attempts) {
    if (!r.accepted) continue;
    if (!persistent.empty()) {
      const DeflatedNlp d = deflate_nlp(make_himmelblau(), persistent, c.deflation, c.mode);
      Vec z(3);
      z << r.x, r.y_star;
      CHECK(verify_lemma1(d, z, c.kkt_tol).pass);
    }
    persistent.add(r.x);
  }
}

TEST_CASE("stochastic driver on a single-mode target") {
  const StochasticObjective f = make_mixture_vi(MixtureTarget({{1.0, 2.0, 1.0}}), 100, 0);
  RunConfig c;
  c.n_solutions = 3;
  c.x0 = v2(0.0, 1.0);
  c.deflation = DeflationFunction{GaussianKl{}, 3.0, 0.0, 1.0};
  c.solver = Backend::Barrier;
  c.mode = SlackMode{0.0, 100.0};
  c.options.adagrad_iter = 2000;
  c.stochastic_check_samples = 100000;
  c.failure_budget = 2;
  const SolutionSet set = find_multiple_solutions(f, c);
  REQUIRE(set.size() == 1);
  const Vec x = set.points()[0];
  CHECK(std::abs(x[0] - 2.0) <= 0.1);
  CHECK(std::abs(x[1]) <= 0.1);
  for (const auto& r : set.attempts) {
    if (r.accepted) continue;
    CHECK_FALSE(r.failure.empty());
  }
  c.mode = BigMMode{10.0};
  CHECK_THROWS_AS(find_multiple_solutions(f, c), Error);
}
