#include <doctest.h>

#include <random>

#include "deflation/kernels.hpp"

using namespace deflation;

TEST_CASE("mixture kernel matches the serial reference bitwise") {
  const MixtureTarget target = default_vi_target();
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd(0.0, 15.0);
  std::vector<double> z(4096);
  for (double& v : z) v = nd(rng);
  std::vector<double> lp(z.size()), sc(z.size()), lp_ref(z.size()), sc_ref(z.size());
  kernels::mixture_log_density_batch(target, z, lp, sc);
  kernels::serial::mixture_log_density_batch(target, z, lp_ref, sc_ref);
  CHECK(lp == lp_ref);
  CHECK(sc == sc_ref);
  for (std::size_t i = 0; i < z.size(); i += 97) CHECK(lp[i] == doctest::Approx(target.log_density(z[i])).epsilon(1e-12));
}

TEST_CASE("stiffness and strain energy kernels match the serial reference") {
  const TrussModel model = make_truss_model(10, 4, 0.3);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Vec x(model.num_elements());
  for (auto& v : x) v = u(rng);
  const Mat K = kernels::assemble_stiffness(model, x);
  CHECK(K == kernels::serial::assemble_stiffness(model, x));
  CHECK((K - model.stiffness(x)).cwiseAbs().maxCoeff() <= 1e-12 * K.cwiseAbs().maxCoeff());
  const Vec disp = model.displacement(x);
  CHECK(kernels::member_strain_energy(model, disp) == kernels::serial::member_strain_energy(model, disp));
}

TEST_CASE("deflation value batch matches the serial reference") {
  const DeflationFunction fn{PowerNorm{2.0}, 2.0, 1.0, 0.5};
  DeflationPool pool({Vec::Zero(3), Vec::Ones(3), Vec::Constant(3, -2.0)}, Aggregation::Product);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<Vec> pts(2000, Vec(3));
  for (auto& p : pts)
    for (auto& v : p) v = u(rng);
  pts.push_back(Vec::Zero(3));
  const auto a = kernels::deflation_value_batch(fn, pool, pts);
  const auto b = kernels::serial::deflation_value_batch(fn, pool, pts);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].is_singular == b[i].is_singular);
    if (!a[i].is_singular) CHECK(a[i].value == b[i].value);
  }
  CHECK(a.back().is_singular);
  CHECK(kernels::max_threads() >= 1);
}
