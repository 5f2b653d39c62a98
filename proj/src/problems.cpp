#include <cmath>

#include "deflation/problems.hpp"

namespace deflation {

void Nlp::validate() const {
  require(n > 0, "problem needs at least one variable");
  require(static_cast<bool>(objective) && static_cast<bool>(gradient),
          "objective and gradient callbacks are required");
  require(lower.size() == n && upper.size() == n, "bound vectors must have length n");
  require((lower.array() <= upper.array()).all(), "lower bound exceeds upper bound");
  require(num_eq <= n, "more equality constraints than variables");
  require(num_eq == 0 || (eq && eq_jacobian), "equality callbacks missing");
  require(num_ineq == 0 || (ineq && ineq_jacobian), "inequality callbacks missing");
}

bool Nlp::has_finite_bounds() const {
  return lower.allFinite() && upper.allFinite();
}

Vec unbounded_lower(int n) { return Vec::Constant(n, -kInf); }
Vec unbounded_upper(int n) { return Vec::Constant(n, kInf); }

Nlp make_himmelblau() {
  Nlp nlp;
  nlp.name = "himmelblau";
  nlp.n = 2;
  nlp.objective = [](const Vec& v) {
    const double a = v[0] * v[0] + v[1] - 11.0;
    const double b = v[0] + v[1] * v[1] - 7.0;
    return a * a + b * b;
  };
  nlp.gradient = [](const Vec& v) {
    const double a = v[0] * v[0] + v[1] - 11.0;
    const double b = v[0] + v[1] * v[1] - 7.0;
    Vec g(2);
    g << 4.0 * a * v[0] + 2.0 * b, 2.0 * a + 4.0 * b * v[1];
    return g;
  };
  nlp.lagrangian_hessian = [](const Vec& v, const Vec&) {
    const double a = v[0] * v[0] + v[1] - 11.0;
    const double b = v[0] + v[1] * v[1] - 7.0;
    Mat h(2, 2);
    h << 4.0 * a + 8.0 * v[0] * v[0] + 2.0, 4.0 * v[0] + 4.0 * v[1],
        4.0 * v[0] + 4.0 * v[1], 2.0 + 4.0 * b + 8.0 * v[1] * v[1];
    return h;
  };
  nlp.lower = Vec::Constant(2, -6.0);
  nlp.upper = Vec::Constant(2, 6.0);
  return nlp;
}

NonlinearSystem make_poly_system(const std::string& name) {
  NonlinearSystem sys;
  sys.name = name;
  if (name == "quadratic") {
    sys.dim = 1;
    sys.residual = [](const Vec& x) { return Vec::Constant(1, x[0] * x[0] - 1.0); };
    sys.jacobian = [](const Vec& x) { return Mat::Constant(1, 1, 2.0 * x[0]); };
  } else if (name == "cubic") {
    sys.dim = 1;
    sys.residual = [](const Vec& x) { return Vec::Constant(1, x[0] * x[0] * x[0] - x[0]); };
    sys.jacobian = [](const Vec& x) { return Mat::Constant(1, 1, 3.0 * x[0] * x[0] - 1.0); };
  } else if (name == "trig2d") {
    // roots: (0, 0) and (+-x*, +-x*/4) with sin(x*) = x*/4, x* ~ 2.4746
    sys.dim = 2;
    sys.residual = [](const Vec& x) {
      Vec r(2);
      r << std::sin(x[0]) - x[1], x[1] - 0.25 * x[0];
      return r;
    };
    sys.jacobian = [](const Vec& x) {
      Mat j(2, 2);
      j << std::cos(x[0]), -1.0, -0.25, 1.0;
      return j;
    };
  } else {
    throw Error("unknown system '" + name + "' (expected quadratic, cubic or trig2d)");
  }
  return sys;
}

}  // namespace deflation
