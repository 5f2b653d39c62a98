#pragma once

// Test-side reference computations. Nothing here calls into the library's solvers,
// so agreement with library results is an independent check.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline double himmelblau(double x, double y) {
  const double a = x * x + y - 11.0, b = x + y * y - 7.0;
  return a * a + b * b;
}

inline Eigen::Vector2d himmelblau_grad(double x, double y) {
  const double a = x * x + y - 11.0, b = x + y * y - 7.0;
  return {4.0 * a * x + 2.0 * b, 2.0 * a + 4.0 * b * y};
}

inline Eigen::Matrix2d himmelblau_hess(double x, double y) {
  Eigen::Matrix2d h;
  h << 12.0 * x * x + 4.0 * y - 42.0, 4.0 * (x + y), 4.0 * (x + y), 12.0 * y * y + 4.0 * x - 26.0;
  return h;
}

// Local minima on [-6, 6]^2: every grid cell minimum over its 8 neighbours, polished by
// Newton on the gradient, kept when the Hessian is positive definite.
inline std::vector<Eigen::Vector2d> himmelblau_minima(int grid = 401) {
  const double lo = -6.0, hi = 6.0, h = (hi - lo) / (grid - 1);
  auto val = [&](int i, int j) { return himmelblau(lo + i * h, lo + j * h); };
  std::vector<Eigen::Vector2d> found;
  for (int i = 1; i + 1 < grid; ++i) {
    for (int j = 1; j + 1 < grid; ++j) {
      const double v = val(i, j);
      bool is_min = true;
      for (int di = -1; di <= 1 && is_min; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          if ((di || dj) && val(i + di, j + dj) < v) {
            is_min = false;
            break;
          }
        }
      }
      if (!is_min) continue;
      Eigen::Vector2d p(lo + i * h, lo + j * h);
      for (int it = 0; it < 50; ++it) {
        const Eigen::Vector2d g = himmelblau_grad(p[0], p[1]);
        if (g.norm() < 1e-14) break;
        p -= himmelblau_hess(p[0], p[1]).ldlt().solve(g);
      }
      const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(himmelblau_hess(p[0], p[1]));
      if (eig.eigenvalues().minCoeff() <= 0.0) continue;
      bool dup = false;
      for (const auto& q : found) dup = dup || (q - p).norm() < 1e-6;
      if (!dup) found.push_back(p);
    }
  }
  return found;
}

inline double distance_to_set(const std::vector<Eigen::Vector2d>& set, const Vec& x) {
  double best = INFINITY;
  for (const auto& p : set) best = std::min(best, (x - p).norm());
  return best;
}

// Central differences of a scalar function.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-6) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec p = x, m = x;
    p[i] += h;
    m[i] -= h;
    g[i] = (f(p) - f(m)) / (2.0 * h);
  }
  return g;
}

// Central differences of a vector function, one column per input.
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& F, const Vec& x, double h = 1e-6) {
  const Vec f0 = F(x);
  Mat J(f0.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec p = x, m = x;
    p[i] += h;
    m[i] -= h;
    J.col(i) = (F(p) - F(m)) / (2.0 * h);
  }
  return J;
}

inline double rel_error(const Mat& a, const Mat& b) {
  const double scale = std::max(1.0, std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()));
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

// Roots of (sin x - y, y - x / 4): y = x / 4 reduces to sin x = x / 4, bracketed on a
// dense grid and refined by bisection.
inline std::vector<double> trig2d_roots() {
  auto g = [](double x) { return std::sin(x) - x / 4.0; };
  std::vector<double> roots;
  const int n = 20001;
  const double lo = -10.0, hi = 10.0, h = (hi - lo) / (n - 1);
  for (int i = 0; i + 1 < n; ++i) {
    double a = lo + i * h, b = a + h;
    if (g(a) == 0.0) {
      roots.push_back(a);
      continue;
    }
    if (g(a) * g(b) >= 0.0) continue;
    for (int it = 0; it < 200; ++it) {
      const double c = 0.5 * (a + b);
      (g(a) * g(c) <= 0.0 ? b : a) = c;
    }
    roots.push_back(0.5 * (a + b));
  }
  return roots;
}

inline double gaussian_kl(double mu1, double ls1, double mu2, double ls2) {
  const double s1 = std::exp(ls1), s2 = std::exp(ls2);
  return std::log(s2 / s1) + (s1 * s1 + (mu1 - mu2) * (mu1 - mu2)) / (2.0 * s2 * s2) - 0.5;
}

}  // namespace oracle
