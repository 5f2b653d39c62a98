#include "deflation/barrier_kkt.hpp"

#include <cmath>
#include <memory>
#include <random>
#include <vector>

namespace deflation {

void BarrierState::validate(const Nlp& nlp) const {
  require(x.size() == nlp.n, "barrier state has wrong dimension");
  require(lambda.size() == nlp.num_eq, "barrier state lambda has wrong size");
  require(z_l.size() == nlp.n && z_u.size() == nlp.n, "barrier state z has wrong size");
  require(mu > 0.0, "barrier parameter must be positive");
  for (int i = 0; i < nlp.n; ++i) {
    if (!(x[i] > nlp.lower[i] && x[i] < nlp.upper[i])) {
      throw Error("barrier state touches a bound");
    }
  }
  require((z_l.array() > 0.0).all() && (z_u.array() > 0.0).all(), "barrier z must be positive");
}

namespace {

Vec lagrangian_gradient(const Nlp& nlp, const Vec& x, const Vec& lambda) {
  Vec g = nlp.gradient(x);
  if (nlp.num_eq) g += nlp.eq_jac(x).transpose() * lambda;
  return g;
}

void check_interior(const Nlp& nlp, const Vec& x) {
  for (int i = 0; i < nlp.n; ++i) {
    if (!(x[i] > nlp.lower[i] && x[i] < nlp.upper[i])) throw Error("barrier state touches a bound");
  }
}

// mu (X_l^-1 + X_u^-1) 1, treating infinite bounds as absent
Vec barrier_pull(const Nlp& nlp, const Vec& x, double mu) {
  Vec b = Vec::Zero(nlp.n);
  for (int i = 0; i < nlp.n; ++i) {
    if (std::isfinite(nlp.lower[i])) b[i] += mu / (x[i] - nlp.lower[i]);
    if (std::isfinite(nlp.upper[i])) b[i] += mu / (nlp.upper[i] - x[i]);
  }
  return b;
}

// d/dx of -mu X_l^-1 1 - mu X_u^-1 1
Vec barrier_pull_derivative(const Nlp& nlp, const Vec& x, double mu) {
  Vec d = Vec::Zero(nlp.n);
  for (int i = 0; i < nlp.n; ++i) {
    if (std::isfinite(nlp.lower[i])) d[i] += mu / ((x[i] - nlp.lower[i]) * (x[i] - nlp.lower[i]));
    if (std::isfinite(nlp.upper[i])) d[i] -= mu / ((nlp.upper[i] - x[i]) * (nlp.upper[i] - x[i]));
  }
  return d;
}

Vec residual_xl(const Nlp& nlp, const Vec& x, const Vec& lambda, double mu) {
  Vec F(nlp.n + nlp.num_eq);
  F.head(nlp.n) = lagrangian_gradient(nlp, x, lambda) - barrier_pull(nlp, x, mu);
  F.tail(nlp.num_eq) = nlp.eq_values(x);
  return F;
}

Mat residual_jacobian_xl(const Nlp& nlp, const Vec& x, const Vec& lambda, double mu) {
  const int n = nlp.n, m = nlp.num_eq;
  const Mat A = nlp.eq_jac(x).transpose();
  Mat J = Mat::Zero(n + m, n + m);
  J.topLeftCorner(n, n) = lagrangian_hessian(nlp, x, lambda);
  J.topLeftCorner(n, n).diagonal() += barrier_pull_derivative(nlp, x, mu);
  J.topRightCorner(n, m) = A;
  J.bottomLeftCorner(m, n) = A.transpose();
  return J;
}

Vec inv_gap_lower(const Nlp& nlp, const Vec& x) {
  Vec v(nlp.n);
  for (int i = 0; i < nlp.n; ++i) v[i] = std::isfinite(nlp.lower[i]) ? 1.0 / (x[i] - nlp.lower[i]) : 0.0;
  return v;
}

Vec inv_gap_upper(const Nlp& nlp, const Vec& x) {
  Vec v(nlp.n);
  for (int i = 0; i < nlp.n; ++i) v[i] = std::isfinite(nlp.upper[i]) ? 1.0 / (nlp.upper[i] - x[i]) : 0.0;
  return v;
}

}  // namespace

Mat lagrangian_hessian(const Nlp& nlp, const Vec& x, const Vec& lambda) {
  if (nlp.lagrangian_hessian) return nlp.lagrangian_hessian(x, lambda);
  const double h = 1e-6;
  Mat H(nlp.n, nlp.n);
  for (int j = 0; j < nlp.n; ++j) {
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    H.col(j) = (lagrangian_gradient(nlp, xp, lambda) - lagrangian_gradient(nlp, xm, lambda)) / (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

Vec assemble_barrier_residual(const Nlp& nlp, const BarrierState& s) {
  s.validate(nlp);
  return residual_xl(nlp, s.x, s.lambda, s.mu);
}

Mat barrier_residual_jacobian(const Nlp& nlp, const BarrierState& s) {
  s.validate(nlp);
  return residual_jacobian_xl(nlp, s.x, s.lambda, s.mu);
}

NonlinearSystem barrier_residual_system(const Nlp& nlp, double mu) {
  require(mu > 0.0, "barrier parameter must be positive");
  auto p = std::make_shared<Nlp>(nlp);
  NonlinearSystem sys;
  sys.name = nlp.name + "+barrier";
  sys.dim = nlp.n + nlp.num_eq;
  sys.residual = [p, mu](const Vec& v) -> Vec {
    const Vec x = v.head(p->n);
    for (int i = 0; i < p->n; ++i) {
      if (!(x[i] > p->lower[i] && x[i] < p->upper[i])) return Vec::Constant(v.size(), kInf);
    }
    return residual_xl(*p, x, v.tail(p->num_eq), mu);
  };
  sys.jacobian = [p, mu](const Vec& v) -> Mat {
    const Vec x = v.head(p->n);
    check_interior(*p, x);
    return residual_jacobian_xl(*p, x, v.tail(p->num_eq), mu);
  };
  return sys;
}

KktMatrices assemble_reduced_kkt(const Nlp& nlp, const BarrierState& s) {
  s.validate(nlp);
  const int n = nlp.n, m = nlp.num_eq;
  KktMatrices k;
  k.W = lagrangian_hessian(nlp, s.x, s.lambda);
  k.A = nlp.eq_jac(s.x).transpose();
  k.Sigma = inv_gap_lower(nlp, s.x).cwiseProduct(s.z_l) + inv_gap_upper(nlp, s.x).cwiseProduct(s.z_u);
  k.reduced = Mat::Zero(n + m, n + m);
  k.reduced.topLeftCorner(n, n) = k.W;
  k.reduced.topLeftCorner(n, n).diagonal() += k.Sigma;
  k.reduced.topRightCorner(n, m) = k.A;
  k.reduced.bottomLeftCorner(m, n) = k.A.transpose();
  k.rhs = -residual_xl(nlp, s.x, s.lambda, s.mu);
  return k;
}

void back_substitute(const Nlp& nlp, const BarrierState& s, NewtonDirection& d) {
  const Vec il = inv_gap_lower(nlp, s.x);
  const Vec iu = inv_gap_upper(nlp, s.x);
  d.dz_l = -s.z_l + s.mu * il - il.cwiseProduct(s.z_l).cwiseProduct(d.dx);
  d.dz_u = -s.z_u + s.mu * iu - iu.cwiseProduct(s.z_u).cwiseProduct(d.dx);
}

NewtonDirection solve_reduced_kkt(const Nlp& nlp, const BarrierState& s) {
  const KktMatrices k = assemble_reduced_kkt(nlp, s);
  const Vec sol = k.reduced.fullPivLu().solve(k.rhs);
  NewtonDirection d;
  d.dx = sol.head(nlp.n);
  d.dlambda = sol.tail(nlp.num_eq);
  back_substitute(nlp, s, d);
  return d;
}

FullKktSystem assemble_full_kkt(const Nlp& nlp, const BarrierState& s) {
  s.validate(nlp);
  require(nlp.has_finite_bounds(), "full barrier system needs finite bounds");
  const int n = nlp.n, m = nlp.num_eq;
  const Mat W = lagrangian_hessian(nlp, s.x, s.lambda);
  const Mat A = nlp.eq_jac(s.x).transpose();
  const Vec xl = s.x - nlp.lower;
  const Vec xu = nlp.upper - s.x;
  const Mat I = Mat::Identity(n, n);
  FullKktSystem sys;
  sys.matrix = Mat::Zero(3 * n + m, 3 * n + m);
  sys.matrix.block(0, 0, n, n) = W;
  sys.matrix.block(0, n, n, m) = A;
  sys.matrix.block(0, n + m, n, n) = -I;
  sys.matrix.block(0, 2 * n + m, n, n) = -I;
  sys.matrix.block(n, 0, m, n) = A.transpose();
  sys.matrix.block(n + m, 0, n, n) = s.z_l.asDiagonal();
  sys.matrix.block(n + m, n + m, n, n) = xl.asDiagonal();
  sys.matrix.block(2 * n + m, 0, n, n) = s.z_u.asDiagonal();
  sys.matrix.block(2 * n + m, 2 * n + m, n, n) = xu.asDiagonal();
  sys.rhs.resize(3 * n + m);
  sys.rhs.segment(0, n) = -(lagrangian_gradient(nlp, s.x, s.lambda) - s.z_l - s.z_u);
  sys.rhs.segment(n, m) = -nlp.eq_values(s.x);
  sys.rhs.segment(n + m, n) = -(xl.cwiseProduct(s.z_l).array() - s.mu).matrix();
  sys.rhs.segment(2 * n + m, n) = -(xu.cwiseProduct(s.z_u).array() - s.mu).matrix();
  return sys;
}

NewtonDirection solve_full_kkt(const Nlp& nlp, const BarrierState& s) {
  const FullKktSystem sys = assemble_full_kkt(nlp, s);
  const Vec sol = sys.matrix.fullPivLu().solve(sys.rhs);
  const int n = nlp.n, m = nlp.num_eq;
  NewtonDirection d;
  d.dx = sol.segment(0, n);
  d.dlambda = sol.segment(n, m);
  d.dz_l = sol.segment(n + m, n);
  d.dz_u = sol.segment(2 * n + m, n);
  return d;
}

Mat assemble_deflated_jacobian(const Vec& F_value, const Mat& F_jacobian_x, double m_value,
                               const Vec& m_gradient) {
  require(F_jacobian_x.rows() == F_value.size(), "Jacobian rows must match the residual");
  require(F_jacobian_x.cols() == m_gradient.size(), "Jacobian columns must match the gradient");
  require(std::isfinite(m_value) && m_gradient.allFinite(), "deflated Jacobian at a singular point");
  return m_value * F_jacobian_x + F_value * m_gradient.transpose();
}

Mat deflated_barrier_jacobian(const Nlp& nlp, const BarrierState& s, const DeflationFunction& fn,
                              const DeflationPool& pool) {
  const DeflationValue m = deflation_value(fn, pool, s.x);
  require(!m.is_singular, "deflated Jacobian at a singular point");
  const int n = nlp.n;
  const Vec F = assemble_barrier_residual(nlp, s);
  const Mat J = barrier_residual_jacobian(nlp, s);
  Mat G(J.rows(), J.cols());
  G.leftCols(n) = assemble_deflated_jacobian(F, J.leftCols(n), m.value, deflation_gradient(fn, pool, s.x));
  G.rightCols(nlp.num_eq) = m.value * J.rightCols(nlp.num_eq);
  return G;
}

double symmetry_defect(const Mat& M) {
  require(M.rows() == M.cols(), "symmetry defect needs a square matrix");
  if (M.size() == 0) return 0.0;
  return (M - M.transpose()).cwiseAbs().maxCoeff();
}

Nlp make_random_equality_problem(int n, int m, std::uint64_t seed) {
  require(n > 0 && m >= 0 && m < n, "random problem needs 0 <= m < n");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian = [&](int r, int c) {
    Mat M(r, c);
    for (int j = 0; j < c; ++j) {
      for (int i = 0; i < r; ++i) M(i, j) = normal(rng);
    }
    return M;
  };
  struct Data {
    Mat Q;
    Vec g, a;
    Mat B;  // m x n
    std::vector<Mat> C;
    Vec e;
  };
  auto d = std::make_shared<Data>();
  const Mat R = gaussian(n, n);
  d->Q = R * R.transpose() / n + Mat::Identity(n, n);
  d->g = gaussian(n, 1);
  d->a = gaussian(n, 1);
  d->B = gaussian(m, n);
  for (int j = 0; j < m; ++j) {
    const Mat S = gaussian(n, n);
    d->C.push_back(0.25 * (S + S.transpose()));
  }
  d->e = gaussian(m, 1);

  Nlp nlp;
  nlp.name = "random-equality";
  nlp.n = n;
  nlp.objective = [d](const Vec& x) {
    return 0.5 * x.dot(d->Q * x) + d->g.dot(x) + d->a.dot(x.array().sin().matrix());
  };
  nlp.gradient = [d](const Vec& x) -> Vec {
    return d->Q * x + d->g + d->a.cwiseProduct(x.array().cos().matrix());
  };
  nlp.num_eq = m;
  nlp.eq = [d](const Vec& x) {
    Vec c(d->B.rows());
    for (int j = 0; j < c.size(); ++j) c[j] = d->B.row(j).dot(x) + 0.5 * x.dot(d->C[j] * x) - d->e[j];
    return c;
  };
  nlp.eq_jacobian = [d](const Vec& x) {
    Mat J = d->B;
    for (int j = 0; j < J.rows(); ++j) J.row(j) += (d->C[j] * x).transpose();
    return J;
  };
  nlp.lower = Vec::Constant(n, -5.0);
  nlp.upper = Vec::Constant(n, 5.0);
  nlp.lagrangian_hessian = [d](const Vec& x, const Vec& lambda) -> Mat {
    Mat H = d->Q;
    H.diagonal() -= d->a.cwiseProduct(x.array().sin().matrix());
    for (int j = 0; j < lambda.size(); ++j) H += lambda[j] * d->C[j];
    return H;
  };
  return nlp;
}

BarrierState random_barrier_state(const Nlp& nlp, std::uint64_t seed, double mu) {
  require(nlp.has_finite_bounds(), "random barrier state needs finite bounds");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  std::uniform_real_distribution<double> positive(0.1, 2.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  BarrierState s;
  s.mu = mu;
  s.x.resize(nlp.n);
  s.z_l.resize(nlp.n);
  s.z_u.resize(nlp.n);
  for (int i = 0; i < nlp.n; ++i) {
    s.x[i] = nlp.lower[i] + unit(rng) * (nlp.upper[i] - nlp.lower[i]);
    s.z_l[i] = positive(rng);
    s.z_u[i] = positive(rng);
  }
  s.lambda.resize(nlp.num_eq);
  for (int j = 0; j < nlp.num_eq; ++j) s.lambda[j] = normal(rng);
  return s;
}

}  // namespace deflation
