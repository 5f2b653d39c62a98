#include "deflation/reformulation.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace deflation {

namespace {

struct NlpState {
  Nlp base;
  DeflationPool pool;
  DeflationFunction fn;
  bool slack;
  double M;
};

double deflation_floor(const DeflationFunction& fn, const DeflationPool& pool) {
  if (pool.empty()) return 0.0;
  const double k = static_cast<double>(pool.size());
  return pool.aggregation() == Aggregation::Sum ? k * fn.shift : std::pow(fn.shift, k);
}

Mat pad_columns(const Mat& J, int extra) {
  Mat out = Mat::Zero(J.rows(), J.cols() + extra);
  out.leftCols(J.cols()) = J;
  return out;
}

}  // namespace

DeflatedNlp::DeflatedNlp(Nlp base, DeflationPool pool, DeflationFunction fn, NlpDeflationMode mode)
    : base_(std::move(base)), pool_(std::move(pool)), fn_(std::move(fn)), mode_(std::move(mode)) {
  base_.validate();
  fn_.validate();
  require(pool_.empty() || pool_.dim() == base_.n, "pool dimension does not match the problem");
  if (const auto* s = std::get_if<SlackMode>(&mode_)) {
    require(s->y_lower < s->y_upper, "slack bounds must satisfy y_lower < y_upper");
  } else {
    const double M = std::get<BigMMode>(mode_).M;
    require(std::isfinite(M), "big-M constant must be finite");
    if (!(M > deflation_floor(fn_, pool_))) throw Error("deflation constraint infeasible everywhere");
  }

  auto st = std::make_shared<NlpState>();
  st->base = base_;
  st->pool = pool_;
  st->fn = fn_;
  st->slack = is_slack();
  st->M = st->slack ? 0.0 : std::get<BigMMode>(mode_).M;
  const int n = base_.n;
  const int extra = st->slack ? 1 : 0;

  nlp_.name = base_.name + "+deflation";
  nlp_.n = n + extra;
  nlp_.objective = [st, n](const Vec& z) { return st->base.objective(z.head(n)); };
  nlp_.gradient = [st, n, extra](const Vec& z) {
    Vec g = Vec::Zero(n + extra);
    g.head(n) = st->base.gradient(z.head(n));
    return g;
  };
  nlp_.num_eq = base_.num_eq;
  if (base_.num_eq) {
    nlp_.eq = [st, n](const Vec& z) { return st->base.eq(z.head(n)); };
    nlp_.eq_jacobian = [st, n, extra](const Vec& z) {
      return pad_columns(st->base.eq_jacobian(z.head(n)), extra);
    };
  }
  nlp_.num_ineq = base_.num_ineq + 1;
  nlp_.ineq = [st, n](const Vec& z) {
    const Vec x = z.head(n);
    Vec d(st->base.num_ineq + 1);
    d.head(st->base.num_ineq) = st->base.ineq_values(x);
    const DeflationValue m = deflation_value(st->fn, st->pool, x);
    const double cap = st->slack ? z[n] : st->M;
    d[st->base.num_ineq] = m.is_singular ? kInf : m.value - cap;
    return d;
  };
  nlp_.ineq_jacobian = [st, n, extra](const Vec& z) {
    const Vec x = z.head(n);
    Mat J = Mat::Zero(st->base.num_ineq + 1, n + extra);
    if (st->base.num_ineq) J.topLeftCorner(st->base.num_ineq, n) = st->base.ineq_jacobian(x);
    J.block(st->base.num_ineq, 0, 1, n) = deflation_gradient(st->fn, st->pool, x).transpose();
    if (st->slack) J(st->base.num_ineq, n) = -1.0;
    return J;
  };
  nlp_.lower = base_.lower;
  nlp_.upper = base_.upper;
  if (st->slack) {
    const auto& s = std::get<SlackMode>(mode_);
    nlp_.lower.conservativeResize(n + 1);
    nlp_.upper.conservativeResize(n + 1);
    nlp_.lower[n] = s.y_lower;
    nlp_.upper[n] = s.y_upper;
  }
  if (base_.lagrangian_hessian) {
    nlp_.lagrangian_hessian = [st, n, extra](const Vec& z, const Vec& lambda) {
      Mat H = Mat::Zero(n + extra, n + extra);
      H.topLeftCorner(n, n) = st->base.lagrangian_hessian(z.head(n), lambda);
      return H;
    };
  }
}

Vec DeflatedNlp::initial_point(const Vec& x0) const {
  require(x0.size() == base_.n, "start has wrong dimension");
  if (!is_slack()) return x0;
  const auto& s = std::get<SlackMode>(mode_);
  const DeflationValue m = deflation_value(fn_, pool_, x0);
  double y0;
  if (!m.is_singular) {
    y0 = std::max(m.value + 1.0, s.y_lower);
    if (y0 >= s.y_upper) y0 = m.value < s.y_upper ? 0.5 * (m.value + s.y_upper) : 0.5 * s.y_upper;
  } else {
    y0 = std::isfinite(s.y_upper) ? 0.5 * s.y_upper : std::max(1.0, s.y_lower + 1.0);
  }
  Vec z(base_.n + 1);
  z << x0, y0;
  return z;
}

double DeflatedNlp::y_part(const Vec& z) const {
  return is_slack() ? z[base_.n] : std::get<BigMMode>(mode_).M;
}

DeflatedNlp deflate_nlp(const Nlp& base, const DeflationPool& pool, const DeflationFunction& fn,
                        const NlpDeflationMode& mode) {
  return DeflatedNlp(base, pool, fn, mode);
}

DeflatedSystem::DeflatedSystem(NonlinearSystem base, DeflationPool pool, DeflationFunction fn,
                               SystemMode mode)
    : base_(std::move(base)), pool_(std::move(pool)), fn_(std::move(fn)), mode_(mode) {
  require(base_.dim > 0 && base_.residual && base_.jacobian, "incomplete nonlinear system");
  fn_.validate();
  require(pool_.empty() || pool_.dim() == base_.dim, "pool dimension does not match the system");

  struct State {
    NonlinearSystem base;
    DeflationPool pool;
    DeflationFunction fn;
  };
  auto st = std::make_shared<State>(State{base_, pool_, fn_});
  const int n = base_.dim;
  system_.name = base_.name + "+deflation";
  system_.dim = dim();

  if (mode_ == SystemMode::Multiplicative) {
    system_.residual = [st, n](const Vec& x) -> Vec {
      if (st->pool.empty()) return st->base.residual(x);
      const DeflationValue m = deflation_value(st->fn, st->pool, x);
      if (m.is_singular) return Vec::Constant(n, kInf);
      return m.value * st->base.residual(x);
    };
    system_.jacobian = [st](const Vec& x) -> Mat {
      if (st->pool.empty()) return st->base.jacobian(x);
      const DeflationValue m = deflation_value(st->fn, st->pool, x);
      require(!m.is_singular, "Jacobian undefined at deflation singularity");
      const Vec F = st->base.residual(x);
      return m.value * st->base.jacobian(x) + F * deflation_gradient(st->fn, st->pool, x).transpose();
    };
  } else {
    system_.residual = [st, n](const Vec& z) -> Vec {
      const Vec x = z.head(n);
      Vec r(n + 1);
      r.head(n) = st->base.residual(x);
      const DeflationValue m = deflation_value(st->fn, st->pool, x);
      r[n] = m.is_singular ? kInf : m.value - z[n];
      return r;
    };
    system_.jacobian = [st, n](const Vec& z) -> Mat {
      const Vec x = z.head(n);
      Mat J = Mat::Zero(n + 1, n + 1);
      J.topLeftCorner(n, n) = st->base.jacobian(x);
      J.block(n, 0, 1, n) = deflation_gradient(st->fn, st->pool, x).transpose();
      J(n, n) = -1.0;
      return J;
    };
  }
}

Vec DeflatedSystem::initial_point(const Vec& x0) const {
  require(x0.size() == base_.dim, "start has wrong dimension");
  if (mode_ == SystemMode::Multiplicative) return x0;
  const DeflationValue m = deflation_value(fn_, pool_, x0);
  Vec z(base_.dim + 1);
  z << x0, (m.is_singular ? 1.0 : m.value);
  return z;
}

DeflatedSystem deflate_system(const NonlinearSystem& base, const DeflationPool& pool,
                              const DeflationFunction& fn, SystemMode mode) {
  return DeflatedSystem(base, pool, fn, mode);
}

double KktReport::worst() const {
  return std::max({stationarity, eq_violation, ineq_violation, bound_violation, complementarity,
                   dual_violation});
}

namespace {

Vec or_zeros(const Vec& v, Eigen::Index n) { return v.size() == n ? v : Vec(Vec::Zero(n)); }

Vec lagrangian_gradient(const Nlp& nlp, const Vec& x, const Multipliers& m) {
  Vec g = nlp.gradient(x);
  if (nlp.num_eq) g += nlp.eq_jac(x).transpose() * m.lambda;
  if (nlp.num_ineq) g += nlp.ineq_jac(x).transpose() * m.mu;
  return g + m.z_upper - m.z_lower;
}

Multipliers normalized(const Nlp& nlp, const Multipliers& m) {
  Multipliers out;
  out.lambda = or_zeros(m.lambda, nlp.num_eq);
  out.mu = or_zeros(m.mu, nlp.num_ineq);
  out.z_upper = or_zeros(m.z_upper, nlp.n);
  out.z_lower = or_zeros(m.z_lower, nlp.n);
  return out;
}

}  // namespace

KktReport kkt_residual(const Nlp& nlp, const Vec& x, const Multipliers& mult) {
  require(x.size() == nlp.n, "point has wrong dimension");
  require(mult.lambda.size() == 0 || mult.lambda.size() == nlp.num_eq, "lambda has wrong size");
  require(mult.mu.size() == 0 || mult.mu.size() == nlp.num_ineq, "mu has wrong size");
  KktReport rep;
  rep.multipliers = normalized(nlp, mult);
  const Multipliers& m = rep.multipliers;

  rep.stationarity = inf_norm(lagrangian_gradient(nlp, x, m));
  const Vec c = nlp.eq_values(x);
  const Vec d = nlp.ineq_values(x);
  rep.eq_violation = inf_norm(c);
  rep.ineq_violation = d.size() ? std::max(0.0, d.maxCoeff()) : 0.0;
  double bound = 0.0, comp = 0.0, dual = 0.0;
  for (int i = 0; i < nlp.n; ++i) {
    bound = std::max({bound, nlp.lower[i] - x[i], x[i] - nlp.upper[i]});
    comp = std::max(comp, std::isfinite(nlp.upper[i]) ? std::abs(m.z_upper[i] * (x[i] - nlp.upper[i]))
                                                      : std::abs(m.z_upper[i]));
    comp = std::max(comp, std::isfinite(nlp.lower[i]) ? std::abs(m.z_lower[i] * (x[i] - nlp.lower[i]))
                                                      : std::abs(m.z_lower[i]));
    dual = std::max({dual, -m.z_upper[i], -m.z_lower[i]});
  }
  for (int i = 0; i < nlp.num_ineq; ++i) {
    comp = std::max(comp, std::isfinite(d[i]) ? std::abs(m.mu[i] * d[i]) : kInf);
    dual = std::max(dual, -m.mu[i]);
  }
  rep.bound_violation = std::max(0.0, bound);
  rep.complementarity = comp;
  rep.dual_violation = std::max(0.0, dual);
  return rep;
}

MultiplierEstimate estimate_multipliers(const Nlp& nlp, const Vec& x, double act_tol) {
  require(x.size() == nlp.n, "point has wrong dimension");
  enum Kind { Eq, Ineq, Upper, Lower };
  struct Column {
    Kind kind;
    int index;
  };
  std::vector<Column> cols;
  const Vec d = nlp.ineq_values(x);
  for (int i = 0; i < nlp.num_eq; ++i) cols.push_back({Eq, i});
  for (int i = 0; i < nlp.num_ineq; ++i) {
    if (d[i] >= -act_tol) cols.push_back({Ineq, i});
  }
  for (int j = 0; j < nlp.n; ++j) {
    if (nlp.upper[j] - x[j] <= act_tol) cols.push_back({Upper, j});
    else if (x[j] - nlp.lower[j] <= act_tol) cols.push_back({Lower, j});
  }

  const Vec g = nlp.gradient(x);
  const Mat Jc = nlp.eq_jac(x);
  const Mat Jd = nlp.ineq_jac(x);
  auto column = [&](const Column& c) -> Vec {
    switch (c.kind) {
      case Eq: return Jc.row(c.index).transpose();
      case Ineq: return Jd.row(c.index).transpose();
      case Upper: return Vec::Unit(nlp.n, c.index);
      case Lower: return -Vec::Unit(nlp.n, c.index);
    }
    return Vec();
  };

  MultiplierEstimate est;
  est.multipliers.lambda = Vec::Zero(nlp.num_eq);
  est.multipliers.mu = Vec::Zero(nlp.num_ineq);
  est.multipliers.z_upper = Vec::Zero(nlp.n);
  est.multipliers.z_lower = Vec::Zero(nlp.n);

  if (!cols.empty()) {
    Mat A(nlp.n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) A.col(static_cast<Eigen::Index>(k)) = column(cols[k]);
    Eigen::ColPivHouseholderQR<Mat> qr(A);
    qr.setThreshold(1e-10);
    est.irregular = qr.rank() < A.cols();
  }

  // drop the most negative sign-constrained multiplier and refit until none remain
  std::vector<Column> active = cols;
  Vec w;
  while (!active.empty()) {
    Mat A(nlp.n, static_cast<Eigen::Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k) A.col(static_cast<Eigen::Index>(k)) = column(active[k]);
    w = Eigen::CompleteOrthogonalDecomposition<Mat>(A).solve(-g);
    int worst = -1;
    double most_negative = 0.0;
    for (std::size_t k = 0; k < active.size(); ++k) {
      if (active[k].kind != Eq && w[static_cast<Eigen::Index>(k)] < most_negative) {
        most_negative = w[static_cast<Eigen::Index>(k)];
        worst = static_cast<int>(k);
      }
    }
    if (worst < 0) break;
    active.erase(active.begin() + worst);
  }
  for (std::size_t k = 0; k < active.size(); ++k) {
    const double v = w[static_cast<Eigen::Index>(k)];
    switch (active[k].kind) {
      case Eq: est.multipliers.lambda[active[k].index] = v; break;
      case Ineq: est.multipliers.mu[active[k].index] = v; break;
      case Upper: est.multipliers.z_upper[active[k].index] = v; break;
      case Lower: est.multipliers.z_lower[active[k].index] = v; break;
    }
  }
  est.fit_residual = inf_norm(lagrangian_gradient(nlp, x, est.multipliers));
  return est;
}

std::optional<double> reduced_hessian_min_eigenvalue(const Nlp& nlp, const Vec& x,
                                                     const Multipliers& mult, double act_tol) {
  if (nlp.n > 10) return std::nullopt;
  const Multipliers m = normalized(nlp, mult);
  const int n = nlp.n;
  Mat H(n, n);
  if (nlp.lagrangian_hessian && nlp.num_ineq == 0) {
    H = nlp.lagrangian_hessian(x, m.lambda);
  } else {
    const double h = 1e-6;
    for (int j = 0; j < n; ++j) {
      Vec xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      H.col(j) = (lagrangian_gradient(nlp, xp, m) - lagrangian_gradient(nlp, xm, m)) / (2.0 * h);
    }
    H = 0.5 * (H + H.transpose()).eval();
  }

  std::vector<Vec> rows;
  const Mat Jc = nlp.eq_jac(x);
  for (int i = 0; i < nlp.num_eq; ++i) rows.push_back(Jc.row(i).transpose());
  const Vec d = nlp.ineq_values(x);
  const Mat Jd = nlp.ineq_jac(x);
  for (int i = 0; i < nlp.num_ineq; ++i) {
    if (d[i] >= -act_tol) rows.push_back(Jd.row(i).transpose());
  }
  for (int j = 0; j < n; ++j) {
    if (nlp.upper[j] - x[j] <= act_tol || x[j] - nlp.lower[j] <= act_tol) rows.push_back(Vec::Unit(n, j));
  }
  Mat Z;
  if (rows.empty()) {
    Z = Mat::Identity(n, n);
  } else {
    Mat C(static_cast<Eigen::Index>(rows.size()), n);
    for (std::size_t i = 0; i < rows.size(); ++i) C.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    Eigen::FullPivLU<Mat> lu(C);
    lu.setThreshold(1e-10);
    Z = lu.kernel();
    if (lu.rank() == n) return std::nullopt;
    Eigen::HouseholderQR<Mat> qr(Z);
    Z = qr.householderQ() * Mat::Identity(n, Z.cols());
  }
  const Mat R = Z.transpose() * H * Z;
  Eigen::SelfAdjointEigenSolver<Mat> eig(R, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

KktReport kkt_at(const Nlp& nlp, const Vec& x, double act_tol) {
  const MultiplierEstimate est = estimate_multipliers(nlp, x, act_tol);
  KktReport rep = kkt_residual(nlp, x, est.multipliers);
  rep.fit_residual = est.fit_residual;
  rep.irregular = est.irregular;
  rep.reduced_hessian_min_eig = reduced_hessian_min_eigenvalue(nlp, x, est.multipliers, act_tol);
  return rep;
}

double dedup_tolerance(double radius, int n) {
  return std::max(radius, 1e-3 * std::sqrt(static_cast<double>(n)));
}

Lemma1Verdict verify_lemma1(const DeflatedNlp& deflated, const Vec& z, double tol, double y_threshold) {
  require(z.size() == deflated.dim(), "point has wrong dimension for the deflated problem");
  Lemma1Verdict v;
  const Vec x = deflated.x_part(z);
  v.y = deflated.y_part(z);
  if (deflated.is_slack()) {
    const auto& s = std::get<SlackMode>(deflated.mode());
    const bool at_upper = std::isfinite(s.y_upper) && s.y_upper - v.y <= kActiveTol;
    v.finite_y = std::isfinite(v.y) && std::abs(v.y) < y_threshold && !at_upper;
    if (at_upper) v.notes.push_back("y sits at its upper bound");
  } else {
    v.finite_y = true;
  }

  if (deflation_value(deflated.fn(), deflated.pool(), x).is_singular) {
    v.eta = kInf;
    v.notes.push_back("point lies inside a deflation singularity");
  } else {
    const KktReport full = kkt_at(deflated.as_nlp(), z);
    v.eta = full.multipliers.mu[deflated.deflation_row()];
  }
  v.eta_zero = std::abs(v.eta) <= tol;

  v.base_kkt = kkt_at(deflated.base(), x);
  v.original_kkt = v.base_kkt.is_kkt(tol);
  if (v.base_kkt.irregular) v.notes.push_back("irregular point: active gradients are rank deficient");

  const DeflationFunction& fn = deflated.fn();
  v.min_distance = min_pool_distance(fn.measure, deflated.pool(), x);
  double euclid = kInf;
  for (const Vec& xk : deflated.pool()) euclid = std::min(euclid, (x - xk).norm());
  v.distinct = v.min_distance > fn.radius &&
               euclid > dedup_tolerance(0.0, deflated.base().n);

  v.pass = v.finite_y && v.eta_zero && v.original_kkt && v.distinct;
  if (v.finite_y && !v.pass) v.notes.push_back("finite y alone is weak evidence of a new solution");
  return v;
}

}  // namespace deflation
