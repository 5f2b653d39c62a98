#pragma once

#include <cstdint>
#include <functional>

#include "deflation/deflation_core.hpp"
#include "deflation/problems.hpp"

namespace deflation {

// Primal-dual point of the bound-barrier subproblem for min f s.t. c(x) = 0, l <= x <= u.
// X_l = diag(x - l), X_u = diag(u - x).
struct BarrierState {
  Vec x;
  Vec lambda;
  Vec z_l;
  Vec z_u;
  double mu = 0.1;

  void validate(const Nlp& nlp) const;
};

// W of f + c^T lambda: the problem's Hessian callback when present, else central
// differences of the Lagrangian gradient with h = 1e-6.
Mat lagrangian_hessian(const Nlp& nlp, const Vec& x, const Vec& lambda);

// F(x, lambda) = (grad f + A lambda - mu X_l^-1 1 - mu X_u^-1 1 ; c(x)), A = grad c^T (n x m).
Vec assemble_barrier_residual(const Nlp& nlp, const BarrierState& s);

// dF/d(x, lambda), the exact derivative of the residual above.
Mat barrier_residual_jacobian(const Nlp& nlp, const BarrierState& s);

// F as a square system in (x, lambda) for fixed mu; z does not enter.
NonlinearSystem barrier_residual_system(const Nlp& nlp, double mu);

struct KktMatrices {
  Mat W;
  Mat A;      // n x m
  Vec Sigma;  // diagonal of X_l^-1 Z_l + X_u^-1 Z_u
  Mat reduced;
  Vec rhs;
};

// [W + Sigma, A; A^T, 0] d = -F.
KktMatrices assemble_reduced_kkt(const Nlp& nlp, const BarrierState& s);

struct NewtonDirection {
  Vec dx;
  Vec dlambda;
  Vec dz_l;
  Vec dz_u;
};

// d_zl = -z_l + mu X_l^-1 1 - X_l^-1 Z_l d_x, and likewise for the upper bounds.
void back_substitute(const Nlp& nlp, const BarrierState& s, NewtonDirection& d);

NewtonDirection solve_reduced_kkt(const Nlp& nlp, const BarrierState& s);

// Unreduced system
//   [W, A, -I, -I; A^T, 0, 0, 0; Z_l, 0, X_l, 0; Z_u, 0, 0, X_u] d
//     = -(grad f + A lambda - z_l - z_u; c; X_l Z_l 1 - mu 1; X_u Z_u 1 - mu 1)
struct FullKktSystem {
  Mat matrix;
  Vec rhs;
};
FullKktSystem assemble_full_kkt(const Nlp& nlp, const BarrierState& s);
NewtonDirection solve_full_kkt(const Nlp& nlp, const BarrierState& s);

// m * dF/dx + F (grad m)^T; F_jacobian_x has one column per x component.
Mat assemble_deflated_jacobian(const Vec& F_value, const Mat& F_jacobian_x, double m_value,
                               const Vec& m_gradient);

// Jacobian of (x, lambda) -> m(x) F(x, lambda): the x columns are deflated as above and
// the lambda columns become m * [A; 0].
Mat deflated_barrier_jacobian(const Nlp& nlp, const BarrierState& s, const DeflationFunction& fn,
                              const DeflationPool& pool);

// max_ij |M_ij - M_ji|
double symmetry_defect(const Mat& M);

// Smooth test problem with n variables, m equality constraints, box [-5, 5]^n and an
// analytic Lagrangian Hessian:
//   f = x^T Q x / 2 + g^T x + sum_i a_i sin x_i,  c_j = b_j^T x + x^T C_j x / 2 - e_j.
Nlp make_random_equality_problem(int n, int m, std::uint64_t seed);

// Strictly interior state with random multipliers and positive z.
BarrierState random_barrier_state(const Nlp& nlp, std::uint64_t seed, double mu = 0.1);

}  // namespace deflation
