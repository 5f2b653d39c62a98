#include "deflation/kernels.hpp"

#include <omp.h>

namespace deflation::kernels {

namespace {

Eigen::Matrix4d scaled_element(const TrussModel& model, const Vec& x, int e) {
  return std::pow(x[e], model.simp_penalty) * model.element_stiffness(e);
}

std::vector<int> free_index_map(const TrussModel& model) {
  std::vector<int> map(model.num_dofs(), -1);
  const auto& free = model.free_dofs();
  for (std::size_t i = 0; i < free.size(); ++i) map[free[i]] = static_cast<int>(i);
  return map;
}

void scatter(const TrussModel& model, const std::vector<int>& map, int e,
             const Eigen::Matrix4d& ke, Mat& k) {
  const auto dofs = model.element_dofs(e);
  for (int r = 0; r < 4; ++r) {
    const int gr = map[dofs[r]];
    if (gr < 0) continue;
    for (int c = 0; c < 4; ++c) {
      const int gc = map[dofs[c]];
      if (gc >= 0) k(gr, gc) += ke(r, c);
    }
  }
}

double element_energy(const TrussModel& model, const Vec& u, int e) {
  const auto dofs = model.element_dofs(e);
  Eigen::Vector4d ue(u[dofs[0]], u[dofs[1]], u[dofs[2]], u[dofs[3]]);
  return ue.dot(model.element_stiffness(e) * ue);
}

}  // namespace

void mixture_log_density_batch(const MixtureTarget& target, std::span<const double> z,
                               std::span<double> logp, std::span<double> score) {
  require(logp.size() == z.size() && score.size() == z.size(), "batch size mismatch");
  const auto n = static_cast<std::ptrdiff_t>(z.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    target.log_density_and_score(z[i], logp[i], score[i]);
  }
}

Mat assemble_stiffness(const TrussModel& model, const Vec& x) {
  const int n_el = model.num_elements();
  std::vector<Eigen::Matrix4d, Eigen::aligned_allocator<Eigen::Matrix4d>> local(n_el);
#pragma omp parallel for schedule(static)
  for (int e = 0; e < n_el; ++e) local[e] = scaled_element(model, x, e);
  const auto map = free_index_map(model);
  const auto n_free = static_cast<Eigen::Index>(model.free_dofs().size());
  Mat k = Mat::Zero(n_free, n_free);
  for (int e = 0; e < n_el; ++e) scatter(model, map, e, local[e], k);
  return k;
}

Vec member_strain_energy(const TrussModel& model, const Vec& u) {
  const int n_el = model.num_elements();
  Vec out(n_el);
#pragma omp parallel for schedule(static)
  for (int e = 0; e < n_el; ++e) out[e] = element_energy(model, u, e);
  return out;
}

std::vector<DeflationValue> deflation_value_batch(const DeflationFunction& fn,
                                                  const DeflationPool& pool,
                                                  const std::vector<Vec>& points) {
  std::vector<DeflationValue> out(points.size());
  const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = deflation_value(fn, pool, points[i]);
  return out;
}

namespace serial {

void mixture_log_density_batch(const MixtureTarget& target, std::span<const double> z,
                               std::span<double> logp, std::span<double> score) {
  require(logp.size() == z.size() && score.size() == z.size(), "batch size mismatch");
  for (std::size_t i = 0; i < z.size(); ++i) target.log_density_and_score(z[i], logp[i], score[i]);
}

Mat assemble_stiffness(const TrussModel& model, const Vec& x) {
  const auto map = free_index_map(model);
  const auto n_free = static_cast<Eigen::Index>(model.free_dofs().size());
  Mat k = Mat::Zero(n_free, n_free);
  for (int e = 0; e < model.num_elements(); ++e) scatter(model, map, e, scaled_element(model, x, e), k);
  return k;
}

Vec member_strain_energy(const TrussModel& model, const Vec& u) {
  Vec out(model.num_elements());
  for (int e = 0; e < model.num_elements(); ++e) out[e] = element_energy(model, u, e);
  return out;
}

std::vector<DeflationValue> deflation_value_batch(const DeflationFunction& fn,
                                                  const DeflationPool& pool,
                                                  const std::vector<Vec>& points) {
  std::vector<DeflationValue> out;
  out.reserve(points.size());
  for (const Vec& p : points) out.push_back(deflation_value(fn, pool, p));
  return out;
}

}  // namespace serial

int max_threads() { return omp_get_max_threads(); }

}  // namespace deflation::kernels
