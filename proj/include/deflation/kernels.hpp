#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP version and a serial
// reference in kernels::serial with identical results; reductions are done
// serially after the parallel map so outputs do not depend on thread count.

#include <span>
#include <vector>

#include "deflation/deflation_core.hpp"
#include "deflation/problems.hpp"
#include "deflation/truss.hpp"

namespace deflation::kernels {

void mixture_log_density_batch(const MixtureTarget& target, std::span<const double> z,
                               std::span<double> logp, std::span<double> score);

// Free-DOF stiffness: element matrices in parallel, scatter in element order.
Mat assemble_stiffness(const TrussModel& model, const Vec& x);

// u_e^T k_e u_e per member (unit density).
Vec member_strain_energy(const TrussModel& model, const Vec& u);

std::vector<DeflationValue> deflation_value_batch(const DeflationFunction& fn,
                                                  const DeflationPool& pool,
                                                  const std::vector<Vec>& points);

namespace serial {

void mixture_log_density_batch(const MixtureTarget& target, std::span<const double> z,
                               std::span<double> logp, std::span<double> score);
Mat assemble_stiffness(const TrussModel& model, const Vec& x);
Vec member_strain_energy(const TrussModel& model, const Vec& u);
std::vector<DeflationValue> deflation_value_batch(const DeflationFunction& fn,
                                                  const DeflationPool& pool,
                                                  const std::vector<Vec>& points);

}  // namespace serial

int max_threads();

}  // namespace deflation::kernels
