#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "deflation/problems.hpp"

namespace deflation {

struct TrussElement {
  int a = 0;
  int b = 0;
  double length = 0.0;
};

// Planar pin-jointed ground structure, two DOFs per node (x then y).
class TrussModel {
 public:
  TrussModel(std::vector<std::array<double, 2>> nodes, std::vector<std::array<int, 2>> members,
             Vec load, std::vector<int> fixed_dofs, double youngs_modulus = 1.0,
             double volume_fraction = 0.5);

  const std::vector<std::array<double, 2>>& nodes() const { return nodes_; }
  const std::vector<TrussElement>& elements() const { return elements_; }
  const Vec& load() const { return load_; }
  const std::vector<int>& fixed_dofs() const { return fixed_dofs_; }
  const std::vector<int>& free_dofs() const { return free_dofs_; }
  double youngs_modulus() const { return youngs_modulus_; }
  double volume_fraction() const { return volume_fraction_; }
  int num_dofs() const { return static_cast<int>(load_.size()); }
  int num_elements() const { return static_cast<int>(elements_.size()); }

  double simp_penalty = 3.0;
  double x_min = 1e-4;

  // 4x4 unit-density element stiffness in global coordinates.
  Eigen::Matrix4d element_stiffness(int e) const;
  std::array<int, 4> element_dofs(int e) const;

  // Free-DOF stiffness with member stiffness x_e^p * k_e.
  Mat stiffness(const Vec& x) const;
  // Full-length displacement vector (zeros on fixed DOFs); throws on singular stiffness.
  Vec displacement(const Vec& x) const;
  double compliance(const Vec& x) const;
  // dC/dx_e = -p x_e^(p-1) u_e^T k_e u_e
  Vec compliance_gradient(const Vec& x) const;
  double volume_constraint(const Vec& x) const;

 private:
  std::vector<std::array<double, 2>> nodes_;
  std::vector<TrussElement> elements_;
  Vec load_;
  std::vector<int> fixed_dofs_;
  std::vector<int> free_dofs_;
  double youngs_modulus_;
  double volume_fraction_;
};

struct TrussProblem {
  TrussModel model;
  Nlp nlp;
};

// nx x ny unit grid, horizontal/vertical/diagonal members, left edge clamped,
// unit downward load at the bottom-right node.
TrussModel make_truss_model(int nx, int ny, double volume_fraction);
TrussProblem make_truss(int nx, int ny, double volume_fraction);
Nlp truss_nlp(const TrussModel& model);

// Plain-text node/element/load format (see docs/formats.md).
void write_truss(std::ostream& os, const TrussModel& model, const Vec& x);
struct TrussDesign {
  TrussModel model;
  Vec x;
};
TrussDesign read_truss(std::istream& is);

}  // namespace deflation
