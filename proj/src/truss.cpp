#include "deflation/truss.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

#include "deflation/kernels.hpp"

namespace deflation {

TrussModel::TrussModel(std::vector<std::array<double, 2>> nodes,
                       std::vector<std::array<int, 2>> members, Vec load,
                       std::vector<int> fixed_dofs, double youngs_modulus, double volume_fraction)
    : nodes_(std::move(nodes)),
      load_(std::move(load)),
      fixed_dofs_(std::move(fixed_dofs)),
      youngs_modulus_(youngs_modulus),
      volume_fraction_(volume_fraction) {
  const int n_nodes = static_cast<int>(nodes_.size());
  require(load_.size() == 2 * n_nodes, "load vector must have two entries per node");
  require(!fixed_dofs_.empty(), "structure must be supported (no fixed DOFs)");
  require(youngs_modulus_ > 0.0, "Young's modulus must be positive");
  require(volume_fraction_ > 0.0 && volume_fraction_ < 1.0, "volume fraction must lie in (0, 1)");
  std::set<std::pair<int, int>> seen;
  for (const auto& [a, b] : members) {
    require(a >= 0 && b >= 0 && a < n_nodes && b < n_nodes && a != b, "invalid member nodes");
    require(seen.insert({std::min(a, b), std::max(a, b)}).second, "duplicate truss member");
    const double dx = nodes_[b][0] - nodes_[a][0];
    const double dy = nodes_[b][1] - nodes_[a][1];
    const double len = std::hypot(dx, dy);
    require(len > 0.0, "zero-length member");
    elements_.push_back({a, b, len});
  }
  std::sort(fixed_dofs_.begin(), fixed_dofs_.end());
  fixed_dofs_.erase(std::unique(fixed_dofs_.begin(), fixed_dofs_.end()), fixed_dofs_.end());
  for (int d : fixed_dofs_) require(d >= 0 && d < 2 * n_nodes, "fixed DOF out of range");
  for (int d = 0; d < 2 * n_nodes; ++d) {
    if (!std::binary_search(fixed_dofs_.begin(), fixed_dofs_.end(), d)) free_dofs_.push_back(d);
  }
}

Eigen::Matrix4d TrussModel::element_stiffness(int e) const {
  const auto& el = elements_[e];
  const double c = (nodes_[el.b][0] - nodes_[el.a][0]) / el.length;
  const double s = (nodes_[el.b][1] - nodes_[el.a][1]) / el.length;
  Eigen::Vector4d t(-c, -s, c, s);
  return (youngs_modulus_ / el.length) * (t * t.transpose());
}

std::array<int, 4> TrussModel::element_dofs(int e) const {
  const auto& el = elements_[e];
  return {2 * el.a, 2 * el.a + 1, 2 * el.b, 2 * el.b + 1};
}

Mat TrussModel::stiffness(const Vec& x) const {
  require(x.size() == num_elements(), "design vector length must equal member count");
  return kernels::assemble_stiffness(*this, x);
}

Vec TrussModel::displacement(const Vec& x) const {
  const Mat k = stiffness(x);
  Vec f(free_dofs_.size());
  for (std::size_t i = 0; i < free_dofs_.size(); ++i) f[i] = load_[free_dofs_[i]];
  Eigen::LLT<Mat> llt(k);
  if (llt.info() != Eigen::Success) throw Error("singular stiffness matrix (unsupported structure)");
  const Vec uf = llt.solve(f);
  Vec u = Vec::Zero(num_dofs());
  for (std::size_t i = 0; i < free_dofs_.size(); ++i) u[free_dofs_[i]] = uf[i];
  return u;
}

double TrussModel::compliance(const Vec& x) const { return load_.dot(displacement(x)); }

Vec TrussModel::compliance_gradient(const Vec& x) const {
  const Vec u = displacement(x);
  const Vec energy = kernels::member_strain_energy(*this, u);
  Vec g(num_elements());
  for (int e = 0; e < num_elements(); ++e) {
    g[e] = -simp_penalty * std::pow(x[e], simp_penalty - 1.0) * energy[e];
  }
  return g;
}

double TrussModel::volume_constraint(const Vec& x) const {
  return x.mean() - volume_fraction_;
}

TrussModel make_truss_model(int nx, int ny, double volume_fraction) {
  require(nx >= 2 && ny >= 2, "truss grid needs at least 2x2 nodes");
  std::vector<std::array<double, 2>> nodes;
  auto id = [nx](int i, int j) { return j * nx + i; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) nodes.push_back({double(i), double(j)});
  }
  std::vector<std::array<int, 2>> members;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) members.push_back({id(i, j), id(i + 1, j)});
  }
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i < nx; ++i) members.push_back({id(i, j), id(i, j + 1)});
  }
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      members.push_back({id(i, j), id(i + 1, j + 1)});
      members.push_back({id(i + 1, j), id(i, j + 1)});
    }
  }
  Vec load = Vec::Zero(2 * nx * ny);
  load[2 * id(nx - 1, 0) + 1] = -1.0;
  std::vector<int> fixed;
  for (int j = 0; j < ny; ++j) {
    fixed.push_back(2 * id(0, j));
    fixed.push_back(2 * id(0, j) + 1);
  }
  return TrussModel(std::move(nodes), std::move(members), std::move(load), std::move(fixed), 1.0,
                    volume_fraction);
}

Nlp truss_nlp(const TrussModel& model) {
  auto m = std::make_shared<const TrussModel>(model);
  const int n = model.num_elements();
  Nlp nlp;
  nlp.name = "truss";
  nlp.n = n;
  nlp.objective = [m](const Vec& x) { return m->compliance(x); };
  nlp.gradient = [m](const Vec& x) { return m->compliance_gradient(x); };
  nlp.num_ineq = 1;
  nlp.ineq = [m](const Vec& x) { return Vec::Constant(1, m->volume_constraint(x)); };
  nlp.ineq_jacobian = [n](const Vec&) { return Mat::Constant(1, n, 1.0 / n); };
  nlp.lower = Vec::Constant(n, model.x_min);
  nlp.upper = Vec::Ones(n);
  return nlp;
}

TrussProblem make_truss(int nx, int ny, double volume_fraction) {
  TrussModel model = make_truss_model(nx, ny, volume_fraction);
  Nlp nlp = truss_nlp(model);
  return {std::move(model), std::move(nlp)};
}

void write_truss(std::ostream& os, const TrussModel& model, const Vec& x) {
  require(x.size() == model.num_elements(), "design vector length must equal member count");
  os << std::setprecision(17);
  os << "TRUSS 1\n";
  os << "# NODES rows: id x y | ELEMENTS rows: id node_a node_b length density\n";
  os << "# LOADS rows: dof value | FIXED rows: dof\n";
  os << "youngs_modulus " << model.youngs_modulus() << "\n";
  os << "volume_fraction " << model.volume_fraction() << "\n";
  os << "simp_penalty " << model.simp_penalty << "\n";
  os << "x_min " << model.x_min << "\n";
  os << "NODES " << model.nodes().size() << "\n";
  for (std::size_t i = 0; i < model.nodes().size(); ++i) {
    os << i << " " << model.nodes()[i][0] << " " << model.nodes()[i][1] << "\n";
  }
  os << "ELEMENTS " << model.num_elements() << "\n";
  for (int e = 0; e < model.num_elements(); ++e) {
    const auto& el = model.elements()[e];
    os << e << " " << el.a << " " << el.b << " " << el.length << " " << x[e] << "\n";
  }
  std::vector<int> loaded;
  for (int d = 0; d < model.num_dofs(); ++d) {
    if (model.load()[d] != 0.0) loaded.push_back(d);
  }
  os << "LOADS " << loaded.size() << "\n";
  for (int d : loaded) os << d << " " << model.load()[d] << "\n";
  os << "FIXED " << model.fixed_dofs().size() << "\n";
  for (int d : model.fixed_dofs()) os << d << "\n";
  os << "END\n";
}

namespace {

std::string next_data_line(std::istream& is) {
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line[0] != '#') return line;
  }
  throw Error("truss file ended unexpectedly");
}

template <class T>
T keyed(std::istream& is, const std::string& key) {
  std::istringstream ss(next_data_line(is));
  std::string k;
  T v{};
  ss >> k >> v;
  if (k != key || ss.fail()) throw Error("truss file: expected '" + key + "'");
  return v;
}

}  // namespace

TrussDesign read_truss(std::istream& is) {
  {
    std::istringstream ss(next_data_line(is));
    std::string magic;
    int version = 0;
    ss >> magic >> version;
    if (magic != "TRUSS" || version != 1) throw Error("not a version-1 truss file");
  }
  const double e_mod = keyed<double>(is, "youngs_modulus");
  const double vf = keyed<double>(is, "volume_fraction");
  const double simp = keyed<double>(is, "simp_penalty");
  const double xmin = keyed<double>(is, "x_min");
  const auto n_nodes = keyed<std::size_t>(is, "NODES");
  std::vector<std::array<double, 2>> nodes(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    std::istringstream ss(next_data_line(is));
    std::size_t id;
    ss >> id >> nodes[i][0] >> nodes[i][1];
    if (ss.fail() || id != i) throw Error("truss file: bad node row");
  }
  const auto n_el = keyed<std::size_t>(is, "ELEMENTS");
  std::vector<std::array<int, 2>> members(n_el);
  Vec x(static_cast<Eigen::Index>(n_el));
  for (std::size_t e = 0; e < n_el; ++e) {
    std::istringstream ss(next_data_line(is));
    std::size_t id;
    double len;
    ss >> id >> members[e][0] >> members[e][1] >> len >> x[e];
    if (ss.fail() || id != e) throw Error("truss file: bad element row");
  }
  Vec load = Vec::Zero(2 * static_cast<Eigen::Index>(n_nodes));
  const auto n_loads = keyed<std::size_t>(is, "LOADS");
  for (std::size_t i = 0; i < n_loads; ++i) {
    std::istringstream ss(next_data_line(is));
    int dof;
    double v;
    ss >> dof >> v;
    if (ss.fail() || dof < 0 || dof >= load.size()) throw Error("truss file: bad load row");
    load[dof] = v;
  }
  const auto n_fixed = keyed<std::size_t>(is, "FIXED");
  std::vector<int> fixed(n_fixed);
  for (std::size_t i = 0; i < n_fixed; ++i) {
    std::istringstream ss(next_data_line(is));
    ss >> fixed[i];
    if (ss.fail()) throw Error("truss file: bad fixed row");
  }
  if (next_data_line(is) != "END") throw Error("truss file: missing END");
  TrussModel model(std::move(nodes), std::move(members), std::move(load), std::move(fixed), e_mod,
                   vf);
  model.simp_penalty = simp;
  model.x_min = xmin;
  return {std::move(model), std::move(x)};
}

}  // namespace deflation
