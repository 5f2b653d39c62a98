#include "deflation/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "deflation/problems.hpp"
#include "solver_internal.hpp"

namespace deflation {

bool ExperimentOutcome::all_passed() const {
  for (const auto& p : properties) {
    if (!p.passed && !p.warn_only) return false;
  }
  return true;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

DistanceMeasure measure_from_name(const std::string& name, double q) {
  if (name == "power_norm") return PowerNorm{q};
  if (name == "radius_offset_norm") return RadiusOffsetNorm{};
  if (name == "gaussian_kl") return GaussianKl{};
  throw Error("unknown distance measure '" + name + "'");
}

}  // namespace

void apply_run_config(const ConfigFile& f, RunConfig& c) {
  c.n_solutions = f.get_int("num_solutions", c.n_solutions);
  c.max_outer = f.get_int("max_outer", c.max_outer);
  c.x0 = f.get_vec("x0", c.x0);
  c.deflation.power = f.get_double("p", c.deflation.power);
  c.deflation.shift = f.get_double("sigma", c.deflation.shift);
  c.deflation.radius = f.get_double("radius", c.deflation.radius);
  if (f.has("measure")) c.deflation.measure = measure_from_name(f.get_string("measure", ""), f.get_double("q", 2.0));
  if (f.has("aggregation")) {
    const std::string a = f.get_string("aggregation", "sum");
    require(a == "sum" || a == "product", "aggregation must be sum or product");
    c.aggregation = a == "sum" ? Aggregation::Sum : Aggregation::Product;
  }
  if (f.has("mode")) {
    const std::string m = f.get_string("mode", "slack");
    if (m == "slack") c.mode = SlackMode{};
    else if (m == "bigm") c.mode = BigMMode{};
    else throw Error("mode must be slack or bigm");
  }
  if (auto* s = std::get_if<SlackMode>(&c.mode)) {
    s->y_lower = f.get_double("y_lower", s->y_lower);
    s->y_upper = f.get_double("y_upper", s->y_upper);
  } else {
    auto& b = std::get<BigMMode>(c.mode);
    b.M = f.get_double("big_m", b.M);
  }
  if (f.has("system_mode")) {
    const std::string m = f.get_string("system_mode", "");
    if (m == "multiplicative") c.system_mode = SystemMode::Multiplicative;
    else if (m == "constraint") c.system_mode = SystemMode::Constraint;
    else throw Error("system_mode must be multiplicative or constraint");
  }
  if (f.has("solver")) c.solver = backend_from_string(f.get_string("solver", ""));
  c.intermediate_every = f.get_int("intermediate_every", c.intermediate_every);
  c.dedup_tol = f.get_double("dedup_tol", c.dedup_tol);
  c.kkt_tol = f.get_double("kkt_tol", c.kkt_tol);
  c.y_threshold = f.get_double("y_threshold", c.y_threshold);
  c.failure_budget = f.get_int("failure_budget", c.failure_budget);
  c.require_kkt = f.get_bool("require_kkt", c.require_kkt);
  c.stochastic_grad_tol = f.get_double("stochastic_grad_tol", c.stochastic_grad_tol);
  c.stochastic_check_samples = f.get_int("stochastic_check_samples", c.stochastic_check_samples);
  c.seed = static_cast<std::uint64_t>(f.get_int("seed", static_cast<int>(c.seed)));

  SolverOptions& o = c.options;
  o.max_iter = f.get_int("max_iter", o.max_iter);
  o.grad_tol = f.get_double("grad_tol", o.grad_tol);
  o.constraint_tol = f.get_double("constraint_tol", o.constraint_tol);
  o.armijo_c1 = f.get_double("armijo_c1", o.armijo_c1);
  o.backtrack = f.get_double("backtrack", o.backtrack);
  o.max_backtracks = f.get_int("max_backtracks", o.max_backtracks);
  o.lbfgs_memory = f.get_int("lbfgs_memory", o.lbfgs_memory);
  o.barrier_r0 = f.get_double("barrier_r0", o.barrier_r0);
  o.barrier_decay = f.get_double("barrier_decay", o.barrier_decay);
  o.barrier_min = f.get_double("barrier_min", o.barrier_min);
  o.barrier_inner_iter = f.get_int("barrier_inner_iter", o.barrier_inner_iter);
  o.al_rho0 = f.get_double("al_rho0", o.al_rho0);
  o.al_growth = f.get_double("al_growth", o.al_growth);
  o.al_rho_max = f.get_double("al_rho_max", o.al_rho_max);
  o.al_inner_iter = f.get_int("al_inner_iter", o.al_inner_iter);
  o.mma_move = f.get_double("mma_move", o.mma_move);
  o.mma_asym_init = f.get_double("mma_asym_init", o.mma_asym_init);
  o.mma_asym_dec = f.get_double("mma_asym_dec", o.mma_asym_dec);
  o.mma_asym_inc = f.get_double("mma_asym_inc", o.mma_asym_inc);
  o.mma_xtol = f.get_double("mma_xtol", o.mma_xtol);
  o.adagrad_eta0 = f.get_double("adagrad_eta0", o.adagrad_eta0);
  o.adagrad_decay = f.get_double("adagrad_decay", o.adagrad_decay);
  o.adagrad_eps = f.get_double("adagrad_eps", o.adagrad_eps);
  o.adagrad_rho = f.get_double("adagrad_rho", o.adagrad_rho);
  o.adagrad_iter = f.get_int("adagrad_iter", o.adagrad_iter);
  o.adagrad_samples = f.get_int("adagrad_samples", o.adagrad_samples);
  o.seed = c.seed;
  o.validate();
}

ConfigFile load_experiment_config(const std::string& name, const std::string& dir) {
  const std::filesystem::path p = std::filesystem::path(dir) / (name + ".cfg");
  if (!std::filesystem::exists(p)) return ConfigFile{};
  return ConfigFile::load(p.string());
}

HimmelblauSpec himmelblau_spec(const ConfigFile& file) {
  HimmelblauSpec s;
  RunConfig& c = s.config;
  c.n_solutions = 4;
  c.x0 = Vec::Zero(2);
  c.deflation = DeflationFunction{PowerNorm{2.0}, 4.0, 1.0, 3.0};
  c.aggregation = Aggregation::Product;
  c.solver = Backend::AugmentedLagrangian;
  c.mode = SlackMode{0.0, 1e4};
  s.big_m = file.get_double("big_m", s.big_m);
  apply_run_config(file, c);
  return s;
}

ExperimentOutcome run_himmelblau(const RunConfig& config) {
  detail::Stopwatch clock;
  ExperimentOutcome out;
  const bool slack = std::holds_alternative<SlackMode>(config.mode);
  out.name = std::string("himmelblau-") + (slack ? "slack" : "bigm") + "-" + to_string(config.solver);
  out.config = config;
  out.descriptor = {{"problem", "himmelblau"}, {"dim", "2"}, {"box", "[-6,6]^2"}};
  const Nlp problem = make_himmelblau();
  out.set = find_multiple_solutions(problem, config);
  out.wall_time = clock.seconds();

  const auto acc = out.set.accepted();
  out.properties.push_back({"accepted solutions", static_cast<int>(acc.size()) == config.n_solutions,
                            std::to_string(acc.size()) + " of " + std::to_string(config.n_solutions)});
  bool kkt_ok = true;
  double worst = 0.0;
  for (const auto& r : acc) {
    kkt_ok = kkt_ok && r.kkt.stationarity <= config.kkt_tol && std::abs(r.eta) <= config.kkt_tol;
    worst = std::max({worst, r.kkt.stationarity, std::abs(r.eta)});
  }
  out.properties.push_back({"base KKT and eta", kkt_ok, "worst " + fmt(worst)});
  return out;
}

std::vector<ExperimentOutcome> run_himmelblau_experiment(const HimmelblauSpec& spec) {
  std::vector<ExperimentOutcome> outs;
  const NlpDeflationMode slack = std::holds_alternative<SlackMode>(spec.config.mode) ? spec.config.mode
                                                                                      : NlpDeflationMode{SlackMode{}};
  for (const NlpDeflationMode& mode : {slack, NlpDeflationMode{BigMMode{spec.big_m}}}) {
    for (Backend b : {Backend::AugmentedLagrangian, Backend::Barrier}) {
      RunConfig c = spec.config;
      c.mode = mode;
      c.solver = b;
      outs.push_back(run_himmelblau(c));
    }
  }
  return outs;
}

ViSpec vi_spec(const ConfigFile& file) {
  ViSpec s;
  s.components = file.get_int("components", s.components);
  s.lo = file.get_double("component_lo", s.lo);
  s.hi = file.get_double("component_hi", s.hi);
  s.component_sigma = file.get_double("component_sigma", s.component_sigma);
  s.samples = file.get_int("samples", s.samples);
  s.target_seed = static_cast<std::uint64_t>(file.get_int("target_seed", 0));
  RunConfig& c = s.config;
  c.n_solutions = 10;
  c.max_outer = 10;
  c.x0 = Vec(2);
  c.x0 << 0.0, 5.0;
  c.deflation = DeflationFunction{GaussianKl{}, 3.0, 0.0, 1.0};
  c.solver = Backend::Barrier;
  c.mode = SlackMode{0.0, 100.0};
  c.failure_budget = 10;
  apply_run_config(file, c);
  return s;
}

ExperimentOutcome run_vi_experiment(const ViSpec& spec) {
  detail::Stopwatch clock;
  ExperimentOutcome out;
  out.name = "vi";
  out.config = spec.config;
  const MixtureTarget target = equally_spaced_mixture(spec.components, spec.lo, spec.hi, spec.component_sigma);
  out.descriptor = {{"problem", "mixture-vi"},
                    {"dim", "2"},
                    {"components", std::to_string(spec.components)},
                    {"component_lo", fmt(spec.lo)},
                    {"component_hi", fmt(spec.hi)},
                    {"component_sigma", fmt(spec.component_sigma)},
                    {"samples", std::to_string(spec.samples)}};
  const StochasticObjective objective = make_mixture_vi(target, spec.samples, spec.target_seed);
  out.set = find_multiple_solutions(objective, spec.config);
  out.wall_time = clock.seconds();

  const auto acc = out.set.accepted();
  double min_kl = kInf;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    for (std::size_t j = 0; j < acc.size(); ++j) {
      if (i != j) min_kl = std::min(min_kl, distance(GaussianKl{}, acc[i].x, acc[j].x));
    }
  }
  out.properties.push_back({"pairwise KL >= radius", min_kl >= spec.config.deflation.radius,
                            "min " + fmt(min_kl)});
  double worst_gap = 0.0;
  bool mode_seeking = true;
  for (const auto& r : acc) {
    double gap = kInf;
    for (const auto& c : target.components()) gap = std::min(gap, std::abs(r.x[0] - c.mu));
    worst_gap = std::max(worst_gap, gap);
    const double here = target.log_density(r.x[0]);
    mode_seeking = mode_seeking && here >= target.log_density(r.x[0] - 1.0) &&
                   here >= target.log_density(r.x[0] + 1.0);
  }
  out.properties.push_back({"means near a component", worst_gap <= 0.5, "worst " + fmt(worst_gap)});
  out.properties.push_back({"mode seeking", mode_seeking, ""});
  return out;
}

TrussSpec truss_spec(const ConfigFile& file) {
  TrussSpec s;
  s.nx = file.get_int("nx", s.nx);
  s.ny = file.get_int("ny", s.ny);
  s.volume_fraction = file.get_double("volume_fraction", s.volume_fraction);
  s.reference_radius = file.get_double("reference_radius", s.reference_radius);
  s.reference_dim = file.get_int("reference_dim", s.reference_dim);
  RunConfig& c = s.config;
  c.n_solutions = 6;
  c.max_outer = 6;
  c.deflation = DeflationFunction{PowerNorm{2.0}, 4.0, 0.0, 0.0};
  c.solver = Backend::Mma;
  c.mode = SlackMode{0.0, 100.0};
  c.require_kkt = false;
  c.failure_budget = 6;
  apply_run_config(file, c);
  return s;
}

double rescaled_truss_radius(const TrussSpec& spec, int n) {
  return spec.reference_radius * std::sqrt(static_cast<double>(n) / spec.reference_dim);
}

TrussOutcome run_truss_experiment(const TrussSpec& spec) {
  detail::Stopwatch clock;
  TrussProblem tp = make_truss(spec.nx, spec.ny, spec.volume_fraction);
  TrussOutcome res{ExperimentOutcome{}, tp.model, 0.0, 0.0};
  ExperimentOutcome& out = res.outcome;
  const int n = tp.nlp.n;
  RunConfig cfg = spec.config;
  cfg.deflation.radius = rescaled_truss_radius(spec, n);
  cfg.x0 = Vec::Constant(n, spec.volume_fraction);
  out.name = "truss";
  out.config = cfg;
  out.descriptor = {{"problem", "truss"},
                    {"dim", std::to_string(n)},
                    {"nx", std::to_string(spec.nx)},
                    {"ny", std::to_string(spec.ny)},
                    {"volume_fraction", fmt(spec.volume_fraction)},
                    {"reference_radius", fmt(spec.reference_radius)},
                    {"reference_dim", std::to_string(spec.reference_dim)},
                    {"radius", fmt(cfg.deflation.radius)}};
  out.set = find_multiple_solutions(tp.nlp, cfg);
  out.wall_time = clock.seconds();

  const auto acc = out.set.accepted();
  double worst_volume = 0.0;
  for (const auto& r : acc) worst_volume = std::max(worst_volume, tp.model.volume_constraint(r.x));
  out.properties.push_back({"volume feasible", worst_volume <= 1e-6, "worst " + fmt(worst_volume)});
  double min_dist = kInf;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    for (std::size_t j = i + 1; j < acc.size(); ++j) min_dist = std::min(min_dist, (acc[i].x - acc[j].x).norm());
  }
  out.properties.push_back({"pairwise distance > radius", min_dist > cfg.deflation.radius,
                            "min " + fmt(min_dist) + " radius " + fmt(cfg.deflation.radius)});
  if (!out.set.attempts.empty()) {
    const auto& first = out.set.attempts.front();
    res.undeflated_wall_time = first.wall_time;
    double worst_ratio = 0.0, total = 0.0;
    int count = 0;
    for (std::size_t i = 1; i < out.set.attempts.size(); ++i) {
      const auto& r = out.set.attempts[i];
      total += r.wall_time;
      ++count;
      if (r.accepted) worst_ratio = std::max(worst_ratio, r.objective / first.objective);
    }
    res.mean_deflated_wall_time = count ? total / count : 0.0;
    out.properties.push_back({"deflated compliance <= 2x undeflated", worst_ratio <= 2.0,
                              "worst ratio " + fmt(worst_ratio), true});
    out.properties.push_back({"deflated wall time <= 2x undeflated",
                              res.mean_deflated_wall_time <= 2.0 * res.undeflated_wall_time,
                              fmt(res.mean_deflated_wall_time) + " s vs " + fmt(res.undeflated_wall_time) + " s",
                              true});
  }
  return res;
}

}  // namespace deflation
