#include "deflation/result_io.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace deflation {

using nlohmann::json;

namespace {

json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double get_num(const json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw Error("bad numeric string '" + s + "' in result file");
  }
  return j.get<double>();
}

json vec(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

Vec get_vec(const json& j) {
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = get_num(j[i]);
  return v;
}

json measure_json(const DistanceMeasure& m) {
  if (const auto* p = std::get_if<PowerNorm>(&m)) return {{"type", "power_norm"}, {"q", num(p->q)}};
  if (const auto* w = std::get_if<WeightedQuadratic>(&m)) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < w->Q.rows(); ++i) rows.push_back(vec(w->Q.row(i).transpose()));
    return {{"type", "weighted_quadratic"}, {"Q", rows}};
  }
  if (std::holds_alternative<RadiusOffsetNorm>(m)) return {{"type", "radius_offset_norm"}};
  return {{"type", "gaussian_kl"}};
}

DistanceMeasure get_measure(const json& j) {
  const std::string t = j.at("type").get<std::string>();
  if (t == "power_norm") return PowerNorm{get_num(j.at("q"))};
  if (t == "radius_offset_norm") return RadiusOffsetNorm{};
  if (t == "gaussian_kl") return GaussianKl{};
  if (t == "weighted_quadratic") {
    const json& rows = j.at("Q");
    Mat Q(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) Q.row(static_cast<Eigen::Index>(i)) = get_vec(rows[i]).transpose();
    return WeightedQuadratic{Q};
  }
  throw Error("unknown measure type '" + t + "' in result file");
}

json options_json(const SolverOptions& o) {
  return {{"max_iter", o.max_iter},
          {"grad_tol", num(o.grad_tol)},
          {"constraint_tol", num(o.constraint_tol)},
          {"armijo_c1", num(o.armijo_c1)},
          {"backtrack", num(o.backtrack)},
          {"max_backtracks", o.max_backtracks},
          {"lbfgs_memory", o.lbfgs_memory},
          {"barrier_r0", num(o.barrier_r0)},
          {"barrier_decay", num(o.barrier_decay)},
          {"barrier_min", num(o.barrier_min)},
          {"barrier_inner_iter", o.barrier_inner_iter},
          {"al_rho0", num(o.al_rho0)},
          {"al_growth", num(o.al_growth)},
          {"al_rho_max", num(o.al_rho_max)},
          {"al_inner_iter", o.al_inner_iter},
          {"mma_move", num(o.mma_move)},
          {"mma_asym_init", num(o.mma_asym_init)},
          {"mma_asym_dec", num(o.mma_asym_dec)},
          {"mma_asym_inc", num(o.mma_asym_inc)},
          {"mma_xtol", num(o.mma_xtol)},
          {"adagrad_eta0", num(o.adagrad_eta0)},
          {"adagrad_decay", num(o.adagrad_decay)},
          {"adagrad_eps", num(o.adagrad_eps)},
          {"adagrad_rho", num(o.adagrad_rho)},
          {"adagrad_iter", o.adagrad_iter},
          {"adagrad_samples", o.adagrad_samples},
          {"seed", o.seed},
          {"record_trajectory", o.record_trajectory}};
}

SolverOptions get_options(const json& j) {
  SolverOptions o;
  o.max_iter = j.at("max_iter").get<int>();
  o.grad_tol = get_num(j.at("grad_tol"));
  o.constraint_tol = get_num(j.at("constraint_tol"));
  o.armijo_c1 = get_num(j.at("armijo_c1"));
  o.backtrack = get_num(j.at("backtrack"));
  o.max_backtracks = j.at("max_backtracks").get<int>();
  o.lbfgs_memory = j.at("lbfgs_memory").get<int>();
  o.barrier_r0 = get_num(j.at("barrier_r0"));
  o.barrier_decay = get_num(j.at("barrier_decay"));
  o.barrier_min = get_num(j.at("barrier_min"));
  o.barrier_inner_iter = j.at("barrier_inner_iter").get<int>();
  o.al_rho0 = get_num(j.at("al_rho0"));
  o.al_growth = get_num(j.at("al_growth"));
  o.al_rho_max = get_num(j.at("al_rho_max"));
  o.al_inner_iter = j.at("al_inner_iter").get<int>();
  o.mma_move = get_num(j.at("mma_move"));
  o.mma_asym_init = get_num(j.at("mma_asym_init"));
  o.mma_asym_dec = get_num(j.at("mma_asym_dec"));
  o.mma_asym_inc = get_num(j.at("mma_asym_inc"));
  o.mma_xtol = get_num(j.at("mma_xtol"));
  o.adagrad_eta0 = get_num(j.at("adagrad_eta0"));
  o.adagrad_decay = get_num(j.at("adagrad_decay"));
  o.adagrad_eps = get_num(j.at("adagrad_eps"));
  o.adagrad_rho = get_num(j.at("adagrad_rho"));
  o.adagrad_iter = j.at("adagrad_iter").get<int>();
  o.adagrad_samples = j.at("adagrad_samples").get<int>();
  o.seed = j.at("seed").get<std::uint64_t>();
  o.record_trajectory = j.at("record_trajectory").get<bool>();
  return o;
}

json config_json(const RunConfig& c) {
  json mode;
  if (const auto* s = std::get_if<SlackMode>(&c.mode)) {
    mode = {{"type", "slack"}, {"y_lower", num(s->y_lower)}, {"y_upper", num(s->y_upper)}};
  } else {
    mode = {{"type", "bigm"}, {"M", num(std::get<BigMMode>(c.mode).M)}};
  }
  return {{"n_solutions", c.n_solutions},
          {"max_outer", c.max_outer},
          {"x0", vec(c.x0)},
          {"deflation",
           {{"measure", measure_json(c.deflation.measure)},
            {"power", num(c.deflation.power)},
            {"shift", num(c.deflation.shift)},
            {"radius", num(c.deflation.radius)}}},
          {"aggregation", c.aggregation == Aggregation::Sum ? "sum" : "product"},
          {"mode", mode},
          {"system_mode", c.system_mode == SystemMode::Multiplicative ? "multiplicative" : "constraint"},
          {"solver", to_string(c.solver)},
          {"options", options_json(c.options)},
          {"intermediate_every", c.intermediate_every},
          {"dedup_tol", num(c.dedup_tol)},
          {"kkt_tol", num(c.kkt_tol)},
          {"y_threshold", num(c.y_threshold)},
          {"failure_budget", c.failure_budget},
          {"require_kkt", c.require_kkt},
          {"stochastic_grad_tol", num(c.stochastic_grad_tol)},
          {"stochastic_check_samples", c.stochastic_check_samples},
          {"seed", c.seed}};
}

RunConfig get_config(const json& j) {
  RunConfig c;
  c.n_solutions = j.at("n_solutions").get<int>();
  c.max_outer = j.at("max_outer").get<int>();
  c.x0 = get_vec(j.at("x0"));
  const json& d = j.at("deflation");
  c.deflation.measure = get_measure(d.at("measure"));
  c.deflation.power = get_num(d.at("power"));
  c.deflation.shift = get_num(d.at("shift"));
  c.deflation.radius = get_num(d.at("radius"));
  c.aggregation = j.at("aggregation").get<std::string>() == "sum" ? Aggregation::Sum : Aggregation::Product;
  const json& m = j.at("mode");
  if (m.at("type").get<std::string>() == "slack") {
    c.mode = SlackMode{get_num(m.at("y_lower")), get_num(m.at("y_upper"))};
  } else {
    c.mode = BigMMode{get_num(m.at("M"))};
  }
  c.system_mode = j.at("system_mode").get<std::string>() == "multiplicative" ? SystemMode::Multiplicative
                                                                             : SystemMode::Constraint;
  c.solver = backend_from_string(j.at("solver").get<std::string>());
  c.options = get_options(j.at("options"));
  c.intermediate_every = j.at("intermediate_every").get<int>();
  c.dedup_tol = get_num(j.at("dedup_tol"));
  c.kkt_tol = get_num(j.at("kkt_tol"));
  c.y_threshold = get_num(j.at("y_threshold"));
  c.failure_budget = j.at("failure_budget").get<int>();
  c.require_kkt = j.at("require_kkt").get<bool>();
  c.stochastic_grad_tol = get_num(j.at("stochastic_grad_tol"));
  c.stochastic_check_samples = j.at("stochastic_check_samples").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json record_json(const SolutionRecord& r) {
  const KktReport& k = r.kkt;
  json kkt = {{"stationarity", num(k.stationarity)},
              {"eq_violation", num(k.eq_violation)},
              {"ineq_violation", num(k.ineq_violation)},
              {"bound_violation", num(k.bound_violation)},
              {"complementarity", num(k.complementarity)},
              {"dual_violation", num(k.dual_violation)},
              {"fit_residual", num(k.fit_residual)},
              {"irregular", k.irregular},
              {"reduced_hessian_min_eig",
               k.reduced_hessian_min_eig ? num(*k.reduced_hessian_min_eig) : json(nullptr)},
              {"lambda", vec(k.multipliers.lambda)},
              {"mu", vec(k.multipliers.mu)},
              {"z_upper", vec(k.multipliers.z_upper)},
              {"z_lower", vec(k.multipliers.z_lower)}};
  return {{"iteration", r.iteration},
          {"pool_size", r.pool_size},
          {"x", vec(r.x)},
          {"objective", num(r.objective)},
          {"y_star", num(r.y_star)},
          {"m_value", num(r.m_value)},
          {"status", to_string(r.status)},
          {"solver_iterations", r.solver_iterations},
          {"transient_insertions", r.transient_insertions},
          {"accepted", r.accepted},
          {"failure", r.failure},
          {"kkt", kkt},
          {"residual", num(r.residual)},
          {"eta", num(r.eta)},
          {"finite_y", r.finite_y},
          {"eta_zero", r.eta_zero},
          {"original_kkt", r.original_kkt},
          {"distinct", r.distinct},
          {"constraint_active", r.constraint_active},
          {"min_pool_distance", num(r.min_pool_distance)},
          {"notes", r.notes}};
}

SolutionRecord get_record(const json& j) {
  SolutionRecord r;
  r.iteration = j.at("iteration").get<int>();
  r.pool_size = j.at("pool_size").get<std::size_t>();
  r.x = get_vec(j.at("x"));
  r.objective = get_num(j.at("objective"));
  r.y_star = get_num(j.at("y_star"));
  r.m_value = get_num(j.at("m_value"));
  r.status = solve_status_from_string(j.at("status").get<std::string>());
  r.solver_iterations = j.at("solver_iterations").get<int>();
  r.transient_insertions = j.at("transient_insertions").get<int>();
  r.accepted = j.at("accepted").get<bool>();
  r.failure = j.at("failure").get<std::string>();
  const json& k = j.at("kkt");
  r.kkt.stationarity = get_num(k.at("stationarity"));
  r.kkt.eq_violation = get_num(k.at("eq_violation"));
  r.kkt.ineq_violation = get_num(k.at("ineq_violation"));
  r.kkt.bound_violation = get_num(k.at("bound_violation"));
  r.kkt.complementarity = get_num(k.at("complementarity"));
  r.kkt.dual_violation = get_num(k.at("dual_violation"));
  r.kkt.fit_residual = get_num(k.at("fit_residual"));
  r.kkt.irregular = k.at("irregular").get<bool>();
  if (!k.at("reduced_hessian_min_eig").is_null()) r.kkt.reduced_hessian_min_eig = get_num(k.at("reduced_hessian_min_eig"));
  r.kkt.multipliers.lambda = get_vec(k.at("lambda"));
  r.kkt.multipliers.mu = get_vec(k.at("mu"));
  r.kkt.multipliers.z_upper = get_vec(k.at("z_upper"));
  r.kkt.multipliers.z_lower = get_vec(k.at("z_lower"));
  r.kkt.eta = get_num(j.at("eta"));
  r.residual = get_num(j.at("residual"));
  r.eta = get_num(j.at("eta"));
  r.finite_y = j.at("finite_y").get<bool>();
  r.eta_zero = j.at("eta_zero").get<bool>();
  r.original_kkt = j.at("original_kkt").get<bool>();
  r.distinct = j.at("distinct").get<bool>();
  r.constraint_active = j.at("constraint_active").get<bool>();
  r.min_pool_distance = get_num(j.at("min_pool_distance"));
  r.notes = j.at("notes").get<std::vector<std::string>>();
  return r;
}

json document(const ResultFile& f, bool with_timings) {
  json records = json::array();
  for (const auto& r : f.records) records.push_back(record_json(r));
  json history = json::array();
  for (const auto& pool : f.pool_history) {
    json p = json::array();
    for (const Vec& x : pool) p.push_back(vec(x));
    history.push_back(p);
  }
  json doc = {{"schema_version", f.schema_version},
              {"name", f.name},
              {"problem", f.problem},
              {"config", config_json(f.config)},
              {"records", records},
              {"pool_history", history},
              {"environment", {{"seed", f.config.seed}, {"build_id", f.build_id}}}};
  if (with_timings) {
    json per = json::array();
    for (const auto& r : f.records) per.push_back(num(r.wall_time));
    doc["timings"] = {{"total_wall_time", num(f.total_wall_time)}, {"record_wall_time", per}};
  }
  return doc;
}

}  // namespace

std::string build_id() {
  return std::string("deflation-1.0 ") + __VERSION__;
}

ResultFile make_result_file(const std::string& name, const std::map<std::string, std::string>& problem,
                            const RunConfig& config, const SolutionSet& set, double total_wall_time) {
  ResultFile f;
  f.name = name;
  f.problem = problem;
  f.config = config;
  f.records = set.attempts;
  std::vector<Vec> pool;
  for (const auto& r : set.attempts) {
    if (r.accepted) pool.push_back(r.x);
    f.pool_history.push_back(pool);
  }
  f.build_id = build_id();
  f.total_wall_time = total_wall_time;
  return f;
}

std::string emit_result_string(const ResultFile& file) { return document(file, true).dump(2) + "\n"; }

std::string deterministic_payload(const ResultFile& file) { return document(file, false).dump(2) + "\n"; }

ResultFile parse_result_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("result file is not valid JSON: ") + e.what());
  }
  try {
    ResultFile f;
    f.schema_version = j.at("schema_version").get<int>();
    require(f.schema_version == kSchemaVersion, "unsupported schema_version " + std::to_string(f.schema_version));
    f.name = j.at("name").get<std::string>();
    f.problem = j.at("problem").get<std::map<std::string, std::string>>();
    f.config = get_config(j.at("config"));
    for (const json& r : j.at("records")) f.records.push_back(get_record(r));
    for (const json& p : j.at("pool_history")) {
      std::vector<Vec> pool;
      for (const json& x : p) pool.push_back(get_vec(x));
      f.pool_history.push_back(pool);
    }
    f.build_id = j.at("environment").at("build_id").get<std::string>();
    if (j.contains("timings")) {
      const json& t = j.at("timings");
      f.total_wall_time = get_num(t.at("total_wall_time"));
      const json& per = t.at("record_wall_time");
      require(per.size() == f.records.size(), "timings do not match the records");
      for (std::size_t i = 0; i < per.size(); ++i) f.records[i].wall_time = get_num(per[i]);
    }
    return f;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed result file: ") + e.what());
  }
}

void emit_result(const ResultFile& file, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write result file " + path);
  out << emit_result_string(file);
  if (!out) throw Error("failed writing result file " + path);
}

ResultFile read_result(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open result file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_result_string(ss.str());
}

void write_csv(const ResultFile& file, std::ostream& os) {
  os << "iteration,accepted,status,objective,y_star,m_value,stationarity,eta,min_pool_distance,"
        "solver_iterations,wall_time,x\n";
  os.precision(17);
  for (const auto& r : file.records) {
    os << r.iteration << ',' << (r.accepted ? 1 : 0) << ',' << to_string(r.status) << ',' << r.objective
       << ',' << r.y_star << ',' << r.m_value << ',' << r.kkt.stationarity << ',' << r.eta << ','
       << r.min_pool_distance << ',' << r.solver_iterations << ',' << r.wall_time << ',';
    for (Eigen::Index i = 0; i < r.x.size(); ++i) os << (i ? ";" : "") << r.x[i];
    os << '\n';
  }
}

void write_csv(const ResultFile& file, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write CSV file " + path);
  write_csv(file, out);
  if (!out) throw Error("failed writing CSV file " + path);
}

}  // namespace deflation
