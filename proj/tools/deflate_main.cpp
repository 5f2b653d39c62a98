// Command-line front end: experiments, ad-hoc root finding and the barrier-KKT check.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "deflation/barrier_kkt.hpp"
#include "deflation/experiments.hpp"
#include "deflation/result_io.hpp"

using namespace deflation;

namespace {

// Flag values are kept as text and copied into the experiment config when given.
struct Overrides {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    return options[key] = app->add_option(flag, values[key], help);
  }
  void apply(ConfigFile& cfg) const {
    for (const auto& [key, opt] : options) {
      if (opt->count() > 0) cfg.set(key, values.at(key));
    }
  }
};

struct Outputs {
  std::string out;
  std::string csv;
  std::string config;
};

// Rejects text that parse_vec cannot read, so a bad list is a usage error.
const CLI::Validator kVecList(
    [](std::string& text) {
      try {
        parse_vec(text);
      } catch (const Error& e) {
        return std::string(e.what());
      }
      return std::string();
    },
    "LIST");

void add_common(CLI::App* app, Overrides& ov, Outputs& io) {
  ov.add(app, "--x0", "x0", "initial point, comma separated (reused every iteration)")->check(kVecList);
  ov.add(app, "--num-solutions", "num_solutions", "number of solutions to find")->check(CLI::PositiveNumber);
  ov.add(app, "--p", "p", "deflation power")->check(CLI::PositiveNumber);
  ov.add(app, "--sigma", "sigma", "deflation shift")->check(CLI::NonNegativeNumber);
  ov.add(app, "--radius", "radius", "deflation radius")->check(CLI::NonNegativeNumber);
  ov.add(app, "--mode", "mode", "slack | bigm")->check(CLI::IsMember({"slack", "bigm"}));
  ov.add(app, "--solver", "solver", "al | barrier | mma | adagrad | newton")
      ->check(CLI::IsMember({"al", "barrier", "mma", "adagrad", "newton"}));
  ov.add(app, "--seed", "seed", "random seed")->check(CLI::NonNegativeNumber);
  ov.add(app, "--intermediate-every", "intermediate_every",
         "deflate the solve's own iterates every K iterations (0 = off)")
      ->check(CLI::NonNegativeNumber);
  ov.add(app, "--y-upper", "y_upper", "upper bound of the slack variable")->check(CLI::Number);
  ov.add(app, "--big-m", "big_m", "constant M in bigm mode")->check(CLI::PositiveNumber);
  ov.add(app, "--max-iter", "max_iter", "backend iteration limit")->check(CLI::PositiveNumber);
  app->add_option("--out", io.out, "write the JSON result file here");
  app->add_option("--csv", io.csv, "write one CSV row per solution attempt here");
  app->add_option("--config", io.config, "key = value config file (default: the pinned one)")
      ->check(CLI::ExistingFile);
}

ConfigFile base_config(const std::string& name, const Outputs& io, const Overrides& ov) {
  ConfigFile cfg = io.config.empty() ? load_experiment_config(name) : ConfigFile::load(io.config);
  ov.apply(cfg);
  return cfg;
}

void print_set(const SolutionSet& set) {
  for (const auto& r : set.attempts) {
    std::printf("%3d  %-8s  %-15s  f=% .10e  y=% .4e  x=(", r.iteration, r.accepted ? "accepted" : "rejected",
                to_string(r.status).c_str(), r.objective, r.y_star);
    for (Eigen::Index i = 0; i < std::min<Eigen::Index>(r.x.size(), 6); ++i) {
      std::printf("%s% .8f", i ? ", " : "", r.x[i]);
    }
    std::printf("%s)%s%s\n", r.x.size() > 6 ? ", ..." : "", r.failure.empty() ? "" : "  ", r.failure.c_str());
  }
  std::printf("%zu solution(s) accepted out of %zu attempt(s)\n", set.size(), set.attempts.size());
}

void write_outputs(const Outputs& io, const ResultFile& file) {
  if (!io.out.empty()) emit_result(file, io.out);
  if (!io.csv.empty()) write_csv(file, io.csv);
}

void print_properties(const ExperimentOutcome& o) {
  for (const auto& p : o.properties) {
    std::printf("  [%s] %s %s\n", p.passed ? "ok" : (p.warn_only ? "WARN" : "FAIL"), p.name.c_str(), p.detail.c_str());
  }
}

int run_himmelblau_cmd(const Overrides& ov, const Outputs& io) {
  const HimmelblauSpec spec = himmelblau_spec(base_config("himmelblau", io, ov));
  RunConfig cfg = spec.config;
  if (std::holds_alternative<BigMMode>(cfg.mode)) cfg.mode = BigMMode{spec.big_m};
  const ExperimentOutcome o = run_himmelblau(cfg);
  print_set(o.set);
  print_properties(o);
  write_outputs(io, make_result_file(o.name, o.descriptor, o.config, o.set, o.wall_time));
  return 0;
}

int run_vi_cmd(const Overrides& ov, const Outputs& io) {
  const ExperimentOutcome o = run_vi_experiment(vi_spec(base_config("vi", io, ov)));
  for (const auto& r : o.set.attempts) {
    std::printf("%3d  %-8s  mu=% .6f  sigma=%.6f  KL=% .6e  %s\n", r.iteration, r.accepted ? "accepted" : "rejected",
                r.x[0], std::exp(r.x[1]), r.objective, r.failure.c_str());
  }
  std::printf("%zu Gaussian(s) accepted in %.2f s\n", o.set.size(), o.wall_time);
  print_properties(o);
  write_outputs(io, make_result_file(o.name, o.descriptor, o.config, o.set, o.wall_time));
  return 0;
}

int run_truss_cmd(const Overrides& ov, const Outputs& io, const std::string& export_dir) {
  const TrussOutcome t = run_truss_experiment(truss_spec(base_config("truss", io, ov)));
  const ExperimentOutcome& o = t.outcome;
  for (const auto& r : o.set.attempts) {
    std::printf("%3d  %-8s  compliance=%.6f  y=%.4e  dist=%.4f  %.3f s  %s\n", r.iteration,
                r.accepted ? "accepted" : "rejected", r.objective, r.y_star, r.min_pool_distance, r.wall_time,
                r.failure.c_str());
  }
  std::printf("radius %s, %zu design(s) accepted in %.2f s\n", o.descriptor.at("radius").c_str(), o.set.size(),
              o.wall_time);
  print_properties(o);
  if (!export_dir.empty()) {
    std::filesystem::create_directories(export_dir);
    for (const auto& r : o.set.attempts) {
      if (!r.accepted) continue;
      const std::string path = export_dir + "/design_" + std::to_string(r.iteration) + ".truss";
      std::ofstream out(path);
      if (!out) throw Error("cannot write " + path);
      write_truss(out, t.model, r.x);
    }
  }
  write_outputs(io, make_result_file(o.name, o.descriptor, o.config, o.set, o.wall_time));
  return 0;
}

int run_roots_cmd(const Overrides& ov, const Outputs& io, const std::string& system_name) {
  ConfigFile file = base_config("roots", io, ov);
  const NonlinearSystem sys = make_poly_system(system_name);
  RunConfig cfg;
  cfg.n_solutions = 3;
  cfg.x0 = Vec::Constant(sys.dim, 0.6);
  cfg.solver = Backend::Newton;
  cfg.options.max_iter = 100;
  cfg.options.grad_tol = 1e-12;
  if (!file.has("solver")) file.set("solver", "newton");
  apply_run_config(file, cfg);
  require(cfg.x0.size() == sys.dim, "--x0 has the wrong dimension for this system");
  const auto t0 = std::chrono::steady_clock::now();
  const SolutionSet set = find_multiple_solutions(sys, cfg);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  print_set(set);
  for (const auto& r : set.attempts) {
    if (r.accepted) {
      std::printf("root:");
      for (Eigen::Index i = 0; i < r.x.size(); ++i) std::printf(" %.15g", r.x[i]);
      std::printf("\n");
    }
  }
  write_outputs(io, make_result_file("roots-" + system_name, {{"problem", system_name}}, cfg, set, elapsed));
  return 0;
}

int run_kkt_check(int n, int m, std::uint64_t seed, int states, const std::string& dump) {
  const Nlp nlp = make_random_equality_problem(n, m, seed);
  const BarrierState s = random_barrier_state(nlp, seed + 1);
  const KktMatrices k = assemble_reduced_kkt(nlp, s);
  DeflationPool pool;
  std::mt19937_64 rng(seed + 2);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  Vec xk(n);
  for (int i = 0; i < n; ++i) xk[i] = u(rng);
  pool.add(xk);
  const DeflationFunction fn;
  const Mat G = deflated_barrier_jacobian(nlp, s, fn, pool);
  const NewtonDirection dr = solve_reduced_kkt(nlp, s);
  const NewtonDirection df = solve_full_kkt(nlp, s);
  const double dir_gap = std::max(inf_norm(dr.dx - df.dx), inf_norm(dr.dlambda - df.dlambda));

  double worst_fd = 0.0;
  for (int t = 0; t < states; ++t) {
    const BarrierState st = random_barrier_state(nlp, seed + 100 + t);
    if (deflation_value(fn, pool, st.x).is_singular) continue;
    const Mat Ga = deflated_barrier_jacobian(nlp, st, fn, pool);
    const double h = 1e-6;
    Mat Gf(Ga.rows(), Ga.cols());
    for (int j = 0; j < n + m; ++j) {
      BarrierState p = st, q = st;
      if (j < n) {
        p.x[j] += h;
        q.x[j] -= h;
      } else {
        p.lambda[j - n] += h;
        q.lambda[j - n] -= h;
      }
      const Vec gp = deflation_value(fn, pool, p.x).value * assemble_barrier_residual(nlp, p);
      const Vec gq = deflation_value(fn, pool, q.x).value * assemble_barrier_residual(nlp, q);
      Gf.col(j) = (gp - gq) / (2 * h);
    }
    worst_fd = std::max(worst_fd, (Ga - Gf).cwiseAbs().maxCoeff() / std::max(1.0, Ga.cwiseAbs().maxCoeff()));
  }

  std::printf("random instance: n=%d, m=%d, seed=%llu\n", n, m, static_cast<unsigned long long>(seed));
  std::printf("%-40s %14s\n", "quantity", "value");
  std::printf("%-40s %14.6e\n", "undeflated reduced KKT symmetry defect", symmetry_defect(k.reduced));
  std::printf("%-40s %14.6e\n", "deflated Jacobian x-block defect", symmetry_defect(G.topLeftCorner(n, n)));
  std::printf("%-40s %14.6e\n", "deflated Jacobian full defect", symmetry_defect(G));
  std::printf("%-40s %14.6e\n", "reduced vs full Newton direction", dir_gap);
  std::printf("%-40s %14.6e\n", "deflated Jacobian vs FD (max rel)", worst_fd);
  if (!dump.empty()) {
    std::ofstream out(dump);
    if (!out) throw Error("cannot write " + dump);
    const Eigen::IOFormat full(Eigen::FullPrecision, 0, " ", "\n");
    out << "# reduced KKT matrix\n" << k.reduced.format(full) << "\n# deflated Jacobian\n" << G.format(full) << "\n";
  }
  return 0;
}

int run_baseline_cmd(const Overrides& ov, const Outputs& io, int starts) {
  const HimmelblauSpec spec = himmelblau_spec(base_config("himmelblau", io, ov));
  const auto t0 = std::chrono::steady_clock::now();
  const SolutionSet set = multistart_baseline(make_himmelblau(), starts, spec.config.seed, spec.config);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  print_set(set);
  std::printf("distinct solutions per solve: %zu / %d = %.3f\n", set.size(), starts,
              static_cast<double>(set.size()) / starts);
  write_outputs(io, make_result_file("baseline-himmelblau", {{"problem", "himmelblau"}, {"starts", std::to_string(starts)}},
                                     spec.config, set, elapsed));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Find multiple distinct solutions by deflation constraints"};
  app.require_subcommand(1);

  Overrides h_ov, v_ov, t_ov, r_ov, b_ov;
  Outputs h_io, v_io, t_io, r_io, b_io;
  auto* himmelblau = app.add_subcommand("himmelblau", "deflated Himmelblau minimization");
  add_common(himmelblau, h_ov, h_io);
  auto* vi = app.add_subcommand("vi", "deflated variational inference against a Gaussian mixture");
  add_common(vi, v_ov, v_io);
  auto* truss = app.add_subcommand("truss", "deflated truss compliance minimization with MMA");
  add_common(truss, t_ov, t_io);
  t_ov.add(truss, "--nx", "nx", "nodes along x")->check(CLI::Range(2, 1000));
  t_ov.add(truss, "--ny", "ny", "nodes along y")->check(CLI::Range(2, 1000));
  t_ov.add(truss, "--volume-fraction", "volume_fraction", "allowed mean density")->check(CLI::Range(0.0, 1.0));
  std::string export_dir;
  truss->add_option("--export-dir", export_dir, "write each accepted design in the truss text format");
  auto* roots = app.add_subcommand("roots", "deflated Newton on a small nonlinear system");
  add_common(roots, r_ov, r_io);
  std::string system_name = "cubic";
  roots->add_option("--system", system_name, "quadratic | cubic | trig2d")
      ->capture_default_str()
      ->check(CLI::IsMember({"quadratic", "cubic", "trig2d"}));
  r_ov.add(roots, "--system-mode", "system_mode", "multiplicative | constraint")
      ->check(CLI::IsMember({"multiplicative", "constraint"}));
  auto* kkt = app.add_subcommand("kkt-check", "symmetry of the barrier KKT system before and after deflation");
  int kn = 5, km = 2, kstates = 20;
  std::uint64_t kseed = 7;
  std::string kdump;
  kkt->add_option("--n", kn, "variables")->capture_default_str()->check(CLI::Range(1, 200));
  kkt->add_option("--m", km, "equality constraints")->capture_default_str()->check(CLI::Range(0, 200));
  kkt->add_option("--seed", kseed, "instance seed")->capture_default_str();
  kkt->add_option("--states", kstates, "random states for the FD comparison")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  kkt->add_option("--dump", kdump, "write the assembled matrices here");
  auto* baseline = app.add_subcommand("baseline", "undeflated multistart on Himmelblau");
  add_common(baseline, b_ov, b_io);
  int starts = 20;
  baseline->add_option("--starts", starts, "number of random starts")->capture_default_str()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    std::cerr << app.help();
    return 2;
  }

  try {
    if (*himmelblau) return run_himmelblau_cmd(h_ov, h_io);
    if (*vi) return run_vi_cmd(v_ov, v_io);
    if (*truss) return run_truss_cmd(t_ov, t_io, export_dir);
    if (*roots) return run_roots_cmd(r_ov, r_io, system_name);
    if (*kkt) return run_kkt_check(kn, km, kseed, kstates, kdump);
    if (*baseline) return run_baseline_cmd(b_ov, b_io, starts);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
