// Command-line harness: solve composite problems, run the verification
// batteries, sweep benchmark configurations, and generate synthetic
// instances with stored reference optima.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include <CLI11.hpp>
#include <json.hpp>

#include "ianpe/driver.hpp"
#include "ianpe/rng.hpp"
#include "ianpe/synth.hpp"
#include "ianpe/verify.hpp"

namespace {

using namespace ianpe;

int thread_cap() {
  if (const char* env = std::getenv("IANPE_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

struct LoadedProblem {
  std::unique_ptr<CompositeProblem> problem;
  Vec x0;
  bool has_reference = false;
  Vec xstar;
  double fstar = 0.0;
};

LoadedProblem load_problem(const std::string& kind, const std::string& path,
                           double alpha, const std::string& x0_spec,
                           std::uint64_t seed) {
  LoadedProblem out;
  if (kind == "logreg") {
    LibsvmData data = parse_libsvm_file(path);
    if (data.remapped_zero_one)
      std::cerr << "note: 0/1 labels remapped to -1/+1\n";
    out.problem = std::make_unique<LogisticRegression>(std::move(data.matrix),
                                                       std::move(data.labels),
                                                       alpha);
  } else if (kind == "quadratic") {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open problem file: " + path);
    nlohmann::json j;
    in >> j;
    const std::size_t d = j.at("d").get<std::size_t>();
    const Vec qfull = j.at("Q").get<Vec>();
    Vec c = j.at("c").get<Vec>();
    DenseSymMatrix Q = DenseSymMatrix::from_full(d, qfull, 0.0);
    out.problem = std::make_unique<QuadraticProblem>(std::move(Q), std::move(c));
    if (j.contains("xstar")) {
      out.xstar = j["xstar"].get<Vec>();
      out.fstar = j["fstar"].get<double>();
      out.has_reference = true;
    }
  } else {
    throw ConfigError("unknown problem kind: " + kind);
  }

  // companion reference file written by gen: PATH.ref.json
  if (!out.has_reference) {
    std::ifstream ref(path + ".ref.json");
    if (ref) {
      nlohmann::json j;
      ref >> j;
      out.xstar = j.at("xstar").get<Vec>();
      out.fstar = j.at("fstar").get<double>();
      out.has_reference = true;
    }
  }

  const std::size_t d = out.problem->dim();
  if (x0_spec == "zero") {
    out.x0.assign(d, 0.0);
  } else if (x0_spec.rfind("gauss:", 0) == 0) {
    const double scale = parse_double(x0_spec.substr(6));
    Rng rng(seed, 0x783030, 0);
    out.x0.resize(d);
    for (auto& v : out.x0) v = scale * rng.next_gaussian();
  } else if (x0_spec.rfind("anti:", 0) == 0) {
    // start at the given distance opposite the reference solution
    if (!out.has_reference)
      throw ConfigError("--x0 anti: needs a stored reference solution");
    const double dist = parse_double(x0_spec.substr(5));
    const double xn = nrm2(out.xstar);
    if (xn == 0.0) throw ConfigError("--x0 anti: reference is the origin");
    out.x0 = scaled(out.xstar, -dist / xn);
  } else {
    throw ConfigError("bad --x0, expected zero, gauss:SCALE or anti:DIST");
  }
  return out;
}

IanpeConfig build_config(const std::string& mode, const std::string& oracle,
                         std::uint64_t seed, double grad_tol, int max_outer,
                         bool diagnostics) {
  IanpeConfig cfg;
  cfg.mode = run_mode_from_string(mode);
  cfg.oracle.kind = oracle_kind_from_string(oracle);
  cfg.seed = seed;
  cfg.grad_tol = grad_tol;
  cfg.max_outer = max_outer;
  cfg.keep_diagnostics = diagnostics;
  return cfg;
}

int cmd_solve(const std::string& kind, const std::string& path, double alpha,
              const std::string& mode, const std::string& oracle,
              std::uint64_t seed, double grad_tol, int max_outer,
              const std::string& trace_path, const std::string& x0_spec) {
  LoadedProblem lp = load_problem(kind, path, alpha, x0_spec, seed);
  IanpeConfig cfg = build_config(mode, oracle, seed, grad_tol, max_outer, false);
  const RunResult res = solve_ianpe(*lp.problem, lp.x0, cfg);

  if (!trace_path.empty()) write_trace_file(trace_path, res.trace, cfg.to_json());

  std::cout << "status " << to_string(res.reason) << "\n"
            << "iterations " << res.iterations << "\n"
            << "f " << format_double(res.f) << "\n"
            << "grad_norm " << format_double(res.grad_norm) << "\n"
            << "oracle_calls " << res.counters.ans_solves << "\n"
            << "data_passes "
            << format_double(
                   res.counters.data_passes(lp.problem->num_components()))
            << "\n";
  if (lp.has_reference)
    std::cout << "f_gap " << format_double(res.f - lp.fstar) << "\n";
  return res.reason == StopReason::MaxOuter ? 3 : 0;
}

int cmd_gen(const std::string& kind, std::size_t n, std::size_t d,
            std::uint64_t seed, double alpha, double density, double signal,
            double row_scale, double align, const std::string& out_path) {
  if (kind == "logreg") {
    LogisticGenOptions opt;
    opt.n = n;
    opt.d = d;
    opt.seed = seed;
    opt.alpha = alpha;
    opt.density = density;
    opt.signal = signal;
    opt.row_scale = row_scale;
    opt.align = align;
    LogisticRegression prob = gen_logistic(opt);
    write_libsvm_file(out_path, prob.data(), prob.labels());
    const Reference ref =
        reference_minimizer(prob, Vec(d, 0.0), 1e-12, 500);
    nlohmann::json j;
    j["kind"] = "logreg";
    j["alpha"] = alpha;
    j["xstar"] = ref.xstar;
    j["fstar"] = ref.fstar;
    j["grad_norm"] = ref.grad_norm;
    std::ofstream rf(out_path + ".ref.json");
    if (!rf) throw IoError("cannot write reference: " + out_path + ".ref.json");
    rf << j.dump(2) << "\n";
  } else if (kind == "quadratic") {
    QuadraticProblem prob = gen_quadratic(d, seed);
    const Vec xstar = prob.minimizer();
    nlohmann::json j;
    j["kind"] = "quadratic";
    j["d"] = d;
    Vec qfull(d * d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t jj = 0; jj < d; ++jj) qfull[i * d + jj] = prob.Q().at(i, jj);
    j["Q"] = qfull;
    j["c"] = prob.c();
    j["xstar"] = xstar;
    j["fstar"] = prob.eval_g(xstar);
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot write: " + out_path);
    out << j.dump(2) << "\n";
  } else {
    throw ConfigError("gen: unknown kind " + kind);
  }
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_verify(std::size_t instances, std::uint64_t seed, std::size_t d_max,
               bool verbose) {
  std::vector<CheckReport> failures, all;
  const BatterySummary sum = run_phi_batteries(instances, seed, d_max,
                                               &failures,
                                               verbose ? &all : nullptr);
  for (const auto& r : verbose ? all : failures)
    std::cout << format_report(r) << "\n";
  std::cout << "phi_batteries " << (sum.failures == 0 ? "PASS" : "FAIL")
            << " instances=" << sum.instances << " checks=" << sum.checks_run
            << " failures=" << sum.failures
            << " min_margin=" << format_double(sum.min_margin) << "\n";
  return sum.failures == 0 ? 0 : 3;
}

int cmd_bench(const std::string& kind, const std::string& path, double alpha,
              const std::vector<std::string>& modes,
              const std::vector<std::string>& oracles, std::uint64_t seed_base,
              int num_seeds, double grad_tol, int max_outer,
              const std::string& out_dir) {
  struct Row {
    std::string mode, oracle;
    std::uint64_t seed;
    std::string status;
    int iterations;
    double f, grad_norm, passes;
    std::uint64_t oracle_calls, wall_nanos;
  };
  std::vector<Row> rows;
  std::mutex mu;

  struct Job {
    std::string mode, oracle;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& m : modes)
    for (const auto& o : oracles)
      for (int s = 0; s < num_seeds; ++s)
        jobs.push_back({m, o, seed_base + static_cast<std::uint64_t>(s)});

  const int workers = std::min<int>(thread_cap(), static_cast<int>(jobs.size()));
  std::size_t next = 0;
  std::mutex next_mu;
  auto worker = [&] {
    for (;;) {
      std::size_t j;
      {
        std::lock_guard<std::mutex> lk(next_mu);
        if (next >= jobs.size()) return;
        j = next++;
      }
      const Job& job = jobs[j];
      LoadedProblem lp = load_problem(kind, path, alpha, "zero", job.seed);
      IanpeConfig cfg = build_config(job.mode, job.oracle, job.seed, grad_tol,
                                     max_outer, false);
      const auto t0 = std::chrono::steady_clock::now();
      const RunResult res = solve_ianpe(*lp.problem, lp.x0, cfg);
      const auto wall = std::chrono::duration_cast<std::chrono::nanoseconds>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
      if (!out_dir.empty()) {
        std::ostringstream name;
        name << out_dir << "/trace_" << job.mode << "_" << job.oracle << "_"
             << job.seed << ".csv";
        write_trace_file(name.str(), res.trace, cfg.to_json());
      }
      Row row{job.mode,
              job.oracle,
              job.seed,
              to_string(res.reason),
              res.iterations,
              res.f,
              res.grad_norm,
              res.counters.data_passes(lp.problem->num_components()),
              res.counters.ans_solves,
              static_cast<std::uint64_t>(wall)};
      std::lock_guard<std::mutex> lk(mu);
      rows.push_back(std::move(row));
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.mode, a.oracle, a.seed) <
           std::tie(b.mode, b.oracle, b.seed);
  });
  std::cout << "mode,oracle,seed,status,iterations,f,grad_norm,data_passes,"
               "oracle_calls,wall_nanos\n";
  for (const auto& r : rows)
    std::cout << r.mode << ',' << r.oracle << ',' << r.seed << ',' << r.status
              << ',' << r.iterations << ',' << format_double(r.f) << ','
              << format_double(r.grad_norm) << ',' << format_double(r.passes)
              << ',' << r.oracle_calls << ',' << r.wall_nanos << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IA-NPE convex optimization toolkit"};
  app.require_subcommand(1);

  // solve
  auto* solve = app.add_subcommand("solve", "run a solver on a problem");
  std::string kind = "logreg", data_path, mode = "ianpe", oracle = "exact";
  std::string trace_path, x0_spec = "zero";
  double alpha = 1e-5, grad_tol = 1e-7;
  int max_outer = 200;
  std::uint64_t seed = 0;
  solve->add_option("--problem", kind, "logreg|quadratic");
  solve->add_option("--data", data_path, "dataset path")->required();
  solve->add_option("--alpha", alpha, "ridge regularizer");
  solve->add_option("--mode", mode, "ianpe|ianpe-strict|gr-newton");
  solve->add_option("--oracle", oracle, "exact|subsample|sketch");
  solve->add_option("--seed", seed, "rng seed");
  solve->add_option("--grad-tol", grad_tol, "gradient stopping tolerance");
  solve->add_option("--max-outer", max_outer, "outer iteration budget");
  solve->add_option("--trace", trace_path, "trace CSV output path");
  solve->add_option("--x0", x0_spec, "zero | gauss:SCALE");

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic instance");
  std::string gen_kind = "logreg", gen_out = "instance.libsvm";
  std::size_t gen_n = 200, gen_d = 10;
  std::uint64_t gen_seed = 1;
  double gen_alpha = 1e-5, gen_density = 1.0;
  double gen_signal = 3.0, gen_row_scale = 1.0, gen_align = 0.0;
  gen->add_option("--kind", gen_kind, "logreg|quadratic");
  gen->add_option("--n", gen_n, "rows");
  gen->add_option("--d", gen_d, "features");
  gen->add_option("--seed", gen_seed, "rng seed");
  gen->add_option("--alpha", gen_alpha, "ridge regularizer");
  gen->add_option("--density", gen_density, "row density");
  gen->add_option("--signal", gen_signal, "planted direction norm");
  gen->add_option("--align", gen_align, "feature alignment with the signal");
  gen->add_option("--row-scale", gen_row_scale, "max row norm");
  gen->add_option("--out", gen_out, "output path")->required();

  // verify
  auto* verify = app.add_subcommand("verify", "run the resolvent batteries");
  std::size_t v_instances = 200, v_dmax = 12;
  std::uint64_t v_seed = 7;
  verify->add_option("--instances", v_instances, "instance count");
  verify->add_option("--seed", v_seed, "rng seed");
  verify->add_option("--d-max", v_dmax, "max dimension");
  bool v_verbose = false;
  verify->add_flag("--verbose", v_verbose, "print every check line");

  // bench
  auto* bench = app.add_subcommand("bench", "sweep modes/oracles/seeds");
  std::string b_kind = "logreg", b_path, b_out;
  std::vector<std::string> b_modes{"ianpe"}, b_oracles{"subsample"};
  double b_alpha = 1e-5, b_tol = 1e-7;
  int b_seeds = 3, b_max_outer = 200;
  std::uint64_t b_seed_base = 0;
  bench->add_option("--problem", b_kind, "logreg|quadratic");
  bench->add_option("--data", b_path, "dataset path")->required();
  bench->add_option("--alpha", b_alpha, "ridge regularizer");
  bench->add_option("--modes", b_modes, "modes to sweep");
  bench->add_option("--oracles", b_oracles, "oracles to sweep");
  bench->add_option("--seeds", b_seeds, "number of seeds");
  bench->add_option("--seed-base", b_seed_base, "first seed");
  bench->add_option("--grad-tol", b_tol, "stopping tolerance");
  bench->add_option("--max-outer", b_max_outer, "outer iteration budget");
  bench->add_option("--out-dir", b_out, "directory for per-run traces");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve)
      return cmd_solve(kind, data_path, alpha, mode, oracle, seed, grad_tol,
                       max_outer, trace_path, x0_spec);
    if (*gen)
      return cmd_gen(gen_kind, gen_n, gen_d, gen_seed, gen_alpha, gen_density,
                   gen_signal, gen_row_scale, gen_align, gen_out);
    if (*verify) return cmd_verify(v_instances, v_seed, v_dmax, v_verbose);
    if (*bench)
      return cmd_bench(b_kind, b_path, b_alpha, b_modes, b_oracles,
                       b_seed_base, b_seeds, b_tol, b_max_outer, b_out);
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: io: " << e.what() << "\n";
    return 4;
  } catch (const ParseError& e) {
    std::cerr << "error: io: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "error: numerical: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
