// Command-line front end: problem generation, constant certification,
// solver runs and head-to-head benchmarks.
//
// Exit codes: 0 success (bench: all runs converged), 1 run failure,
// 2 configuration error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lqropt/experiment.hpp"
#include "lqropt/generators.hpp"
#include "lqropt/problem_io.hpp"
#include "lqropt/trace.hpp"

namespace {

using namespace lqropt;

Gain parse_gain(const std::string& text, Eigen::Index m, Eigen::Index r) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    values.push_back(std::stod(tok));
  }
  if (static_cast<Eigen::Index>(values.size()) != m * r) {
    throw std::invalid_argument("--k0 needs " + std::to_string(m * r) +
                                " comma-separated entries (row-major)");
  }
  Gain K(m, r);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < r; ++j) {
      K(i, j) = values[static_cast<size_t>(i * r + j)];
    }
  }
  return K;
}

void apply_config_file(const std::string& path, ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  nlohmann::json j;
  in >> j;
  if (j.contains("gd") && j["gd"].contains("step")) {
    cfg.gd_step = j["gd"]["step"].get<double>();
  }
  if (j.contains("accel")) {
    const auto& a = j["accel"];
    if (a.contains("T")) cfg.accel_T = a["T"].get<double>();
    if (a.contains("d")) cfg.accel_d = a["d"].get<double>();
    if (a.contains("eta")) cfg.accel_eta = a["eta"].get<double>();
    if (a.contains("beta")) cfg.accel_beta = a["beta"].get<double>();
  }
  if (j.contains("hybrid")) {
    const auto& h = j["hybrid"];
    if (h.contains("horizon")) cfg.hybrid_horizon = h["horizon"].get<double>();
    if (h.contains("dt")) cfg.hybrid_dt = h["dt"].get<double>();
  }
  if (j.contains("a-olqr") && j["a-olqr"].contains("eps")) {
    cfg.eps = j["a-olqr"]["eps"].get<double>();
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Accelerated policy optimization for continuous-time LQR"};
  app.require_subcommand(1);

  // gen ----------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "generate a problem file");
  std::string gen_name = "chain";
  int gen_n = 3, gen_m = 1;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  gen->add_option("--name", gen_name,
                  "chain | random-medium | olqr-chain")->required();
  gen->add_option("--n", gen_n, "state dimension");
  gen->add_option("--m", gen_m, "input dimension (random-medium)");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output problem JSON")->required();

  // certify ------------------------------------------------------------
  auto* certify = app.add_subcommand(
      "certify", "print the certified constants bundle for a problem");
  std::string cert_problem;
  double cert_alpha = 0.0;
  double cert_fstar = 0.0;
  certify->add_option("--problem", cert_problem)->required();
  certify->add_option("--alpha", cert_alpha, "sublevel value")->required();
  certify->add_option("--fstar", cert_fstar,
                      "optimal cost estimate; enables the PL constant");

  // solve ---------------------------------------------------------------
  auto* solve = app.add_subcommand("solve", "run one solver on a problem");
  std::string solve_problem, solve_solver, solve_out, solve_k0, solve_config;
  double solve_tol = 1e-6;
  long solve_max_iters = 2000000;
  std::uint64_t solve_seed = 0;
  bool solve_fd_hvp = false, solve_warm_start = false;
  solve->add_option("--problem", solve_problem)->required();
  solve->add_option("--solver", solve_solver,
                    "gd | accel | hybrid | a-olqr | care-oracle")->required();
  solve->add_option("--out", solve_out, "trace CSV path");
  solve->add_option("--k0", solve_k0, "initial gain, row-major CSV");
  solve->add_option("--config", solve_config, "solver config JSON");
  solve->add_option("--tol", solve_tol, "gradient tolerance");
  solve->add_option("--max-iters", solve_max_iters);
  solve->add_option("--seed", solve_seed);
  solve->add_flag("--fd-hvp", solve_fd_hvp,
                  "Hessian-free finite-difference HVPs in a-olqr");
  solve->add_flag("--warm-start-gd", solve_warm_start,
                  "gradient-descent warm start before accel");

  // bench ---------------------------------------------------------------
  auto* bench = app.add_subcommand(
      "bench", "run several solvers head-to-head and write a report");
  std::string bench_problem, bench_solvers = "gd,accel", bench_out,
              bench_k0, bench_config;
  double bench_tol = 1e-6;
  long bench_max_iters = 2000000;
  std::string bench_seeds = "0";
  bench->add_option("--problem", bench_problem)->required();
  bench->add_option("--solvers", bench_solvers, "comma-separated list");
  bench->add_option("--out", bench_out, "output directory")->required();
  bench->add_option("--k0", bench_k0);
  bench->add_option("--config", bench_config);
  bench->add_option("--tol", bench_tol);
  bench->add_option("--max-iters", bench_max_iters);
  bench->add_option("--seeds", bench_seeds, "comma-separated seed list");

  // oracle --------------------------------------------------------------
  auto* oracle = app.add_subcommand(
      "oracle", "Riccati ground truth via the Kleinman iteration");
  std::string oracle_problem, oracle_k0;
  oracle->add_option("--problem", oracle_problem)->required();
  oracle->add_option("--k0", oracle_k0);

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    LqrProblem P = gen_name == "chain" ? gen_integrator_chain(gen_n)
                   : gen_name == "random-medium"
                       ? gen_random_medium(gen_n, gen_m, gen_seed)
                   : gen_name == "olqr-chain"
                       ? gen_olqr_chain(gen_n)
                       : throw std::invalid_argument("unknown generator " +
                                                     gen_name);
    std::ostringstream meta;
    meta << "{\"generator\":\"" << gen_name << "\",\"n\":" << gen_n
         << ",\"m\":" << gen_m << ",\"seed\":" << gen_seed;
    if (gen_name == "random-medium") meta << ",\"jitter\":1e-09";
    meta << "}";
    write_problem(P, gen_out, meta.str());
    std::cout << "wrote " << gen_out << "\n";
    return 0;
  }

  if (certify->parsed()) {
    const LqrProblem P = read_problem(cert_problem);
    const ConstantsBundle b =
        cert_fstar > 0.0 ? constants(P, cert_alpha, cert_fstar)
                         : constants(P, cert_alpha);
    nlohmann::json j;
    j["alpha"] = b.alpha;
    j["xi"] = b.xi;
    j["zeta"] = b.zeta;
    j["kappa1"] = b.kappa1;
    j["kappa2"] = b.kappa2;
    j["kappa3"] = b.kappa3;
    j["kappa4"] = b.kappa4;
    j["L1"] = b.L1;
    j["L2"] = b.L2;
    if (b.mu) {
      j["f_star"] = cert_fstar;
      j["mu"] = *b.mu;
      j["kappa"] = *b.kappa_cond;
    }
    std::cout << j.dump(2) << "\n";
    return 0;
  }

  if (solve->parsed()) {
    ExperimentConfig cfg;
    cfg.problem_file = solve_problem;
    cfg.solvers = {solve_solver};
    cfg.seeds = {solve_seed};
    cfg.grad_tol = solve_tol;
    cfg.max_iters = solve_max_iters;
    cfg.fd_hvp = solve_fd_hvp;
    cfg.warm_start_gd = solve_warm_start;
    if (!solve_config.empty()) apply_config_file(solve_config, cfg);
    const LqrProblem P = read_problem(solve_problem);
    if (!solve_k0.empty()) cfg.K0 = parse_gain(solve_k0, P.m(), P.r());
    if (!solve_out.empty()) {
      cfg.out_dir = std::filesystem::path(solve_out).parent_path().string();
      if (cfg.out_dir.empty()) cfg.out_dir = ".";
    }
    const Report report = run_experiment(cfg);
    const RunSummary& s = report.runs.at(0);
    if (!s.error.empty()) {
      std::cerr << "run failed: " << s.error << "\n";
      return 1;
    }
    if (!solve_out.empty() && !s.trace_file.empty() &&
        s.trace_file != solve_out) {
      std::filesystem::rename(s.trace_file, solve_out);
    }
    std::cout << "status=" << s.status << " iters=" << s.iters
              << " final_f=" << fmt17(s.final_f)
              << " final_grad_norm=" << fmt17(s.final_grad_norm) << "\n";
    // A hybrid simulation that runs out its horizon is a completed run.
    const bool ok = s.status == "Converged" ||
                    (solve_solver == "hybrid" && s.status == "MaxIters");
    return ok ? 0 : 1;
  }

  if (bench->parsed()) {
    ExperimentConfig cfg;
    cfg.problem_file = bench_problem;
    cfg.out_dir = bench_out;
    cfg.grad_tol = bench_tol;
    cfg.max_iters = bench_max_iters;
    std::stringstream ss(bench_solvers);
    std::string tok;
    while (std::getline(ss, tok, ',')) cfg.solvers.push_back(tok);
    cfg.seeds.clear();
    std::stringstream sd(bench_seeds);
    while (std::getline(sd, tok, ',')) cfg.seeds.push_back(std::stoull(tok));
    if (!bench_config.empty()) apply_config_file(bench_config, cfg);
    const LqrProblem P = read_problem(bench_problem);
    if (!bench_k0.empty()) cfg.K0 = parse_gain(bench_k0, P.m(), P.r());
    const Report report = run_experiment(cfg);
    bool all_converged = true;
    for (const RunSummary& s : report.runs) {
      std::cout << s.solver << " seed=" << s.seed << " status=" << s.status
                << " iters=" << s.iters << " final_f=" << fmt17(s.final_f);
      if (!s.error.empty()) std::cout << " error=" << s.error;
      std::cout << "\n";
      all_converged = all_converged && s.status == "Converged";
    }
    std::cout << "report: " << bench_out << "/report.json\n";
    return all_converged ? 0 : 1;
  }

  if (oracle->parsed()) {
    const LqrProblem P = read_problem(oracle_problem);
    const Gain K0 = oracle_k0.empty()
                        ? default_initial_gain(P)
                        : parse_gain(oracle_k0, P.m(), P.r());
    const Gain K_star = care_oracle(P, K0);
    const CostGradient cg = cost_and_gradient(P, K_star);
    nlohmann::json j;
    j["K_star"] = nlohmann::json::array();
    for (Eigen::Index i = 0; i < K_star.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < K_star.cols(); ++c) row.push_back(K_star(i, c));
      j["K_star"].push_back(std::move(row));
    }
    j["f_star"] = cg.f;
    j["grad_norm"] = cg.grad.norm();
    std::cout << j.dump(2) << "\n";
    return 0;
  }

  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
