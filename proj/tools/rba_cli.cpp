// Command-line front end: reproduces the simulation, threshold, branch-curve
// and BGK-flow datasets as CSV/JSON with deterministic seeding.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "rba/experiments.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitDomain = 3;
constexpr int kExitNonConvergence = 4;

void write_output(const std::string& content, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);  // binary keeps LF endings everywhere
  if (!f) throw std::runtime_error("cannot open output file: " + out_path);
  f << content;
}

rba::InitMode parse_init(const std::string& s, double& c_target) {
  if (s == "aligned") return rba::InitMode::Aligned;
  if (s == "uniform") return rba::InitMode::Uniform;
  if (s.rfind("vmc:", 0) == 0) {
    c_target = std::stod(s.substr(4));
    return rba::InitMode::VonMisesTargetC;
  }
  throw std::invalid_argument("--init expects aligned, uniform or vmc:<c>");
}

json eq_to_json(const rba::EquilibriumClass& eq) {
  json j;
  j["class"] = rba::to_string(eq.tag);
  j["alpha"] = eq.alpha;
  if (eq.tag == rba::EqTag::AxialUp || eq.tag == rba::EqTag::AxialDown) {
    json frame = json::array();
    for (int r = 0; r < 3; ++r) {
      frame.push_back({eq.frame(r, 0), eq.frame(r, 1), eq.frame(r, 2)});
    }
    j["A0"] = frame;
  }
  if (eq.tag == rba::EqTag::Rank1) {
    j["a0"] = {eq.a0[0], eq.a0[1], eq.a0[2]};
    j["b0"] = {eq.b0[0], eq.b0[1], eq.b0[2]};
  }
  return j;
}

rba::Mat3 bgk_initial_matrix(const std::string& init, std::uint64_t seed) {
  rba::Rng rng = rba::Rng::stream(seed, 0xB6B);
  if (init == "random") {
    rba::Mat3 j;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) j(r, c) = rng.gauss();
    }
    return j;
  }
  if (init == "rotation") return rba::haar_sample(rng);
  if (init == "rank1") {
    const rba::Vec3 a = rng.gauss3().normalized();
    const rba::Vec3 b = rng.gauss3().normalized();
    return std::sqrt(3.0) * a * b.transpose();
  }
  if (init == "small") {
    rba::Mat3 j;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) j(r, c) = 0.05 * rng.gauss();
    }
    return j;
  }
  // otherwise: nine comma-separated reals, row-major
  std::vector<double> v;
  std::stringstream ss(init);
  std::string tok;
  while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
  if (v.size() != 9) {
    throw std::invalid_argument("--init expects a preset or nine comma-separated reals");
  }
  rba::Mat3 j;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) j(r, c) = v[3 * r + c];
  }
  return j;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Collective alignment of rigid bodies on SO(3): simulation and steady-state analysis"};
  app.require_subcommand(1);
  app.fallthrough();  // --out / --format may follow the subcommand name

  std::string out_path;
  std::string format = "csv";
  app.add_option("--out", out_path, "output path (default: stdout)")->capture_default_str();
  app.add_option("--format", format, "csv|json")->check(CLI::IsMember({"csv", "json"}));

  rba::SimConfig sim;
  std::string init_str = "uniform";

  auto add_sim_flags = [&](CLI::App* cmd) {
    cmd->add_option("--rho", sim.rho, "alignment intensity");
    cmd->add_option("--n", sim.n_particles, "number of particles")->capture_default_str();
    cmd->add_option("--dt", sim.dt, "time step")->capture_default_str();
    cmd->add_option("--steps", sim.n_steps, "number of time iterations")->capture_default_str();
    cmd->add_option("--seed", sim.seed, "RNG seed")->capture_default_str();
    cmd->add_option("--init", init_str, "aligned|uniform|vmc:<c>")->capture_default_str();
  };

  auto* cmd_simulate = app.add_subcommand("simulate", "one run, CSV time series of the order parameter");
  add_sim_flags(cmd_simulate);

  auto* cmd_sweep = app.add_subcommand("sweep", "grid of runs over (rho, initial c), CSV of final order parameters");
  std::vector<double> sweep_rhos, sweep_cinits;
  int replicates = 1;
  cmd_sweep->add_option("--rhos", sweep_rhos, "rho grid (default: log-dense in [4,7] plus wings)");
  cmd_sweep->add_option("--cinits", sweep_cinits, "initial order parameter grid");
  cmd_sweep->add_option("--replicates", replicates, "replicates per grid point")->capture_default_str();
  cmd_sweep->add_option("--n", sim.n_particles, "number of particles")->capture_default_str();
  cmd_sweep->add_option("--dt", sim.dt, "time step")->capture_default_str();
  cmd_sweep->add_option("--steps", sim.n_steps, "time iterations per run")->capture_default_str();
  cmd_sweep->add_option("--seed", sim.seed, "master seed")->capture_default_str();

  auto* cmd_thresholds = app.add_subcommand("thresholds", "phase-transition thresholds as JSON");

  auto* cmd_branches = app.add_subcommand("branches", "order-parameter branch curves as CSV");
  double rho_min = 2.0, rho_max = 40.0;
  int rho_points = 200;
  cmd_branches->add_option("--rho-min", rho_min)->capture_default_str();
  cmd_branches->add_option("--rho-max", rho_max)->capture_default_str();
  cmd_branches->add_option("--points", rho_points, "log-spaced point count")->capture_default_str();

  auto* cmd_bgk = app.add_subcommand("bgk", "flux-ODE trajectory (CSV) and limit classification (JSON)");
  double bgk_rho = 8.0;
  double bgk_tmax = 200.0;
  std::uint64_t bgk_seed = 0;
  std::string bgk_init = "random";
  cmd_bgk->add_option("--rho", bgk_rho, "alignment intensity")->capture_default_str();
  cmd_bgk->add_option("--init", bgk_init, "random|rotation|rank1|small or nine reals")->capture_default_str();
  cmd_bgk->add_option("--tmax", bgk_tmax, "integration horizon")->capture_default_str();
  cmd_bgk->add_option("--seed", bgk_seed, "seed for random presets")->capture_default_str();

  auto* cmd_classify = app.add_subcommand("classify", "steady-state families and stability at a given rho (JSON)");
  double classify_rho = 5.0;
  cmd_classify->add_option("--rho", classify_rho, "alignment intensity")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;  // --help exits cleanly
  }

  if (cmd_simulate->parsed()) {
    sim.init = parse_init(init_str, sim.c_target);
    sim.validate();
    const rba::TimeSeries ts = rba::run(sim);
    if (format == "json") {
      json j;
      j["t"] = ts.times;
      j["c"] = ts.c_values;
      j["flux_norm"] = ts.flux_norms;
      write_output(j.dump(2) + "\n", out_path);
    } else {
      write_output(rba::timeseries_csv(ts), out_path);
    }
    return kExitOk;
  }

  if (cmd_sweep->parsed()) {
    rba::SweepSpec spec = rba::default_sweep_spec();
    spec.sim.seed = sim.seed;
    if (cmd_sweep->count("--n")) spec.sim.n_particles = sim.n_particles;
    if (cmd_sweep->count("--dt")) spec.sim.dt = sim.dt;
    if (cmd_sweep->count("--steps")) spec.sim.n_steps = sim.n_steps;
    if (!sweep_rhos.empty()) spec.rho_values = sweep_rhos;
    if (!sweep_cinits.empty()) spec.c_init_values = sweep_cinits;
    spec.replicates = replicates;
    const auto records = rba::run_sweep(spec, rba::worker_count_from_env());
    if (format == "json") {
      json rows = json::array();
      for (const auto& r : records) {
        rows.push_back({{"rho", r.rho},
                        {"c_initial", r.c_initial},
                        {"c_final", r.c_final},
                        {"seed", r.seed},
                        {"status", r.status}});
      }
      write_output(rows.dump(2) + "\n", out_path);
    } else {
      write_output(rba::sweep_csv(records), out_path);
    }
    double total = 0.0;
    for (const auto& r : records) total += r.wall_time;
    std::cerr << records.size() << " runs, " << rba::fmt17(total) << " s of simulation time\n";
    return kExitOk;
  }

  if (cmd_thresholds->parsed()) {
    const rba::BranchTables t = rba::find_thresholds();
    json j;
    j["alpha_star"] = t.alpha_star;
    j["rho_star"] = t.rho_star;
    j["c_star"] = t.c_star;
    j["rho_c"] = t.rho_c;
    j["tolerances"]["minimizer_interval"] = 1e-10;
    j["tolerances"]["root_alpha"] = 1e-12;
    j["tolerances"]["quadrature_relative"] = 1e-12;
    write_output(j.dump(2) + "\n", out_path);
    return kExitOk;
  }

  if (cmd_branches->parsed()) {
    write_output(rba::branches_csv(rba::log_spaced(rho_min, rho_max, rho_points)), out_path);
    return kExitOk;
  }

  if (cmd_bgk->parsed()) {
    const rba::Mat3 j0 = bgk_initial_matrix(bgk_init, bgk_seed);
    const rba::BgkClassification res = rba::classify_limit(bgk_rho, j0, bgk_tmax);
    if (!out_path.empty() && out_path != "-") {
      write_output(rba::bgk_trajectory_csv(res.trajectory), out_path);
    }
    json j;
    j["status"] = res.status;
    j["critical_rho"] = res.critical;
    j["limit_diagonal"] = {res.raw_limit[0], res.raw_limit[1], res.raw_limit[2]};
    if (res.status == "ok") {
      j["equilibrium"] = eq_to_json(res.eq);
      json jinf = json::array();
      for (int r = 0; r < 3; ++r) {
        jinf.push_back({res.j_inf(r, 0), res.j_inf(r, 1), res.j_inf(r, 2)});
      }
      j["J_inf"] = jinf;
      try {
        j["decay_rate"] = rba::decay_rate_fit(res.trajectory);
      } catch (const rba::convergence_error&) {
        j["decay_rate"] = nullptr;
      }
    }
    std::cout << j.dump(2) << "\n";
    return res.status == "non_converged" ? kExitNonConvergence : kExitOk;
  }

  if (cmd_classify->parsed()) {
    const auto families = rba::classify_all(classify_rho);
    json arr = json::array();
    for (const auto& f : families) {
      json j = eq_to_json(f.eq);
      j["order_parameter"] = f.order_parameter;
      j["stability"] = f.label;
      j["critical"] = f.critical;
      j["signature"] = f.report.signature;
      j["hessian_eigenvalues"] = {f.report.eigenvalues[0], f.report.eigenvalues[1],
                                  f.report.eigenvalues[2]};
      j["local_min"] = f.report.is_local_min;
      arr.push_back(std::move(j));
    }
    json out;
    out["rho"] = classify_rho;
    out["families"] = arr;
    write_output(out.dump(2) + "\n", out_path);
    return kExitOk;
  }

  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const rba::envelope_error& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const std::domain_error& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const rba::convergence_error& e) {
    std::cerr << "did not converge: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
