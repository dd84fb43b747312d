#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rba/bgk.hpp"
#include "rba/particle.hpp"

namespace rba {

/// Locale-independent decimal formatting with 17 significant digits (the
/// shortest form that round-trips a double exactly is not needed; 17 always
/// round-trips).
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct SweepSpec {
  std::vector<double> rho_values;
  std::vector<double> c_init_values;
  int replicates = 1;
  SimConfig sim;  // template; rho / init / seed are filled per record

  void validate() const {
    if (rho_values.empty() || c_init_values.empty()) {
      throw std::invalid_argument("sweep grids must be non-empty");
    }
    if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  }

  std::size_t size() const {
    return rho_values.size() * c_init_values.size() * static_cast<std::size_t>(replicates);
  }
};

struct RunRecord {
  double rho = 0.0;
  double c_initial = 0.0;
  double c_final = 0.0;
  std::uint64_t seed = 0;
  double wall_time = 0.0;  // informational; never written to the CSV
  std::string status = "ok";
};

/// Default grid: rho log-dense in [4, 7] around the transition, coarser
/// wings, paired with a spread of initial order parameters.
inline SweepSpec default_sweep_spec() {
  SweepSpec spec;
  for (int i = 0; i < 6; ++i) spec.rho_values.push_back(2.0 + i * (2.0 / 6.0));
  for (int i = 0; i <= 20; ++i) {
    spec.rho_values.push_back(4.0 * std::pow(7.0 / 4.0, i / 20.0));
  }
  for (int i = 1; i <= 6; ++i) spec.rho_values.push_back(7.0 + i * (5.0 / 6.0));
  spec.c_init_values = {0.05, 0.25, 0.45, 0.65, 0.9};
  spec.replicates = 1;
  spec.sim.n_particles = 500;
  spec.sim.dt = 0.04;
  spec.sim.n_steps = 500;  // t = 20
  return spec;
}

/// Runs the grid with a deterministic seed per record, in parallel across
/// records. Results are indexed by record position, so output bytes do not
/// depend on the worker count.
inline std::vector<RunRecord> run_sweep(const SweepSpec& spec, unsigned n_workers) {
  spec.validate();
  const std::size_t n = spec.size();
  std::vector<RunRecord> records(n);
  const std::size_t n_c = spec.c_init_values.size();
  const std::size_t n_rep = static_cast<std::size_t>(spec.replicates);

  std::atomic<std::size_t> cursor{0};
  auto work = [&]() {
    for (;;) {
      const std::size_t r = cursor.fetch_add(1);
      if (r >= n) return;
      const std::size_t i_rho = r / (n_c * n_rep);
      const std::size_t i_c = (r / n_rep) % n_c;
      RunRecord& rec = records[r];
      rec.rho = spec.rho_values[i_rho];
      rec.c_initial = spec.c_init_values[i_c];
      rec.seed = detail::mix(spec.sim.seed, r);
      const auto t0 = std::chrono::steady_clock::now();
      try {
        SimConfig cfg = spec.sim;
        cfg.rho = rec.rho;
        cfg.seed = rec.seed;
        cfg.init = InitMode::VonMisesTargetC;
        cfg.c_target = rec.c_initial;
        const TimeSeries ts = run(cfg);
        rec.c_final = ts.c_values.back();
      } catch (const std::exception& e) {
        rec.status = std::string("error: ") + e.what();
        rec.c_final = std::numeric_limits<double>::quiet_NaN();
      }
      rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };

  if (n_workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n_workers; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  return records;
}

inline unsigned worker_count_from_env() {
  if (const char* env = std::getenv("RBA_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

// --- CSV writers (stable schemas, LF endings) --------------------------------

inline std::string timeseries_csv(const TimeSeries& ts) {
  std::string out = "t,c,flux_norm\n";
  for (std::size_t i = 0; i < ts.times.size(); ++i) {
    out += fmt17(ts.times[i]);
    out += ',';
    out += fmt17(ts.c_values[i]);
    out += ',';
    out += fmt17(ts.flux_norms[i]);
    out += '\n';
  }
  return out;
}

inline std::string sweep_csv(const std::vector<RunRecord>& records) {
  std::string out = "rho,c_initial,c_final,seed,status\n";
  for (const auto& r : records) {
    out += fmt17(r.rho);
    out += ',';
    out += fmt17(r.c_initial);
    out += ',';
    out += fmt17(r.c_final);
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += r.status;
    out += '\n';
  }
  return out;
}

/// Branch order parameters on a rho grid; cells outside a branch's domain are
/// left empty.
inline std::string branches_csv(const std::vector<double>& rho_grid) {
  const BranchTables& t = branch_tables();
  std::string out = "rho,c1_up,c1_down,c2,uniform_stable_flag\n";
  for (double rho : rho_grid) {
    out += fmt17(rho);
    out += ',';
    if (rho >= t.rho_star) {
      out += fmt17(t.c1_up(rho));
      out += ',';
      out += fmt17(t.c1_down(rho));
    } else {
      out += ',';
    }
    out += ',';
    if (rho >= t.rho_c) out += fmt17(t.c2_tilde(rho));
    out += ',';
    out += rho < t.rho_c ? '1' : '0';
    out += '\n';
  }
  return out;
}

inline std::string bgk_trajectory_csv(const BgkTrajectory& traj) {
  std::string out = "t,d1,d2,d3,V\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    out += fmt17(traj.times[i]);
    out += ',';
    out += fmt17(traj.d_values[i][0]);
    out += ',';
    out += fmt17(traj.d_values[i][1]);
    out += ',';
    out += fmt17(traj.d_values[i][2]);
    out += ',';
    out += fmt17(traj.v_values[i]);
    out += '\n';
  }
  return out;
}

inline std::vector<double> log_spaced(double lo, double hi, int n) {
  std::vector<double> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    out.push_back(lo * std::pow(hi / lo, n == 1 ? 0.0 : static_cast<double>(i) / (n - 1)));
  }
  return out;
}

}  // namespace rba
