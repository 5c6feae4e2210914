#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "stable_bicycle/config.hpp"
#include "stable_bicycle/csv.hpp"
#include "stable_bicycle/nmpc.hpp"
#include "stable_bicycle/sim.hpp"
#include "stable_bicycle/stability.hpp"

#ifndef STABLE_BICYCLE_VERSION
#define STABLE_BICYCLE_VERSION "0.0.0"
#endif

namespace stable_bicycle::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 1;
  bool seed_given = false;
  unsigned jobs = 1;
  std::string integrator;
};

class RunContext {
 public:
  RunContext(std::string subcommand, const Options& opts, std::ostream& out)
      : subcommand_(std::move(subcommand)), opts_(opts), out_(out) {
    config_ = opts.config_path.empty() ? Config::parse("") : Config::load(opts.config_path);
    dir_ = opts.out_dir;
    if (dir_.empty()) {
      const char* env = std::getenv("STABLE_BICYCLE_OUT");
      dir_ = env && *env ? env : "out";
    }
    fs::create_directories(dir_);
    write_manifest();
  }

  const Config& config() const { return config_; }
  const Options& options() const { return opts_; }
  std::ostream& out() { return out_; }

  std::ofstream open(const std::string& name) const {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir_ / name).string());
    return f;
  }

 private:
  void write_manifest() const {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);

    auto f = open("manifest.txt");
    f << "subcommand=" << subcommand_ << '\n'
      << "config=" << (opts_.config_path.empty() ? "(defaults)" : opts_.config_path) << '\n'
      << "out=" << dir_.string() << '\n'
      << "seed=" << opts_.seed << '\n'
      << "jobs=" << opts_.jobs << '\n'
      << "integrator=" << (opts_.integrator.empty() ? "(config)" : opts_.integrator) << '\n'
      << "version=" << STABLE_BICYCLE_VERSION << '\n'
      << "timestamp=" << stamp << '\n';
  }

  std::string subcommand_;
  Options opts_;
  std::ostream& out_;
  Config config_;
  fs::path dir_;
};

Scenario scenario_with_override(const RunContext& ctx) {
  Scenario sc = load_scenario(ctx.config());
  if (!ctx.options().integrator.empty()) sc.integrator = parse_integrator(ctx.options().integrator);
  return sc;
}

int cmd_sweep(RunContext& ctx) {
  const VehicleParams p = load_vehicle(ctx.config());
  const SweepConfig cfg = load_sweep(ctx.config());
  const auto res = sweep_condition1(p, cfg.u_min, cfg.u_max, cfg.n_grid, cfg.dts,
                                    {.tolerance = cfg.tolerance, .jobs = ctx.options().jobs});
  {
    auto f = ctx.open("sweep.csv");
    csv::write_sweep(f, res);
  }
  double max_radius = 0.0;
  for (const auto& c : res.cells) max_radius = std::max(max_radius, c.radius);

  ctx.out() << "max_norm=" << csv::num(res.max_norm) << " violations=" << res.violations.size()
            << '\n';
  ctx.out() << "max_spectral_radius=" << csv::num(max_radius) << '\n';
  if (!res.violations.empty()) {
    const auto& first = res.cells[res.violations.front()];
    ctx.out() << "first_violation U_mid=" << csv::num(first.u_mid) << " T_s=" << csv::num(first.dt)
              << " norm=" << csv::num(first.norm) << '\n';
  }
  if (cfg.pairwise_grid > 0) {
    const auto pw = sweep_condition1_pairwise(p, cfg.u_min, cfg.u_max, cfg.pairwise_grid, cfg.dts);
    ctx.out() << "pairwise_max_norm=" << csv::num(pw.max_norm) << " at U_row1="
              << csv::num(pw.worst_u_row1) << " U_row2=" << csv::num(pw.worst_u_row2)
              << " T_s=" << csv::num(pw.worst_dt) << '\n';
  }
  return res.holds() ? kOk : kStabilityViolation;
}

int cmd_simulate(RunContext& ctx) {
  const Scenario sc = scenario_with_override(ctx);
  const Trajectory traj = run_scenario(sc);
  {
    auto f = ctx.open("trajectory.csv");
    csv::write_trajectory(f, traj);
  }
  {
    auto f = ctx.open("summary.csv");
    f << "scenario,integrator,T_s,samples,diverged,divergence_time\n"
      << sc.name << ',' << traj.integrator << ',' << csv::num(traj.dt) << ',' << traj.size() << ','
      << (traj.diverged ? "true" : "false") << ','
      << (traj.divergence_time ? csv::num(*traj.divergence_time) : "") << '\n';
  }
  ctx.out() << "integrator=" << traj.integrator << " samples=" << traj.size()
            << " diverged=" << (traj.diverged ? "true" : "false") << '\n';
  return kOk;
}

int cmd_compare(RunContext& ctx) {
  const VehicleParams p = load_vehicle(ctx.config());
  CompareConfig cfg = load_compare(ctx.config());
  cfg.accuracy.jobs = ctx.options().jobs;
  const auto reports = accuracy_table(p, cfg.u0s, cfg.steers, cfg.accuracy);
  {
    auto f = ctx.open("rms.csv");
    csv::write_rms_reports(f, reports);
  }
  std::size_t aborted = 0;
  std::size_t improved = 0;
  for (const auto& r : reports) {
    if (r.error) {
      ++aborted;
      ctx.out() << "cell U0=" << csv::num(r.u0) << " delta=" << csv::num(r.steer)
                << " aborted: " << *r.error << '\n';
    } else if (r.improvement_pct > 0.0) {
      ++improved;
    }
  }
  ctx.out() << "cells=" << reports.size() << " improved=" << improved << " aborted=" << aborted
            << '\n';
  return aborted > 0 ? kPartialResults : kOk;
}

int cmd_bench(RunContext& ctx) {
  const VehicleParams p = load_vehicle(ctx.config());
  const BenchConfig cfg = load_bench(ctx.config());
  auto f = ctx.open("bench.csv");
  f << "repeat,integrator,n_steps,mean_us,median_us,p95_us,total_ms\n";
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    const BenchmarkResult b = timing_benchmark(p, cfg.n_steps);
    for (const auto& [name, s] : {std::pair{"proposed", b.proposed}, {"kinematic", b.kinematic}}) {
      f << r << ',' << name << ',' << b.n_steps << ',' << csv::num(s.mean_us) << ','
        << csv::num(s.median_us) << ',' << csv::num(s.p95_us) << ',' << csv::num(s.total_ms)
        << '\n';
    }
    ctx.out() << "repeat=" << r << " proposed_mean_us=" << csv::num(b.proposed.mean_us)
              << " kinematic_mean_us=" << csv::num(b.kinematic.mean_us) << '\n';
  }
  return kOk;
}

int cmd_noise(RunContext& ctx) {
  Scenario base = ctx.config().has_section("scenario") ? scenario_with_override(ctx)
                                                       : default_noise_scenario();
  if (!ctx.config().has_section("scenario")) {
    base.params = load_vehicle(ctx.config());
    if (!ctx.options().integrator.empty()) {
      base.integrator = parse_integrator(ctx.options().integrator);
    }
  }
  NoiseConfig cfg = load_noise(ctx.config());
  if (ctx.options().seed_given) cfg.seed = ctx.options().seed;

  auto summary = ctx.open("noise_summary.csv");
  auto traj = ctx.open("noise_trajectories.csv");
  summary << "seed,sigma,final_deviation,max_deviation,finite\n";
  traj << "seed,sigma,t,X,Y,phi,U,V,omega,a,delta,deviation\n";
  for (std::size_t i = 0; i < cfg.seeds; ++i) {
    const std::uint64_t seed = cfg.seed + i;
    for (double sigma : cfg.sigmas) {
      const NoiseRun run = run_noise_robustness(base, {sigma, seed});
      double max_dev = 0.0;
      for (double d : run.deviation) max_dev = std::max(max_dev, d);
      const double final_dev = run.deviation.empty() ? 0.0 : run.deviation.back();
      const bool finite = !run.trajectory.diverged;
      summary << seed << ',' << csv::num(sigma) << ',' << csv::num(final_dev) << ','
              << csv::num(max_dev) << ',' << (finite ? "true" : "false") << '\n';
      for (std::size_t k = 0; k < run.trajectory.size(); ++k) {
        const Sample& s = run.trajectory.samples[k];
        traj << seed << ',' << csv::num(sigma) << ',' << csv::num(s.t) << ','
             << csv::num(s.state.x) << ',' << csv::num(s.state.y) << ',' << csv::num(s.state.yaw)
             << ',' << csv::num(s.state.u) << ',' << csv::num(s.state.v) << ','
             << csv::num(s.state.yaw_rate) << ',' << csv::num(s.input.accel) << ','
             << csv::num(s.input.steer) << ','
             << csv::num(k < run.deviation.size() ? run.deviation[k] : std::nan("")) << '\n';
      }
      ctx.out() << "seed=" << seed << " sigma=" << csv::num(sigma)
                << " final_deviation=" << csv::num(final_dev) << '\n';
    }
  }
  return kOk;
}

int cmd_mpc(RunContext& ctx) {
  const VehicleParams p = load_vehicle(ctx.config());
  const MpcConfig cfg = load_mpc(ctx.config());
  const ClosedLoopResult res =
      cfg.obstacle_enabled
          ? run_closed_loop(p, cfg.spec, cfg.reference, cfg.obstacle, cfg.initial, cfg.duration)
          : run_closed_loop(p, cfg.spec, cfg.reference, cfg.initial, cfg.duration);
  {
    auto f = ctx.open("closed_loop.csv");
    csv::write_closed_loop(f, res);
  }
  double closest = INFINITY;
  for (const auto& s : res.trajectory.samples) {
    closest = std::min(closest, std::hypot(s.state.x - cfg.reference.target.x,
                                           s.state.y - cfg.reference.target.y));
  }
  auto opt = [](const std::optional<double>& v) { return v ? csv::num(*v) : std::string("none"); };
  const double margin = cfg.obstacle_enabled
                            ? res.min_obstacle_distance - cfg.spec.safe_distance
                            : INFINITY;
  ctx.out() << "stop_time=" << opt(res.stop_time) << " relocation_time="
            << opt(res.relocation_time) << " min_obstacle_margin=" << csv::num(margin)
            << " closest_to_target=" << csv::num(closest) << '\n';
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stable explicit single-track vehicle model experiments"};
  app.require_subcommand(1);
  Options opts;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "Experiment config file");
    sub->add_option("--out", opts.out_dir, "Output directory (default $STABLE_BICYCLE_OUT or ./out)");
    sub->add_option("--seed", opts.seed, "RNG seed");
    sub->add_option("--jobs", opts.jobs, "Worker threads for sweep/compare")
        ->check(CLI::PositiveNumber);
    sub->add_option("--integrator", opts.integrator, "Override the scenario integrator")
        ->check(CLI::IsMember({"forward_euler", "backward_euler", "proposed", "kinematic"}));
  };

  using Handler = int (*)(RunContext&);
  const std::vector<std::tuple<std::string, std::string, Handler>> commands{
      {"sweep", "Condition-1 norm sweep over speed and step size", cmd_sweep},
      {"simulate", "Open-loop scenario with one integrator", cmd_simulate},
      {"compare", "Dynamic vs kinematic accuracy grid against the RK4 reference", cmd_compare},
      {"bench", "Per-step latency of the proposed and kinematic steps", cmd_bench},
      {"noise", "Steering-noise robustness runs", cmd_noise},
      {"mpc", "Closed-loop stop-start NMPC run", cmd_mpc},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help, handler] : commands) {
    subs.push_back(app.add_subcommand(name, help));
    add_common(subs.back());
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kConfigError;
  }
  for (auto* s : subs) {
    if (s->parsed()) {
      if (s->count("--help")) return kOk;
      opts.seed_given = s->count("--seed") > 0;
    }
  }

  for (std::size_t i = 0; i < commands.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    try {
      RunContext ctx(std::get<0>(commands[i]), opts, out);
      return std::get<2>(commands[i])(ctx);
    } catch (const ConfigError& e) {
      err << "config error: " << e.what() << '\n';
    } catch (const std::invalid_argument& e) {
      err << "config error: " << e.what() << '\n';
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
    }
    return kConfigError;
  }
  return kConfigError;
}

}  // namespace stable_bicycle::cli
