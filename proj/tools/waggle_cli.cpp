// waggle: command-line front end for simulation, learning runs, metrics,
// bound checks, batch benchmarks and the live session server.

#include <csignal>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "waggle/closed_loop.hpp"
#include "waggle/config.hpp"
#include "waggle/controllers.hpp"
#include "waggle/convergence.hpp"
#include "waggle/error.hpp"
#include "waggle/harness.hpp"
#include "waggle/hkb.hpp"
#include "waggle/metrics.hpp"
#include "waggle/service/server.hpp"
#include "waggle/sigproc.hpp"

namespace fs = std::filesystem;
using namespace waggle;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

KeyValueConfig load_optional(const std::string& path) {
  return path.empty() ? KeyValueConfig{} : KeyValueConfig::load(path);
}

State4 parse_state(const std::string& text) {
  State4 x = State4::Zero();
  if (text.empty()) return x;
  std::istringstream in(text);
  std::string part;
  int i = 0;
  while (std::getline(in, part, ',')) {
    auto v = parse_double(part);
    if (!v || i >= 4) throw ConfigError("--x0 expects four comma-separated numbers");
    x[i++] = *v;
  }
  if (i != 4) throw ConfigError("--x0 expects four comma-separated numbers");
  return x;
}

IlcGains resolve_gains(int dyad, double kp, double kv, double ks) {
  IlcGains g = gain_preset(dyad);
  if (!std::isnan(kp)) g.kp = kp;
  if (!std::isnan(kv)) g.kv = kv;
  if (!std::isnan(ks)) g.ks = ks;
  g.validate();
  return g;
}

struct Common {
  std::string out_root = "out";
  std::string run_id;
};

fs::path run_dir(const Common& c, const std::string& fallback) {
  const fs::path dir = fs::path(c.out_root) / (c.run_id.empty() ? fallback : c.run_id);
  fs::create_directories(dir);
  return dir;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--out", c.out_root, "Output root directory")->capture_default_str();
  cmd->add_option("--run-id", c.run_id, "Run directory name under the output root");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coordination-game simulation, learning control and analysis toolkit"};
  app.require_subcommand(1);

  // simulate
  Common sim_c;
  std::string sim_cfg, sim_x0 = "0.1,0,0.1,0";
  auto* sim = app.add_subcommand("simulate", "Unforced oscillator run (keys: alpha beta gamma omega dt T)");
  add_common(sim, sim_c);
  sim->add_option("-c,--config", sim_cfg, "Key-value parameter file");
  sim->add_option("--x0", sim_x0, "Initial state x1,x2,x3,x4")->capture_default_str();

  // ilc
  Common ilc_c;
  std::string ilc_hp, ilc_feature, ilc_channel = "position";
  int ilc_dyad = 1, ilc_iters = 20;
  double ilc_kp = NAN, ilc_kv = NAN, ilc_ks = NAN, ilc_dt = 0.01, ilc_T = 30.0;
  auto* ilc = app.add_subcommand("ilc", "Trial-to-trial learning against a recorded or synthetic target");
  add_common(ilc, ilc_c);
  ilc->add_option("--hp", ilc_hp, "Target trajectory CSV (synthetic oracle when omitted)");
  ilc->add_option("--feature", ilc_feature, "Solo recording CSV used as the prescribed feature");
  ilc->add_option("--feature-channel", ilc_channel)->check(CLI::IsMember({"position", "velocity"}));
  ilc->add_option("--dyad", ilc_dyad, "Gain preset 1-4")->check(CLI::Range(1, 4))->capture_default_str();
  ilc->add_option("--kp", ilc_kp);
  ilc->add_option("--kv", ilc_kv);
  ilc->add_option("--ks", ilc_ks);
  ilc->add_option("--iters", ilc_iters)->capture_default_str();
  ilc->add_option("--dt", ilc_dt, "Synthetic target step")->capture_default_str();
  ilc->add_option("--T", ilc_T, "Synthetic target horizon")->capture_default_str();

  // metrics
  Common met_c;
  std::string met_leader, met_follower;
  auto* met = app.add_subcommand("metrics", "RMSE, CV and SVM of a leader/follower pair");
  add_common(met, met_c);
  met->add_option("leader", met_leader)->required();
  met->add_option("follower", met_follower)->required();

  // bounds
  Common bnd_c;
  int bnd_dyad = 1, bnd_iters = 20;
  double bnd_kp = NAN, bnd_kv = NAN, bnd_ks = 0.0, bnd_dt = 0.01, bnd_T = 30.0, bnd_lambda = 1.0;
  std::string bnd_output = "position";
  auto* bnd = app.add_subcommand("bounds", "Convergence constants and measured error norms on a synthetic oracle");
  add_common(bnd, bnd_c);
  bnd->add_option("--dyad", bnd_dyad)->check(CLI::Range(1, 4))->capture_default_str();
  bnd->add_option("--kp", bnd_kp);
  bnd->add_option("--kv", bnd_kv);
  bnd->add_option("--ks", bnd_ks)->capture_default_str();
  bnd->add_option("--iters", bnd_iters)->capture_default_str();
  bnd->add_option("--dt", bnd_dt)->capture_default_str();
  bnd->add_option("--T", bnd_T)->capture_default_str();
  bnd->add_option("--lambda", bnd_lambda)->capture_default_str();
  bnd->add_option("--output", bnd_output, "Output matrix")->check(CLI::IsMember({"position", "velocity"}));

  // bench
  Common bench_c;
  std::string bench_cfg;
  std::vector<int> bench_dyads{1, 2, 3, 4};
  std::vector<std::string> bench_strategies{"ilc", "pdc", "opc"};
  bool bench_traj = false;
  auto* bench = app.add_subcommand("bench", "Benchmark-matching experiment over dyads and strategies");
  add_common(bench, bench_c);
  bench->add_option("-c,--config", bench_cfg, "Key-value dyad template (see dyad_config_from)");
  bench->add_option("--dyads", bench_dyads, "Gain presets to run")->check(CLI::Range(1, 4));
  bench->add_option("--strategies", bench_strategies)->check(CLI::IsMember({"ilc", "pdc", "opc"}));
  bench->add_flag("--trajectories", bench_traj, "Write per-trial leader/follower CSVs");

  // serve
  std::string srv_host = "127.0.0.1", srv_archive;
  int srv_port = 8765;
  auto* srv = app.add_subcommand("serve", "Live session server (line-delimited JSON or WebSocket)");
  srv->add_option("--host", srv_host)->capture_default_str();
  srv->add_option("--port", srv_port)->check(CLI::Range(0, 65535))->capture_default_str();
  srv->add_option("--archive", srv_archive, "Directory for closed-session archives");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      const KeyValueConfig cfg = load_optional(sim_cfg);
      const HkbParams xi = hkb_params_from(cfg);
      const double dt = cfg.get_double("dt", 0.01);
      const double T = cfg.get_double("T", 10.0);
      const Trajectory traj = simulate_free(parse_state(sim_x0), xi, dt, T);
      const fs::path dir = run_dir(sim_c, "simulate");
      save_csv(traj, dir / "trajectory.csv");
      std::cout << "samples = " << traj.size() << "\nwrote " << (dir / "trajectory.csv").string() << "\n";
    } else if (*ilc) {
      const IlcGains gains = resolve_gains(ilc_dyad, ilc_kp, ilc_kv, ilc_ks);
      PlantModel plant;
      Trajectory hp(ilc_dt);
      if (ilc_hp.empty()) {
        hp = make_synthetic_oracle(plant.xi, ilc_dt, ilc_T).hp;
      } else {
        hp = load_csv(ilc_hp);
      }
      std::optional<FeatureSignal> feature;
      if (!ilc_feature.empty())
        feature = FeatureSignal::from_recording(
            load_csv(ilc_feature), ilc_channel == "position" ? FeatureChannel::position : FeatureChannel::velocity,
            hp.dt(), hp.size());
      const IlcTrialResult r = run_ilc_trial(plant, hp, feature, gains, ilc_iters);
      const fs::path dir = run_dir(ilc_c, "ilc");
      std::string csv = "k,rmse\n";
      for (std::size_t k = 0; k < r.rmse.size(); ++k) csv += std::to_string(k) + "," + format_double(r.rmse[k]) + "\n";
      write_text(dir / "report.csv", csv);
      save_csv(hp, dir / "hp.csv");
      save_csv(r.trajectories.back(), dir / "vp_final.csv");
      r.final_buffer().save_csv(dir / "buffer_final.csv");
      std::cout << csv;
    } else if (*met) {
      const MetricsReport r = compute_metrics(load_csv(met_leader), load_csv(met_follower));
      const fs::path dir = run_dir(met_c, "metrics");
      write_text(dir / "report.csv", metrics_csv_header() + "\n" + to_csv_row(r) + "\n");
      std::cout << to_key_value(r);
    } else if (*bnd) {
      IlcGains gains = resolve_gains(bnd_dyad, bnd_kp, bnd_kv, bnd_ks);
      const HkbParams xi;
      const SyntheticOracle o = make_synthetic_oracle(xi, bnd_dt, bnd_T);
      const IlcTrialResult trial = run_ilc_trial(PlantModel{xi, o.x0}, o.hp, std::nullopt, gains, bnd_iters);
      const StateEnvelope env = StateEnvelope::from_trajectories(trial.trajectories);
      const double c_h = lipschitz_constant(env, xi);
      const OutputVariant out = bnd_output == "velocity" ? OutputVariant::velocity : OutputVariant::position;
      const fs::path dir = run_dir(bnd_c, "bounds");
      auto report_at = [&](double lambda) {
        BoundReport rep = sigma_components(gains, c_h, BoundConfig{lambda, bnd_T, out});
        empirical_contraction(rep, trial, o.u_h, o.hp);
        return rep;
      };
      const BoundReport main_rep = report_at(bnd_lambda);
      write_text(dir / "bounds.csv", bounds_csv(main_rep));
      std::string text = "[lambda " + format_double(bnd_lambda) + "]\n" + to_text(main_rep);
      for (double lambda : {0.1, 1.0, 10.0}) {
        const BoundReport rep = report_at(lambda);
        const std::string tag = format_double(lambda);
        write_text(dir / ("bounds_lambda_" + tag + ".csv"), bounds_csv(rep));
        text += "\n[sweep lambda " + tag + "]\n" + to_text(rep);
      }
      write_text(dir / "report.txt", text);
      std::cout << text;
    } else if (*bench) {
      KeyValueConfig tmpl = load_optional(bench_cfg);
      StrategyTable table;
      std::vector<DyadMetrics> benchmark;
      const fs::path dir = run_dir(bench_c, "bench");
      std::string trials;
      for (const auto& strategy : bench_strategies) {
        std::vector<DyadMetrics> rows;
        for (int dyad : bench_dyads) {
          KeyValueConfig cfg = tmpl;
          cfg.set("controller", strategy);
          cfg.set("dyad", std::to_string(dyad));
          cfg.set("id", "dyad" + std::to_string(dyad));
          if (!tmpl.contains("seed")) cfg.set("seed", std::to_string(dyad));
          const DyadResult r = run_dyad(dyad_config_from(cfg));
          std::cerr << strategy << " " << r.id << ": " << r.trials_succeeded << "/" << r.trials_attempted
                    << " trials, rmse " << format_double(r.summary.rmse.mean) << "\n";
          const std::string csv = trials_csv(r);
          trials += trials.empty() ? csv : csv.substr(csv.find('\n') + 1);
          rows.push_back({r.id, r.summary.rmse.mean, r.summary.cv.mean, r.summary.svm.mean});
          if (strategy == bench_strategies.front())
            benchmark.push_back({r.id, r.benchmark.rmse.mean, r.benchmark.cv.mean, r.benchmark.svm.mean});
          if (bench_traj)
            for (const auto& t : r.trials) {
              if (t.failed) continue;
              const std::string stem = strategy + "_" + r.id + "_trial" + std::to_string(t.index);
              save_csv(t.leader, dir / "trials" / (stem + "_hp.csv"));
              save_csv(t.follower, dir / "trials" / (stem + "_vp.csv"));
            }
        }
        table.emplace_back(strategy, std::move(rows));
      }
      const MatchingReport rep = matching_report(table, benchmark);
      write_text(dir / "report.csv", report_csv(rep));
      write_text(dir / "radar.csv", radar_csv(rep));
      write_text(dir / "trials.csv", trials);
      std::cout << report_csv(rep);
    } else if (*srv) {
      service::ServerOptions opts;
      opts.host = srv_host;
      opts.port = static_cast<std::uint16_t>(srv_port);
      if (!srv_archive.empty()) opts.archive_dir = srv_archive;
      service::Server server(opts);
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      server.start();
      std::cout << "listening on " << srv_host << ":" << server.port() << std::endl;
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      server.stop();
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
