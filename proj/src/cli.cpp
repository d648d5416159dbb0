#include "fic_teleop/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "fic_teleop/analysis.hpp"
#include "fic_teleop/live_session.hpp"
#include "fic_teleop/simulation.hpp"
#include "fic_teleop/ws_server.hpp"

namespace fic_teleop {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_interrupted{false};

struct ConfigArgs {
  std::string path;
  std::string preset = "nominal";
  std::string profile = "conservative";
  std::string controller;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
};

void add_config_options(CLI::App* app, ConfigArgs& a, const std::string& default_preset) {
  a.preset = default_preset;
  app->add_option("--config", a.path, "Config JSON; overlays the preset");
  app->add_option("--preset", a.preset, "Base config: nominal | button | impulse")
      ->check(CLI::IsMember({"nominal", "button", "impulse"}));
  app->add_option("--profile", a.profile, "Operator profile for the button preset")
      ->check(CLI::IsMember({"expert", "conservative"}));
  app->add_option("--controller", a.controller, "Replica controller: fic | ic")
      ->check(CLI::IsMember({"fic", "ic"}));
  app->add_option("--seed", a.seed, "Scenario seed");
  app->add_option("--duration", a.duration, "Simulated time limit, s");
}

SimConfig preset_config(const ConfigArgs& a) {
  if (a.preset == "button") return button_task_config(a.profile);
  if (a.preset == "impulse") return impulse_config(a.seed.value_or(1));
  return default_config();
}

/// Throws ConfigError.
SimConfig build_config(const ConfigArgs& a) {
  json j = to_json(preset_config(a));
  if (!a.path.empty()) {
    std::ifstream in(a.path);
    if (!in) throw ConfigError("cannot open config " + a.path);
    json patch = json::parse(in, nullptr, false);
    if (patch.is_discarded() || !patch.is_object()) throw ConfigError(a.path + " is not a JSON object");
    j.merge_patch(patch);
  }
  if (!a.controller.empty()) j["controller"] = a.controller;
  if (a.seed) {
    j["seed"] = *a.seed;
    j["scenario"]["seed"] = *a.seed;
  }
  if (a.duration) j["duration"] = *a.duration;
  return config_from_json(j);
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + item + "' in list '" + text + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

void print_abort(const SimulationAbort& e) {
  std::cerr << "simulation aborted: " << e.what() << "\n" << e.log_tail;
}

int cmd_run(const ConfigArgs& a, const std::string& out, bool print_config) {
  SimConfig cfg;
  try {
    cfg = build_config(a);
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kExitInvalidConfig;
  }
  if (print_config) {
    std::cout << to_json(cfg).dump(2) << "\n";
    return kExitOk;
  }
  try {
    const ExperimentLog log = run(cfg);
    write_csv(log, out);
    std::cout << "wrote " << out << " (" << log.rows() << " rows)\n";
  } catch (const SimulationAbort& e) {
    print_abort(e);
    return kExitAbort;
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kExitInvalidConfig;
  }
  return kExitOk;
}

int cmd_grid(const ConfigArgs& a, const std::string& delays, const std::string& rates,
             const std::string& out_dir) {
  std::vector<SimConfig> configs;
  try {
    configs = grid_configs(build_config(a), parse_list(delays), parse_list(rates));
    for (const auto& c : configs) c.validate();
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kExitInvalidConfig;
  }
  fs::create_directories(out_dir);
  int code = kExitOk;
  std::ofstream summary(fs::path(out_dir) / "summary.csv");
  summary << "sample_rate,delay,log,status,success,completion_time,max_position_error,"
             "passivity_excess\n";
  for (const auto& cfg : configs) {
    const double rate = cfg.channels.f_fb.sample_rate;
    const double delay = cfg.channels.f_fb.delay;
    const std::string name = "grid_" + format_number(rate) + "Hz_" + format_number(delay) + "s.csv";
    const auto results = run_grid({cfg});
    const GridResult& r = results.front();
    summary << format_number(rate) << ',' << format_number(delay) << ',' << name << ',';
    if (!r.log) {
      summary << "abort,0,,,\n";
      std::cerr << name << ": " << r.error << "\n";
      code = kExitAbort;
      continue;
    }
    write_csv(*r.log, (fs::path(out_dir) / name).string());
    const TaskMetrics m = task_metrics(*r.log);
    summary << "ok," << (m.success ? 1 : 0) << ','
            << (m.completion_time ? format_number(*m.completion_time) : "") << ','
            << format_number(m.max_position_error) << ','
            << format_number(energy_audit(*r.log).worst_excess()) << "\n";
    std::cout << name << ": success=" << m.success << "\n";
  }
  return code;
}

json frf_json(const FrequencyResponse& f) {
  return {{"freq", f.freqs}, {"magnitude", f.magnitude}, {"phase", f.phase}, {"coherence", f.coherence}};
}

int cmd_analyze(const std::string& path, const std::string& frf_cols, std::size_t window,
                double band_lo, double band_hi, const std::string& out) {
  try {
    const ExperimentLog log = read_csv(path);
    const TaskMetrics m = task_metrics(log);
    const EnergyLedger led = energy_audit(log);
    json report = {{"log", path},
                   {"success", m.success},
                   {"completion_time", m.completion_time ? json(*m.completion_time) : json(nullptr)},
                   {"peak_force", m.peak_force},
                   {"overshoot", m.overshoot},
                   {"max_position_error", m.max_position_error},
                   {"buttons_activated", m.buttons_activated},
                   {"energy", {{"injected", led.injected.empty() ? 0.0 : led.injected.back()},
                               {"extracted", led.extracted.empty() ? 0.0 : led.extracted.back()},
                               {"worst_excess", led.worst_excess()}}},
                   {"impulse_overshoots", impulse_overshoots(log)}};
    if (!frf_cols.empty()) {
      const auto comma = frf_cols.find(',');
      if (comma == std::string::npos) throw AnalysisError("--frf expects input,output");
      const auto t = log.series("t");
      if (t.size() < 2) throw AnalysisError("log too short for an FRF");
      const double fs = 1.0 / (t[1] - t[0]);
      const auto frf = estimate_frf(log.series(frf_cols.substr(0, comma)),
                                    log.series(frf_cols.substr(comma + 1)), fs, window);
      const auto binned = log_bin(frf, 20);
      const Cutoff c = cutoff_frequency(binned, band_lo, band_hi);
      report["frf"] = frf_json(binned);
      report["cutoff"] = {{"frequency", c.frequency ? json(*c.frequency) : json(nullptr)},
                          {"reference_magnitude", c.reference_magnitude},
                          {"note", c.note}};
    }
    if (out.empty()) {
      std::cout << report.dump(2) << "\n";
    } else {
      std::ofstream(out) << report.dump(2) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "analysis failed: " << e.what() << "\n";
    return kExitAnalysis;
  }
  return kExitOk;
}

int cmd_replay(const std::string& path, const std::string& out) {
  std::string original;
  SimConfig cfg;
  try {
    original = read_file(path);
    const ExperimentLog log = parse_csv(original);
    const auto text = log.meta("config");
    if (!text) throw ConfigError("log has no config metadata");
    cfg = config_from_json(json::parse(*text));
  } catch (const std::exception& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kExitInvalidConfig;
  }
  std::string replayed;
  try {
    replayed = to_csv(run(cfg));
  } catch (const SimulationAbort& e) {
    print_abort(e);
    return kExitAbort;
  }
  if (!out.empty()) std::ofstream(out, std::ios::binary) << replayed;
  if (replayed == original) {
    std::cout << "identical\n";
    return kExitOk;
  }
  std::size_t i = 0;
  while (i < replayed.size() && i < original.size() && replayed[i] == original[i]) ++i;
  const auto line = std::count(original.begin(), original.begin() + static_cast<std::ptrdiff_t>(i), '\n') + 1;
  std::cout << "differs at byte " << i << " (line " << line << ")\n";
  return kExitReplayMismatch;
}

int cmd_serve(const ConfigArgs& a, const ServerOptions& opts, double rtf, const std::string& log_out) {
  SimConfig cfg;
  try {
    cfg = build_config(a);
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kExitInvalidConfig;
  }
  LiveSession session(cfg);
  WsServer server(session, opts);
  unsigned short port = 0;
  try {
    port = server.listen();
  } catch (const std::exception& e) {
    std::cerr << "cannot listen on " << opts.host << ":" << opts.port << ": " << e.what() << "\n";
    return kExitInvalidConfig;
  }
  spdlog::info("serving {} on http://{}:{}/ (WebSocket /ws)", opts.static_dir, opts.host, port);
  std::thread io([&server] { server.run(); });
  session.start(rtf);

  g_interrupted = false;
  std::signal(SIGINT, [](int) { g_interrupted = true; });
  std::signal(SIGTERM, [](int) { g_interrupted = true; });
  while (!g_interrupted && session.running()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  const bool aborted = !g_interrupted;

  session.stop();
  server.stop();
  io.join();
  if (!log_out.empty()) {
    write_csv(session.log(), log_out);
    spdlog::info("session log written to {}", log_out);
  }
  return aborted ? kExitAbort : kExitOk;
}

}  // namespace

int cli_run(const std::vector<std::string>& args) {
  CLI::App app{"Fractal impedance teleoperation simulator"};
  app.require_subcommand(1);

  ConfigArgs run_args;
  std::string run_out = "out.csv";
  bool print_config = false;
  auto* run_cmd = app.add_subcommand("run", "Run one experiment and write its log");
  add_config_options(run_cmd, run_args, "nominal");
  run_cmd->add_option("--out", run_out, "Log CSV path");
  run_cmd->add_flag("--print-config", print_config, "Print the resolved config JSON and exit");

  ConfigArgs grid_args;
  std::string delays = "0,0.5,1";
  std::string rates = "1000,100,10";
  std::string grid_dir = "grid";
  auto* grid_cmd = app.add_subcommand("grid", "Run every delay x sample-rate condition");
  add_config_options(grid_cmd, grid_args, "button");
  grid_cmd->add_option("--delays", delays, "Comma-separated delays, s");
  grid_cmd->add_option("--rates", rates, "Comma-separated sample rates, Hz");
  grid_cmd->add_option("--out-dir", grid_dir, "Directory for logs and summary.csv");

  std::string analyze_log;
  std::string frf_cols;
  std::size_t window = 4096;
  double band_lo = 0.1;
  double band_hi = 1.0;
  std::string analyze_out;
  auto* analyze_cmd = app.add_subcommand("analyze", "Metrics, energy ledger and FRF of a log");
  analyze_cmd->add_option("--log", analyze_log, "Log CSV")->required();
  analyze_cmd->add_option("--frf", frf_cols, "input,output column names for an FRF estimate");
  analyze_cmd->add_option("--window", window, "Welch segment length, samples");
  analyze_cmd->add_option("--band", band_lo, "Reference band lower edge, Hz");
  analyze_cmd->add_option("--band-hi", band_hi, "Reference band upper edge, Hz");
  analyze_cmd->add_option("--out", analyze_out, "Report JSON path (default stdout)");

  std::string replay_log;
  std::string replay_out;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a logged config and compare byte for byte");
  replay_cmd->add_option("--log", replay_log, "Log CSV")->required();
  replay_cmd->add_option("--out", replay_out, "Write the replayed log here");

  ConfigArgs serve_args;
  ServerOptions serve_opts;
  double rtf = 1.0;
  std::string serve_log;
  auto* serve_cmd = app.add_subcommand("serve", "Live session over WebSocket");
  add_config_options(serve_cmd, serve_args, "button");
  serve_cmd->add_option("--host", serve_opts.host, "Bind address");
  serve_cmd->add_option("--port", serve_opts.port, "TCP port (0 = any free port)");
  serve_cmd->add_option("--static", serve_opts.static_dir, "Directory served at /");
  serve_cmd->add_option("--rtf", rtf, "Real-time factor (<= 0 runs unthrottled)");
  serve_cmd->add_option("--log", serve_log, "Write the session log here on shutdown");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalidConfig;
  }

  if (run_cmd->parsed()) return cmd_run(run_args, run_out, print_config);
  if (grid_cmd->parsed()) return cmd_grid(grid_args, delays, rates, grid_dir);
  if (analyze_cmd->parsed()) return cmd_analyze(analyze_log, frf_cols, window, band_lo, band_hi, analyze_out);
  if (replay_cmd->parsed()) return cmd_replay(replay_log, replay_out);
  return cmd_serve(serve_args, serve_opts, rtf, serve_log);
}

}  // namespace fic_teleop
