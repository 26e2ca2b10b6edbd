// uwbloc: headless runs, replays, plotting exports and the operator server.
#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include <cstdio>
#include <fstream>
#include <iostream>

#include "uwbloc/error.hpp"
#include "uwbloc/gateway/server.hpp"
#include "uwbloc/gateway/session.hpp"

namespace gw = uwbloc::gateway;
using uwbloc::Error;
using uwbloc::ErrorCode;

namespace {

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigInvalid:
    case ErrorCode::ScriptInvalid:
    case ErrorCode::InvalidArgument:
      return 2;
    case ErrorCode::SessionCorrupt:
    case ErrorCode::ReplayDivergence:
      return 3;
    case ErrorCode::BindFailed:
      return 4;
    default:
      return 1;
  }
}

void print_summary(const gw::SessionSummary& s) {
  std::printf("final phase        %s at t=%.2f s\n", s.final_phase.c_str(), s.sim_time);
  std::printf("fixes              %zu (%zu failed)\n", s.fix_count, s.fix_failures);
  std::printf("fix error          mean %.3f m, rmse %.3f m, max %.3f m\n", s.mean_fix_error, s.fix_rmse,
              s.max_fix_error);
  if (s.alignment_rotation_error) {
    std::printf("alignment error    %.4f rad, %.3f m\n", *s.alignment_rotation_error,
                *s.alignment_translation_error);
  }
  std::printf("resets             %zu (skipped %zu)\n", s.reset_count, s.skip_count);
  for (const auto& w : s.waypoints) {
    char discrepancy[32] = "n/a";
    if (w.discrepancy) std::snprintf(discrepancy, sizeof discrepancy, "%.3f m", *w.discrepancy);
    std::printf("  waypoint %-2zu (%6.2f, %6.2f)  discrepancy %-9s  error %.3f m -> %s\n", w.index, w.target.x,
                w.target.y, discrepancy, w.arrival_error, w.decision.empty() ? "pending" : w.decision.c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UWB-aided rover localization simulator"};
  app.require_subcommand(1);

  std::string scenario, script, out, bind = "127.0.0.1:8765", session;
  std::uint64_t seed = 0;
  double realtime_factor = 1.0;

  auto* run = app.add_subcommand("run", "Run a scenario headless with a scripted operator");
  run->add_option("--scenario", scenario, "Scenario YAML")->required()->check(CLI::ExistingFile);
  run->add_option("--script", script, "Operator command script YAML")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Session file to write");
  auto* run_seed = run->add_option("--seed", seed, "Override the scenario seed");

  auto* serve = app.add_subcommand("serve", "Serve the operator WebSocket protocol");
  serve->add_option("--scenario", scenario, "Scenario YAML")->required()->check(CLI::ExistingFile);
  serve->add_option("--bind", bind, "host:port to listen on")->capture_default_str();
  serve->add_option("--realtime-factor", realtime_factor, "Sim seconds per wall second, 0 = unpaced")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  serve->add_option("--out", out, "Session file written on shutdown");
  auto* serve_seed = serve->add_option("--seed", seed, "Override the scenario seed");

  auto* rep = app.add_subcommand("replay", "Re-run a session and verify its event log");
  rep->add_option("session", session, "Session file")->required()->check(CLI::ExistingFile);

  auto* plot = app.add_subcommand("plot-summary", "Export ground truth vs estimates as CSV");
  plot->add_option("session", session, "Session file")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", out, "CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the parse error
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      const auto override = run_seed->count() ? std::optional<std::uint64_t>(seed) : std::nullopt;
      const auto record = gw::run_headless(scenario, script, out, override);
      print_summary(record.summary);
      if (!out.empty()) std::printf("session written to %s\n", out.c_str());
      return record.summary.final_phase == "Faulted" ? 5 : 0;
    }
    if (serve->parsed()) {
      const std::string yaml = uwbloc::read_text_file(scenario);
      gw::SessionRecord base{yaml, serve_seed->count() ? std::optional<std::uint64_t>(seed) : std::nullopt};
      const auto [host, port] = gw::parse_bind(bind);
      gw::Server server(gw::session_config(base), {host, port, realtime_factor, 10.0, true});
      server.start();
      std::printf("listening on ws://%s:%u\n", host.c_str(), static_cast<unsigned>(server.port()));
      std::fflush(stdout);
      server.run();
      if (!out.empty()) {
        base.events = server.event_lines();
        base.commands = gw::commands_from_events(base.events);
        base.summary = gw::summarize(base.events);
        gw::write_session(out, base);
        std::printf("session written to %s\n", out.c_str());
      }
      return 0;
    }
    if (rep->parsed()) {
      const auto record = gw::replay(std::filesystem::path(session));
      std::printf("replay matches: %zu events\n", record.events.size());
      print_summary(record.summary);
      return 0;
    }
    if (plot->parsed()) {
      const std::string csv = gw::plot_summary_csv(gw::read_session(session).events);
      if (out.empty()) {
        std::cout << csv;
      } else {
        std::ofstream file(out);
        if (!(file << csv)) throw Error(ErrorCode::InvalidArgument, "cannot write " + out);
        std::printf("csv written to %s\n", out.c_str());
      }
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.code());
  }
  return 0;
}
