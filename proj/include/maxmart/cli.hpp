// SPDX-License-Identifier: Apache-2.0
#pragma once

// Command implementations behind the maxmart executable. Each command reads a
// validated RunConfig, writes its report or CSV to `out`, progress and
// diagnostics to `err`, and returns the process exit code.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "maxmart/config.hpp"
#include "maxmart/csv.hpp"
#include "maxmart/mc_harness.hpp"
#include "maxmart/oracles.hpp"
#include "maxmart/verify.hpp"

namespace maxmart {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfigError = 2;

struct CliOptions {
  std::optional<Command> command;
  std::optional<std::string> out;
  unsigned threads = 0;
  std::vector<std::string> only;
  bool progress = true;
};

namespace cli_detail {

/// Owns the CSV destination: a file (truncated, or appended to after reading
/// the keys of its completed rows) or the `out` stream.
class CsvSink {
 public:
  CsvSink(const OutputBlock& output, std::ostream& fallback) : stream_(&fallback) {
    if (output.csv.empty()) {
      *stream_ << csv_header() << '\n';
      return;
    }
    const bool resume = output.append && std::filesystem::exists(output.csv) &&
                        std::filesystem::file_size(output.csv) > 0;
    if (resume) {
      std::ifstream in(output.csv);
      if (!in) throw InputError("output.csv: cannot read '" + output.csv + "'");
      completed_ = completed_row_keys(in);
      terminate_partial_line(output.csv);
    }
    file_.open(output.csv, resume ? std::ios::app : std::ios::trunc);
    if (!file_) throw InputError("output.csv: cannot open '" + output.csv + "' for writing");
    stream_ = &file_;
    if (!resume) *stream_ << csv_header() << '\n';
    stream_->flush();
  }

  void write(const CsvRow& row) {
    *stream_ << row.line() << '\n';
    stream_->flush();
  }

  const std::set<std::string>& completed() const { return completed_; }

 private:
  // An interrupted run can leave a final line without its newline.
  static void terminate_partial_line(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    in.seekg(-1, std::ios::end);
    char last = '\n';
    in.get(last);
    in.close();
    if (last != '\n') std::ofstream(path, std::ios::app) << '\n';
  }

  std::ofstream file_;
  std::ostream* stream_;
  std::set<std::string> completed_;
};

inline McConfig mc_config(const RunConfig& cfg, unsigned threads) {
  McConfig mc;
  mc.reps_x = cfg.mc.replications;
  mc.reps_y = cfg.mc.reps_y();
  mc.base_seed = cfg.mc.base_seed.value_or(0);
  mc.delta = cfg.mc.delta;
  mc.mode = cfg.mc.mode;
  mc.stat_budget = cfg.mc.stat_budget;
  mc.threads = threads;
  return mc;
}

inline std::string seed_text(const RunConfig& cfg) {
  return cfg.mc.base_seed ? std::to_string(*cfg.mc.base_seed) : std::string();
}

}  // namespace cli_detail

/// Runs the selected property suites and prints one line per suite.
inline int cmd_verify(const RunConfig& cfg, const CliOptions& opts, std::ostream& out, std::ostream& err) {
  std::vector<std::string> suites = opts.only.empty() ? cfg.verify.suites : opts.only;
  if (suites.empty()) suites = verify_suite_names();
  for (const auto& s : suites) {
    const auto& known = verify_suite_names();
    if (std::find(known.begin(), known.end(), s) == known.end())
      throw InputError("--only: unknown suite '" + s + "'");
  }
  VerifySettings settings;
  settings.seed = cfg.mc.base_seed.value_or(0);
  settings.kappas = cfg.verify.kappas;
  settings.instances = cfg.verify.instances;
  settings.draws = cfg.verify.draws;
  settings.threads = opts.threads;

  out << std::left << std::setw(20) << "suite" << std::setw(8) << "result" << std::setw(10) << "checks"
      << std::setw(10) << "failures" << std::setw(14) << "worst_ratio" << std::setw(10) << "seconds"
      << "note\n";
  std::size_t failed = 0;
  for (const auto& name : suites) {
    if (opts.progress) err << "verify: running " << name << "\n";
    const auto r = run_suite(name, settings);
    failed += !r.passed();
    std::ostringstream ratio, secs;
    ratio << std::setprecision(6) << r.worst_ratio;
    secs << std::fixed << std::setprecision(2) << r.seconds;
    out << std::left << std::setw(20) << r.name << std::setw(8) << (r.passed() ? "PASS" : "FAIL") << std::setw(10)
        << r.checks << std::setw(10) << r.failures << std::setw(14) << ratio.str() << std::setw(10) << secs.str()
        << r.note << "\n";
  }
  if (failed == 0)
    out << "verify: all " << suites.size() << " suites passed\n";
  else
    out << "verify: " << failed << " of " << suites.size() << " suites FAILED\n";
  return failed == 0 ? kExitOk : kExitFailure;
}

/// Grid points for bound/simulate (the scenario) or sweep (the grid product,
/// kinds outermost, then d, then n).
inline std::vector<ScenarioSpec> command_grid(const RunConfig& cfg) {
  const auto& sc = *cfg.scenario;
  if (*cfg.command != Command::sweep) return {scenario_for(sc, sc.kind, sc.d, sc.n)};
  const auto& g = *cfg.grid;
  const std::vector<std::size_t> ds = g.d.empty() ? std::vector{sc.d} : g.d;
  const std::vector<std::size_t> ns = g.n.empty() ? std::vector{sc.n} : g.n;
  std::vector<ScenarioSpec> grid;
  for (auto kind : grid_kinds(cfg))
    for (auto d : ds)
      for (auto n : ns) grid.push_back(scenario_for(sc, kind, d, n));
  return grid;
}

/// bound, simulate and sweep: one CSV row per (grid point, atom). bound adds
/// a probability-weighted row when a point has several atoms.
inline int cmd_rows(const RunConfig& cfg, const CliOptions& opts, std::ostream& out, std::ostream& err) {
  const Command cmd = *cfg.command;
  cli_detail::CsvSink sink(cfg.output, out);
  const RowContext ctx{cmd, cfg.mc.base_seed, cfg.output.timing};
  const std::string seed = cli_detail::seed_text(cfg);

  SweepOptions so;
  so.alpha = cfg.bound.alpha;
  so.C = cfg.bound.C;
  so.simulate = cmd != Command::bound;
  if (cmd == Command::sweep && !sink.completed().empty()) {
    so.completed = sink.completed();
    so.key = [&seed](const ScenarioSpec& s, const std::string& atom, std::uint64_t) {
      return row_key(to_string(s.kind), s.d, s.n, atom, seed);
    };
  }
  if (opts.progress) so.progress = [&err](const std::string& line) { err << "maxmart: " << line << "\n"; };

  std::size_t errors = 0;
  std::vector<SweepResult> point;
  auto flush_point = [&] {
    if (cmd == Command::bound)
      if (auto avg = weighted_average_row(point, ctx)) sink.write(*avg);
    point.clear();
  };
  so.on_row = [&](const SweepResult& r) {
    if (!point.empty() && (point.front().kind != r.kind || point.front().d != r.d || point.front().n != r.n))
      flush_point();
    point.push_back(r);
    sink.write(make_row(r, ctx));
    if (!r.error.empty()) {
      ++errors;
      err << "maxmart: error at " << to_string(r.kind) << " d=" << r.d << " n=" << r.n << " atom=" << r.atom
          << ": " << r.error << "\n";
    }
  };
  run_sweep(command_grid(cfg), cli_detail::mc_config(cfg, opts.threads), so);
  flush_point();
  return errors == 0 ? kExitOk : kExitFailure;
}

/// Known-answer checks that run in well under a second.
inline int cmd_selftest(std::ostream& out) {
  struct Check {
    const char* name;
    bool ok;
  };
  const auto near = [](double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); };
  std::vector<Check> checks;
  checks.push_back({"philox4x32-10 known answer",
                    Philox4x32::apply({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                      {0xa4093822u, 0x299f31d0u}) ==
                        Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}});
  checks.push_back({"smooth max of (0,0,0,0) at kappa 1",
                    near(smooth_max(std::vector<double>(4, 0.0), SmoothMaxParams(1.0)), std::log(4.0), 1e-15)});
  checks.push_back({"dkw halfwidth at 5000, 0.01", near(dkw_halfwidth(5000, 0.01), 0.02301807413001365, 1e-14)});
  checks.push_back({"d = 1 bound at (1, 4)", near(d1_bound(1.0, 4.0), 1.9142135623730951, 1e-15)});
  checks.push_back({"corollary at d = 2, n = 8",
                    near(corollary_bound(BoundInputs{2, 8, 1, 1, 0, 1, 0, 1}), 2.4407582774449685, 1e-14)});
  checks.push_back({"four Rademacher steps vs normal",
                    near(oracle::kolmogorov_to_standard_normal(oracle::rademacher_sum_law(4)), 0.1875, 1e-12)});
  std::size_t failed = 0;
  for (const auto& c : checks) {
    out << (c.ok ? "PASS  " : "FAIL  ") << c.name << "\n";
    failed += !c.ok;
  }
  out << "selftest: " << checks.size() - failed << " of " << checks.size() << " passed\n";
  return failed == 0 ? kExitOk : kExitFailure;
}

/// Applies command-line overrides, validates and dispatches. Config and
/// input problems return kExitConfigError with a message on `err`.
inline int run_command(RunConfig cfg, const CliOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    if (opts.command) cfg.command = opts.command;
    if (opts.out) cfg.output.csv = *opts.out;
    if (!opts.only.empty() && cfg.command != Command::verify)
      throw InputError("--only: applies to verify only");
    validate_config(cfg);
    switch (*cfg.command) {
      case Command::verify: return cmd_verify(cfg, opts, out, err);
      case Command::selftest: return cmd_selftest(out);
      case Command::bound:
      case Command::simulate:
      case Command::sweep: return cmd_rows(cfg, opts, out, err);
    }
  } catch (const InputError& e) {
    err << "maxmart: config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitFailure;
}

}  // namespace maxmart
