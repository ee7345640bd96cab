// SPDX-License-Identifier: Apache-2.0
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "maxmart/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Gaussian approximation bounds for maxima of martingale sums: verify, bound, simulate, sweep"};
  std::string command_text;
  std::string config_path;
  std::string out_path;
  maxmart::CliOptions opts;
  bool quiet = false;
  app.add_option("command", command_text, "verify | bound | simulate | sweep | selftest (overrides the config)");
  app.add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
  app.add_option("--out", out_path, "CSV output path (overrides output.csv)");
  app.add_option("--threads", opts.threads, "worker threads; 0 = hardware concurrency");
  app.add_option("--only", opts.only, "verify: run only the named suite (repeatable)")->take_all();
  app.add_flag("-q,--quiet", quiet, "no progress lines on stderr");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : maxmart::kExitConfigError;
  }
  opts.progress = !quiet;
  if (!out_path.empty()) opts.out = out_path;

  maxmart::RunConfig cfg;
  try {
    if (!command_text.empty()) opts.command = maxmart::parse_command(command_text);
    if (!config_path.empty())
      cfg = maxmart::load_config(config_path);
    else if (opts.command != maxmart::Command::selftest)
      throw maxmart::InputError("--config is required (only selftest runs without one)");
  } catch (const maxmart::InputError& e) {
    std::cerr << "maxmart: config error: " << e.what() << "\n";
    return maxmart::kExitConfigError;
  }
  try {
    return maxmart::run_command(std::move(cfg), opts, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "maxmart: " << e.what() << "\n";
    return maxmart::kExitFailure;
  }
}
