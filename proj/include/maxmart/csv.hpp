// SPDX-License-Identifier: Apache-2.0
#pragma once

// Fixed-schema CSV rows for bound, simulate and sweep results.

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "maxmart/config.hpp"
#include "maxmart/errors.hpp"
#include "maxmart/mc_harness.hpp"

namespace maxmart {

inline constexpr int kCsvSchemaVersion = 1;

inline constexpr std::array<std::string_view, 30> kCsvColumns{
    "schema_version", "command",     "kind",           "d",               "n",        "atom",
    "atom_prob",      "v_min",       "v_max",          "tau",             "beta",     "beta_se",
    "gamma",          "gamma_se",    "gamma_floor_ok", "alpha",           "C",        "bound_theorem1",
    "bound_corollary", "bound_d1",   "epsilon_opt",    "kappa",           "dist_emp", "dist_band",
    "implied_C",      "reps_x",      "reps_y",         "base_seed",       "runtime_s", "error"};

inline std::size_t csv_column(std::string_view name) {
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i)
    if (kCsvColumns[i] == name) return i;
  throw std::logic_error("unknown CSV column " + std::string(name));
}

class CsvRow {
 public:
  CsvRow() { set("schema_version", std::to_string(kCsvSchemaVersion)); }

  void set(std::string_view column, std::string value) { cells_[csv_column(column)] = std::move(value); }
  void set(std::string_view column, double value) { set(column, format_double(value)); }
  void set(std::string_view column, std::optional<double> value) {
    if (value) set(column, *value);
  }
  void set_count(std::string_view column, std::uint64_t value) { set(column, std::to_string(value)); }
  const std::string& get(std::string_view column) const { return cells_[csv_column(column)]; }

  std::string line() const {
    std::string out;
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      if (i) out += ',';
      out += escape(cells_[i]);
    }
    return out;
  }

  static std::string escape(const std::string& v) {
    if (v.find_first_of(",\"\r\n") == std::string::npos) return v;
    std::string out = "\"";
    for (char c : v) {
      if (c == '"') out += '"';
      out += c;
    }
    return out + "\"";
  }

 private:
  std::array<std::string, kCsvColumns.size()> cells_;
};

inline std::string csv_header() {
  std::string out;
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) {
    if (i) out += ',';
    out += kCsvColumns[i];
  }
  return out;
}

/// Splits one CSV record (RFC 4180 quoting, no embedded newlines).
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else if (c != '\r') {
      out.back() += c;
    }
  }
  return out;
}

/// Identity of a row for resuming a sweep: grid point, atom and seed.
inline std::string row_key(std::string_view kind, std::size_t d, std::size_t n, std::string_view atom,
                           std::string_view seed) {
  return std::string(kind) + "|" + std::to_string(d) + "|" + std::to_string(n) + "|" + std::string(atom) + "|" +
         std::string(seed);
}

/// Keys of the rows already present in a CSV stream with our header.
inline std::set<std::string> completed_row_keys(std::istream& in) {
  std::set<std::string> keys;
  std::string line;
  if (!std::getline(in, line)) return keys;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != csv_header()) throw InputError("existing CSV has a different header; refusing to append");
  const std::size_t kind = csv_column("kind"), d = csv_column("d"), n = csv_column("n"),
                    atom = csv_column("atom"), seed = csv_column("base_seed");
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    // A truncated last line (interrupted write) is not a completed row.
    if (cells.size() != kCsvColumns.size()) continue;
    keys.insert(row_key(cells[kind], std::stoull(cells[d]), std::stoull(cells[n]), cells[atom], cells[seed]));
  }
  return keys;
}

struct RowContext {
  Command command = Command::bound;
  std::optional<std::uint64_t> base_seed;
  bool timing = false;
};

/// One CSV row from a sweep result. Bound columns are at the configured
/// alpha and C; d = 1 rows carry only bound_d1.
inline CsvRow make_row(const SweepResult& r, const RowContext& ctx) {
  CsvRow row;
  row.set("command", std::string(to_string(ctx.command)));
  row.set("kind", std::string(to_string(r.kind)));
  row.set_count("d", r.d);
  row.set_count("n", r.n);
  row.set("atom", r.atom);
  row.set("atom_prob", r.atom_prob);
  row.set("alpha", r.alpha);
  row.set("C", r.C);
  if (r.stats) {
    row.set("beta", r.stats->beta);
    row.set("beta_se", r.stats->beta_se);
    row.set("gamma", r.stats->gamma);
    row.set("gamma_se", r.stats->gamma_se);
  }
  if (r.bounds) {
    const auto& b = *r.bounds;
    row.set("v_min", b.v_min);
    row.set("v_max", b.v_max);
    row.set("tau", b.tau);
    row.set("gamma_floor_ok", std::string(b.gamma_floor_ok ? "true" : "false"));
    row.set("bound_theorem1", b.theorem1_value);
    row.set("bound_corollary", b.corollary_value);
    row.set("bound_d1", b.d1_value);
    if (b.smoothing) {
      row.set("epsilon_opt", b.smoothing->epsilon);
      row.set("kappa", b.smoothing->kappa);
    }
  }
  if (r.kolmogorov) {
    row.set("dist_emp", r.kolmogorov->distance);
    row.set("dist_band", r.kolmogorov->band_halfwidth);
    row.set_count("reps_x", r.kolmogorov->replications_x);
    row.set_count("reps_y", r.kolmogorov->replications_y);
  }
  row.set("implied_C", r.implied_constant);
  if (ctx.base_seed) row.set_count("base_seed", *ctx.base_seed);
  if (ctx.timing) row.set("runtime_s", r.runtime_s);
  row.set("error", r.error);
  return row;
}

/// Probability-weighted average of the bound columns over the atoms of one
/// grid point. Empty when any atom failed or lacks the value.
inline std::optional<CsvRow> weighted_average_row(const std::vector<SweepResult>& atoms, const RowContext& ctx) {
  if (atoms.size() < 2) return std::nullopt;
  for (const auto& a : atoms)
    if (!a.error.empty() || !a.bounds) return std::nullopt;
  auto average = [&](auto member) -> std::optional<double> {
    double acc = 0.0;
    for (const auto& a : atoms) {
      const std::optional<double>& v = (*a.bounds).*member;
      if (!v) return std::nullopt;
      acc += a.atom_prob * *v;
    }
    return acc;
  };
  const auto& first = atoms.front();
  CsvRow row;
  row.set("command", std::string(to_string(ctx.command)));
  row.set("kind", std::string(to_string(first.kind)));
  row.set_count("d", first.d);
  row.set_count("n", first.n);
  row.set("atom", std::string("weighted_avg"));
  double total = 0.0;
  for (const auto& a : atoms) total += a.atom_prob;
  row.set("atom_prob", total);
  row.set("alpha", first.alpha);
  row.set("C", first.C);
  row.set("bound_theorem1", average(&BoundReport::theorem1_value));
  row.set("bound_corollary", average(&BoundReport::corollary_value));
  row.set("bound_d1", average(&BoundReport::d1_value));
  if (ctx.base_seed) row.set_count("base_seed", *ctx.base_seed);
  return row;
}

}  // namespace maxmart
