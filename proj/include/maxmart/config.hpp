// SPDX-License-Identifier: Apache-2.0
#pragma once

// Run configuration: an INI file (key = value lines, [section] blocks) read
// with Boost.PropertyTree. Every key is checked against a fixed vocabulary
// and unknown keys are rejected by name. serialize_config writes a canonical form
// that parses back to an equal RunConfig.
//
//   command = sweep
//   [scenario]   kind, d, n, mixing, truncation, vol_coupling, direction
//   [atom:NAME]  probability, scale, covariance      (one section per atom)
//   [mc]         replications, replications_y, base_seed, delta, mode, stat_budget
//   [bound]      alpha, C
//   [output]     csv, append, timing
//   [grid]       kinds, d, n                         (space-separated lists)
//   [verify]     suites, kappas, instances, draws
//
// Matrices are written as `identity`, `equicorr RHO`, `diag V1 V2 ...` or
// `rows A B; C D`.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "maxmart/errors.hpp"
#include "maxmart/martingale.hpp"
#include "maxmart/mc_harness.hpp"

namespace maxmart {

enum class Command { verify, bound, simulate, sweep, selftest };

inline std::string_view to_string(Command c) {
  switch (c) {
    case Command::verify: return "verify";
    case Command::bound: return "bound";
    case Command::simulate: return "simulate";
    case Command::sweep: return "sweep";
    case Command::selftest: return "selftest";
  }
  return "?";
}

inline Command parse_command(std::string_view text) {
  for (auto c : {Command::verify, Command::bound, Command::simulate, Command::sweep, Command::selftest})
    if (text == to_string(c)) return c;
  throw InputError("unknown command '" + std::string(text) +
                   "' (expected verify, bound, simulate, sweep or selftest)");
}

/// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  for (int precision = 1; precision < 17; ++precision) {
    char shorter[64];
    std::snprintf(shorter, sizeof shorter, "%.*g", precision, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

namespace config_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

inline double parse_double(const std::string& text, const std::string& field) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw InputError(field + ": expected a number, got '" + text + "'");
  return v;
}

inline std::uint64_t parse_u64(const std::string& text, const std::string& field) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw InputError(field + ": expected a nonnegative integer, got '" + text + "'");
  return v;
}

inline std::size_t parse_positive(const std::string& text, const std::string& field) {
  const auto v = parse_u64(text, field);
  if (v == 0) throw InputError(field + ": must be positive");
  return static_cast<std::size_t>(v);
}

inline bool parse_bool(const std::string& text, const std::string& field) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw InputError(field + ": expected true or false, got '" + text + "'");
}

inline std::vector<double> parse_doubles(const std::string& text, const std::string& field) {
  std::vector<double> out;
  for (const auto& w : words(text)) out.push_back(parse_double(w, field));
  if (out.empty()) throw InputError(field + ": expected at least one number");
  return out;
}

inline std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? " " : "") + format_double(v[k]);
  return s;
}

}  // namespace config_detail

/// A d x d matrix given by a rule, so one description serves every d of a grid
/// (`diag` and `rows` fix d).
struct MatrixSpec {
  enum class Form { identity, equicorr, diag, rows };
  Form form = Form::identity;
  double rho = 0.0;
  std::vector<double> diagonal;
  Eigen::MatrixXd entries;

  static MatrixSpec parse(const std::string& text, const std::string& field) {
    using namespace config_detail;
    const std::string t = trim(text);
    const auto sp = t.find_first_of(" \t");
    const std::string head = t.substr(0, sp);
    const std::string rest = sp == std::string::npos ? std::string() : trim(t.substr(sp));
    MatrixSpec m;
    if (head == "identity" && rest.empty()) return m;
    if (head == "equicorr") {
      m.form = Form::equicorr;
      const auto v = parse_doubles(rest, field);
      if (v.size() != 1) throw InputError(field + ": equicorr takes one correlation");
      m.rho = v[0];
      return m;
    }
    if (head == "diag") {
      m.form = Form::diag;
      m.diagonal = parse_doubles(rest, field);
      return m;
    }
    if (head == "rows") {
      m.form = Form::rows;
      std::vector<std::vector<double>> rows;
      std::size_t begin = 0;
      while (begin <= rest.size()) {
        const auto end = rest.find(';', begin);
        rows.push_back(parse_doubles(rest.substr(begin, end == std::string::npos ? end : end - begin), field));
        if (end == std::string::npos) break;
        begin = end + 1;
      }
      m.entries.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows[0].size()) throw InputError(field + ": rows of unequal length");
        for (std::size_t c = 0; c < rows[r].size(); ++c)
          m.entries(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
      }
      return m;
    }
    throw InputError(field + ": expected identity, equicorr RHO, diag V1 ... or rows A B; C D, got '" +
                     text + "'");
  }

  std::string serialize() const {
    using config_detail::join_doubles;
    switch (form) {
      case Form::identity: return "identity";
      case Form::equicorr: return "equicorr " + format_double(rho);
      case Form::diag: return "diag " + join_doubles(diagonal);
      case Form::rows: {
        std::string s = "rows";
        for (Eigen::Index r = 0; r < entries.rows(); ++r) {
          s += r ? "; " : " ";
          for (Eigen::Index c = 0; c < entries.cols(); ++c)
            s += (c ? " " : "") + format_double(entries(r, c));
        }
        return s;
      }
    }
    return {};
  }

  Eigen::MatrixXd materialize(std::size_t d, const std::string& field) const {
    const auto n = static_cast<Eigen::Index>(d);
    switch (form) {
      case Form::identity: return Eigen::MatrixXd::Identity(n, n);
      case Form::equicorr: {
        Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, rho);
        m.diagonal().setOnes();
        return m;
      }
      case Form::diag:
        if (diagonal.size() != d)
          throw InputError(field + ": diag has " + std::to_string(diagonal.size()) + " entries but d = " +
                           std::to_string(d));
        return Eigen::Map<const Eigen::VectorXd>(diagonal.data(), n).asDiagonal();
      case Form::rows:
        if (entries.rows() != n || entries.cols() != n)
          throw InputError(field + ": rows matrix is not " + std::to_string(d) + " x " + std::to_string(d));
        return entries;
    }
    return {};
  }

  bool operator==(const MatrixSpec& o) const {
    return form == o.form && rho == o.rho && diagonal == o.diagonal &&
           entries.rows() == o.entries.rows() && entries.cols() == o.entries.cols() && entries == o.entries;
  }
};

struct AtomConfig {
  std::string label;
  double probability = 1.0;
  std::optional<double> scale;
  std::optional<MatrixSpec> covariance;
  bool operator==(const AtomConfig&) const = default;
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::iid_bounded;
  std::size_t d = 1;
  std::size_t n = 1;
  std::optional<MatrixSpec> mixing;
  std::optional<double> truncation;
  std::optional<double> vol_coupling;
  /// Empty: (1, ..., 1) / sqrt(d).
  std::vector<double> direction;
  std::vector<AtomConfig> atoms;
  bool operator==(const ScenarioConfig&) const = default;
};

struct McBlock {
  std::size_t replications = 5000;
  std::optional<std::size_t> replications_y;
  std::optional<std::uint64_t> base_seed;
  double delta = 0.01;
  TargetMode mode = TargetMode::direct;
  std::size_t stat_budget = 4000;
  bool operator==(const McBlock&) const = default;
  std::size_t reps_y() const { return replications_y.value_or(replications); }
};

struct BoundBlock {
  double alpha = 0.0;
  double C = 1.0;
  bool operator==(const BoundBlock&) const = default;
};

struct OutputBlock {
  std::string csv;
  bool append = false;
  /// Fill runtime_s; off by default so equal seeds give byte-identical files.
  bool timing = false;
  bool operator==(const OutputBlock&) const = default;
};

struct GridBlock {
  std::vector<ScenarioKind> kinds;
  std::vector<std::size_t> d;
  std::vector<std::size_t> n;
  bool operator==(const GridBlock&) const = default;
};

struct VerifyBlock {
  /// Empty: every suite.
  std::vector<std::string> suites;
  std::vector<double> kappas{0.1, 1.0, 10.0, 100.0};
  std::size_t instances = 1000;
  /// Gaussian draws per grid point of the moment and anti-concentration suites.
  std::size_t draws = 100000;
  bool operator==(const VerifyBlock&) const = default;
};

struct RunConfig {
  std::optional<Command> command;
  std::optional<ScenarioConfig> scenario;
  McBlock mc;
  BoundBlock bound;
  OutputBlock output;
  std::optional<GridBlock> grid;
  VerifyBlock verify;
  bool operator==(const RunConfig&) const = default;
};

inline const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names{"sandwich",           "derivatives", "coefficients",
                                              "moment_bound",       "anti_concentration",
                                              "martingale",         "gamma_floor"};
  return names;
}

namespace config_detail {

using Tree = boost::property_tree::ptree;

inline void reject_unknown(const Tree& section, const std::string& prefix, const std::set<std::string>& known) {
  for (const auto& [key, child] : section) {
    if (!known.count(key)) throw InputError("unknown config key '" + prefix + key + "'");
    if (!child.empty()) throw InputError("config key '" + prefix + key + "' must be a plain value");
  }
}

inline ScenarioKind kind_field(const std::string& text, const std::string& field) {
  try {
    return parse_kind(trim(text));
  } catch (const InputError& e) {
    throw InputError(field + ": " + e.what());
  }
}

}  // namespace config_detail

/// Parses INI text. Structural and per-field errors throw InputError naming
/// the key; cross-field checks are in validate_config.
inline RunConfig parse_config(const std::string& text) {
  using namespace config_detail;
  Tree tree;
  try {
    std::istringstream in(text);
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw InputError(std::string("config syntax: ") + e.what());
  }

  RunConfig cfg;
  for (const auto& [name, section] : tree) {
    if (name == "command") {
      if (!section.empty()) throw InputError("config: 'command' is a key, not a section");
      cfg.command = parse_command(trim(section.data()));
      continue;
    }
    if (section.empty() && !section.data().empty())
      throw InputError("unknown config key '" + name + "'");
    const std::string p = name + ".";
    auto get = [&](const char* key) -> std::optional<std::string> {
      if (auto v = section.get_optional<std::string>(Tree::path_type(key, '\0'))) return *v;
      return std::nullopt;
    };
    if (name == "scenario") {
      reject_unknown(section, p, {"kind", "d", "n", "mixing", "truncation", "vol_coupling", "direction"});
      ScenarioConfig sc;
      if (cfg.scenario) sc.atoms = cfg.scenario->atoms;
      if (auto v = get("kind")) sc.kind = kind_field(*v, p + "kind");
      if (auto v = get("d")) sc.d = parse_positive(*v, p + "d");
      if (auto v = get("n")) sc.n = parse_positive(*v, p + "n");
      if (auto v = get("mixing")) sc.mixing = MatrixSpec::parse(*v, p + "mixing");
      if (auto v = get("truncation")) sc.truncation = parse_double(*v, p + "truncation");
      if (auto v = get("vol_coupling")) sc.vol_coupling = parse_double(*v, p + "vol_coupling");
      if (auto v = get("direction")) {
        if (trim(*v) != "ones") sc.direction = parse_doubles(*v, p + "direction");
      }
      cfg.scenario = std::move(sc);
    } else if (name.rfind("atom:", 0) == 0) {
      reject_unknown(section, p, {"probability", "scale", "covariance"});
      AtomConfig a;
      a.label = trim(name.substr(5));
      if (a.label.empty() || a.label.find_first_of(" \t,") != std::string::npos)
        throw InputError("config section '" + name + "': atom label must be a single word");
      if (auto v = get("probability")) a.probability = parse_double(*v, p + "probability");
      if (auto v = get("scale")) a.scale = parse_double(*v, p + "scale");
      if (auto v = get("covariance")) a.covariance = MatrixSpec::parse(*v, p + "covariance");
      if (!cfg.scenario) cfg.scenario.emplace();
      cfg.scenario->atoms.push_back(std::move(a));
    } else if (name == "mc") {
      reject_unknown(section, p, {"replications", "replications_y", "base_seed", "delta", "mode", "stat_budget"});
      if (auto v = get("replications")) cfg.mc.replications = parse_positive(*v, p + "replications");
      if (auto v = get("replications_y")) cfg.mc.replications_y = parse_positive(*v, p + "replications_y");
      if (auto v = get("base_seed")) cfg.mc.base_seed = parse_u64(*v, p + "base_seed");
      if (auto v = get("delta")) cfg.mc.delta = parse_double(*v, p + "delta");
      if (auto v = get("mode")) {
        try {
          cfg.mc.mode = parse_target_mode(trim(*v));
        } catch (const InputError& e) {
          throw InputError(p + "mode: " + e.what());
        }
      }
      if (auto v = get("stat_budget")) cfg.mc.stat_budget = parse_positive(*v, p + "stat_budget");
    } else if (name == "bound") {
      reject_unknown(section, p, {"alpha", "C"});
      if (auto v = get("alpha")) cfg.bound.alpha = parse_double(*v, p + "alpha");
      if (auto v = get("C")) cfg.bound.C = parse_double(*v, p + "C");
    } else if (name == "output") {
      reject_unknown(section, p, {"csv", "append", "timing"});
      if (auto v = get("csv")) cfg.output.csv = trim(*v);
      if (auto v = get("append")) cfg.output.append = parse_bool(*v, p + "append");
      if (auto v = get("timing")) cfg.output.timing = parse_bool(*v, p + "timing");
    } else if (name == "grid") {
      reject_unknown(section, p, {"kinds", "d", "n"});
      GridBlock g;
      if (auto v = get("kinds"))
        for (const auto& w : words(*v)) g.kinds.push_back(kind_field(w, p + "kinds"));
      if (auto v = get("d"))
        for (const auto& w : words(*v)) g.d.push_back(parse_positive(w, p + "d"));
      if (auto v = get("n"))
        for (const auto& w : words(*v)) g.n.push_back(parse_positive(w, p + "n"));
      cfg.grid = std::move(g);
    } else if (name == "verify") {
      reject_unknown(section, p, {"suites", "kappas", "instances", "draws"});
      if (auto v = get("suites")) {
        for (const auto& w : words(*v)) {
          if (w == "all") continue;
          const auto& known = verify_suite_names();
          if (std::find(known.begin(), known.end(), w) == known.end())
            throw InputError(p + "suites: unknown suite '" + w + "'");
          cfg.verify.suites.push_back(w);
        }
      }
      if (auto v = get("kappas")) cfg.verify.kappas = parse_doubles(*v, p + "kappas");
      if (auto v = get("instances")) cfg.verify.instances = parse_positive(*v, p + "instances");
      if (auto v = get("draws")) cfg.verify.draws = parse_positive(*v, p + "draws");
    } else {
      throw InputError("unknown config section '[" + name + "]'");
    }
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

/// Canonical INI text; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const RunConfig& cfg) {
  using config_detail::join_doubles;
  std::ostringstream out;
  if (cfg.command) out << "command = " << to_string(*cfg.command) << "\n";
  if (cfg.scenario) {
    const auto& s = *cfg.scenario;
    out << "\n[scenario]\nkind = " << to_string(s.kind) << "\nd = " << s.d << "\nn = " << s.n << "\n";
    if (s.mixing) out << "mixing = " << s.mixing->serialize() << "\n";
    if (s.truncation) out << "truncation = " << format_double(*s.truncation) << "\n";
    if (s.vol_coupling) out << "vol_coupling = " << format_double(*s.vol_coupling) << "\n";
    if (!s.direction.empty()) out << "direction = " << join_doubles(s.direction) << "\n";
    for (const auto& a : s.atoms) {
      out << "\n[atom:" << a.label << "]\nprobability = " << format_double(a.probability) << "\n";
      if (a.scale) out << "scale = " << format_double(*a.scale) << "\n";
      if (a.covariance) out << "covariance = " << a.covariance->serialize() << "\n";
    }
  }
  out << "\n[mc]\nreplications = " << cfg.mc.replications << "\n";
  if (cfg.mc.replications_y) out << "replications_y = " << *cfg.mc.replications_y << "\n";
  if (cfg.mc.base_seed) out << "base_seed = " << *cfg.mc.base_seed << "\n";
  out << "delta = " << format_double(cfg.mc.delta) << "\nmode = " << to_string(cfg.mc.mode)
      << "\nstat_budget = " << cfg.mc.stat_budget << "\n";
  out << "\n[bound]\nalpha = " << format_double(cfg.bound.alpha) << "\nC = " << format_double(cfg.bound.C)
      << "\n";
  out << "\n[output]\n";
  if (!cfg.output.csv.empty()) out << "csv = " << cfg.output.csv << "\n";
  out << "append = " << (cfg.output.append ? "true" : "false")
      << "\ntiming = " << (cfg.output.timing ? "true" : "false") << "\n";
  if (cfg.grid) {
    out << "\n[grid]\n";
    if (!cfg.grid->kinds.empty()) {
      out << "kinds =";
      for (auto k : cfg.grid->kinds) out << " " << to_string(k);
      out << "\n";
    }
    if (!cfg.grid->d.empty()) {
      out << "d =";
      for (auto v : cfg.grid->d) out << " " << v;
      out << "\n";
    }
    if (!cfg.grid->n.empty()) {
      out << "n =";
      for (auto v : cfg.grid->n) out << " " << v;
      out << "\n";
    }
  }
  out << "\n[verify]\n";
  if (!cfg.verify.suites.empty()) {
    out << "suites =";
    for (const auto& s : cfg.verify.suites) out << " " << s;
    out << "\n";
  }
  out << "kappas = " << join_doubles(cfg.verify.kappas) << "\ninstances = " << cfg.verify.instances
      << "\ndraws = " << cfg.verify.draws << "\n";
  return out.str();
}

/// True when a single scenario of this kind and size needs Monte Carlo for
/// its statistics (and hence a seed).
inline bool statistics_need_randomness(ScenarioKind kind, std::size_t d) {
  switch (kind) {
    case ScenarioKind::iid_bounded: return d > kSignEnumerationCap;
    case ScenarioKind::cond_indep_gaussian_mixture: return d > 1;
    case ScenarioKind::markov_volatility: return true;
  }
  return true;
}

/// The scenario for one (kind, d, n), keeping only the configured parameters
/// that belong to that kind.
inline ScenarioSpec scenario_for(const ScenarioConfig& sc, ScenarioKind kind, std::size_t d, std::size_t n) {
  ScenarioSpec spec;
  spec.kind = kind;
  spec.d = d;
  spec.n = n;
  if (kind != ScenarioKind::cond_indep_gaussian_mixture && sc.mixing)
    spec.mixing = sc.mixing->materialize(d, "scenario.mixing");
  if (kind == ScenarioKind::cond_indep_gaussian_mixture && sc.truncation) spec.truncation_radius = *sc.truncation;
  if (kind == ScenarioKind::markov_volatility) {
    spec.vol_coupling = sc.vol_coupling.value_or(0.0);
    if (!sc.direction.empty())
      spec.direction = Eigen::Map<const Eigen::VectorXd>(sc.direction.data(),
                                                         static_cast<Eigen::Index>(sc.direction.size()));
  }
  if (kind == ScenarioKind::iid_bounded) return spec;
  for (const auto& a : sc.atoms) {
    F0Atom atom{a.label, a.probability, 1.0, {}};
    if (kind == ScenarioKind::markov_volatility) atom.scale = a.scale.value_or(1.0);
    if (kind == ScenarioKind::cond_indep_gaussian_mixture)
      atom.covariance = a.covariance ? a.covariance->materialize(d, "atom:" + a.label + ".covariance")
                                     : Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d),
                                                                 static_cast<Eigen::Index>(d));
    spec.atoms.push_back(std::move(atom));
  }
  if (kind == ScenarioKind::cond_indep_gaussian_mixture && spec.atoms.empty())
    spec.atoms.push_back(F0Atom{"all", 1.0, 1.0,
                                Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d))});
  return spec;
}

inline std::vector<ScenarioKind> grid_kinds(const RunConfig& cfg) {
  if (cfg.grid && !cfg.grid->kinds.empty()) return cfg.grid->kinds;
  return {cfg.scenario ? cfg.scenario->kind : ScenarioKind::iid_bounded};
}

/// Cross-field checks for the selected command.
inline void validate_config(const RunConfig& cfg) {
  if (!cfg.command) throw InputError("config: 'command' is not set");
  const Command cmd = *cfg.command;
  if (!(cfg.bound.alpha >= 0.0 && cfg.bound.alpha <= 0.25))
    throw InputError("bound.alpha: must lie in [0, 1/4]");
  if (!(cfg.bound.C > 0.0) || !std::isfinite(cfg.bound.C)) throw InputError("bound.C: must be positive");
  if (!(cfg.mc.delta > 0.0 && cfg.mc.delta < 1.0)) throw InputError("mc.delta: must lie in (0, 1)");
  for (double k : cfg.verify.kappas)
    if (!(k > 0.0) || !std::isfinite(k)) throw InputError("verify.kappas: every kappa must be positive");
  if (cfg.output.append && cfg.output.csv.empty() && cmd != Command::verify && cmd != Command::selftest)
    throw InputError("output.append: requires output.csv (or --out)");

  const bool needs_scenario = cmd == Command::bound || cmd == Command::simulate || cmd == Command::sweep;
  if (!needs_scenario) {
    if (cmd == Command::verify && !cfg.mc.base_seed)
      throw InputError("mc.base_seed: required by verify (no clock-based seeding)");
    return;
  }
  if (!cfg.scenario) throw InputError("config: [scenario] block required for " + std::string(to_string(cmd)));
  const auto& sc = *cfg.scenario;

  if (cmd == Command::sweep) {
    if (!cfg.grid) throw InputError("config: sweep requires a [grid] block");
  } else if (cfg.grid) {
    throw InputError("config: [grid] is only used by sweep");
  }
  if (cmd == Command::simulate || cmd == Command::sweep) {
    if (cfg.mc.replications < kMinKolmogorovReplications)
      throw InputError("mc.replications: must be at least " + std::to_string(kMinKolmogorovReplications));
    if (cfg.mc.reps_y() < kMinKolmogorovReplications)
      throw InputError("mc.replications_y: must be at least " + std::to_string(kMinKolmogorovReplications));
    if (cfg.mc.mode == TargetMode::coupled && cfg.mc.reps_y() != cfg.mc.replications)
      throw InputError("mc.replications_y: coupled mode requires replications_y = replications");
  }

  const auto kinds = grid_kinds(cfg);
  const std::vector<std::size_t> ds = cmd == Command::sweep && !cfg.grid->d.empty() ? cfg.grid->d
                                                                                    : std::vector{sc.d};
  auto uses = [&](ScenarioKind k) { return std::find(kinds.begin(), kinds.end(), k) != kinds.end(); };
  const std::string where = cmd == Command::sweep ? " for any kind in the grid" : " for kind " +
                                                    std::string(to_string(sc.kind));
  if (sc.mixing && !uses(ScenarioKind::iid_bounded) && !uses(ScenarioKind::markov_volatility))
    throw InputError("scenario.mixing: not used" + where);
  if (sc.truncation && !uses(ScenarioKind::cond_indep_gaussian_mixture))
    throw InputError("scenario.truncation: not used" + where);
  if ((sc.vol_coupling || !sc.direction.empty()) && !uses(ScenarioKind::markov_volatility))
    throw InputError(std::string(sc.vol_coupling ? "scenario.vol_coupling" : "scenario.direction") +
                     ": not used" + where);
  for (const auto& a : sc.atoms) {
    if (!uses(ScenarioKind::cond_indep_gaussian_mixture) && !uses(ScenarioKind::markov_volatility))
      throw InputError("atom:" + a.label + ": iid_bounded has a single trivial atom");
    if (a.scale && !uses(ScenarioKind::markov_volatility))
      throw InputError("atom:" + a.label + ".scale: not used" + where);
    if (a.covariance && !uses(ScenarioKind::cond_indep_gaussian_mixture))
      throw InputError("atom:" + a.label + ".covariance: not used" + where);
  }

  bool random = cmd != Command::bound;
  for (auto k : kinds)
    for (auto d : ds) random = random || statistics_need_randomness(k, d);
  if (random && !cfg.mc.base_seed)
    throw InputError("mc.base_seed: required when the run uses randomness (no clock-based seeding)");
}

}  // namespace maxmart
