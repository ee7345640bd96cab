// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <cmath>

#include "maxmart/config.hpp"

using namespace maxmart;
using Catch::Matchers::ContainsSubstring;

namespace {

const char* kFull = R"(# every block
command = sweep

[scenario]
kind = markov_volatility
d = 3
n = 16
mixing = equicorr 0.25
vol_coupling = -0.4
direction = 1 0 0.5

[atom:low]
probability = 0.25
scale = 0.5

[atom:high]
probability = 0.75
scale = 2

[mc]
replications = 2000
replications_y = 3000
base_seed = 12345678901234
delta = 0.05
mode = direct
stat_budget = 1500

[bound]
alpha = 0.125
C = 2.5

[output]
csv = out.csv
append = true
timing = false

[grid]
kinds = iid_bounded markov_volatility
d = 2 8
n = 64 256 1024

[verify]
suites = sandwich derivatives
kappas = 0.5 3
instances = 50
draws = 2000
)";

RunConfig parse_valid(const std::string& text) {
  auto cfg = parse_config(text);
  validate_config(cfg);
  return cfg;
}

}  // namespace

TEST_CASE("parse reads every block") {
  const auto cfg = parse_config(kFull);
  REQUIRE(cfg.command == Command::sweep);
  REQUIRE(cfg.scenario);
  CHECK(cfg.scenario->kind == ScenarioKind::markov_volatility);
  CHECK(cfg.scenario->d == 3);
  CHECK(cfg.scenario->mixing->form == MatrixSpec::Form::equicorr);
  CHECK(cfg.scenario->vol_coupling == -0.4);
  CHECK(cfg.scenario->direction == std::vector<double>{1, 0, 0.5});
  REQUIRE(cfg.scenario->atoms.size() == 2);
  CHECK(cfg.scenario->atoms[1].label == "high");
  CHECK(cfg.scenario->atoms[1].scale == 2.0);
  CHECK(cfg.mc.reps_y() == 3000);
  CHECK(cfg.mc.base_seed == 12345678901234ull);
  CHECK(cfg.bound.C == 2.5);
  CHECK(cfg.output.append);
  CHECK(cfg.grid->n == std::vector<std::size_t>{64, 256, 1024});
  CHECK(cfg.verify.suites == std::vector<std::string>{"sandwich", "derivatives"});
  CHECK_NOTHROW(validate_config(cfg));
}

TEST_CASE("serialize round-trips") {
  const auto cfg = parse_config(kFull);
  const auto text = serialize_config(cfg);
  CHECK(parse_config(text) == cfg);
  CHECK(serialize_config(parse_config(text)) == text);

  RunConfig defaults;
  defaults.command = Command::verify;
  CHECK(parse_config(serialize_config(defaults)) == defaults);

  RunConfig mixture;
  mixture.command = Command::bound;
  mixture.scenario.emplace();
  mixture.scenario->kind = ScenarioKind::cond_indep_gaussian_mixture;
  mixture.scenario->d = 2;
  mixture.scenario->truncation = std::numeric_limits<double>::infinity();
  mixture.scenario->atoms = {AtomConfig{"a", 0.1, std::nullopt, MatrixSpec::parse("rows 1 0.2; 0.2 3", "x")},
                             AtomConfig{"b", 0.9, std::nullopt, MatrixSpec::parse("diag 1 1e-3", "x")}};
  mixture.mc.base_seed = 7;
  CHECK(parse_config(serialize_config(mixture)) == mixture);
}

TEST_CASE("format_double is shortest round-trip") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345678.9, -0.0, 2.5}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("unknown keys and sections are named") {
  CHECK_THROWS_WITH(parse_config("command = verify\n[mc]\nreplicatons = 5\n"),
                    ContainsSubstring("unknown config key 'mc.replicatons'"));
  CHECK_THROWS_WITH(parse_config("command = verify\nverbose = 1\n"), ContainsSubstring("'verbose'"));
  CHECK_THROWS_WITH(parse_config("[montecarlo]\nreplications = 5\n"), ContainsSubstring("[montecarlo]"));
  CHECK_THROWS_WITH(parse_config("[command]\nx = 1\n"), ContainsSubstring("key, not a section"));
  CHECK_THROWS_AS(parse_config("[mc]\ndelta = 0.1\n[mc]\ndelta = 0.2\n"), InputError);
  CHECK_THROWS_WITH(parse_config("command = run\n"), ContainsSubstring("run"));
}

TEST_CASE("malformed values name their field") {
  CHECK_THROWS_WITH(parse_config("[verify]\nkappas = 1 x\n"), ContainsSubstring("verify.kappas"));
  CHECK_THROWS_WITH(parse_config("[mc]\nreplications = -3\n"), ContainsSubstring("mc.replications"));
  CHECK_THROWS_WITH(parse_config("[mc]\nreplications = 0\n"), ContainsSubstring("mc.replications"));
  CHECK_THROWS_WITH(parse_config("[scenario]\nkind = gaussian\n"), ContainsSubstring("scenario.kind"));
  CHECK_THROWS_WITH(parse_config("[mc]\nmode = both\n"), ContainsSubstring("mc.mode"));
  CHECK_THROWS_WITH(parse_config("[output]\nappend = maybe\n"), ContainsSubstring("output.append"));
  CHECK_THROWS_WITH(parse_config("[scenario]\nmixing = rows 1 2; 3\n"), ContainsSubstring("scenario.mixing"));
  CHECK_THROWS_WITH(parse_config("[verify]\nsuites = sandwich nope\n"), ContainsSubstring("nope"));
  CHECK_THROWS_WITH(parse_config("[atom:two words]\nprobability = 1\n"), ContainsSubstring("single word"));
}

TEST_CASE("validation") {
  const std::string iid = "[scenario]\nkind = iid_bounded\nd = 2\nn = 8\n";
  CHECK_THROWS_WITH(parse_valid(iid), ContainsSubstring("'command' is not set"));
  CHECK_NOTHROW(parse_valid("command = bound\n" + iid));
  CHECK_THROWS_WITH(parse_valid("command = bound\n" + iid + "[bound]\nalpha = 0.3\n"),
                    ContainsSubstring("bound.alpha"));
  CHECK_THROWS_WITH(parse_valid("command = bound\n" + iid + "[bound]\nC = 0\n"), ContainsSubstring("bound.C"));
  CHECK_THROWS_WITH(parse_valid("command = bound\n" + iid + "[mc]\ndelta = 1\n"), ContainsSubstring("mc.delta"));
  CHECK_THROWS_WITH(parse_valid("command = verify\n[mc]\nbase_seed = 1\n[verify]\nkappas = 1 -1\n"),
                    ContainsSubstring("verify.kappas"));
  CHECK_THROWS_WITH(parse_valid("command = verify\n"), ContainsSubstring("mc.base_seed"));
  CHECK_THROWS_WITH(parse_valid("command = bound\n"), ContainsSubstring("[scenario]"));
  CHECK_THROWS_WITH(parse_valid("command = bound\n" + iid + "[output]\nappend = true\n"),
                    ContainsSubstring("output.append"));

  const std::string seeded = iid + "[mc]\nbase_seed = 3\n";
  CHECK_THROWS_WITH(parse_valid("command = simulate\n" + iid), ContainsSubstring("mc.base_seed"));
  CHECK_NOTHROW(parse_valid("command = simulate\n" + seeded));
  CHECK_THROWS_WITH(parse_valid("command = simulate\n" + seeded + "replications = 999\n"),
                    ContainsSubstring("at least 1000"));
  CHECK_THROWS_WITH(parse_valid("command = simulate\n" + seeded + "replications_y = 10\n"),
                    ContainsSubstring("mc.replications_y"));
  CHECK_THROWS_WITH(parse_valid("command = simulate\n" + seeded + "mode = coupled\nreplications_y = 6000\n"),
                    ContainsSubstring("coupled"));
  CHECK_THROWS_WITH(parse_valid("command = sweep\n" + seeded), ContainsSubstring("[grid]"));
  CHECK_THROWS_WITH(parse_valid("command = simulate\n" + seeded + "[grid]\nn = 4\n"),
                    ContainsSubstring("only used by sweep"));

  CHECK_THROWS_WITH(parse_valid("command = bound\n" + iid + "truncation = 2\n"),
                    ContainsSubstring("scenario.truncation: not used for kind iid_bounded"));
  CHECK_THROWS_WITH(parse_valid("command = bound\n" + iid + "vol_coupling = 0.1\n"),
                    ContainsSubstring("scenario.vol_coupling"));
  CHECK_THROWS_WITH(parse_valid("command = bound\n" + iid + "[atom:x]\nprobability = 1\n"),
                    ContainsSubstring("single trivial atom"));
  const std::string markov = "[scenario]\nkind = markov_volatility\nd = 2\nn = 8\n";
  CHECK_THROWS_WITH(parse_valid("command = bound\n" + markov), ContainsSubstring("mc.base_seed"));
  CHECK_THROWS_WITH(parse_valid("command = bound\n" + markov + "[atom:x]\ncovariance = identity\n"),
                    ContainsSubstring("atom:x.covariance"));
  // Large d needs Monte Carlo even for kind (a).
  CHECK_THROWS_WITH(parse_valid("command = bound\n[scenario]\nd = 20\nn = 4\n"), ContainsSubstring("base_seed"));
  // A grid over several kinds accepts parameters used by any of them.
  CHECK_NOTHROW(parse_valid("command = sweep\n" + iid + "truncation = 2\n[mc]\nbase_seed = 3\n[grid]\nkinds = iid_bounded "
                            "cond_indep_gaussian_mixture\n"));
}

TEST_CASE("MatrixSpec") {
  const auto id = MatrixSpec::parse("identity", "m").materialize(3, "m");
  CHECK(id.isApprox(Eigen::MatrixXd::Identity(3, 3)));
  const auto eq = MatrixSpec::parse("equicorr 0.5", "m").materialize(3, "m");
  CHECK(eq(0, 1) == 0.5);
  CHECK(eq(2, 2) == 1.0);
  const auto dg = MatrixSpec::parse("diag 1 2", "m").materialize(2, "m");
  CHECK(dg(1, 1) == 2.0);
  CHECK(dg(0, 1) == 0.0);
  const auto rows = MatrixSpec::parse("rows 1 2; 3 4", "m").materialize(2, "m");
  CHECK(rows(1, 0) == 3.0);
  CHECK_THROWS_WITH(MatrixSpec::parse("diag 1 2", "atom:a.covariance").materialize(3, "atom:a.covariance"),
                    ContainsSubstring("atom:a.covariance"));
  CHECK_THROWS_AS(MatrixSpec::parse("upper 1", "m"), InputError);
  for (const char* text : {"identity", "equicorr -0.125", "diag 1 0.5", "rows 1 2; 3 4"}) {
    const auto m = MatrixSpec::parse(text, "m");
    CHECK(MatrixSpec::parse(m.serialize(), "m") == m);
  }
}

TEST_CASE("scenario_for keeps only parameters of the kind") {
  const auto cfg = parse_config(R"(
[scenario]
kind = cond_indep_gaussian_mixture
d = 2
n = 4
mixing = equicorr 0.5
truncation = 1.5
vol_coupling = 0.3
[atom:a]
probability = 0.5
scale = 3
covariance = diag 1 2
[atom:b]
probability = 0.5
)");
  const auto& sc = *cfg.scenario;
  const auto mix = scenario_for(sc, ScenarioKind::cond_indep_gaussian_mixture, 2, 4);
  CHECK(mix.mixing.size() == 0);
  CHECK(mix.truncation_radius == 1.5);
  CHECK(mix.vol_coupling == 0.0);
  REQUIRE(mix.atoms.size() == 2);
  CHECK(mix.atoms[0].covariance(1, 1) == 2.0);
  CHECK(mix.atoms[1].covariance.isApprox(Eigen::MatrixXd::Identity(2, 2)));

  const auto iid = scenario_for(sc, ScenarioKind::iid_bounded, 3, 8);
  CHECK(iid.atoms.empty());
  CHECK(iid.mixing.rows() == 3);
  CHECK(std::isinf(iid.truncation_radius));

  const auto markov = scenario_for(sc, ScenarioKind::markov_volatility, 2, 4);
  CHECK(markov.vol_coupling == 0.3);
  CHECK(markov.atoms[0].scale == 3.0);
  CHECK(markov.atoms[1].scale == 1.0);
  CHECK(markov.atoms[0].covariance.size() == 0);

  ScenarioConfig bare;
  bare.kind = ScenarioKind::cond_indep_gaussian_mixture;
  const auto one = scenario_for(bare, bare.kind, 2, 4);
  REQUIRE(one.atoms.size() == 1);
  CHECK(one.atoms[0].label == "all");
}

TEST_CASE("load_config") {
  CHECK_THROWS_WITH(load_config("/nonexistent/x.ini"), ContainsSubstring("cannot read"));
}
