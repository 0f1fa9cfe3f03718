#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "mrsav/experiments/checkpoint.hpp"
#include "mrsav/experiments/commands.hpp"
#include "mrsav/experiments/trajectory.hpp"
#include "mrsav/simd/kernels.hpp"

using namespace mrsav;
using namespace mrsav::experiments;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const char* root = std::getenv("MRSAV_TEST_TMP");
  fs::path p = (root && *root ? fs::path(root) : fs::temp_directory_path() / "mrsav-tests") / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Small, fast setup: 1000 bins, short runs.
ExperimentConfig small_config() {
  ExperimentConfig c;
  c.run.T = 20.0;
  c.histogram.bins = 1000;
  c.reference.T = 200.0;
  c.reference.bins = 1000;
  c.tables.T_ladder = {25, 50, 100, 200};
  c.tables.bin_ladder = {125, 250, 500, 1000};
  c.tables.dt_ladder = {0x1.0p-6, 0x1.0p-7, 0x1.0p-8};
  c.tables.dt_reference = 0.0;
  c.tables.dt_T = 50.0;
  c.tables.compare_T = 50.0;
  c.histogram.max_tail_fraction = 1.0;
  return c;
}

CommandOptions opts_in(const fs::path& dir) {
  CommandOptions o;
  o.output_dir = dir;
  return o;
}

void check_orders_reproduce(const Table& t) {
  std::vector<std::pair<double, double>> js, tv;
  for (const auto& r : t.rows) {
    js.emplace_back(r.param, r.js);
    tv.emplace_back(r.param, r.tv);
  }
  const auto oj = observed_order(js), ot = observed_order(tv);
  REQUIRE(t.rows.size() >= 2);
  CHECK_FALSE(t.rows[0].order_js.has_value());
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    CHECK(t.rows[i].order_js == oj[i - 1]);
    CHECK(t.rows[i].order_tv == ot[i - 1]);
  }
}

}  // namespace

TEST_CASE("config defaults") {
  const ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.model.sites == 5);
  CHECK(c.model.forcing == -12.0);
  CHECK(c.scheme.gamma == 1000.0);
  CHECK(c.scheme.dt == 0x1.0p-10);
  CHECK(c.histogram.bins == 64000);
  CHECK(*c.reference.mean == -2.30785305840738);
  CHECK(*c.reference.variance == 22.3539129577942);
}

TEST_CASE("config round-trip") {
  ExperimentConfig c = small_config();
  c.scheme.order = SchemeOrder::BackwardEuler;
  c.scheme.init_mode = InitMode::Crude;
  c.reference.mean.reset();
  c.output.formats = {"csv", "bin"};
  const auto j = c.to_json();
  const ExperimentConfig d = ExperimentConfig::from_json(j);
  CHECK(d.to_json() == j);
  CHECK(d.hash() == c.hash());
  CHECK(ExperimentConfig::from_json(nlohmann::json::parse(j.dump())).to_json() == j);
  CHECK(j["scheme"]["dt"] == "2^-10");
}

TEST_CASE("config parsing and errors") {
  const auto from = [](const char* text) { return ExperimentConfig::from_json(nlohmann::json::parse(text)); };
  CHECK(from(R"({"scheme": {"dt": "2^-7"}})").scheme.dt == 0x1.0p-7);
  CHECK(from(R"({"scheme": {"dt": 0.5}})").scheme.dt == 0.5);
  CHECK(from(R"({"model": {"J": 8}})").model.sites == 8);

  auto field_of = [&](const char* text) {
    try {
      from(text).validate();
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  CHECK(field_of(R"({"model": {"sites": 8}})") == "model.sites");
  CHECK(field_of(R"({"bogus": {}})") == "bogus");
  CHECK(field_of(R"({"scheme": {"dt": "fast"}})") == "scheme.dt");
  CHECK(field_of(R"({"scheme": {"dt": -1}})") == "scheme.dt");
  CHECK(field_of(R"({"histogram": {"coordinate_index": 6}})") == "histogram.coordinate_index");
  CHECK(field_of(R"({"histogram": {"bins": "many"}})") == "histogram.bins");
  CHECK(field_of(R"({"tables": {"T_ladder": [100, 300]}})") == "tables.T_ladder");
  CHECK(field_of(R"({"model": {"J": 3}})") == "model.J");
}

TEST_CASE("config file with comments, set and hash") {
  const fs::path dir = scratch("config");
  {
    std::ofstream os(dir / "c.json");
    os << "{\n  // desk run\n  \"run\": {\"T\": 50, \"seed\": 3}\n}\n";
  }
  ExperimentConfig c = ExperimentConfig::load(dir / "c.json");
  CHECK(c.run.T == 50.0);
  CHECK(c.run.seed == 3);
  const auto h = c.hash();
  c.set("run.seed=4");
  CHECK(c.run.seed == 4);
  CHECK(c.hash() != h);
  c.set("scheme.order=be");
  CHECK(c.scheme.order == SchemeOrder::BackwardEuler);
  const auto h2 = c.hash();
  c.output.directory = "elsewhere";
  CHECK(c.hash() == h2);
  CHECK_THROWS_AS(c.set("noequals"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load(dir / "missing.json"), ConfigError);
}

TEST_CASE("output directory resolution") {
  ExperimentConfig c;
  CHECK(resolve_output_dir(c, "flag") == fs::path("flag"));
  c.output.directory = "cfg";
  CHECK(resolve_output_dir(c, "") == fs::path("cfg"));
  c.output.directory.clear();
  ::setenv("MRSAV_OUTPUT_ROOT", "/tmp/from-env", 1);
  CHECK(resolve_output_dir(c, "") == fs::path("/tmp/from-env"));
  ::unsetenv("MRSAV_OUTPUT_ROOT");
  CHECK(resolve_output_dir(c, "") == fs::path("mrsav-out"));
}

TEST_CASE("initial states") {
  const ExperimentConfig c;
  const StateVector a = initial_state(c), b = initial_state(c);
  CHECK(a == b);
  for (double x : a) CHECK(std::fabs(x) <= 15.0);
  const StateVector p = initial_state(c, true);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::fabs(p[i] - a[i]) <= 0.05 * std::fabs(a[i]) + 1e-15);
  CHECK(p != a);
  ExperimentConfig z = c;
  z.run.perturbation_pct = 0.0;
  CHECK(initial_state(z, true) == a);
}

TEST_CASE("coordinate runs are deterministic and resumable") {
  ExperimentConfig c = small_config();
  auto model = std::make_shared<const DampedDrivenModel>(c.build_model());
  CoordinateRun a(model, run_spec(c)), b(model, run_spec(c));
  a.run_to_end();
  b.run_to_end();
  CHECK(a.histogram() == b.histogram());
  CHECK(a.moments() == b.moments());
  CHECK(a.steps_done() == step_count(20.0, c.scheme.dt));

  CoordinateRun first(model, run_spec(c));
  first.advance_to(a.target_steps() / 2);
  const Checkpoint ck = decode_checkpoint(encode_checkpoint(first.checkpoint(c.hash(), "rng")));
  CHECK(ck.steps_done == a.target_steps() / 2);
  CHECK(ck.isa == simd::active().name);
  CoordinateRun second(model, run_spec(c));
  second.restore(ck);
  second.run_to_end();
  CHECK(second.histogram() == a.histogram());
  CHECK(second.moments() == a.moments());
  CHECK(second.state().u_curr == a.state().u_curr);

  ExperimentConfig longer = c;
  longer.run.T = 40.0;
  CoordinateRun other(model, run_spec(longer));
  CHECK_THROWS(other.restore(ck));
}

TEST_CASE("checkpoint version is checked") {
  ExperimentConfig c = small_config();
  auto model = std::make_shared<const DampedDrivenModel>(c.build_model());
  CoordinateRun r(model, run_spec(c));
  r.advance_to(100);
  Checkpoint ck = r.checkpoint(c.hash(), "state");
  const std::string bytes = encode_checkpoint(ck);
  const Checkpoint back = decode_checkpoint(bytes);
  CHECK(back.config_hash == ck.config_hash);
  CHECK(back.histogram == ck.histogram);
  CHECK(back.rng_state == "state");
  std::string bad = bytes;
  bad[8] = 2;
  CHECK_THROWS_AS(decode_checkpoint(bad), IoError);
  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, 40)), IoError);

  const fs::path dir = scratch("ckpt");
  write_checkpoint(dir / "a.bin", ck);
  CHECK(read_checkpoint(dir / "a.bin").steps_done == 100);
  CHECK_THROWS_AS(read_checkpoint(dir / "none.bin"), IoError);
}

TEST_CASE("run command") {
  const fs::path dir = scratch("run");
  ExperimentConfig c;
  c.histogram.bins = 1000;
  const RunArtifacts a = cmd_run(c, opts_in(dir));
  CHECK(a.steps == 102400);
  CHECK_FALSE(a.halted);
  CHECK(fs::exists(dir / "run_summary.json"));
  CHECK(fs::exists(dir / "run_histogram.csv"));
  CHECK(fs::exists(dir / "run_config.json"));
  const auto summary = nlohmann::json::parse(std::ifstream(dir / "run_summary.json"));
  CHECK(summary["steps"] == 102400);
  CHECK(summary.contains("max_q_drift_tail"));
  CHECK(summary.contains("steps_per_second"));
  CHECK(summary["rng"] == Rng::kAlgorithm);

  const RunArtifacts again = cmd_run(c, opts_in(scratch("run2")));
  CHECK(again.histogram == a.histogram);

  const fs::path hdir = scratch("run-halt");
  CommandOptions h = opts_in(hdir);
  h.halt_at_step = 51200;
  const RunArtifacts half = cmd_run(c, h);
  CHECK(half.halted);
  CHECK(half.steps == 51200);
  CommandOptions r = opts_in(hdir);
  r.resume = hdir / "checkpoint.bin";
  const RunArtifacts resumed = cmd_run(c, r);
  CHECK(resumed.histogram == a.histogram);
  CHECK(resumed.moments == a.moments);

  ExperimentConfig other = c;
  other.run.seed = 7;
  CHECK_THROWS_AS(cmd_run(other, r), ConfigError);
}

TEST_CASE("run fails loudly on heavy tails") {
  ExperimentConfig c = small_config();
  c.histogram.lo = -1.0;
  c.histogram.hi = 1.0;
  c.histogram.max_tail_fraction = 1e-4;
  CHECK_THROWS_AS(cmd_run(c, opts_in(scratch("tails"))), InvariantFailure);
}

TEST_CASE("reference and table commands") {
  const fs::path dir = scratch("tables");
  const ExperimentConfig c = small_config();
  CHECK_THROWS_AS(cmd_table_terminal_time(c, opts_in(dir)), MissingReference);

  const ReferenceArtifacts ref = cmd_make_reference(c, opts_in(dir));
  CHECK(fs::exists(ref.prob_path));
  CHECK(ref.prob_path == reference_path(c, dir));
  const auto meta = nlohmann::json::parse(std::ifstream(ref.meta_path));
  CHECK(meta["reference_hash"] == hex64(reference_config(c).hash()));
  CHECK(meta.contains("wall_seconds"));
  const ReferenceArtifacts loaded = load_reference(c, dir);
  CHECK(loaded.distribution == ref.distribution);
  CHECK(loaded.moments.count() == ref.moments.count());
  CHECK(js_divergence(loaded.distribution, ref.distribution) == 0.0);

  SUBCASE("terminal time") {
    const Table t = cmd_table_terminal_time(c, opts_in(dir));
    REQUIRE(t.rows.size() == 4);
    CHECK(t.rows.back().js == 0.0);
    CHECK(t.rows.back().tv == 0.0);
    CHECK(t.rows[0].tv > 0.0);
    check_orders_reproduce(t);
    CHECK(fs::exists(dir / "table_terminal_time.csv"));
    std::ifstream is(dir / "table_terminal_time.csv");
    std::string header;
    std::getline(is, header);
    CHECK(header == "T,js,order_js,tv,order_tv");
  }
  SUBCASE("bins") {
    ExperimentConfig w = c;
    w.tables.moving_average_window = 1;
    const Table t = cmd_table_bins(w, opts_in(dir));
    REQUIRE(t.rows.size() == 4);
    CHECK(t.rows.back().js == 0.0);
    CHECK(t.rows.back().tv == 0.0);
    check_orders_reproduce(t);
    ExperimentConfig bad = c;
    bad.tables.bin_ladder = {300, 600};
    CHECK_THROWS_AS(cmd_table_bins(bad, opts_in(dir)), ConfigError);
  }
}

TEST_CASE("dt table") {
  const fs::path dir = scratch("dt");
  ExperimentConfig c = small_config();
  CommandOptions o = opts_in(dir);
  o.jobs = 2;
  const Table t = cmd_table_dt(c, o);
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows.back().js == 0.0);
  CHECK(t.rows.back().tv == 0.0);
  check_orders_reproduce(t);
  o.jobs = 1;
  const Table s = cmd_table_dt(c, o);
  for (std::size_t i = 0; i < t.rows.size(); ++i) CHECK(s.rows[i].tv == t.rows[i].tv);
}

TEST_CASE("initial-data table") {
  const fs::path dir = scratch("init");
  ExperimentConfig c = small_config();
  const Table t = cmd_table_initial_data(c, opts_in(dir));
  REQUIRE(t.rows.size() == 4);
  for (const auto& r : t.rows) {
    CHECK(r.js > 0.0);
    CHECK(r.tv > 0.0);
  }
  check_orders_reproduce(t);

  c.run.perturbation_pct = 0.0;
  const Table z = cmd_table_initial_data(c, opts_in(dir));
  for (const auto& r : z.rows) {
    CHECK(r.js == 0.0);
    CHECK(r.tv == 0.0);
    CHECK_FALSE(r.order_js.has_value());
  }
}

TEST_CASE("distance rows are symmetric in their inputs") {
  Rng rng(2);
  std::vector<double> a(64), b(64);
  for (auto& x : a) x = rng.uniform01();
  for (auto& x : b) x = rng.uniform01();
  const ProbVector p = ProbVector::from_weights(a, 0, 1), q = ProbVector::from_weights(b, 0, 1);
  CHECK(js_divergence(p, q) == js_divergence(q, p));
  CHECK(tv_distance(p, q) == tv_distance(q, p));
}

TEST_CASE("entry tracker") {
  EntryTracker t(10.0, 0.01);
  CHECK_FALSE(t.entry_time().has_value());
  t.observe(1.0, 10.05);
  CHECK(*t.entry_time() == 1.0);
  t.observe(2.0, 11.0);
  CHECK_FALSE(t.entry_time().has_value());
  t.observe(3.0, 9.95);
  t.observe(4.0, 10.0);
  CHECK(*t.entry_time() == 3.0);
  CHECK(*t.last_violation() == 2.0);
}

TEST_CASE("compare orders") {
  const fs::path dir = scratch("compare");
  ExperimentConfig c = small_config();
  c.tables.threshold = 1.0;
  c.tables.compare_T = 1000.0;
  const ComparisonReport r = cmd_compare_orders(c, opts_in(dir));
  REQUIRE(r.schemes.size() == 2);
  CHECK(r.schemes[0].scheme == "be");
  CHECK(r.schemes[1].scheme == "bdf2");
  for (const auto& s : r.schemes) {
    REQUIRE(s.mean_entry_T.has_value());
    CHECK(*s.mean_entry_T <= 0.01 * r.T);
    REQUIRE(s.variance_entry_T.has_value());
    CHECK(*s.variance_entry_T <= 0.01 * r.T);
  }
  CHECK(fs::exists(dir / "compare_orders.csv"));
  c.reference.mean.reset();
  CHECK_THROWS_AS(cmd_compare_orders(c, opts_in(dir)), MissingReference);
}

TEST_CASE("check-invariants battery") {
  const fs::path dir = scratch("inv");
  ExperimentConfig c;
  const InvariantReport ok = cmd_check_invariants(c, opts_in(dir));
  CHECK(ok.all_pass());
  CHECK(ok.results.size() >= 10);
  CHECK(fs::exists(dir / "invariants.json"));

  ExperimentConfig faulty = c;
  faulty.model.fault = "nonlinear-sign-flip";
  const InvariantReport bad = cmd_check_invariants(faulty, opts_in(dir));
  CHECK_FALSE(bad.all_pass());
  for (const auto& r : bad.results)
    if (r.name == "skew_symmetry") CHECK_FALSE(r.pass);

  ExperimentConfig big = c;
  big.scheme.dt = 4.0;
  const InvariantReport rep = cmd_check_invariants(big, opts_in(dir));
  for (const auto& r : rep.results)
    if (r.name == "energy_envelope" || r.name == "state_bound") CHECK(r.pass);
}
