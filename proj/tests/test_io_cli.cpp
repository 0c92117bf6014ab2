#include <doctest.h>

#include <charconv>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "dbql/cli.hpp"
#include "dbql/config.hpp"
#include "dbql/errors.hpp"
#include "dbql/io.hpp"

using namespace dbql;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dbql_test_" + name);
  fs::remove_all(p);
  return p;
}

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

const char* kFixedPoints = R"({
  "experiment": "fixed_points",
  "seed": 1,
  "mdp": {"builder": "two_state"},
  "operator": {"kind": "double", "noise": {"kind": "uniform", "scale": 1.0}},
  "search": {"n_starts": 40}
})";

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
  fs::create_directories(dir);
  write_text_file(dir / name, text);
  return dir / name;
}

}  // namespace

TEST_SUITE("io_cli") {

TEST_CASE("float formatting round-trips") {
  for (double x : {100.162, 0.1, 1e-300, -2.5, 123456789.123456789, 1.0 / 3.0}) {
    const std::string s = format_double(x);
    double back = 0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    CHECK(back == x);
  }
  CHECK(format_double(100.162) == "100.162");
}

TEST_CASE("csv tables") {
  CsvTable empty({"a", "b"});
  CHECK(empty.to_string() == "a,b\n");
  CsvTable t({"name", "x", "n"});
  t.add({std::string("with,comma"), 1.5, std::int64_t{-3}});
  t.add({std::string("q\"uote"), 2.0, std::uint64_t{7}});
  CHECK(t.to_string() == "name,x,n\n\"with,comma\",1.5,-3\n\"q\"\"uote\",2,7\n");
  CHECK_THROWS_AS(t.add({1.0}), ContractViolation);
}

TEST_CASE("unwritable paths raise I/O errors with the path") {
  const fs::path blocker = scratch("blocker");
  write_text_file(blocker, "x");
  try {
    write_text_file(blocker / "sub" / "f.csv", "y");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(e.path().find("dbql_test_blocker") != std::string::npos);
  }
  CHECK_THROWS_AS(read_text_file(blocker / "missing"), IoError);
  fs::remove_all(blocker);
}

TEST_CASE("fnv1a64") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex64(255) == "00000000000000ff");
}

TEST_CASE("config round trip") {
  const ExperimentConfig cfg = parse_config(kFixedPoints);
  const ExperimentConfig back = parse_config(serialize_config(cfg));
  CHECK(back == cfg);
  CHECK(back.doc == nlohmann::json::parse(kFixedPoints));
}

TEST_CASE("config schema") {
  CHECK_THROWS_AS(parse_config("{not json"), SchemaError);
  CHECK_THROWS_AS(parse_config(R"({"bogus": 1})"), SchemaError);
  CHECK_THROWS_AS(parse_config(R"({"search": {"damping": 1.5}})"), SchemaError);
  CHECK_THROWS_AS(parse_config(R"({"simulation": {"alpha": 1.5}})"), SchemaError);
  CHECK_THROWS_AS(parse_config(R"({"operator": {"kind": "triple"}})"), SchemaError);
  CHECK_THROWS_AS(parse_config(R"({"operator": {"kind": "double", "noise": {"kind": "uniform", "scale": -1}}})"),
                  SchemaError);
  try {
    parse_config(R"({"search": {"n_starts": "many"}})");
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("search.n_starts") != std::string::npos);
  }
}

TEST_CASE("overrides") {
  ExperimentConfig cfg = parse_config(kFixedPoints);
  apply_override(cfg, "search.n_starts=7");
  apply_override(cfg, "operator.noise.kind=gaussian");
  apply_override(cfg, "curve.frozen=[1, 2]");
  CHECK(cfg.doc["search"]["n_starts"] == 7);
  CHECK(cfg.doc["operator"]["noise"]["kind"] == "gaussian");
  CHECK(cfg.doc["curve"]["frozen"][1] == 2);
  CHECK(config_search(cfg).n_starts == 7);
  CHECK_THROWS_AS(apply_override(cfg, "no_equals_sign"), SchemaError);
}

TEST_CASE("typed sections") {
  ExperimentConfig cfg = parse_config(R"({
    "mdp": {"builder": "random", "n_states": 4, "n_actions": 2, "branching": 2, "seed": 5},
    "operator": {"kind": "doubly_bounded",
                 "inner": {"kind": "clipped_double", "noise": {"kind": "gaussian", "scale": 0.5}},
                 "dp_floor": [1.0, null, 2.0, null]},
    "simulation": {"alpha": 0.05, "n_epochs": 3, "initial_value": 4.0}
  })");
  const TabularMdp mdp = config_mdp(cfg);
  CHECK(mdp == random_mdp(4, 2, 2, 5));
  const OperatorSpec op = config_operator(cfg, mdp);
  CHECK(op.kind() == OperatorKind::doubly_bounded);
  CHECK(op.bootstrap().kind() == OperatorKind::clipped_double);
  CHECK(std::isinf(op.dp_floor()[1]));
  const SimulationConfig sim = config_simulation(cfg, mdp);
  CHECK(sim.n_iterations == 3 * epoch_length(0.05, 0.99));
  CHECK(sim.initial_value == 4.0);
  CHECK_THROWS_AS(config_operator(parse_config(R"({"operator": {"kind": "doubly_bounded",
      "inner": {"kind": "double", "noise": {"kind": "zero"}}, "dp_floor": [1.0]}})"), mdp),
                  SchemaError);
}

TEST_CASE("inline and file mdps") {
  const fs::path dir = scratch("mdpfile");
  fs::create_directories(dir);
  write_text_file(dir / "m.json", R"({"n_states": 1, "n_actions": 1, "discount": 0.5,
                                      "reward": [[2.0]], "transition": [[[1.0]]]})");
  write_text_file(dir / "c.json", R"({"mdp": {"file": "m.json"}})");
  const ExperimentConfig cfg = load_config(dir / "c.json");
  CHECK(config_mdp(cfg).reward(0, 0) == 2.0);
  const ExperimentConfig inl = parse_config(R"({"mdp": {"inline": {"n_states": 1, "n_actions": 1,
      "discount": 0.5, "reward": [[3.0]], "transition": [[[1.0]]]}}})");
  CHECK(config_mdp(inl).reward(0, 0) == 3.0);
  fs::remove_all(dir);
}

TEST_CASE("cli exit codes") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"validate-config"}).code == kExitUsage);

  const fs::path dir = scratch("cli_codes");
  const fs::path bad = write_config(dir, "bad.json", R"({"simulation": {"alpha": 1.5}})");
  auto r = cli({"validate-config", "--config", bad.string()});
  CHECK(r.code == kExitSchema);
  const auto err = nlohmann::json::parse(r.err);
  CHECK(err["error"] == "schema");

  const fs::path good = write_config(dir, "good.json", kFixedPoints);
  CHECK(cli({"validate-config", "--config", good.string()}).code == kExitOk);
  CHECK(cli({"validate-config", "--config", good.string(), "--set", "search.damping=1.5"}).code ==
        kExitSchema);
  CHECK(cli({"curve", "--config", good.string()}).code == kExitSchema);
  CHECK(cli({"validate-config", "--config", (dir / "missing.json").string()}).code == kExitIo);

  write_text_file(dir / "blocker", "x");
  CHECK(cli({"fixed-points", "--config", good.string(), "--out", (dir / "blocker" / "o").string()}).code ==
        kExitIo);
  fs::remove_all(dir);
}

TEST_CASE("cli fixed-points output and determinism") {
  const fs::path dir = scratch("cli_fp");
  const fs::path cfg = write_config(dir, "fp.json", kFixedPoints);
  auto r1 = cli({"fixed-points", "--config", cfg.string(), "--out", (dir / "a").string()});
  REQUIRE(r1.code == kExitOk);
  auto r2 = cli({"fixed-points", "--config", cfg.string(), "--out", (dir / "b").string()});
  REQUIRE(r2.code == kExitOk);
  auto par = cli({"fixed-points", "--config", cfg.string(), "--out", (dir / "p").string(), "--jobs", "3"});
  REQUIRE(par.code == kExitOk);
  const std::string a = read_text_file(dir / "a" / "fixed_points.csv");
  CHECK(a == read_text_file(dir / "b" / "fixed_points.csv"));
  CHECK(a == read_text_file(dir / "p" / "fixed_points.csv"));
  CHECK(read_text_file(dir / "a" / "manifest.json") == read_text_file(dir / "b" / "manifest.json"));
  std::size_t lines = 0;
  for (char c : a) lines += c == '\n';
  CHECK(lines == 4);
  CHECK(a.rfind("index,v_s0,v_s1,residual,recheck_residual,", 0) == 0);

  const auto manifest = nlohmann::json::parse(read_text_file(dir / "a" / "manifest.json"));
  CHECK(manifest["subcommand"] == "fixed-points");
  CHECK(manifest["seed"] == 1);
  CHECK(manifest["outputs"][0]["file"] == "fixed_points.csv");
  CHECK(manifest["outputs"][0]["fnv1a64"] == hex64(fnv1a64(a)));
  CHECK_FALSE(manifest.contains("wall_seconds"));

  auto r3 = cli({"fixed-points", "--config", cfg.string(), "--out", (dir / "c").string(), "--seed", "9"});
  REQUIRE(r3.code == kExitOk);
  CHECK(nlohmann::json::parse(read_text_file(dir / "c" / "manifest.json"))["seed"] == 9);
  fs::remove_all(dir);
}

}
