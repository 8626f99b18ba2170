#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "genens_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "genens-run");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return genens::cli::run(static_cast<int>(argv.size()), argv.data());
}

std::size_t file_count(const fs::path& dir) {
  if (!fs::exists(dir)) return 0;
  return static_cast<std::size_t>(std::distance(fs::directory_iterator(dir), fs::directory_iterator()));
}

const char* kCurveConfig = R"([process]
id = gaussian_toy

[data]
test_rows = 50

[generator]
kind = bootstrap

[predictors]
list = cart, ridge:1

[experiment]
seed = 7
m_values = 1, 2
repeats = 6
)";

}  // namespace

TEST_CASE("curve then predict-curve") {
  const fs::path dir = scratch("pipeline");
  write_file(dir / "curve.ini", kCurveConfig);
  const fs::path out = dir / "out";
  REQUIRE(run_cli({"curve", "--config", (dir / "curve.ini").string(), "--output", out.string()}) ==
          genens::cli::kOk);
  CHECK(fs::exists(out / "curve.csv"));
  CHECK(fs::exists(out / "curve_summary.csv"));
  const auto manifest = nlohmann::json::parse(read_file(out / "manifest.json"));
  CHECK(manifest["command"] == "curve");
  CHECK(manifest["seed"] == 7);
  CHECK(manifest["exit_status"] == 0);
  CHECK(manifest["config_hash"].get<std::string>().size() == 16);

  write_file(dir / "predict.ini", "[predict]\ncurve = out/curve.csv\nm_targets = 4, 8, 16, 32\n");
  const fs::path pout = dir / "pred";
  REQUIRE(run_cli({"predict-curve", "--config", (dir / "predict.ini").string(), "--output", pout.string()}) ==
          genens::cli::kOk);
  const std::string table = read_file(pout / "predicted_curve.csv");
  for (const char* m : {",4,", ",8,", ",16,", ",32,"}) CHECK(table.find(m) != std::string::npos);
  CHECK(table.find("cart") != std::string::npos);
  CHECK(table.find("ridge:1") != std::string::npos);
}

TEST_CASE("reruns are byte-identical") {
  const fs::path dir = scratch("rerun");
  write_file(dir / "curve.ini", kCurveConfig);
  const std::string cfg = (dir / "curve.ini").string();
  REQUIRE(run_cli({"curve", "--config", cfg, "--output", (dir / "a").string()}) == 0);
  REQUIRE(run_cli({"curve", "--config", cfg, "--output", (dir / "b").string(), "--jobs", "1"}) == 0);
  REQUIRE(run_cli({"curve", "--config", cfg, "--output", (dir / "c").string(), "--seed", "8"}) == 0);
  for (const char* f : {"curve.csv", "curve_summary.csv", "manifest.json"})
    CHECK(read_file(dir / "a" / f) == read_file(dir / "b" / f));
  CHECK(read_file(dir / "a" / "curve.csv") != read_file(dir / "c" / "curve.csv"));

  write_file(dir / "gen.ini",
             "[process]\nid = discrete_toy\n[generator]\nkind = noisy_marginal_dp\nmode = split_budget\n"
             "[experiment]\nseed = 2\nm = 3\n");
  REQUIRE(run_cli({"generate", "--config", (dir / "gen.ini").string(), "--output", (dir / "g1").string()}) == 0);
  REQUIRE(run_cli({"generate", "--config", (dir / "gen.ini").string(), "--output", (dir / "g2").string()}) == 0);
  CHECK(file_count(dir / "g1") == 5);
  for (const char* f : {"synthetic_000.csv", "synthetic_002.csv", "provenance.json"})
    CHECK(read_file(dir / "g1" / f) == read_file(dir / "g2" / f));
}

TEST_CASE("invalid configurations exit 1 and leave nothing behind") {
  const fs::path dir = scratch("invalid");
  const fs::path out = dir / "out";
  // Each config is broken in exactly one place; the message names the field.
  const std::vector<std::pair<std::string, std::string>> bad{
      {"[process]\nid = gaussian_toy\n[predictors]\nlist = cart\n[experiment]\nm_values = 2, 1\n",
       "[experiment] m_values"},
      {"[process]\nid = gaussian_toy\n[predictors]\nlist = cart\n[experiment]\nm_valuez = 1, 2\n",
       "[experiment] m_valuez"},
      {"[process]\nid = no_such_process\n[predictors]\nlist = cart\n", "[process]"},
      {"[process]\nid = gaussian_toy\n[predictors]\nlist = logistic\n", "[predictors] list"},
      {"[process]\nid = gaussian_toy\n", "[predictors] list"},
      {"[data]\ncsv = missing.csv\nschema = x:numeric, y:numeric:target\n[predictors]\nlist = cart\n",
       "[data] csv"},
      {"[process]\nid = gaussian_toy\n[predictors]\nlist = cart\n[generator]\nmode = shared_summary\n",
       "[generator] mode"},
  };
  for (std::size_t i = 0; i < bad.size(); ++i) {
    const fs::path cfg = dir / ("bad" + std::to_string(i) + ".ini");
    write_file(cfg, bad[i].first);
    std::ostringstream err;
    auto* old = std::cerr.rdbuf(err.rdbuf());
    const int code = run_cli({"curve", "--config", cfg.string(), "--output", out.string()});
    std::cerr.rdbuf(old);
    CHECK(code == genens::cli::kInvalid);
    CHECK_MESSAGE(err.str().find(bad[i].second) != std::string::npos, err.str());
    CHECK(file_count(out) == 0);
  }
  write_file(dir / "dec.ini", "[process]\nid = gaussian_toy\n[decompose]\nmode = shared_summary\n");
  CHECK(run_cli({"decompose", "--config", (dir / "dec.ini").string(), "--output", out.string()}) ==
        genens::cli::kInvalid);
  CHECK(run_cli({"curve"}) == genens::cli::kInvalid);
  CHECK(run_cli({"curve", "--config", (dir / "absent.ini").string()}) == genens::cli::kInvalid);
  CHECK(run_cli({"explode", "--config", (dir / "dec.ini").string()}) == genens::cli::kInvalid);
  CHECK(file_count(out) == 0);
}

TEST_CASE("unreadable data exits 2") {
  const fs::path dir = scratch("runtime");
  write_file(dir / "data.csv", "x,y\n1,2\nfoo,3\n");
  write_file(dir / "run.ini", "[data]\ncsv = data.csv\nschema = x:numeric, y:numeric:target\n");
  const fs::path out = dir / "out";
  CHECK(run_cli({"curve", "--config", (dir / "run.ini").string(), "--output", out.string()}) ==
        genens::cli::kRuntime);
  CHECK(file_count(out) == 0);
}

TEST_CASE("decompose exit codes") {
  const fs::path dir = scratch("decompose");
  const std::string base =
      "[process]\nid = gaussian_toy\n[decompose]\npredictor = mean\nm = 2\nreal = 20\ntheta = 6\n"
      "syn = 4\ny = 400\ntest_points = 4\nbootstrap = 20\n";
  write_file(dir / "ok.ini", base);
  REQUIRE(run_cli({"decompose", "--config", (dir / "ok.ini").string(), "--output", (dir / "ok").string()}) ==
          genens::cli::kOk);
  const auto report = nlohmann::json::parse(read_file(dir / "ok" / "decomposition.json"));
  CHECK(report["flagged"] == false);
  CHECK(report["terms"].contains("mv"));

  // A zero threshold flags any nonzero gap.
  write_file(dir / "strict.ini", base + "flag_threshold = 0\n");
  CHECK(run_cli({"decompose", "--config", (dir / "strict.ini").string(), "--output",
                 (dir / "strict").string()}) == genens::cli::kFlagged);
  const auto flagged = nlohmann::json::parse(read_file(dir / "strict" / "decomposition.json"));
  CHECK(flagged["flagged"] == true);
  CHECK(nlohmann::json::parse(read_file(dir / "strict" / "manifest.json"))["exit_status"] == 3);
}

TEST_CASE("nested-var and forest-curve") {
  const fs::path dir = scratch("nested");
  write_file(dir / "n.ini",
             "[process]\nid = linear_toy\n[data]\ntest_rows = 20\n[generator]\nkind = gaussian_ppd\n"
             "[predictors]\nlist = knn:1, ridge:1\n[nested]\nr_theta = 4\ns_per_theta = 2\nbootstrap = 20\n"
             "[forest]\ntrees = 6\n[experiment]\nseed = 1\n");
  REQUIRE(run_cli({"nested-var", "--config", (dir / "n.ini").string(), "--output", (dir / "a").string()}) == 0);
  CHECK(fs::exists(dir / "a" / "nested_var.csv"));
  CHECK(fs::exists(dir / "a" / "nested_var_summary.csv"));
  REQUIRE(run_cli({"forest-curve", "--config", (dir / "n.ini").string(), "--output", (dir / "b").string()}) == 0);
  const std::string forest = read_file(dir / "b" / "forest_curve.csv");
  CHECK(forest.rfind("dataset,metric,trees,score\n", 0) == 0);
  CHECK(std::count(forest.begin(), forest.end(), '\n') == 7);
}
