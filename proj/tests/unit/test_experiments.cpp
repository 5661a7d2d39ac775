#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gff2d/cable_percolation.hpp"
#include "gff2d/errors.hpp"
#include "gff2d/experiments.hpp"

using namespace gff2d;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gff2d_exp_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

json scaling_config() {
  return json::parse(R"({
    "seed": 7,
    "experiments": [
      {"name": "sc", "command": "scaling", "grid": [{"a": 0.6, "N": 8}], "samples": 200,
       "side_factor": 4, "eval_fraction": 0.25,
       "checks": [{"metric": "rows", "min": 1, "max": 1}]}
    ]
  })");
}

}  // namespace

TEST_CASE("empty experiment list") {
  const auto dir = scratch("empty");
  const auto r = run_config(json::parse(R"({"experiments": []})"), dir);
  CHECK(r.ok);
  CHECK(r.manifest["tasks"].empty());
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(run_config(json::object(), dir).ok);
}

TEST_CASE("scaling task writes a one-row table and reruns byte-identically") {
  const auto d1 = scratch("sc1"), d2 = scratch("sc2");
  const auto r = run_config(scaling_config(), d1);
  REQUIRE(r.ok);
  const std::string csv = slurp(d1 / "sc" / "scaling.csv");
  std::istringstream lines(csv);
  std::string header, row, extra;
  std::getline(lines, header);
  std::getline(lines, row);
  CHECK_FALSE(std::getline(lines, extra));
  std::string expect;
  for (const auto& c : scaling_columns()) expect += (expect.empty() ? "" : ",") + c;
  CHECK(header == expect);
  CHECK(std::count(row.begin(), row.end(), ',') == std::count(header.begin(), header.end(), ','));
  CHECK(fs::exists(d1 / "sc" / "plot_scaling.py"));
  CHECK(csv.find('\r') == std::string::npos);

  const json manifest = json::parse(slurp(d1 / "manifest.json"));
  const auto r2 = run_config(manifest, d2);
  REQUIRE(r2.ok);
  CHECK(slurp(d2 / "sc" / "scaling.csv") == csv);
  const auto& o1 = manifest["tasks"][0]["outputs"];
  const auto& o2 = r2.manifest["tasks"][0]["outputs"];
  REQUIRE(o1.size() == o2.size());
  for (std::size_t i = 0; i < o1.size(); ++i) CHECK(o1[i]["sha256"] == o2[i]["sha256"]);
  CHECK(manifest["config_digest"] == r2.manifest["config_digest"]);
}

TEST_CASE("schema violations are itemized") {
  const json bad = json::parse(R"({
    "seeed": 1,
    "experiments": [
      {"command": "theta", "abar": "high"},
      {"command": "warp"},
      {"command": "capacity", "N": 8, "ball_radius": 2, "colour": "red"},
      {"command": "tube", "N": 64, "P": 2, "checks": [{"metric": "cap"}]}
    ]
  })");
  const auto errs = validate_config(bad);
  auto has = [&errs](const std::string& needle) {
    return std::any_of(errs.begin(), errs.end(), [&](const std::string& e) { return e.find(needle) != std::string::npos; });
  };
  CHECK(has("unknown top-level field 'seeed'"));
  CHECK(has("experiments[0]: missing required field 'N'"));
  CHECK(has("experiments[0]: field 'abar' must be number"));
  CHECK(has("experiments[1]: unknown command 'warp'"));
  CHECK(has("experiments[2]: unknown field 'colour'"));
  CHECK(has("experiments[3]: checks[0]"));
  CHECK(errs.size() == 6);
  CHECK_THROWS_AS(run_config(bad, scratch("bad")), ValidationError);
}

TEST_CASE("failed checks and failed tasks make the run fail") {
  const auto dir = scratch("fail");
  const json cfg = json::parse(R"({
    "experiments": [
      {"name": "c", "command": "capacity", "N": 8, "ball_radius": 0,
       "checks": [{"metric": "cap", "min": 100}]},
      {"name": "g", "command": "green", "N": 8, "window_kind": "sphere"},
      {"name": "ok", "command": "capacity", "N": 8, "ball_radius": 0,
       "checks": [{"metric": "size", "min": 1, "max": 1}]}
    ]
  })");
  const auto r = run_config(cfg, dir);
  CHECK_FALSE(r.ok);
  const auto& t = r.manifest["tasks"];
  CHECK(t[0]["status"] == "check_failed");
  CHECK(t[1]["status"] == "failed");
  CHECK(t[1]["error"].get<std::string>().find("window_kind") != std::string::npos);
  CHECK(t[2]["status"] == "ok");
  // cap({0}) = 1/g(0,0)
  CHECK(t[2]["metrics"]["cap"].get<double>() > 0);
}
