#include <doctest.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "frofa/report.hpp"
#include "test_support.hpp"

using namespace frofa;

namespace {

void write_summary(const std::filesystem::path& dir, const std::string& id, std::vector<double> means) {
  std::filesystem::create_directories(dir);
  nlohmann::json j{{"pipeline_id", id}, {"config_hash", "abc"}, {"shots", nlohmann::json::array()}};
  const std::uint32_t shots[] = {1, 5, 10, 25};
  for (std::size_t i = 0; i < means.size(); ++i) j["shots"].push_back({{"shot", shots[i]}, {"mean_top1", means[i]}});
  std::ofstream(dir / "summary.json") << j.dump(2);
}

}  // namespace

TEST_CASE("gain formatting") {
  CHECK(format_gain(0.641 - 0.580) == "+0.061");
  CHECK(format_gain(0.0) == "0.000");
  CHECK(format_gain(-0.0001) == "0.000");
  CHECK(format_gain(-0.012) == "-0.012");
}

TEST_CASE("gains against a named baseline") {
  std::vector<RunSummary> runs{{"baseline", "", {{1, 0.580}}}, {"bc2", "", {{1, 0.641}}}, {"same", "", {{1, 0.580}}}};
  const auto rows = compute_gains(runs, "baseline");
  REQUIRE(rows.size() == 2);
  CHECK(format_gain(rows[0].gain) == "+0.061");
  CHECK(format_gain(rows[1].gain) == "0.000");
  CHECK_THROWS_AS(compute_gains(runs, "nope"), std::invalid_argument);
}

TEST_CASE("report over four shots and three pipelines") {
  testing::TempDir dir("report");
  write_summary(dir / "runs" / "base", "baseline", {0.5, 0.6, 0.7, 0.8});
  write_summary(dir / "runs" / "a", "a", {0.55, 0.6, 0.71, 0.8});
  write_summary(dir / "runs" / "b", "b", {0.45, 0.62, 0.7, 0.81});
  write_summary(dir / "runs" / "c", "c", {0.5, 0.6, 0.7, 0.8});
  std::vector<RunSummary> runs;
  for (const auto& d : find_runs({dir / "runs"})) runs.push_back(read_run_summary(d));
  CHECK(runs.size() == 4);
  const auto rows = compute_gains(runs, "baseline");
  CHECK(rows.size() == 12);
  const auto files = write_report(rows, dir / "out");
  CHECK(files.size() == 5);
  std::ifstream csv(dir / "out" / "gains.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "shot,pipeline_id,baseline_top1,top1,gain");
  std::getline(csv, line);
  CHECK(line == "1,a,0.500,0.550,+0.050");
  CHECK(std::filesystem::exists(dir / "out" / "gains_shot25.svg"));
  std::ifstream svg(dir / "out" / "gains_shot1.svg");
  std::getline(svg, line);
  CHECK(line.rfind("<svg", 0) == 0);
}
