#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "quadplan/simharness.hpp"

using namespace quadplan;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "quadplan-tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config validation") {
  ExperimentConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  cfg.trials = 0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg = {};
  cfg.region.min_x = cfg.region.max_x;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg = {};
  cfg.kind = StudyKind::holonomic_ratio;
  cfg.quad.drag_coeff = 0.0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  // degenerate zero-distance instances are excluded up front
  cfg = {};
  cfg.kind = StudyKind::holonomic_ratio;
  cfg.min_transition_gap = 0.0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
}

TEST_CASE("cost study") {
  ExperimentConfig cfg;
  cfg.kind = StudyKind::cost_vs_fleet;
  cfg.trials = 20;
  cfg.master_seed = 5;

  SECTION("m equals n reduces to single-target tours") {
    cfg.target_counts = {6};
    cfg.fleet_sizes = {6};
    const auto dir = fresh_dir("cost-mn");
    const auto result = run_cost_study(cfg, dir);
    REQUIRE(result.cells.size() == 1);

    // every vehicle flies depot->target + one loiter; recompute the mean from
    // a fresh sample of the same stream
    Rng rng(derive_stream(5, 0 * 1000003 + 6 * 97 + 6));
    const auto targets = detail_sim::sample_targets(rng, 6, cfg.region, cfg.loiter_radius);
    double expect = 0.0;
    for (const auto& t : targets) {
      expect += dist({0, 0}, t.position) + loiter_arc_length(t);
    }
    expect /= 6.0;
    const std::string csv = slurp(result.trial_files.front());
    std::istringstream lines(csv);
    std::string header, first_row;
    std::getline(lines, header);
    std::getline(lines, first_row);
    const auto second_comma = first_row.find(',', first_row.find(',') + 1);
    const double recorded = std::stod(first_row.substr(second_comma + 1));
    CHECK(recorded == Catch::Approx(expect).epsilon(1e-12));
  }

  SECTION("aggregates equal recomputation from the persisted records") {
    cfg.target_counts = {10};
    cfg.fleet_sizes = {3};
    const auto dir = fresh_dir("cost-agg");
    const auto result = run_cost_study(cfg, dir);
    std::ifstream csv(result.trial_files.front());
    std::string line;
    std::getline(csv, line);  // header
    double sum = 0.0;
    int count = 0;
    while (std::getline(csv, line)) {
      std::istringstream row(line);
      std::string field;
      std::getline(row, field, ',');  // trial
      std::getline(row, field, ',');  // team cost
      std::getline(row, field, ',');  // cost per vehicle
      sum += std::stod(field);
      ++count;
    }
    CHECK(count == cfg.trials);
    CHECK(sum / count == result.cells.front().mean_cost_per_vehicle);
  }

  SECTION("identical seeds give byte-identical files across thread counts") {
    cfg.target_counts = {12};
    cfg.fleet_sizes = {3};
    const auto dir1 = fresh_dir("cost-t1");
    const auto dir4 = fresh_dir("cost-t4");
    cfg.threads = 1;
    const auto r1 = run_cost_study(cfg, dir1);
    cfg.threads = 4;
    const auto r4 = run_cost_study(cfg, dir4);
    CHECK(slurp(r1.trial_files.front()) == slurp(r4.trial_files.front()));
    CHECK(slurp(r1.summary_file) == slurp(r4.summary_file));
  }
}

TEST_CASE("dynamic study") {
  ExperimentConfig cfg;
  cfg.kind = StudyKind::dynamic_ratio;
  cfg.target_counts = {14};
  cfg.fleet_sizes = {2};
  cfg.trials = 15;
  cfg.master_seed = 11;

  SECTION("zero arrivals still leaves rho above one by the return legs") {
    cfg.arrival_count = 0;
    const auto dir = fresh_dir("dyn-r0");
    const auto result = run_dynamic_study(cfg, dir);
    for (const auto& tr : result.trials) {
      CHECK(tr.rho > 1.0);
      CHECK(tr.proc1 > tr.proc2);
    }
  }

  SECTION("histogram counts everything and keeps exact edges") {
    cfg.arrival_count = 6;
    const auto dir = fresh_dir("dyn-hist");
    const auto result = run_dynamic_study(cfg, dir);
    int total = result.underflow + result.overflow;
    for (int c : result.histogram_counts) total += c;
    CHECK(total == cfg.trials);
    REQUIRE(result.histogram_edges.size() == result.histogram_counts.size() + 1);
    CHECK(result.histogram_edges.front() == 0.5);
    CHECK(result.histogram_edges.back() == 2.5);
    CHECK(result.mean_rho > 0.0);

    const std::string agg = slurp(result.aggregate_file);
    CHECK(agg.find("histogram_edges") != std::string::npos);
    CHECK(agg.find("\"arrival_count\": 6") != std::string::npos);
  }

  SECTION("thread count never changes the records") {
    cfg.arrival_count = 5;
    const auto dir1 = fresh_dir("dyn-t1");
    const auto dir3 = fresh_dir("dyn-t3");
    cfg.threads = 1;
    const auto r1 = run_dynamic_study(cfg, dir1);
    cfg.threads = 3;
    const auto r3 = run_dynamic_study(cfg, dir3);
    CHECK(slurp(r1.trial_file) == slurp(r3.trial_file));
  }
}

TEST_CASE("holonomic study") {
  ExperimentConfig cfg;
  cfg.kind = StudyKind::holonomic_ratio;
  cfg.trials = 10;
  cfg.master_seed = 3;
  cfg.entry_samples = 4;  // keep the unit test quick
  const auto dir = fresh_dir("holo");
  const auto result = run_holonomic_study(cfg, dir);

  int solved = 0;
  for (const auto& tr : result.trials) {
    if (!tr.solved) continue;
    ++solved;
    CHECK(tr.transition_ratio >= 1.0);
    CHECK(tr.initial_distance >= cfg.min_transition_gap);
    CHECK(tr.initial_distance <= cfg.max_transition_gap);
  }
  CHECK(solved == 10);
  CHECK(result.failures == 0);
  CHECK(result.mean_ratio >= 1.0);

  int binned = 0;
  for (const auto& bin : result.bins) binned += bin.count;
  CHECK(binned == solved);
}
