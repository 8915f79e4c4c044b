#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "quadplan/geometry.hpp"
#include "quadplan/rng.hpp"

using namespace quadplan;

namespace {

Target make_target(int id, double x, double y, double r = 1.0) {
  return Target{id, Point{x, y}, r};
}

}  // namespace

TEST_CASE("dist basics") {
  CHECK(dist({0, 0}, {0, 0}) == 0.0);
  CHECK(dist({0, 0}, {3, 4}) == 5.0);
  CHECK(dist({-1000, -1000}, {1000, 1000}) == Catch::Approx(2000.0 * std::sqrt(2.0)));
}

TEST_CASE("dist is a metric on random triples") {
  Rng rng(17);
  for (int i = 0; i < 500; ++i) {
    const Point a{rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3)};
    const Point b{rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3)};
    const Point c{rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3)};
    CHECK(dist(a, b) >= 0.0);
    CHECK(dist(a, b) == dist(b, a));
    CHECK(dist(a, c) <= dist(a, b) + dist(b, c) + 1e-9);
  }
}

TEST_CASE("loiter arc length") {
  CHECK(loiter_arc_length(make_target(1, 0, 0, 1.0)) == Catch::Approx(2.0 * std::numbers::pi));
  CHECK(loiter_arc_length(make_target(1, 0, 0, 3.0)) == Catch::Approx(6.0 * std::numbers::pi));
  CHECK(loiter_arc_length(make_target(1, 0, 0, 0.5)) == Catch::Approx(std::numbers::pi));
}

TEST_CASE("tour cost") {
  const Depot depot{{0, 0}};
  const TargetMap targets = make_target_map({make_target(1, 10, 0), make_target(2, 10, 10)});

  SECTION("empty tour is free") {
    CHECK(tour_cost(Tour{0, {}}, depot, targets) == 0.0);
  }
  SECTION("single target: leg plus one loiter") {
    CHECK(tour_cost(Tour{0, {1}}, depot, targets) ==
          Catch::Approx(10.0 + 2.0 * std::numbers::pi));
  }
  SECTION("two targets: two legs plus two loiters") {
    CHECK(tour_cost(Tour{0, {1, 2}}, depot, targets) ==
          Catch::Approx(20.0 + 4.0 * std::numbers::pi));
  }
  SECTION("unresolved id") {
    CHECK_THROWS_AS(tour_cost(Tour{0, {99}}, depot, targets), std::out_of_range);
  }
}

TEST_CASE("tour cost is translation invariant") {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Target> ts;
    for (int i = 0; i < 5; ++i) {
      ts.push_back(make_target(i, rng.uniform(-100, 100), rng.uniform(-100, 100),
                               rng.uniform(0.5, 4.0)));
    }
    const Vec2 shift{rng.uniform(-500, 500), rng.uniform(-500, 500)};
    std::vector<Target> shifted = ts;
    for (auto& t : shifted) t.position = t.position + shift;
    const Depot depot{{rng.uniform(-100, 100), rng.uniform(-100, 100)}};
    const Depot depot_shifted{depot.position + shift};
    const Tour tour{0, {0, 1, 2, 3, 4}};
    CHECK(tour_cost(tour, depot, make_target_map(ts)) ==
          Catch::Approx(tour_cost(tour, depot_shifted, make_target_map(shifted))).epsilon(1e-12));
  }
}

TEST_CASE("appending a target never decreases tour cost") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Target> ts;
    for (int i = 0; i < 6; ++i) {
      ts.push_back(make_target(i, rng.uniform(-100, 100), rng.uniform(-100, 100),
                               rng.uniform(0.5, 4.0)));
    }
    const TargetMap map = make_target_map(ts);
    const Depot depot{{0, 0}};
    Tour tour{0, {0, 1, 2, 3, 4}};
    const double before = tour_cost(tour, depot, map);
    tour.sequence.push_back(5);
    CHECK(tour_cost(tour, depot, map) >= before);
  }
}

TEST_CASE("team cost") {
  const Depot depot{{0, 0}};
  const TargetMap targets = make_target_map({make_target(1, 10, 0), make_target(2, -10, 0)});

  SECTION("all tours empty") {
    CHECK(team_cost(Allocation{{Tour{0, {}}, Tour{1, {}}}}, depot, targets) == 0.0);
  }
  SECTION("single tour reduction") {
    const Allocation alloc{{Tour{0, {1}}}};
    CHECK(team_cost(alloc, depot, targets) == Catch::Approx(10.0 + 2.0 * std::numbers::pi));
  }
  SECTION("mirrored pair") {
    const Allocation alloc{{Tour{0, {1}}, Tour{1, {2}}}};
    CHECK(team_cost(alloc, depot, targets) ==
          Catch::Approx(2.0 * (10.0 + 2.0 * std::numbers::pi)));
  }
  SECTION("exact sum of tour costs") {
    const Allocation alloc{{Tour{0, {1}}, Tour{1, {2}}}};
    const double expected =
        tour_cost(alloc.tours[0], depot, targets) + tour_cost(alloc.tours[1], depot, targets);
    CHECK(team_cost(alloc, depot, targets) == expected);  // bitwise, fixed order
  }
}

TEST_CASE("make_target_map rejects duplicate ids") {
  CHECK_THROWS_WITH(make_target_map({make_target(7, 0, 0), make_target(7, 1, 1)}),
                    Catch::Matchers::ContainsSubstring("7"));
}
