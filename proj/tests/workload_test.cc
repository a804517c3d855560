// Copyright 2026 The Shoal Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS-IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//


#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "shoal/workload.h"

namespace shoal {
namespace {

constexpr Timestamp kSec = kMicrosPerSecond;

WorkloadConfig Small(std::uint64_t seed = 1) {
  WorkloadConfig c;
  c.seed = seed;
  c.agents = 300;
  return c;
}

TEST_CASE("same seed, same city and same stream") {
  Workload a(Small(5)), b(Small(5)), c(Small(6));
  CHECK(a.map().Serialize() == b.map().Serialize());
  CHECK(a.map().Serialize() != c.map().Serialize());
  const auto ua = a.Step(60 * kSec);
  const auto ub = b.Step(60 * kSec);
  const auto uc = c.Step(60 * kSec);
  CHECK(ua == ub);
  CHECK(ua != uc);
}

TEST_CASE("updates are ordered, on the map and within speed limits") {
  const WorkloadConfig cfg = Small(2);
  Workload w(cfg);
  const auto ups = w.Step(300 * kSec);
  REQUIRE(!ups.empty());
  std::map<ObjectId, Timestamp> last;
  for (std::size_t i = 0; i < ups.size(); ++i) {
    const auto& u = ups[i];
    if (i > 0) {
      const auto& p = ups[i - 1];
      REQUIRE((p.t < u.t || (p.t == u.t && p.id < u.id)));
    }
    REQUIRE(u.loc.x >= 0.0);
    REQUIRE(u.loc.x <= cfg.map_size);
    REQUIRE(u.loc.y >= 0.0);
    REQUIRE(u.loc.y <= cfg.map_size);
    const Agent& a = w.agents()[u.id - cfg.first_id];
    const double speed = Norm(u.vel);
    if (a.kind == AgentKind::kCar) {
      REQUIRE(speed >= cfg.car_speed_min - 1e-9);
      REQUIRE(speed <= cfg.car_speed_max + 1e-9);
    } else {
      REQUIRE(speed <= cfg.pedestrian_speed_max + 1e-9);
    }
    auto it = last.find(u.id);
    if (it != last.end()) {
      REQUIRE(u.t - it->second <= FromSeconds(cfg.max_interval_s));
      REQUIRE(u.t > it->second);
    }
    last[u.id] = u.t;
  }
  CHECK(last.size() == cfg.agents);
}

TEST_CASE("agents on roads sit on a centerline") {
  const WorkloadConfig cfg = Small(3);
  Workload w(cfg);
  std::size_t inside = 0;
  for (Timestamp t = 10 * kSec; t <= 200 * kSec; t += 10 * kSec) {
    w.Step(t);
    for (const Agent& a : w.agents()) {
      const Vec2 p = w.TruePosition(a);
      if (a.inside()) {
        ++inside;
        const Box& box = w.map().buildings()[static_cast<std::size_t>(a.building)].box;
        REQUIRE(box.Contains(p));
        continue;
      }
      const double pitch = w.map().pitch();
      const double fx = std::remainder(p.x, pitch);
      const double fy = std::remainder(p.y, pitch);
      REQUIRE(std::min(std::abs(fx), std::abs(fy)) < 1e-6);
      REQUIRE(a.offset >= 0.0);
      REQUIRE(a.offset <= pitch + 1e-9);
    }
  }
  CHECK(inside > 0);
}

TEST_CASE("buildings sit between the roads with entrances on their walls") {
  const WorkloadConfig cfg = Small(4);
  const RoadMap map = RoadMap::Generate(cfg);
  CHECK(map.buildings().size() == static_cast<std::size_t>(cfg.blocks * cfg.blocks));
  for (const Building& b : map.buildings()) {
    REQUIRE(b.box.width() == doctest::Approx(map.pitch() - 2 * cfg.road_half_width));
    const bool on_x_wall = std::abs(b.entrance.x - b.box.lo.x) < 1e-9 ||
                           std::abs(b.entrance.x - b.box.hi.x) < 1e-9;
    const bool on_y_wall = std::abs(b.entrance.y - b.box.lo.y) < 1e-9 ||
                           std::abs(b.entrance.y - b.box.hi.y) < 1e-9;
    REQUIRE((on_x_wall || on_y_wall));
    REQUIRE(Distance(b.entrance, b.doorstep) == doctest::Approx(cfg.road_half_width));
    const Vec2 from = map.NodePosition(b.road_from);
    const Vec2 to = map.NodePosition(b.road_to);
    REQUIRE(Distance(from, b.doorstep) == doctest::Approx(b.road_offset));
    REQUIRE(Distance(from, to) == doctest::Approx(map.pitch()));
  }
  // Interior crossroads have four neighbors, corners two.
  CHECK(map.NodeNeighbors(0).size() == 2);
  CHECK(map.NodeNeighbors(cfg.blocks + 2).size() == 4);
}

TEST_CASE("turns are uniform over the roads ahead") {
  WorkloadConfig cfg = Small(9);
  cfg.agents = 2000;
  cfg.pedestrian_fraction = 0.0;
  Workload w(cfg);
  w.set_log_crossroads(true);
  w.Step(600 * kSec);
  std::map<int, std::vector<int>> counts;  // options -> histogram
  for (const auto& e : w.crossroad_log()) {
    auto& h = counts[e.options];
    h.resize(static_cast<std::size_t>(e.options), 0);
    ++h[static_cast<std::size_t>(e.choice)];
  }
  REQUIRE(counts.count(3));
  // Chi-square at p = 0.001: 13.82 for 2 degrees of freedom, 10.83 for 1.
  const std::map<int, double> critical = {{2, 10.83}, {3, 13.82}};
  for (const auto& [options, h] : counts) {
    if (!critical.count(options)) continue;
    double total = 0;
    for (int c : h) total += c;
    REQUIRE(total > 1000);
    const double expected = total / options;
    double chi2 = 0;
    for (int c : h) chi2 += (c - expected) * (c - expected) / expected;
    INFO("options " << options << " chi2 " << chi2);
    CHECK(chi2 < critical.at(options));
  }
}

TEST_CASE("invalid workload parameters name the field") {
  WorkloadConfig c = Small();
  c.agents = 0;
  CHECK_THROWS_WITH_AS(c.Validate(), doctest::Contains("agents"), std::invalid_argument);
  c = Small();
  c.road_half_width = 30;
  CHECK_THROWS_WITH_AS(c.Validate(), doctest::Contains("road_half_width"), std::invalid_argument);
  c = Small();
  c.car_speed_min = 3;
  CHECK_THROWS_AS(Workload{c}, std::invalid_argument);
}

}  // namespace
}  // namespace shoal
