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
#include <random>
#include <vector>

#include "doctest.h"
#include "shoal/nn.h"
#include "shoal/workload.h"
#include "support.h"

namespace shoal {
namespace {

constexpr Timestamp kSec = kMicrosPerSecond;

struct World {
  explicit World(int spatial_level = 8)
      : tables(store, SpatialGrid(1000.0), spatial_level), tracker(tables, SchoolConfig{}) {}

  Store store;
  ObjectTables tables;
  SchoolTracker tracker;
};

FlagConfig Flag(int max_level) {
  FlagConfig f;
  f.max_level = max_level;
  return f;
}

TEST_CASE("flag step") {
  CHECK(FlagStep(0, 32.0, 4) == -4);
  CHECK(FlagStep(32, 32.0, 4) == 0);
  CHECK(FlagStep(127, 32.0, 4) == 0);   // half of log2(3.97)
  CHECK(FlagStep(128, 32.0, 4) == 1);
  CHECK(FlagStep(1, 32.0, 4) == -2);    // half of -5, toward zero
  CHECK(FlagStep(7, 32.0, 4) == -1);
  CHECK(FlagStep(1u << 30, 32.0, 4) == 12);
}

TEST_CASE("nearest leaders match a brute-force ranking at every level") {
  World w;
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  std::vector<ObjectId> ids;
  for (ObjectId id = 0; id < 600; ++id) {
    w.tracker.ProcessUpdate({id, {u(rng), u(rng)}, {0, 0}, 0});
    ids.push_back(id);
  }
  NearestNeighborSearch nn(w.tracker, Flag(8));
  for (int trial = 0; trial < 200; ++trial) {
    const Vec2 q{u(rng), u(rng)};
    const std::size_t count = 1 + rng() % 20;
    const int level = static_cast<int>(rng() % 9);
    const auto got = nn.NearestLeaders(q, count, level);
    const auto want = testing::BruteKnn(w.tracker, ids, {q, count, 0});
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      REQUIRE(got[i].id == want[i].id);
      REQUIRE(got[i].dist == doctest::Approx(want[i].dist));
    }
  }
  CHECK_THROWS_AS(nn.NearestLeaders({1, 1}, 0, 3), std::invalid_argument);
  CHECK_THROWS_AS(nn.NearestLeaders({1, 1}, 1, 9), std::invalid_argument);
}

TEST_CASE("knn over schools is exact under the model") {
  WorkloadConfig wc;
  wc.agents = 800;
  wc.seed = 17;
  Workload load(wc);
  World w;
  ClusteringScheduler sched(w.tracker, 0);
  NearestNeighborSearch nn(w.tracker, Flag(8));
  std::vector<ObjectId> ids;
  for (ObjectId id = 0; id < wc.agents; ++id) ids.push_back(id);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  std::size_t checked = 0;
  for (Timestamp t = kSec; t <= 90 * kSec; t += kSec) {
    for (const auto& m : load.Step(t)) w.tracker.ProcessUpdate(m);
    sched.Tick(t);
    if (t % (15 * kSec) != 0) continue;
    for (int trial = 0; trial < 40; ++trial) {
      const NNQuery q{{u(rng), u(rng)}, 1 + rng() % 50, t + static_cast<Timestamp>(rng() % kSec)};
      const auto want = testing::BruteKnn(w.tracker, ids, q);
      for (int level : {2, 5, 8}) {
        const auto got = nn.Knn(q, level);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
          REQUIRE(got[i].id == want[i].id);
          REQUIRE(got[i].dist == doctest::Approx(want[i].dist));
        }
        ++checked;
      }
      CHECK(nn.Knn(q) == nn.Knn(q, nn.CachedLevel(q.loc, q.t)));
    }
  }
  CHECK(checked == 3 * 40 * 6);
  CHECK(w.tracker.AverageSchoolSize() > 1.0);

  // k beyond the population returns everyone.
  const NNQuery all{{500, 500}, 5000, 90 * kSec};
  CHECK(nn.Knn(all, 4).size() == wc.agents);
  CHECK_THROWS_AS(nn.Knn({{500, 500}, 0, 0}, 4), std::invalid_argument);
  CHECK_THROWS_AS(nn.Knn({{-5, 500}, 1, 0}, 4), std::out_of_range);
}

TEST_CASE("best level stays within bounds and settles where probes hold about sigma") {
  World w(10);
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  const std::size_t n = 20000;
  for (ObjectId id = 0; id < n; ++id) w.tracker.ProcessUpdate({id, {u(rng), u(rng)}, {0, 0}, 0});
  FlagConfig f;
  f.min_level = 1;
  f.max_level = 10;
  NearestNeighborSearch nn(w.tracker, f);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec2 q{u(rng), u(rng)};
    FlagTrace trace;
    const int level = nn.BestLevel(q, n, nullptr, &trace);
    REQUIRE(level >= f.min_level);
    REQUIRE(level <= f.max_level);
    REQUIRE(trace.probed_levels.back() == level);
    // Uniform density: 20000 / 4^l leaders per cell; sigma = 32 puts the
    // balance point between levels 2 and 5.
    REQUIRE(level >= 2);
    REQUIRE(level <= 5);
    REQUIRE(trace.iterations <= 4);
  }
  FlagConfig narrow = f;
  narrow.min_level = 7;
  narrow.max_level = 7;
  NearestNeighborSearch pinned(w.tracker, narrow);
  CHECK(pinned.BestLevel({10, 10}, n) == 7);

  FlagConfig bad = f;
  bad.max_level = 11;
  CHECK_THROWS_AS(NearestNeighborSearch(w.tracker, bad), std::invalid_argument);
  bad = f;
  bad.sigma = 0.5;
  CHECK_THROWS_AS(NearestNeighborSearch(w.tracker, bad), std::invalid_argument);
}

TEST_CASE("level cache honors its ttl") {
  World w;
  for (ObjectId id = 0; id < 100; ++id) {
    w.tracker.ProcessUpdate({id, {5.0 + id * 9.0, 500}, {0, 0}, 0});
  }
  FlagConfig f = Flag(8);
  f.cache_ttl = 10 * kSec;
  NearestNeighborSearch nn(w.tracker, f);
  bool hit = true;
  const int first = nn.CachedLevel({300, 400}, 0, &hit);
  CHECK_FALSE(hit);
  CHECK(nn.cache_size() == 1);
  CHECK(nn.CachedLevel({300.5, 400.5}, 9 * kSec, &hit) == first);
  CHECK(hit);
  nn.CachedLevel({300, 400}, 10 * kSec, &hit);
  CHECK_FALSE(hit);
  nn.ClearCache();
  CHECK(nn.cache_size() == 0);
}

}  // namespace
}  // namespace shoal
