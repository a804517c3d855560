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

#include <cstdlib>
#include <random>
#include <set>

#include "doctest.h"
#include "shoal/spatial.h"
#include "support.h"

namespace shoal {
namespace {

TEST_CASE("curve matches the recursive construction") {
  for (int level = 0; level <= 7; ++level) {
    const auto cells = testing::HilbertOracle(level);
    for (std::uint64_t pos = 0; pos < cells.size(); ++pos) {
      const auto [i, j] = HilbertCell(level, pos);
      REQUIRE(i == cells[pos].first);
      REQUIRE(j == cells[pos].second);
      REQUIRE(HilbertPosition(level, i, j) == pos);
    }
  }
}

TEST_CASE("consecutive positions share an edge") {
  for (int level = 1; level <= 8; ++level) {
    const std::uint64_t n = std::uint64_t{1} << (2 * level);
    auto prev = HilbertCell(level, 0);
    for (std::uint64_t pos = 1; pos < n; ++pos) {
      const auto cur = HilbertCell(level, pos);
      const long di = std::labs(static_cast<long>(cur.first) - static_cast<long>(prev.first));
      const long dj = std::labs(static_cast<long>(cur.second) - static_cast<long>(prev.second));
      REQUIRE(di + dj == 1);
      prev = cur;
    }
  }
}

TEST_CASE("children refine their parent") {
  const SpatialGrid grid(1000.0);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 2000; ++trial) {
    const int level = static_cast<int>(rng() % 12);
    const SpatialIndex cell(level, rng() % (std::uint64_t{1} << (2 * level)));
    const Box parent = grid.Decode(cell).box;
    for (int d = 0; d < 4; ++d) {
      const SpatialIndex child = cell.Child(d);
      CHECK(child.Parent(level) == cell);
      CHECK(cell.Contains(child));
      const Box b = grid.Decode(child).box;
      CHECK(b.lo.x >= parent.lo.x);
      CHECK(b.hi.x <= parent.hi.x);
      CHECK(b.lo.y >= parent.lo.y);
      CHECK(b.hi.y <= parent.hi.y);
    }
  }
}

TEST_CASE("encode then decode contains the point") {
  const SpatialGrid grid(1000.0);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  for (int trial = 0; trial < 100000; ++trial) {
    const Vec2 p{u(rng), u(rng)};
    const int level = static_cast<int>(rng() % 31);
    const SpatialIndex idx = grid.Encode(p, level);
    const Box b = grid.Decode(idx).box;
    REQUIRE(p.x >= b.lo.x);
    REQUIRE(p.x <= b.hi.x);
    REQUIRE(p.y >= b.lo.y);
    REQUIRE(p.y <= b.hi.y);
  }
}

TEST_CASE("map edges and out-of-bounds points") {
  const SpatialGrid grid(1000.0);
  CHECK(grid.Encode({1000.0, 1000.0}, 3) == grid.FromCellCoordinates(3, 7, 7));
  CHECK(grid.Encode({0.0, 0.0}, 3) == SpatialIndex(3, 0));
  CHECK_THROWS_AS(grid.Encode({-0.1, 5.0}, 3), std::out_of_range);
  CHECK_THROWS_AS(grid.Encode({5.0, 1000.5}, 3), std::out_of_range);
  CHECK_THROWS_AS(grid.Encode({5.0, 5.0}, 31), std::invalid_argument);
  CHECK_THROWS_AS(SpatialIndex(2, 16), std::invalid_argument);
}

TEST_CASE("digits, fraction and text forms") {
  const SpatialIndex idx(3, 0b10'00'01);
  CHECK(idx.digit(1) == 2);
  CHECK(idx.digit(2) == 0);
  CHECK(idx.digit(3) == 1);
  CHECK(idx.ToString() == "L3:201");
  CHECK(SpatialIndex::Parse("L3:201") == idx);
  CHECK(idx.Fraction() == doctest::Approx(33.0 / 64.0));
  CHECK(SpatialIndex::FromRowKey(idx.ToRowKey()) == idx);
  CHECK_THROWS(SpatialIndex::Parse("L3:20"));
  CHECK_THROWS(SpatialIndex::Parse("L3:204"));
  CHECK_THROWS(SpatialIndex::Parse("3:201"));
}

TEST_CASE("row keys sort in curve order at a fixed level") {
  const int level = 5;
  for (std::uint64_t pos = 1; pos < (1u << (2 * level)); ++pos) {
    REQUIRE(SpatialIndex(level, pos - 1).ToRowKey() < SpatialIndex(level, pos).ToRowKey());
  }
}

TEST_CASE("key range covers exactly the descendants") {
  const int ls = 8;
  for (int d = 0; d <= 4; ++d) {
    const int ln = ls - d;
    std::mt19937_64 rng(static_cast<unsigned>(d) + 1);
    for (int trial = 0; trial < 50; ++trial) {
      const SpatialIndex cell(ln, rng() % (std::uint64_t{1} << (2 * ln)));
      const auto [lo, hi] = KeyRange(cell, ls);
      std::set<std::uint64_t> inside;
      for (std::uint64_t c = 0; c < (std::uint64_t{1} << (2 * d)); ++c) {
        inside.insert((cell.position() << (2 * d)) | c);
      }
      // Check every level-ls key near the cell, plus the first and last keys.
      const std::uint64_t base = cell.position() << (2 * d);
      const std::uint64_t span = std::uint64_t{1} << (2 * d);
      const std::uint64_t total = std::uint64_t{1} << (2 * ls);
      const std::uint64_t from = base >= 2 * span ? base - 2 * span : 0;
      const std::uint64_t to = std::min(total, base + 3 * span);
      for (std::uint64_t pos = from; pos < to; ++pos) {
        const RowKey key = SpatialIndex(ls, pos).ToRowKey();
        const bool in_range = lo <= key && key < hi;
        REQUIRE(in_range == (inside.count(pos) == 1));
      }
    }
  }
  CHECK_THROWS_AS(KeyRange(SpatialIndex(5, 0), 4), std::invalid_argument);
}

TEST_CASE("neighbors share an edge and never wrap") {
  const SpatialGrid grid(1000.0);
  for (int level = 0; level <= 5; ++level) {
    const std::uint32_t n = 1u << level;
    for (std::uint32_t i = 0; i < n; ++i) {
      for (std::uint32_t j = 0; j < n; ++j) {
        const auto cell = grid.FromCellCoordinates(level, i, j);
        const auto nb = grid.Neighbors(cell);
        std::size_t want = 4 - (i == 0) - (j == 0) - (i == n - 1) - (j == n - 1);
        if (n == 1) want = 0;
        REQUIRE(nb.size() == want);
        for (const auto& x : nb) {
          const auto [a, b] = grid.CellCoordinates(x);
          REQUIRE(std::labs(long(a) - long(i)) + std::labs(long(b) - long(j)) == 1);
        }
      }
    }
  }
}

TEST_CASE("min distance agrees with a sampled lower bound") {
  const SpatialGrid grid(1000.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  for (int trial = 0; trial < 500; ++trial) {
    const Vec2 p{u(rng), u(rng)};
    const int level = 1 + static_cast<int>(rng() % 6);
    const SpatialIndex cell(level, rng() % (std::uint64_t{1} << (2 * level)));
    const Box b = grid.Decode(cell).box;
    const double d = grid.MinDistance(p, cell);
    // Nearest point of the box by clamping; every sample must be at least d.
    const Vec2 c{std::clamp(p.x, b.lo.x, b.hi.x), std::clamp(p.y, b.lo.y, b.hi.y)};
    CHECK(d == doctest::Approx(Distance(p, c)));
    std::uniform_real_distribution<double> bx(b.lo.x, b.hi.x), by(b.lo.y, b.hi.y);
    for (int s = 0; s < 20; ++s) CHECK(Distance(p, {bx(rng), by(rng)}) >= d - 1e-9);
  }
}

}  // namespace
}  // namespace shoal
