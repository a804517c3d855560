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


#include <map>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "shoal/store.h"

namespace shoal {
namespace {

constexpr Timestamp kSec = kMicrosPerSecond;

StoreOptions SmallOptions() {
  StoreOptions o = StoreOptions::Default();
  o.shards = 4;
  return o;
}

TEST_CASE("put and read back across columns and versions") {
  Store store(SmallOptions());
  const RowKey row = RowKey::ForObject(7);
  store.Put(TableId::kLocation, row, "loc", "p", "a", 10);
  store.Put(TableId::kLocation, row, "loc", "p", "c", 30);
  store.Put(TableId::kLocation, row, "loc", "p", "b", 20);
  store.Put(TableId::kLocation, row, "meta", "x", "m", 5);

  auto latest = store.GetLatest(TableId::kLocation, row, "loc", "p");
  REQUIRE(latest);
  CHECK(latest->value == "c");
  CHECK(latest->timestamp == 30);

  const auto cells = store.GetRow(TableId::kLocation, row);
  REQUIRE(cells.size() == 4);
  CHECK(cells[0].value == "c");
  CHECK(cells[1].value == "b");
  CHECK(cells[2].value == "a");
  CHECK(cells[3].family == "meta");
  CHECK_FALSE(store.GetLatest(TableId::kLocation, row, "loc", "q"));
  CHECK(store.GetRow(TableId::kLocation, RowKey::ForObject(8)).empty());
}

TEST_CASE("single-version tables keep only the newest cell") {
  Store store(SmallOptions());
  const RowKey row = RowKey::ForObject(1);
  for (int i = 0; i < 5; ++i) {
    store.Put(TableId::kAffiliation, row, "a", "leader", std::to_string(i), i);
  }
  const auto cells = store.GetRow(TableId::kAffiliation, row);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].value == "4");
}

TEST_CASE("mutations apply atomically and deletes are idempotent") {
  Store store(SmallOptions());
  const RowKey row("r");
  RowMutation m;
  m.Put("f", "a", "1", 1).Put("f", "b", "2", 1).Put("g", "c", "3", 1);
  store.Apply(TableId::kAffiliation, row, m);
  CHECK(store.GetRow(TableId::kAffiliation, row).size() == 3);

  RowMutation del;
  del.DeleteFamily("f");
  store.Apply(TableId::kAffiliation, row, del);
  auto cells = store.GetRow(TableId::kAffiliation, row);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].column == "c");

  store.Delete(TableId::kAffiliation, row, "g", "c");
  store.Delete(TableId::kAffiliation, row, "g", "c");
  CHECK(store.RowCount(TableId::kAffiliation) == 0);
  store.Delete(TableId::kAffiliation, RowKey("absent"), "g", "c");
  CHECK(store.RowCount(TableId::kAffiliation) == 0);
}

TEST_CASE("aging walks cells through the tiers into the sink") {
  Store store(SmallOptions());
  std::vector<Cell> sunk;
  store.SetArchiveSink([&](TableId table, const RowKey& row, const Cell& c) {
    CHECK(table == TableId::kLocation);
    CHECK(row == RowKey::ForObject(3));
    sunk.push_back(c);
  });
  const RowKey row = RowKey::ForObject(3);
  store.Put(TableId::kLocation, row, "loc", "p", "old", 0);
  store.Put(TableId::kLocation, row, "loc", "p", "new", 100 * kSec);

  // Tier bounds by age: <=60 s memory, <=180 s disk-0, <=480 s disk-1.
  store.AgeTick(59 * kSec);
  CHECK(store.CellsPerTier(TableId::kLocation) == std::vector<std::size_t>{2, 0, 0});
  store.AgeTick(61 * kSec);
  CHECK(store.CellsPerTier(TableId::kLocation) == std::vector<std::size_t>{1, 1, 0});
  store.AgeTick(181 * kSec);
  CHECK(store.CellsPerTier(TableId::kLocation) == std::vector<std::size_t>{0, 1, 1});

  // Values read back from the tier files.
  auto cells = store.GetRow(TableId::kLocation, row);
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].value == "new");
  CHECK(cells[0].tier == 1);
  CHECK(cells[1].value == "old");
  CHECK(cells[1].tier == 2);

  store.AgeTick(481 * kSec);
  REQUIRE(sunk.size() == 1);
  CHECK(sunk[0].value == "old");
  CHECK(sunk[0].timestamp == 0);

  // The newest cell is pinned at the last tier, never archived by aging.
  store.AgeTick(10000 * kSec);
  CHECK(sunk.size() == 1);
  cells = store.GetRow(TableId::kLocation, row);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].value == "new");
  CHECK(cells[0].tier == 2);

  // Eviction hands over the remainder exactly once.
  CHECK(store.EvictRow(TableId::kLocation, row) == 1);
  CHECK(store.EvictRow(TableId::kLocation, row) == 0);
  REQUIRE(sunk.size() == 2);
  CHECK(sunk[1].value == "new");
  CHECK(store.stats().cells_archived == 2);
}

TEST_CASE("every cell reaches the sink exactly once") {
  Store store(SmallOptions());
  std::map<std::pair<std::string, Timestamp>, int> seen;
  store.SetArchiveSink([&](TableId, const RowKey& row, const Cell& c) {
    ++seen[{row.bytes(), c.timestamp}];
  });
  std::mt19937_64 rng(5);
  std::size_t written = 0;
  for (Timestamp now = 0; now < 2000 * kSec; now += 7 * kSec) {
    for (int i = 0; i < 20; ++i) {
      const ObjectId id = rng() % 50;
      store.Put(TableId::kLocation, RowKey::ForObject(id), "loc", "p", "v", now + i);
      ++written;
    }
    store.AgeTick(now);
  }
  store.EvictAll(TableId::kLocation);
  CHECK(seen.size() == written);
  for (const auto& [key, n] : seen) REQUIRE(n == 1);
  CHECK(store.RowCount(TableId::kLocation) == 0);
}

TEST_CASE("infinite-ttl tables never age") {
  Store store(SmallOptions());
  store.Put(TableId::kSpatialIndex, RowKey("k"), "ids", "1", "", 0);
  CHECK(store.AgeTick(1000000 * kSec) == 0);
  CHECK(store.CellsPerTier(TableId::kSpatialIndex)[0] == 1);
}

TEST_CASE("range scans agree with an ordered map") {
  Store store(SmallOptions());
  std::map<std::string, std::map<std::string, std::string>> oracle;
  std::mt19937_64 rng(9);
  auto random_key = [&] {
    std::string k;
    const int len = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < len; ++i) k.push_back(static_cast<char>('a' + rng() % 4));
    return k;
  };
  for (int i = 0; i < 3000; ++i) {
    const std::string row = random_key();
    const std::string col = std::to_string(rng() % 5);
    if (rng() % 5 == 0) {
      store.Delete(TableId::kSpatialIndex, RowKey(row), "ids", col);
      auto it = oracle.find(row);
      if (it != oracle.end()) {
        it->second.erase(col);
        if (it->second.empty()) oracle.erase(it);
      }
    } else {
      const std::string value = std::to_string(i);
      store.Put(TableId::kSpatialIndex, RowKey(row), "ids", col, value, i);
      oracle[row][col] = value;
    }
  }
  CHECK(store.RowCount(TableId::kSpatialIndex) == oracle.size());
  for (int trial = 0; trial < 300; ++trial) {
    std::string a = random_key(), b = random_key();
    if (b < a) std::swap(a, b);
    const auto rows = store.ScanRange(TableId::kSpatialIndex, RowKey(a), RowKey(b));
    auto it = oracle.lower_bound(a);
    std::size_t columns = 0;
    for (const auto& snap : rows) {
      REQUIRE(it != oracle.end());
      REQUIRE(snap.key.bytes() == it->first);
      REQUIRE(snap.cells.size() == it->second.size());
      auto col = it->second.begin();
      for (const auto& c : snap.cells) {
        REQUIRE(c.column == col->first);
        REQUIRE(c.value == col->second);
        ++col;
      }
      columns += snap.cells.size();
      ++it;
    }
    REQUIRE((it == oracle.end() || it->first >= b));
    REQUIRE(store.CountColumns(TableId::kSpatialIndex, RowKey(a), RowKey(b)) == columns);
  }
  CHECK_THROWS_AS(store.ScanRange(TableId::kSpatialIndex, RowKey("b"), RowKey("a")),
                  std::invalid_argument);
}

TEST_CASE("table names round trip") {
  for (TableId t : {TableId::kLocation, TableId::kSpatialIndex, TableId::kAffiliation}) {
    CHECK(TableFromName(TableName(t)) == t);
  }
  CHECK_THROWS_AS(TableFromName("nope"), std::invalid_argument);
}

}  // namespace
}  // namespace shoal
