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

// k-nearest-neighbor search.  Leaders are found by a best-first walk over
// same-level cells of the spatial index, each cell fetched with one range
// scan; schools are then expanded into their members.  The cell level is
// picked per query region by an adaptive bisection and cached by key range.

#ifndef SHOAL_NN_H_
#define SHOAL_NN_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "shoal/geometry.h"
#include "shoal/schooling.h"
#include "shoal/spatial.h"
#include "shoal/tables.h"

namespace shoal {

struct NNQuery {
  Vec2 loc;
  std::size_t k = 1;
  Timestamp t = 0;
};

struct Neighbor {
  ObjectId id = 0;
  Vec2 loc;
  double dist = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct LeaderHit {
  ObjectId id = 0;
  LocationRecord record;
  double dist = 0.0;
};

// Work done by one query.
struct SearchStats {
  std::size_t scans = 0;        // range scans issued
  std::size_t rows = 0;         // index entries returned by those scans
  std::size_t rounds = 0;       // knn widening rounds
  bool exhaustive = false;      // knn fell back to every leader

  // Single cost figure in index-entry units: a scan costs as much as reading
  // sigma entries.
  double Cost(double sigma) const { return static_cast<double>(rows) + sigma * scans; }
  SearchStats& operator+=(const SearchStats& o);
};

struct FlagConfig {
  double sigma = 32.0;
  int min_level = 1;
  int max_level = 6;
  Timestamp cache_ttl = 60 * kMicrosPerSecond;
  // Largest level change per step; bounds the walk when a probe is empty.
  int max_step = 4;
};

struct FlagTrace {
  int level = 0;
  int iterations = 0;
  std::vector<int> probed_levels;
  std::vector<std::size_t> probed_counts;
};

// Level step for a probe that found m leaders: half of log2(m / sigma),
// rounded toward zero; -max_step when m is zero.
int FlagStep(std::size_t m, double sigma, int max_step);

class NearestNeighborSearch {
 public:
  // `tracker` supplies the tables, the average school size and the model
  // error bound.
  NearestNeighborSearch(const SchoolTracker& tracker, FlagConfig flag);

  const FlagConfig& flag() const { return flag_; }

  // The `count` leaders nearest to loc by indexed position, ordered by
  // (distance, id).  `level` is the NN cell level.
  std::vector<LeaderHit> NearestLeaders(Vec2 loc, std::size_t count, int level,
                                        SearchStats* stats = nullptr) const;

  // Exact k nearest objects under the school model at q.t, ordered by
  // (distance, id).
  std::vector<Neighbor> Knn(const NNQuery& q, int level,
                            SearchStats* stats = nullptr) const;
  // As above with the level taken from the level cache.
  std::vector<Neighbor> Knn(const NNQuery& q, SearchStats* stats = nullptr);

  // Adaptive level for loc given n leaders in total.
  int BestLevel(Vec2 loc, std::size_t n, SearchStats* stats = nullptr,
                FlagTrace* trace = nullptr) const;
  // Cached BestLevel; `hit` reports whether the cache answered.
  int CachedLevel(Vec2 loc, Timestamp now, bool* hit = nullptr,
                  SearchStats* stats = nullptr);

  std::size_t cache_size() const;
  void ClearCache();

 private:
  struct CacheEntry {
    int level = 0;
    Timestamp created = 0;
  };

  int ClampLevel(int level) const;

  const SchoolTracker& tracker_;
  const ObjectTables& tables_;
  FlagConfig flag_;

  mutable std::shared_mutex cache_mu_;
  // Indexed by the level of the cell the record covers, then its position.
  std::vector<std::unordered_map<std::uint64_t, CacheEntry>> cache_;
};

}  // namespace shoal

#endif  // SHOAL_NN_H_
