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

#include "shoal/nn.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <queue>
#include <stdexcept>
#include <unordered_set>

namespace shoal {

namespace {

struct CellEntry {
  double dist;
  std::uint64_t position;

  bool operator>(const CellEntry& o) const {
    return dist != o.dist ? dist > o.dist : position > o.position;
  }
};

bool HitLess(const LeaderHit& a, const LeaderHit& b) {
  return a.dist != b.dist ? a.dist < b.dist : a.id < b.id;
}

bool NeighborLess(const Neighbor& a, const Neighbor& b) {
  return a.dist != b.dist ? a.dist < b.dist : a.id < b.id;
}

}  // namespace

SearchStats& SearchStats::operator+=(const SearchStats& o) {
  scans += o.scans;
  rows += o.rows;
  rounds += o.rounds;
  exhaustive = exhaustive || o.exhaustive;
  return *this;
}

int FlagStep(std::size_t m, double sigma, int max_step) {
  if (m == 0) return -max_step;
  const double step = 0.5 * std::log2(static_cast<double>(m) / sigma);
  // Only the empty probe is clamped: a dense probe may jump further.
  return static_cast<int>(std::trunc(step));
}

NearestNeighborSearch::NearestNeighborSearch(const SchoolTracker& tracker, FlagConfig flag)
    : tracker_(tracker), tables_(tracker.tables()), flag_(flag) {
  if (!(flag_.sigma >= 1.0)) throw std::invalid_argument("sigma must be at least 1");
  if (flag_.min_level < 0 || flag_.min_level > flag_.max_level ||
      flag_.max_level > tables_.spatial_level()) {
    throw std::invalid_argument("NN level bounds must satisfy 0 <= min <= max <= l_s");
  }
  if (flag_.max_step < 1) throw std::invalid_argument("max_step must be positive");
  cache_.resize(static_cast<std::size_t>(tables_.spatial_level()) + 1);
}

int NearestNeighborSearch::ClampLevel(int level) const {
  return std::clamp(level, flag_.min_level, flag_.max_level);
}

std::vector<LeaderHit> NearestNeighborSearch::NearestLeaders(Vec2 loc, std::size_t count,
                                                             int level,
                                                             SearchStats* stats) const {
  if (count == 0) throw std::invalid_argument("count must be positive");
  if (level < 0 || level > tables_.spatial_level()) {
    throw std::invalid_argument("NN level out of range");
  }
  const SpatialGrid& grid = tables_.grid();
  const SpatialIndex seed = grid.Encode(loc, level);
  SearchStats local;

  // Best `count` so far; the heap top is the worst kept hit.
  auto worse = [](const LeaderHit& a, const LeaderHit& b) { return HitLess(a, b); };
  std::priority_queue<LeaderHit, std::vector<LeaderHit>, decltype(worse)> best(worse);
  auto offer = [&](ObjectId id, const LocationRecord& rec) {
    LeaderHit hit{id, rec, Distance(rec.loc, loc)};
    if (best.size() < count) {
      best.push(hit);
    } else if (HitLess(hit, best.top())) {
      best.pop();
      best.push(hit);
    }
  };

  if (count >= tracker_.leader_count()) {
    // Every leader is wanted: one scan over the whole index.
    auto all = tables_.LeadersIn(SpatialIndex(0, 0));
    ++local.scans;
    local.rows += all.size();
    for (const auto& [id, rec] : all) offer(id, rec);
  } else {
    std::priority_queue<CellEntry, std::vector<CellEntry>, std::greater<>> cells;
    std::unordered_set<std::uint64_t> pushed;
    cells.push({grid.MinDistance(loc, seed), seed.position()});
    pushed.insert(seed.position());
    while (!cells.empty()) {
      const CellEntry top = cells.top();
      cells.pop();
      const double dist_max = best.size() == count
                                  ? best.top().dist
                                  : std::numeric_limits<double>::infinity();
      if (top.dist > dist_max) break;
      const SpatialIndex cell(level, top.position);
      auto leaders = tables_.LeadersIn(cell);
      ++local.scans;
      local.rows += leaders.size();
      for (const auto& [id, rec] : leaders) offer(id, rec);
      for (const SpatialIndex& n : grid.Neighbors(cell)) {
        if (pushed.insert(n.position()).second) {
          cells.push({grid.MinDistance(loc, n), n.position()});
        }
      }
    }
  }

  std::vector<LeaderHit> out;
  out.reserve(best.size());
  while (!best.empty()) {
    out.push_back(best.top());
    best.pop();
  }
  std::reverse(out.begin(), out.end());
  if (stats) *stats += local;
  return out;
}

std::vector<Neighbor> NearestNeighborSearch::Knn(const NNQuery& q, int level,
                                                 SearchStats* stats) const {
  if (q.k == 0) throw std::invalid_argument("k must be positive");
  if (!tables_.grid().InBounds(q.loc)) throw std::out_of_range("query outside the map");
  SearchStats local;
  const double avg = std::max(1.0, tracker_.AverageSchoolSize());
  std::size_t want = static_cast<std::size_t>(std::ceil(static_cast<double>(q.k) / avg));
  want = std::max<std::size_t>(want, 1);

  std::vector<Neighbor> candidates;
  while (true) {
    ++local.rounds;
    auto hits = NearestLeaders(q.loc, want, level, &local);
    candidates.clear();
    for (const LeaderHit& hit : hits) {
      const Vec2 base = hit.record.PositionAt(q.t);
      candidates.push_back({hit.id, base, Distance(base, q.loc)});
      auto aff = tables_.Affiliation(hit.id);
      if (!aff || !aff->is_leader()) continue;
      for (const FollowerLink& f : aff->follower_info) {
        const Vec2 p = base + f.displacement;
        candidates.push_back({f.follower, p, Distance(p, q.loc)});
      }
    }
    std::sort(candidates.begin(), candidates.end(), NeighborLess);
    if (hits.size() < want) {
      // Every leader was fetched.
      local.exhaustive = true;
      break;
    }
    // An unfetched leader is at least hits.back().dist away, and no member of
    // its school is modeled more than the displacement bound from it.
    const double covered = hits.back().dist - tracker_.DisplacementBound(q.t);
    if (candidates.size() >= q.k && candidates[q.k - 1].dist < covered) break;
    want *= 2;
  }
  if (candidates.size() > q.k) candidates.resize(q.k);
  if (stats) *stats += local;
  return candidates;
}

std::vector<Neighbor> NearestNeighborSearch::Knn(const NNQuery& q, SearchStats* stats) {
  const int level = CachedLevel(q.loc, q.t, nullptr, stats);
  return Knn(q, level, stats);
}

int NearestNeighborSearch::BestLevel(Vec2 loc, std::size_t n, SearchStats* stats,
                                     FlagTrace* trace) const {
  const SpatialGrid& grid = tables_.grid();
  int level = flag_.min_level;
  if (n > 0) {
    level = ClampLevel(static_cast<int>(
        std::lround(0.5 * std::log2(static_cast<double>(n) / flag_.sigma))));
  }
  int lo = std::numeric_limits<int>::min();
  int hi = std::numeric_limits<int>::max();
  int iterations = 0;
  SearchStats local;
  while (true) {
    ++iterations;
    const SpatialIndex cell = grid.Encode(loc, level);
    auto [start, end] = KeyRange(cell, tables_.spatial_level());
    const std::size_t m = tables_.store().CountColumns(TableId::kSpatialIndex, start, end);
    ++local.scans;
    local.rows += m;
    if (trace) {
      trace->probed_levels.push_back(level);
      trace->probed_counts.push_back(m);
    }
    const int step = FlagStep(m, flag_.sigma, flag_.max_step);
    if (step == 0) break;
    if (step > 0) {
      lo = level;
    } else {
      hi = level;
    }
    const int next = ClampLevel(level + step);
    if (next <= lo || next >= hi || next == level) break;
    level = next;
  }
  if (trace) {
    trace->level = level;
    trace->iterations = iterations;
  }
  if (stats) *stats += local;
  return level;
}

int NearestNeighborSearch::CachedLevel(Vec2 loc, Timestamp now, bool* hit,
                                       SearchStats* stats) {
  const SpatialGrid& grid = tables_.grid();
  {
    std::shared_lock<std::shared_mutex> lock(cache_mu_);
    const CacheEntry* freshest = nullptr;
    for (int lv = flag_.min_level; lv <= flag_.max_level; ++lv) {
      const auto& by_pos = cache_[static_cast<std::size_t>(lv)];
      if (by_pos.empty()) continue;
      auto it = by_pos.find(grid.Encode(loc, lv).position());
      if (it == by_pos.end() || now - it->second.created >= flag_.cache_ttl) continue;
      if (!freshest || it->second.created > freshest->created) freshest = &it->second;
    }
    if (freshest) {
      if (hit) *hit = true;
      return freshest->level;
    }
  }
  if (hit) *hit = false;
  const int level = BestLevel(loc, tracker_.leader_count(), stats);
  const SpatialIndex cell = grid.Encode(loc, level);
  std::unique_lock<std::shared_mutex> lock(cache_mu_);
  cache_[static_cast<std::size_t>(level)][cell.position()] = {level, now};
  return level;
}

std::size_t NearestNeighborSearch::cache_size() const {
  std::shared_lock<std::shared_mutex> lock(cache_mu_);
  std::size_t n = 0;
  for (const auto& m : cache_) n += m.size();
  return n;
}

void NearestNeighborSearch::ClearCache() {
  std::unique_lock<std::shared_mutex> lock(cache_mu_);
  for (auto& m : cache_) m.clear();
}

}  // namespace shoal
