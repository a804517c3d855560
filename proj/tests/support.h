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

// Reference implementations shared by the unit and acceptance tests.  None of
// these reuse library internals beyond the public table accessors.

#ifndef SHOAL_TESTS_SUPPORT_H_
#define SHOAL_TESTS_SUPPORT_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "shoal/archive.h"
#include "shoal/nn.h"
#include "shoal/schooling.h"
#include "shoal/spatial.h"
#include "shoal/tables.h"

namespace shoal::testing {

// Cells of the level-l Hilbert curve in visiting order, built by the classic
// four-quadrant recursion: lower-left transposed, upper-left, upper-right,
// lower-right anti-transposed.
inline std::vector<std::pair<std::uint32_t, std::uint32_t>> HilbertOracle(int level) {
  if (level == 0) return {{0, 0}};
  const auto prev = HilbertOracle(level - 1);
  const std::uint32_t h = 1u << (level - 1);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  out.reserve(prev.size() * 4);
  for (auto [x, y] : prev) out.emplace_back(y, x);
  for (auto [x, y] : prev) out.emplace_back(x, y + h);
  for (auto [x, y] : prev) out.emplace_back(x + h, y + h);
  for (auto [x, y] : prev) out.emplace_back(2 * h - 1 - y, h - 1 - x);
  return out;
}

// k nearest of `ids` by modeled location at q.t, ordered by (distance, id).
inline std::vector<Neighbor> BruteKnn(const SchoolTracker& tracker,
                                      const std::vector<ObjectId>& ids, const NNQuery& q) {
  std::vector<Neighbor> all;
  for (ObjectId id : ids) {
    auto p = tracker.ModeledLocation(id, q.t);
    if (p) all.push_back({id, *p, Distance(*p, q.loc)});
  }
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.dist != b.dist ? a.dist < b.dist : a.id < b.id;
  });
  if (all.size() > q.k) all.resize(q.k);
  return all;
}

// Exhaustive sweep: feasible n in [1, max_disks] maximizing min(U_d, R_d),
// smallest n on ties; nullopt when nothing is feasible.  The objective and
// constraint are evaluated from the formulas directly.
inline std::optional<std::int64_t> BruteOptimize(const DiskModelParams& p,
                                                 std::int64_t max_disks) {
  const double lat = p.rotation_s + p.seek_s;
  const double s_b = p.record_bytes * p.objects;
  std::optional<std::int64_t> best;
  double best_value = -1.0;
  for (std::int64_t n = 1; n <= max_disks; ++n) {
    const double d = static_cast<double>(n);
    const double t_d = lat + s_b / (d * p.disk_rate);
    const double t_m = (s_b / d) / (p.update_rate * p.record_bytes / d);
    if (t_m < t_d) continue;
    const double u = s_b / (d * p.disk_rate * lat);
    const double r = p.k * d / p.objects;
    const double v = std::min(u, r);
    if (v > best_value) {
      best_value = v;
      best = n;
    }
  }
  return best;
}

// Consistency audit of the three tables for the given objects.  Returns one
// line per violation.
inline std::vector<std::string> AuditSchools(const SchoolTracker& tracker,
                                             const std::vector<ObjectId>& ids) {
  std::vector<std::string> bad;
  const ObjectTables& tables = tracker.tables();
  auto say = [&](ObjectId id, const std::string& what) {
    bad.push_back("object " + std::to_string(id) + ": " + what);
  };
  std::set<ObjectId> leaders;
  std::size_t known = 0;
  for (ObjectId id : ids) {
    auto aff = tables.Affiliation(id);
    if (!aff) continue;
    ++known;
    if (aff->is_leader()) {
      leaders.insert(id);
      if (!tables.LatestLocation(id)) say(id, "leader without a location row");
      for (const auto& link : aff->follower_info) {
        auto f = tables.Affiliation(link.follower);
        if (!f || f->is_leader() || f->leader != id) {
          say(id, "follower info lists " + std::to_string(link.follower) +
                      " which does not follow it");
        } else if (!(f->displacement == link.displacement)) {
          say(id, "displacement mismatch for follower " + std::to_string(link.follower));
        }
      }
    } else {
      if (tables.LatestLocation(id)) say(id, "follower still has a location row");
      auto l = tables.Affiliation(aff->leader);
      if (!l || !l->is_leader()) {
        say(id, "leader " + std::to_string(aff->leader) + " is not a leader");
        continue;
      }
      const auto& fi = l->follower_info;
      const auto it = std::find_if(fi.begin(), fi.end(),
                                   [&](const FollowerLink& f) { return f.follower == id; });
      if (it == fi.end()) say(id, "missing from its leader's follower info");
    }
  }
  // Spatial Index: exactly the leaders, each once, under its current cell.
  const auto everything = tables.LeadersIn(SpatialIndex(0, 0));
  std::map<ObjectId, int> seen;
  for (const auto& [id, rec] : everything) {
    ++seen[id];
    auto aff = tables.Affiliation(id);
    if (!aff || !aff->is_leader()) {
      say(id, "non-leader in the spatial index");
      continue;
    }
    auto latest = tables.LatestLocation(id);
    if (latest && !(latest->loc == rec.loc)) say(id, "stale spatial index entry");
  }
  for (const auto& [id, n] : seen) {
    if (n != 1) say(id, "indexed " + std::to_string(n) + " times");
  }
  for (ObjectId id : leaders) {
    if (!seen.count(id)) say(id, "leader missing from the spatial index");
  }
  if (leaders.size() != tracker.leader_count()) {
    bad.push_back("leader counter " + std::to_string(tracker.leader_count()) + " but " +
                  std::to_string(leaders.size()) + " leaders found");
  }
  if (known != tracker.object_count()) {
    bad.push_back("object counter " + std::to_string(tracker.object_count()) + " but " +
                  std::to_string(known) + " objects found");
  }
  return bad;
}

// Follower spans rebuilt from an event list: [from, to) intervals during
// which the object followed `leader` at `displacement`.
struct Span {
  ObjectId leader = 0;
  Vec2 displacement;
  Timestamp from = 0;
  Timestamp to = 0;
};

inline std::vector<Span> FollowSpans(const std::vector<AffiliationEvent>& events) {
  std::vector<AffiliationEvent> sorted = events;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const AffiliationEvent& a, const AffiliationEvent& b) { return a.t < b.t; });
  std::vector<Span> spans;
  std::optional<Span> open;
  for (const auto& e : sorted) {
    if (open) {
      open->to = e.t;
      if (open->from < open->to) spans.push_back(*open);
      open.reset();
    }
    if (e.kind == AffiliationEvent::Kind::kBecameFollower) {
      open = Span{e.leader, e.displacement, e.t, kInfiniteTime};
    }
  }
  if (open) spans.push_back(*open);
  return spans;
}

}  // namespace shoal::testing

#endif  // SHOAL_TESTS_SUPPORT_H_
