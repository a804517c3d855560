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

#include "shoal/schooling.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

namespace shoal {

namespace {

std::uint64_t Mix(std::uint64_t x) {
  // splitmix64 finalizer.
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

void AtomicMax(std::atomic<double>& a, double v) {
  double cur = a.load(std::memory_order_relaxed);
  while (v > cur && !a.compare_exchange_weak(cur, v, std::memory_order_relaxed)) {
  }
}

double Since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct HexBinHash {
  std::size_t operator()(const HexBin& b) const {
    return Mix(static_cast<std::uint64_t>(b.q) * 0x9e3779b97f4a7c15ULL ^
               static_cast<std::uint64_t>(b.r));
  }
};

constexpr int kMaxRetries = 64;

}  // namespace

void SchoolConfig::Validate(int spatial_level) const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(delta_m > 0.0)) throw std::invalid_argument("delta_m must be positive");
  if (cluster_interval <= 0) throw std::invalid_argument("cluster interval must be positive");
  if (clustering_level < 0 || clustering_level >= spatial_level) {
    throw std::invalid_argument("clustering level must be in [0, spatial level)");
  }
}

double HexagonCircumradius(double delta_m) {
  if (!(delta_m > 0.0)) throw std::invalid_argument("delta_m must be positive");
  return delta_m / 2.0 * (1.0 - 1e-9);
}

// Pointy-top hexagons in axial coordinates, rounded through cube coordinates.
HexBin HexagonBin(Vec2 velocity, double delta_m) {
  const double size = HexagonCircumradius(delta_m);
  const double fq = (std::sqrt(3.0) / 3.0 * velocity.x - velocity.y / 3.0) / size;
  const double fr = (2.0 / 3.0 * velocity.y) / size;
  const double fs = -fq - fr;
  double q = std::round(fq);
  double r = std::round(fr);
  double s = std::round(fs);
  const double dq = std::abs(q - fq);
  const double dr = std::abs(r - fr);
  const double ds = std::abs(s - fs);
  if (dq > dr && dq > ds) {
    q = -r - s;
  } else if (dr > ds) {
    r = -q - s;
  }
  return {static_cast<std::int64_t>(q), static_cast<std::int64_t>(r)};
}

Vec2 HexagonCenter(HexBin bin, double delta_m) {
  const double size = HexagonCircumradius(delta_m);
  const double q = static_cast<double>(bin.q);
  const double r = static_cast<double>(bin.r);
  return {size * std::sqrt(3.0) * (q + r / 2.0), size * 1.5 * r};
}

// Holds a sorted, de-duplicated set of stripe mutexes.
class SchoolTracker::StripeLock {
 public:
  StripeLock(const SchoolTracker& tracker, std::initializer_list<ObjectId> ids)
      : tracker_(tracker) {
    for (ObjectId id : ids) indices_.push_back(StripeOf(id));
    std::sort(indices_.begin(), indices_.end());
    indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
    for (std::size_t i : indices_) tracker_.stripes_[i]->mu.lock();
  }
  ~StripeLock() {
    for (auto it = indices_.rbegin(); it != indices_.rend(); ++it) {
      tracker_.stripes_[*it]->mu.unlock();
    }
  }
  StripeLock(const StripeLock&) = delete;
  StripeLock& operator=(const StripeLock&) = delete;

  bool Holds(ObjectId id) const {
    return std::binary_search(indices_.begin(), indices_.end(), StripeOf(id));
  }

 private:
  const SchoolTracker& tracker_;
  std::vector<std::size_t> indices_;
};

SchoolTracker::SchoolTracker(ObjectTables& tables, SchoolConfig config,
                             AffiliationObserver* observer)
    : tables_(tables), config_(config), observer_(observer) {
  config_.Validate(tables_.spatial_level());
  stripes_.reserve(kStripes);
  for (std::size_t i = 0; i < kStripes; ++i) stripes_.push_back(std::make_unique<Stripe>());
}

std::size_t SchoolTracker::StripeOf(ObjectId id) { return Mix(id) % kStripes; }

SpatialIndex SchoolTracker::ClusteringCellOf(Vec2 loc) const {
  return tables_.grid().Encode(loc, config_.clustering_level);
}

std::optional<Vec2> SchoolTracker::Estimate(ObjectId leader, Vec2 displacement,
                                            Timestamp t) const {
  auto rec = tables_.LatestLocation(leader);
  if (!rec) return std::nullopt;
  return rec->PositionAt(t) + displacement;
}

Vec2 SchoolTracker::EstimatedLocation(ObjectId follower, Timestamp t) const {
  auto aff = tables_.Affiliation(follower);
  if (!aff || aff->is_leader()) {
    throw std::invalid_argument("object " + std::to_string(follower) + " is not a follower");
  }
  auto est = Estimate(aff->leader, aff->displacement, t);
  if (!est) {
    throw std::logic_error("affiliation inconsistency: leader " +
                           std::to_string(aff->leader) + " has no location record");
  }
  return *est;
}

std::optional<Vec2> SchoolTracker::ModeledLocation(ObjectId id, Timestamp t) const {
  auto aff = tables_.Affiliation(id);
  if (!aff) return std::nullopt;
  if (aff->is_leader()) {
    auto rec = tables_.LatestLocation(id);
    if (!rec) return std::nullopt;
    return rec->PositionAt(t);
  }
  return Estimate(aff->leader, aff->displacement, t);
}

UpdateOutcome SchoolTracker::ProcessUpdate(const UpdateMessage& msg) {
  if (!tables_.grid().InBounds(msg.loc)) {
    throw std::out_of_range("update location outside the map");
  }
  // The former leader whose stripe must also be held for a promotion.
  std::optional<ObjectId> partner;
  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    std::optional<StripeLock> lock;
    if (partner) {
      lock.emplace(*this, std::initializer_list<ObjectId>{msg.id, *partner});
    } else {
      lock.emplace(*this, std::initializer_list<ObjectId>{msg.id});
    }
    Stripe& own = stripe(msg.id);
    auto last = own.last_update.find(msg.id);
    if (last != own.last_update.end() && msg.t < last->second) {
      return {UpdateKind::kRejected, 0, 0};
    }

    UpdateOutcome outcome;
    auto aff = tables_.Affiliation(msg.id);
    if (!aff) {
      LocationRecord rec{msg.loc, msg.vel, msg.t};
      tables_.SetLeader(msg.id, msg.t);
      tables_.WriteLocation(msg.id, rec);
      tables_.SpatialInsert(tables_.SpatialKeyOf(msg.loc), msg.id, rec);
      own.last_update[msg.id] = msg.t;
      ClockInsert(msg.id, msg.t);
      NoteSpeed(msg.vel);
      objects_.fetch_add(1);
      leaders_.fetch_add(1);
      if (observer_) {
        observer_->OnRegistered(msg.id, msg.loc, msg.t);
        observer_->OnBecameLeader(msg.id, msg.t);
      }
      return {UpdateKind::kRegistered, 2, 1};
    }

    if (aff->is_leader()) {
      auto old = tables_.LatestLocation(msg.id);
      if (!old) {
        throw std::logic_error("leader " + std::to_string(msg.id) +
                               " has no location record");
      }
      LocationRecord rec{msg.loc, msg.vel, msg.t};
      const SpatialIndex old_key = tables_.SpatialKeyOf(old->loc);
      const SpatialIndex new_key = tables_.SpatialKeyOf(msg.loc);
      tables_.WriteLocation(msg.id, rec);
      outcome.index_writes = 1;
      if (old_key != new_key) {
        tables_.SpatialErase(old_key, msg.id);
        ++outcome.index_writes;
      }
      tables_.SpatialInsert(new_key, msg.id, rec);
      ++outcome.index_writes;
      own.last_update[msg.id] = msg.t;
      ClockErase(msg.id, old->t);
      ClockInsert(msg.id, msg.t);
      NoteSpeed(msg.vel);
      outcome.kind = UpdateKind::kLeaderUpdated;
      return outcome;
    }

    const ObjectId leader = aff->leader;
    auto est = Estimate(leader, aff->displacement, msg.t);
    if (!est) {
      // The leader was absorbed between our reads; its school has moved.
      partner.reset();
      continue;
    }
    if (Distance(*est, msg.loc) <= config_.epsilon) {
      own.last_update[msg.id] = msg.t;
      return {UpdateKind::kShed, 0, 0};
    }
    if (!lock->Holds(leader)) {
      // Promotion rewrites the former leader's Follower Info; retry holding
      // both stripes and re-evaluate from scratch.
      partner = leader;
      continue;
    }

    tables_.RemoveFollowerInfo(leader, msg.id);
    tables_.SetLeader(msg.id, msg.t);
    LocationRecord rec{msg.loc, msg.vel, msg.t};
    tables_.WriteLocation(msg.id, rec);
    tables_.SpatialInsert(tables_.SpatialKeyOf(msg.loc), msg.id, rec);
    own.last_update[msg.id] = msg.t;
    ClockInsert(msg.id, msg.t);
    NoteSpeed(msg.vel);
    leaders_.fetch_add(1);
    if (observer_) observer_->OnBecameLeader(msg.id, msg.t);
    return {UpdateKind::kPromotedToLeader, 2, 2};
  }
  throw std::runtime_error("update for object " + std::to_string(msg.id) +
                           " kept racing with school changes");
}

void SchoolTracker::MergeLocked(ObjectId survivor, ObjectId absorbed, Timestamp now,
                                std::size_t* index_writes) {
  auto rec_i = tables_.LatestLocation(survivor);
  auto rec_j = tables_.LatestLocation(absorbed);
  auto aff_j = tables_.Affiliation(absorbed);
  if (!rec_i || !rec_j || !aff_j) {
    throw std::logic_error("merge of leaders without location records");
  }
  // A clock behind either leader's latest record would start the follow span
  // before the absorbed leader's own trajectory ends.
  now = std::max({now, rec_i->t, rec_j->t});
  const Vec2 p_i = rec_i->PositionAt(now);
  const Vec2 p_j = rec_j->PositionAt(now);

  for (const FollowerLink& f : aff_j->follower_info) {
    const Vec2 d = (p_j + f.displacement) - p_i;
    tables_.SetFollower(f.follower, survivor, d, now);
    tables_.AddFollowerInfo(survivor, f.follower, d, now);
    NoteDisplacement(d);
    if (observer_) observer_->OnBecameFollower(f.follower, survivor, d, now);
  }
  const Vec2 d_j = p_j - p_i;
  tables_.SetFollower(absorbed, survivor, d_j, now);
  tables_.AddFollowerInfo(survivor, absorbed, d_j, now);
  NoteDisplacement(d_j);

  tables_.SpatialErase(tables_.SpatialKeyOf(rec_j->loc), absorbed);
  tables_.EvictLocation(absorbed);
  if (index_writes) *index_writes += 2;
  ClockErase(absorbed, rec_j->t);
  leaders_.fetch_sub(1);
  if (observer_) observer_->OnBecameFollower(absorbed, survivor, d_j, now);
}

void SchoolTracker::MergeSchools(ObjectId survivor, ObjectId absorbed, Timestamp now) {
  if (survivor == absorbed) throw std::invalid_argument("cannot merge a school with itself");
  StripeLock lock(*this, {survivor, absorbed});
  for (ObjectId id : {survivor, absorbed}) {
    auto aff = tables_.Affiliation(id);
    if (!aff || !aff->is_leader()) {
      throw std::invalid_argument("object " + std::to_string(id) + " is not a leader");
    }
  }
  auto rec_i = tables_.LatestLocation(survivor);
  auto rec_j = tables_.LatestLocation(absorbed);
  if (!rec_i || !rec_j) throw std::logic_error("leader without location record");
  if (ClusteringCellOf(rec_i->loc) != ClusteringCellOf(rec_j->loc)) {
    throw std::invalid_argument("leaders are in different clustering cells");
  }
  MergeLocked(survivor, absorbed, now, nullptr);
}

MergeStats SchoolTracker::ReclusterCell(const SpatialIndex& clustering_cell,
                                        Timestamp now) {
  MergeStats stats;

  auto t0 = std::chrono::steady_clock::now();
  auto leaders = tables_.LeadersIn(clustering_cell);
  std::vector<std::size_t> follower_counts(leaders.size(), 0);
  for (std::size_t i = 0; i < leaders.size(); ++i) {
    auto aff = tables_.Affiliation(leaders[i].first);
    if (aff) follower_counts[i] = aff->follower_info.size();
  }
  stats.read_seconds = Since(t0);
  stats.leaders_before = leaders.size();

  auto t1 = std::chrono::steady_clock::now();
  std::unordered_map<HexBin, std::vector<std::size_t>, HexBinHash> bins;
  bins.reserve(leaders.size());
  for (std::size_t i = 0; i < leaders.size(); ++i) {
    bins[HexagonBin(leaders[i].second.vel, config_.delta_m)].push_back(i);
  }
  std::vector<std::pair<ObjectId, ObjectId>> merges;
  for (const auto& [bin, members] : bins) {
    if (members.size() < 2) continue;
    std::size_t best = members.front();
    for (std::size_t m : members) {
      if (follower_counts[m] > follower_counts[best] ||
          (follower_counts[m] == follower_counts[best] &&
           leaders[m].first < leaders[best].first)) {
        best = m;
      }
    }
    for (std::size_t m : members) {
      if (m != best) merges.emplace_back(leaders[best].first, leaders[m].first);
    }
  }
  std::sort(merges.begin(), merges.end());
  stats.compute_seconds = Since(t1);

  auto t2 = std::chrono::steady_clock::now();
  std::size_t done = 0;
  for (const auto& [survivor, absorbed] : merges) {
    StripeLock lock(*this, {survivor, absorbed});
    // Either side may have changed since the read phase.
    auto a = tables_.Affiliation(survivor);
    auto b = tables_.Affiliation(absorbed);
    if (!a || !b || !a->is_leader() || !b->is_leader()) continue;
    MergeLocked(survivor, absorbed, now, &stats.index_writes);
    ++done;
  }
  stats.write_seconds = Since(t2);
  stats.leaders_after = stats.leaders_before - done;
  return stats;
}

double SchoolTracker::AverageSchoolSize() const {
  const std::size_t leaders = leaders_.load();
  if (leaders == 0) return 1.0;
  return static_cast<double>(objects_.load()) / static_cast<double>(leaders);
}

double SchoolTracker::DisplacementBound(Timestamp t) const {
  Timestamp lo = kInfiniteTime;
  Timestamp hi = std::numeric_limits<Timestamp>::min();
  for (auto& shard : clock_) {
    std::lock_guard<std::mutex> guard(shard.mu);
    if (shard.times.empty()) continue;
    lo = std::min(lo, *shard.times.begin());
    hi = std::max(hi, *shard.times.rbegin());
  }
  const double disp = max_displacement_.load();
  if (lo == kInfiniteTime) return disp;
  const double span = std::max({0.0, SecondsBetween(lo, t), SecondsBetween(t, hi)});
  return disp + max_speed_.load() * span;
}

void SchoolTracker::ClockInsert(ObjectId id, Timestamp t) {
  auto& shard = clock_[Mix(id) % kClockShards];
  std::lock_guard<std::mutex> guard(shard.mu);
  shard.times.insert(t);
}

void SchoolTracker::ClockErase(ObjectId id, Timestamp t) {
  auto& shard = clock_[Mix(id) % kClockShards];
  std::lock_guard<std::mutex> guard(shard.mu);
  auto it = shard.times.find(t);
  if (it != shard.times.end()) shard.times.erase(it);
}

void SchoolTracker::NoteSpeed(Vec2 vel) { AtomicMax(max_speed_, Norm(vel)); }
void SchoolTracker::NoteDisplacement(Vec2 d) { AtomicMax(max_displacement_, Norm(d)); }

ClusteringScheduler::ClusteringScheduler(SchoolTracker& tracker, Timestamp start)
    : tracker_(tracker),
      start_(start),
      cell_count_(std::uint64_t{1} << (2 * tracker.config().clustering_level)) {}

std::size_t ClusteringScheduler::Tick(Timestamp now, std::vector<MergeStats>* stats) {
  const Timestamp interval = tracker_.config().cluster_interval;
  if (interval == kInfiniteTime || now <= start_) return 0;
  std::lock_guard<std::mutex> guard(mu_);
  // Due count = elapsed / (interval / cells), computed without overflow.
  const long double elapsed = static_cast<long double>(now - start_);
  const auto due = static_cast<std::uint64_t>(
      elapsed * static_cast<long double>(cell_count_) / static_cast<long double>(interval));
  std::uint64_t pending = due > processed_ ? due - processed_ : 0;
  if (pending > cell_count_) {
    // Never more than one sweep per tick; skipped visits are dropped.
    processed_ = due - cell_count_;
    pending = cell_count_;
  }
  const int level = tracker_.config().clustering_level;
  for (std::uint64_t i = 0; i < pending; ++i) {
    MergeStats s = tracker_.ReclusterCell(SpatialIndex(level, next_cell_), now);
    if (stats) stats->push_back(s);
    next_cell_ = (next_cell_ + 1) % cell_count_;
    ++processed_;
  }
  return static_cast<std::size_t>(pending);
}

}  // namespace shoal
