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

// Object schools: groups of nearby objects moving in concert, represented by
// one leader.  Followers are modeled as the leader's linearly extrapolated
// position plus a fixed displacement; their updates are shed while the model
// stays within epsilon of the reported location.
//
// Locking: every object id maps to one of a fixed set of stripe mutexes.
// Updates lock the object's stripe; promotions additionally lock the former
// leader; merges lock survivor and absorbed leader.  A follower's L/F entry is
// only rewritten while its current leader's stripe is held, so holding a
// leader's stripe freezes the affiliation of its whole school.  Stripes are
// always acquired in ascending order.

#ifndef SHOAL_SCHOOLING_H_
#define SHOAL_SCHOOLING_H_

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "shoal/geometry.h"
#include "shoal/spatial.h"
#include "shoal/tables.h"

namespace shoal {

struct SchoolConfig {
  double epsilon = 16.0;       // map units
  double delta_m = 4.0;        // map units / second
  Timestamp cluster_interval = 2 * kMicrosPerSecond;  // kInfiniteTime = never
  int clustering_level = 2;

  void Validate(int spatial_level) const;
};

struct UpdateMessage {
  ObjectId id = 0;
  Vec2 loc;
  Vec2 vel;
  Timestamp t = 0;

  friend bool operator==(const UpdateMessage&, const UpdateMessage&) = default;
};

enum class UpdateKind {
  kLeaderUpdated,
  kShed,
  kPromotedToLeader,
  // First contact: the object is registered as a new leader.
  kRegistered,
  // Timestamp older than the object's last accepted update.
  kRejected,
};

struct UpdateOutcome {
  UpdateKind kind = UpdateKind::kShed;
  // Row mutations issued to the Location and Spatial Index tables.
  int index_writes = 0;
  // Row mutations issued to the Affiliation table.
  int affiliation_writes = 0;
};

// Axial coordinates of one hexagon in the velocity-space tiling.
struct HexBin {
  std::int64_t q = 0;
  std::int64_t r = 0;

  friend bool operator==(const HexBin&, const HexBin&) = default;
};

// Circumradius used for a given maximum in-school velocity deviation; the
// hexagon diameter is strictly below delta_m.
double HexagonCircumradius(double delta_m);
HexBin HexagonBin(Vec2 velocity, double delta_m);
Vec2 HexagonCenter(HexBin bin, double delta_m);

struct MergeStats {
  double read_seconds = 0.0;
  double compute_seconds = 0.0;
  double write_seconds = 0.0;
  std::size_t leaders_before = 0;
  std::size_t leaders_after = 0;
  std::size_t index_writes = 0;
};

// Receives school membership transitions (for history reconstruction).
class AffiliationObserver {
 public:
  virtual ~AffiliationObserver() = default;
  virtual void OnRegistered(ObjectId id, Vec2 initial_loc, Timestamp t) = 0;
  virtual void OnBecameLeader(ObjectId id, Timestamp t) = 0;
  virtual void OnBecameFollower(ObjectId id, ObjectId leader, Vec2 displacement,
                                Timestamp t) = 0;
};

class SchoolTracker {
 public:
  SchoolTracker(ObjectTables& tables, SchoolConfig config,
                AffiliationObserver* observer = nullptr);

  SchoolTracker(const SchoolTracker&) = delete;
  SchoolTracker& operator=(const SchoolTracker&) = delete;

  // Leader, shed, or promote.  Throws std::out_of_range if msg.loc is off the
  // map.
  UpdateOutcome ProcessUpdate(const UpdateMessage& msg);

  // Leader's latest record extrapolated to t, plus the follower's
  // displacement.  Throws std::invalid_argument if `follower` is not a
  // follower and std::logic_error if its leader has no location record.
  Vec2 EstimatedLocation(ObjectId follower, Timestamp t) const;
  // Location of any known object under the school model at time t.
  std::optional<Vec2> ModeledLocation(ObjectId id, Timestamp t) const;

  // Merges leaders of one clustering cell whose velocities share a hexagon.
  MergeStats ReclusterCell(const SpatialIndex& clustering_cell, Timestamp now);
  // Throws std::invalid_argument unless both ids are current leaders in the
  // same clustering cell.
  void MergeSchools(ObjectId survivor, ObjectId absorbed, Timestamp now);

  std::size_t leader_count() const { return leaders_.load(); }
  std::size_t object_count() const { return objects_.load(); }
  double AverageSchoolSize() const;
  // Upper bound on |modeled location - indexed leader location| over every
  // object at time t.
  double DisplacementBound(Timestamp t) const;

  const SchoolConfig& config() const { return config_; }
  ObjectTables& tables() { return tables_; }
  const ObjectTables& tables() const { return tables_; }

  SpatialIndex ClusteringCellOf(Vec2 loc) const;

 private:
  static constexpr std::size_t kStripes = 1024;
  static constexpr std::size_t kClockShards = 64;

  struct Stripe {
    std::mutex mu;
    std::unordered_map<ObjectId, Timestamp> last_update;
  };
  struct ClockShard {
    std::mutex mu;
    std::multiset<Timestamp> times;
  };
  class StripeLock;

  static std::size_t StripeOf(ObjectId id);
  Stripe& stripe(ObjectId id) const { return *stripes_[StripeOf(id)]; }

  // Motion of `leader` at t plus displacement; nullopt if the leader has no
  // record (concurrently absorbed).
  std::optional<Vec2> Estimate(ObjectId leader, Vec2 displacement, Timestamp t) const;
  void BecomeLeader(const UpdateMessage& msg, UpdateOutcome& outcome);
  void MergeLocked(ObjectId survivor, ObjectId absorbed, Timestamp now,
                   std::size_t* index_writes);

  void ClockInsert(ObjectId id, Timestamp t);
  void ClockErase(ObjectId id, Timestamp t);
  void NoteSpeed(Vec2 vel);
  void NoteDisplacement(Vec2 d);

  ObjectTables& tables_;
  SchoolConfig config_;
  AffiliationObserver* observer_;

  std::vector<std::unique_ptr<Stripe>> stripes_;
  mutable std::array<ClockShard, kClockShards> clock_;

  std::atomic<std::size_t> leaders_{0};
  std::atomic<std::size_t> objects_{0};
  std::atomic<double> max_speed_{0.0};
  std::atomic<double> max_displacement_{0.0};
};

// Visits clustering cells round-robin in curve order so that each cell is
// reclustered once per cluster interval, one cell at a time.
class ClusteringScheduler {
 public:
  ClusteringScheduler(SchoolTracker& tracker, Timestamp start);

  // Reclusters every cell that became due up to `now` (at most one full
  // sweep).  Returns the number of cells processed.
  std::size_t Tick(Timestamp now, std::vector<MergeStats>* stats = nullptr);

  std::uint64_t cell_count() const { return cell_count_; }
  std::uint64_t next_cell() const { return next_cell_; }

 private:
  SchoolTracker& tracker_;
  Timestamp start_;
  std::uint64_t cell_count_;
  std::uint64_t processed_ = 0;
  std::uint64_t next_cell_ = 0;
  std::mutex mu_;
};

}  // namespace shoal

#endif  // SHOAL_SCHOOLING_H_
