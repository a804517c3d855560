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

// Typed access to the three tables.
//
//   Location      row = object id;  LocSignal:loc  -> (loc, vel) @ t
//   SpatialIndex  row = level-l_s Hilbert key;  ids:<object id> -> (loc, vel) @ t
//   Affiliation   row = object id;  LF:status -> leader / follower(leader, disp)
//                                   FI:<follower id> -> displacement
//
// Only leaders have Location and SpatialIndex rows.

#ifndef SHOAL_TABLES_H_
#define SHOAL_TABLES_H_

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "shoal/geometry.h"
#include "shoal/spatial.h"
#include "shoal/store.h"

namespace shoal {

inline constexpr std::string_view kLocFamily = "LocSignal";
inline constexpr std::string_view kLocColumn = "loc";
inline constexpr std::string_view kIdsFamily = "ids";
inline constexpr std::string_view kStatusFamily = "LF";
inline constexpr std::string_view kStatusColumn = "status";
inline constexpr std::string_view kFollowerInfoFamily = "FI";

struct LocationRecord {
  Vec2 loc;
  Vec2 vel;
  Timestamp t = 0;

  // Linear extrapolation to time `at`.
  Vec2 PositionAt(Timestamp at) const { return loc + vel * SecondsBetween(t, at); }

  friend bool operator==(const LocationRecord&, const LocationRecord&) = default;
};

std::string EncodeMotion(Vec2 loc, Vec2 vel);
LocationRecord DecodeLocation(std::string_view value, Timestamp t);

struct FollowerLink {
  ObjectId follower = 0;
  Vec2 displacement;

  friend bool operator==(const FollowerLink&, const FollowerLink&) = default;
};

struct AffiliationEntry {
  enum class Role { kLeader, kFollower };
  Role role = Role::kLeader;
  Timestamp since = 0;
  // Follower only.
  ObjectId leader = 0;
  Vec2 displacement;
  // Leader only.
  std::vector<FollowerLink> follower_info;

  bool is_leader() const { return role == Role::kLeader; }
};

class ObjectTables {
 public:
  ObjectTables(Store& store, SpatialGrid grid, int spatial_level);

  Store& store() { return store_; }
  const Store& store() const { return store_; }
  const SpatialGrid& grid() const { return grid_; }
  int spatial_level() const { return spatial_level_; }

  SpatialIndex SpatialKeyOf(Vec2 loc) const { return grid_.Encode(loc, spatial_level_); }

  // Location table.
  void WriteLocation(ObjectId id, const LocationRecord& rec);
  std::optional<LocationRecord> LatestLocation(ObjectId id) const;
  std::vector<LocationRecord> LocationHistory(ObjectId id) const;
  // Hands the object's Location cells to the archive and drops the row.
  void EvictLocation(ObjectId id);

  // Spatial Index table.
  void SpatialInsert(const SpatialIndex& key, ObjectId id, const LocationRecord& rec);
  void SpatialErase(const SpatialIndex& key, ObjectId id);
  // Leaders in the key range of `cell`, with their indexed records.
  std::vector<std::pair<ObjectId, LocationRecord>> LeadersIn(const SpatialIndex& cell) const;

  // Affiliation table.
  std::optional<AffiliationEntry> Affiliation(ObjectId id) const;
  void SetLeader(ObjectId id, Timestamp since);
  void SetFollower(ObjectId id, ObjectId leader, Vec2 displacement, Timestamp since);
  void AddFollowerInfo(ObjectId leader, ObjectId follower, Vec2 displacement,
                       Timestamp t);
  void RemoveFollowerInfo(ObjectId leader, ObjectId follower);
  void ClearFollowerInfo(ObjectId leader);

 private:
  Timestamp StatusTime(ObjectId id, Timestamp since) const;

  Store& store_;
  SpatialGrid grid_;
  int spatial_level_;
};

}  // namespace shoal

#endif  // SHOAL_TABLES_H_
