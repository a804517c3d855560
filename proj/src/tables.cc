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

#include "shoal/tables.h"

#include <algorithm>
#include <charconv>
#include <stdexcept>

#include "bytes.h"

namespace shoal {

namespace {

constexpr char kRoleLeader = 'L';
constexpr char kRoleFollower = 'F';

std::string IdColumn(ObjectId id) { return std::to_string(id); }

ObjectId ParseIdColumn(std::string_view column) {
  ObjectId id = 0;
  auto [ptr, ec] = std::from_chars(column.data(), column.data() + column.size(), id);
  if (ec != std::errc() || ptr != column.data() + column.size()) {
    throw std::runtime_error("malformed object id column: " + std::string(column));
  }
  return id;
}

std::string EncodeVec(Vec2 v) {
  std::string out;
  out.reserve(16);
  bytes::PutF64(out, v.x);
  bytes::PutF64(out, v.y);
  return out;
}

Vec2 DecodeVec(std::string_view value) {
  bytes::Reader r(value);
  Vec2 v;
  v.x = r.F64();
  v.y = r.F64();
  return v;
}

}  // namespace

std::string EncodeMotion(Vec2 loc, Vec2 vel) {
  std::string out;
  out.reserve(32);
  bytes::PutF64(out, loc.x);
  bytes::PutF64(out, loc.y);
  bytes::PutF64(out, vel.x);
  bytes::PutF64(out, vel.y);
  return out;
}

LocationRecord DecodeLocation(std::string_view value, Timestamp t) {
  bytes::Reader r(value);
  LocationRecord rec;
  rec.loc.x = r.F64();
  rec.loc.y = r.F64();
  rec.vel.x = r.F64();
  rec.vel.y = r.F64();
  rec.t = t;
  return rec;
}

ObjectTables::ObjectTables(Store& store, SpatialGrid grid, int spatial_level)
    : store_(store), grid_(grid), spatial_level_(spatial_level) {
  if (spatial_level < 1 || spatial_level > kMaxLevel) {
    throw std::invalid_argument("spatial level must be in [1, 30]");
  }
}

void ObjectTables::WriteLocation(ObjectId id, const LocationRecord& rec) {
  store_.Put(TableId::kLocation, RowKey::ForObject(id), kLocFamily, kLocColumn,
             EncodeMotion(rec.loc, rec.vel), rec.t);
}

std::optional<LocationRecord> ObjectTables::LatestLocation(ObjectId id) const {
  auto cell = store_.GetLatest(TableId::kLocation, RowKey::ForObject(id), kLocFamily,
                               kLocColumn);
  if (!cell) return std::nullopt;
  return DecodeLocation(cell->value, cell->timestamp);
}

std::vector<LocationRecord> ObjectTables::LocationHistory(ObjectId id) const {
  std::vector<LocationRecord> out;
  for (const auto& cell : store_.GetRow(TableId::kLocation, RowKey::ForObject(id))) {
    if (cell.family == kLocFamily && cell.column == kLocColumn) {
      out.push_back(DecodeLocation(cell.value, cell.timestamp));
    }
  }
  return out;
}

void ObjectTables::EvictLocation(ObjectId id) {
  store_.EvictRow(TableId::kLocation, RowKey::ForObject(id));
}

void ObjectTables::SpatialInsert(const SpatialIndex& key, ObjectId id,
                                 const LocationRecord& rec) {
  store_.Put(TableId::kSpatialIndex, key.ToRowKey(), kIdsFamily, IdColumn(id),
             EncodeMotion(rec.loc, rec.vel), rec.t);
}

void ObjectTables::SpatialErase(const SpatialIndex& key, ObjectId id) {
  store_.Delete(TableId::kSpatialIndex, key.ToRowKey(), kIdsFamily, IdColumn(id));
}

std::vector<std::pair<ObjectId, LocationRecord>> ObjectTables::LeadersIn(
    const SpatialIndex& cell) const {
  auto [start, end] = KeyRange(cell, spatial_level_);
  std::vector<std::pair<ObjectId, LocationRecord>> out;
  for (const auto& row : store_.ScanRange(TableId::kSpatialIndex, start, end)) {
    for (const auto& c : row.cells) {
      if (c.family != kIdsFamily) continue;
      out.emplace_back(ParseIdColumn(c.column), DecodeLocation(c.value, c.timestamp));
    }
  }
  return out;
}

std::optional<AffiliationEntry> ObjectTables::Affiliation(ObjectId id) const {
  auto cells = store_.GetRow(TableId::kAffiliation, RowKey::ForObject(id));
  if (cells.empty()) return std::nullopt;
  AffiliationEntry entry;
  bool have_status = false;
  for (const auto& c : cells) {
    if (c.family == kStatusFamily && c.column == kStatusColumn && !have_status) {
      have_status = true;
      bytes::Reader r(c.value);
      char role = r.Bytes(1)[0];
      entry.since = c.timestamp;
      if (role == kRoleLeader) {
        entry.role = AffiliationEntry::Role::kLeader;
      } else if (role == kRoleFollower) {
        entry.role = AffiliationEntry::Role::kFollower;
        entry.leader = r.U64();
        entry.displacement.x = r.F64();
        entry.displacement.y = r.F64();
      } else {
        throw std::runtime_error("corrupt L/F entry");
      }
    } else if (c.family == kFollowerInfoFamily) {
      entry.follower_info.push_back({ParseIdColumn(c.column), DecodeVec(c.value)});
    }
  }
  if (!have_status) return std::nullopt;
  return entry;
}

Timestamp ObjectTables::StatusTime(ObjectId id, Timestamp since) const {
  // Status is single-version: a write stamped before the current cell would
  // be discarded, so the stamp never moves backwards.
  auto cur = store_.GetLatest(TableId::kAffiliation, RowKey::ForObject(id), kStatusFamily,
                              kStatusColumn);
  return cur ? std::max(since, cur->timestamp) : since;
}

void ObjectTables::SetLeader(ObjectId id, Timestamp since) {
  since = StatusTime(id, since);
  store_.Put(TableId::kAffiliation, RowKey::ForObject(id), kStatusFamily,
             kStatusColumn, std::string(1, kRoleLeader), since);
}

void ObjectTables::SetFollower(ObjectId id, ObjectId leader, Vec2 displacement,
                               Timestamp since) {
  since = StatusTime(id, since);
  std::string value(1, kRoleFollower);
  bytes::PutU64(value, leader);
  bytes::PutF64(value, displacement.x);
  bytes::PutF64(value, displacement.y);
  // A follower never carries Follower Info.
  RowMutation m;
  m.DeleteFamily(std::string(kFollowerInfoFamily));
  m.Put(std::string(kStatusFamily), std::string(kStatusColumn), std::move(value), since);
  store_.Apply(TableId::kAffiliation, RowKey::ForObject(id), m);
}

void ObjectTables::AddFollowerInfo(ObjectId leader, ObjectId follower,
                                   Vec2 displacement, Timestamp t) {
  store_.Put(TableId::kAffiliation, RowKey::ForObject(leader), kFollowerInfoFamily,
             IdColumn(follower), EncodeVec(displacement), t);
}

void ObjectTables::RemoveFollowerInfo(ObjectId leader, ObjectId follower) {
  store_.Delete(TableId::kAffiliation, RowKey::ForObject(leader), kFollowerInfoFamily,
                IdColumn(follower));
}

void ObjectTables::ClearFollowerInfo(ObjectId leader) {
  RowMutation m;
  m.DeleteFamily(std::string(kFollowerInfoFamily));
  store_.Apply(TableId::kAffiliation, RowKey::ForObject(leader), m);
}

}  // namespace shoal
