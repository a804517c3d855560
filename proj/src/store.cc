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

#include "shoal/store.h"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <mutex>
#include <random>
#include <stdexcept>
#include <system_error>

#include "bytes.h"
#include "temp_dir.h"

namespace shoal {

std::string_view TableName(TableId table) {
  switch (table) {
    case TableId::kLocation:
      return "Location";
    case TableId::kSpatialIndex:
      return "SpatialIndex";
    case TableId::kAffiliation:
      return "Affiliation";
  }
  return "?";
}

TableId TableFromName(std::string_view name) {
  for (std::size_t i = 0; i < kTableCount; ++i) {
    auto id = static_cast<TableId>(i);
    if (TableName(id) == name) return id;
  }
  throw std::invalid_argument("unknown table: " + std::string(name));
}

StoreOptions StoreOptions::Default() {
  StoreOptions o;
  TableOptions& loc = o.tables[static_cast<std::size_t>(TableId::kLocation)];
  loc.tier_ttl = {60 * kMicrosPerSecond, 120 * kMicrosPerSecond,
                  300 * kMicrosPerSecond};
  loc.retain_latest = true;
  loc.archive_expired = true;
  for (TableId id : {TableId::kSpatialIndex, TableId::kAffiliation}) {
    TableOptions& t = o.tables[static_cast<std::size_t>(id)];
    t.tier_ttl = {kInfiniteTime, kInfiniteTime, kInfiniteTime};
    t.max_versions = 1;
  }
  return o;
}

// ---------------------------------------------------------------------------
// RowMutation

RowMutation& RowMutation::Put(std::string family, std::string column,
                              std::string value, Timestamp t) {
  ops_.push_back({Kind::kPut, std::move(family), std::move(column),
                  std::move(value), t});
  return *this;
}

RowMutation& RowMutation::DeleteColumn(std::string family, std::string column) {
  ops_.push_back({Kind::kDeleteColumn, std::move(family), std::move(column), {}, 0});
  return *this;
}

RowMutation& RowMutation::DeleteFamily(std::string family) {
  ops_.push_back({Kind::kDeleteFamily, std::move(family), {}, {}, 0});
  return *this;
}

// ---------------------------------------------------------------------------
// TierFile: append-only record log.  Record layout, little-endian:
//   u32 row_len, row, u32 family_len, family, u32 column_len, column,
//   u64 timestamp, u32 value_len, value

namespace {

void AppendBytes(std::string& out, std::string_view bytes) {
  bytes::PutU32(out, static_cast<std::uint32_t>(bytes.size()));
  out.append(bytes);
}

}  // namespace

class Store::TierFile {
 public:
  explicit TierFile(const std::filesystem::path& path) : path_(path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd_ < 0) {
      throw std::system_error(errno, std::generic_category(),
                              "open " + path.string());
    }
  }
  ~TierFile() {
    if (fd_ >= 0) ::close(fd_);
  }
  TierFile(const TierFile&) = delete;
  TierFile& operator=(const TierFile&) = delete;

  // Appends one record; returns the file offset of its value bytes.
  std::uint64_t Append(std::string_view row, std::string_view family,
                       std::string_view column, Timestamp t,
                       std::string_view value) {
    std::string rec;
    rec.reserve(row.size() + family.size() + column.size() + value.size() + 24);
    AppendBytes(rec, row);
    AppendBytes(rec, family);
    AppendBytes(rec, column);
    bytes::PutU64(rec, static_cast<std::uint64_t>(t));
    bytes::PutU32(rec, static_cast<std::uint32_t>(value.size()));
    std::uint64_t value_offset;
    std::lock_guard lock(mu_);
    value_offset = size_ + rec.size();
    rec.append(value);
    WriteAll(rec, size_);
    size_ += rec.size();
    return value_offset;
  }

  std::string Read(std::uint64_t offset, std::uint32_t size) const {
    std::string out(size, '\0');
    std::size_t done = 0;
    while (done < size) {
      ssize_t n = ::pread(fd_, out.data() + done, size - done,
                          static_cast<off_t>(offset + done));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw std::system_error(errno, std::generic_category(),
                                "read " + path_.string());
      }
      if (n == 0) throw std::runtime_error("short read in " + path_.string());
      done += static_cast<std::size_t>(n);
    }
    return out;
  }

 private:
  void WriteAll(const std::string& bytes, std::uint64_t offset) {
    std::size_t done = 0;
    while (done < bytes.size()) {
      ssize_t n = ::pwrite(fd_, bytes.data() + done, bytes.size() - done,
                           static_cast<off_t>(offset + done));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw std::system_error(errno, std::generic_category(),
                                "write " + path_.string());
      }
      done += static_cast<std::size_t>(n);
    }
  }

  std::filesystem::path path_;
  int fd_ = -1;
  std::mutex mu_;
  std::uint64_t size_ = 0;
};

// ---------------------------------------------------------------------------
// Store


Store::Store(StoreOptions options) : options_(std::move(options)) {
  if (options_.disk_tiers < 0) throw std::invalid_argument("disk_tiers < 0");
  if (options_.shards == 0) throw std::invalid_argument("shards must be >= 1");
  if (options_.data_dir.empty()) {
    dir_ = MakePrivateDir("shoal-store");
    owns_dir_ = true;
  } else {
    dir_ = options_.data_dir;
    std::filesystem::create_directories(dir_);
  }
  for (std::size_t i = 0; i < kTableCount; ++i) {
    Table& t = tables_[i];
    t.options = options_.tables[i];
    auto& ttl = t.options.tier_ttl;
    const auto tiers = static_cast<std::size_t>(options_.disk_tiers) + 1;
    if (ttl.empty()) ttl.assign(tiers, kInfiniteTime);
    ttl.resize(tiers, ttl.back());
    for (Timestamp v : ttl) {
      if (v <= 0) throw std::invalid_argument("tier TTL must be positive");
    }
    for (std::size_t s = 0; s < options_.shards; ++s) {
      t.shards.push_back(std::make_unique<Shard>());
    }
    for (int k = 1; k <= options_.disk_tiers; ++k) {
      auto name = std::string(TableName(static_cast<TableId>(i))) + ".disk" +
                  std::to_string(k - 1) + ".log";
      t.tier_files.push_back(std::make_unique<TierFile>(dir_ / name));
    }
  }
}

Store::~Store() {
  for (auto& t : tables_) t.tier_files.clear();
  if (owns_dir_) {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
}

void Store::SetArchiveSink(ArchiveSink sink) { sink_ = std::move(sink); }

Store::Shard& Store::ShardFor(const Table& t, const RowKey& row) const {
  std::size_t h = std::hash<RowKey>{}(row);
  return *t.shards[h % t.shards.size()];
}

void Store::ApplyLocked(Table& t, Row& row, const RowMutation& mutation) {
  for (const auto& op : mutation.ops_) {
    switch (op.kind) {
      case RowMutation::Kind::kPut: {
        auto& cells = row.columns[ColumnKey(op.family, op.column)];
        StoredCell cell;
        cell.t = op.t;
        cell.value = op.value;
        // Newest first; equal timestamps keep the latest write in front.
        auto pos = std::find_if(cells.begin(), cells.end(),
                                [&](const StoredCell& c) { return c.t <= op.t; });
        cells.insert(pos, std::move(cell));
        if (t.options.max_versions > 0 && cells.size() > t.options.max_versions) {
          cells.resize(t.options.max_versions);
        }
        puts_.fetch_add(1, std::memory_order_relaxed);
        break;
      }
      case RowMutation::Kind::kDeleteColumn: {
        auto it = row.columns.find(ColumnKey(op.family, op.column));
        if (it != row.columns.end()) row.columns.erase(it);
        deletes_.fetch_add(1, std::memory_order_relaxed);
        break;
      }
      case RowMutation::Kind::kDeleteFamily: {
        auto it = row.columns.lower_bound(ColumnKey(op.family, std::string()));
        while (it != row.columns.end() && it->first.first == op.family) {
          it = row.columns.erase(it);
        }
        deletes_.fetch_add(1, std::memory_order_relaxed);
        break;
      }
    }
  }
}

void Store::Put(TableId table_id, const RowKey& row, std::string_view family,
                std::string_view column, std::string value, Timestamp t) {
  RowMutation m;
  m.Put(std::string(family), std::string(column), std::move(value), t);
  Apply(table_id, row, m);
}

void Store::Apply(TableId table_id, const RowKey& row, const RowMutation& mutation) {
  Table& t = table(table_id);
  Shard& shard = ShardFor(t, row);
  std::unique_lock lock(shard.mu);
  auto it = shard.rows.find(row);
  if (it == shard.rows.end()) {
    bool has_put = std::any_of(mutation.ops_.begin(), mutation.ops_.end(),
                               [](const auto& op) { return op.kind == RowMutation::Kind::kPut; });
    if (!has_put) {
      // Deletes on an absent row still count as (no-op) requests.
      deletes_.fetch_add(mutation.ops_.size(), std::memory_order_relaxed);
      return;
    }
    it = shard.rows.emplace(row, Row{}).first;
  }
  ApplyLocked(t, it->second, mutation);
  if (it->second.columns.empty()) shard.rows.erase(it);
}

void Store::Delete(TableId table_id, const RowKey& row, std::string_view family,
                   std::string_view column) {
  RowMutation m;
  m.DeleteColumn(std::string(family), std::string(column));
  Apply(table_id, row, m);
}

Cell Store::Materialize(const Table& t, const ColumnKey& column,
                        const StoredCell& cell) const {
  Cell out;
  out.family = column.first;
  out.column = column.second;
  out.timestamp = cell.t;
  out.tier = cell.tier;
  if (cell.tier == 0) {
    out.value = cell.value;
  } else {
    out.value = t.tier_files[static_cast<std::size_t>(cell.tier - 1)]->Read(
        cell.file_offset, cell.value_size);
  }
  return out;
}

std::vector<Cell> Store::MaterializeRow(const Table& t, const Row& row) const {
  std::vector<Cell> out;
  for (const auto& [key, cells] : row.columns) {
    for (const auto& c : cells) out.push_back(Materialize(t, key, c));
  }
  return out;
}

std::vector<Cell> Store::GetRow(TableId table_id, const RowKey& row) const {
  const Table& t = table(table_id);
  Shard& shard = ShardFor(t, row);
  std::shared_lock lock(shard.mu);
  row_reads_.fetch_add(1, std::memory_order_relaxed);
  auto it = shard.rows.find(row);
  if (it == shard.rows.end()) return {};
  return MaterializeRow(t, it->second);
}

std::optional<Cell> Store::GetLatest(TableId table_id, const RowKey& row,
                                     std::string_view family,
                                     std::string_view column) const {
  const Table& t = table(table_id);
  Shard& shard = ShardFor(t, row);
  std::shared_lock lock(shard.mu);
  row_reads_.fetch_add(1, std::memory_order_relaxed);
  auto it = shard.rows.find(row);
  if (it == shard.rows.end()) return std::nullopt;
  auto col = it->second.columns.find(ColumnKey(family, column));
  if (col == it->second.columns.end() || col->second.empty()) return std::nullopt;
  return Materialize(t, col->first, col->second.front());
}

std::vector<RowSnapshot> Store::ScanRange(TableId table_id, const RowKey& start,
                                          const RowKey& end) const {
  if (end < start) throw std::invalid_argument("scan range start > end");
  const Table& t = table(table_id);
  scans_.fetch_add(1, std::memory_order_relaxed);
  std::vector<RowSnapshot> out;
  if (start == end) return out;
  for (const auto& shard : t.shards) {
    std::shared_lock lock(shard->mu);
    for (auto it = shard->rows.lower_bound(start);
         it != shard->rows.end() && it->first < end; ++it) {
      out.push_back({it->first, MaterializeRow(t, it->second)});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const RowSnapshot& a, const RowSnapshot& b) { return a.key < b.key; });
  scanned_rows_.fetch_add(out.size(), std::memory_order_relaxed);
  return out;
}

std::size_t Store::CountColumns(TableId table_id, const RowKey& start,
                                const RowKey& end) const {
  if (end < start) throw std::invalid_argument("scan range start > end");
  const Table& t = table(table_id);
  scans_.fetch_add(1, std::memory_order_relaxed);
  std::size_t columns = 0;
  std::size_t rows = 0;
  for (const auto& shard : t.shards) {
    std::shared_lock lock(shard->mu);
    for (auto it = shard->rows.lower_bound(start);
         it != shard->rows.end() && it->first < end; ++it) {
      columns += it->second.columns.size();
      ++rows;
    }
  }
  scanned_rows_.fetch_add(rows, std::memory_order_relaxed);
  return columns;
}

int Store::TargetTier(const Table& t, Timestamp age) const {
  const auto& ttl = t.options.tier_ttl;
  Timestamp threshold = 0;
  for (std::size_t k = 0; k < ttl.size(); ++k) {
    if (ttl[k] == kInfiniteTime) return static_cast<int>(k);
    threshold += ttl[k];
    if (age <= threshold) return static_cast<int>(k);
  }
  return static_cast<int>(ttl.size());
}

void Store::MoveToTier(Table& t, const RowKey& row, const ColumnKey& column,
                       StoredCell& cell, int tier) {
  std::string value = cell.tier == 0
                          ? std::move(cell.value)
                          : t.tier_files[static_cast<std::size_t>(cell.tier - 1)]->Read(
                                cell.file_offset, cell.value_size);
  auto& file = *t.tier_files[static_cast<std::size_t>(tier - 1)];
  cell.file_offset = file.Append(row.bytes(), column.first, column.second, cell.t, value);
  cell.value_size = static_cast<std::uint32_t>(value.size());
  cell.value.clear();
  cell.value.shrink_to_fit();
  cell.tier = tier;
}

void Store::Dispatch(std::vector<Evicted>& evicted) {
  if (sink_) {
    for (const auto& e : evicted) sink_(e.table, e.row, e.cell);
  }
  cells_archived_.fetch_add(evicted.size(), std::memory_order_relaxed);
  evicted.clear();
}

std::size_t Store::AgeTick(Timestamp now) {
  std::size_t moved = 0;
  std::vector<Evicted> evicted;
  const int last_tier = options_.disk_tiers;
  for (std::size_t ti = 0; ti < kTableCount; ++ti) {
    Table& t = tables_[ti];
    if (t.options.tier_ttl.front() == kInfiniteTime) continue;
    for (auto& shard : t.shards) {
      std::vector<RowKey> keys;
      {
        std::shared_lock lock(shard->mu);
        keys.reserve(shard->rows.size());
        for (const auto& [k, _] : shard->rows) keys.push_back(k);
      }
      for (const auto& key : keys) {
        // One row per exclusive critical section.
        std::unique_lock lock(shard->mu);
        auto rit = shard->rows.find(key);
        if (rit == shard->rows.end()) continue;
        Row& row = rit->second;
        for (auto cit = row.columns.begin(); cit != row.columns.end();) {
          auto& cells = cit->second;
          std::vector<StoredCell> kept;
          kept.reserve(cells.size());
          for (std::size_t idx = 0; idx < cells.size(); ++idx) {
            StoredCell& cell = cells[idx];
            int target = TargetTier(t, now - cell.t);
            const bool pinned = t.options.retain_latest && idx == 0;
            if (target > last_tier && pinned) target = last_tier;
            if (target > last_tier) {
              if (t.options.archive_expired) {
                evicted.push_back({static_cast<TableId>(ti), key,
                                   Materialize(t, cit->first, cell)});
              }
              ++moved;
              continue;
            }
            if (target > cell.tier) {
              MoveToTier(t, key, cit->first, cell, target);
              ++moved;
            }
            kept.push_back(std::move(cell));
          }
          cells = std::move(kept);
          if (cells.empty()) {
            cit = row.columns.erase(cit);
          } else {
            ++cit;
          }
        }
        if (row.columns.empty()) shard->rows.erase(rit);
        lock.unlock();
        if (!evicted.empty()) Dispatch(evicted);
      }
    }
  }
  cells_moved_.fetch_add(moved, std::memory_order_relaxed);
  return moved;
}

std::size_t Store::EvictRow(TableId table_id, const RowKey& row) {
  Table& t = table(table_id);
  Shard& shard = ShardFor(t, row);
  std::vector<Evicted> evicted;
  std::size_t removed = 0;
  {
    std::unique_lock lock(shard.mu);
    auto it = shard.rows.find(row);
    if (it == shard.rows.end()) return 0;
    for (const auto& [key, cells] : it->second.columns) {
      // Oldest first so the sink sees each column in time order.
      for (auto c = cells.rbegin(); c != cells.rend(); ++c) {
        if (t.options.archive_expired) {
          evicted.push_back({table_id, row, Materialize(t, key, *c)});
        }
        ++removed;
      }
    }
    shard.rows.erase(it);
  }
  Dispatch(evicted);
  return removed;
}

std::size_t Store::EvictAll(TableId table_id) {
  Table& t = table(table_id);
  std::size_t removed = 0;
  for (auto& shard : t.shards) {
    std::vector<RowKey> keys;
    {
      std::shared_lock lock(shard->mu);
      for (const auto& [k, _] : shard->rows) keys.push_back(k);
    }
    for (const auto& k : keys) removed += EvictRow(table_id, k);
  }
  return removed;
}

std::size_t Store::RowCount(TableId table_id) const {
  const Table& t = table(table_id);
  std::size_t n = 0;
  for (const auto& shard : t.shards) {
    std::shared_lock lock(shard->mu);
    n += shard->rows.size();
  }
  return n;
}

std::vector<std::size_t> Store::CellsPerTier(TableId table_id) const {
  const Table& t = table(table_id);
  std::vector<std::size_t> counts(static_cast<std::size_t>(options_.disk_tiers) + 1, 0);
  for (const auto& shard : t.shards) {
    std::shared_lock lock(shard->mu);
    for (const auto& [_, row] : shard->rows) {
      for (const auto& [__, cells] : row.columns) {
        for (const auto& c : cells) ++counts[static_cast<std::size_t>(c.tier)];
      }
    }
  }
  return counts;
}

StoreStats Store::stats() const {
  StoreStats s;
  s.puts = puts_.load();
  s.deletes = deletes_.load();
  s.row_reads = row_reads_.load();
  s.scans = scans_.load();
  s.scanned_rows = scanned_rows_.load();
  s.cells_moved = cells_moved_.load();
  s.cells_archived = cells_archived_.load();
  return s;
}

}  // namespace shoal
