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

// Embedded sorted key-value store with column families, timestamped cells and
// tiered (in-memory, disk-0, disk-1, ...) storage.
//
// Three tables exist: Location, SpatialIndex and Affiliation.  Rows are
// sorted by RowKey; a row holds columns addressed by (family, column), each
// column a newest-first list of timestamped cells.  Writes to a single row are
// atomic and serialized; there are no cross-row transactions.
//
// Cells in tier 0 live in memory.  AgeTick() moves cells whose age exceeds the
// cumulative TTL of their tier into the next disk tier; disk tiers are
// append-only files with an in-memory index.  Cells older than the last tier
// are handed to the archive sink (if the table has one) instead of being
// discarded.

#ifndef SHOAL_STORE_H_
#define SHOAL_STORE_H_

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "shoal/geometry.h"
#include "shoal/row_key.h"

namespace shoal {

enum class TableId : std::uint8_t { kLocation = 0, kSpatialIndex = 1, kAffiliation = 2 };
inline constexpr std::size_t kTableCount = 3;

std::string_view TableName(TableId table);
// Throws std::invalid_argument for names other than the three tables.
TableId TableFromName(std::string_view name);

// A cell as seen by readers.  tier 0 is the in-memory column; tier k >= 1 is
// disk column k-1.
struct Cell {
  std::string family;
  std::string column;
  Timestamp timestamp = 0;
  std::string value;
  int tier = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

struct RowSnapshot {
  RowKey key;
  std::vector<Cell> cells;
};

struct TableOptions {
  // TTL of each tier, in microseconds: tier_ttl[0] for the in-memory column,
  // tier_ttl[k] for disk column k-1.  Size = 1 + number of disk tiers.
  // kInfiniteTime disables aging out of that tier.
  std::vector<Timestamp> tier_ttl;
  // Cells kept per column; older versions are dropped on write.  0 = unbounded.
  std::size_t max_versions = 0;
  // Keep the newest cell of every column in the store even when it is older
  // than the last tier's TTL, so the current value stays readable.
  bool retain_latest = false;
  // Cells aging past the last tier go to the archive sink.
  bool archive_expired = false;
};

struct StoreOptions {
  // Directory for disk-tier files.  Empty: a private temporary directory that
  // is removed with the store.
  std::filesystem::path data_dir;
  int disk_tiers = 2;
  std::size_t shards = 16;
  std::array<TableOptions, kTableCount> tables;

  // Location ages through all tiers into the archive; the other two tables
  // hold current state only.
  static StoreOptions Default();
};

// Receives cells leaving the store for good (aging past the last tier or an
// explicit eviction).  Called without store locks held.
using ArchiveSink = std::function<void(TableId, const RowKey&, const Cell&)>;

struct StoreStats {
  std::uint64_t puts = 0;
  std::uint64_t deletes = 0;
  std::uint64_t row_reads = 0;
  std::uint64_t scans = 0;
  std::uint64_t scanned_rows = 0;
  std::uint64_t cells_moved = 0;
  std::uint64_t cells_archived = 0;
};

// A batch of mutations applied atomically to one row.
class RowMutation {
 public:
  RowMutation& Put(std::string family, std::string column, std::string value,
                   Timestamp t);
  RowMutation& DeleteColumn(std::string family, std::string column);
  RowMutation& DeleteFamily(std::string family);

  bool empty() const { return ops_.empty(); }
  std::size_t size() const { return ops_.size(); }

 private:
  friend class Store;
  enum class Kind { kPut, kDeleteColumn, kDeleteFamily };
  struct Op {
    Kind kind;
    std::string family;
    std::string column;
    std::string value;
    Timestamp t = 0;
  };
  std::vector<Op> ops_;
};

class Store {
 public:
  explicit Store(StoreOptions options = StoreOptions::Default());
  ~Store();

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  void SetArchiveSink(ArchiveSink sink);

  void Put(TableId table, const RowKey& row, std::string_view family,
           std::string_view column, std::string value, Timestamp t);
  void Apply(TableId table, const RowKey& row, const RowMutation& mutation);
  // Idempotent; deleting an absent cell is a no-op.
  void Delete(TableId table, const RowKey& row, std::string_view family,
              std::string_view column);

  // All cells of the row across tiers, grouped by column, newest first within
  // each column.  Empty if the row is absent.
  std::vector<Cell> GetRow(TableId table, const RowKey& row) const;
  // Newest cell of one column, if any.
  std::optional<Cell> GetLatest(TableId table, const RowKey& row,
                                std::string_view family,
                                std::string_view column) const;
  // Rows with start <= key < end in key order; each row is a consistent
  // snapshot.  Throws std::invalid_argument if start > end.
  std::vector<RowSnapshot> ScanRange(TableId table, const RowKey& start,
                                     const RowKey& end) const;
  // Number of columns (of any family) in rows of [start, end), without
  // copying values.  Counts as one scan.
  std::size_t CountColumns(TableId table, const RowKey& start,
                           const RowKey& end) const;

  // Moves aged cells down the tiers; returns how many cells moved (including
  // those handed to the archive sink).
  std::size_t AgeTick(Timestamp now);
  // Removes the row and hands every cell to the archive sink (when the table
  // archives) or drops it.  Returns the number of cells removed.
  std::size_t EvictRow(TableId table, const RowKey& row);
  // Hands every archivable cell of every row to the sink and removes it.
  std::size_t EvictAll(TableId table);

  std::size_t RowCount(TableId table) const;
  // Cells currently held, per tier.
  std::vector<std::size_t> CellsPerTier(TableId table) const;

  StoreStats stats() const;
  const StoreOptions& options() const { return options_; }

 private:
  struct StoredCell {
    Timestamp t = 0;
    int tier = 0;
    std::string value;  // empty when the value lives in a tier file
    std::uint64_t file_offset = 0;
    std::uint32_t value_size = 0;
  };
  using ColumnKey = std::pair<std::string, std::string>;
  struct Row {
    std::map<ColumnKey, std::vector<StoredCell>, std::less<>> columns;
  };
  struct Shard {
    mutable std::shared_mutex mu;
    std::map<RowKey, Row> rows;
  };
  class TierFile;
  struct Table {
    TableOptions options;
    std::vector<std::unique_ptr<Shard>> shards;
    std::vector<std::unique_ptr<TierFile>> tier_files;  // index k-1 for tier k
  };
  struct Evicted {
    TableId table;
    RowKey row;
    Cell cell;
  };

  Table& table(TableId id) { return tables_[static_cast<std::size_t>(id)]; }
  const Table& table(TableId id) const { return tables_[static_cast<std::size_t>(id)]; }
  Shard& ShardFor(const Table& t, const RowKey& row) const;

  void ApplyLocked(Table& t, Row& row, const RowMutation& mutation);
  Cell Materialize(const Table& t, const ColumnKey& column,
                   const StoredCell& cell) const;
  std::vector<Cell> MaterializeRow(const Table& t, const Row& row) const;
  // Tier a cell of the given age belongs in; tiers+1 means "archive".
  int TargetTier(const Table& t, Timestamp age) const;
  void MoveToTier(Table& t, const RowKey& row, const ColumnKey& column,
                  StoredCell& cell, int tier);
  void Dispatch(std::vector<Evicted>& evicted);

  StoreOptions options_;
  std::filesystem::path dir_;
  bool owns_dir_ = false;
  std::array<Table, kTableCount> tables_;
  ArchiveSink sink_;

  mutable std::atomic<std::uint64_t> puts_{0};
  mutable std::atomic<std::uint64_t> deletes_{0};
  mutable std::atomic<std::uint64_t> row_reads_{0};
  mutable std::atomic<std::uint64_t> scans_{0};
  mutable std::atomic<std::uint64_t> scanned_rows_{0};
  std::atomic<std::uint64_t> cells_moved_{0};
  std::atomic<std::uint64_t> cells_archived_{0};
};

}  // namespace shoal

#endif  // SHOAL_STORE_H_
