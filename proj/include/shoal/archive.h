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

// Archiving of aged location records onto simulated parallel disks.
//
// Every disk owns two pages (ping-pong): appends fill one while the other is
// written out.  Each disk is an append-only file plus a virtual clock that is
// charged latency + bytes / rate per flush; appends advance a virtual arrival
// clock at the configured update rate, and an append that fills a page while
// the disk is still busy with the previous flush counts as blocked.
//
// Followers have no trajectory of their own once schooled; their history is
// rebuilt from the leader's archived records plus the affiliation events
// received through the AffiliationObserver interface.

#ifndef SHOAL_ARCHIVE_H_
#define SHOAL_ARCHIVE_H_

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <filesystem>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "shoal/geometry.h"
#include "shoal/schooling.h"
#include "shoal/spatial.h"
#include "shoal/tables.h"

namespace shoal {

struct DiskModelParams {
  double rotation_s = 0.005;   // rotational delay
  double seek_s = 0.005;       // seek time
  double disk_rate = 1e8;      // bytes / second
  double k = 1e4;              // read-resolution normalization
  double record_bytes = 48;    // bytes per location record
  double objects = 1e6;        // object count
  double update_rate = 1e6;    // records / second reaching the archive

  void Validate() const;
  double latency() const { return rotation_s + seek_s; }
  // Total bytes of one buffer: one record per object.
  double buffer_bytes() const { return record_bytes * objects; }
};

// Closed forms, for n disks.
double FlushSeconds(const DiskModelParams& p, double n);      // T_d
double FillSeconds(const DiskModelParams& p, double n);       // T_m
double WriteUtilization(const DiskModelParams& p, double n);  // U_d
double ReadResolution(const DiskModelParams& p, double n);    // R_d
// min(U_d, R_d)
double DiskObjective(const DiskModelParams& p, std::int64_t n);
// Buffers fill no faster than they flush.
bool DoubleBufferFeasible(const DiskModelParams& p, std::int64_t n);

struct OptimizerResult {
  std::int64_t disks = 0;
  double buffer_bytes = 0.0;
  double write_utilization = 0.0;
  double read_resolution = 0.0;
  double flush_seconds = 0.0;
  double fill_seconds = 0.0;
  // True when the flush/fill constraint or the disk cap moved the answer
  // away from the unconstrained optimum.
  bool constrained = false;
  std::int64_t unconstrained_disks = 0;
};

class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Disk count in [1, max_disks] maximizing min(U_d, R_d) subject to the
// double-buffer constraint.  Throws InfeasibleError when no count qualifies.
OptimizerResult OptimizeDisks(const DiskModelParams& p, std::int64_t max_disks);

struct ArchivedRecord {
  ObjectId id = 0;
  LocationRecord rec;

  friend bool operator==(const ArchivedRecord&, const ArchivedRecord&) = default;
};

struct ArchivePage {
  int disk = 0;  // 1-based
  std::uint64_t sequence = 0;
  Timestamp min_t = 0;
  Timestamp max_t = 0;
  std::vector<ArchivedRecord> records;  // sorted by (id, t)
};

std::string EncodePage(const ArchivePage& page);
// Decodes one page from the front of `data`; returns bytes consumed.  Throws
// std::runtime_error on a malformed or truncated page.
std::size_t DecodePage(std::string_view data, ArchivePage* page);

struct AffiliationEvent {
  enum class Kind { kBecameLeader, kBecameFollower };
  ObjectId id = 0;
  Kind kind = Kind::kBecameLeader;
  ObjectId leader = 0;
  Vec2 displacement;
  Timestamp t = 0;
};

struct ArchiveOptions {
  std::filesystem::path dir;  // empty: private temporary directory
  int disks = 4;
  DiskModelParams model;
  // Level of the cell of an object's first location mixed into placement.
  int placement_level = 4;
  // Records per page; 0 derives objects / disks from the model.
  std::size_t page_records = 0;
};

struct ArchiveStats {
  std::uint64_t appended = 0;
  std::uint64_t pages_flushed = 0;
  std::uint64_t records_flushed = 0;
  std::uint64_t blocked_appends = 0;
  std::uint64_t failed_flushes = 0;
  // Virtual time at the last append.
  double arrival_clock = 0.0;
  // Per disk: virtual seconds spent flushing, and the flush count.
  std::vector<double> busy_seconds;
  std::vector<std::uint64_t> flushes;
};

class Archiver : public AffiliationObserver {
 public:
  Archiver(ArchiveOptions options, SpatialGrid grid);
  ~Archiver() override;

  Archiver(const Archiver&) = delete;
  Archiver& operator=(const Archiver&) = delete;

  // Disk in [1, disks] for an object first seen at initial_loc.
  int Placement(ObjectId id, Vec2 initial_loc) const;
  // Disk assigned to id, or 0 if the object is unknown.
  int DiskOf(ObjectId id) const;

  void Append(ObjectId id, const LocationRecord& rec);
  // Flushes partial pages and waits for all writes.  Throws the first I/O
  // error seen; failed pages stay in memory and are retried by the next call.
  void Drain();

  // Half-open time range [from, to).
  std::vector<LocationRecord> HistoryByObject(ObjectId id, Timestamp from,
                                              Timestamp to) const;
  std::vector<ArchivedRecord> HistoryByRegion(const Box& region, Timestamp from,
                                              Timestamp to) const;
  std::vector<ArchivedRecord> HistoryByRegion(const SpatialIndex& cell, Timestamp from,
                                              Timestamp to) const;

  // Every page written to one disk, in file order, decoded from the file.
  std::vector<ArchivePage> ReadDisk(int disk) const;
  std::vector<AffiliationEvent> Events(ObjectId id) const;

  ArchiveStats stats() const;
  const ArchiveOptions& options() const { return options_; }
  std::size_t page_capacity() const { return page_capacity_; }
  std::filesystem::path DiskPath(int disk) const;

  // Simulated cost of flushing `records` records.
  double FlushCost(std::size_t records) const;

  // AffiliationObserver.
  void OnRegistered(ObjectId id, Vec2 initial_loc, Timestamp t) override;
  void OnBecameLeader(ObjectId id, Timestamp t) override;
  void OnBecameFollower(ObjectId id, ObjectId leader, Vec2 displacement,
                        Timestamp t) override;

 private:
  struct Disk {
    std::vector<ArchivedRecord> filling;
    bool in_flight = false;  // the other page is being written
    double busy_until = 0.0;
    double busy_seconds = 0.0;
    std::uint64_t flushes = 0;
    std::uint64_t next_sequence = 0;
  };
  struct Job {
    int disk;
    ArchivePage page;
  };

  int AssignDisk(ObjectId id, Vec2 loc);
  // Called with mu_ held; hands the disk's filling page to the writer.
  void StartFlush(std::unique_lock<std::mutex>& lock, int disk);
  void WriterLoop();
  void WritePage(const ArchivePage& page);

  std::vector<ArchivedRecord> OwnRecords(ObjectId id, Timestamp from, Timestamp to) const;

  ArchiveOptions options_;
  SpatialGrid grid_;
  bool owns_dir_ = false;
  std::size_t page_capacity_ = 1;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<Disk> disks_;  // index disk - 1
  std::deque<Job> queue_;
  std::vector<ArchivePage> failed_;
  std::exception_ptr error_;
  bool stop_ = false;
  int writing_ = 0;
  double arrival_clock_ = 0.0;
  std::uint64_t appended_ = 0;
  std::uint64_t pages_flushed_ = 0;
  std::uint64_t records_flushed_ = 0;
  std::uint64_t blocked_ = 0;
  std::uint64_t failed_flushes_ = 0;

  mutable std::mutex meta_mu_;
  std::unordered_map<ObjectId, int> placement_;
  std::unordered_map<ObjectId, std::vector<AffiliationEvent>> events_;

  mutable std::mutex file_mu_;
  // Decoded copy of every page written, per disk, so history queries do not
  // re-parse the files.
  mutable std::shared_mutex cache_mu_;
  std::vector<std::vector<ArchivePage>> page_cache_;
  std::thread writer_;
};

}  // namespace shoal

#endif  // SHOAL_ARCHIVE_H_
