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

#include "shoal/archive.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <system_error>

#include "bytes.h"
#include "temp_dir.h"

namespace shoal {

namespace {

constexpr char kPageMagic[4] = {'M', 'O', 'P', 'G'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 8 + 8 + 4 + 8;
constexpr std::size_t kRecordBytes = 8 + 8 + 4 * 8;

std::uint64_t Mix(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

bool RecordLess(const ArchivedRecord& a, const ArchivedRecord& b) {
  return a.id != b.id ? a.id < b.id : a.rec.t < b.rec.t;
}

bool Overlaps(const ArchivePage& page, Timestamp from, Timestamp to) {
  return !page.records.empty() && page.min_t < to && page.max_t >= from;
}

// Follower intervals [from, to) during which `id` tracked `leader`.
struct FollowSpan {
  ObjectId id;
  ObjectId leader;
  Vec2 displacement;
  Timestamp from;
  Timestamp to;
};

std::vector<FollowSpan> SpansOf(std::vector<AffiliationEvent> events) {
  std::stable_sort(events.begin(), events.end(),
                   [](const auto& a, const auto& b) { return a.t < b.t; });
  std::vector<FollowSpan> spans;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.kind != AffiliationEvent::Kind::kBecameFollower) continue;
    const Timestamp end = i + 1 < events.size() ? events[i + 1].t : kInfiniteTime;
    if (end > e.t) spans.push_back({e.id, e.leader, e.displacement, e.t, end});
  }
  return spans;
}

}  // namespace

std::string EncodePage(const ArchivePage& page) {
  std::string out;
  out.reserve(kHeaderBytes + page.records.size() * kRecordBytes);
  out.append(kPageMagic, 4);
  bytes::PutU32(out, static_cast<std::uint32_t>(page.records.size()));
  bytes::PutU64(out, static_cast<std::uint64_t>(page.min_t));
  bytes::PutU64(out, static_cast<std::uint64_t>(page.max_t));
  bytes::PutU32(out, static_cast<std::uint32_t>(page.disk));
  bytes::PutU64(out, page.sequence);
  for (const auto& r : page.records) {
    bytes::PutU64(out, r.id);
    bytes::PutU64(out, static_cast<std::uint64_t>(r.rec.t));
    bytes::PutF64(out, r.rec.loc.x);
    bytes::PutF64(out, r.rec.loc.y);
    bytes::PutF64(out, r.rec.vel.x);
    bytes::PutF64(out, r.rec.vel.y);
  }
  return out;
}

std::size_t DecodePage(std::string_view data, ArchivePage* page) {
  bytes::Reader in(data);
  auto magic = in.Bytes(4);
  if (magic != std::string_view(kPageMagic, 4)) throw std::runtime_error("bad page magic");
  const std::uint32_t count = in.U32();
  page->min_t = static_cast<Timestamp>(in.U64());
  page->max_t = static_cast<Timestamp>(in.U64());
  page->disk = static_cast<int>(in.U32());
  page->sequence = in.U64();
  if (in.remaining() / kRecordBytes < count) throw std::runtime_error("truncated page");
  page->records.resize(count);
  for (auto& r : page->records) {
    r.id = in.U64();
    r.rec.t = static_cast<Timestamp>(in.U64());
    r.rec.loc.x = in.F64();
    r.rec.loc.y = in.F64();
    r.rec.vel.x = in.F64();
    r.rec.vel.y = in.F64();
  }
  return data.size() - in.remaining();
}

Archiver::Archiver(ArchiveOptions options, SpatialGrid grid)
    : options_(std::move(options)), grid_(grid) {
  options_.model.Validate();
  if (options_.disks < 1) throw std::invalid_argument("at least one disk is required");
  if (options_.placement_level < 0 || options_.placement_level > kMaxLevel) {
    throw std::invalid_argument("placement level out of range");
  }
  if (options_.dir.empty()) {
    options_.dir = MakePrivateDir("shoal-archive");
    owns_dir_ = true;
  } else {
    std::filesystem::create_directories(options_.dir);
  }
  page_capacity_ = options_.page_records;
  if (page_capacity_ == 0) {
    page_capacity_ = static_cast<std::size_t>(
        std::max(1.0, std::floor(options_.model.objects / options_.disks)));
  }
  disks_.resize(static_cast<std::size_t>(options_.disks));
  page_cache_.resize(static_cast<std::size_t>(options_.disks));
  for (int d = 1; d <= options_.disks; ++d) {
    // Truncate leftovers from a previous run.
    std::ofstream(DiskPath(d), std::ios::binary | std::ios::trunc);
  }
  writer_ = std::thread([this] { WriterLoop(); });
}

Archiver::~Archiver() {
  try {
    Drain();
  } catch (...) {
    // Errors were reportable through Drain; nothing more to do here.
  }
  {
    std::lock_guard<std::mutex> lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  writer_.join();
  if (owns_dir_) {
    std::error_code ec;
    std::filesystem::remove_all(options_.dir, ec);
  }
}

std::filesystem::path Archiver::DiskPath(int disk) const {
  return options_.dir / ("disk-" + std::to_string(disk) + ".pages");
}

int Archiver::Placement(ObjectId id, Vec2 initial_loc) const {
  if (options_.disks == 1) return 1;
  Vec2 p{std::clamp(initial_loc.x, 0.0, grid_.map_size()),
         std::clamp(initial_loc.y, 0.0, grid_.map_size())};
  const SpatialIndex cell = grid_.Encode(p, options_.placement_level);
  const std::uint64_t h = Mix(Mix(cell.position() + 0x9e3779b97f4a7c15ULL) ^ id);
  return static_cast<int>(h % static_cast<std::uint64_t>(options_.disks)) + 1;
}

int Archiver::DiskOf(ObjectId id) const {
  std::lock_guard<std::mutex> lock(meta_mu_);
  auto it = placement_.find(id);
  return it == placement_.end() ? 0 : it->second;
}

int Archiver::AssignDisk(ObjectId id, Vec2 loc) {
  std::lock_guard<std::mutex> lock(meta_mu_);
  auto [it, inserted] = placement_.try_emplace(id, 0);
  if (inserted) it->second = Placement(id, loc);
  return it->second;
}

double Archiver::FlushCost(std::size_t records) const {
  const auto& m = options_.model;
  return m.latency() + static_cast<double>(records) * m.record_bytes / m.disk_rate;
}

void Archiver::Append(ObjectId id, const LocationRecord& rec) {
  const int disk = AssignDisk(id, rec.loc);
  std::unique_lock<std::mutex> lock(mu_);
  ++appended_;
  arrival_clock_ += 1.0 / options_.model.update_rate;
  Disk& d = disks_[static_cast<std::size_t>(disk - 1)];
  d.filling.push_back({id, rec});
  if (d.filling.size() >= page_capacity_) {
    if (d.busy_until > arrival_clock_) {
      // The sibling page is still flushing: the appender stalls.
      ++blocked_;
      arrival_clock_ = d.busy_until;
    }
    StartFlush(lock, disk);
  }
}

void Archiver::StartFlush(std::unique_lock<std::mutex>& lock, int disk) {
  Disk& d = disks_[static_cast<std::size_t>(disk - 1)];
  cv_.wait(lock, [&] { return !d.in_flight; });
  if (d.filling.empty()) return;
  ArchivePage page;
  page.disk = disk;
  page.sequence = d.next_sequence++;
  // Appends racing with the wait above may have overfilled the page.
  const std::size_t take = std::min(d.filling.size(), page_capacity_);
  page.records.assign(d.filling.begin(), d.filling.begin() + static_cast<std::ptrdiff_t>(take));
  d.filling.erase(d.filling.begin(), d.filling.begin() + static_cast<std::ptrdiff_t>(take));
  std::sort(page.records.begin(), page.records.end(), RecordLess);
  page.min_t = kInfiniteTime;
  page.max_t = std::numeric_limits<Timestamp>::min();
  for (const auto& r : page.records) {
    page.min_t = std::min(page.min_t, r.rec.t);
    page.max_t = std::max(page.max_t, r.rec.t);
  }
  const double cost = FlushCost(page.records.size());
  d.busy_until = std::max(d.busy_until, arrival_clock_) + cost;
  d.busy_seconds += cost;
  ++d.flushes;
  d.in_flight = true;
  queue_.push_back({disk, std::move(page)});
  cv_.notify_all();
}

void Archiver::WriterLoop() {
  std::unique_lock<std::mutex> lock(mu_);
  while (true) {
    cv_.wait(lock, [&] { return stop_ || !queue_.empty(); });
    if (queue_.empty()) return;
    Job job = std::move(queue_.front());
    queue_.pop_front();
    ++writing_;
    lock.unlock();
    std::exception_ptr failure;
    try {
      WritePage(job.page);
    } catch (...) {
      failure = std::current_exception();
    }
    lock.lock();
    --writing_;
    if (job.disk > 0) disks_[static_cast<std::size_t>(job.disk - 1)].in_flight = false;
    if (failure) {
      ++failed_flushes_;
      if (!error_) error_ = failure;
      failed_.push_back(std::move(job.page));
    } else {
      ++pages_flushed_;
      records_flushed_ += job.page.records.size();
    }
    cv_.notify_all();
  }
}

void Archiver::WritePage(const ArchivePage& page) {
  const std::string data = EncodePage(page);
  std::lock_guard<std::mutex> lock(file_mu_);
  std::ofstream out(DiskPath(page.disk), std::ios::binary | std::ios::app);
  if (!out) {
    throw std::system_error(errno, std::generic_category(),
                            "cannot open " + DiskPath(page.disk).string());
  }
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  out.flush();
  if (!out) {
    throw std::system_error(errno, std::generic_category(),
                            "write failed on " + DiskPath(page.disk).string());
  }
  std::unique_lock<std::shared_mutex> cache(cache_mu_);
  page_cache_[static_cast<std::size_t>(page.disk - 1)].push_back(page);
}

void Archiver::Drain() {
  std::unique_lock<std::mutex> lock(mu_);
  // Retry pages whose earlier write failed.
  // Retried jobs carry disk 0: they do not occupy the disk's second page.
  for (auto& page : failed_) queue_.push_back({0, std::move(page)});
  failed_.clear();
  if (!queue_.empty()) cv_.notify_all();
  for (int disk = 1; disk <= options_.disks; ++disk) {
    while (!disks_[static_cast<std::size_t>(disk - 1)].filling.empty()) StartFlush(lock, disk);
  }
  cv_.wait(lock, [&] {
    if (!queue_.empty() || writing_ > 0) return false;
    for (const auto& d : disks_) {
      if (d.in_flight) return false;
    }
    return true;
  });
  if (error_) {
    auto e = error_;
    error_ = nullptr;
    std::rethrow_exception(e);
  }
}

std::vector<ArchivePage> Archiver::ReadDisk(int disk) const {
  if (disk < 1 || disk > options_.disks) throw std::out_of_range("no such disk");
  std::string data;
  {
    std::lock_guard<std::mutex> lock(file_mu_);
    std::ifstream in(DiskPath(disk), std::ios::binary);
    if (!in) return {};
    data.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  std::vector<ArchivePage> pages;
  std::string_view rest(data);
  while (!rest.empty()) {
    ArchivePage page;
    rest.remove_prefix(DecodePage(rest, &page));
    pages.push_back(std::move(page));
  }
  return pages;
}

std::vector<AffiliationEvent> Archiver::Events(ObjectId id) const {
  std::lock_guard<std::mutex> lock(meta_mu_);
  auto it = events_.find(id);
  return it == events_.end() ? std::vector<AffiliationEvent>{} : it->second;
}

std::vector<ArchivedRecord> Archiver::OwnRecords(ObjectId id, Timestamp from,
                                                 Timestamp to) const {
  std::vector<ArchivedRecord> out;
  const int disk = DiskOf(id);
  if (disk == 0 || from >= to) return out;
  std::shared_lock<std::shared_mutex> cache(cache_mu_);
  for (const auto& page : page_cache_[static_cast<std::size_t>(disk - 1)]) {
    if (!Overlaps(page, from, to)) continue;
    auto it = std::lower_bound(page.records.begin(), page.records.end(),
                               ArchivedRecord{id, {{}, {}, from}}, RecordLess);
    for (; it != page.records.end() && it->id == id && it->rec.t < to; ++it) {
      out.push_back(*it);
    }
  }
  std::sort(out.begin(), out.end(), RecordLess);
  return out;
}

std::vector<LocationRecord> Archiver::HistoryByObject(ObjectId id, Timestamp from,
                                                      Timestamp to) const {
  std::vector<LocationRecord> out;
  if (from >= to) return out;
  for (const auto& r : OwnRecords(id, from, to)) out.push_back(r.rec);
  for (const FollowSpan& span : SpansOf(Events(id))) {
    const Timestamp a = std::max(from, span.from);
    const Timestamp b = std::min(to, span.to);
    if (a >= b) continue;
    for (const auto& r : OwnRecords(span.leader, a, b)) {
      out.push_back({r.rec.loc + span.displacement, r.rec.vel, r.rec.t});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const LocationRecord& a, const LocationRecord& b) { return a.t < b.t; });
  return out;
}

std::vector<ArchivedRecord> Archiver::HistoryByRegion(const SpatialIndex& cell,
                                                      Timestamp from, Timestamp to) const {
  const CellBox box = grid_.Decode(cell);
  std::vector<ArchivedRecord> out;
  for (auto& r : HistoryByRegion(box.box, from, to)) {
    if (grid_.CellContains(cell, r.rec.loc)) out.push_back(r);
  }
  return out;
}

std::vector<ArchivedRecord> Archiver::HistoryByRegion(const Box& region, Timestamp from,
                                                      Timestamp to) const {
  std::vector<ArchivedRecord> out;
  if (from >= to) return out;
  std::unordered_map<ObjectId, std::vector<FollowSpan>> by_leader;
  {
    std::lock_guard<std::mutex> lock(meta_mu_);
    for (const auto& [id, events] : events_) {
      for (const FollowSpan& span : SpansOf(events)) by_leader[span.leader].push_back(span);
    }
  }
  std::shared_lock<std::shared_mutex> cache(cache_mu_);
  for (const auto& pages : page_cache_) {
    for (const auto& page : pages) {
      if (!Overlaps(page, from, to)) continue;
      for (const auto& r : page.records) {
        if (r.rec.t < from || r.rec.t >= to) continue;
        if (region.Contains(r.rec.loc)) out.push_back(r);
        auto it = by_leader.find(r.id);
        if (it == by_leader.end()) continue;
        for (const FollowSpan& span : it->second) {
          if (r.rec.t < span.from || r.rec.t >= span.to) continue;
          const Vec2 p = r.rec.loc + span.displacement;
          if (region.Contains(p)) out.push_back({span.id, {p, r.rec.vel, r.rec.t}});
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), RecordLess);
  return out;
}

ArchiveStats Archiver::stats() const {
  std::lock_guard<std::mutex> lock(mu_);
  ArchiveStats s;
  s.appended = appended_;
  s.pages_flushed = pages_flushed_;
  s.records_flushed = records_flushed_;
  s.blocked_appends = blocked_;
  s.failed_flushes = failed_flushes_;
  s.arrival_clock = arrival_clock_;
  for (const auto& d : disks_) {
    s.busy_seconds.push_back(d.busy_seconds);
    s.flushes.push_back(d.flushes);
  }
  return s;
}

void Archiver::OnRegistered(ObjectId id, Vec2 initial_loc, Timestamp) {
  AssignDisk(id, initial_loc);
}

void Archiver::OnBecameLeader(ObjectId id, Timestamp t) {
  std::lock_guard<std::mutex> lock(meta_mu_);
  events_[id].push_back({id, AffiliationEvent::Kind::kBecameLeader, 0, {}, t});
}

void Archiver::OnBecameFollower(ObjectId id, ObjectId leader, Vec2 displacement,
                                Timestamp t) {
  std::lock_guard<std::mutex> lock(meta_mu_);
  events_[id].push_back({id, AffiliationEvent::Kind::kBecameFollower, leader,
                         displacement, t});
}

}  // namespace shoal
