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

#include "shoal/bench.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

namespace shoal {

namespace {

using Clock = std::chrono::steady_clock;

double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t MixId(ObjectId id) {
  id ^= id >> 33;
  id *= 0xff51afd7ed558ccdULL;
  id ^= id >> 33;
  return id;
}

void Count(const UpdateOutcome& o, SecondBucket* b) {
  switch (o.kind) {
    case UpdateKind::kShed:
      ++b->shed;
      break;
    case UpdateKind::kLeaderUpdated:
      ++b->leader_updates;
      break;
    case UpdateKind::kPromotedToLeader:
      ++b->promotions;
      break;
    case UpdateKind::kRegistered:
      ++b->registrations;
      break;
    case UpdateKind::kRejected:
      ++b->rejected;
      break;
  }
  b->store_writes += static_cast<std::uint64_t>(o.index_writes);
}

void Merge(const SecondBucket& from, SecondBucket* into) {
  into->received += from.received;
  into->shed += from.shed;
  into->leader_updates += from.leader_updates;
  into->promotions += from.promotions;
  into->registrations += from.registrations;
  into->rejected += from.rejected;
  into->failed += from.failed;
  into->store_writes += from.store_writes;
}

// Brute-force kNN over modeled locations of `ids`.
std::vector<Neighbor> BruteKnn(const SchoolTracker& tracker, const std::vector<ObjectId>& ids,
                               const NNQuery& q) {
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

}  // namespace

void SimulationConfig::Validate() const {
  engine.Validate();
  workload.Validate();
  if (workload.map_size != engine.map_size) {
    throw std::invalid_argument("workload and engine map sizes differ");
  }
  if (!(duration_s >= 0.0)) throw std::invalid_argument("duration_s must be non-negative");
  if (workers < 1) throw std::invalid_argument("workers must be at least 1");
  if (!(queries_per_second >= 0.0)) {
    throw std::invalid_argument("queries_per_second must be non-negative");
  }
  if (query_k == 0) throw std::invalid_argument("query_k must be positive");
  if (!(query_timeout_ms > 0.0)) throw std::invalid_argument("query_timeout_ms must be positive");
}

double ApplyUpdates(Engine& engine, const std::vector<UpdateMessage>& msgs, int workers,
                    SecondBucket* bucket) {
  const auto start = Clock::now();
  auto run = [&](int worker, SecondBucket* out) {
    for (const auto& m : msgs) {
      if (workers > 1 && static_cast<int>(MixId(m.id) % static_cast<std::uint64_t>(workers)) != worker) {
        continue;
      }
      ++out->received;
      try {
        Count(engine.Update(m), out);
      } catch (const std::exception&) {
        ++out->failed;
      }
    }
  };
  if (workers <= 1) {
    run(0, bucket);
  } else {
    std::vector<SecondBucket> partial(static_cast<std::size_t>(workers));
    std::vector<std::thread> threads;
    for (int w = 1; w < workers; ++w) threads.emplace_back(run, w, &partial[static_cast<std::size_t>(w)]);
    run(0, &partial[0]);
    for (auto& t : threads) t.join();
    for (const auto& p : partial) Merge(p, bucket);
  }
  return SecondsSince(start);
}

UpdateOutcome Replayer::Feed(const UpdateMessage& msg) {
  if (!started_) {
    started_ = true;
    next_tick_ = msg.t - ((msg.t % kMicrosPerSecond) + kMicrosPerSecond) % kMicrosPerSecond;
  }
  while (next_tick_ <= msg.t) {
    std::vector<MergeStats> merges;
    engine_.ClusterTick(next_tick_, &merges);
    for (const auto& m : merges) {
      totals_.clustering_writes += m.index_writes;
      totals_.store_writes += m.index_writes;
    }
    if (aging_) engine_.AgeTick(next_tick_);
    next_tick_ += kMicrosPerSecond;
    ++ticks_;
  }
  ++totals_.received;
  try {
    UpdateOutcome o = engine_.Update(msg);
    Count(o, &totals_);
    return o;
  } catch (...) {
    ++totals_.failed;
    throw;
  }
}

SimulationReport RunSimulation(const SimulationConfig& cfg) {
  cfg.Validate();
  const auto wall_start = Clock::now();
  SimulationReport report;
  report.config = ToJson(cfg);

  const Timestamp start = cfg.workload.start;
  Engine engine(cfg.engine, start);
  Workload workload(cfg.workload);
  std::mt19937_64 query_rng(cfg.workload.seed ^ 0x5bd1e995ULL);
  std::uniform_real_distribution<double> coord(0.0, cfg.engine.map_size);

  const auto seconds = static_cast<std::int64_t>(std::ceil(cfg.duration_s));
  const Timestamp end = start + FromSeconds(cfg.duration_s);
  double query_credit = 0.0;
  double os_sum = 0.0;
  for (std::int64_t s = 0; s < seconds; ++s) {
    const Timestamp t0 = start + s * kMicrosPerSecond;
    const Timestamp t1 = std::min(end, t0 + kMicrosPerSecond);
    SecondBucket bucket;
    bucket.second = s;

    // Clustering and aging for instant t0 run before updates stamped >= t0.
    std::vector<MergeStats> merges;
    engine.ClusterTick(t0, &merges);
    for (const auto& m : merges) {
      bucket.clustering_writes += m.index_writes;
      report.clustering.push_back(m);
    }
    bucket.store_writes += bucket.clustering_writes;
    if (cfg.aging) engine.AgeTick(t0);

    const auto msgs = workload.Step(t1);
    bucket.ingest_seconds = ApplyUpdates(engine, msgs, cfg.workers, &bucket);

    query_credit += cfg.queries_per_second * SecondsBetween(t0, t1);
    while (query_credit >= 1.0) {
      query_credit -= 1.0;
      ++bucket.queries;
      NNQuery q{{coord(query_rng), coord(query_rng)}, cfg.query_k, t1};
      const auto qs = Clock::now();
      try {
        engine.Knn(q);
        if (SecondsSince(qs) * 1000.0 > cfg.query_timeout_ms) ++bucket.failed_queries;
      } catch (const std::exception&) {
        ++bucket.failed_queries;
      }
    }

    bucket.os_count = engine.tracker().leader_count();
    os_sum += static_cast<double>(bucket.os_count);
    report.received += bucket.received;
    report.shed += bucket.shed;
    report.ingest_seconds += bucket.ingest_seconds;
    report.series.push_back(bucket);
  }

  report.final_objects = engine.tracker().object_count();
  report.final_leaders = engine.tracker().leader_count();
  report.shed_rate = report.received == 0
                         ? 0.0
                         : static_cast<double>(report.shed) / static_cast<double>(report.received);
  report.mean_os_count = report.series.empty() ? 0.0 : os_sum / report.series.size();
  engine.Drain();
  if (engine.archiver()) {
    const auto st = engine.archiver()->stats();
    report.archived_records = st.appended;
    report.blocked_appends = st.blocked_appends;
  }
  report.wall_seconds = SecondsSince(wall_start);
  return report;
}

nlohmann::json SimulationReport::Summary() const {
  return {{"received", received},
          {"shed", shed},
          {"shed_rate", shed_rate},
          {"mean_os_count", mean_os_count},
          {"final_objects", final_objects},
          {"final_leaders", final_leaders},
          {"archived_records", archived_records},
          {"blocked_appends", blocked_appends},
          {"clustering_runs", clustering.size()},
          {"ingest_seconds", ingest_seconds},
          {"wall_seconds", wall_seconds}};
}

nlohmann::json ToJson(const SecondBucket& b) {
  return {{"second", b.second},
          {"received", b.received},
          {"shed", b.shed},
          {"leader_updates", b.leader_updates},
          {"promotions", b.promotions},
          {"registrations", b.registrations},
          {"rejected", b.rejected},
          {"failed", b.failed},
          {"store_writes", b.store_writes},
          {"clustering_writes", b.clustering_writes},
          {"os_count", b.os_count},
          {"queries", b.queries},
          {"failed_queries", b.failed_queries},
          {"ingest_seconds", b.ingest_seconds}};
}

nlohmann::json ToJson(const MergeStats& m) {
  return {{"read_seconds", m.read_seconds},
          {"compute_seconds", m.compute_seconds},
          {"write_seconds", m.write_seconds},
          {"leaders_before", m.leaders_before},
          {"leaders_after", m.leaders_after}};
}

nlohmann::json ToJson(const SimulationConfig& cfg) {
  const auto& e = cfg.engine;
  const auto& w = cfg.workload;
  return {{"seed", w.seed},
          {"agents", w.agents},
          {"duration_s", cfg.duration_s},
          {"workers", cfg.workers},
          {"map_size", e.map_size},
          {"spatial_level", e.spatial_level},
          {"clustering_level", e.school.clustering_level},
          {"epsilon", e.school.epsilon},
          {"delta_m", e.school.delta_m},
          {"cluster_interval_s", ToSeconds(e.school.cluster_interval)},
          {"sigma", e.flag.sigma},
          {"nn_min_level", e.flag.min_level},
          {"nn_max_level", e.flag.max_level},
          {"queries_per_second", cfg.queries_per_second},
          {"query_k", cfg.query_k},
          {"pedestrian_fraction", w.pedestrian_fraction},
          {"position_noise", w.position_noise},
          {"velocity_noise", w.velocity_noise},
          {"blocks", w.blocks},
          {"archive", e.archive},
          {"disks", e.archive_options.disks}};
}

void NNBenchConfig::Validate() const {
  if (densities.empty()) throw std::invalid_argument("densities must not be empty");
  if (!(region > 0.0) || region > map_size) {
    throw std::invalid_argument("region must be in (0, map_size]");
  }
  if (spatial_level < 1 || spatial_level > kMaxLevel) {
    throw std::invalid_argument("spatial_level out of range");
  }
  for (int l : fixed_levels) {
    if (l < 0 || l > spatial_level) throw std::invalid_argument("fixed level out of range");
  }
  if (ks.empty()) throw std::invalid_argument("ks must not be empty");
  for (auto k : ks) {
    if (k == 0) throw std::invalid_argument("k must be positive");
  }
  if (queries == 0) throw std::invalid_argument("queries must be positive");
  if (!(sigma >= 1.0)) throw std::invalid_argument("sigma must be at least 1");
}

NNBenchReport RunNNBench(const NNBenchConfig& cfg) {
  cfg.Validate();
  NNBenchReport report;
  std::vector<int> levels = cfg.fixed_levels;
  if (levels.empty()) {
    for (int l = 1; l <= cfg.spatial_level; ++l) levels.push_back(l);
  }
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> coord(0.0, cfg.region);

  for (std::size_t density : cfg.densities) {
    EngineConfig ec = EngineConfig::Defaults(cfg.spatial_level);
    ec.map_size = cfg.map_size;
    ec.archive = false;
    ec.flag.sigma = cfg.sigma;
    Engine engine(ec);
    std::vector<ObjectId> ids;
    for (std::size_t i = 0; i < density; ++i) {
      engine.Update({static_cast<ObjectId>(i), {coord(rng), coord(rng)}, {}, 0});
      ids.push_back(static_cast<ObjectId>(i));
    }
    std::vector<Vec2> queries;
    for (std::size_t i = 0; i < cfg.queries; ++i) queries.push_back({coord(rng), coord(rng)});

    for (std::size_t k : cfg.ks) {
      auto measure = [&](bool flag, int fixed) {
        NNBenchRow row;
        row.density = density;
        row.k = k;
        row.flag = flag;
        double level_sum = 0.0;
        engine.nn().ClearCache();
        for (const Vec2& loc : queries) {
          SearchStats probe;
          int level = fixed;
          if (flag) level = engine.nn().CachedLevel(loc, 0, nullptr, &probe);
          level_sum += level;
          SearchStats st;
          const auto qs = Clock::now();
          engine.nn().Knn({loc, k, 0}, level, &st);
          row.mean_latency_us += SecondsSince(qs) * 1e6;
          row.mean_rows += static_cast<double>(st.rows);
          row.mean_scans += static_cast<double>(st.scans);
          row.mean_cost += st.Cost(cfg.sigma);
          row.mean_flag_probes += static_cast<double>(probe.scans);
        }
        const double n = static_cast<double>(queries.size());
        row.mean_rows /= n;
        row.mean_scans /= n;
        row.mean_cost /= n;
        row.mean_latency_us /= n;
        row.mean_flag_probes /= n;
        row.level = flag ? static_cast<int>(std::lround(level_sum / n)) : fixed;
        report.rows.push_back(row);
      };
      for (int l : levels) measure(false, l);
      measure(true, 0);
    }

    // Exactness sample against brute force, FLAG levels.
    std::uniform_int_distribution<std::size_t> kdist(1, 50);
    const std::size_t sample = density == cfg.densities.front() ? cfg.exactness_queries : 0;
    for (std::size_t i = 0; i < sample; ++i) {
      NNQuery q{{coord(rng), coord(rng)}, kdist(rng), 0};
      auto got = engine.Knn(q);
      auto want = BruteKnn(engine.tracker(), ids, q);
      ++report.exactness_checked;
      if (got != want) ++report.exactness_mismatches;
    }
  }
  return report;
}

const NNBenchRow& NNBenchReport::BestFixed(std::size_t density, std::size_t k) const {
  const NNBenchRow* best = nullptr;
  for (const auto& r : rows) {
    if (r.flag || r.density != density || r.k != k) continue;
    if (!best || r.mean_cost < best->mean_cost) best = &r;
  }
  if (!best) throw std::out_of_range("no fixed-level rows for this density");
  return *best;
}

const NNBenchRow& NNBenchReport::Flag(std::size_t density, std::size_t k) const {
  for (const auto& r : rows) {
    if (r.flag && r.density == density && r.k == k) return r;
  }
  throw std::out_of_range("no FLAG row for this density");
}

const NNBenchRow& NNBenchReport::Fixed(std::size_t density, std::size_t k, int level) const {
  for (const auto& r : rows) {
    if (!r.flag && r.density == density && r.k == k && r.level == level) return r;
  }
  throw std::out_of_range("no row for this level");
}

nlohmann::json ToJson(const NNBenchRow& r) {
  return {{"density", r.density},
          {"k", r.k},
          {"mode", r.flag ? "flag" : "fixed"},
          {"level", r.level},
          {"mean_rows", r.mean_rows},
          {"mean_scans", r.mean_scans},
          {"mean_cost", r.mean_cost},
          {"mean_latency_us", r.mean_latency_us},
          {"mean_flag_probes", r.mean_flag_probes}};
}

std::vector<ScalingRow> RunScaling(const ScalingConfig& cfg) {
  cfg.base.Validate();
  if (cfg.worker_counts.empty()) throw std::invalid_argument("worker_counts must not be empty");
  // Pre-generate once so every run sees the same update stream.
  Workload workload(cfg.base.workload);
  const Timestamp start = cfg.base.workload.start;
  const auto seconds = static_cast<std::int64_t>(std::ceil(cfg.duration_s));
  std::vector<std::vector<UpdateMessage>> per_second;
  for (std::int64_t s = 0; s < seconds; ++s) {
    per_second.push_back(workload.Step(start + (s + 1) * kMicrosPerSecond));
  }

  std::vector<ScalingRow> rows;
  for (int w : cfg.worker_counts) {
    if (w < 1) throw std::invalid_argument("worker counts must be positive");
    EngineConfig ec = cfg.base.engine;
    ec.archive = false;
    Engine engine(ec, start);
    ScalingRow row;
    row.workers = w;
    for (std::int64_t s = 0; s < seconds; ++s) {
      const Timestamp t0 = start + s * kMicrosPerSecond;
      engine.ClusterTick(t0);
      SecondBucket bucket;
      row.seconds += ApplyUpdates(engine, per_second[static_cast<std::size_t>(s)], w, &bucket);
      row.updates += bucket.received;
      row.failed += bucket.failed;
    }
    row.throughput = row.seconds > 0.0 ? static_cast<double>(row.updates) / row.seconds : 0.0;
    rows.push_back(row);
  }
  for (auto& r : rows) {
    r.speedup = rows.front().throughput > 0.0 ? r.throughput / rows.front().throughput : 0.0;
  }
  return rows;
}

nlohmann::json ToJson(const ScalingRow& r) {
  return {{"workers", r.workers},
          {"updates", r.updates},
          {"seconds", r.seconds},
          {"throughput", r.throughput},
          {"speedup", r.speedup},
          {"failed", r.failed}};
}

}  // namespace shoal
