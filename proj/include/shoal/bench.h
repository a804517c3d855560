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

// Experiment drivers behind the command-line tool: simulated runs with
// per-second metrics, the nearest-neighbor level benchmark and the ingest
// scaling run.

#ifndef SHOAL_BENCH_H_
#define SHOAL_BENCH_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "shoal/engine.h"
#include "shoal/workload.h"

namespace shoal {

struct SimulationConfig {
  EngineConfig engine = EngineConfig::Defaults();
  WorkloadConfig workload;
  double duration_s = 600.0;
  int workers = 1;
  double queries_per_second = 10.0;
  std::size_t query_k = 10;
  double query_timeout_ms = 100.0;
  // Run store aging every simulated second.
  bool aging = true;

  void Validate() const;
};

struct SecondBucket {
  std::int64_t second = 0;
  std::uint64_t received = 0;
  std::uint64_t shed = 0;
  std::uint64_t leader_updates = 0;
  std::uint64_t promotions = 0;
  std::uint64_t registrations = 0;
  std::uint64_t rejected = 0;
  std::uint64_t failed = 0;
  // Row mutations on the Location and Spatial Index tables, updates plus
  // clustering.
  std::uint64_t store_writes = 0;
  std::uint64_t clustering_writes = 0;
  std::uint64_t os_count = 0;
  std::uint64_t queries = 0;
  std::uint64_t failed_queries = 0;
  double ingest_seconds = 0.0;  // wall time spent applying the updates
};

struct SimulationReport {
  nlohmann::json config;
  std::vector<SecondBucket> series;
  std::vector<MergeStats> clustering;
  std::uint64_t received = 0;
  std::uint64_t shed = 0;
  double shed_rate = 0.0;
  double mean_os_count = 0.0;
  double ingest_seconds = 0.0;
  double wall_seconds = 0.0;
  std::uint64_t final_objects = 0;
  std::uint64_t final_leaders = 0;
  std::uint64_t archived_records = 0;
  std::uint64_t blocked_appends = 0;

  nlohmann::json Summary() const;
};

SimulationReport RunSimulation(const SimulationConfig& cfg);

nlohmann::json ToJson(const MergeStats& m);
nlohmann::json ToJson(const SimulationConfig& cfg);

struct NNBenchConfig {
  std::uint64_t seed = 1;
  std::vector<std::size_t> densities = {1000, 10000, 50000, 100000};
  // Objects are uniform over [0, region]^2 of a map_size map.
  double map_size = 1000.0;
  double region = 1000.0;
  // Level-10 cells are about one map unit wide; finer fixed levels only add
  // empty scans at these densities.
  int spatial_level = 10;
  std::vector<int> fixed_levels;  // empty: every level in [1, spatial_level]
  std::vector<std::size_t> ks = {10};
  std::size_t queries = 200;
  double sigma = 32.0;
  std::size_t exactness_queries = 1000;

  void Validate() const;
};

struct NNBenchRow {
  std::size_t density = 0;
  std::size_t k = 0;
  int level = 0;       // fixed level, or the mean FLAG level for FLAG rows
  bool flag = false;
  double mean_rows = 0.0;
  double mean_scans = 0.0;
  double mean_cost = 0.0;  // rows + sigma * scans
  double mean_latency_us = 0.0;
  double mean_flag_probes = 0.0;
};

struct NNBenchReport {
  std::vector<NNBenchRow> rows;
  std::size_t exactness_checked = 0;
  std::size_t exactness_mismatches = 0;

  // Best fixed-level row for (density, k).
  const NNBenchRow& BestFixed(std::size_t density, std::size_t k) const;
  const NNBenchRow& Flag(std::size_t density, std::size_t k) const;
  const NNBenchRow& Fixed(std::size_t density, std::size_t k, int level) const;
};

NNBenchReport RunNNBench(const NNBenchConfig& cfg);
nlohmann::json ToJson(const NNBenchRow& row);

struct ScalingConfig {
  SimulationConfig base;
  std::vector<int> worker_counts = {1, 2, 5, 10};
  // Updates replayed per worker count (pre-generated once).
  double duration_s = 60.0;
};

struct ScalingRow {
  int workers = 0;
  std::uint64_t updates = 0;
  double seconds = 0.0;
  double throughput = 0.0;  // updates / wall second
  double speedup = 0.0;     // relative to the first row
  std::uint64_t failed = 0;  // updates that raised an error
};

std::vector<ScalingRow> RunScaling(const ScalingConfig& cfg);
nlohmann::json ToJson(const ScalingRow& row);

// Feeds a time-ordered update stream (a replayed trace) into an engine on one
// thread.  Clustering and aging run at every whole second the stream crosses,
// as in RunSimulation.
class Replayer {
 public:
  explicit Replayer(Engine& engine, bool aging = true) : engine_(engine), aging_(aging) {}

  // Failed updates are counted and their error rethrown.
  UpdateOutcome Feed(const UpdateMessage& msg);
  const SecondBucket& totals() const { return totals_; }
  std::uint64_t ticks() const { return ticks_; }

 private:
  Engine& engine_;
  bool aging_;
  bool started_ = false;
  Timestamp next_tick_ = 0;
  std::uint64_t ticks_ = 0;
  SecondBucket totals_;
};

nlohmann::json ToJson(const SecondBucket& b);

// Applies `msgs` (time-ordered) with `workers` threads, partitioned by object
// id; returns wall seconds spent.  Outcome counts are added to `bucket`.
double ApplyUpdates(Engine& engine, const std::vector<UpdateMessage>& msgs, int workers,
                    SecondBucket* bucket);

}  // namespace shoal

#endif  // SHOAL_BENCH_H_
