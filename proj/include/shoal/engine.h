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

// One tracking engine: store, tables, schools, clustering, nearest-neighbor
// search and (optionally) the archiver, wired together.  Aged and evicted
// Location cells flow from the store into the archiver; school membership
// changes flow from the tracker into the archiver's event log.

#ifndef SHOAL_ENGINE_H_
#define SHOAL_ENGINE_H_

#include <memory>
#include <optional>
#include <vector>

#include "shoal/archive.h"
#include "shoal/nn.h"
#include "shoal/schooling.h"
#include "shoal/spatial.h"
#include "shoal/store.h"
#include "shoal/tables.h"

namespace shoal {

struct EngineConfig {
  double map_size = 1000.0;
  // 15.6-unit cells on the default map; the clustering cells four levels up
  // are 250 units wide.
  int spatial_level = 6;
  SchoolConfig school;
  FlagConfig flag;
  StoreOptions store = StoreOptions::Default();
  bool archive = true;
  ArchiveOptions archive_options;

  // Defaults tied to spatial_level: clustering level l_s - 4 (at least 0) and
  // FLAG bounds [1, l_s].
  static EngineConfig Defaults(int spatial_level = 6);
  void Validate() const;
};

class Engine {
 public:
  explicit Engine(EngineConfig config, Timestamp start = 0);
  ~Engine();

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  UpdateOutcome Update(const UpdateMessage& msg) { return tracker_->ProcessUpdate(msg); }
  std::vector<Neighbor> Knn(const NNQuery& q, SearchStats* stats = nullptr) {
    return nn_->Knn(q, stats);
  }
  std::size_t ClusterTick(Timestamp now, std::vector<MergeStats>* stats = nullptr) {
    return scheduler_->Tick(now, stats);
  }
  std::size_t AgeTick(Timestamp now) { return store_->AgeTick(now); }

  // Moves every remaining Location cell into the archive and waits for all
  // flushes.  Live Location rows are gone afterwards; call at shutdown.
  void Drain();

  const EngineConfig& config() const { return config_; }
  Store& store() { return *store_; }
  ObjectTables& tables() { return *tables_; }
  SchoolTracker& tracker() { return *tracker_; }
  NearestNeighborSearch& nn() { return *nn_; }
  ClusteringScheduler& scheduler() { return *scheduler_; }
  // Null when archiving is disabled.
  Archiver* archiver() { return archiver_.get(); }
  const SpatialGrid& grid() const { return grid_; }

 private:
  EngineConfig config_;
  SpatialGrid grid_;
  std::unique_ptr<Archiver> archiver_;
  std::unique_ptr<Store> store_;
  std::unique_ptr<ObjectTables> tables_;
  std::unique_ptr<SchoolTracker> tracker_;
  std::unique_ptr<NearestNeighborSearch> nn_;
  std::unique_ptr<ClusteringScheduler> scheduler_;
  bool drained_ = false;
};

}  // namespace shoal

#endif  // SHOAL_ENGINE_H_
