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

#include "shoal/engine.h"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace shoal {

EngineConfig EngineConfig::Defaults(int spatial_level) {
  EngineConfig c;
  c.spatial_level = spatial_level;
  c.school.clustering_level = std::max(0, spatial_level - 4);
  c.flag.min_level = std::min(1, spatial_level);
  c.flag.max_level = spatial_level;
  return c;
}

void EngineConfig::Validate() const {
  if (!(map_size > 0.0)) throw std::invalid_argument("map_size must be positive");
  if (spatial_level < 1 || spatial_level > kMaxLevel) {
    throw std::invalid_argument("spatial_level must be in [1, 30]");
  }
  school.Validate(spatial_level);
  if (flag.max_level > spatial_level || flag.min_level < 0 ||
      flag.min_level > flag.max_level) {
    throw std::invalid_argument("NN level bounds must satisfy 0 <= min <= max <= spatial_level");
  }
  if (!(flag.sigma >= 1.0)) throw std::invalid_argument("sigma must be at least 1");
}

Engine::Engine(EngineConfig config, Timestamp start)
    : config_(std::move(config)), grid_(config_.map_size) {
  config_.Validate();
  if (config_.archive) {
    archiver_ = std::make_unique<Archiver>(config_.archive_options, grid_);
  }
  store_ = std::make_unique<Store>(config_.store);
  if (archiver_) {
    Archiver* archiver = archiver_.get();
    store_->SetArchiveSink([archiver](TableId table, const RowKey& row, const Cell& cell) {
      if (table != TableId::kLocation || cell.family != kLocFamily) return;
      const std::string& key = row.bytes();
      ObjectId id = 0;
      auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), id);
      if (ec != std::errc() || ptr != key.data() + key.size()) return;
      archiver->Append(id, DecodeLocation(cell.value, cell.timestamp));
    });
  }
  tables_ = std::make_unique<ObjectTables>(*store_, grid_, config_.spatial_level);
  tracker_ = std::make_unique<SchoolTracker>(*tables_, config_.school, archiver_.get());
  nn_ = std::make_unique<NearestNeighborSearch>(*tracker_, config_.flag);
  scheduler_ = std::make_unique<ClusteringScheduler>(*tracker_, start);
}

Engine::~Engine() {
  try {
    Drain();
  } catch (...) {
    // Surfaced to callers that drain explicitly.
  }
}

void Engine::Drain() {
  if (drained_) return;
  drained_ = true;
  if (!archiver_) return;
  store_->EvictAll(TableId::kLocation);
  archiver_->Drain();
}

}  // namespace shoal
