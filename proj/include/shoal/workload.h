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

// Synthetic city mobility: a square grid of rectangular buildings separated
// by roads.  Pedestrians and cars drive along road centerlines, turn at
// crossroads, and (pedestrians only) wander into and out of buildings.
// Every agent reports a noisy position and velocity at random intervals.

#ifndef SHOAL_WORKLOAD_H_
#define SHOAL_WORKLOAD_H_

#include <cstdint>
#include <queue>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "shoal/geometry.h"
#include "shoal/schooling.h"

namespace shoal {

struct WorkloadConfig {
  std::uint64_t seed = 1;
  std::size_t agents = 1000;
  double pedestrian_fraction = 0.5;
  double map_size = 1000.0;
  int blocks = 20;                 // per side
  double road_half_width = 1.0;
  double position_noise = 0.5;     // uniform +/- units
  double velocity_noise = 0.05;    // uniform +/- units / second, per axis
  double max_interval_s = 5.0;     // update interval ~ U(0, max]
  double enter_probability = 0.05;
  double exit_probability = 0.05;
  double pedestrian_speed_min = 0.0;
  double pedestrian_speed_max = 1.0;
  double car_speed_min = 1.0;
  double car_speed_max = 2.0;
  ObjectId first_id = 0;
  Timestamp start = 0;

  // Throws std::invalid_argument naming the offending field.
  void Validate() const;
};

struct Building {
  Box box;
  Vec2 entrance;  // on the perimeter
  Vec2 doorstep;  // entrance projected onto the road centerline
  int side = 0;   // 0 bottom, 1 right, 2 top, 3 left
  // Road segment holding the doorstep, directed from the lower node id.
  int road_from = 0;
  int road_to = 0;
  double road_offset = 0.0;
};

class RoadMap {
 public:
  static RoadMap Generate(const WorkloadConfig& cfg);

  double map_size() const { return map_size_; }
  int blocks() const { return blocks_; }
  double pitch() const { return map_size_ / blocks_; }
  int node_count() const { return (blocks_ + 1) * (blocks_ + 1); }
  Vec2 NodePosition(int node) const;
  std::vector<int> NodeNeighbors(int node) const;
  const std::vector<Building>& buildings() const { return buildings_; }

  // Pedestrian entry points along the segment a-b: (distance from a,
  // building index), ordered by distance.
  std::vector<std::pair<double, int>> Doorsteps(int a, int b) const;

  // Canonical text form, for determinism checks.
  std::string Serialize() const;

 private:
  static std::uint64_t SegmentKey(int a, int b);

  double map_size_ = 0.0;
  int blocks_ = 0;
  std::vector<Building> buildings_;
  std::unordered_map<std::uint64_t, std::vector<std::pair<double, int>>> doorsteps_;
};

enum class AgentKind { kPedestrian, kCar };

struct Agent {
  ObjectId id = 0;
  AgentKind kind = AgentKind::kPedestrian;
  // On a road: moving from node `from` to node `to`, `offset` units past
  // `from`.
  int from = 0;
  int to = 0;
  double offset = 0.0;
  double speed = 0.0;
  int building = -1;  // >= 0 while inside
  Vec2 inside_position;
  Timestamp clock = 0;  // motion is resolved up to this time
  Timestamp next_update = 0;

  bool inside() const { return building >= 0; }
};

struct CrossroadEvent {
  ObjectId id = 0;
  int node = 0;
  int options = 0;
  int choice = 0;  // in [0, options)
};

class Workload {
 public:
  explicit Workload(const WorkloadConfig& cfg);

  const WorkloadConfig& config() const { return cfg_; }
  const RoadMap& map() const { return map_; }
  const std::vector<Agent>& agents() const { return agents_; }

  // Time of the next pending update.
  Timestamp NextTime() const { return queue_.top().first; }
  // Emits the next update in (time, id) order.
  UpdateMessage Next();
  // Every update with t < until, in order.
  std::vector<UpdateMessage> Step(Timestamp until);

  // Noise-free position and velocity of an agent as of its clock.
  Vec2 TruePosition(const Agent& a) const;
  Vec2 TrueVelocity(const Agent& a) const;

  void set_log_crossroads(bool on) { log_crossroads_ = on; }
  const std::vector<CrossroadEvent>& crossroad_log() const { return crossroads_; }

 private:
  using QueueEntry = std::pair<Timestamp, std::size_t>;

  double Uniform(double lo, double hi);
  double DrawSpeed(AgentKind kind);
  Timestamp DrawInterval();
  void Advance(Agent& a, Timestamp t);
  void Turn(Agent& a);
  void PlaceAtDoorstep(Agent& a);

  WorkloadConfig cfg_;
  RoadMap map_;
  std::mt19937_64 rng_;
  std::vector<Agent> agents_;
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> queue_;
  bool log_crossroads_ = false;
  std::vector<CrossroadEvent> crossroads_;
};

}  // namespace shoal

#endif  // SHOAL_WORKLOAD_H_
