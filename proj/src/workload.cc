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

#include "shoal/workload.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace shoal {

namespace {

constexpr std::uint64_t kMapSalt = 0x6a09e667f3bcc908ULL;

void Require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("workload: ") + what);
}

}  // namespace

void WorkloadConfig::Validate() const {
  Require(agents > 0, "agents must be positive");
  Require(pedestrian_fraction >= 0.0 && pedestrian_fraction <= 1.0,
          "pedestrian_fraction must be in [0, 1]");
  Require(map_size > 0.0 && std::isfinite(map_size), "map_size must be positive");
  Require(blocks >= 1, "blocks must be at least 1");
  Require(road_half_width >= 0.0 && 2.0 * road_half_width < map_size / blocks,
          "road_half_width must leave room for buildings");
  Require(position_noise >= 0.0, "position_noise must be non-negative");
  Require(velocity_noise >= 0.0, "velocity_noise must be non-negative");
  Require(max_interval_s > 0.0, "max_interval_s must be positive");
  Require(enter_probability >= 0.0 && enter_probability <= 1.0,
          "enter_probability must be in [0, 1]");
  Require(exit_probability >= 0.0 && exit_probability <= 1.0,
          "exit_probability must be in [0, 1]");
  Require(pedestrian_speed_min >= 0.0 && pedestrian_speed_min <= pedestrian_speed_max,
          "pedestrian speed range is invalid");
  Require(car_speed_min > 0.0 && car_speed_min <= car_speed_max,
          "car speed range is invalid");
}

std::uint64_t RoadMap::SegmentKey(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

RoadMap RoadMap::Generate(const WorkloadConfig& cfg) {
  cfg.Validate();
  RoadMap map;
  map.map_size_ = cfg.map_size;
  map.blocks_ = cfg.blocks;
  std::mt19937_64 rng(cfg.seed ^ kMapSalt);
  std::uniform_int_distribution<int> side_dist(0, 3);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  const double pitch = map.pitch();
  const double w = cfg.road_half_width;
  const int stride = cfg.blocks + 1;
  auto node = [stride](int i, int j) { return j * stride + i; };

  for (int j = 0; j < cfg.blocks; ++j) {
    for (int i = 0; i < cfg.blocks; ++i) {
      Building b;
      b.box = {{i * pitch + w, j * pitch + w}, {(i + 1) * pitch - w, (j + 1) * pitch - w}};
      b.side = side_dist(rng);
      const double f = frac(rng);
      const double x = b.box.lo.x + f * b.box.width();
      const double y = b.box.lo.y + f * b.box.height();
      switch (b.side) {
        case 0:
          b.entrance = {x, b.box.lo.y};
          b.doorstep = {x, j * pitch};
          b.road_from = node(i, j);
          b.road_to = node(i + 1, j);
          b.road_offset = x - i * pitch;
          break;
        case 1:
          b.entrance = {b.box.hi.x, y};
          b.doorstep = {(i + 1) * pitch, y};
          b.road_from = node(i + 1, j);
          b.road_to = node(i + 1, j + 1);
          b.road_offset = y - j * pitch;
          break;
        case 2:
          b.entrance = {x, b.box.hi.y};
          b.doorstep = {x, (j + 1) * pitch};
          b.road_from = node(i, j + 1);
          b.road_to = node(i + 1, j + 1);
          b.road_offset = x - i * pitch;
          break;
        default:
          b.entrance = {b.box.lo.x, y};
          b.doorstep = {i * pitch, y};
          b.road_from = node(i, j);
          b.road_to = node(i, j + 1);
          b.road_offset = y - j * pitch;
          break;
      }
      map.doorsteps_[SegmentKey(b.road_from, b.road_to)].emplace_back(
          b.road_offset, static_cast<int>(map.buildings_.size()));
      map.buildings_.push_back(b);
    }
  }
  for (auto& [key, list] : map.doorsteps_) std::sort(list.begin(), list.end());
  return map;
}

Vec2 RoadMap::NodePosition(int node) const {
  const int stride = blocks_ + 1;
  return {(node % stride) * pitch(), (node / stride) * pitch()};
}

std::vector<int> RoadMap::NodeNeighbors(int node) const {
  const int stride = blocks_ + 1;
  const int i = node % stride;
  const int j = node / stride;
  std::vector<int> out;
  if (i > 0) out.push_back(node - 1);
  if (i < blocks_) out.push_back(node + 1);
  if (j > 0) out.push_back(node - stride);
  if (j < blocks_) out.push_back(node + stride);
  return out;
}

std::vector<std::pair<double, int>> RoadMap::Doorsteps(int a, int b) const {
  auto it = doorsteps_.find(SegmentKey(a, b));
  if (it == doorsteps_.end()) return {};
  if (a < b) return it->second;
  std::vector<std::pair<double, int>> out;
  for (auto r = it->second.rbegin(); r != it->second.rend(); ++r) {
    out.emplace_back(pitch() - r->first, r->second);
  }
  return out;
}

std::string RoadMap::Serialize() const {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "map %.17g blocks %d\n", map_size_, blocks_);
  out += buf;
  for (const auto& b : buildings_) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %d %.17g %.17g\n", b.box.lo.x,
                  b.box.lo.y, b.box.hi.x, b.box.hi.y, b.side, b.entrance.x, b.entrance.y);
    out += buf;
  }
  return out;
}

Workload::Workload(const WorkloadConfig& cfg)
    : cfg_(cfg), map_(RoadMap::Generate(cfg)), rng_(cfg.seed) {
  std::bernoulli_distribution is_pedestrian(cfg_.pedestrian_fraction);
  std::uniform_int_distribution<int> node_dist(0, map_.node_count() - 1);
  agents_.resize(cfg_.agents);
  for (std::size_t i = 0; i < cfg_.agents; ++i) {
    Agent& a = agents_[i];
    a.id = cfg_.first_id + i;
    a.kind = is_pedestrian(rng_) ? AgentKind::kPedestrian : AgentKind::kCar;
    a.from = node_dist(rng_);
    auto next = map_.NodeNeighbors(a.from);
    a.to = next[std::uniform_int_distribution<std::size_t>(0, next.size() - 1)(rng_)];
    a.offset = Uniform(0.0, map_.pitch());
    a.speed = DrawSpeed(a.kind);
    a.clock = cfg_.start;
    a.next_update = cfg_.start + DrawInterval();
    queue_.emplace(a.next_update, i);
  }
}

double Workload::Uniform(double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng_);
}

double Workload::DrawSpeed(AgentKind kind) {
  return kind == AgentKind::kPedestrian
             ? Uniform(cfg_.pedestrian_speed_min, cfg_.pedestrian_speed_max)
             : Uniform(cfg_.car_speed_min, cfg_.car_speed_max);
}

Timestamp Workload::DrawInterval() {
  const auto max_us = std::max<Timestamp>(1, FromSeconds(cfg_.max_interval_s));
  return std::uniform_int_distribution<Timestamp>(1, max_us)(rng_);
}

Vec2 Workload::TruePosition(const Agent& a) const {
  if (a.inside()) return a.inside_position;
  const Vec2 p = map_.NodePosition(a.from);
  const Vec2 q = map_.NodePosition(a.to);
  const Vec2 dir = (q - p) * (1.0 / map_.pitch());
  return p + dir * a.offset;
}

Vec2 Workload::TrueVelocity(const Agent& a) const {
  if (a.inside()) return {};
  const Vec2 p = map_.NodePosition(a.from);
  const Vec2 q = map_.NodePosition(a.to);
  return (q - p) * (a.speed / map_.pitch());
}

void Workload::Turn(Agent& a) {
  const int at = a.to;
  std::vector<int> options;
  for (int n : map_.NodeNeighbors(at)) {
    if (n != a.from) options.push_back(n);
  }
  // Reverse only at a dead end.
  if (options.empty()) options.push_back(a.from);
  const int choice = static_cast<int>(
      std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng_));
  if (log_crossroads_) {
    crossroads_.push_back({a.id, at, static_cast<int>(options.size()), choice});
  }
  a.from = at;
  a.to = options[static_cast<std::size_t>(choice)];
  a.offset = 0.0;
  a.speed = DrawSpeed(a.kind);
}

void Workload::Advance(Agent& a, Timestamp t) {
  double budget = SecondsBetween(a.clock, t);
  a.clock = t;
  if (a.inside()) return;
  const double len = map_.pitch();
  while (budget > 0.0 && a.speed > 0.0) {
    const double reach = a.offset + a.speed * budget;
    if (a.kind == AgentKind::kPedestrian && cfg_.enter_probability > 0.0) {
      for (const auto& [at, building] : map_.Doorsteps(a.from, a.to)) {
        if (at <= a.offset || at > std::min(reach, len)) continue;
        if (Uniform(0.0, 1.0) < cfg_.enter_probability) {
          a.building = building;
          const Box& box = map_.buildings()[static_cast<std::size_t>(building)].box;
          a.inside_position = {Uniform(box.lo.x, box.hi.x), Uniform(box.lo.y, box.hi.y)};
          return;
        }
      }
    }
    if (reach < len) {
      a.offset = reach;
      return;
    }
    budget -= (len - a.offset) / a.speed;
    Turn(a);
  }
}

void Workload::PlaceAtDoorstep(Agent& a) {
  const Building& b = map_.buildings()[static_cast<std::size_t>(a.building)];
  a.building = -1;
  a.speed = DrawSpeed(a.kind);
  if (Uniform(0.0, 1.0) < 0.5) {
    a.from = b.road_from;
    a.to = b.road_to;
    a.offset = b.road_offset;
  } else {
    a.from = b.road_to;
    a.to = b.road_from;
    a.offset = map_.pitch() - b.road_offset;
  }
}

UpdateMessage Workload::Next() {
  auto [t, index] = queue_.top();
  queue_.pop();
  Agent& a = agents_[index];
  Advance(a, t);
  if (a.inside()) {
    if (Uniform(0.0, 1.0) < cfg_.exit_probability) {
      PlaceAtDoorstep(a);
    } else {
      const Box& box = map_.buildings()[static_cast<std::size_t>(a.building)].box;
      a.inside_position = {Uniform(box.lo.x, box.hi.x), Uniform(box.lo.y, box.hi.y)};
    }
  }

  const Vec2 true_vel = TrueVelocity(a);
  Vec2 loc = TruePosition(a);
  Vec2 vel = true_vel;
  const double pn = cfg_.position_noise;
  const double vn = cfg_.velocity_noise;
  loc.x += Uniform(-pn, pn);
  loc.y += Uniform(-pn, pn);
  vel.x += Uniform(-vn, vn);
  vel.y += Uniform(-vn, vn);
  loc.x = std::clamp(loc.x, 0.0, cfg_.map_size);
  loc.y = std::clamp(loc.y, 0.0, cfg_.map_size);

  const double lo = a.kind == AgentKind::kPedestrian ? cfg_.pedestrian_speed_min
                                                     : cfg_.car_speed_min;
  const double hi = a.kind == AgentKind::kPedestrian ? cfg_.pedestrian_speed_max
                                                     : cfg_.car_speed_max;
  const double speed = Norm(vel);
  if (speed > hi) {
    vel = vel * (hi / speed);
  } else if (speed < lo) {
    Vec2 dir = speed > 0.0 ? vel * (1.0 / speed) : Vec2{1.0, 0.0};
    if (speed == 0.0 && Norm(true_vel) > 0.0) dir = true_vel * (1.0 / Norm(true_vel));
    vel = dir * lo;
  }

  a.next_update = t + DrawInterval();
  queue_.emplace(a.next_update, index);
  return {a.id, loc, vel, t};
}

std::vector<UpdateMessage> Workload::Step(Timestamp until) {
  std::vector<UpdateMessage> out;
  while (NextTime() < until) out.push_back(Next());
  return out;
}

}  // namespace shoal
