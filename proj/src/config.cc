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

#include "shoal/config.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <type_traits>

namespace shoal {

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "size_t reads share the u64 path");

namespace {

std::string_view Trim(std::string_view s) {
  const char* ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> SplitList(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(Trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

template <typename T>
T ParseNumber(const std::string& key, std::string_view text) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError("bad value for " + key + ": '" + std::string(text) + "'");
  }
  return value;
}

// Runs a Validate() and reports its complaint as a configuration error.
template <typename F>
void Checked(F&& validate) {
  try {
    validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

void ReadEngine(ConfigReader& r, EngineConfig* e) {
  int ls = e->spatial_level;
  r.Get("spatial_level", &ls);
  if (ls != e->spatial_level) {
    if (ls < 1 || ls > kMaxLevel) throw ConfigError("spatial_level must be in [1, 30]");
    *e = EngineConfig::Defaults(ls);
  }
  r.Get("map_size", &e->map_size);
  r.Get("clustering_level", &e->school.clustering_level);
  r.Get("epsilon", &e->school.epsilon);
  r.Get("delta_m", &e->school.delta_m);
  r.GetSeconds("cluster_interval_s", &e->school.cluster_interval);
  r.Get("sigma", &e->flag.sigma);
  r.Get("nn_min_level", &e->flag.min_level);
  r.Get("nn_max_level", &e->flag.max_level);
  r.GetSeconds("nn_cache_ttl_s", &e->flag.cache_ttl);
  r.Get("nn_max_step", &e->flag.max_step);

  std::string data_dir;
  r.Get("data_dir", &data_dir);
  if (!data_dir.empty()) e->store.data_dir = data_dir;
  auto& loc = e->store.tables[static_cast<int>(TableId::kLocation)];
  for (std::size_t tier = 0; tier < loc.tier_ttl.size(); ++tier) {
    r.GetSeconds("location_ttl" + std::to_string(tier) + "_s", &loc.tier_ttl[tier]);
  }

  r.Get("archive", &e->archive);
  auto& a = e->archive_options;
  std::string archive_dir;
  r.Get("archive_dir", &archive_dir);
  if (!archive_dir.empty()) a.dir = archive_dir;
  r.Get("disks", &a.disks);
  r.Get("placement_level", &a.placement_level);
  r.Get("page_records", &a.page_records);
  r.Get("disk_rotation_s", &a.model.rotation_s);
  r.Get("disk_seek_s", &a.model.seek_s);
  r.Get("disk_rate", &a.model.disk_rate);
  r.Get("record_bytes", &a.model.record_bytes);
}

void ReadWorkload(ConfigReader& r, WorkloadConfig* w) {
  r.Get("seed", &w->seed);
  r.Get("agents", &w->agents);
  r.Get("pedestrian_fraction", &w->pedestrian_fraction);
  r.Get("blocks", &w->blocks);
  r.Get("road_half_width", &w->road_half_width);
  r.Get("position_noise", &w->position_noise);
  r.Get("velocity_noise", &w->velocity_noise);
  r.Get("max_interval_s", &w->max_interval_s);
  r.Get("enter_probability", &w->enter_probability);
  r.Get("exit_probability", &w->exit_probability);
  r.Get("pedestrian_speed_min", &w->pedestrian_speed_min);
  r.Get("pedestrian_speed_max", &w->pedestrian_speed_max);
  r.Get("car_speed_min", &w->car_speed_min);
  r.Get("car_speed_max", &w->car_speed_max);
}

void ReadSimulation(ConfigReader& r, SimulationConfig* c) {
  ReadEngine(r, &c->engine);
  ReadWorkload(r, &c->workload);
  c->workload.map_size = c->engine.map_size;
  // The archive model follows the workload unless told otherwise: one record
  // per object per buffer, arriving at the mean update rate.
  auto& m = c->engine.archive_options.model;
  m.objects = static_cast<double>(c->workload.agents);
  m.update_rate = static_cast<double>(c->workload.agents) / (c->workload.max_interval_s / 2.0);
  r.Get("archive_objects", &m.objects);
  r.Get("archive_update_rate", &m.update_rate);
  r.Get("duration_s", &c->duration_s);
  r.Get("workers", &c->workers);
  r.Get("queries_per_second", &c->queries_per_second);
  r.Get("query_k", &c->query_k);
  r.Get("query_timeout_ms", &c->query_timeout_ms);
  r.Get("aging", &c->aging);
}

}  // namespace

KeyValues ParseConfigText(std::string_view text, std::string_view origin) {
  KeyValues kv;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = std::string(origin) + ":" + std::to_string(line_no);
    if (eq == std::string_view::npos) {
      throw ConfigError(where + ": expected key=value");
    }
    const std::string_view key = Trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    kv[std::string(key)] = std::string(Trim(line.substr(eq + 1)));
  }
  return kv;
}

KeyValues LoadConfigFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseConfigText(buf.str(), path.string());
}

void ApplyOverride(KeyValues* kv, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || Trim(assignment.substr(0, eq)).empty()) {
    throw ConfigError("override must look like key=value: '" + std::string(assignment) + "'");
  }
  (*kv)[std::string(Trim(assignment.substr(0, eq)))] =
      std::string(Trim(assignment.substr(eq + 1)));
}

const std::string* ConfigReader::Find(const std::string& key) {
  auto it = kv_.find(key);
  if (it == kv_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

void ConfigReader::Get(const std::string& key, double* out) {
  if (const auto* v = Find(key)) {
    const double d = ParseNumber<double>(key, *v);
    if (std::isnan(d)) throw ConfigError(key + " must be a number");
    *out = d;
  }
}

void ConfigReader::Get(const std::string& key, int* out) {
  if (const auto* v = Find(key)) *out = ParseNumber<int>(key, *v);
}

void ConfigReader::Get(const std::string& key, std::uint64_t* out) {
  if (const auto* v = Find(key)) *out = ParseNumber<std::uint64_t>(key, *v);
}

void ConfigReader::Get(const std::string& key, bool* out) {
  const auto* v = Find(key);
  if (!v) return;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") {
    *out = true;
  } else if (*v == "false" || *v == "0" || *v == "no" || *v == "off") {
    *out = false;
  } else {
    throw ConfigError("bad boolean for " + key + ": '" + *v + "'");
  }
}

void ConfigReader::Get(const std::string& key, std::string* out) {
  if (const auto* v = Find(key)) *out = *v;
}

void ConfigReader::Get(const std::string& key, std::vector<std::size_t>* out) {
  if (const auto* v = Find(key)) {
    out->clear();
    for (auto item : SplitList(*v)) out->push_back(ParseNumber<std::size_t>(key, item));
  }
}

void ConfigReader::Get(const std::string& key, std::vector<int>* out) {
  if (const auto* v = Find(key)) {
    out->clear();
    for (auto item : SplitList(*v)) out->push_back(ParseNumber<int>(key, item));
  }
}

void ConfigReader::GetSeconds(const std::string& key, Timestamp* out) {
  const auto* v = Find(key);
  if (!v) return;
  if (*v == "inf") {
    *out = kInfiniteTime;
    return;
  }
  const double s = ParseNumber<double>(key, *v);
  if (!(s >= 0.0) || !std::isfinite(s) || s > 9e12) {
    throw ConfigError(key + " must be a non-negative number of seconds or inf");
  }
  *out = FromSeconds(s);
}

void ConfigReader::RejectUnused() const {
  std::string unknown;
  for (const auto& [key, value] : kv_) {
    if (used_.count(key)) continue;
    if (!unknown.empty()) unknown += ", ";
    unknown += key;
  }
  if (!unknown.empty()) throw ConfigError("unknown config keys: " + unknown);
}

SimulationConfig BuildSimulationConfig(const KeyValues& kv) {
  ConfigReader r(kv);
  SimulationConfig c;
  ReadSimulation(r, &c);
  r.RejectUnused();
  Checked([&] { c.Validate(); });
  return c;
}

NNBenchConfig BuildNNBenchConfig(const KeyValues& kv) {
  ConfigReader r(kv);
  NNBenchConfig c;
  r.Get("seed", &c.seed);
  r.Get("densities", &c.densities);
  r.Get("map_size", &c.map_size);
  r.Get("region", &c.region);
  r.Get("spatial_level", &c.spatial_level);
  r.Get("fixed_levels", &c.fixed_levels);
  r.Get("ks", &c.ks);
  r.Get("queries", &c.queries);
  r.Get("sigma", &c.sigma);
  r.Get("exactness_queries", &c.exactness_queries);
  r.RejectUnused();
  Checked([&] { c.Validate(); });
  return c;
}

ScalingConfig BuildScalingConfig(const KeyValues& kv) {
  ConfigReader r(kv);
  ScalingConfig c;
  c.base.duration_s = c.duration_s;
  ReadSimulation(r, &c.base);
  c.duration_s = c.base.duration_s;
  r.Get("worker_counts", &c.worker_counts);
  r.RejectUnused();
  if (c.worker_counts.empty()) throw ConfigError("worker_counts must not be empty");
  for (int w : c.worker_counts) {
    if (w < 1) throw ConfigError("worker counts must be positive");
  }
  if (!(c.duration_s > 0.0)) throw ConfigError("duration_s must be positive");
  Checked([&] { c.base.Validate(); });
  return c;
}

ArchiveOptConfig BuildArchiveOptConfig(const KeyValues& kv) {
  ConfigReader r(kv);
  ArchiveOptConfig c;
  auto& m = c.model;
  r.Get("rotation_s", &m.rotation_s);
  r.Get("seek_s", &m.seek_s);
  r.Get("disk_rate", &m.disk_rate);
  r.Get("k", &m.k);
  r.Get("record_bytes", &m.record_bytes);
  r.Get("objects", &m.objects);
  r.Get("update_rate", &m.update_rate);
  int max_disks = static_cast<int>(c.max_disks);
  r.Get("max_disks", &max_disks);
  c.max_disks = max_disks;
  r.RejectUnused();
  if (c.max_disks < 1) throw ConfigError("max_disks must be at least 1");
  Checked([&] { m.Validate(); });
  return c;
}

}  // namespace shoal
