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

// Flat key=value configuration.  One assignment per line, '#' starts a
// comment, later assignments win.  Lists are comma separated.  Every builder
// rejects keys it does not know, so typos fail loudly.

#ifndef SHOAL_CONFIG_H_
#define SHOAL_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "shoal/archive.h"
#include "shoal/bench.h"

namespace shoal {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using KeyValues = std::map<std::string, std::string>;

// `origin` names the source in error messages.
KeyValues ParseConfigText(std::string_view text, std::string_view origin = "config");
KeyValues LoadConfigFile(const std::filesystem::path& path);
// Applies one "key=value" assignment.
void ApplyOverride(KeyValues* kv, std::string_view assignment);

// Typed, tracked access to a KeyValues map.
class ConfigReader {
 public:
  explicit ConfigReader(const KeyValues& kv) : kv_(kv) {}

  bool Has(const std::string& key) const { return kv_.count(key) > 0; }
  // Each Get leaves *out untouched when the key is absent.
  void Get(const std::string& key, double* out);
  void Get(const std::string& key, int* out);
  void Get(const std::string& key, std::uint64_t* out);  // also size_t
  void Get(const std::string& key, bool* out);
  void Get(const std::string& key, std::string* out);
  void Get(const std::string& key, std::vector<std::size_t>* out);
  void Get(const std::string& key, std::vector<int>* out);
  // Seconds (or "inf") into a microsecond timestamp.
  void GetSeconds(const std::string& key, Timestamp* out);

  // Throws ConfigError naming every key that was never read.
  void RejectUnused() const;

 private:
  const std::string* Find(const std::string& key);

  const KeyValues& kv_;
  std::set<std::string> used_;
};

SimulationConfig BuildSimulationConfig(const KeyValues& kv);
NNBenchConfig BuildNNBenchConfig(const KeyValues& kv);
ScalingConfig BuildScalingConfig(const KeyValues& kv);

struct ArchiveOptConfig {
  DiskModelParams model;
  std::int64_t max_disks = 1000;
};
ArchiveOptConfig BuildArchiveOptConfig(const KeyValues& kv);

}  // namespace shoal

#endif  // SHOAL_CONFIG_H_
