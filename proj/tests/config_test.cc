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


#include "doctest.h"
#include "shoal/config.h"

namespace shoal {
namespace {

TEST_CASE("parsing: comments, blanks, later assignments win") {
  const KeyValues kv = ParseConfigText(
      "# a comment\n"
      "\n"
      "agents = 50   # trailing comment\n"
      "epsilon=4\n"
      "agents=60\n");
  CHECK(kv.size() == 2);
  CHECK(kv.at("agents") == "60");
  CHECK(kv.at("epsilon") == "4");
  CHECK_THROWS_WITH_AS(ParseConfigText("a=1\nnot an assignment\n", "f.cfg"),
                       doctest::Contains("f.cfg:2"), ConfigError);
  CHECK_THROWS_AS(ParseConfigText("=3\n"), ConfigError);

  KeyValues over = kv;
  ApplyOverride(&over, "epsilon=9");
  CHECK(over.at("epsilon") == "9");
  CHECK_THROWS_AS(ApplyOverride(&over, "epsilon"), ConfigError);
  CHECK_THROWS_AS(LoadConfigFile("/nonexistent/shoal.cfg"), ConfigError);
}

TEST_CASE("typed reads") {
  const KeyValues kv = {{"d", "2.5"}, {"i", "-3"}, {"u", "7"},      {"b", "yes"},
                        {"s", " x "}, {"l", "1, 2,3"}, {"t", "inf"}, {"t2", "1.5"}};
  ConfigReader r(kv);
  double d = 0;
  int i = 0;
  std::uint64_t u = 0;
  bool b = false;
  std::string s;
  std::vector<std::size_t> l;
  Timestamp t = 0, t2 = 0;
  r.Get("d", &d);
  r.Get("i", &i);
  r.Get("u", &u);
  r.Get("b", &b);
  r.Get("s", &s);
  r.Get("l", &l);
  r.GetSeconds("t", &t);
  r.GetSeconds("t2", &t2);
  CHECK(d == 2.5);
  CHECK(i == -3);
  CHECK(u == 7);
  CHECK(b);
  CHECK(l == std::vector<std::size_t>{1, 2, 3});
  CHECK(t == kInfiniteTime);
  CHECK(t2 == 1'500'000);
  int missing = 42;
  r.Get("missing", &missing);
  CHECK(missing == 42);
  CHECK_NOTHROW(r.RejectUnused());

  const KeyValues bad = {{"i", "3x"}, {"u", "-1"}, {"b", "maybe"}};
  ConfigReader rb(bad);
  CHECK_THROWS_AS(rb.Get("i", &i), ConfigError);
  CHECK_THROWS_AS(rb.Get("u", &u), ConfigError);
  CHECK_THROWS_AS(rb.Get("b", &b), ConfigError);
}

TEST_CASE("simulation builder") {
  SimulationConfig c = BuildSimulationConfig({{"agents", "200"},
                                              {"spatial_level", "8"},
                                              {"epsilon", "3"},
                                              {"max_interval_s", "4"},
                                              {"archive", "false"}});
  CHECK(c.workload.agents == 200);
  CHECK(c.engine.spatial_level == 8);
  CHECK(c.engine.school.clustering_level == 4);
  CHECK(c.engine.school.epsilon == 3);
  CHECK_FALSE(c.engine.archive);
  CHECK(c.engine.archive_options.model.objects == 200);
  CHECK(c.engine.archive_options.model.update_rate == doctest::Approx(100));

  CHECK_THROWS_WITH_AS(BuildSimulationConfig({{"agnets", "5"}}), doctest::Contains("agnets"),
                       ConfigError);
  CHECK_THROWS_AS(BuildSimulationConfig({{"epsilon", "-1"}}), ConfigError);
  CHECK_THROWS_AS(BuildSimulationConfig({{"spatial_level", "40"}}), ConfigError);
  CHECK_THROWS_AS(BuildSimulationConfig({{"clustering_level", "9"}}), ConfigError);
  CHECK_THROWS_AS(BuildSimulationConfig({{"duration_s", "-1"}}), ConfigError);
}

TEST_CASE("other builders") {
  const NNBenchConfig nb = BuildNNBenchConfig({{"densities", "10,20"}, {"ks", "1,5"}});
  CHECK(nb.densities == std::vector<std::size_t>{10, 20});
  CHECK(nb.ks == std::vector<std::size_t>{1, 5});
  CHECK_THROWS_AS(BuildNNBenchConfig({{"agents", "5"}}), ConfigError);

  const ScalingConfig sc = BuildScalingConfig({{"worker_counts", "1,3"}, {"agents", "40"}});
  CHECK(sc.worker_counts == std::vector<int>{1, 3});
  CHECK(sc.base.workload.agents == 40);

  const ArchiveOptConfig ac =
      BuildArchiveOptConfig({{"objects", "1000000"}, {"record_bytes", "100"}, {"max_disks", "50"}});
  CHECK(ac.model.objects == 1e6);
  CHECK(ac.max_disks == 50);
  CHECK_THROWS_AS(BuildArchiveOptConfig({{"disk_rate", "0"}}), ConfigError);
}

}  // namespace
}  // namespace shoal
