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

// shoal: simulations, benchmarks and the archive disk optimizer.
//
// Exit codes: 0 ok, 2 bad configuration or usage, 3 infeasible optimization,
// 1 anything else.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "shoal/archive.h"
#include "shoal/bench.h"
#include "shoal/config.h"
#include "shoal/engine.h"
#include "shoal/trace.h"
#include "shoal/workload.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  std::vector<std::string> sets;
};

shoal::KeyValues LoadKeyValues(const GlobalFlags& g) {
  shoal::KeyValues kv;
  if (!g.config.empty()) kv = shoal::LoadConfigFile(g.config);
  for (const auto& s : g.sets) shoal::ApplyOverride(&kv, s);
  if (g.seed) kv["seed"] = std::to_string(*g.seed);
  return kv;
}

// Output directory, created on demand; empty when --out was not given.
fs::path OutDir(const GlobalFlags& g) {
  if (g.out.empty()) return {};
  fs::path dir(g.out);
  fs::create_directories(dir);
  return dir;
}

std::ofstream OpenOut(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  return out;
}

int Simulate(const GlobalFlags& g) {
  const auto cfg = shoal::BuildSimulationConfig(LoadKeyValues(g));
  const auto report = shoal::RunSimulation(cfg);
  json summary = report.Summary();
  summary["config"] = report.config;
  if (auto dir = OutDir(g); !dir.empty()) {
    auto series = OpenOut(dir / "simulate.jsonl");
    for (const auto& b : report.series) series << shoal::ToJson(b).dump() << '\n';
    auto clustering = OpenOut(dir / "clustering.csv");
    clustering << "read_seconds,compute_seconds,write_seconds,leaders_before,leaders_after\n";
    for (const auto& m : report.clustering) {
      clustering << m.read_seconds << ',' << m.compute_seconds << ',' << m.write_seconds << ','
                 << m.leaders_before << ',' << m.leaders_after << '\n';
    }
    auto csv = OpenOut(dir / "simulate_summary.csv");
    csv << "agents,seconds,received,shed,shed_rate,mean_os_count,final_leaders,"
           "archived_records,blocked_appends,ingest_seconds,wall_seconds\n";
    csv << cfg.workload.agents << ',' << report.series.size() << ',' << report.received << ','
        << report.shed << ',' << report.shed_rate << ',' << report.mean_os_count << ','
        << report.final_leaders << ',' << report.archived_records << ','
        << report.blocked_appends << ',' << report.ingest_seconds << ','
        << report.wall_seconds << '\n';
  }
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int NNBench(const GlobalFlags& g) {
  const auto cfg = shoal::BuildNNBenchConfig(LoadKeyValues(g));
  const auto report = shoal::RunNNBench(cfg);
  json rows = json::array();
  for (const auto& r : report.rows) rows.push_back(shoal::ToJson(r));
  if (auto dir = OutDir(g); !dir.empty()) {
    auto csv = OpenOut(dir / "nnbench.csv");
    csv << "density,k,level,flag,mean_rows,mean_scans,mean_cost,mean_latency_us,"
           "mean_flag_probes\n";
    for (const auto& r : report.rows) {
      csv << r.density << ',' << r.k << ',' << r.level << ',' << (r.flag ? 1 : 0) << ','
          << r.mean_rows << ',' << r.mean_scans << ',' << r.mean_cost << ','
          << r.mean_latency_us << ',' << r.mean_flag_probes << '\n';
    }
  }
  json summary = {{"exactness_checked", report.exactness_checked},
                  {"exactness_mismatches", report.exactness_mismatches},
                  {"rows", rows}};
  json ratios = json::array();
  for (std::size_t density : cfg.densities) {
    for (std::size_t k : cfg.ks) {
      const auto& best = report.BestFixed(density, k);
      const auto& flag = report.Flag(density, k);
      ratios.push_back({{"density", density},
                        {"k", k},
                        {"best_fixed_level", best.level},
                        {"flag_level", flag.level},
                        {"flag_over_best_cost",
                         best.mean_cost > 0.0 ? flag.mean_cost / best.mean_cost : 0.0}});
    }
  }
  summary["flag_vs_best"] = ratios;
  std::cout << summary.dump(2) << '\n';
  return report.exactness_mismatches == 0 ? 0 : kExitError;
}

int ArchiveOpt(const GlobalFlags& g, bool sweep) {
  const auto cfg = shoal::BuildArchiveOptConfig(LoadKeyValues(g));
  const auto& p = cfg.model;
  if (sweep) {
    std::ostringstream csv;
    csv.precision(17);
    csv << "disks,write_utilization,read_resolution,objective,flush_seconds,fill_seconds,"
           "feasible\n";
    for (std::int64_t n = 1; n <= cfg.max_disks; ++n) {
      const double d = static_cast<double>(n);
      csv << n << ',' << shoal::WriteUtilization(p, d) << ',' << shoal::ReadResolution(p, d)
          << ',' << shoal::DiskObjective(p, n) << ',' << shoal::FlushSeconds(p, d) << ','
          << shoal::FillSeconds(p, d) << ',' << (shoal::DoubleBufferFeasible(p, n) ? 1 : 0)
          << '\n';
    }
    if (auto dir = OutDir(g); !dir.empty()) {
      OpenOut(dir / "archive_sweep.csv") << csv.str();
    } else {
      std::cout << csv.str();
    }
    return 0;
  }
  const auto r = shoal::OptimizeDisks(p, cfg.max_disks);
  json j = {{"disks", r.disks},
            {"buffer_bytes", r.buffer_bytes},
            {"write_utilization", r.write_utilization},
            {"read_resolution", r.read_resolution},
            {"flush_seconds", r.flush_seconds},
            {"fill_seconds", r.fill_seconds},
            {"constrained", r.constrained},
            {"unconstrained_disks", r.unconstrained_disks}};
  if (auto dir = OutDir(g); !dir.empty()) OpenOut(dir / "archive_opt.json") << j.dump(2) << '\n';
  std::cout << j.dump(2) << '\n';
  return 0;
}

int Scaling(const GlobalFlags& g) {
  const auto cfg = shoal::BuildScalingConfig(LoadKeyValues(g));
  const auto rows = shoal::RunScaling(cfg);
  json out = json::array();
  for (const auto& r : rows) out.push_back(shoal::ToJson(r));
  if (auto dir = OutDir(g); !dir.empty()) {
    auto csv = OpenOut(dir / "scaling.csv");
    csv << "workers,updates,seconds,throughput,speedup,failed\n";
    for (const auto& r : rows) {
      csv << r.workers << ',' << r.updates << ',' << r.seconds << ',' << r.throughput << ','
          << r.speedup << ',' << r.failed << '\n';
    }
  }
  std::cout << json{{"hardware_threads", std::thread::hardware_concurrency()}, {"rows", out}}
                   .dump(2)
            << '\n';
  return 0;
}

int TraceRecord(const GlobalFlags& g, const std::string& file) {
  const auto cfg = shoal::BuildSimulationConfig(LoadKeyValues(g));
  shoal::Workload workload(cfg.workload);
  shoal::TraceWriter writer(file);
  const shoal::Timestamp end = cfg.workload.start + shoal::FromSeconds(cfg.duration_s);
  while (cfg.duration_s > 0.0 && workload.NextTime() < end) writer.Write(workload.Next());
  writer.Close();
  std::cout << json{{"file", file}, {"records", writer.written()}}.dump(2) << '\n';
  return 0;
}

int TraceReplay(const GlobalFlags& g, const std::string& file) {
  const auto cfg = shoal::BuildSimulationConfig(LoadKeyValues(g));
  shoal::Engine engine(cfg.engine, cfg.workload.start);
  shoal::Replayer replayer(engine, cfg.aging);
  shoal::TraceReader reader(file);
  while (auto msg = reader.Next()) {
    try {
      replayer.Feed(*msg);
    } catch (const std::exception& e) {
      std::cerr << "line " << reader.line() << ": " << e.what() << '\n';
    }
  }
  engine.Drain();
  json j = shoal::ToJson(replayer.totals());
  j.erase("second");
  j["objects"] = engine.tracker().object_count();
  j["leaders"] = engine.tracker().leader_count();
  if (const auto* a = engine.archiver()) {
    const auto st = a->stats();
    j["archived_records"] = st.appended;
    j["pages_flushed"] = st.pages_flushed;
    j["blocked_appends"] = st.blocked_appends;
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moving-object indexing: simulations, benchmarks and archive sizing", "shoal"};
  app.require_subcommand(1);
  // Global flags may follow the subcommand.
  app.fallthrough();
  GlobalFlags g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides the config file)");
  app.add_option("--config", g.config, "key=value configuration file");
  app.add_option("--out", g.out, "Directory for report files");
  app.add_option("--set", g.sets, "Extra key=value assignment (repeatable)");

  auto* simulate = app.add_subcommand("simulate", "Run the road-network simulation");
  auto* nnbench = app.add_subcommand("nnbench", "Fixed NN levels versus adaptive level choice");
  auto* archive = app.add_subcommand("archive-opt", "Choose the archive disk count");
  bool sweep = false;
  archive->add_flag("--sweep", sweep, "Emit the whole objective curve as CSV");
  auto* scaling = app.add_subcommand("scaling", "Ingest throughput versus worker count");
  auto* trace = app.add_subcommand("trace", "Record or replay update traces");
  trace->require_subcommand(1);
  std::string record_file, replay_file;
  auto* record = trace->add_subcommand("record", "Write the workload's updates to a trace");
  record->add_option("file", record_file, "Trace file")->required();
  auto* replay = trace->add_subcommand("replay", "Feed a trace through a fresh engine");
  replay->add_option("file", replay_file, "Trace file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (*simulate) return Simulate(g);
    if (*nnbench) return NNBench(g);
    if (*archive) return ArchiveOpt(g, sweep);
    if (*scaling) return Scaling(g);
    if (*record) return TraceRecord(g, record_file);
    if (*replay) return TraceReplay(g, replay_file);
  } catch (const shoal::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const shoal::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const shoal::TraceError& e) {
    std::cerr << "trace error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
