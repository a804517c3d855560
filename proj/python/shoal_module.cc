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

// Python bindings.  Reports cross the boundary as JSON text and are decoded
// by the pure-Python wrapper.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include "shoal/archive.h"
#include "shoal/bench.h"
#include "shoal/config.h"
#include "shoal/engine.h"
#include "shoal/schooling.h"
#include "shoal/spatial.h"
#include "shoal/workload.h"

namespace py = pybind11;

namespace {

shoal::KeyValues ToKeyValues(const py::dict& d) {
  shoal::KeyValues kv;
  for (const auto& [k, v] : d) {
    std::string value;
    if (py::isinstance<py::bool_>(v)) {
      value = v.cast<bool>() ? "true" : "false";
    } else if (py::isinstance<py::list>(v) || py::isinstance<py::tuple>(v)) {
      for (const auto& item : v) {
        if (!value.empty()) value += ',';
        value += py::str(item).cast<std::string>();
      }
    } else {
      value = py::str(v).cast<std::string>();
    }
    kv[py::str(k).cast<std::string>()] = value;
  }
  return kv;
}

const char* KindName(shoal::UpdateKind kind) {
  switch (kind) {
    case shoal::UpdateKind::kLeaderUpdated:
      return "leader_updated";
    case shoal::UpdateKind::kShed:
      return "shed";
    case shoal::UpdateKind::kPromotedToLeader:
      return "promoted";
    case shoal::UpdateKind::kRegistered:
      return "registered";
    case shoal::UpdateKind::kRejected:
      return "rejected";
  }
  return "unknown";
}

class PyEngine {
 public:
  explicit PyEngine(const py::dict& config) {
    auto cfg = shoal::BuildSimulationConfig(ToKeyValues(config));
    engine_ = std::make_unique<shoal::Engine>(cfg.engine, cfg.workload.start);
  }

  std::string Update(shoal::ObjectId id, double t, double x, double y, double vx, double vy) {
    shoal::UpdateMessage m{id, {x, y}, {vx, vy}, shoal::FromSeconds(t)};
    return KindName(engine_->Update(m).kind);
  }

  std::vector<std::tuple<shoal::ObjectId, double, double, double>> Knn(double x, double y,
                                                                       std::size_t k,
                                                                       double t) {
    if (k == 0) throw py::value_error("k must be positive");
    std::vector<std::tuple<shoal::ObjectId, double, double, double>> out;
    for (const auto& n : engine_->Knn({{x, y}, k, shoal::FromSeconds(t)})) {
      out.emplace_back(n.id, n.loc.x, n.loc.y, n.dist);
    }
    return out;
  }

  std::optional<std::pair<double, double>> ModeledLocation(shoal::ObjectId id, double t) {
    auto p = engine_->tracker().ModeledLocation(id, shoal::FromSeconds(t));
    if (!p) return std::nullopt;
    return std::make_pair(p->x, p->y);
  }

  std::optional<shoal::ObjectId> LeaderOf(shoal::ObjectId id) {
    auto aff = engine_->tables().Affiliation(id);
    if (!aff) return std::nullopt;
    return aff->is_leader() ? id : aff->leader;
  }

  std::size_t ClusterTick(double t) { return engine_->ClusterTick(shoal::FromSeconds(t)); }
  std::size_t AgeTick(double t) { return engine_->AgeTick(shoal::FromSeconds(t)); }
  std::size_t leader_count() const { return engine_->tracker().leader_count(); }
  std::size_t object_count() const { return engine_->tracker().object_count(); }

  std::vector<std::tuple<double, double, double, double, double>> History(shoal::ObjectId id,
                                                                          double from,
                                                                          double to) {
    auto* a = engine_->archiver();
    if (!a) throw std::runtime_error("archiving is disabled");
    std::vector<std::tuple<double, double, double, double, double>> out;
    for (const auto& r : a->HistoryByObject(id, shoal::FromSeconds(from), shoal::FromSeconds(to))) {
      out.emplace_back(shoal::ToSeconds(r.t), r.loc.x, r.loc.y, r.vel.x, r.vel.y);
    }
    return out;
  }

  void Drain() { engine_->Drain(); }

 private:
  std::unique_ptr<shoal::Engine> engine_;
};

}  // namespace

PYBIND11_MODULE(_shoal, m) {
  m.doc() = "Moving-object location index with update shedding";

  py::register_exception<shoal::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<shoal::InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);

  m.def(
      "encode",
      [](double x, double y, int level, double map_size) {
        const shoal::SpatialGrid grid(map_size);
        if (!grid.InBounds({x, y})) throw py::value_error("point outside the map");
        const auto idx = grid.Encode({x, y}, level);
        return std::make_pair(idx.level(), idx.position());
      },
      py::arg("x"), py::arg("y"), py::arg("level"), py::arg("map_size") = 1000.0,
      "Hilbert cell (level, position) holding a point.");
  m.def(
      "decode",
      [](int level, std::uint64_t position, double map_size) {
        const shoal::SpatialGrid grid(map_size);
        const auto cell = grid.Decode(shoal::SpatialIndex(level, position));
        return std::make_tuple(cell.box.lo.x, cell.box.lo.y, cell.box.hi.x, cell.box.hi.y);
      },
      py::arg("level"), py::arg("position"), py::arg("map_size") = 1000.0,
      "Bounds (x0, y0, x1, y1) of a Hilbert cell.");
  m.def(
      "hexagon_bin",
      [](double vx, double vy, double delta_m) {
        if (!(delta_m > 0.0)) throw py::value_error("delta_m must be positive");
        const auto b = shoal::HexagonBin({vx, vy}, delta_m);
        return std::make_pair(b.q, b.r);
      },
      py::arg("vx"), py::arg("vy"), py::arg("delta_m"));
  m.def(
      "optimize_disks",
      [](const py::dict& params) {
        const auto cfg = shoal::BuildArchiveOptConfig(ToKeyValues(params));
        const auto r = shoal::OptimizeDisks(cfg.model, cfg.max_disks);
        py::dict d;
        d["disks"] = r.disks;
        d["buffer_bytes"] = r.buffer_bytes;
        d["write_utilization"] = r.write_utilization;
        d["read_resolution"] = r.read_resolution;
        d["flush_seconds"] = r.flush_seconds;
        d["fill_seconds"] = r.fill_seconds;
        d["constrained"] = r.constrained;
        d["unconstrained_disks"] = r.unconstrained_disks;
        return d;
      },
      py::arg("params"));
  m.def(
      "simulate_json",
      [](const py::dict& config) {
        const auto cfg = shoal::BuildSimulationConfig(ToKeyValues(config));
        shoal::SimulationReport report;
        {
          py::gil_scoped_release release;
          report = shoal::RunSimulation(cfg);
        }
        auto j = report.Summary();
        j["config"] = report.config;
        auto series = nlohmann::json::array();
        for (const auto& b : report.series) series.push_back(shoal::ToJson(b));
        j["series"] = series;
        return j.dump();
      },
      py::arg("config"));
  m.def(
      "workload_updates",
      [](const py::dict& config, double duration_s) {
        auto cfg = shoal::BuildSimulationConfig(ToKeyValues(config));
        shoal::Workload w(cfg.workload);
        std::vector<std::tuple<double, shoal::ObjectId, double, double, double, double>> out;
        for (const auto& u : w.Step(cfg.workload.start + shoal::FromSeconds(duration_s))) {
          out.emplace_back(shoal::ToSeconds(u.t), u.id, u.loc.x, u.loc.y, u.vel.x, u.vel.y);
        }
        return out;
      },
      py::arg("config"), py::arg("duration_s"),
      "Updates (t, id, x, y, vx, vy) generated by the road-network workload.");

  py::class_<PyEngine>(m, "Engine")
      .def(py::init<const py::dict&>(), py::arg("config") = py::dict())
      .def("update", &PyEngine::Update, py::arg("id"), py::arg("t"), py::arg("x"), py::arg("y"),
           py::arg("vx"), py::arg("vy"))
      .def("knn", &PyEngine::Knn, py::arg("x"), py::arg("y"), py::arg("k"), py::arg("t"))
      .def("modeled_location", &PyEngine::ModeledLocation, py::arg("id"), py::arg("t"))
      .def("leader_of", &PyEngine::LeaderOf, py::arg("id"))
      .def("cluster_tick", &PyEngine::ClusterTick, py::arg("t"))
      .def("age_tick", &PyEngine::AgeTick, py::arg("t"))
      .def("history", &PyEngine::History, py::arg("id"), py::arg("from_t"), py::arg("to_t"))
      .def("drain", &PyEngine::Drain)
      .def_property_readonly("leader_count", &PyEngine::leader_count)
      .def_property_readonly("object_count", &PyEngine::object_count);
}
