# Copyright 2026 The Shoal Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS-IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
#

import math

import pytest

import shoal


def test_encode_decode():
    level, pos = shoal.encode(123.0, 456.0, 5)
    assert level == 5
    x0, y0, x1, y1 = shoal.decode(level, pos)
    assert x0 <= 123.0 <= x1 and y0 <= 456.0 <= y1
    assert math.isclose(x1 - x0, 1000.0 / 32)
    with pytest.raises(ValueError):
        shoal.encode(-1.0, 0.0, 3)


def test_hexagon_bin():
    assert shoal.hexagon_bin(0.0, 0.0, 4.0) == (0, 0)
    assert shoal.hexagon_bin(0.1, 0.1, 4.0) == (0, 0)
    assert shoal.hexagon_bin(10.0, 0.0, 4.0) != (0, 0)


def test_optimize_disks():
    r = shoal.optimize_disks({"record_bytes": 100, "objects": 1e6, "disk_rate": 1e8,
                              "update_rate": 1e6, "k": 1e4})
    assert r["disks"] == 100
    assert math.isclose(r["write_utilization"], 1.0)
    with pytest.raises(shoal.InfeasibleError):
        shoal.optimize_disks({"objects": 1000, "update_rate": 1e6})
    with pytest.raises(shoal.ConfigError):
        shoal.optimize_disks({"no_such_key": 1})


def test_engine_school_and_knn():
    e = shoal.Engine({"cluster_interval_s": "inf", "archive": False})
    assert e.update(1, 0.0, 100.0, 100.0, 1.0, 0.0) == "registered"
    assert e.update(2, 0.0, 110.0, 100.0, 1.0, 0.0) == "registered"
    e.cluster_tick(0.0)
    assert e.leader_count == 2
    assert e.object_count == 2
    assert e.update(1, 1.0, 101.0, 100.0, 1.0, 0.0) == "leader_updated"
    assert e.update(1, 0.5, 101.0, 100.0, 1.0, 0.0) == "rejected"
    hits = e.knn(100.0, 100.0, 1, 1.0)
    assert [h[0] for h in hits] == [1]
    assert e.leader_of(2) == 2
    assert e.modeled_location(3, 0.0) is None
    with pytest.raises(ValueError):
        e.knn(1.0, 1.0, 0, 0.0)


def test_simulate_and_workload():
    report = shoal.simulate({"agents": 100, "duration_s": 10, "seed": 5})
    assert len(report["series"]) == 10
    assert 0.0 <= report["shed_rate"] <= 1.0
    again = shoal.simulate({"agents": 100, "duration_s": 10, "seed": 5})
    assert again["received"] == report["received"]
    ups = shoal.workload_updates({"agents": 20}, 5.0)
    assert ups and all(0.0 <= u[0] < 5.0 for u in ups)
    assert [u[0] for u in ups] == sorted(u[0] for u in ups)
    with pytest.raises(shoal.ConfigError):
        shoal.simulate({"agents": -3})
