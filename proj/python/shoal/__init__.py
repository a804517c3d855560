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
"""Moving-object location index with update shedding."""

import json

from ._shoal import (
    ConfigError,
    Engine,
    InfeasibleError,
    decode,
    encode,
    hexagon_bin,
    optimize_disks,
    workload_updates,
)
from ._shoal import simulate_json as _simulate_json

__all__ = [
    "ConfigError",
    "Engine",
    "InfeasibleError",
    "decode",
    "encode",
    "hexagon_bin",
    "optimize_disks",
    "simulate",
    "workload_updates",
]


def simulate(config=None):
    """Runs a simulation; `config` takes the same keys as the config file."""
    return json.loads(_simulate_json(dict(config or {})))
