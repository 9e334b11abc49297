# Copyright 2026 The rcabench Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Python interface to the rcabench campaign engine.

Topologies are given as a reference name ("chain3", "trainticket50"), a
path to a topology file, or a dict. Configs are dicts or paths to JSON
files.
"""

import json
import os

from rcabench import _core
from rcabench._core import ConfigError, EmptyInputError, Error, StorageError

__all__ = [
    "ConfigError", "EmptyInputError", "Error", "StorageError", "avg_k",
    "count_paths", "evaluate", "generate", "mrr", "plan_campaign",
    "reference_topology", "run_case", "simple_rca", "space_cardinality",
    "stats", "top_k", "two_proportion_z", "validate", "validate_case",
]

two_proportion_z = _core.two_proportion_z
top_k = _core.top_k
avg_k = _core.avg_k
mrr = _core.mrr


def _topology(topology):
    if isinstance(topology, str) and os.path.exists(topology):
        topology = os.path.abspath(topology)
    return json.dumps(topology)


def _config(config):
    """Returns (json text, base dir) for a config dict or file path."""
    if isinstance(config, (str, os.PathLike)):
        path = os.path.abspath(config)
        with open(path, encoding="utf-8") as f:
            return f.read(), os.path.dirname(path)
    return json.dumps(config), os.getcwd()


def reference_topology(name):
    return json.loads(_core.reference_topology(name))


def count_paths(topology, workflow):
    return _core.count_paths(_topology(topology), workflow)


def space_cardinality(topology):
    """Exact fault-space size as Python ints, overall and per fault type."""
    doc = json.loads(_core.space_cardinality(_topology(topology)))
    return int(doc["total"]), {k: int(v) for k, v in doc["per_type"].items()}


def plan_campaign(topology, plan):
    return json.loads(_core.plan_campaign(_topology(topology), json.dumps(plan)))


def run_case(topology, fault=None, seed=1, protocol=None, workload=None,
             out_dir=None):
    """Simulates one case; writes telemetry when out_dir is given."""
    return json.loads(_core.run_case(
        _topology(topology), json.dumps(fault), seed, json.dumps(protocol),
        json.dumps(workload), os.fspath(out_dir) if out_dir else ""))


def validate_case(case_dir, oracle=None):
    return json.loads(_core.validate_case(os.fspath(case_dir), json.dumps(oracle)))


def simple_rca(case_dir, topology):
    return _core.simple_rca(os.fspath(case_dir), _topology(topology))


def generate(config, jobs=1, resume=False):
    return json.loads(_core.generate(*_config(config), jobs, resume))


def validate(config, jobs=1):
    return json.loads(_core.validate(*_config(config), jobs))


def evaluate(config, jobs=1):
    return json.loads(_core.evaluate(*_config(config), jobs))


def stats(config):
    return json.loads(_core.stats(*_config(config)))
