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

import json
import math
import pathlib

import pytest

import rcabench

CHAIN3 = str(pathlib.Path(__file__).resolve().parents[2] / "configs" / "topologies" / "chain3.json")
CPU_STRESS = {"fault_type": "CPUStress", "category": "Resource", "target": "c-0",
              "params": {"load": 4}}
SHORT = {"warmup_s": 30, "normal_s": 120, "fault_s": 120}


def test_space_cardinality():
    total, per_type = rcabench.space_cardinality("trainticket50")
    assert total == 3900033575128
    assert len(per_type) == 31
    assert sum(per_type.values()) == total


def test_booking_paths():
    assert rcabench.count_paths("trainticket50", "booking") == 36


def test_reference_topology_is_json():
    doc = rcabench.reference_topology("chain3")
    assert json.loads(json.dumps(doc)) == doc


def test_two_proportion_z():
    assert rcabench.two_proportion_z(990, 1000, 400, 500) == pytest.approx(13.30701020521516, rel=1e-12)


def test_rank_metrics():
    ranks = [1, 3, None, 2]
    assert rcabench.top_k(ranks, 1) == pytest.approx(0.25)
    assert rcabench.top_k(ranks, 3) == pytest.approx(0.75)
    assert rcabench.avg_k(ranks, 3) == pytest.approx((0.25 + 0.5 + 0.75) / 3)
    assert rcabench.mrr(ranks) == pytest.approx((1 + 1 / 3 + 0 + 0.5) / 4)


def test_rank_metrics_reject_empty():
    with pytest.raises(rcabench.EmptyInputError):
        rcabench.mrr([])


def test_run_case_round_trip(tmp_path):
    out = tmp_path / "case"
    case = rcabench.run_case(CHAIN3, fault=CPU_STRESS, seed=7, protocol=SHORT, out_dir=out)
    assert case["spans"] > 0
    assert case["fault"]["window"] == [150.0, 270.0]
    assert (out / "traces.ndrec").exists()
    verdict = rcabench.validate_case(out)
    assert verdict["label"] == case["verdict"]["label"]
    ranking = rcabench.simple_rca(out, CHAIN3)
    assert {name for name, _ in ranking} == {"A", "B", "C"}
    assert all(math.isfinite(score) for _, score in ranking)


def test_run_case_is_deterministic():
    a = rcabench.run_case(CHAIN3, fault=CPU_STRESS, seed=3, protocol=SHORT)
    b = rcabench.run_case(CHAIN3, fault=CPU_STRESS, seed=3, protocol=SHORT)
    assert a == b


def test_bad_fault_rejected():
    bad = dict(CPU_STRESS, target="nope")
    with pytest.raises(rcabench.Error):
        rcabench.run_case(CHAIN3, fault=bad, protocol=SHORT)


def test_unknown_config_key(tmp_path):
    with pytest.raises(rcabench.ConfigError):
        rcabench.generate({"topology": CHAIN3, "bogus": 1, "output": str(tmp_path)})


def test_campaign(tmp_path):
    config = {
        "topology": CHAIN3,
        "workload": {"qps": 16.47},
        "protocol": SHORT,
        "fault_space": {"strata": {"Resource": 2, "HTTP": 2}},
        "controls": 1,
        "algorithms": ["simple_rca", "random"],
        "output": str(tmp_path / "c"),
        "seed": 5,
    }
    gen = rcabench.generate(config)
    assert gen["planned"] == 5
    assert gen["failed"] == 0
    val = rcabench.validate(config)
    assert val["cases"] == 5
    assert val["has_anomaly"] + val["no_anomaly"] == 5
    rep = rcabench.evaluate(config)
    assert {row["algorithm"] for row in rep["rows"]} == {"simple_rca", "random"}
    st = rcabench.stats(config)
    assert st["services"] == 3
    assert st["max_depth"] == 2
