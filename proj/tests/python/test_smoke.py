# Copyright (c) 2026 The dynnet Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json
import os
import pathlib

import pytest

import dynnet

FIXTURES = pathlib.Path(os.environ.get("DYNNET_FIXTURES_DIR", pathlib.Path(__file__).parents[2] / "fixtures"))


def test_count_matches_closed_form():
    assert dynnet.count_architectures() == (9**2 + 9**3 + 9**4) ** 5
    assert dynnet.count_architectures(include_resolution=True) == 25 * (9**2 + 9**3 + 9**4) ** 5


def test_random_arch_is_seeded():
    assert dynnet.random_arch(3) == dynnet.random_arch(3)
    assert dynnet.random_arch(3) != dynnet.random_arch(4)


def test_profile_csv():
    csv = dynnet.profile("gpu-like", seed=2)
    lines = csv.strip().splitlines()
    assert lines[0].startswith("device_id,op_kind")
    assert len(lines) == 4701
    with pytest.raises(dynnet.InvalidInput):
        dynnet.profile("tpu-like")


def test_pareto_front():
    arch = dynnet.random_arch(0)
    cands = [{"arch": arch, "lat": lat, "acc": acc} for lat, acc in [(30, 75), (40, 74), (50, 77)]]
    front = dynnet.pareto_front(cands)
    assert [c["acc"] for c in front["levels"]] == [75, 77]


def test_manifest_lookup_and_simulation():
    manifest = json.loads((FIXTURES / "scenarios" / "manifest.json").read_text())
    assert dynnet.lookup_level(manifest, "gpu-b", 50.0) == 4
    with pytest.raises(dynnet.NoFeasibleLevel):
        dynnet.lookup_level(manifest, "gpu-b", 10.0)

    scenario = json.loads((FIXTURES / "scenarios" / "constraint_change.json").read_text())
    trace, decisions = dynnet.simulate(manifest, scenario)
    assert trace == dynnet.simulate(manifest, scenario)[0]
    assert decisions and decisions[0]["reason"] == "violation"
    summary = dynnet.summarize(trace)
    assert summary["models"]["A"]["phases"][-1]["violation_ratio"] == 0.0

    with pytest.raises(dynnet.ScenarioError):
        dynnet.simulate(manifest, dict(scenario, duration_ms=-1))


def test_small_search_pipeline():
    config = json.loads((FIXTURES / "search_gpu.json").read_text())
    config["search"].update(population_size=20, tournament_size=5, generations=20, itr_max=4000)
    config["min_levels"] = 1
    report = dynnet.search(dynnet.profile("gpu-like", seed=1), config)
    assert "evaluated" not in report
    levels = report["levels"]["levels"]
    assert levels
    accs = [c["acc"] for c in levels]
    assert accs == sorted(accs)
    manifest = dynnet.build_manifest([report])
    section = next(iter(manifest["devices"].values()))
    assert [lv["level"] for lv in section["levels"]] == list(range(1, len(levels) + 1))


def test_cli_exit_codes(tmp_path):
    code, out, _ = dynnet.run_cli("profile", "--device", "cpu-like", "--out", tmp_path / "t.csv")
    assert code == 0 and "4700" in out
    code, _, _ = dynnet.run_cli("report", "--trace", tmp_path / "missing.csv")
    assert code == 2
