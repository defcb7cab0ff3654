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

"""Python front end to the dynnet core.

Architectures, reports, manifests and summaries are returned as plain
dicts; latency tables and traces as CSV text.
"""

import json as _json

from . import _dynnet
from ._dynnet import (
    DynnetError,
    EmptyInput,
    InvalidInput,
    NoFeasibleLevel,
    NotFound,
    ScenarioError,
)

__all__ = [
    "DynnetError", "EmptyInput", "InvalidInput", "NoFeasibleLevel", "NotFound", "ScenarioError",
    "count_architectures", "random_arch", "profile", "search", "pareto_front",
    "build_manifest", "lookup_level", "simulate", "summarize", "run_cli",
]


def _text(obj):
    if obj is None:
        return ""
    return obj if isinstance(obj, str) else _json.dumps(obj)


def count_architectures(space=None, include_resolution=False):
    return int(_dynnet.count_architectures(_text(space), include_resolution))


def random_arch(seed=0, space=None):
    return _json.loads(_dynnet.random_arch(_text(space), seed))


def profile(device, seed=0, scale=1.0, space=None):
    """Synthetic latency table for "gpu-like" or "cpu-like", as CSV text."""
    return _dynnet.profile(device, seed, scale, _text(space))


def search(table_csv, config=None, space=None, keep_evaluated=False):
    """Runs the family search and returns the report dict."""
    return _json.loads(_dynnet.search(table_csv, _text(config), _text(space), keep_evaluated))


def pareto_front(candidates):
    return _json.loads(_dynnet.pareto_front(_text(candidates)))


def build_manifest(reports, switch_cost=73.0):
    return _json.loads(_dynnet.build_manifest([_text(r) for r in reports], switch_cost))


def lookup_level(manifest, device, max_lat, min_acc=None):
    return _dynnet.lookup_level(_text(manifest), device, max_lat, min_acc)


def simulate(manifest, scenario, mode="reactive", policy=None):
    """Returns (trace_csv, decisions)."""
    trace, decisions = _dynnet.simulate(_text(manifest), _text(scenario), mode, _text(policy))
    return trace, _json.loads(decisions)


def summarize(trace_csv):
    return _json.loads(_dynnet.summarize(trace_csv))


def run_cli(*args):
    """Runs a dynnet subcommand in-process; returns (exit_code, stdout, stderr)."""
    return _dynnet.run_cli([str(a) for a in args])
