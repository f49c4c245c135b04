"""Golden scenarios: static 2-node, static 12-node and dynamic 1-12-node bursts of ten jobs."""
from itertools import groupby

import pytest

from models.trace import TraceHeader, TraceKind
from services.engine_service import run
from services.metrics_service import makespan, net_cost_node_hours, reconfig_stats, total_cost_node_hours
from services.trace_service import write_trace
from tests.conftest import golden_actions, golden_scenario, golden_trace

RESERVED = 32


def running_over_time(trace):
    """Number of running jobs after all events of each instant"""
    running = 0
    counts = []
    interesting = [e for e in trace if e.kind in (TraceKind.START, TraceKind.FINISH)]
    for time, group in groupby(interesting, key=lambda e: e.time):
        for event in group:
            running += 1 if event.kind == TraceKind.START else -1
        counts.append((time, running))
    return counts


@pytest.mark.parametrize("name", ["static-2", "static-12", "dynamic-1-12"])
def test_total_cost_identity(name):
    trace = golden_trace(name)
    assert total_cost_node_hours(trace, RESERVED) == pytest.approx(makespan(trace) * RESERVED / 3600, rel=1e-9)


@pytest.mark.parametrize("span,expected", [(2825, 25.11), (2652, 23.57), (2236, 19.87)])
def test_total_cost_reference_values(span, expected):
    assert span * RESERVED / 3600 == pytest.approx(expected, rel=0.005)


def test_static_two_node_workload():
    trace = golden_trace("static-2")
    starts = [e for e in trace if e.kind == TraceKind.START]
    assert len(starts) == 10
    assert all(e.time == 0.0 and e.payload["nodes"] == 2 for e in starts)
    assert makespan(trace) == pytest.approx(2825, rel=0.05)
    assert net_cost_node_hours(trace) == pytest.approx(15.63, rel=0.05)
    assert reconfig_stats(trace)["All"].count == 0


def test_static_twelve_node_workload():
    trace = golden_trace("static-12")
    counts = running_over_time(trace)
    assert all(running == 2 for _, running in counts[:-1])
    assert counts[-1][1] == 0
    waves = sorted({e.time for e in trace if e.kind == TraceKind.START})
    assert len(waves) == 5
    assert net_cost_node_hours(trace) == pytest.approx(17.53, rel=0.10)


def test_dynamic_workload():
    trace = golden_trace("dynamic-1-12")
    initial = [e.payload["nodes"] for e in trace if e.kind == TraceKind.START and e.time == 0.0]
    assert initial == [12, 12, 6, 1]
    assert sum(initial) == 31

    shrinks = [
        e for e in trace
        if e.kind == TraceKind.TERMINATE and e.payload["from_nodes"] == 12 and e.payload["to_nodes"] == 10
    ]
    assert shrinks

    dynamic = makespan(trace)
    static12 = makespan(golden_trace("static-12"))
    static2 = makespan(golden_trace("static-2"))
    assert dynamic < static12 < static2

    costs = {name: total_cost_node_hours(golden_trace(name), RESERVED)
             for name in ("static-2", "static-12", "dynamic-1-12")}
    assert min(costs, key=costs.get) == "dynamic-1-12"


def test_dynamic_reconfigurations_match_action_records():
    trace = golden_trace("dynamic-1-12")
    stats = reconfig_stats(trace)
    records = golden_actions("dynamic-1-12")
    assert stats["All"].count == len(records)
    assert stats["Expands"].count == sum(1 for r in records if r.kind.value == "expanded")
    assert stats["Shrinks"].count == sum(1 for r in records if r.kind.value == "shrunk")
    assert stats["Expands"].mean == pytest.approx(25.55)
    assert stats["Shrinks"].mean == pytest.approx(9.43)


@pytest.mark.parametrize("name", ["static-2", "static-12", "dynamic-1-12"])
def test_trace_files_are_byte_identical(name, tmp_path):
    scenario = golden_scenario(name)
    header = TraceHeader(scenario=name, seed=scenario.seed, reserved_nodes=RESERVED)
    first, second = tmp_path / "first.jsonl", tmp_path / "second.jsonl"
    write_trace(first, header, run(scenario))
    write_trace(second, header, run(scenario))
    assert first.read_bytes() == second.read_bytes()
