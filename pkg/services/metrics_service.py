"""Post-hoc trace analysis: makespan, node-hour costs, reconfiguration statistics and series."""
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from models.errors import IncompleteTraceError, SchedulerError, UnknownJobError
from models.summary import ReconfigStats, WorkloadSummary
from models.trace import TraceEvent, TraceKind

SECONDS_PER_HOUR = 3600.0

CATEGORY_ALL = "All"
CATEGORY_EXPANDS = "Expands"
CATEGORY_SHRINKS = "Shrinks"
CATEGORIES = (CATEGORY_ALL, CATEGORY_EXPANDS, CATEGORY_SHRINKS)


def _of_kind(trace: Sequence[TraceEvent], kind: TraceKind) -> List[TraceEvent]:
    return [event for event in trace if event.kind == kind]


def makespan(trace: Sequence[TraceEvent]) -> float:
    """Last Finish minus earliest Submit; 0 for an empty trace"""
    submits = _of_kind(trace, TraceKind.SUBMIT)
    if not submits:
        return 0.0
    finished = {event.job_id for event in _of_kind(trace, TraceKind.FINISH)}
    unfinished = sorted({event.job_id for event in submits} - finished)
    if unfinished:
        raise IncompleteTraceError(f"trace has unfinished jobs: {unfinished}")
    first = min(event.time for event in submits)
    last = max(event.time for event in trace if event.kind == TraceKind.FINISH)
    return last - first


def allocation_profile(trace: Sequence[TraceEvent]) -> List[Tuple[float, int]]:
    """
    Total allocated nodes as (time, nodes) samples.

    Every change contributes the value before and after it at the same
    instant, so the piecewise-constant profile is reproduced exactly by
    linear interpolation between samples.
    """
    submits = _of_kind(trace, TraceKind.SUBMIT)
    if not submits:
        return []
    start = min(event.time for event in submits)
    profile = [(start, 0)]
    current = 0
    for event in _of_kind(trace, TraceKind.NODES_ALLOCATED_TOTAL):
        profile.append((event.time, int(event.payload.get("previous", current))))
        current = int(event.payload["nodes"])
        profile.append((event.time, current))
    end = max(event.time for event in trace)
    profile.append((end, current))
    return profile


def net_cost_node_hours(trace: Sequence[TraceEvent]) -> float:
    """Trapezoidal integral of the allocated-node profile, in node-hours"""
    profile = allocation_profile(trace)
    if len(profile) < 2:
        return 0.0
    times = np.array([time for time, _ in profile], dtype=float)
    nodes = np.array([value for _, value in profile], dtype=float)
    return float(np.trapezoid(nodes, times)) / SECONDS_PER_HOUR


def total_cost_node_hours(trace: Sequence[TraceEvent], reserved_nodes: int) -> float:
    if reserved_nodes < 1:
        raise SchedulerError(f"reserved_nodes must be >= 1, got {reserved_nodes}")
    return makespan(trace) * reserved_nodes / SECONDS_PER_HOUR


def reconfig_durations(trace: Sequence[TraceEvent]) -> List[Tuple[str, float]]:
    """(action, Terminate-to-Restart seconds) for every completed reconfiguration, in trace order"""
    open_terminations: Dict[int, TraceEvent] = {}
    durations = []
    for event in trace:
        if event.kind == TraceKind.TERMINATE:
            open_terminations[event.job_id] = event
        elif event.kind == TraceKind.RESTART and event.job_id in open_terminations:
            terminate = open_terminations.pop(event.job_id)
            durations.append((terminate.payload.get("action", "none"), event.time - terminate.time))
    return durations


def describe(durations: Sequence[float], population: bool = False) -> ReconfigStats:
    """Count, mean, stddev (sample unless population) and range; a single sample has no defined sample stddev"""
    if not durations:
        return ReconfigStats()
    values = np.array(durations, dtype=float)
    ddof = 0 if population else 1
    defined = len(values) > ddof
    return ReconfigStats(
        count=len(values),
        total=float(values.sum()),
        mean=float(values.mean()),
        stddev=float(values.std(ddof=ddof)) if defined else 0.0,
        stddev_defined=defined,
        min=float(values.min()),
        max=float(values.max()),
    )


def reconfig_stats(trace: Sequence[TraceEvent], population: bool = False) -> Dict[str, ReconfigStats]:
    durations = reconfig_durations(trace)
    expands = [seconds for action, seconds in durations if action == "expanded"]
    shrinks = [seconds for action, seconds in durations if action == "shrunk"]
    return {
        CATEGORY_ALL: describe([seconds for _, seconds in durations], population),
        CATEGORY_EXPANDS: describe(expands, population),
        CATEGORY_SHRINKS: describe(shrinks, population),
    }


def _require_job(trace: Sequence[TraceEvent], job_id: int):
    if not any(event.job_id == job_id for event in trace if event.kind == TraceKind.SUBMIT):
        raise UnknownJobError(f"unknown job {job_id}")


def ce_series(trace: Sequence[TraceEvent], job_id: int) -> List[Tuple[float, float]]:
    """CE samples of one job in time order; restarts show up as resets of the cumulative value"""
    _require_job(trace, job_id)
    return [
        (event.time, float(event.payload["ce"]))
        for event in trace
        if event.kind == TraceKind.CE_SAMPLE and event.job_id == job_id and event.payload.get("ce") is not None
    ]


def allocation_series(trace: Sequence[TraceEvent], job_id: int) -> List[Tuple[float, int]]:
    """Nodes held by one job at each change: start, each resize at termination, finish"""
    _require_job(trace, job_id)
    series = []
    for event in trace:
        if event.job_id != job_id:
            continue
        if event.kind == TraceKind.START:
            series.append((event.time, int(event.payload["nodes"])))
        elif event.kind == TraceKind.TERMINATE:
            series.append((event.time, int(event.payload["to_nodes"])))
        elif event.kind == TraceKind.FINISH:
            series.append((event.time, 0))
    return series


def job_ids(trace: Sequence[TraceEvent]) -> List[int]:
    return sorted({event.job_id for event in trace if event.kind == TraceKind.SUBMIT})


def overhead_fraction(trace: Sequence[TraceEvent]) -> float:
    span = makespan(trace)
    if span <= 0:
        return 0.0
    return sum(seconds for _, seconds in reconfig_durations(trace)) / span


def summarize(
    trace: Sequence[TraceEvent],
    workload: str,
    reserved_nodes: int,
    seed: int = 0,
    overrides: Optional[Sequence[str]] = None,
    population: bool = False,
) -> WorkloadSummary:
    return WorkloadSummary(
        workload=workload,
        seed=seed,
        overrides=list(overrides or []),
        reserved_nodes=reserved_nodes,
        makespan=makespan(trace),
        net_cost=net_cost_node_hours(trace),
        total_cost=total_cost_node_hours(trace, reserved_nodes),
        reconfig_stats=reconfig_stats(trace, population),
        overhead_fraction=overhead_fraction(trace),
    )
