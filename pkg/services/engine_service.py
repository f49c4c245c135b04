"""Deterministic discrete-event simulation of malleable jobs under the resource manager."""
import heapq
import logging
import os
from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from dotenv import load_dotenv

from models.app_model import AppModel, CostMode, DurationDistribution
from models.cluster import ClusterState
from models.dmr import ActionRecord, DmrAction, DmrContext
from models.errors import InvariantViolationError, ScenarioError, SimulationDeadlockError
from models.job import Checkpoint, JobPhase, JobState
from models.scenario import ScenarioConfig
from models.trace import TraceEvent, TraceKind
from services.app_model_service import (
    advance,
    checkpoint_step_for,
    cumulative_ce,
    restore_checkpoint,
    step_time,
    write_checkpoint,
)
from services.dmr_service import DmrService
from services.policy_service import ReconfigurationPolicy
from services.scenario_service import validate_scenario
from services.scheduler_service import ReleaseResult, SchedulerService

load_dotenv()

logger = logging.getLogger(__name__)

DEFAULT_LAUNCH_ARGS = ["-s", "topol.tpr"]


class EventKind(str, Enum):
    FINISH = "finish"
    CHECKPOINT = "checkpoint"
    TERMINATE = "terminate"
    RESTART = "restart"
    SUBMIT = "submit"
    BOUNDARY = "boundary"


# tie-break at equal times: finishes, terminations, restarts, grants, starts, then decisions
EVENT_RANK = {
    EventKind.FINISH: 0,
    EventKind.CHECKPOINT: 1,
    EventKind.TERMINATE: 1,
    EventKind.RESTART: 2,
    EventKind.SUBMIT: 4,
    EventKind.BOUNDARY: 5,
}


class _Runtime:
    """Engine-side bookkeeping for one job"""

    def __init__(self, model: AppModel):
        self.model = model
        self.ctx: Optional[DmrContext] = None
        self.boundary = 0
        self.checkpoint_target: Optional[int] = None
        self.action: Optional[ActionRecord] = None
        self.sync_step: Optional[int] = None
        self.checkpoint: Optional[Checkpoint] = None
        self.restart_delay = 0.0
        self.last_seen_step = 0


class CostSampler:
    """Reconfiguration durations; clipped normal draws from a seeded generator in stochastic mode"""

    def __init__(self, mode: CostMode, seed: int):
        self.mode = mode
        self.rng = np.random.default_rng(seed) if mode == CostMode.STOCHASTIC else None

    def draw(self, distribution: DurationDistribution) -> float:
        if self.rng is None:
            return distribution.mean
        value = self.rng.normal(distribution.mean, distribution.stddev)
        return float(np.clip(value, distribution.min, distribution.max))


class EngineService:
    """Single-threaded event loop driving applications, DMR, policy and scheduler"""

    def __init__(
        self,
        scenario: ScenarioConfig,
        policy: Optional[ReconfigurationPolicy] = None,
        debug_checks: Optional[bool] = None,
    ):
        """
        Args:
            scenario: validated scenario to simulate
            policy: reconfiguration policy; CE_POLICY when None
            debug_checks: run the invariant checker after every event. If None,
                reads DMRSIM_DEBUG_CHECKS (default: false)
        """
        if debug_checks is None:
            self.debug_checks = os.getenv("DMRSIM_DEBUG_CHECKS", "false").lower() == "true"
        else:
            self.debug_checks = debug_checks

        violations = validate_scenario(scenario)
        if violations:
            raise ScenarioError(f"scenario '{scenario.name}' is invalid", violations)

        self.scenario = scenario
        self.clock = 0.0
        self.trace: List[TraceEvent] = []
        self._queue: list = []
        self._seq = 0

        self.jobs: Dict[int, JobState] = {}
        self.runtime: Dict[int, _Runtime] = {}
        for spec in scenario.job_specs():
            self.jobs[spec.job_id] = JobState(spec=spec)
            self.runtime[spec.job_id] = _Runtime(scenario.app_models[spec.app_model_id])

        self.cluster = ClusterState.empty(scenario.cluster.total_compute_nodes)
        self.scheduler = SchedulerService(
            self.cluster,
            {},
            mode=scenario.scheduler.mode,
            reserve_depth=scenario.scheduler.reserve_depth,
            emit=self._emit,
        )
        self.dmr = DmrService(self.scheduler, scenario.policy, policy=policy, emit=self._emit)
        self.costs = CostSampler(scenario.cost_model.mode, scenario.seed)
        self.overrun_steps = scenario.engine.shutdown_overrun_steps
        self._handlers = {
            EventKind.SUBMIT: self._on_submit,
            EventKind.BOUNDARY: self._on_boundary,
            EventKind.CHECKPOINT: self._on_checkpoint_reached,
            EventKind.TERMINATE: self._on_terminate,
            EventKind.RESTART: self._on_restart,
            EventKind.FINISH: self._on_finish,
        }

    # -- plumbing ------------------------------------------------------

    def _emit(self, event: TraceEvent):
        self.trace.append(event)

    def _record(self, job_id: Optional[int], kind: TraceKind, **payload):
        self._emit(TraceEvent(time=self.clock, job_id=job_id, kind=kind, payload=payload))

    def _push(self, time: float, kind: EventKind, job_id: int):
        heapq.heappush(self._queue, (time, EVENT_RANK[kind], job_id, self._seq, kind))
        self._seq += 1

    @property
    def action_records(self) -> List[ActionRecord]:
        return self.dmr.action_records

    # -- main loop -----------------------------------------------------

    def run(self) -> List[TraceEvent]:
        for job_id, job in sorted(self.jobs.items()):
            self._push(job.spec.submit_time, EventKind.SUBMIT, job_id)
        logger.info(f"simulating '{self.scenario.name}': {len(self.jobs)} jobs on {self.cluster.total_nodes} nodes")

        while self._queue:
            time, _, job_id, _, kind = heapq.heappop(self._queue)
            self.clock = time
            self._handlers[kind](self.jobs[job_id])
            if self.debug_checks:
                self._check_invariants()

        unfinished = [job for job in self.jobs.values() if job.phase != JobPhase.FINISHED]
        if unfinished:
            raise SimulationDeadlockError(self._deadlock_diagnostic(unfinished))
        logger.info(f"'{self.scenario.name}' finished at t={self.clock:.2f}s")
        return list(self.trace)

    def _deadlock_diagnostic(self, unfinished: List[JobState]) -> str:
        states = ", ".join(f"job {job.job_id} {job.phase.value} on {job.nodes}" for job in unfinished)
        pending = ", ".join(
            f"job {request.job_id} -> {request.target}" for request in self.cluster.pending_resizes
        ) or "none"
        return (
            f"no schedulable event at t={self.clock:.2f}s with unfinished jobs: {states}; "
            f"free nodes {self.cluster.free_nodes}, queue {self.cluster.queue}, pending resizes {pending}"
        )

    # -- segments ------------------------------------------------------

    def _schedule_segment(self, job: JobState):
        runtime = self.runtime[job.job_id]
        interval = self.scenario.policy.decision_interval
        next_decision = (job.step // interval + 1) * interval
        boundary = min(job.spec.total_steps, next_decision)
        kind = EventKind.FINISH if boundary == job.spec.total_steps else EventKind.BOUNDARY
        if runtime.checkpoint_target is not None and runtime.checkpoint_target <= boundary:
            boundary = runtime.checkpoint_target
            kind = EventKind.CHECKPOINT
        runtime.boundary = boundary
        duration = (boundary - job.step) * step_time(runtime.model, job.nodes)
        self._push(self.clock + duration, kind, job.job_id)

    def _finish_segment(self, job: JobState):
        runtime = self.runtime[job.job_id]
        start_step = job.step
        advance(job, runtime.model, runtime.boundary - start_step)
        self._record(
            job.job_id, TraceKind.STEP_PROGRESS,
            from_step=start_step, to_step=job.step, nodes=job.nodes, discarded=False,
        )

    def _handle_release(self, result: ReleaseResult):
        for job_id, nodes in result.started:
            self._on_started(self.jobs[job_id])

    # -- handlers ------------------------------------------------------

    def _on_submit(self, job: JobState):
        self.scheduler.submit(job, self.clock)
        # a burst is queued as a whole before any start is sized
        if self._queue and self._queue[0][0] == self.clock and self._queue[0][4] == EventKind.SUBMIT:
            return
        self._handle_release(ReleaseResult(started=self.scheduler.try_start(self.clock)))

    def _on_started(self, job: JobState):
        runtime = self.runtime[job.job_id]
        runtime.ctx = self.dmr.dmr_init(job, DEFAULT_LAUNCH_ARGS)
        self._schedule_segment(job)

    def _on_boundary(self, job: JobState):
        runtime = self.runtime[job.job_id]
        self._finish_segment(job)
        self._record(job.job_id, TraceKind.CE_SAMPLE, step=job.step, ce=cumulative_ce(job), nodes=job.nodes)

        if job.phase == JobPhase.RUNNING:
            self.dmr.dmr_check(runtime.ctx, job, job.step, self.clock)
            if runtime.ctx.ready_reconfig:
                self._apply_reconfiguration(job)
                return
        self._schedule_segment(job)

    def _apply_reconfiguration(self, job: JobState):
        """Checkpoint at the next neighbor-search step, terminate, then restart on the new allocation"""
        runtime = self.runtime[job.job_id]
        checkpoint_step = checkpoint_step_for(job.step, runtime.model.nstlist)
        if checkpoint_step >= job.spec.total_steps:
            logger.warning(
                f"t={self.clock:.2f} job {job.job_id}: reconfiguration abandoned, "
                f"next neighbor-search step {checkpoint_step} is past the end"
            )
            runtime.ctx.ready_reconfig = False
            job.pending_resize = None
            self._handle_release(self.scheduler.withdraw(job.job_id, self.clock))
            self._schedule_segment(job)
            return

        runtime.sync_step = job.step
        runtime.action = self.dmr.dmr_reconfigure(runtime.ctx, job)
        job.phase = JobPhase.CHECKPOINT_PENDING
        runtime.checkpoint_target = checkpoint_step
        if checkpoint_step == job.step:
            self._write_checkpoint(job)
        else:
            self._schedule_segment(job)

    def _on_checkpoint_reached(self, job: JobState):
        self._finish_segment(job)
        self._write_checkpoint(job)

    def _write_checkpoint(self, job: JobState):
        runtime = self.runtime[job.job_id]
        checkpoint, cost = write_checkpoint(job, runtime.model, last_action=runtime.ctx.last_action.value)
        runtime.checkpoint = checkpoint
        runtime.checkpoint_target = None
        self._record(job.job_id, TraceKind.CHECKPOINT_WRITTEN, step=checkpoint.step, nodes=job.nodes, cost=cost)

        overrun = min(self.overrun_steps, job.spec.total_steps - checkpoint.step)
        delay = cost + overrun * step_time(runtime.model, job.nodes)
        self._push(self.clock + delay, EventKind.TERMINATE, job.job_id)

    def _on_terminate(self, job: JobState):
        runtime = self.runtime[job.job_id]
        checkpoint = runtime.checkpoint
        action = runtime.action
        overrun = min(self.overrun_steps, job.spec.total_steps - checkpoint.step)
        if overrun > 0:
            self._record(
                job.job_id, TraceKind.STEP_PROGRESS,
                from_step=checkpoint.step, to_step=checkpoint.step + overrun, nodes=job.nodes, discarded=True,
            )

        expanding = action.kind == DmrAction.EXPANDED
        distribution = self.scenario.cost_model.expand_cost if expanding else self.scenario.cost_model.shrink_cost
        runtime.restart_delay = self.costs.draw(distribution)

        job.phase = JobPhase.RESTARTING
        self._record(
            job.job_id, TraceKind.TERMINATE,
            step=checkpoint.step, from_nodes=action.from_nodes, to_nodes=action.to_nodes,
            action=action.kind.value, sync_step=runtime.sync_step, checkpoint_step=checkpoint.step,
        )
        job.nodes = action.to_nodes
        released = self.scheduler.apply_resize(job.job_id, self.clock)
        self.dmr.dmr_finalize(runtime.ctx, job, self.clock)
        runtime.ctx = None
        self._push(self.clock + runtime.restart_delay, EventKind.RESTART, job.job_id)
        logger.debug(
            f"t={self.clock:.2f} job {job.job_id} terminated at step {checkpoint.step} "
            f"({action.kind.value} {action.from_nodes}->{action.to_nodes}), restart in {runtime.restart_delay:.2f}s"
        )
        self._handle_release(released)

    def _on_restart(self, job: JobState):
        runtime = self.runtime[job.job_id]
        checkpoint = runtime.checkpoint
        restore_checkpoint(job, checkpoint, runtime.action.to_nodes)
        job.phase = JobPhase.RUNNING
        job.restart_count += 1
        job.last_reconfig_step = checkpoint.step
        runtime.ctx = self.dmr.dmr_init(job, DEFAULT_LAUNCH_ARGS, checkpoint=checkpoint)
        self._record(
            job.job_id, TraceKind.RESTART,
            step=checkpoint.step, nodes=job.nodes, duration=runtime.restart_delay,
            action=runtime.action.kind.value,
        )
        runtime.checkpoint = None
        runtime.action = None
        runtime.sync_step = None
        self._schedule_segment(job)

    def _on_finish(self, job: JobState):
        runtime = self.runtime[job.job_id]
        self._finish_segment(job)
        job.phase = JobPhase.FINISHED
        nodes = job.nodes
        job.nodes = 0
        self._record(job.job_id, TraceKind.FINISH, step=job.step, nodes=nodes, restarts=job.restart_count)
        released = self.dmr.dmr_finalize(runtime.ctx, job, self.clock)
        runtime.ctx = None
        self._handle_release(released)
        self._handle_release(self.scheduler.finish(job.job_id, self.clock))

    # -- debug checker -------------------------------------------------

    def _check_invariants(self):
        problems = list(self.scheduler.check_conservation())
        for job_id, job in self.jobs.items():
            problems.extend(job.check_invariants())
            runtime = self.runtime[job_id]
            if job.step < runtime.last_seen_step:
                problems.append(f"job {job_id}: step went back from {runtime.last_seen_step} to {job.step}")
            runtime.last_seen_step = job.step
        if problems:
            raise InvariantViolationError(f"t={self.clock:.2f}: " + "; ".join(problems))


def run(scenario: ScenarioConfig, policy: Optional[ReconfigurationPolicy] = None,
        debug_checks: Optional[bool] = None) -> List[TraceEvent]:
    return EngineService(scenario, policy=policy, debug_checks=debug_checks).run()
