import logging
from typing import Callable, Dict, List, Optional, Tuple

from pydantic import BaseModel

from models.cluster import ClusterState, ResizeOutcome, ResizeRequest, StartMode
from models.errors import SchedulerError
from models.job import JobPhase, JobState
from models.trace import TraceEvent, TraceKind

logger = logging.getLogger(__name__)


class ReleaseResult(BaseModel):
    """What a release made possible: grants of pending expansions and job starts"""
    granted: List[ResizeRequest] = []
    started: List[Tuple[int, int]] = []


class SchedulerService:
    """Slurm-like resource manager: FIFO queue with node ranges and a resize grant protocol"""

    def __init__(
        self,
        cluster: ClusterState,
        jobs: Dict[int, JobState],
        mode: StartMode = StartMode.RESERVE_MIN,
        reserve_depth: int = 1,
        emit: Optional[Callable[[TraceEvent], None]] = None,
    ):
        self.cluster = cluster
        self.jobs = jobs
        self.mode = mode
        self.reserve_depth = reserve_depth
        # standalone use keeps the events locally
        self.events: List[TraceEvent] = []
        self._emit = emit or self.events.append
        self._submitted = set()
        self._last_allocated = cluster.allocated_nodes

    # -- trace helpers -------------------------------------------------

    def _record(self, time: float, job_id: Optional[int], kind: TraceKind, **payload):
        self._emit(TraceEvent(time=time, job_id=job_id, kind=kind, payload=payload))

    def _record_allocation(self, time: float):
        allocated = self.cluster.allocated_nodes
        if allocated != self._last_allocated:
            self._record(
                time, None, TraceKind.NODES_ALLOCATED_TOTAL,
                previous=self._last_allocated, nodes=allocated,
            )
            self._last_allocated = allocated

    def _job(self, job_id: int) -> JobState:
        job = self.jobs.get(job_id)
        if job is None:
            raise SchedulerError(f"unknown job {job_id}")
        return job

    # -- queue ---------------------------------------------------------

    def submit(self, job: JobState, time: float):
        if job.job_id in self._submitted:
            raise SchedulerError(f"job {job.job_id} submitted twice")
        if job.phase != JobPhase.QUEUED:
            raise SchedulerError(f"job {job.job_id} cannot be submitted while {job.phase.value}")
        self._submitted.add(job.job_id)
        self.jobs[job.job_id] = job
        self.cluster.queue.append(job.job_id)
        self.cluster.queue.sort(key=lambda job_id: (self.jobs[job_id].spec.submit_time, job_id))
        self._record(time, job.job_id, TraceKind.SUBMIT, n_min=job.spec.n_min, n_max=job.spec.n_max)

    def _start_size(self, position: int) -> int:
        queue = self.cluster.queue
        spec = self.jobs[queue[position]].spec
        free = self.cluster.free_nodes
        if self.mode == StartMode.GREEDY:
            return min(spec.n_max, free)
        # reserve the minima of the next queued jobs that could still start
        reserve = 0
        for job_id in queue[position + 1:position + 1 + self.reserve_depth]:
            later_min = self.jobs[job_id].spec.n_min
            if spec.n_min + reserve + later_min > free:
                break
            reserve += later_min
        return max(spec.n_min, min(spec.n_max, free - reserve))

    def try_start(self, time: float) -> List[Tuple[int, int]]:
        """Start queued jobs in order; stops at the first one that does not fit (no backfill)"""
        started = []
        while self.cluster.queue:
            job = self.jobs[self.cluster.queue[0]]
            if self.cluster.free_nodes < job.spec.n_min:
                break
            nodes = self._start_size(0)
            self.cluster.queue.pop(0)
            self.cluster.free_nodes -= nodes
            self.cluster.allocations[job.job_id] = nodes
            job.phase = JobPhase.RUNNING
            job.nodes = nodes
            started.append((job.job_id, nodes))
            self._record(time, job.job_id, TraceKind.START, nodes=nodes)
            logger.debug(f"t={time:.2f} job {job.job_id} started on {nodes} nodes")
        self._record_allocation(time)
        return started

    # -- resize protocol -----------------------------------------------

    def request_resize(self, job_id: int, target: int, time: float) -> ResizeOutcome:
        job = self._job(job_id)
        current = self.cluster.allocations.get(job_id)
        if current is None:
            raise SchedulerError(f"job {job_id} holds no allocation")
        if not (job.spec.n_min <= target <= job.spec.n_max):
            raise SchedulerError(
                f"job {job_id}: target {target} outside [{job.spec.n_min}, {job.spec.n_max}]"
            )
        if target == current:
            raise SchedulerError(f"job {job_id}: target equals current allocation {current}")
        if self.cluster.request_for(job_id) is not None:
            raise SchedulerError(f"job {job_id} already has an outstanding resize request")

        request = ResizeRequest(job_id=job_id, target=target, current=current, requested_at=time)
        self.cluster.pending_resizes.append(request)
        if not request.is_expansion:
            self._grant(request, time)
            return ResizeOutcome.GRANTED_IMMEDIATELY
        blocked = any(not other.granted for other in self.cluster.pending_resizes if other is not request)
        if not blocked and self.cluster.free_nodes >= target - current:
            self._grant(request, time)
            return ResizeOutcome.GRANTED_IMMEDIATELY
        self._record(time, job_id, TraceKind.RESIZE_PENDING_RESOURCES, current=current, target=target)
        logger.debug(f"t={time:.2f} job {job_id} expansion {current}->{target} pending resources")
        return ResizeOutcome.PENDING

    def _grant(self, request: ResizeRequest, time: float):
        if request.is_expansion:
            request.earmarked = request.target - request.current
            self.cluster.free_nodes -= request.earmarked
        request.granted = True
        request.granted_at = time
        self._record(
            time, request.job_id, TraceKind.RESIZE_GRANTED,
            current=request.current, target=request.target, earmarked=request.earmarked,
            requested_at=request.requested_at,
        )
        self._record_allocation(time)

    def _grant_pending(self, time: float) -> List[ResizeRequest]:
        granted = []
        for request in self.cluster.pending_resizes:
            if request.granted:
                continue
            # head-of-line: a later request never overtakes an earlier one
            if self.cluster.free_nodes < request.target - request.current:
                break
            self._grant(request, time)
            granted.append(request)
        return granted

    def release(self, nodes: int, time: float) -> ReleaseResult:
        """Return nodes to the pool, then serve pending expansions before queued jobs"""
        if nodes < 0:
            raise SchedulerError(f"cannot release {nodes} nodes")
        if self.cluster.free_nodes + nodes > self.cluster.total_nodes:
            raise SchedulerError(
                f"over-release: {self.cluster.free_nodes} + {nodes} exceeds {self.cluster.total_nodes}"
            )
        self.cluster.free_nodes += nodes
        self._record_allocation(time)
        granted = self._grant_pending(time)
        started = self.try_start(time)
        return ReleaseResult(granted=granted, started=started)

    def withdraw(self, job_id: int, time: float) -> ReleaseResult:
        """Drop a job's outstanding request, returning any earmarked nodes"""
        request = self.cluster.request_for(job_id)
        if request is None:
            return ReleaseResult()
        self.cluster.pending_resizes.remove(request)
        logger.warning(f"t={time:.2f} job {job_id}: resize request to {request.target} withdrawn")
        return self.release(request.earmarked, time)

    def apply_resize(self, job_id: int, time: float) -> ReleaseResult:
        """Move a granted request into the allocation; shrink surplus is released now"""
        request = self.cluster.request_for(job_id)
        if request is None or not request.granted:
            raise SchedulerError(f"job {job_id} has no granted resize to apply")
        self.cluster.pending_resizes.remove(request)
        self.cluster.allocations[job_id] = request.target
        if request.is_expansion:
            # earmarked nodes join the job; the pool is unchanged
            self._record_allocation(time)
            return ReleaseResult()
        return self.release(request.current - request.target, time)

    def finish(self, job_id: int, time: float) -> ReleaseResult:
        request = self.cluster.request_for(job_id)
        if request is not None:
            self.cluster.pending_resizes.remove(request)
            logger.warning(f"t={time:.2f} job {job_id}: resize request to {request.target} withdrawn at finish")
        nodes = self.cluster.allocations.pop(job_id, 0)
        earmarked = request.earmarked if request is not None else 0
        return self.release(nodes + earmarked, time)

    # -- invariants ----------------------------------------------------

    def check_conservation(self) -> List[str]:
        cluster = self.cluster
        problems = []
        held = sum(cluster.allocations.values())
        if held + cluster.earmarked_nodes + cluster.free_nodes != cluster.total_nodes:
            problems.append(
                f"node conservation broken: allocations {held} + earmarks {cluster.earmarked_nodes} "
                f"+ free {cluster.free_nodes} != {cluster.total_nodes}"
            )
        if not (0 <= cluster.free_nodes <= cluster.total_nodes):
            problems.append(f"free nodes {cluster.free_nodes} outside [0, {cluster.total_nodes}]")
        for job_id, nodes in cluster.allocations.items():
            spec = self.jobs[job_id].spec
            if not (spec.n_min <= nodes <= spec.n_max):
                problems.append(f"job {job_id} holds {nodes} nodes outside [{spec.n_min}, {spec.n_max}]")
        return problems
