from pydantic import BaseModel, ConfigDict, Field
from typing import List, Optional
from enum import Enum


class JobPhase(str, Enum):
    QUEUED = "queued"
    RUNNING = "running"
    CHECKPOINT_PENDING = "checkpoint_pending"
    RESTARTING = "restarting"
    FINISHED = "finished"


class JobSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    job_id: int
    n_min: int
    n_max: int
    total_steps: int
    submit_time: float = 0.0
    app_model_id: str = "stmv"

    @property
    def is_static(self) -> bool:
        return self.n_min == self.n_max

    def violations(self) -> List[tuple]:
        """(field, message) pairs for every broken invariant"""
        problems = []
        if self.n_min < 1:
            problems.append(("n_min", f"n_min must be >= 1, got {self.n_min}"))
        if self.n_max < self.n_min:
            problems.append(("n_max", f"n_max ({self.n_max}) must be >= n_min ({self.n_min})"))
        if self.total_steps <= 0:
            problems.append(("total_steps", f"total_steps must be > 0, got {self.total_steps}"))
        if self.submit_time < 0:
            problems.append(("submit_time", f"submit_time must be >= 0, got {self.submit_time}"))
        return problems


class TalpAccumulator(BaseModel):
    """Compute and communication seconds accumulated since the last (re)start"""
    compute_time: float = 0.0
    comm_time: float = 0.0

    def ratio(self) -> Optional[float]:
        total = self.compute_time + self.comm_time
        if total <= 0:
            return None
        return self.compute_time / total

    def reset(self):
        self.compute_time = 0.0
        self.comm_time = 0.0


class Checkpoint(BaseModel):
    job_id: int
    step: int
    nodes: int
    # carried through the restart so the resumed process can query it
    last_action: str = "none"


class JobState(BaseModel):
    spec: JobSpec
    phase: JobPhase = JobPhase.QUEUED
    nodes: int = 0
    step: int = 0
    last_reconfig_step: Optional[int] = None
    pending_resize: Optional[int] = None
    talp: TalpAccumulator = Field(default_factory=TalpAccumulator)
    restart_count: int = 0

    @property
    def job_id(self) -> int:
        return self.spec.job_id

    @property
    def remaining_steps(self) -> int:
        return self.spec.total_steps - self.step

    def check_invariants(self) -> List[str]:
        problems = []
        spec = self.spec
        if self.phase == JobPhase.RUNNING and not (spec.n_min <= self.nodes <= spec.n_max):
            problems.append(
                f"job {spec.job_id}: running on {self.nodes} nodes outside [{spec.n_min}, {spec.n_max}]"
            )
        if self.phase in (JobPhase.QUEUED, JobPhase.FINISHED) and self.nodes != 0:
            problems.append(f"job {spec.job_id}: holds {self.nodes} nodes while {self.phase.value}")
        if not (0 <= self.step <= spec.total_steps):
            problems.append(f"job {spec.job_id}: step {self.step} outside [0, {spec.total_steps}]")
        if self.pending_resize is not None:
            if not (spec.n_min <= self.pending_resize <= spec.n_max):
                problems.append(f"job {spec.job_id}: pending resize {self.pending_resize} out of range")
            if self.pending_resize == self.nodes:
                problems.append(f"job {spec.job_id}: pending resize equals current allocation")
        if self.talp.compute_time < 0 or self.talp.comm_time < 0:
            problems.append(f"job {spec.job_id}: negative TALP accumulator")
        if self.restart_count < 0:
            problems.append(f"job {spec.job_id}: negative restart count")
        return problems
