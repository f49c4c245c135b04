import logging
from typing import Callable, Dict, List, Optional

from models.cluster import ResizeOutcome
from models.dmr import DEFAULT_CHECKPOINT_FILE, ActionRecord, DmrAction, DmrContext
from models.errors import ContractViolationError
from models.job import Checkpoint, JobPhase, JobState
from models.policy import Decision, PolicyConfig
from models.trace import TraceEvent, TraceKind
from services.app_model_service import cumulative_ce
from services.policy_service import CePolicy, ReconfigurationPolicy
from services.scheduler_service import ReleaseResult, SchedulerService

logger = logging.getLogger(__name__)


def normalize_launch_args(args: List[str], checkpoint_file: str = DEFAULT_CHECKPOINT_FILE) -> List[str]:
    """Append the checkpoint-resume and output-append flags when they are missing"""
    normalized = list(args)
    if "-cpi" not in normalized:
        normalized.extend(["-cpi", checkpoint_file])
    if "-append" not in normalized:
        normalized.append("-append")
    return normalized


class DmrService:
    """The DMR middleware as the application sees it: init, check, reconfigure, finalize"""

    def __init__(
        self,
        scheduler: SchedulerService,
        policy_config: PolicyConfig,
        policy: Optional[ReconfigurationPolicy] = None,
        emit: Optional[Callable[[TraceEvent], None]] = None,
    ):
        self.scheduler = scheduler
        self.policy_config = policy_config
        self.policy = policy or CePolicy()
        self.events: List[TraceEvent] = []
        self._emit = emit or self.events.append
        self.contexts: Dict[int, DmrContext] = {}
        self.action_records: List[ActionRecord] = []

    def _live(self, ctx: DmrContext) -> DmrContext:
        if ctx.finalized or self.contexts.get(ctx.job_id) is not ctx:
            raise ContractViolationError(f"job {ctx.job_id}: DMR context used after finalize")
        return ctx

    def dmr_init(self, job: JobState, args: Optional[List[str]] = None,
                 checkpoint: Optional[Checkpoint] = None) -> DmrContext:
        if job.job_id in self.contexts:
            raise ContractViolationError(f"job {job.job_id}: dmr_init called on a live context")
        last_action = DmrAction(checkpoint.last_action) if checkpoint is not None else DmrAction.NONE
        ctx = DmrContext(
            job_id=job.job_id,
            policy=self.policy_config.for_job(job.spec.n_min, job.spec.n_max),
            last_action=last_action,
            normalized_args=normalize_launch_args(args or []),
        )
        self.contexts[job.job_id] = ctx
        return ctx

    def dmr_check(self, ctx: DmrContext, job: JobState, step: int, time: float = 0.0) -> Decision:
        """
        Synchronization-point check.

        A grant that arrived since the last synchronization point raises
        ready_reconfig now. Otherwise the policy is evaluated and a resize,
        if any, is requested from the scheduler; an immediate grant is also
        ready at this point. The application keeps running in every case.
        """
        self._live(ctx)
        if step % ctx.policy.decision_interval != 0:
            raise ContractViolationError(
                f"job {job.job_id}: step {step} is not a synchronization point"
            )
        if ctx.ready_reconfig:
            return Decision.no_change()

        request = self.scheduler.cluster.request_for(job.job_id)
        if request is not None:
            if request.granted:
                ctx.ready_reconfig = True
                ctx.ready_step = step
                return Decision.resize(request.target)
            return Decision.no_change()

        decision = self.policy.decide(job, ctx.policy)
        if not decision.is_resize:
            return decision

        ce = cumulative_ce(job)
        self._emit(TraceEvent(
            time=time, job_id=job.job_id, kind=TraceKind.RESIZE_DECIDED,
            payload={"step": step, "current": job.nodes, "target": decision.target, "ce": ce},
        ))
        logger.debug(f"t={time:.2f} job {job.job_id} step {step}: CE {ce:.4f} -> resize {job.nodes}->{decision.target}")
        job.pending_resize = decision.target
        outcome = self.scheduler.request_resize(job.job_id, decision.target, time)
        if outcome == ResizeOutcome.GRANTED_IMMEDIATELY:
            ctx.ready_reconfig = True
            ctx.ready_step = step
        return decision

    def dmr_reconfigure(self, ctx: DmrContext, job: JobState) -> ActionRecord:
        self._live(ctx)
        if not ctx.ready_reconfig:
            raise ContractViolationError(f"job {job.job_id}: dmr_reconfigure without a ready reconfiguration")
        request = self.scheduler.cluster.request_for(job.job_id)
        if request is None or not request.granted:
            raise ContractViolationError(f"job {job.job_id}: ready flag set without a granted request")
        kind = DmrAction.EXPANDED if request.target > job.nodes else DmrAction.SHRUNK
        record = ActionRecord(
            job_id=job.job_id, kind=kind, from_nodes=job.nodes, to_nodes=request.target, step=job.step,
        )
        ctx.last_action = kind
        ctx.ready_reconfig = False
        job.pending_resize = None
        self.action_records.append(record)
        return record

    def dmr_get_last_action(self, ctx: DmrContext) -> DmrAction:
        return ctx.last_action

    def dmr_finalize(self, ctx: DmrContext, job: JobState, time: float = 0.0) -> ReleaseResult:
        if ctx.finalized:
            raise ContractViolationError(f"job {job.job_id}: dmr_finalize called twice")
        self._live(ctx)
        if job.phase not in (JobPhase.FINISHED, JobPhase.CHECKPOINT_PENDING, JobPhase.RESTARTING):
            raise ContractViolationError(
                f"job {job.job_id}: dmr_finalize while {job.phase.value}"
            )
        released = ReleaseResult()
        if job.phase == JobPhase.FINISHED:
            released = self.scheduler.withdraw(job.job_id, time)
            job.pending_resize = None
        ctx.finalized = True
        del self.contexts[job.job_id]
        return released
