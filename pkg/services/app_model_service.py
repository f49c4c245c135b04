"""Synthetic malleable application: step timing, TALP-style accounting and checkpoints."""
import math
from typing import Optional, Tuple

from models.app_model import AppModel, CommShape
from models.errors import ContractViolationError
from models.job import Checkpoint, JobPhase, JobState


def _require_nodes(n: int):
    if n < 1:
        raise ContractViolationError(f"node count must be >= 1, got {n}")


def compute_part(model: AppModel, n: int) -> float:
    _require_nodes(n)
    return model.work_per_step / n


def comm_part(model: AppModel, n: int) -> float:
    _require_nodes(n)
    if n == 1:
        return 0.0
    if model.comm_shape == CommShape.LINEAR:
        return model.comm_base + model.comm_per_node * (n - 1)
    return model.comm_base + model.comm_per_node * math.log2(n)


def step_time(model: AppModel, n: int) -> float:
    """Wall seconds of one timestep on n nodes"""
    return compute_part(model, n) + comm_part(model, n)


def instantaneous_ce(model: AppModel, n: int) -> float:
    return compute_part(model, n) / step_time(model, n)


def advance(job: JobState, model: AppModel, steps: int) -> float:
    """
    Run `steps` timesteps at the job's current allocation.

    Args:
        job: a Running job; its step counter and TALP accumulator are updated
        model: cost model of the job's application
        steps: number of timesteps, must not overrun total_steps

    Returns:
        Elapsed wall seconds
    """
    if job.phase not in (JobPhase.RUNNING, JobPhase.CHECKPOINT_PENDING):
        raise ContractViolationError(f"job {job.job_id} cannot advance while {job.phase.value}")
    if steps < 0 or job.step + steps > job.spec.total_steps:
        raise ContractViolationError(
            f"job {job.job_id}: advancing {steps} steps from {job.step} overruns {job.spec.total_steps}"
        )
    compute = steps * compute_part(model, job.nodes)
    comm = steps * comm_part(model, job.nodes)
    job.step += steps
    job.talp.compute_time += compute
    job.talp.comm_time += comm
    return steps * step_time(model, job.nodes)


def cumulative_ce(job: JobState) -> Optional[float]:
    """TALP communication efficiency since the last (re)start, None when there is no sample"""
    return job.talp.ratio()


def next_neighbor_search_step(current_step: int, nstlist: int) -> int:
    if nstlist < 1:
        raise ContractViolationError(f"nstlist must be >= 1, got {nstlist}")
    return (current_step // nstlist + 1) * nstlist


def checkpoint_step_for(current_step: int, nstlist: int) -> int:
    """Step at which a checkpoint requested now is written: this step if it is a neighbor-search step"""
    if current_step % nstlist == 0:
        return current_step
    return next_neighbor_search_step(current_step, nstlist)


def write_checkpoint(job: JobState, model: AppModel, last_action: str = "none") -> Tuple[Checkpoint, float]:
    if job.step != 0 and job.step % model.nstlist != 0:
        raise ContractViolationError(
            f"job {job.job_id}: step {job.step} is not a neighbor-search step (nstlist={model.nstlist})"
        )
    record = Checkpoint(job_id=job.job_id, step=job.step, nodes=job.nodes, last_action=last_action)
    return record, model.checkpoint_write_cost


def restore_checkpoint(job: JobState, checkpoint: Checkpoint, nodes: int):
    """Resume from a checkpoint on a new allocation; the TALP accumulator starts over"""
    if checkpoint.job_id != job.job_id:
        raise ContractViolationError(f"checkpoint of job {checkpoint.job_id} restored into job {job.job_id}")
    if checkpoint.step < job.step:
        raise ContractViolationError(
            f"job {job.job_id}: checkpoint at {checkpoint.step} is behind progress {job.step}"
        )
    job.step = checkpoint.step
    job.nodes = nodes
    job.talp.reset()
