"""CE_POLICY reconfiguration decisions and the inhibitor gate."""
import math
from typing import Optional

from models.job import JobState
from models.policy import Decision, ExpandRounding, PolicyConfig
from services.app_model_service import cumulative_ce


def round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def ce_policy_target_ranks(n_cur: int, ce: float, cfg: PolicyConfig) -> int:
    """
    Rank count that moves the job linearly toward the CE target.

    n_new = n_cur * ce / ce_target, clamped to [n_min, n_max]. Below or at the
    target the value is rounded half-up; strictly above it, the expand_rounding
    setting applies (ceil grows by at least one rank).
    """
    raw = n_cur * ce / cfg.ce_target
    if ce > cfg.ce_target and cfg.expand_rounding == ExpandRounding.CEIL:
        target = math.ceil(raw)
    else:
        target = round_half_up(raw)
    return max(cfg.n_min, min(cfg.n_max, target))


def inhibitor_allows(last_reconfig_step: Optional[int], current_step: int, cfg: PolicyConfig) -> bool:
    if last_reconfig_step is None:
        return True
    return current_step - last_reconfig_step >= cfg.inhibitor_delay


class ReconfigurationPolicy:
    """Base class for DMR reconfiguration policies evaluated at synchronization points"""

    name = "base"

    def decide(self, job: JobState, cfg: PolicyConfig) -> Decision:
        raise NotImplementedError


class CePolicy(ReconfigurationPolicy):
    """Communication-efficiency policy: resize toward the target CE"""

    name = "ce_policy"

    def decide(self, job: JobState, cfg: PolicyConfig) -> Decision:
        # one outstanding request per job
        if job.pending_resize is not None:
            return Decision.no_change()
        ce = cumulative_ce(job)
        if ce is None:
            return Decision.no_change()
        if not inhibitor_allows(job.last_reconfig_step, job.step, cfg):
            return Decision.no_change()
        bound = cfg.for_job(job.spec.n_min, job.spec.n_max)
        target = ce_policy_target_ranks(job.nodes, ce, bound)
        if target == job.nodes:
            return Decision.no_change()
        return Decision.resize(target)


def decide(job: JobState, cfg: PolicyConfig) -> Decision:
    return CePolicy().decide(job, cfg)
