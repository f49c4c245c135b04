import itertools

import pytest

from models.cluster import ClusterState
from models.dmr import DmrAction
from models.errors import ContractViolationError
from models.job import Checkpoint, JobPhase, JobSpec, JobState
from models.policy import PolicyConfig
from models.trace import TraceKind
from services.app_model_service import advance
from services.dmr_service import DmrService, normalize_launch_args
from services.scheduler_service import SchedulerService


@pytest.fixture
def setup(stmv):
    """One 12-node job and one 2-node static job on 16 nodes, both running"""
    scheduler = SchedulerService(ClusterState.empty(16), {})
    big = JobState(spec=JobSpec(job_id=1, n_min=1, n_max=12, total_steps=5000))
    small = JobState(spec=JobSpec(job_id=2, n_min=2, n_max=2, total_steps=5000))
    scheduler.submit(big, 0.0)
    scheduler.submit(small, 0.0)
    scheduler.try_start(0.0)
    dmr = DmrService(scheduler, PolicyConfig())
    return dmr, scheduler, big, small


def test_normalize_launch_args():
    assert normalize_launch_args(["-s", "topol.tpr"]) == ["-s", "topol.tpr", "-cpi", "state.cpt", "-append"]
    already = ["-s", "topol.tpr", "-cpi", "other.cpt", "-append"]
    assert normalize_launch_args(already) == already
    assert normalize_launch_args([], "run.cpt") == ["-cpi", "run.cpt", "-append"]


def test_init_binds_policy_bounds(setup):
    dmr, _, big, _ = setup
    ctx = dmr.dmr_init(big, ["-s", "topol.tpr"])
    assert (ctx.policy.n_min, ctx.policy.n_max) == (1, 12)
    assert ctx.last_action == DmrAction.NONE
    assert "-cpi" in ctx.normalized_args


def test_init_twice_rejected(setup):
    dmr, _, big, _ = setup
    dmr.dmr_init(big)
    with pytest.raises(ContractViolationError):
        dmr.dmr_init(big)


def test_shrink_is_ready_at_the_same_sync_point(setup, stmv):
    dmr, scheduler, big, _ = setup
    ctx = dmr.dmr_init(big)
    advance(big, stmv, 500)
    decision = dmr.dmr_check(ctx, big, 500, 55.7)
    assert decision.target == 10
    assert ctx.ready_reconfig and ctx.ready_step == 500
    assert big.pending_resize == 10
    kinds = [event.kind for event in scheduler.events + dmr.events]
    assert TraceKind.RESIZE_DECIDED in kinds and TraceKind.RESIZE_GRANTED in kinds

    record = dmr.dmr_reconfigure(ctx, big)
    assert (record.kind, record.from_nodes, record.to_nodes) == (DmrAction.SHRUNK, 12, 10)
    assert dmr.dmr_get_last_action(ctx) == DmrAction.SHRUNK
    assert big.pending_resize is None
    assert not ctx.ready_reconfig


def test_check_off_sync_point_rejected(setup, stmv):
    dmr, _, big, _ = setup
    ctx = dmr.dmr_init(big)
    advance(big, stmv, 499)
    with pytest.raises(ContractViolationError):
        dmr.dmr_check(ctx, big, 499)


def test_reconfigure_without_ready_rejected(setup):
    dmr, _, big, _ = setup
    ctx = dmr.dmr_init(big)
    with pytest.raises(ContractViolationError):
        dmr.dmr_reconfigure(ctx, big)


def test_pending_expansion_becomes_ready_at_next_sync_point(stmv):
    scheduler = SchedulerService(ClusterState.empty(3), {})
    grower = JobState(spec=JobSpec(job_id=1, n_min=1, n_max=3, total_steps=5000))
    holder = JobState(spec=JobSpec(job_id=2, n_min=2, n_max=2, total_steps=5000))
    for job in (grower, holder):
        scheduler.submit(job, 0.0)
    scheduler.try_start(0.0)
    assert grower.nodes == 1 and holder.nodes == 2
    dmr = DmrService(scheduler, PolicyConfig())
    ctx = dmr.dmr_init(grower)

    advance(grower, stmv, 500)
    decision = dmr.dmr_check(ctx, grower, 500, 550.0)
    assert decision.target == 2
    assert not ctx.ready_reconfig
    assert scheduler.cluster.request_for(1).granted is False

    holder.phase = JobPhase.FINISHED
    holder.nodes = 0
    scheduler.finish(2, 600.0)
    assert scheduler.cluster.request_for(1).granted
    # the grant is only observed at the next synchronization point
    assert not ctx.ready_reconfig

    advance(grower, stmv, 500)
    dmr.dmr_check(ctx, grower, 1000, 1100.0)
    assert ctx.ready_reconfig and ctx.ready_step == 1000
    record = dmr.dmr_reconfigure(ctx, grower)
    assert record.kind == DmrAction.EXPANDED and record.to_nodes == 2


def test_finalize_lifecycle(setup, stmv):
    dmr, _, big, _ = setup
    ctx = dmr.dmr_init(big)
    with pytest.raises(ContractViolationError):
        dmr.dmr_finalize(ctx, big)
    big.phase = JobPhase.RESTARTING
    dmr.dmr_finalize(ctx, big)
    with pytest.raises(ContractViolationError):
        dmr.dmr_finalize(ctx, big)
    with pytest.raises(ContractViolationError):
        dmr.dmr_check(ctx, big, 500)

    restarted = dmr.dmr_init(big, checkpoint=Checkpoint(job_id=1, step=500, nodes=10, last_action="shrunk"))
    assert dmr.dmr_get_last_action(restarted) == DmrAction.SHRUNK


def test_finalize_at_finish_withdraws_outstanding_request(stmv):
    scheduler = SchedulerService(ClusterState.empty(3), {})
    grower = JobState(spec=JobSpec(job_id=1, n_min=1, n_max=3, total_steps=5000))
    holder = JobState(spec=JobSpec(job_id=2, n_min=2, n_max=2, total_steps=5000))
    for job in (grower, holder):
        scheduler.submit(job, 0.0)
    scheduler.try_start(0.0)
    dmr = DmrService(scheduler, PolicyConfig())
    ctx = dmr.dmr_init(grower)
    advance(grower, stmv, 500)
    dmr.dmr_check(ctx, grower, 500)
    assert scheduler.cluster.request_for(1) is not None

    grower.phase = JobPhase.FINISHED
    dmr.dmr_finalize(ctx, grower, 600.0)
    assert scheduler.cluster.request_for(1) is None
    assert grower.pending_resize is None


CALLS = ("init", "check", "reconfigure", "finalize")


@pytest.mark.parametrize("order", list(itertools.permutations(CALLS)))
def test_only_the_documented_call_order_succeeds(order, stmv):
    scheduler = SchedulerService(ClusterState.empty(16), {})
    job = JobState(spec=JobSpec(job_id=1, n_min=1, n_max=12, total_steps=5000))
    scheduler.submit(job, 0.0)
    scheduler.try_start(0.0)
    advance(job, stmv, 500)
    dmr = DmrService(scheduler, PolicyConfig())
    ctx = None
    completed = []
    try:
        for call in order:
            if call == "init":
                ctx = dmr.dmr_init(job)
            elif ctx is None:
                raise ContractViolationError("no context")
            elif call == "check":
                dmr.dmr_check(ctx, job, 500)
            elif call == "reconfigure":
                dmr.dmr_reconfigure(ctx, job)
            else:
                job.phase = JobPhase.RESTARTING
                dmr.dmr_finalize(ctx, job)
            completed.append(call)
    except ContractViolationError:
        pass
    assert (tuple(completed) == CALLS) == (order == CALLS)
