import math

import pytest

from models.app_model import AppModel, CommShape
from models.errors import ContractViolationError
from models.job import Checkpoint, JobPhase
from services.app_model_service import (
    advance,
    checkpoint_step_for,
    comm_part,
    compute_part,
    cumulative_ce,
    instantaneous_ce,
    next_neighbor_search_step,
    restore_checkpoint,
    step_time,
    write_checkpoint,
)
from tests.conftest import running_job


def test_single_node_has_no_communication(stmv):
    assert comm_part(stmv, 1) == 0.0
    assert step_time(stmv, 1) == pytest.approx(1.10)
    assert instantaneous_ce(stmv, 1) == 1.0


def test_calibrated_step_times(stmv):
    assert step_time(stmv, 2) == pytest.approx(0.5685)
    assert step_time(stmv, 12) == pytest.approx(0.1114592, rel=1e-6)
    assert 5000 * step_time(stmv, 2) == pytest.approx(2842.5)


def test_calibrated_ce_places_the_stable_band(stmv):
    assert instantaneous_ce(stmv, 2) > 0.95
    assert instantaneous_ce(stmv, 4) < 0.95
    assert 0.752 <= instantaneous_ce(stmv, 12) <= 0.831
    assert round(12 * instantaneous_ce(stmv, 12) / 0.95) == 10


def test_ce_decreases_with_nodes(stmv):
    values = [instantaneous_ce(stmv, n) for n in range(1, 33)]
    assert all(later < earlier for earlier, later in zip(values, values[1:]))


def test_linear_shape():
    model = AppModel(work_per_step=1.0, comm_base=0.01, comm_per_node=0.002, comm_shape=CommShape.LINEAR)
    assert comm_part(model, 5) == pytest.approx(0.01 + 0.002 * 4)
    assert compute_part(model, 5) == pytest.approx(0.2)


def test_logarithmic_shape():
    model = AppModel(comm_base=0.0, comm_per_node=0.01)
    assert comm_part(model, 8) == pytest.approx(0.03)
    assert comm_part(model, 2) == pytest.approx(0.01)


def test_zero_nodes_rejected(stmv):
    with pytest.raises(ContractViolationError):
        step_time(stmv, 0)


def test_advance_accumulates_talp(stmv):
    job = running_job(nodes=4)
    elapsed = advance(job, stmv, 500)
    assert job.step == 500
    assert elapsed == pytest.approx(500 * step_time(stmv, 4))
    assert cumulative_ce(job) == pytest.approx(instantaneous_ce(stmv, 4))


def test_advance_rejects_overrun_and_wrong_phase(stmv):
    job = running_job(total_steps=100)
    with pytest.raises(ContractViolationError):
        advance(job, stmv, 101)
    job.phase = JobPhase.RESTARTING
    with pytest.raises(ContractViolationError):
        advance(job, stmv, 1)


def test_cumulative_ce_is_none_without_samples():
    assert cumulative_ce(running_job()) is None


@pytest.mark.parametrize("nodes,steps", [(1, 37), (4, 250), (12, 1000)])
def test_advance_is_additive(stmv, nodes, steps):
    bulk = running_job(nodes=nodes)
    stepwise = running_job(nodes=nodes)
    elapsed = advance(bulk, stmv, steps)
    total = sum(advance(stepwise, stmv, 1) for _ in range(steps))
    assert bulk.step == stepwise.step == steps
    assert elapsed == pytest.approx(total, rel=1e-9)
    assert bulk.talp.compute_time == pytest.approx(stepwise.talp.compute_time, rel=1e-9)
    assert bulk.talp.comm_time == pytest.approx(stepwise.talp.comm_time, rel=1e-9)


def test_cumulative_ce_blends_allocations_by_time(stmv):
    job = running_job(nodes=4)
    first = advance(job, stmv, 300)
    job.nodes = 12
    second = advance(job, stmv, 200)
    blended = (first * instantaneous_ce(stmv, 4) + second * instantaneous_ce(stmv, 12)) / (first + second)
    assert cumulative_ce(job) == pytest.approx(blended, rel=1e-9)
    assert instantaneous_ce(stmv, 12) < cumulative_ce(job) < instantaneous_ce(stmv, 4)

    checkpoint, _ = write_checkpoint(job, stmv)
    restore_checkpoint(job, checkpoint, nodes=10)
    assert cumulative_ce(job) is None
    advance(job, stmv, 100)
    assert cumulative_ce(job) == pytest.approx(instantaneous_ce(stmv, 10))


def test_neighbor_search_steps():
    assert next_neighbor_search_step(1500, 100) == 1600
    assert next_neighbor_search_step(1510, 100) == 1600
    assert checkpoint_step_for(1500, 100) == 1500
    assert checkpoint_step_for(1510, 100) == 1600
    with pytest.raises(ContractViolationError):
        next_neighbor_search_step(10, 0)


def test_checkpoint_only_on_neighbor_search_step(stmv):
    job = running_job(nodes=12)
    advance(job, stmv, 150)
    with pytest.raises(ContractViolationError):
        write_checkpoint(job, stmv)
    advance(job, stmv, 50)
    checkpoint, cost = write_checkpoint(job, stmv, last_action="shrunk")
    assert checkpoint == Checkpoint(job_id=1, step=200, nodes=12, last_action="shrunk")
    assert cost == 0.0


def test_restore_resets_talp_and_sets_nodes(stmv):
    job = running_job(nodes=12)
    advance(job, stmv, 200)
    checkpoint, _ = write_checkpoint(job, stmv)
    restore_checkpoint(job, checkpoint, nodes=10)
    assert job.nodes == 10
    assert job.step == 200
    assert cumulative_ce(job) is None


def test_restore_rejects_stale_or_foreign_checkpoint(stmv):
    job = running_job()
    advance(job, stmv, 300)
    with pytest.raises(ContractViolationError):
        restore_checkpoint(job, Checkpoint(job_id=1, step=200, nodes=4), nodes=4)
    with pytest.raises(ContractViolationError):
        restore_checkpoint(job, Checkpoint(job_id=2, step=300, nodes=4), nodes=4)


def test_app_model_violations():
    model = AppModel(work_per_step=0, nstlist=0)
    problems = model.violations()
    assert any("work_per_step" in problem for problem in problems)
    assert any("nstlist" in problem for problem in problems)
    assert math.isclose(AppModel().work_per_step, 1.10)
