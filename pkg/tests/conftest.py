from functools import lru_cache
from pathlib import Path
from typing import List, Tuple

import pytest

from models.app_model import AppModel
from models.job import JobPhase, JobSpec, JobState
from models.policy import PolicyConfig
from models.scenario import ScenarioConfig, WorkloadConfig
from models.trace import TraceEvent
from services.engine_service import EngineService
from services.scenario_service import load_scenario

REPO_ROOT = Path(__file__).resolve().parent.parent
SCENARIO_DIR = REPO_ROOT / "scenarios"


def running_job(n_min: int = 1, n_max: int = 12, nodes: int = 4, total_steps: int = 5000,
                job_id: int = 1, step: int = 0) -> JobState:
    spec = JobSpec(job_id=job_id, n_min=n_min, n_max=n_max, total_steps=total_steps)
    return JobState(spec=spec, phase=JobPhase.RUNNING, nodes=nodes, step=step)


def build_scenario(jobs: List[Tuple[int, int, int]], total_nodes: int = 31, submit_times=None,
                   **sections) -> ScenarioConfig:
    """jobs are (n_min, n_max, total_steps) triples with ids 1..n"""
    submit_times = submit_times or [0.0] * len(jobs)
    specs = [
        JobSpec(job_id=index + 1, n_min=n_min, n_max=n_max, total_steps=steps, submit_time=submit)
        for index, ((n_min, n_max, steps), submit) in enumerate(zip(jobs, submit_times))
    ]
    data = {
        "name": "test",
        "cluster": {"total_compute_nodes": total_nodes, "reserved_total_nodes": total_nodes + 1},
        "workload": WorkloadConfig(jobs=specs),
    }
    data.update(sections)
    return ScenarioConfig(**data)


@lru_cache(maxsize=None)
def golden_scenario(name: str) -> ScenarioConfig:
    return load_scenario(str(SCENARIO_DIR / f"{name}.yaml"))


@lru_cache(maxsize=None)
def _golden_run(name: str):
    engine = EngineService(golden_scenario(name), debug_checks=True)
    trace = engine.run()
    return tuple(trace), tuple(engine.action_records)


def golden_trace(name: str) -> List[TraceEvent]:
    return list(_golden_run(name)[0])


def golden_actions(name: str):
    return list(_golden_run(name)[1])


@pytest.fixture
def stmv():
    return AppModel()


@pytest.fixture
def policy_cfg():
    return PolicyConfig(n_min=1, n_max=12)
