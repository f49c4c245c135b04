from pydantic import BaseModel, ConfigDict, Field
from typing import Dict, List, Optional, Tuple, Union

from models.app_model import AppModel, CostModel
from models.cluster import StartMode
from models.job import JobSpec
from models.policy import PolicyConfig


class ClusterConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    total_compute_nodes: int = 31
    # compute nodes plus the controller node; used for total cost
    reserved_total_nodes: int = 32


class SchedulerConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: StartMode = StartMode.RESERVE_MIN
    reserve_depth: int = 1


class EngineConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    # steps run after the checkpoint before the processes exit; re-executed after restart
    shutdown_overrun_steps: int = 0


class WorkloadGenerator(BaseModel):
    model_config = ConfigDict(extra="forbid")

    count: int
    inter_arrival_seconds: float = 0.0
    node_range: Tuple[int, int]
    total_steps: int
    app_model_id: str = "stmv"
    start_time: float = 0.0


class WorkloadConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    jobs: List[JobSpec] = []
    generator: Optional[WorkloadGenerator] = None


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = "scenario"
    seed: int = 0
    cluster: ClusterConfig = Field(default_factory=ClusterConfig)
    app_models: Dict[str, AppModel] = Field(default_factory=lambda: {"stmv": AppModel()})
    cost_model: CostModel = Field(default_factory=CostModel)
    policy: PolicyConfig = Field(default_factory=PolicyConfig)
    scheduler: SchedulerConfig = Field(default_factory=SchedulerConfig)
    engine: EngineConfig = Field(default_factory=EngineConfig)
    workload: WorkloadConfig = Field(default_factory=WorkloadConfig)

    def job_specs(self) -> List[JobSpec]:
        """Explicit jobs followed by generated ones, ids continuing after the explicit ones"""
        specs = list(self.workload.jobs)
        generator = self.workload.generator
        if generator is not None:
            next_id = max((spec.job_id for spec in specs), default=0) + 1
            n_min, n_max = generator.node_range
            for index in range(generator.count):
                specs.append(
                    JobSpec(
                        job_id=next_id + index,
                        n_min=n_min,
                        n_max=n_max,
                        total_steps=generator.total_steps,
                        submit_time=generator.start_time + index * generator.inter_arrival_seconds,
                        app_model_id=generator.app_model_id,
                    )
                )
        return specs


class Violation(BaseModel):
    location: Tuple[Union[str, int], ...] = ()
    message: str
    job_id: Optional[int] = None
    line: Optional[int] = None

    @property
    def field(self) -> str:
        return ".".join(str(part) for part in self.location) or "<scenario>"

    def render(self, source: Optional[str] = None) -> str:
        prefix = source or "<scenario>"
        if self.line is not None:
            prefix = f"{prefix}:{self.line}"
        job = f" (job {self.job_id})" if self.job_id is not None else ""
        return f"{prefix}: {self.field}{job}: {self.message}"
