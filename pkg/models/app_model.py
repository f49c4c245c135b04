from pydantic import BaseModel, ConfigDict
from typing import List
from enum import Enum


class CommShape(str, Enum):
    LINEAR = "linear"
    LOGARITHMIC = "logarithmic"


class AppModel(BaseModel):
    """Per-timestep cost model of the malleable application.

    compute_part(n) = work_per_step / n
    comm_part(n)    = 0 for n == 1, otherwise comm_base + comm_per_node * f(n)
    with f(n) = n - 1 (linear) or log2(n) (logarithmic).
    """
    model_config = ConfigDict(extra="forbid")

    work_per_step: float = 1.10
    comm_base: float = 0.018
    comm_per_node: float = 0.0005
    comm_shape: CommShape = CommShape.LOGARITHMIC
    nstlist: int = 100
    checkpoint_write_cost: float = 0.0

    def violations(self) -> List[str]:
        problems = []
        if self.work_per_step <= 0:
            problems.append("work_per_step must be > 0")
        if self.comm_base < 0:
            problems.append("comm_base must be >= 0")
        if self.comm_per_node < 0:
            problems.append("comm_per_node must be >= 0")
        if self.nstlist < 1:
            problems.append("nstlist must be >= 1")
        if self.checkpoint_write_cost < 0:
            problems.append("checkpoint_write_cost must be >= 0")
        return problems


class CostMode(str, Enum):
    DETERMINISTIC = "deterministic"
    STOCHASTIC = "stochastic"


class DurationDistribution(BaseModel):
    """End-to-end reconfiguration time; deterministic mode uses the mean"""
    model_config = ConfigDict(extra="forbid")

    mean: float
    stddev: float = 0.0
    min: float
    max: float

    def violations(self) -> List[str]:
        problems = []
        if self.min <= 0:
            problems.append("min must be > 0")
        if self.stddev < 0:
            problems.append("stddev must be >= 0")
        if not (self.min <= self.mean <= self.max):
            problems.append("expected min <= mean <= max")
        return problems


class CostModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    expand_cost: DurationDistribution = DurationDistribution(mean=25.55, stddev=9.99, min=15.40, max=42.44)
    shrink_cost: DurationDistribution = DurationDistribution(mean=9.43, stddev=1.63, min=7.83, max=12.34)
    mode: CostMode = CostMode.DETERMINISTIC
