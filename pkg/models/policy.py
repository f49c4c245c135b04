from pydantic import BaseModel, ConfigDict
from typing import List, Optional
from enum import Enum


class ExpandRounding(str, Enum):
    CEIL = "ceil"
    HALF_UP = "half_up"


class PolicyConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    ce_target: float = 0.95
    decision_interval: int = 500
    inhibitor_delay: int = 500
    # rank bounds; filled from the JobSpec when a job is bound to the policy
    n_min: int = 1
    n_max: int = 1
    expand_rounding: ExpandRounding = ExpandRounding.CEIL

    def for_job(self, n_min: int, n_max: int) -> "PolicyConfig":
        return self.model_copy(update={"n_min": n_min, "n_max": n_max})

    def violations(self) -> List[str]:
        problems = []
        if not (0 < self.ce_target < 1):
            problems.append(f"ce_target must be in (0, 1), got {self.ce_target}")
        if self.decision_interval < 1:
            problems.append(f"decision_interval must be >= 1, got {self.decision_interval}")
        if self.inhibitor_delay < 0:
            problems.append(f"inhibitor_delay must be >= 0, got {self.inhibitor_delay}")
        return problems


class DecisionKind(str, Enum):
    NO_CHANGE = "no_change"
    RESIZE = "resize"


class Decision(BaseModel):
    kind: DecisionKind = DecisionKind.NO_CHANGE
    target: Optional[int] = None

    @classmethod
    def no_change(cls) -> "Decision":
        return cls()

    @classmethod
    def resize(cls, target: int) -> "Decision":
        return cls(kind=DecisionKind.RESIZE, target=target)

    @property
    def is_resize(self) -> bool:
        return self.kind == DecisionKind.RESIZE
