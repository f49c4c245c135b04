from pydantic import BaseModel
from typing import Dict, List, Optional
from enum import Enum


class StartMode(str, Enum):
    GREEDY = "greedy"
    RESERVE_MIN = "reserve-min"


class ResizeOutcome(str, Enum):
    GRANTED_IMMEDIATELY = "granted_immediately"
    PENDING = "pending"


class ResizeRequest(BaseModel):
    job_id: int
    target: int
    current: int
    granted: bool = False
    # nodes held back from free_nodes for an expansion until it is applied
    earmarked: int = 0
    requested_at: float = 0.0
    granted_at: Optional[float] = None

    @property
    def is_expansion(self) -> bool:
        return self.target > self.current


class ClusterState(BaseModel):
    """Compute-node bookkeeping of the resource manager.

    total_nodes counts compute nodes only; the controller node is part of
    the reservation used for total-cost accounting but is never allocated.
    """
    total_nodes: int
    free_nodes: int
    queue: List[int] = []
    pending_resizes: List[ResizeRequest] = []
    allocations: Dict[int, int] = {}

    @classmethod
    def empty(cls, total_nodes: int) -> "ClusterState":
        return cls(total_nodes=total_nodes, free_nodes=total_nodes)

    @property
    def earmarked_nodes(self) -> int:
        return sum(request.earmarked for request in self.pending_resizes)

    @property
    def allocated_nodes(self) -> int:
        return self.total_nodes - self.free_nodes

    def request_for(self, job_id: int) -> Optional[ResizeRequest]:
        for request in self.pending_resizes:
            if request.job_id == job_id:
                return request
        return None
