from pydantic import BaseModel
from typing import Any, Dict, Optional
from enum import Enum

TRACE_SCHEMA = "dmrsim.trace"
TRACE_VERSION = 1


class TraceKind(str, Enum):
    SUBMIT = "Submit"
    START = "Start"
    STEP_PROGRESS = "StepProgress"
    CE_SAMPLE = "CeSample"
    RESIZE_DECIDED = "ResizeDecided"
    RESIZE_GRANTED = "ResizeGranted"
    RESIZE_PENDING_RESOURCES = "ResizePendingResources"
    CHECKPOINT_WRITTEN = "CheckpointWritten"
    TERMINATE = "Terminate"
    RESTART = "Restart"
    FINISH = "Finish"
    NODES_ALLOCATED_TOTAL = "NodesAllocatedTotal"


class TraceEvent(BaseModel):
    time: float
    # None for cluster-wide records (NodesAllocatedTotal)
    job_id: Optional[int] = None
    kind: TraceKind
    payload: Dict[str, Any] = {}

    def to_record(self) -> Dict[str, Any]:
        return {
            "time": self.time,
            "job_id": self.job_id,
            "kind": self.kind.value,
            "payload": self.payload,
        }


class TraceHeader(BaseModel):
    schema_name: str = TRACE_SCHEMA
    version: int = TRACE_VERSION
    scenario: str = ""
    seed: int = 0
    overrides: list = []
    reserved_nodes: int = 32
    decision_interval: int = 500
