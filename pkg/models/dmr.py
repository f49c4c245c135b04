from pydantic import BaseModel
from typing import List
from enum import Enum

from models.policy import PolicyConfig

DEFAULT_CHECKPOINT_FILE = "state.cpt"


class DmrAction(str, Enum):
    NONE = "none"
    EXPANDED = "expanded"
    SHRUNK = "shrunk"


class DmrContext(BaseModel):
    job_id: int
    policy: PolicyConfig
    last_action: DmrAction = DmrAction.NONE
    ready_reconfig: bool = False
    normalized_args: List[str] = []
    # step of the synchronization point at which ready_reconfig was raised
    ready_step: int = 0
    finalized: bool = False


class ActionRecord(BaseModel):
    job_id: int
    kind: DmrAction
    from_nodes: int
    to_nodes: int
    step: int
