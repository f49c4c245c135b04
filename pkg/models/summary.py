from pydantic import BaseModel
from typing import Dict, List

SUMMARY_SCHEMA = "dmrsim.summary"
SUMMARY_VERSION = 1


class ReconfigStats(BaseModel):
    count: int = 0
    total: float = 0.0
    mean: float = 0.0
    stddev: float = 0.0
    # False when fewer than two samples make the sample stddev undefined
    stddev_defined: bool = False
    min: float = 0.0
    max: float = 0.0


class WorkloadSummary(BaseModel):
    schema_name: str = SUMMARY_SCHEMA
    version: int = SUMMARY_VERSION
    workload: str
    seed: int = 0
    overrides: List[str] = []
    reserved_nodes: int
    makespan: float
    net_cost: float
    total_cost: float
    reconfig_stats: Dict[str, ReconfigStats]
    overhead_fraction: float
