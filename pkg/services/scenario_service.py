"""Scenario files: YAML loading with line-aware diagnostics, overrides and validation."""
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import yaml
from pydantic import ValidationError

from models.errors import ScenarioError
from models.scenario import ScenarioConfig, Violation

logger = logging.getLogger(__name__)


def parse_override(override: str) -> Tuple[List[str], Any]:
    """Split 'a.b.c=value'; the value is read as a YAML scalar"""
    if "=" not in override:
        raise ScenarioError(f"override '{override}' is not of the form key=value")
    key, raw = override.split("=", 1)
    path = [part for part in key.strip().split(".") if part]
    if not path:
        raise ScenarioError(f"override '{override}' has an empty key")
    try:
        value = yaml.safe_load(raw) if raw.strip() else None
    except yaml.YAMLError as e:
        raise ScenarioError(f"override '{override}': cannot parse value: {e}")
    return path, value


def apply_overrides(data: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """Set dotted-path keys in the raw scenario mapping; list items are addressed by index"""
    for override in overrides:
        path, value = parse_override(override)
        node: Any = data
        for part in path[:-1]:
            node = _descend(node, part, override, create=True)
        last = path[-1]
        if isinstance(node, list):
            node[_index(node, last, override)] = value
        elif isinstance(node, dict):
            node[last] = value
        else:
            raise ScenarioError(f"override '{override}': '{last}' does not address a mapping or list")
        logger.debug(f"override {'.'.join(path)} = {value!r}")
    return data


def _index(node: list, part: str, override: str) -> int:
    try:
        index = int(part)
    except ValueError:
        raise ScenarioError(f"override '{override}': '{part}' is not a list index")
    if not (-len(node) <= index < len(node)):
        raise ScenarioError(f"override '{override}': index {index} out of range")
    return index


def _descend(node: Any, part: str, override: str, create: bool = False) -> Any:
    if isinstance(node, list):
        return node[_index(node, part, override)]
    if isinstance(node, dict):
        if part not in node or node[part] is None:
            if not create:
                raise ScenarioError(f"override '{override}': unknown key '{part}'")
            node[part] = {}
        return node[part]
    raise ScenarioError(f"override '{override}': '{part}' does not address a mapping or list")


def line_of(root: Optional[yaml.Node], location: Sequence[Any]) -> Optional[int]:
    """1-based line of the deepest node reachable along a field location"""
    if root is None:
        return None
    node = root
    for part in location:
        child = None
        if isinstance(node, yaml.MappingNode):
            for key_node, value_node in node.value:
                if key_node.value == str(part):
                    child = value_node
                    break
        elif isinstance(node, yaml.SequenceNode) and isinstance(part, int):
            if 0 <= part < len(node.value):
                child = node.value[part]
        if child is None:
            break
        node = child
    return node.start_mark.line + 1


def _job_id_at(data: Dict[str, Any], location: Sequence[Any]) -> Optional[int]:
    if len(location) >= 3 and tuple(location[:2]) == ("workload", "jobs") and isinstance(location[2], int):
        try:
            return int(data["workload"]["jobs"][location[2]]["job_id"])
        except (KeyError, IndexError, TypeError, ValueError):
            return None
    return None


def parse_scenario(data: Dict[str, Any], source: Optional[str] = None,
                   root: Optional[yaml.Node] = None) -> ScenarioConfig:
    """Build and validate a scenario; every violation is reported, not only the first"""
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a YAML mapping", source=source)
    try:
        scenario = ScenarioConfig(**data)
    except ValidationError as e:
        violations = [
            Violation(
                location=tuple(error["loc"]),
                message=error["msg"],
                job_id=_job_id_at(data, error["loc"]),
                line=line_of(root, error["loc"]),
            )
            for error in e.errors()
        ]
        raise ScenarioError("scenario failed to parse", violations, source=source)

    violations = validate_scenario(scenario)
    if violations:
        for violation in violations:
            violation.line = line_of(root, violation.location)
        raise ScenarioError("scenario is invalid", violations, source=source)
    return scenario


def load_scenario(path: str, overrides: Sequence[str] = ()) -> ScenarioConfig:
    """
    Read a scenario file and apply command-line overrides.

    Args:
        path: YAML scenario file
        overrides: "dotted.key=value" strings, applied in order

    Raises:
        ScenarioError: unreadable file, bad YAML or any validation violation,
            with file:line locations where the field exists in the file
    """
    scenario_file = Path(path)
    if not scenario_file.is_file():
        raise ScenarioError(f"scenario file not found: {path}")
    text = scenario_file.read_text()
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as e:
        raise ScenarioError(f"invalid YAML syntax: {e}", source=str(path))
    if isinstance(data, dict):
        data.setdefault("name", scenario_file.stem)
    data = apply_overrides(data, overrides)
    scenario = parse_scenario(data, source=str(path), root=root)
    logger.info(f"loaded scenario '{scenario.name}' from {path} ({len(scenario.job_specs())} jobs)")
    return scenario


def dump_scenario(scenario: ScenarioConfig) -> str:
    return yaml.safe_dump(scenario.model_dump(mode="json"), sort_keys=False)


def validate_scenario(scenario: ScenarioConfig) -> List[Violation]:
    """All semantic violations of a parsed scenario, as data"""
    violations: List[Violation] = []

    def add(location: Tuple[Any, ...], message: str, job_id: Optional[int] = None):
        violations.append(Violation(location=location, message=message, job_id=job_id))

    cluster = scenario.cluster
    if cluster.total_compute_nodes < 1:
        add(("cluster", "total_compute_nodes"), f"must be >= 1, got {cluster.total_compute_nodes}")
    if cluster.reserved_total_nodes < cluster.total_compute_nodes:
        add(("cluster", "reserved_total_nodes"),
            f"must be >= total_compute_nodes ({cluster.total_compute_nodes}), got {cluster.reserved_total_nodes}")

    if not scenario.app_models:
        add(("app_models",), "at least one application model is required")
    for model_id, model in scenario.app_models.items():
        for message in model.violations():
            add(("app_models", model_id), message)

    for name in ("expand_cost", "shrink_cost"):
        for message in getattr(scenario.cost_model, name).violations():
            add(("cost_model", name), message)

    for message in scenario.policy.violations():
        add(("policy",), message)
    if scenario.scheduler.reserve_depth < 0:
        add(("scheduler", "reserve_depth"), f"must be >= 0, got {scenario.scheduler.reserve_depth}")
    if scenario.engine.shutdown_overrun_steps < 0:
        add(("engine", "shutdown_overrun_steps"),
            f"must be >= 0, got {scenario.engine.shutdown_overrun_steps}")

    generator = scenario.workload.generator
    if generator is not None:
        if generator.count < 0:
            add(("workload", "generator", "count"), f"must be >= 0, got {generator.count}")
        if generator.inter_arrival_seconds < 0:
            add(("workload", "generator", "inter_arrival_seconds"), "must be >= 0")

    explicit = len(scenario.workload.jobs)
    seen = set()
    for index, spec in enumerate(scenario.job_specs()):
        if index < explicit:
            base: Tuple[Any, ...] = ("workload", "jobs", index)
        else:
            base = ("workload", "generator")
        for field, message in spec.violations():
            add(base + (field,) if index < explicit else base, message, spec.job_id)
        if spec.job_id in seen:
            add(base + ("job_id",) if index < explicit else base, f"duplicate job id {spec.job_id}", spec.job_id)
        seen.add(spec.job_id)
        if spec.app_model_id not in scenario.app_models:
            add(base + ("app_model_id",) if index < explicit else base,
                f"unknown application model '{spec.app_model_id}'", spec.job_id)
        if spec.n_min > cluster.total_compute_nodes:
            add(base + ("n_min",) if index < explicit else base,
                f"n_min {spec.n_min} exceeds the {cluster.total_compute_nodes} compute nodes; the job can never start",
                spec.job_id)
    return violations
