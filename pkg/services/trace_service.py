"""Result files: trace.jsonl, summary.json and the per-series CSVs."""
import csv
import json
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from models.errors import TraceFormatError
from models.summary import SUMMARY_SCHEMA, SUMMARY_VERSION, WorkloadSummary
from models.trace import TRACE_SCHEMA, TRACE_VERSION, TraceEvent, TraceHeader

logger = logging.getLogger(__name__)

TRACE_FILE = "trace.jsonl"
SUMMARY_FILE = "summary.json"


def write_trace(path: Path, header: TraceHeader, events: Iterable[TraceEvent]):
    """Header line first, then one event per line in emission order"""
    with open(path, "w", encoding="utf-8") as fp:
        fp.write(json.dumps(header.model_dump(mode="json"), sort_keys=True) + "\n")
        for event in events:
            fp.write(json.dumps(event.to_record(), sort_keys=True) + "\n")


def read_trace(path: Path) -> Tuple[TraceHeader, List[TraceEvent]]:
    """
    Load a trace written by write_trace.

    Raises:
        TraceFormatError: missing or foreign header, unsupported version, or a
            corrupted line (reported with its 1-based line number)
    """
    source = str(path)
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise TraceFormatError(f"cannot read trace: {e}", source=source)
    if not lines:
        raise TraceFormatError("empty trace file, header missing", line=1, source=source)

    try:
        header = TraceHeader(**json.loads(lines[0]))
    except (json.JSONDecodeError, TypeError, ValidationError) as e:
        raise TraceFormatError(f"unreadable header: {e}", line=1, source=source)
    if header.schema_name != TRACE_SCHEMA:
        raise TraceFormatError(f"not a trace file (schema '{header.schema_name}')", line=1, source=source)
    if header.version != TRACE_VERSION:
        raise TraceFormatError(
            f"unsupported trace version {header.version}, expected {TRACE_VERSION}", line=1, source=source
        )

    events = []
    for number, text in enumerate(lines[1:], start=2):
        if not text.strip():
            continue
        try:
            events.append(TraceEvent(**json.loads(text)))
        except (json.JSONDecodeError, TypeError, ValidationError) as e:
            raise TraceFormatError(f"corrupted event: {e}", line=number, source=source)
    return header, events


def write_summary(path: Path, summary: WorkloadSummary):
    with open(path, "w", encoding="utf-8") as fp:
        json.dump(summary.model_dump(mode="json"), fp, indent=2, sort_keys=True)
        fp.write("\n")


def read_summary(path: Path) -> WorkloadSummary:
    source = str(path)
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise TraceFormatError(f"cannot read summary: {e}", source=source)
    except json.JSONDecodeError as e:
        raise TraceFormatError(f"corrupted summary: {e.msg}", line=e.lineno, source=source)
    if not isinstance(data, dict) or data.get("schema_name") != SUMMARY_SCHEMA:
        raise TraceFormatError("not a summary file", source=source)
    if data.get("version") != SUMMARY_VERSION:
        raise TraceFormatError(
            f"unsupported summary version {data.get('version')}, expected {SUMMARY_VERSION}", source=source
        )
    try:
        return WorkloadSummary(**data)
    except ValidationError as e:
        raise TraceFormatError(f"invalid summary: {e}", source=source)


def write_series_csv(path: Path, series: Sequence[Tuple[float, float]], value_column: str = "value"):
    with open(path, "w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp)
        writer.writerow(["time_s", value_column])
        for time, value in series:
            writer.writerow([time, value])


def write_table_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]):
    with open(path, "w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp)
        writer.writerow(header)
        writer.writerows(rows)


def ensure_output_dir(out: str, name: Optional[str] = None) -> Path:
    directory = Path(out) / name if name else Path(out)
    directory.mkdir(parents=True, exist_ok=True)
    return directory
