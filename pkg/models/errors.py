from typing import List, Optional


class DmrSimError(Exception):
    """Base class for all simulator errors"""
    pass


class ContractViolationError(DmrSimError):
    """Raised when an operation is called outside its precondition"""
    pass


class SchedulerError(DmrSimError):
    """Raised when the resource manager receives an inconsistent request"""
    pass


class SimulationDeadlockError(DmrSimError):
    """Raised when no event is schedulable but jobs remain unfinished"""
    pass


class InvariantViolationError(DmrSimError):
    """Raised by the debug checker when a state invariant is broken"""
    pass


class ScenarioError(DmrSimError):
    """Raised when a scenario file cannot be read or fails validation"""

    def __init__(self, message: str, violations: Optional[List["object"]] = None, source: Optional[str] = None):
        self.violations = list(violations or [])
        self.source = source
        lines = [message]
        for violation in self.violations:
            lines.append(f"  {violation.render(source)}")
        super().__init__("\n".join(lines))


class TraceFormatError(DmrSimError):
    """Raised when a trace or summary file is corrupted or has an unsupported version"""

    def __init__(self, message: str, line: Optional[int] = None, source: Optional[str] = None):
        self.line = line
        self.source = source
        where = source or "<trace>"
        if line is not None:
            where = f"{where}:{line}"
        super().__init__(f"{where}: {message}")


class IncompleteTraceError(DmrSimError):
    """Raised when a metric needs finished jobs but the trace has unfinished ones"""
    pass


class UnknownJobError(DmrSimError):
    """Raised when a trace query names a job that was never submitted"""
    pass
