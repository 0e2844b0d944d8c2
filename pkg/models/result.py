"""
Result models for experiment runs
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from utils.error_handling import EXIT_CHECK_FAILED, EXIT_OK


@dataclass
class CheckResult:
    """One pass/fail invariant check of an experiment"""
    name: str
    passed: bool
    value: Optional[float] = None
    threshold: Optional[float] = None
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "threshold": self.threshold,
            "detail": self.detail,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CheckResult":
        return cls(**data)

    @classmethod
    def bound(cls, name: str, value: float, threshold: float, detail: str = "") -> "CheckResult":
        """Passes when value <= threshold"""
        return cls(name, bool(value <= threshold), float(value), float(threshold), detail)


@dataclass
class ExperimentOutput:
    """What an experiment hands back: a table, a document and its checks"""
    rows: List[Dict[str, Any]] = field(default_factory=list)
    document: Dict[str, Any] = field(default_factory=dict)
    checks: List[CheckResult] = field(default_factory=list)
    tables: Dict[str, List[Dict[str, Any]]] = field(default_factory=dict)  # extra CSV files, keyed by path


@dataclass
class RunReport:
    """Outcome of one CLI run; re-runnable from its config echo"""
    config: Dict[str, Any]
    config_hash: str
    version: str
    checks: List[CheckResult] = field(default_factory=list)
    rows: List[Dict[str, Any]] = field(default_factory=list)
    document: Dict[str, Any] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def success(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.success else EXIT_CHECK_FAILED

    def result_document(self) -> Dict[str, Any]:
        """Deterministic content written to result files; no timings"""
        doc = dict(self.document)
        doc.update({
            "version": self.version,
            "config_hash": self.config_hash,
            "config": self.config,
            "checks": [check.to_dict() for check in self.checks],
        })
        if self.rows:
            doc["rows"] = self.rows
        return doc

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config,
            "config_hash": self.config_hash,
            "version": self.version,
            "success": self.success,
            "checks": [check.to_dict() for check in self.checks],
            "outputs": self.outputs,
            "timings": self.timings,
        }

    def summary(self) -> str:
        lines = [f"{self.config.get('command')}: {'PASSED' if self.success else 'FAILED'} (config {self.config_hash[:12]})"]
        for check in self.checks:
            status = "ok" if check.passed else "FAIL"
            value = "" if check.value is None else f" value={check.value:.6g}"
            threshold = "" if check.threshold is None else f" threshold={check.threshold:.6g}"
            lines.append(f"  [{status}] {check.name}{value}{threshold} {check.detail}".rstrip())
        for path in self.outputs:
            lines.append(f"  wrote {path}")
        for name, seconds in self.timings.items():
            lines.append(f"  {name}: {seconds:.2f}s")
        return "\n".join(lines)
