"""
Check reports and slack tracking
"""

import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

DEFAULT_TOLERANCE = 1e-10


def serializable(value: Any) -> Any:
    """Convert numpy values (recursively) to plain JSON types"""
    if isinstance(value, dict):
        return {str(k): serializable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [serializable(v) for v in value]
    if isinstance(value, np.ndarray):
        return serializable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    return value


def witness_key(witness: Optional[dict]) -> str:
    return json.dumps(serializable(witness), sort_keys=True)


@dataclass
class CheckReport:
    """
    Outcome of one verification check

    Attributes:
        name: Check identifier
        trials: Number of evaluated cases
        worst_slack: Minimum over cases of the signed distance from violation
        witness: Serialized worst case
        passed: worst_slack >= -tolerance
        tolerance: Violation tolerance of this check
        details: Check-specific diagnostics
    """
    name: str
    trials: int
    worst_slack: float
    witness: Optional[dict]
    passed: bool
    tolerance: float = DEFAULT_TOLERANCE
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return serializable({
            "name": self.name,
            "trials": self.trials,
            "worst_slack": self.worst_slack,
            "witness": self.witness,
            "passed": self.passed,
            "tolerance": self.tolerance,
            "details": self.details,
        })


class SlackTracker:
    """Running minimum slack with its witness"""

    def __init__(self):
        self.count = 0
        self.worst = math.inf
        self.witness: Optional[dict] = None

    def update(self, slack: float, witness: dict):
        self.count += 1
        slack = float(slack)
        if slack < self.worst or (slack == self.worst and witness_key(witness) < witness_key(self.witness)):
            self.worst = slack
            self.witness = serializable(witness)

    def merge(self, other: "SlackTracker") -> "SlackTracker":
        """Combine two trackers; the result does not depend on merge order"""
        merged = SlackTracker()
        merged.count = self.count + other.count
        candidates = [t for t in (self, other) if t.witness is not None or t.worst < math.inf]
        if candidates:
            best = min(candidates, key=lambda t: (t.worst, witness_key(t.witness)))
            merged.worst, merged.witness = best.worst, best.witness
        return merged

    def report(self, name: str, tolerance: float = DEFAULT_TOLERANCE, details: Optional[dict] = None) -> CheckReport:
        worst = self.worst if self.count else 0.0
        return CheckReport(name, self.count, worst, self.witness, worst >= -tolerance, tolerance, details or {})
