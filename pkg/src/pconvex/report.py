from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    return obj


@dataclass
class CheckReport:
    """Outcome of a sampled property check.

    A pass is a statement about the sampled suite at ``seed`` only.  The
    witness holds the inputs that produced ``worst_ratio``; ``reevaluate``
    recomputes that ratio from the witness alone.
    """

    name: str
    trials: int
    worst_ratio: float
    witness: dict
    passed: bool
    tolerances: dict
    seed: int | None
    notes: list = field(default_factory=list)
    details: dict = field(default_factory=dict)
    _reeval: Callable[[], float] | None = field(default=None, repr=False, compare=False)

    def reevaluate(self) -> float:
        if self._reeval is None:
            raise ValueError(f"check {self.name!r} carries no re-evaluator")
        return float(self._reeval())

    def to_dict(self) -> dict[str, Any]:
        return to_jsonable(
            {
                "name": self.name,
                "trials": self.trials,
                "worst_ratio": self.worst_ratio,
                "passed": self.passed,
                "tolerances": self.tolerances,
                "seed": self.seed,
                "witness": self.witness,
                "notes": self.notes + ["pass/fail refers to the sampled suite at the recorded seed"],
                "details": self.details,
            }
        )
