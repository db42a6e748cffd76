"""Law-check reports and finite partition probability tables."""
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Union

from app.models.tensor import MergeTensor

Number = Union[Fraction, float]


def render_number(value: Number) -> str:
    if isinstance(value, Fraction):
        return str(value)
    return repr(float(value))


@dataclass
class LawReport:
    """Outcome of one structural check.

    A report passes iff no case was recorded as violating; for exact laws
    that is the same as a worst residual of exactly 0.
    """
    law: str
    instance: str
    cases_checked: int = 0
    worst_residual: Number = Fraction(0)
    violations: List[str] = field(default_factory=list)
    notices: List[str] = field(default_factory=list)
    certified_depth: Optional[int] = None
    first_failure: Optional[str] = None
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def record(self, case: str, residual: Number, tolerance: Number = 0) -> None:
        """Count one case; it violates when its residual exceeds the tolerance."""
        self.cases_checked += 1
        residual = abs(residual)
        if residual > self.worst_residual:
            self.worst_residual = residual
        if residual > tolerance:
            self.violations.append(f"{case}: residual {render_number(residual)}")

    def fail(self, case: str) -> None:
        """Count one case that violates a non-numeric condition."""
        self.cases_checked += 1
        self.violations.append(case)

    def to_json(self) -> Dict[str, Any]:
        data = {
            'law': self.law,
            'instance': self.instance,
            'passed': self.passed,
            'cases_checked': self.cases_checked,
            'worst_residual': render_number(self.worst_residual),
            'violations': self.violations,
            'notices': self.notices,
        }
        if self.certified_depth is not None:
            data['certified_depth'] = self.certified_depth
        if self.first_failure is not None:
            data['first_failure'] = self.first_failure
        if self.details:
            data['details'] = self.details
        return data


@dataclass
class PpfTable:
    """Finite map T -> p(T) on merge tensors, certified up to `depth` merging blocks."""
    d: int
    values: Dict[MergeTensor, Number]
    depth: int

    def get(self, T: MergeTensor) -> Optional[Number]:
        return self.values.get(T)
