from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

from ..algebra import AlgElement
from ..numerics import DyadicInterval

__all__ = ["CertifiedValue", "CertificationError", "DimensionCapError", "BudgetExceeded"]


@dataclass
class CertifiedValue:
    """An interval for a sentence value plus the witness attaining its inner end.

    ``certified`` is False for heuristic results, whose interval is only
    one-sided honest.
    """

    interval: DyadicInterval
    witness: Optional[Dict[str, AlgElement]] = None
    witness_value: Optional[float] = None
    work: Dict[str, int] = field(default_factory=dict)
    certified: bool = True

    @property
    def lo(self) -> float:
        return float(self.interval.lo)

    @property
    def hi(self) -> float:
        return float(self.interval.hi)

    @property
    def width(self) -> float:
        return float(self.interval.width())


class CertificationError(RuntimeError):
    """Certification could not reach the requested width."""

    #: rigorous but wider interval (certified=False) when the search stopped early
    partial: Optional[CertifiedValue] = None


class DimensionCapError(CertificationError):
    pass


class BudgetExceeded(CertificationError):
    pass
