"""Report records shared by the construction, Picard and verification layers."""
import math
from typing import TYPE_CHECKING, Any, Dict, Iterable, List, NamedTuple, Optional, Tuple

import pandas as pd

if TYPE_CHECKING:  # pragma: no cover
    from .lacunary import LacunaryParams


class BoundReport(NamedTuple):
    name: str
    params: Optional["LacunaryParams"]
    t: Optional[float]
    lhs: float
    rhs_model: float
    implied_constant: float
    passed: bool
    note: str = ""


def implied_constant(lhs: float, rhs_model: float) -> float:
    if rhs_model > 0:
        return lhs / rhs_model
    return 0.0 if lhs == 0 else math.inf


def bound_report(
    name: str,
    params: Optional["LacunaryParams"],
    lhs: float,
    rhs_model: float,
    t: Optional[float] = None,
    limits: Tuple[float, float] = (0.0, math.inf),
    note: str = "",
) -> BoundReport:
    """Compare ``lhs`` to a model; pass when lhs/model lies within ``limits``."""
    lhs, rhs_model = float(lhs), float(rhs_model)
    c = implied_constant(lhs, rhs_model)
    passed = math.isfinite(c) and limits[0] <= c <= limits[1]
    return BoundReport(name, params, t, lhs, rhs_model, c, passed, note)


def exact_report(
    name: str,
    params: Optional["LacunaryParams"],
    lhs: Any,
    expected: Any,
    note: str = "",
) -> BoundReport:
    """An identity that must hold exactly (``lhs == expected``)."""
    c = implied_constant(abs(float(lhs)), abs(float(expected)))
    return BoundReport(
        name, params, None, float(lhs), float(expected), c, lhs == expected, note
    )


PARAM_COLUMNS = ["r", "beta", "K", "nu", "delta", "s"]
REPORT_COLUMNS = [
    "name",
    *PARAM_COLUMNS,
    "t",
    "lhs",
    "rhs_model",
    "implied_constant",
    "passed",
    "note",
]


def reports_frame(reports: Iterable[BoundReport]) -> pd.DataFrame:
    rows = []
    for rep in reports:
        row: Dict[str, Any] = {"name": rep.name}
        for col in PARAM_COLUMNS:
            row[col] = getattr(rep.params, col, math.nan)
        row.update(
            t=math.nan if rep.t is None else rep.t,
            lhs=rep.lhs,
            rhs_model=rep.rhs_model,
            implied_constant=rep.implied_constant,
            passed=bool(rep.passed),
            note=rep.note,
        )
        rows.append(row)
    frame = pd.DataFrame(rows, columns=REPORT_COLUMNS)
    return sort_frame(frame)


def sort_frame(frame: pd.DataFrame) -> pd.DataFrame:
    keys = [col for col in ("r", "t") if col in frame.columns]
    if not keys or frame.empty:
        return frame.reset_index(drop=True)
    return frame.sort_values(
        keys, kind="mergesort", na_position="first"
    ).reset_index(drop=True)


class SweepResult(object):
    """A table of measurements plus the bound reports derived from it."""

    def __init__(
        self,
        name: str,
        frame: pd.DataFrame,
        reports: Iterable[BoundReport] = (),
        slope: Optional[float] = None,
        summary: Optional[Dict[str, Any]] = None,
    ):
        self.name = name
        self.frame = sort_frame(frame)
        self.reports: List[BoundReport] = list(reports)
        self.slope = slope
        self.summary: Dict[str, Any] = dict(summary or {})

    @classmethod
    def from_reports(cls, name: str, reports: Iterable[BoundReport]) -> "SweepResult":
        reports = list(reports)
        return cls(name, reports_frame(reports), reports)

    @property
    def passed(self) -> bool:
        return all(rep.passed for rep in self.reports)

    def failures(self) -> List[BoundReport]:
        return [rep for rep in self.reports if not rep.passed]

    def extend(self, other: "SweepResult") -> "SweepResult":
        """Concatenate two report tables."""
        frame = pd.concat([self.frame, other.frame], ignore_index=True, sort=False)
        summary = {**self.summary, **other.summary}
        return SweepResult(
            self.name, frame, self.reports + other.reports, self.slope, summary
        )

    def __repr__(self) -> str:
        state = "passed" if self.passed else f"{len(self.failures())} failed"
        return f"SweepResult({self.name}, rows={len(self.frame)}, {state})"
