"""Sample-budget planning: the smallest n whose confidence interval pins a
hypothesized proportion to a target error.

The target error chi is an interval-width budget: at the idealized
observation k = round(p * n), the equal-tailed interval formed by the
method's one-sided bounds (each at level alpha) must satisfy
upper(k, n) - lower(k, n) <= chi. Required sample counts peak when p sits
near 1/2 and collapse toward the boundaries, for every supported method;
that asymmetry is what makes bounding a near-zero proportion so much
cheaper than bounding a mid-range one.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import ParameterError, PlanningError
from .intervals import (
    BinomialSample,
    BoundMethod,
    ConfidenceBoundSpec,
    lower_confidence_bound,
    upper_confidence_bound,
)

_MAX_N = 1 << 31
_SCAN_WIDTH = 64


class Side(Enum):
    """Which bound the caller ultimately consumes. The width criterion uses
    both sides, so planning is side-symmetric; the field documents intent
    and keeps query rows self-describing."""

    LOWER = "lower"
    UPPER = "upper"


@dataclass(frozen=True)
class PlanQuery:
    p_true: float
    chi: float
    spec: ConfidenceBoundSpec
    side: Side = Side.LOWER

    def __post_init__(self):
        if not (0.0 <= self.p_true <= 1.0):
            raise ParameterError(f"p_true must be in [0, 1], got {self.p_true}")
        if not (0.0 < self.chi < 1.0):
            raise ParameterError(f"chi must be in (0, 1), got {self.chi}")


@dataclass(frozen=True)
class PlanResult:
    n_required: int
    achieved_error: float  # interval width at the idealized observation


def _width(query: PlanQuery, n: int) -> float:
    # round() is half-to-even, avoiding systematic bias at half-integers
    k = min(n, max(0, round(query.p_true * n)))
    sample = BinomialSample(k, n)
    return upper_confidence_bound(sample, query.spec) - lower_confidence_bound(
        sample, query.spec
    )


def required_samples(query: PlanQuery) -> PlanResult:
    """Least n meeting the width target, by exponential bracketing plus
    bisection.

    The width is monotone in n up to rounding of k; bisection lands near the
    crossing, then the scan window slides down until width-64 below the
    answer holds no smaller qualifying n (rounding creates non-monotone
    pockets wider than one window).
    """
    target = query.chi
    hi = 1
    while _width(query, hi) > target:
        hi *= 2
        if hi > _MAX_N:
            raise PlanningError(
                f"target error chi={query.chi} unreachable below n={_MAX_N}"
            )
    if hi > 1:
        lo = hi // 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if _width(query, mid) <= target:
                hi = mid
            else:
                lo = mid
        improved = True
        while improved:
            improved = False
            for n in range(max(1, hi - _SCAN_WIDTH), hi):
                if _width(query, n) <= target:
                    hi = n
                    improved = True
                    break
    return PlanResult(hi, _width(query, hi))


def sample_curve(
    method: BoundMethod,
    chi_list: list[float],
    alpha: float,
    p_grid: list[float],
    side: Side = Side.LOWER,
) -> list[dict]:
    """Full (p, chi) -> n_required table for one method, CSV-shaped."""
    if not chi_list or not p_grid:
        raise ParameterError("chi_list and p_grid must be nonempty")
    spec = ConfidenceBoundSpec(method=method, alpha=alpha)
    rows = []
    for chi in chi_list:
        for p in p_grid:
            result = required_samples(PlanQuery(p_true=p, chi=chi, spec=spec, side=side))
            rows.append(
                {
                    "method": method.value,
                    "alpha": alpha,
                    "chi": chi,
                    "p": p,
                    "n_required": result.n_required,
                }
            )
    return rows
