"""One-sided binomial confidence bounds and the Gaussian quantile.

Certification always uses the exact Clopper-Pearson bound, computed through
beta-distribution quantiles. Wilson and Agresti-Coull closed forms exist for
sample planning only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from scipy.special import betainc, betaln

from .errors import NumericsError, ParameterError
from .kernels import ndtri_scalar


class BoundMethod(Enum):
    CLOPPER_PEARSON = "clopper-pearson"
    WILSON = "wilson"
    AGRESTI_COULL = "agresti-coull"


@dataclass(frozen=True)
class ConfidenceBoundSpec:
    """A one-sided interval method plus its error rate (confidence = 1 - alpha)."""

    method: BoundMethod = BoundMethod.CLOPPER_PEARSON
    alpha: float = 0.001

    def __post_init__(self):
        if not (0.0 < self.alpha <= 0.5):
            raise ParameterError(f"alpha must be in (0, 0.5], got {self.alpha}")


@dataclass(frozen=True)
class BinomialSample:
    successes: int
    trials: int

    def __post_init__(self):
        if self.trials < 1:
            raise ParameterError(f"trials must be >= 1, got {self.trials}")
        if not (0 <= self.successes <= self.trials):
            raise ParameterError(
                f"successes must be in [0, {self.trials}], got {self.successes}"
            )


def inverse_normal_cdf(p: float) -> float:
    """Quantile of the standard normal distribution, abs error below 1e-9."""
    if not (0.0 < p < 1.0):
        raise ParameterError(f"quantile argument must be in (0, 1), got {p}")
    return ndtri_scalar(p)


_QUANTILE_TOL = 1e-10
_MAX_ITER = 200


def beta_quantile(q: float, a: float, b: float) -> float:
    """Solve I_x(a, b) = q for x, where I is the regularized incomplete beta.

    Newton iterations on the bracketed root, falling back to bisection
    whenever a step leaves the bracket. Absolute tolerance 1e-10; running
    past the iteration cap raises rather than returning a loose value.
    """
    if not (0.0 < q < 1.0):
        raise ParameterError(f"q must be in (0, 1), got {q}")
    if a <= 0.0 or b <= 0.0:
        raise ParameterError(f"shape parameters must be positive, got a={a}, b={b}")

    lo, hi = 0.0, 1.0
    x = a / (a + b)
    log_norm = betaln(a, b)
    for _ in range(_MAX_ITER):
        f = betainc(a, b, x) - q
        if f > 0.0:
            hi = x
        else:
            lo = x
        if hi - lo <= _QUANTILE_TOL:
            return 0.5 * (lo + hi)
        # density of Beta(a, b) at x; guard the log against the endpoints
        if 0.0 < x < 1.0:
            pdf = math.exp((a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - log_norm)
        else:
            pdf = 0.0
        if pdf > 1e-280 * abs(f):
            step = x - f / pdf
        else:
            step = lo - 1.0  # force bisection instead of dividing by ~0
        if lo < step < hi:
            x = step
        else:
            x = 0.5 * (lo + hi)
    raise NumericsError(
        f"beta quantile did not reach tolerance {_QUANTILE_TOL} in {_MAX_ITER} iterations "
        f"(q={q}, a={a}, b={b})"
    )


def _wilson_bounds(k: int, n: int, alpha: float) -> tuple[float, float]:
    z = inverse_normal_cdf(1.0 - alpha)
    phat = k / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2.0 * n)) / denom
    half = (z / denom) * math.sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n))
    return max(0.0, center - half), min(1.0, center + half)


def _agresti_coull_bounds(k: int, n: int, alpha: float) -> tuple[float, float]:
    z = inverse_normal_cdf(1.0 - alpha)
    n_tilde = n + z * z
    p_tilde = (k + z * z / 2.0) / n_tilde
    half = z * math.sqrt(p_tilde * (1.0 - p_tilde) / n_tilde)
    return max(0.0, p_tilde - half), min(1.0, p_tilde + half)


def lower_confidence_bound(sample: BinomialSample, spec: ConfidenceBoundSpec) -> float:
    """One-sided lower bound L with P[p < L] <= alpha.

    Clopper-Pearson: the alpha-quantile of Beta(k, n-k+1); L = 0 at k = 0 and
    alpha^(1/n) at k = n (closed forms, skipping the degenerate quantile).
    """
    k, n, alpha = sample.successes, sample.trials, spec.alpha
    if spec.method is BoundMethod.CLOPPER_PEARSON:
        if k == 0:
            return 0.0
        if k == n:
            return alpha ** (1.0 / n)
        return beta_quantile(alpha, k, n - k + 1)
    if spec.method is BoundMethod.WILSON:
        return _wilson_bounds(k, n, alpha)[0]
    return _agresti_coull_bounds(k, n, alpha)[0]


def upper_confidence_bound(sample: BinomialSample, spec: ConfidenceBoundSpec) -> float:
    """One-sided upper bound U with P[p > U] <= alpha.

    Clopper-Pearson: the (1-alpha)-quantile of Beta(k+1, n-k); U = 1 at k = n
    and 1 - alpha^(1/n) at k = 0.
    """
    k, n, alpha = sample.successes, sample.trials, spec.alpha
    if spec.method is BoundMethod.CLOPPER_PEARSON:
        if k == n:
            return 1.0
        if k == 0:
            return 1.0 - alpha ** (1.0 / n)
        return beta_quantile(1.0 - alpha, k + 1, n - k)
    if spec.method is BoundMethod.WILSON:
        return _wilson_bounds(k, n, alpha)[1]
    return _agresti_coull_bounds(k, n, alpha)[1]
