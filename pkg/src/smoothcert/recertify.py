"""Incremental recertification of a modified classifier from cached state.

Instead of re-estimating the modified classifier's success probability from
scratch, replay the cached noise, count how often the modified classifier
disagrees with the recorded predictions, and subtract an upper confidence
bound zeta on that disagreement from the cached p_lower. Because the
disagreement rate of a mild modification sits near zero, its binomial bound
is tight at small sample counts, which is the entire savings.

When the cached p_lower already exceeds the threshold gamma there is nothing
left to subtract from, so the fallback branch re-estimates the modified
classifier directly on fresh noise at the combined confidence level
1 - (alpha + alpha_zeta); both branches certify at that same overall
confidence.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .cache import CacheRecord, input_digest
from .certify import CertificationOutcome, Status, sample_predictions
from .classifiers import Classifier
from .errors import CacheCompatibilityError, CacheError, ParameterError
from .intervals import (
    BinomialSample,
    ConfidenceBoundSpec,
    inverse_normal_cdf,
    lower_confidence_bound,
    upper_confidence_bound,
)
from .noise import GENERATOR_ID, derive_seed_list, fork_seed

FRESH_BRANCH = 0xF2E54  # tag for the fallback branch's fresh seeds


@dataclass(frozen=True)
class RecertifyParams:
    sigma: float
    n_p: int
    alpha: float = 0.001
    alpha_zeta: float = 0.001
    gamma: float = 0.99
    master_seed: int = 0

    def __post_init__(self):
        if self.sigma <= 0.0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        if self.n_p < 1:
            raise ParameterError(f"n_p must be >= 1, got {self.n_p}")
        if not (0.0 < self.alpha <= 0.5) or not (0.0 < self.alpha_zeta <= 0.5):
            raise ParameterError("confidence parameters must be in (0, 0.5]")
        if self.alpha + self.alpha_zeta >= 1.0:
            raise ParameterError("alpha + alpha_zeta must stay below 1")
        if not (0.5 < self.gamma < 1.0):
            raise ParameterError(f"gamma must be in (1/2, 1), got {self.gamma}")


@dataclass(frozen=True)
class ZetaEstimate:
    zeta: float
    disagreements: int
    samples: int


def _check_cache(x: np.ndarray, params: RecertifyParams, record: CacheRecord) -> None:
    if record.generator_id != GENERATOR_ID:
        raise CacheCompatibilityError(
            f"cache was generated by {record.generator_id!r}, live engine is {GENERATOR_ID!r}"
        )
    if record.sigma != params.sigma:
        raise CacheCompatibilityError(
            f"cache sigma {record.sigma} differs from requested sigma {params.sigma}"
        )
    if record.input_digest != input_digest(x):
        raise CacheCompatibilityError(
            f"input does not match cached record {record.input_id!r} (digest mismatch)"
        )


def estimate_zeta(
    modified: Classifier,
    x: np.ndarray,
    params: RecertifyParams,
    record: CacheRecord,
) -> ZetaEstimate:
    """Clopper-Pearson upper bound on the disagreement probability between
    the cached classifier and `modified`, measured on replayed cached noise.

    The first n_p cached seeds are used (a prefix, so shrinking the budget
    never changes which samples are replayed).
    """
    x = np.asarray(x, dtype=np.float64)
    if record.is_abstained:
        raise CacheError(
            f"record {record.input_id!r} abstained; no reusable samples were cached"
        )
    _check_cache(x, params, record)
    if params.n_p > record.n:
        raise ParameterError(
            f"n_p={params.n_p} exceeds the {record.n} cached samples"
        )
    seeds = record.seeds[: params.n_p]
    predictions = sample_predictions(modified, x, params.sigma, seeds)
    disagreements = int(np.count_nonzero(predictions != record.predictions[: params.n_p]))
    zeta = upper_confidence_bound(
        BinomialSample(disagreements, params.n_p),
        ConfidenceBoundSpec(alpha=params.alpha_zeta),
    )
    return ZetaEstimate(zeta=zeta, disagreements=disagreements, samples=params.n_p)


def incremental_radius(p_lower: float, zeta: float, sigma: float) -> float | None:
    """Certified radius sigma * Phi^-1(p_lower - zeta), or None when the
    adjusted bound cannot clear 1/2."""
    if sigma <= 0.0:
        raise ParameterError("sigma must be positive")
    if not (0.0 <= p_lower <= 1.0) or not (0.0 <= zeta <= 1.0):
        raise ParameterError("probabilities must lie in [0, 1]")
    adjusted = p_lower - zeta
    if adjusted <= 0.5:
        return None
    return sigma * inverse_normal_cdf(adjusted)


def two_sided_radius(p_lower: float, zeta: float, sigma: float) -> float:
    """Unsimplified radius (sigma/2) * (Phi^-1(p_lower - zeta) -
    Phi^-1(p_upper + zeta)) with the conservative p_upper = 1 - p_lower.

    The one-sided form never exceeds this; kept for the ordering check.
    """
    if sigma <= 0.0:
        raise ParameterError("sigma must be positive")
    lo = p_lower - zeta
    hi = (1.0 - p_lower) + zeta
    if not (0.0 < lo < 1.0) or not (0.0 < hi < 1.0):
        raise ParameterError("adjusted probabilities fall outside (0, 1)")
    return 0.5 * sigma * (inverse_normal_cdf(lo) - inverse_normal_cdf(hi))


def recertify(
    modified: Classifier,
    x: np.ndarray,
    params: RecertifyParams,
    record: CacheRecord,
) -> CertificationOutcome:
    """Certify the modified classifier around x by reusing cached state.

    Cached p_lower below gamma: subtract the zeta bound, certify at radius
    sigma * Phi^-1(p_lower - zeta). At or above gamma: draw n_p fresh samples
    of the modified classifier and take a direct lower bound at the combined
    confidence. Either way the certificate holds with confidence at least
    1 - (alpha + alpha_zeta).
    """
    x = np.asarray(x, dtype=np.float64)
    if record.is_abstained:
        raise CacheError(
            f"record {record.input_id!r} abstained; rerun full certification instead"
        )
    if record.alpha != params.alpha:
        raise CacheCompatibilityError(
            f"cache alpha {record.alpha} differs from requested alpha {params.alpha}"
        )
    started = time.perf_counter()

    if record.p_lower < params.gamma:
        zeta = estimate_zeta(modified, x, params, record)
        adjusted = record.p_lower - zeta.zeta
        if adjusted > 0.5:
            return CertificationOutcome(
                status=Status.CERTIFIED,
                prediction=record.top_class,
                radius=params.sigma * inverse_normal_cdf(adjusted),
                p_lower=adjusted,
                samples_used=params.n_p,
                elapsed=time.perf_counter() - started,
            )
        return CertificationOutcome(
            status=Status.ABSTAIN,
            prediction=None,
            radius=0.0,
            p_lower=adjusted,
            samples_used=params.n_p,
            elapsed=time.perf_counter() - started,
        )

    _check_cache(x, params, record)
    seeds = derive_seed_list(fork_seed(params.master_seed, FRESH_BRANCH), params.n_p)
    predictions = sample_predictions(modified, x, params.sigma, seeds)
    hits = int(np.count_nonzero(predictions == record.top_class))
    p_prime = lower_confidence_bound(
        BinomialSample(hits, params.n_p),
        ConfidenceBoundSpec(alpha=params.alpha + params.alpha_zeta),
    )
    if p_prime > 0.5:
        return CertificationOutcome(
            status=Status.CERTIFIED,
            prediction=record.top_class,
            radius=params.sigma * inverse_normal_cdf(p_prime),
            p_lower=p_prime,
            samples_used=params.n_p,
            elapsed=time.perf_counter() - started,
        )
    return CertificationOutcome(
        status=Status.ABSTAIN,
        prediction=None,
        radius=0.0,
        p_lower=p_prime,
        samples_used=params.n_p,
        elapsed=time.perf_counter() - started,
    )
