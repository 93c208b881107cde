"""Standard randomized-smoothing certification.

Per input: a small selection round picks the putative top class, a larger
estimation round gives its Clopper-Pearson lower bound p_lower, and the
certificate radius is sigma * Phi^-1(p_lower) whenever p_lower > 1/2
(the runner-up bound is conservatively taken as 1 - p_lower). The estimation
round's seeds and per-sample predictions are returned as a cache record so a
later recertification can replay exactly the same noise.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .cache import CacheRecord, input_digest
from .classifiers import Classifier
from .errors import ParameterError
from .intervals import (
    BinomialSample,
    ConfidenceBoundSpec,
    inverse_normal_cdf,
    lower_confidence_bound,
)
from .noise import GENERATOR_ID, NoiseSpec, derive_seed_list, fork_seed, sample_noise_batch

SELECTION_BRANCH = 0x5E1EC7  # tag for the selection round's seed branch

_CHUNK = 65536


class Status(Enum):
    CERTIFIED = "certified"
    ABSTAIN = "abstain"


@dataclass(frozen=True)
class CertifyParams:
    sigma: float
    n0: int = 100
    n: int = 10_000
    alpha: float = 0.001
    master_seed: int = 0

    def __post_init__(self):
        if self.sigma <= 0.0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        if self.n0 < 1 or self.n < 1:
            raise ParameterError("sample counts must be >= 1")
        if not (0.0 < self.alpha <= 0.5):
            raise ParameterError(f"alpha must be in (0, 0.5], got {self.alpha}")


@dataclass(frozen=True)
class CertificationOutcome:
    status: Status
    prediction: int | None
    radius: float
    p_lower: float
    samples_used: int
    elapsed: float

    @property
    def certified(self) -> bool:
        return self.status is Status.CERTIFIED


def sample_predictions(
    classifier: Classifier,
    x: np.ndarray,
    sigma: float,
    seeds: np.ndarray,
    chunk: int = _CHUNK,
) -> np.ndarray:
    """Classifier labels on x + noise for every seed, chunked to bound memory."""
    x = np.asarray(x, dtype=np.float64)
    spec = NoiseSpec(sigma=sigma, dim=classifier.dim)
    out = np.empty(len(seeds), dtype=np.int64)
    for start in range(0, len(seeds), chunk):
        noise = sample_noise_batch(spec, seeds[start : start + chunk])
        out[start : start + len(noise)] = classifier.predict_batch(x[None, :] + noise)
    return out


def certify(
    classifier: Classifier,
    x: np.ndarray,
    params: CertifyParams,
    input_id: str = "",
) -> tuple[CertificationOutcome, CacheRecord]:
    x = np.asarray(x, dtype=np.float64)
    if classifier.label_count > 0xFFFF:
        raise ParameterError("cache records store uint16 labels; label_count > 65535")
    started = time.perf_counter()

    selection_seeds = derive_seed_list(fork_seed(params.master_seed, SELECTION_BRANCH), params.n0)
    selection = sample_predictions(classifier, x, params.sigma, selection_seeds)
    counts0 = np.bincount(selection, minlength=classifier.label_count)
    top_class = int(np.argmax(counts0))  # ties resolve to the lowest index

    estimation_seeds = derive_seed_list(params.master_seed, params.n)
    predictions = sample_predictions(classifier, x, params.sigma, estimation_seeds)
    hits = int(np.count_nonzero(predictions == top_class))

    bound_spec = ConfidenceBoundSpec(alpha=params.alpha)
    p_lower = lower_confidence_bound(BinomialSample(hits, params.n), bound_spec)

    if p_lower > 0.5:
        outcome = CertificationOutcome(
            status=Status.CERTIFIED,
            prediction=top_class,
            radius=params.sigma * inverse_normal_cdf(p_lower),
            p_lower=p_lower,
            samples_used=params.n0 + params.n,
            elapsed=time.perf_counter() - started,
        )
        record = CacheRecord(
            input_id=input_id,
            input_digest=input_digest(x),
            top_class=top_class,
            p_lower=p_lower,
            sigma=params.sigma,
            alpha=params.alpha,
            n=params.n,
            seeds=estimation_seeds,
            predictions=predictions.astype(np.uint16),
            generator_id=GENERATOR_ID,
        )
    else:
        outcome = CertificationOutcome(
            status=Status.ABSTAIN,
            prediction=None,
            radius=0.0,
            p_lower=p_lower,
            samples_used=params.n0 + params.n,
            elapsed=time.perf_counter() - started,
        )
        record = CacheRecord.abstained(
            input_id=input_id,
            input_digest=input_digest(x),
            sigma=params.sigma,
            alpha=params.alpha,
            n=params.n,
            generator_id=GENERATOR_ID,
        )
    return outcome, record


def average_certified_radius(
    outcomes: list[tuple[CertificationOutcome, int]],
) -> float:
    """Mean radius over inputs; abstentions and wrong predictions count 0."""
    if not outcomes:
        raise ParameterError("average over an empty outcome list")
    total = 0.0
    for outcome, true_label in outcomes:
        if outcome.certified and outcome.prediction == true_label:
            total += outcome.radius
    return total / len(outcomes)
