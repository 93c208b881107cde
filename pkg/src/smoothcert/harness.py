"""Experiment harness: certify input sets, recertify incrementally, compare
both pipelines, and reduce the comparison to the area-under-curve speedup.

Configuration is one declarative JSON document (see README for the key set);
CLI flags override individual keys. All timing is wall-clock per input,
including classifier transport, because the efficiency claims being checked
are end-to-end.
"""

from __future__ import annotations

import csv
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cache import CacheHeader, CacheRecord, read_cache, write_cache
from .certify import CertificationOutcome, CertifyParams, average_certified_radius, certify
from .classifiers import (
    Classifier,
    ExternalClassifier,
    LinearClassifier,
    TableClassifier,
    Threshold1D,
    exact_smoothed_probability,
)
from .errors import CacheError, ParameterError, SmoothcertError, UnsupportedOracleError
from .noise import fork_seed, warm_kernels
from .recertify import RecertifyParams, estimate_zeta, recertify

ADAPTER_ENV = "SMOOTHCERT_ADAPTER"

DEFAULT_NP_FRACTIONS = tuple(round(0.01 * k, 4) for k in range(1, 11))
DEFAULT_GAMMA_GRID = (0.9, 0.95, 0.975, 0.99, 0.995, 0.999)

_REP_BRANCH = 0x9E9E


@dataclass
class ExperimentConfig:
    classifier: dict
    inputs: dict
    approx_classifier: dict | None = None
    sigma: float = 1.0
    n0: int = 100
    n: int = 10_000
    alpha: float = 0.001
    alpha_zeta: float = 0.001
    gamma: float = 0.99
    np_fractions: tuple = DEFAULT_NP_FRACTIONS
    seed: int = 0
    workers: int | None = None
    repetitions: int = 1
    cache_path: str | None = None
    output: str | None = None
    labels: list | None = None

    def __post_init__(self):
        if self.repetitions < 1:
            raise ParameterError("repetitions must be >= 1")
        for frac in self.np_fractions:
            if not (0.0 < frac <= 1.0):
                raise ParameterError(f"n_p fraction {frac} outside (0, 1]")

    @classmethod
    def from_file(cls, path: str, **overrides):
        with open(path) as fh:
            doc = json.load(fh)
        doc.update({k: v for k, v in overrides.items() if v is not None})
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)


def build_classifier(desc: dict) -> Classifier:
    kind = desc.get("kind")
    if kind == "threshold1d":
        return Threshold1D(
            threshold=desc["threshold"],
            dim=desc.get("dim", 1),
            positive_above=desc.get("positive_above", True),
        )
    if kind == "linear":
        bias = np.asarray(desc["bias"]) if desc.get("bias") is not None else None
        return LinearClassifier(np.asarray(desc["weights"]), bias)
    if kind == "table":
        return TableClassifier(np.asarray(desc["points"]), np.asarray(desc["labels"]))
    if kind == "external":
        command = desc.get("command") or os.environ.get(ADAPTER_ENV)
        address = tuple(desc["address"]) if desc.get("address") else None
        if command is None and address is None:
            raise ParameterError(
                f"external classifier needs a 'command'/'address' key or ${ADAPTER_ENV}"
            )
        return ExternalClassifier(
            command=None if address else command,
            address=address,
            dim=desc["dim"],
            batch_cap=desc.get("batch_cap", 256),
        )
    raise ParameterError(f"unknown classifier kind {kind!r}")


def build_inputs(desc: dict) -> np.ndarray:
    kind = desc.get("type")
    if kind == "constant":
        count = int(desc["count"])
        if "value" in desc:
            row = np.asarray(desc["value"], dtype=np.float64)
        else:
            row = np.full(int(desc["dim"]), float(desc.get("fill", 0.0)))
        return np.tile(row, (count, 1))
    if kind == "gaussian":
        rng = np.random.default_rng(int(desc.get("seed", 0)))
        x = rng.normal(size=(int(desc["count"]), int(desc["dim"]))) * float(desc.get("scale", 1.0))
        return x + np.asarray(desc.get("center", 0.0), dtype=np.float64)
    if kind == "grid":
        count, dim = int(desc["count"]), int(desc.get("dim", 1))
        x = np.zeros((count, dim))
        x[:, 0] = np.linspace(float(desc["lo"]), float(desc["hi"]), count)
        return x
    if kind == "f32file":
        dim = int(desc["dim"])
        flat = np.fromfile(desc["path"], dtype="<f4").astype(np.float64)
        if flat.size % dim != 0:
            raise ParameterError(f"{desc['path']}: size {flat.size} not divisible by dim {dim}")
        return flat.reshape(-1, dim)
    raise ParameterError(f"unknown input source {kind!r}")


def true_labels(classifier: Classifier, inputs: np.ndarray, sigma: float) -> np.ndarray:
    """Reference labels for generated input sets: the exact smoothed
    prediction when a closed-form oracle exists, the noiseless prediction
    otherwise."""
    try:
        labels = []
        for x in inputs:
            probs = [
                exact_smoothed_probability(classifier, x, sigma, c)
                for c in range(classifier.label_count)
            ]
            labels.append(int(np.argmax(probs)))
        return np.asarray(labels, dtype=np.int64)
    except UnsupportedOracleError:
        return classifier.predict_batch(inputs)


class _HandlePool:
    """Thread-confined classifier handles; analytic kinds are shared."""

    def __init__(self, classifier: Classifier):
        self.base = classifier
        self._local = threading.local()
        self._clones: list[Classifier] = []
        self._lock = threading.Lock()

    def get(self) -> Classifier:
        handle = getattr(self._local, "handle", None)
        if handle is None:
            handle = self.base.clone()
            if handle is not self.base:
                with self._lock:
                    self._clones.append(handle)
            self._local.handle = handle
        return handle

    def close(self) -> None:
        for handle in self._clones:
            handle.close()
        self._clones.clear()


def _map_inputs(classifier: Classifier, count: int, fn, workers: int | None):
    """Run fn(handle, index) for each input index on a worker pool,
    preserving input order in the result list."""
    workers = workers or os.cpu_count() or 1
    pool = _HandlePool(classifier)
    try:
        if workers == 1 or count == 1:
            return [fn(pool.get(), i) for i in range(count)]
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(lambda i: fn(pool.get(), i), range(count)))
    finally:
        pool.close()


@dataclass
class CertifyRun:
    outcomes: list[CertificationOutcome]
    records: list[CacheRecord]
    labels: np.ndarray
    failures: list[tuple[int, str]]

    @property
    def acr(self) -> float:
        return average_certified_radius(
            [(o, int(t)) for o, t in zip(self.outcomes, self.labels)]
        )


def run_certify(config: ExperimentConfig, write: bool = True, created_at: str | None = None) -> CertifyRun:
    """Certify every configured input, write the cache and the outcome CSV."""
    classifier = build_classifier(config.classifier)
    inputs = build_inputs(config.inputs)
    if inputs.shape[0] == 0:
        raise ParameterError("input set is empty")
    labels = (
        np.asarray(config.labels, dtype=np.int64)
        if config.labels is not None
        else true_labels(classifier, inputs, config.sigma)
    )
    if labels.shape[0] != inputs.shape[0]:
        raise ParameterError("label count does not match input count")

    warm_kernels(classifier.dim)
    outcomes: list = [None] * inputs.shape[0]
    records: list = [None] * inputs.shape[0]
    failures: list[tuple[int, str]] = []

    def work(handle: Classifier, i: int):
        params = CertifyParams(
            sigma=config.sigma,
            n0=config.n0,
            n=config.n,
            alpha=config.alpha,
            master_seed=fork_seed(config.seed, i),
        )
        return certify(handle, inputs[i], params, input_id=f"input-{i:06d}")

    results = _map_inputs(
        classifier, inputs.shape[0], lambda h, i: _guard(work, h, i, failures), config.workers
    )
    for i, result in enumerate(results):
        if result is not None:
            outcomes[i], records[i] = result

    kept = [i for i in range(inputs.shape[0]) if outcomes[i] is not None]
    outcomes = [outcomes[i] for i in kept]
    records = [records[i] for i in kept]
    labels = labels[kept]

    run = CertifyRun(outcomes=outcomes, records=records, labels=labels, failures=failures)
    if write and config.cache_path:
        header = CacheHeader(
            generator_id=records[0].generator_id if records else "",
            sigma=config.sigma,
            alpha=config.alpha,
            n=config.n,
            classifier=classifier.identity(),
            created_at=created_at if created_at is not None else _now(),
        )
        write_cache(config.cache_path, header, records)
    if write and config.output:
        write_outcome_csv(config.output, run)
    classifier.close()
    return run


def _guard(fn, handle, i, failures):
    try:
        return fn(handle, i)
    except SmoothcertError as exc:
        failures.append((i, str(exc)))
        return None


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def write_outcome_csv(path: str, run: CertifyRun, as_json: bool = False) -> None:
    rows = []
    for i, (outcome, label) in enumerate(zip(run.outcomes, run.labels)):
        rows.append(
            {
                "index": i,
                "status": outcome.status.value,
                "prediction": "" if outcome.prediction is None else outcome.prediction,
                "true_label": int(label),
                "correct": int(outcome.certified and outcome.prediction == label),
                "radius": f"{outcome.radius:.9g}",
                "p_lower": f"{outcome.p_lower:.9g}",
                "samples": outcome.samples_used,
                "time_s": f"{outcome.elapsed:.6g}",
            }
        )
    _write_rows(path, rows, as_json)


def _write_rows(path: str, rows: list[dict], as_json: bool = False) -> None:
    if as_json:
        with open(path, "w") as fh:
            for row in rows:
                fh.write(json.dumps(row) + "\n")
        return
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


@dataclass
class ComparisonRow:
    n_p: int
    acr_irs: float
    acr_baseline: float
    mean_time_irs: float
    mean_time_baseline: float
    certified_frac_irs: float
    certified_frac_baseline: float
    radius_gt: int  # inputs where the incremental radius exceeds baseline's
    radius_eq: int
    radius_lt: int

    def as_dict(self) -> dict:
        return {
            "n_p": self.n_p,
            "acr_irs": self.acr_irs,
            "acr_baseline": self.acr_baseline,
            "mean_time_irs": self.mean_time_irs,
            "mean_time_baseline": self.mean_time_baseline,
            "certified_frac_irs": self.certified_frac_irs,
            "certified_frac_baseline": self.certified_frac_baseline,
            "radius_gt": self.radius_gt,
            "radius_eq": self.radius_eq,
            "radius_lt": self.radius_lt,
        }


def _load_records(config: ExperimentConfig) -> tuple[CacheHeader, list[CacheRecord]]:
    if not config.cache_path or not os.path.exists(config.cache_path or ""):
        raise CacheError(
            "comparison needs a certification cache for the original classifier; "
            "run `smoothcert certify --config ... --cache PATH` first"
        )
    return read_cache(config.cache_path)


def _recertify_all(
    modified: Classifier,
    inputs: np.ndarray,
    records: list[CacheRecord],
    params_for: "callable",
    fallback_n0: int,
    workers: int | None,
) -> list[CertificationOutcome]:
    """Incremental pass over all inputs. Records that abstained originally
    have no reusable state, so those inputs fall back to a from-scratch
    certification at the same sample budget and combined confidence."""

    def work(handle: Classifier, i: int):
        params: RecertifyParams = params_for(i)
        record = records[i]
        if record.is_abstained:
            fallback = CertifyParams(
                sigma=params.sigma,
                n0=fallback_n0,
                n=params.n_p,
                alpha=params.alpha + params.alpha_zeta,
                master_seed=params.master_seed,
            )
            outcome, _ = certify(handle, inputs[i], fallback)
            return outcome
        return recertify(handle, inputs[i], params, record)

    return _map_inputs(modified, inputs.shape[0], work, workers)


def run_compare(config: ExperimentConfig) -> list[ComparisonRow]:
    """Per n_p in the sweep, certify the modified classifier both ways.

    Incremental reuse runs against the cache; the from-scratch baseline runs
    at the combined confidence alpha + alpha_zeta so both certificates carry
    identical confidence.
    """
    if config.approx_classifier is None:
        raise ParameterError("comparison needs an approx_classifier descriptor")
    header, records = _load_records(config)
    inputs = build_inputs(config.inputs)
    if len(records) != inputs.shape[0]:
        raise CacheError(
            f"cache holds {len(records)} records but the input set has {inputs.shape[0]}"
        )
    original = build_classifier(config.classifier)
    labels = (
        np.asarray(config.labels, dtype=np.int64)
        if config.labels is not None
        else true_labels(original, inputs, config.sigma)
    )
    original.close()
    modified = build_classifier(config.approx_classifier)
    warm_kernels(modified.dim)

    alpha_b = config.alpha + config.alpha_zeta
    rows = []
    for frac in config.np_fractions:
        n_p = max(1, round(frac * header.n))
        acr_irs = acr_base = time_irs = time_base = 0.0
        cert_irs = cert_base = 0
        gt = eq = lt = 0
        for rep in range(config.repetitions):
            rep_seed = fork_seed(config.seed, _REP_BRANCH + rep)

            irs_outcomes = _recertify_all(
                modified,
                inputs,
                records,
                lambda i: RecertifyParams(
                    sigma=config.sigma,
                    n_p=n_p,
                    alpha=config.alpha,
                    alpha_zeta=config.alpha_zeta,
                    gamma=config.gamma,
                    master_seed=fork_seed(rep_seed, 2 * i),
                ),
                config.n0,
                config.workers,
            )

            def baseline_work(handle: Classifier, i: int):
                params = CertifyParams(
                    sigma=config.sigma,
                    n0=config.n0,
                    n=n_p,
                    alpha=alpha_b,
                    master_seed=fork_seed(rep_seed, 2 * i + 1),
                )
                outcome, _ = certify(handle, inputs[i], params)
                return outcome

            base_outcomes = _map_inputs(modified, inputs.shape[0], baseline_work, config.workers)

            acr_irs += average_certified_radius(list(zip(irs_outcomes, labels)))
            acr_base += average_certified_radius(list(zip(base_outcomes, labels)))
            time_irs += sum(o.elapsed for o in irs_outcomes) / len(irs_outcomes)
            time_base += sum(o.elapsed for o in base_outcomes) / len(base_outcomes)
            cert_irs += sum(o.certified for o in irs_outcomes)
            cert_base += sum(o.certified for o in base_outcomes)
            for oi, ob in zip(irs_outcomes, base_outcomes):
                if not oi.certified and not ob.certified:
                    continue  # radius comparison is over certified inputs
                if oi.radius > ob.radius:
                    gt += 1
                elif oi.radius == ob.radius:
                    eq += 1
                else:
                    lt += 1

        reps = config.repetitions
        total = inputs.shape[0] * reps
        rows.append(
            ComparisonRow(
                n_p=n_p,
                acr_irs=acr_irs / reps,
                acr_baseline=acr_base / reps,
                mean_time_irs=time_irs / reps,
                mean_time_baseline=time_base / reps,
                certified_frac_irs=cert_irs / total,
                certified_frac_baseline=cert_base / total,
                radius_gt=gt,
                radius_eq=eq,
                radius_lt=lt,
            )
        )
    modified.close()
    return rows


def aoc_speedup(rows: list[ComparisonRow]) -> float | None:
    """Ratio of time-vs-ACR areas over the common ACR range (baseline area
    over incremental area, so values above 1 mean the incremental pipeline
    is faster). Returns None when the ACR ranges do not overlap."""
    if len(rows) < 2:
        raise ParameterError("area comparison needs at least two sweep points")
    irs = sorted((r.acr_irs, r.mean_time_irs) for r in rows)
    base = sorted((r.acr_baseline, r.mean_time_baseline) for r in rows)
    lo = max(irs[0][0], base[0][0])
    hi = min(irs[-1][0], base[-1][0])
    if hi <= lo:
        return None
    area_irs = _area(irs, lo, hi)
    area_base = _area(base, lo, hi)
    if area_irs <= 0.0:
        return None
    return area_base / area_irs


def _area(points: list[tuple[float, float]], lo: float, hi: float) -> float:
    xs = np.array([p[0] for p in points])
    ys = np.array([p[1] for p in points])
    grid = np.unique(np.concatenate([xs[(xs > lo) & (xs < hi)], [lo, hi]]))
    vals = np.interp(grid, xs, ys)
    return float(np.trapezoid(vals, grid))


def run_recertify(config: ExperimentConfig, n_p: int | None = None) -> CertifyRun:
    """Incremental pass only: recertify the modified classifier against the
    cache and report outcomes (no baseline run)."""
    if config.approx_classifier is None:
        raise ParameterError("recertification needs an approx_classifier descriptor")
    header, records = _load_records(config)
    inputs = build_inputs(config.inputs)
    if len(records) != inputs.shape[0]:
        raise CacheError(
            f"cache holds {len(records)} records but the input set has {inputs.shape[0]}"
        )
    original = build_classifier(config.classifier)
    labels = (
        np.asarray(config.labels, dtype=np.int64)
        if config.labels is not None
        else true_labels(original, inputs, config.sigma)
    )
    original.close()
    modified = build_classifier(config.approx_classifier)
    warm_kernels(modified.dim)
    if n_p is None:
        n_p = max(1, round(max(config.np_fractions) * header.n))
    outcomes = _recertify_all(
        modified,
        inputs,
        records,
        lambda i: RecertifyParams(
            sigma=config.sigma,
            n_p=n_p,
            alpha=config.alpha,
            alpha_zeta=config.alpha_zeta,
            gamma=config.gamma,
            master_seed=fork_seed(config.seed, i),
        ),
        config.n0,
        config.workers,
    )
    modified.close()
    return CertifyRun(outcomes=outcomes, records=records, labels=labels, failures=[])


def run_zeta_report(config: ExperimentConfig, n_p: int) -> list[dict]:
    """Standalone disagreement-bound report: one row per cached input."""
    if config.approx_classifier is None:
        raise ParameterError("zeta report needs an approx_classifier descriptor")
    _, records = _load_records(config)
    inputs = build_inputs(config.inputs)
    modified = build_classifier(config.approx_classifier)

    def work(handle: Classifier, i: int):
        record = records[i]
        if record.is_abstained:
            return None
        params = RecertifyParams(
            sigma=config.sigma,
            n_p=n_p,
            alpha=config.alpha,
            alpha_zeta=config.alpha_zeta,
            gamma=config.gamma,
            master_seed=fork_seed(config.seed, i),
        )
        return estimate_zeta(handle, inputs[i], params, record)

    estimates = _map_inputs(modified, inputs.shape[0], work, config.workers)
    modified.close()
    rows = []
    for i, est in enumerate(estimates):
        if est is None:
            continue
        rows.append(
            {
                "index": i,
                "input_id": records[i].input_id,
                "disagreements": est.disagreements,
                "n_p": est.samples,
                "zeta": f"{est.zeta:.9g}",
            }
        )
    return rows


def run_gamma_sweep(
    config: ExperimentConfig, gammas: tuple = DEFAULT_GAMMA_GRID, n_p: int | None = None
) -> list[dict]:
    """ACR of the incremental pipeline for each threshold gamma."""
    if config.approx_classifier is None:
        raise ParameterError("gamma sweep needs an approx_classifier descriptor")
    header, records = _load_records(config)
    inputs = build_inputs(config.inputs)
    original = build_classifier(config.classifier)
    labels = (
        np.asarray(config.labels, dtype=np.int64)
        if config.labels is not None
        else true_labels(original, inputs, config.sigma)
    )
    original.close()
    modified = build_classifier(config.approx_classifier)
    if n_p is None:
        n_p = max(1, round(max(config.np_fractions) * header.n))

    rows = []
    for gamma in gammas:
        outcomes = _recertify_all(
            modified,
            inputs,
            records,
            lambda i: RecertifyParams(
                sigma=config.sigma,
                n_p=n_p,
                alpha=config.alpha,
                alpha_zeta=config.alpha_zeta,
                gamma=gamma,
                master_seed=fork_seed(config.seed, i),
            ),
            config.n0,
            config.workers,
        )
        acr = average_certified_radius(list(zip(outcomes, labels)))
        rows.append(
            {
                "gamma": gamma,
                "n_p": n_p,
                "acr": f"{acr:.9g}",
                "certified_frac": sum(o.certified for o in outcomes) / len(outcomes),
            }
        )
    modified.close()
    return rows
