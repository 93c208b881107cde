"""Classifier handles: analytic classifiers with closed-form smoothed
probabilities, plus the client for external classifier processes.

The analytic kinds are first-class because every statistical soundness test
needs exactly computable ground truth. "Approximating" an analytic classifier
is modeled as a parameter perturbation (threshold shift, weight noise), which
controls the disagreement probability directly.
"""

from __future__ import annotations

import hashlib

import numpy as np
from scipy.special import ndtr

from .errors import ParameterError, TransportError, UnsupportedOracleError
from .protocol import Connection


class Classifier:
    """Maps batches of m-vectors to class indices in [0, label_count)."""

    label_count: int
    dim: int

    def predict_batch(self, batch: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def identity(self) -> str:
        raise NotImplementedError

    def clone(self) -> "Classifier":
        """Independent handle for a worker thread; analytic kinds are
        immutable and return themselves."""
        return self

    def close(self) -> None:
        pass

    def _check_batch(self, batch: np.ndarray) -> np.ndarray:
        batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
        if batch.shape[1] != self.dim:
            raise ParameterError(
                f"input dimension {batch.shape[1]} does not match classifier dimension {self.dim}"
            )
        return batch


class Threshold1D(Classifier):
    """Two classes split by a threshold on the first coordinate.

    With `positive_above` (default), class 1 is assigned when x[0] > t.
    Extra coordinates are carried but ignored, which keeps the closed-form
    oracle available at any input dimension.
    """

    def __init__(self, threshold: float, dim: int = 1, positive_above: bool = True):
        if dim < 1:
            raise ParameterError("dim must be >= 1")
        self.threshold = float(threshold)
        self.dim = dim
        self.positive_above = positive_above
        self.label_count = 2

    def predict_batch(self, batch: np.ndarray) -> np.ndarray:
        batch = self._check_batch(batch)
        above = batch[:, 0] > self.threshold
        if not self.positive_above:
            above = ~above
        return above.astype(np.int64)

    def identity(self) -> str:
        return f"threshold1d(t={self.threshold!r},above={int(self.positive_above)},dim={self.dim})"


class LinearClassifier(Classifier):
    """argmax of W x + b; ties resolve to the lowest class index."""

    def __init__(self, weights: np.ndarray, bias: np.ndarray | None = None):
        weights = np.asarray(weights, dtype=np.float64)
        if weights.ndim != 2 or weights.shape[0] < 2:
            raise ParameterError("weights must be (label_count >= 2, dim)")
        self.weights = weights
        self.bias = (
            np.zeros(weights.shape[0]) if bias is None else np.asarray(bias, dtype=np.float64)
        )
        if self.bias.shape != (weights.shape[0],):
            raise ParameterError("bias length must equal label_count")
        self.label_count, self.dim = weights.shape

    def predict_batch(self, batch: np.ndarray) -> np.ndarray:
        batch = self._check_batch(batch)
        scores = batch @ self.weights.T + self.bias
        return np.argmax(scores, axis=1).astype(np.int64)

    def identity(self) -> str:
        digest = hashlib.blake2b(
            self.weights.tobytes() + self.bias.tobytes(), digest_size=8
        ).hexdigest()
        return f"linear(classes={self.label_count},dim={self.dim},params={digest})"


class TableClassifier(Classifier):
    """Nearest-neighbor lookup over an enumerated point set."""

    def __init__(self, points: np.ndarray, labels: np.ndarray):
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        labels = np.asarray(labels, dtype=np.int64)
        if points.shape[0] != labels.shape[0] or points.shape[0] == 0:
            raise ParameterError("points and labels must be equal-length and nonempty")
        self.points = points
        self.labels = labels
        self.dim = points.shape[1]
        self.label_count = max(2, int(labels.max()) + 1)

    def predict_batch(self, batch: np.ndarray) -> np.ndarray:
        batch = self._check_batch(batch)
        d2 = ((batch[:, None, :] - self.points[None, :, :]) ** 2).sum(axis=2)
        return self.labels[np.argmin(d2, axis=1)]

    def identity(self) -> str:
        digest = hashlib.blake2b(
            self.points.tobytes() + self.labels.tobytes(), digest_size=8
        ).hexdigest()
        return f"table(entries={len(self.labels)},dim={self.dim},params={digest})"


class ExternalClassifier(Classifier):
    """Client for a classifier served over the frame protocol.

    One connection per handle; `clone()` opens a fresh connection so each
    worker owns its own channel. Predict batches are chunked at `batch_cap`
    inputs per request.
    """

    def __init__(
        self,
        command: str | None = None,
        address: tuple[str, int] | None = None,
        dim: int | None = None,
        batch_cap: int = 256,
    ):
        if dim is None or dim < 1:
            raise ParameterError("external classifier needs the input dimension")
        if batch_cap < 1:
            raise ParameterError("batch_cap must be >= 1")
        self.dim = dim
        self.batch_cap = batch_cap
        self._conn = Connection(command=command, address=address)
        info = self._conn.info()
        try:
            self.label_count = int(info["label_count"])
            self._identity = str(info["model"])
        except (KeyError, TypeError, ValueError) as exc:
            raise TransportError(f"bad info response: {info!r}") from exc
        if self.label_count < 2:
            raise TransportError(f"adapter reported label_count={self.label_count}")

    def predict_batch(self, batch: np.ndarray) -> np.ndarray:
        batch = self._check_batch(batch)
        parts = [
            self._conn.predict(batch[i : i + self.batch_cap])
            for i in range(0, batch.shape[0], self.batch_cap)
        ]
        return np.concatenate(parts)

    def identity(self) -> str:
        return self._identity

    def clone(self) -> "ExternalClassifier":
        return ExternalClassifier(
            command=self._conn.command,
            address=self._conn.address,
            dim=self.dim,
            batch_cap=self.batch_cap,
        )

    def close(self) -> None:
        self._conn.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _threshold_prob_above(h: Threshold1D, x: np.ndarray, sigma: float) -> float:
    x0 = float(np.atleast_1d(np.asarray(x, dtype=np.float64))[0])
    return float(ndtr((x0 - h.threshold) / sigma))


def exact_smoothed_probability(h: Classifier, x: np.ndarray, sigma: float, c: int) -> float:
    """P[h(x + noise) = c] in closed form, where available.

    Threshold1D and two-class linear classifiers admit one: only a single
    Gaussian projection decides the label.
    """
    if sigma <= 0.0:
        raise ParameterError("sigma must be positive")
    if not (0 <= c < h.label_count):
        raise ParameterError(f"class {c} outside [0, {h.label_count})")
    if isinstance(h, Threshold1D):
        p_above = _threshold_prob_above(h, x, sigma)
        p_one = p_above if h.positive_above else 1.0 - p_above
        return p_one if c == 1 else 1.0 - p_one
    if isinstance(h, LinearClassifier) and h.label_count == 2:
        dw = h.weights[1] - h.weights[0]
        db = h.bias[1] - h.bias[0]
        norm = float(np.linalg.norm(dw))
        if norm == 0.0:
            raise UnsupportedOracleError("degenerate linear pair (identical weight rows)")
        x = np.asarray(x, dtype=np.float64)
        p_one = float(ndtr((float(dw @ x) + db) / (sigma * norm)))
        return p_one if c == 1 else 1.0 - p_one
    raise UnsupportedOracleError(f"no smoothing oracle for {type(h).__name__}")


def exact_disagreement_probability(
    h: Classifier, hp: Classifier, x: np.ndarray, sigma: float
) -> float:
    """P[h(x + noise) != hp(x + noise)] for a Threshold1D pair: the Gaussian
    mass of the strip between the two thresholds."""
    if sigma <= 0.0:
        raise ParameterError("sigma must be positive")
    if not (isinstance(h, Threshold1D) and isinstance(hp, Threshold1D)):
        raise UnsupportedOracleError("disagreement oracle needs two Threshold1D handles")
    if h.positive_above != hp.positive_above:
        raise UnsupportedOracleError("disagreement oracle needs matching orientations")
    x0 = float(np.atleast_1d(np.asarray(x, dtype=np.float64))[0])
    t_lo = min(h.threshold, hp.threshold)
    t_hi = max(h.threshold, hp.threshold)
    return float(ndtr((t_hi - x0) / sigma) - ndtr((t_lo - x0) / sigma))
