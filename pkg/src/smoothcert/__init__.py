"""Probabilistic robustness certificates for smoothed classifiers, with
incremental recertification of modified (quantized, pruned, perturbed)
variants from cached certification state."""

from .cache import CacheHeader, CacheRecord, input_digest, read_cache, write_cache
from .certify import (
    CertificationOutcome,
    CertifyParams,
    Status,
    average_certified_radius,
    certify,
)
from .classifiers import (
    Classifier,
    ExternalClassifier,
    LinearClassifier,
    TableClassifier,
    Threshold1D,
    exact_disagreement_probability,
    exact_smoothed_probability,
)
from .errors import (
    CacheCompatibilityError,
    CacheError,
    CacheFormatError,
    CacheVersionError,
    NumericsError,
    ParameterError,
    PlanningError,
    SmoothcertError,
    TransportError,
    UnsupportedGeneratorError,
    UnsupportedOracleError,
)
from .intervals import (
    BinomialSample,
    BoundMethod,
    ConfidenceBoundSpec,
    beta_quantile,
    inverse_normal_cdf,
    lower_confidence_bound,
    upper_confidence_bound,
)
from .noise import GENERATOR_ID, NoiseSpec, derive_seed_list, fork_seed, sample_noise, sample_noise_batch
from .planner import PlanQuery, PlanResult, Side, required_samples, sample_curve
from .recertify import (
    RecertifyParams,
    ZetaEstimate,
    estimate_zeta,
    incremental_radius,
    recertify,
    two_sided_radius,
)

__version__ = "0.1.0"
