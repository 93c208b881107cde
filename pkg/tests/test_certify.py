"""From-scratch certification: algorithm behavior, determinism, soundness."""

import numpy as np
import pytest

from smoothcert.cache import input_digest
from smoothcert.certify import (
    CertificationOutcome,
    CertifyParams,
    Status,
    average_certified_radius,
    certify,
)
from smoothcert.classifiers import Threshold1D, exact_smoothed_probability
from smoothcert.errors import ParameterError
from smoothcert.intervals import (
    BinomialSample,
    ConfidenceBoundSpec,
    inverse_normal_cdf,
    lower_confidence_bound,
)

from oracles import cp_lower_oracle, normal_cdf_hp

H = Threshold1D(0.0)


def test_three_sigma_input_certifies():
    # true top-class probability Phi(3) ~ 0.99865; the observed count must
    # land within 5 binomial standard deviations of its mean
    params = CertifyParams(sigma=1.0, n0=100, n=10_000, alpha=0.001, master_seed=101)
    outcome, record = certify(H, np.array([3.0]), params)
    assert outcome.status is Status.CERTIFIED
    assert outcome.prediction == 1
    p_true = normal_cdf_hp(3.0)
    sd = np.sqrt(10_000 * p_true * (1 - p_true))
    hits = int(np.count_nonzero(record.predictions == record.top_class))
    assert abs(hits - 10_000 * p_true) <= 5 * sd
    # the reported bound and radius must match the interval oracle exactly
    assert outcome.p_lower == pytest.approx(cp_lower_oracle(hits, 10_000, 0.001), abs=1e-8)
    assert outcome.radius == pytest.approx(inverse_normal_cdf(outcome.p_lower), abs=1e-12)


def test_boundary_input_abstains_in_most_runs():
    # at x = 0 the true probability is exactly 1/2; certification should
    # essentially always abstain
    abstained = 0
    params_base = dict(sigma=1.0, n0=20, n=500, alpha=0.001)
    for seed in range(100):
        outcome, _ = certify(H, np.array([0.0]), CertifyParams(master_seed=seed, **params_base))
        abstained += outcome.status is Status.ABSTAIN
    assert abstained >= 95


def test_single_sample_cannot_certify():
    # CP lower bound of 1/1 at alpha=0.001 is 0.001 < 1/2
    outcome, record = certify(H, np.array([5.0]), CertifyParams(sigma=1.0, n0=1, n=1))
    assert outcome.status is Status.ABSTAIN
    assert outcome.radius == 0.0
    assert record.is_abstained


def test_determinism():
    params = CertifyParams(sigma=0.5, n0=50, n=2000, alpha=0.01, master_seed=77)
    a_out, a_rec = certify(H, np.array([1.0]), params, input_id="x")
    b_out, b_rec = certify(H, np.array([1.0]), params, input_id="x")
    assert (a_out.status, a_out.prediction, a_out.radius, a_out.p_lower) == (
        b_out.status,
        b_out.prediction,
        b_out.radius,
        b_out.p_lower,
    )
    assert np.array_equal(a_rec.seeds, b_rec.seeds)
    assert np.array_equal(a_rec.predictions, b_rec.predictions)


def test_cache_record_contents():
    params = CertifyParams(sigma=1.0, n0=50, n=1000, alpha=0.001, master_seed=3)
    x = np.array([2.0])
    outcome, record = certify(H, x, params, input_id="input-000042")
    assert record.input_id == "input-000042"
    assert record.input_digest == input_digest(x)
    assert record.n == 1000 and len(record.seeds) == 1000 == len(record.predictions)
    assert record.top_class == outcome.prediction
    assert record.p_lower == outcome.p_lower
    assert record.predictions.dtype == np.uint16


def test_selection_and_estimation_seeds_are_disjoint_branches():
    params = CertifyParams(sigma=1.0, n0=1000, n=1000, master_seed=5)
    _, record = certify(H, np.array([1.0]), params)
    from smoothcert.noise import derive_seed_list

    assert np.array_equal(record.seeds, derive_seed_list(5, 1000))


def test_radius_monotone_in_observed_count():
    spec = ConfidenceBoundSpec(alpha=0.001)
    radii = []
    for k in range(600, 1000, 25):
        p = lower_confidence_bound(BinomialSample(k, 1000), spec)
        radii.append(inverse_normal_cdf(p) if p > 0.5 else 0.0)
    assert radii == sorted(radii)


def test_certified_region_matches_exact_smoothed_classifier():
    # when the certificate is sound (p_lower below the true probability),
    # the exact smoothed classifier must still pick the certified class at
    # the extreme perturbations x +/- R
    params = CertifyParams(sigma=0.7, n0=100, n=5000, alpha=0.001, master_seed=13)
    x = np.array([1.2])
    outcome, _ = certify(H, x, params)
    assert outcome.status is Status.CERTIFIED
    p_true = exact_smoothed_probability(H, x, 0.7, 1)
    assert outcome.p_lower <= p_true  # sound in this seeded run
    for delta in (-outcome.radius, outcome.radius):
        shifted = x + delta
        assert exact_smoothed_probability(H, shifted, 0.7, 1) > 0.5


def test_soundness_rate_small_scale():
    # p_lower must overshoot the true probability with frequency <= alpha;
    # 400 runs at alpha=0.01 gives expectation 4, slack to 3 sigma
    alpha, runs = 0.01, 400
    p_true = normal_cdf_hp(1.0)
    violations = 0
    for seed in range(runs):
        params = CertifyParams(sigma=1.0, n0=20, n=1000, alpha=alpha, master_seed=seed)
        outcome, _ = certify(H, np.array([1.0]), params)
        violations += outcome.p_lower > p_true
    limit = alpha + 3 * np.sqrt(alpha * (1 - alpha) / runs)
    assert violations / runs <= limit


class TestAverageCertifiedRadius:
    def make(self, status, prediction, radius):
        return CertificationOutcome(
            status=status,
            prediction=prediction,
            radius=radius,
            p_lower=0.9,
            samples_used=1,
            elapsed=0.0,
        )

    def test_all_abstain(self):
        outcomes = [(self.make(Status.ABSTAIN, None, 0.0), 1)] * 3
        assert average_certified_radius(outcomes) == 0.0

    def test_mixed(self):
        outcomes = [
            (self.make(Status.CERTIFIED, 1, 0.5), 1),
            (self.make(Status.ABSTAIN, None, 0.0), 1),
        ]
        assert average_certified_radius(outcomes) == pytest.approx(0.25)

    def test_wrong_label_counts_zero(self):
        outcomes = [(self.make(Status.CERTIFIED, 1, 0.5), 0)]
        assert average_certified_radius(outcomes) == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ParameterError):
            average_certified_radius([])


def test_params_validation():
    with pytest.raises(ParameterError):
        CertifyParams(sigma=0.0)
    with pytest.raises(ParameterError):
        CertifyParams(sigma=1.0, n=0)
    with pytest.raises(ParameterError):
        CertifyParams(sigma=1.0, alpha=0.6)
