"""Sample planning: published anchors, curve shape, estimator consistency."""

import numpy as np
import pytest

from smoothcert.errors import ParameterError, PlanningError
from smoothcert.intervals import (
    BinomialSample,
    BoundMethod,
    ConfidenceBoundSpec,
    lower_confidence_bound,
)
from smoothcert.planner import PlanQuery, Side, required_samples, sample_curve


def cp01():
    return ConfidenceBoundSpec(method=BoundMethod.CLOPPER_PEARSON, alpha=0.01)


class TestRequiredSamples:
    def test_anchor_small_proportion(self):
        result = required_samples(PlanQuery(p_true=0.05, chi=0.005, spec=cp01()))
        assert abs(result.n_required - 41_500) <= 0.05 * 41_500
        assert result.achieved_error <= 0.005

    def test_anchor_half(self):
        result = required_samples(PlanQuery(p_true=0.5, chi=0.005, spec=cp01()))
        assert abs(result.n_required - 216_900) <= 0.05 * 216_900

    def test_anchor_ratio(self):
        small = required_samples(PlanQuery(p_true=0.05, chi=0.005, spec=cp01()))
        half = required_samples(PlanQuery(p_true=0.5, chi=0.005, spec=cp01()))
        ratio = half.n_required / small.n_required
        assert abs(ratio - 5.22) <= 0.1 * 5.22

    def test_result_is_minimal_within_scan_window(self):
        from smoothcert.intervals import upper_confidence_bound

        result = required_samples(PlanQuery(p_true=0.3, chi=0.01, spec=cp01()))
        # nothing in the scan window below the answer also meets the target
        for n in range(max(1, result.n_required - 64), result.n_required):
            k = min(n, max(0, round(0.3 * n)))
            sample = BinomialSample(k, n)
            width = upper_confidence_bound(sample, cp01()) - lower_confidence_bound(
                sample, cp01()
            )
            assert width > 0.01

    def test_unreachable_target(self):
        with pytest.raises(PlanningError):
            required_samples(PlanQuery(p_true=0.5, chi=1e-7, spec=cp01()))

    def test_query_validation(self):
        with pytest.raises(ParameterError):
            PlanQuery(p_true=1.5, chi=0.01, spec=cp01())
        with pytest.raises(ParameterError):
            PlanQuery(p_true=0.5, chi=0.0, spec=cp01())


class TestCurveShape:
    @pytest.mark.parametrize(
        "method",
        [BoundMethod.CLOPPER_PEARSON, BoundMethod.WILSON, BoundMethod.AGRESTI_COULL],
    )
    def test_peak_near_half_and_cheap_boundaries(self, method):
        grid = [0.02, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.98]
        rows = sample_curve(method, [0.01], 0.01, grid)
        required = {row["p"]: row["n_required"] for row in rows}
        peak_p = max(required, key=required.get)
        assert 0.4 <= peak_p <= 0.6
        assert required[0.02] < required[0.5]

    @pytest.mark.parametrize("chi", [0.005, 0.0075, 0.01])
    def test_boundary_cheapness_all_methods(self, chi):
        for method in BoundMethod:
            spec = ConfidenceBoundSpec(method=method, alpha=0.01)
            low = required_samples(PlanQuery(p_true=0.02, chi=chi, spec=spec))
            mid = required_samples(PlanQuery(p_true=0.5, chi=chi, spec=spec))
            assert low.n_required < mid.n_required

    def test_lower_at_p_mirrors_upper_at_one_minus_p(self):
        # width is invariant under k -> n-k for CP, so the plans coincide
        spec = cp01()
        for p in (0.1, 0.25, 0.4):
            lower_n = required_samples(PlanQuery(p_true=p, chi=0.01, spec=spec, side=Side.LOWER))
            upper_n = required_samples(
                PlanQuery(p_true=1 - p, chi=0.01, spec=spec, side=Side.UPPER)
            )
            assert abs(lower_n.n_required - upper_n.n_required) <= max(
                2, 0.005 * lower_n.n_required
            )

    def test_rows_are_csv_shaped(self):
        rows = sample_curve(BoundMethod.WILSON, [0.01], 0.05, [0.1, 0.5])
        assert list(rows[0].keys()) == ["method", "alpha", "chi", "p", "n_required"]
        assert len(rows) == 2

    def test_empty_grids_rejected(self):
        with pytest.raises(ParameterError):
            sample_curve(BoundMethod.WILSON, [], 0.05, [0.1])


def test_planned_n_achieves_error_on_simulated_data():
    # run the actual estimator at the planned n on Bernoulli(p) draws: the
    # mean one-sided gap must come in at or under the width budget
    p_true, chi = 0.2, 0.02
    spec = cp01()
    planned = required_samples(PlanQuery(p_true=p_true, chi=chi, spec=spec))
    rng = np.random.default_rng(0)
    gaps = []
    for _ in range(200):
        k = rng.binomial(planned.n_required, p_true)
        low = lower_confidence_bound(BinomialSample(int(k), planned.n_required), spec)
        gaps.append(p_true - low)
    assert np.mean(gaps) <= chi
