from __future__ import annotations

import math

import numpy as np
import pytest

from synth import overconfident_logits

from argex.calibration import (
    DEFAULT_BINS,
    LogitVector,
    ScoredPrediction,
    bin_predictions,
    build_report,
    ece,
    first_token_confidence,
    fit_temperature,
    scale,
    temperature_grid,
)
from argex.errors import CalibrationError
from argex.generator import truncate_logits
from argex.types import ArgumentPrediction


def softmax_oracle(values, temperature=1.0):
    exps = [math.exp(v / temperature) for v in values]
    return [e / sum(exps) for e in exps]


class TestScale:
    def test_identity_temperature_equals_raw_softmax(self):
        z = LogitVector(values=(3.0, 1.0, 0.0))
        assert scale(z, 1.0) == pytest.approx(max(softmax_oracle([3.0, 1.0, 0.0])), abs=1e-12)

    def test_two_value_vector_at_t2(self):
        z = LogitVector(values=(2.0, 0.0))
        expected = math.e / (math.e + 1.0)  # softmax(1, 0) after dividing by T=2
        assert scale(z, 2.0) == pytest.approx(expected, abs=1e-12)

    def test_uniform_logits_give_one_over_k(self):
        for k in (2, 5, 8):
            z = LogitVector(values=(0.7,) * k)
            for temperature in (0.5, 1.0, 3.0):
                assert scale(z, temperature) == pytest.approx(1.0 / k, abs=1e-12)

    def test_large_temperature_approaches_uniform(self):
        z = LogitVector(values=tuple(v / 100 for v in range(10)))
        assert scale(z, 100.0) == pytest.approx(0.1, abs=1e-3)
        wide = LogitVector(values=tuple(float(v) for v in range(10)))
        assert scale(wide, 1e6) == pytest.approx(0.1, abs=1e-3)

    def test_nonpositive_temperature_rejected(self):
        z = LogitVector(values=(1.0, 0.0))
        with pytest.raises(CalibrationError):
            scale(z, 0.0)
        with pytest.raises(CalibrationError):
            scale(z, -1.0)

    def test_argmax_invariance_under_temperature(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            values = rng.normal(0.0, 3.0, size=int(rng.integers(2, 12)))
            temperature = float(rng.uniform(0.1, 10.0))
            probs = softmax_oracle(values.tolist(), temperature)
            assert int(np.argmax(probs)) == int(np.argmax(values))
            z = LogitVector(values=tuple(values.tolist()))
            assert scale(z, temperature) == pytest.approx(max(probs), rel=1e-10)

    def test_monotone_flattening_in_temperature(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            values = tuple(rng.normal(0.0, 2.0, size=6).tolist())
            z = LogitVector(values=values)
            probs = [scale(z, t) for t in np.arange(0.5, 5.01, 0.25)]
            assert all(a > b for a, b in zip(probs, probs[1:]))


class TestResidualTruncation:
    def test_exact_at_identity_temperature(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            values = rng.normal(0.0, 1.5, size=100).tolist()
            full = LogitVector(values=tuple(values))
            trunc = truncate_logits(values, None, 50)
            assert len(trunc.values) == 50
            assert trunc.residual_mass > 0.0
            assert scale(trunc, 1.0) == pytest.approx(scale(full, 1.0), abs=1e-12)

    def test_bias_is_bounded_and_directional(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            values = rng.normal(0.0, 1.5, size=100).tolist()
            full = LogitVector(values=tuple(values))
            trunc = truncate_logits(values, None, 50)
            # aggregate bucket flattens slower than individual logits
            assert scale(trunc, 2.0) >= scale(full, 2.0) - 1e-12
            assert scale(trunc, 2.0) == pytest.approx(scale(full, 2.0), abs=0.05)
            assert scale(trunc, 0.5) <= scale(full, 0.5) + 1e-12


class TestBinning:
    def test_default_bin_count_is_ten(self):
        assert DEFAULT_BINS == 10
        bins = bin_predictions([ScoredPrediction(confidence=0.95, correct=True)])
        assert bins.k == 10

    def test_high_confidences_land_in_one_bin(self):
        preds = [ScoredPrediction(confidence=0.91 + i / 1000, correct=True) for i in range(20)]
        bins = bin_predictions(preds, k=10)
        assert bins.counts[9] == 20
        assert sum(bins.counts) == 20

    def test_counts_match_bruteforce_histogram(self):
        rng = np.random.default_rng(11)
        confs = rng.uniform(0.0001, 1.0, size=100)
        bins = bin_predictions(
            [ScoredPrediction(confidence=float(c), correct=True) for c in confs], k=10
        )
        oracle = [0] * 10
        for c in confs:
            for i in range(10):
                lo, hi = i / 10, (i + 1) / 10
                if (c > lo or i == 0) and c <= hi:
                    oracle[i] += 1
                    break
        assert list(bins.counts) == oracle

    def test_empty_input_gives_zero_bins_and_zero_ece(self):
        bins = bin_predictions([], k=10)
        assert sum(bins.counts) == 0
        assert ece(bins) == 0.0


class TestEce:
    def test_perfectly_calibrated_is_exactly_zero(self):
        preds = [ScoredPrediction(confidence=0.75, correct=i < 3) for i in range(4)]
        preds += [ScoredPrediction(confidence=0.25, correct=i < 1) for i in range(4)]
        assert ece(bin_predictions(preds, k=10)) == 0.0

    def test_single_bin_gap(self):
        preds = [ScoredPrediction(confidence=0.8, correct=i < 5) for i in range(10)]
        assert ece(bin_predictions(preds, k=10)) == pytest.approx(0.3, abs=1e-12)

    def test_two_bin_weighted_average(self):
        preds = [ScoredPrediction(confidence=0.9, correct=i < 6) for i in range(10)]
        preds += [ScoredPrediction(confidence=0.6, correct=i < 6) for i in range(10)]
        # (10/20)*|0.6-0.9| + (10/20)*|0.6-0.6| = 0.15
        assert ece(bin_predictions(preds, k=10)) == pytest.approx(0.15, abs=1e-12)

    def test_bounded_by_unit_interval(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            preds = [
                ScoredPrediction(confidence=float(c), correct=bool(rng.random() < 0.5))
                for c in rng.uniform(0.001, 1.0, size=int(rng.integers(1, 40)))
            ]
            assert 0.0 <= ece(bin_predictions(preds, k=10)) <= 1.0


class TestFitTemperature:
    def test_overconfident_set_fits_above_one_and_halves_ece(self):
        entries = [
            (LogitVector(values=values), correct)
            for values, correct in overconfident_logits(2000, seed=1)
        ]
        report = build_report(entries, grid=(0.5, 5.0, 0.01), k=10)
        assert report.temperature > 1.0
        assert report.ece_after <= 0.5 * report.ece_before

    def test_minimizer_never_beaten_by_identity(self):
        rng = np.random.default_rng(29)
        entries = []
        for _ in range(500):
            gap = float(rng.uniform(0.5, 3.0))
            p = 1.0 / (1.0 + math.exp(-gap))
            entries.append((LogitVector(values=(gap, 0.0)), bool(rng.random() < p)))
        report = build_report(entries, grid=(0.5, 5.0, 0.05), k=10)
        assert report.ece_after <= report.ece_before + 1e-12

    def test_singleton_grid_returns_that_point(self):
        entries = [(LogitVector(values=(2.0, 0.0)), True)]
        assert fit_temperature(entries, grid=(1.0, 1.0, 0.01)) == 1.0

    def test_empty_validation_set_rejected(self):
        with pytest.raises(CalibrationError, match="empty"):
            fit_temperature([], grid=(0.5, 5.0, 0.1))

    def test_tie_breaks_to_smallest_temperature(self):
        # one always-correct uniform-logit entry: every T gives the same ECE
        entries = [(LogitVector(values=(1.0, 1.0)), True)]
        assert fit_temperature(entries, grid=(0.5, 2.0, 0.5)) == 0.5

    def test_grid_is_inclusive_and_ordered(self):
        points = temperature_grid((0.5, 5.0, 0.01))
        assert points[0] == pytest.approx(0.5)
        assert points[-1] == pytest.approx(5.0)
        assert len(points) == 451


class TestFirstTokenConfidence:
    def arg(self, logits):
        return ArgumentPrediction(
            text="Mike",
            slot_id=2,
            role="Detainee",
            first_token_logits=logits,
            raw_prob=scale(logits, 1.0) if logits else None,
        )

    def test_identity_temperature_matches_raw(self):
        arg = self.arg(LogitVector(values=(3.0, 1.0, 0.0)))
        assert first_token_confidence(arg, 1.0) == pytest.approx(arg.raw_prob, abs=1e-9)

    def test_t2_on_two_value_logits(self):
        arg = self.arg(LogitVector(values=(2.0, 0.0)))
        assert first_token_confidence(arg, 2.0) == pytest.approx(math.e / (math.e + 1.0), abs=1e-12)

    def test_missing_logits_error_names_slot(self):
        arg = ArgumentPrediction(text="Mike", slot_id=2, role="Detainee")
        with pytest.raises(CalibrationError, match="slot 2"):
            first_token_confidence(arg, 1.0)


def test_flattening_empties_the_top_bin():
    """Over-confident mass leaves (0.9, 1.0] after calibration."""
    entries = [
        (LogitVector(values=values), correct)
        for values, correct in overconfident_logits(2000, seed=5)
    ]
    report = build_report(entries, grid=(0.5, 5.0, 0.01), k=10)
    assert report.bins_before.counts[9] > report.bins_after.counts[9]
    assert report.bins_before.counts[9] >= 0.5 * report.n
