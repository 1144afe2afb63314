import math

import numpy as np
import pytest

from conftest import random_sig, scalar_sig
from linksig.channel import ChannelSnapshot
from linksig.errors import DimensionMismatch, InsufficientHistory
from linksig.signatures import (
    KIND_COMPLEX,
    KIND_MAGNITUDE,
    LinkSignature,
    ctls_from_snapshot,
    delta,
    distance,
    l2_dist,
    phi2_dist,
    sigma,
    tls_from_ctls,
)


def snapshot(taps):
    return ChannelSnapshot(taps=np.asarray(taps, dtype=complex),
                           sample_period_s=25e-9)


class TestCtlsFromSnapshot:
    def test_siso_reduction(self, rng):
        taps = rng.standard_normal((2, 2, 5)) + 1j * rng.standard_normal((2, 2, 5))
        sig = ctls_from_snapshot(snapshot(taps), 1, 1)
        np.testing.assert_array_equal(sig.values, taps[0, 0])
        assert (sig.k1, sig.k2, sig.n_taps) == (1, 1, 5)

    def test_row_major_pair_order(self):
        # tap vectors tagged by their (i, j) pair index
        taps = np.zeros((2, 2, 3), dtype=complex)
        for i in range(2):
            for j in range(2):
                taps[i, j] = 10 * (i + 1) + (j + 1)
        sig = ctls_from_snapshot(snapshot(taps))
        assert len(sig.values) == 12
        expected = np.repeat([11, 12, 21, 22], 3)
        np.testing.assert_array_equal(sig.values, expected)
        assert sig.pair_order == [(1, 1), (1, 2), (2, 1), (2, 2)]

    def test_full_8x8_length(self, rng):
        taps = rng.standard_normal((8, 8, 40)) * (1 + 0j)
        sig = ctls_from_snapshot(snapshot(taps))
        assert len(sig.values) == 2560

    def test_subset_too_large(self, rng):
        taps = rng.standard_normal((2, 2, 3)) * (1 + 0j)
        with pytest.raises(ValueError):
            ctls_from_snapshot(snapshot(taps), 3, 2)


class TestTlsFromCtls:
    def test_unit_magnitudes(self):
        sig = LinkSignature(KIND_COMPLEX, np.array([1, -1, 1j]), 1, 1, 3)
        np.testing.assert_array_equal(tls_from_ctls(sig).values, [1, 1, 1])

    def test_zero_vector(self):
        sig = LinkSignature(KIND_COMPLEX, np.zeros(3, dtype=complex), 1, 1, 3)
        np.testing.assert_array_equal(tls_from_ctls(sig).values, [0, 0, 0])

    def test_three_four_five(self):
        sig = LinkSignature(KIND_COMPLEX, np.array([3 + 4j]), 1, 1, 1)
        np.testing.assert_array_equal(tls_from_ctls(sig).values, [5.0])

    def test_phase_invariance(self, rng):
        sig = random_sig(rng, 2, 2, 4)
        rotated = LinkSignature(KIND_COMPLEX, sig.values * np.exp(0.77j),
                                2, 2, 4)
        np.testing.assert_allclose(tls_from_ctls(sig).values,
                                   tls_from_ctls(rotated).values, atol=1e-12)

    def test_rejects_magnitude_input(self, rng):
        mag = tls_from_ctls(random_sig(rng))
        with pytest.raises(ValueError):
            tls_from_ctls(mag)


class TestL2Dist:
    def test_identical(self, rng):
        sig = random_sig(rng)
        assert l2_dist(sig, sig) == 0.0

    def test_orthogonal_units(self):
        a = LinkSignature(KIND_COMPLEX, np.array([1, 0], dtype=complex), 1, 1, 2)
        b = LinkSignature(KIND_COMPLEX, np.array([0, 1], dtype=complex), 1, 1, 2)
        assert abs(l2_dist(a, b) - math.sqrt(2)) < 1e-12

    def test_brute_force_oracle(self, rng):
        for _ in range(20):
            a, b = random_sig(rng, 2, 1, 5), random_sig(rng, 2, 1, 5)
            direct = math.sqrt(sum(abs(x - y) ** 2
                                   for x, y in zip(a.values, b.values)))
            assert abs(l2_dist(a, b) - direct) < 1e-12

    def test_dimension_mismatch(self, rng):
        with pytest.raises(DimensionMismatch):
            l2_dist(random_sig(rng, 1, 1, 4), random_sig(rng, 1, 1, 5))


class TestPhi2Dist:
    def test_phase_rotation_invariance(self, rng):
        for phi in [0.0, 0.3, np.pi, 5.1]:
            a = random_sig(rng)
            b = LinkSignature(KIND_COMPLEX, a.values * np.exp(1j * phi),
                              1, 1, a.n_taps)
            assert phi2_dist(a, b) < 1e-9

    def test_orthogonal_units(self):
        a = LinkSignature(KIND_COMPLEX, np.array([1, 0], dtype=complex), 1, 1, 2)
        b = LinkSignature(KIND_COMPLEX, np.array([0, 1], dtype=complex), 1, 1, 2)
        assert abs(phi2_dist(a, b) - math.sqrt(2)) < 1e-12

    def test_grid_oracle(self, rng):
        phis = np.linspace(0.0, 2 * np.pi, 10_000, endpoint=False)
        for _ in range(10):
            a, b = random_sig(rng), random_sig(rng)
            grid = np.min(
                np.linalg.norm(a.values[:, None]
                               - b.values[:, None] * np.exp(1j * phis)[None, :],
                               axis=0)
            )
            assert abs(phi2_dist(a, b) - grid) < 1e-5

    def test_symmetry_exact(self, rng):
        a, b = random_sig(rng), random_sig(rng)
        assert phi2_dist(a, b) == phi2_dist(b, a)

    def test_dominated_by_l2(self, rng):
        for _ in range(50):
            a, b = random_sig(rng), random_sig(rng)
            assert phi2_dist(a, b) <= l2_dist(a, b) + 1e-12

    def test_rejects_magnitude(self, rng):
        mag = tls_from_ctls(random_sig(rng))
        with pytest.raises(ValueError):
            phi2_dist(mag, mag)


class TestSigma:
    def test_identical_entries(self):
        h = [scalar_sig(2.0)] * 3
        assert sigma(h, "l2") == 0.0

    def test_hand_example_paper_constant(self):
        h = [scalar_sig(0), scalar_sig(1), scalar_sig(2)]
        assert abs(sigma(h, "l2", "paper") - 2.0) < 1e-12

    def test_hand_example_mean_pairwise(self):
        h = [scalar_sig(0), scalar_sig(1), scalar_sig(2)]
        assert abs(sigma(h, "l2", "mean-pairwise") - 4.0 / 3.0) < 1e-12

    def test_insufficient_history(self):
        with pytest.raises(InsufficientHistory):
            sigma([scalar_sig(0), scalar_sig(1)], "l2")


class TestDelta:
    def test_member_of_history(self):
        h = [scalar_sig(0), scalar_sig(1), scalar_sig(2)]
        assert delta(scalar_sig(1), h, "l2") == 0.0

    def test_hand_example(self):
        h = [scalar_sig(0), scalar_sig(1), scalar_sig(2)]
        assert abs(delta(scalar_sig(5), h, "l2") - 1.5) < 1e-12

    def test_degenerate_history_distinct_current(self):
        h = [scalar_sig(3)] * 4
        assert delta(scalar_sig(1), h, "l2") == math.inf

    def test_degenerate_history_identical_current(self):
        h = [scalar_sig(3)] * 4
        assert delta(scalar_sig(3), h, "l2") == 0.0

    def test_min_term_monotone_in_history(self, rng):
        # the un-normalized minimum distance never grows as entries are added
        current = random_sig(rng)
        history = [random_sig(rng) for _ in range(3)]
        prev = min(distance(e, current, "l2") for e in history)
        for _ in range(5):
            history.append(random_sig(rng))
            cur = min(distance(e, current, "l2") for e in history)
            assert cur <= prev + 1e-15
            prev = cur

    def test_dimension_mismatch(self, rng):
        h = [random_sig(rng, 1, 1, 4) for _ in range(3)]
        with pytest.raises(DimensionMismatch):
            delta(random_sig(rng, 1, 1, 5), h, "l2")


def test_magnitude_signature_rejects_negative():
    with pytest.raises(ValueError):
        LinkSignature(KIND_MAGNITUDE, np.array([1.0, -0.5]), 1, 1, 2)


def test_length_validation():
    with pytest.raises(DimensionMismatch):
        LinkSignature(KIND_COMPLEX, np.zeros(5, dtype=complex), 1, 2, 3)
