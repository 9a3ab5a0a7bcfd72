import numpy as np
import pytest

from uccfsim.modulation import (CONSTELLATIONS, bit_error_rate, constellation,
                                nearest_point, random_symbol_indices,
                                symbol_error_rate)


class TestConstellations:
    def test_unit_average_power(self):
        for name, pts in CONSTELLATIONS.items():
            assert np.mean(np.abs(pts) ** 2) == pytest.approx(1.0)

    def test_lookup_by_name_and_passthrough(self):
        assert np.array_equal(constellation("bpsk"), CONSTELLATIONS["bpsk"])
        custom = np.array([1.0, 1j, -1.0, -1j])
        assert np.array_equal(constellation(custom), custom)

    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError, match="unknown constellation"):
            constellation("16qam")


class TestDecisions:
    def test_nearest_point_basic(self):
        pts = CONSTELLATIONS["bpsk"]
        got = nearest_point(np.array([0.9, -1.4, 0.2]), pts)
        assert got.tolist() == [0, 1, 0]

    def test_ties_take_first_index(self):
        pts = CONSTELLATIONS["bpsk"]
        assert nearest_point(np.array([0.0 + 0j]), pts)[0] == 0

    def test_symbol_error_rate(self):
        assert symbol_error_rate([0, 1, 1, 0], [0, 1, 0, 0]) == 0.25
        assert symbol_error_rate([], []) == 0.0

    def test_gray_ber_counts_single_bit_flips(self):
        # qpsk indices are gray-coded bit pairs: index 0 vs 1 differ in one bit
        assert bit_error_rate([1], [0], "qpsk") == 0.5
        # index 0 vs 3 differ in both bits
        assert bit_error_rate([3], [0], "qpsk") == 1.0
        assert bit_error_rate([1], [0], "bpsk") == 1.0

    def test_random_indices_reproducible(self):
        pts = CONSTELLATIONS["qpsk"]
        a = random_symbol_indices(pts, (3, 4), np.random.default_rng(2))
        b = random_symbol_indices(pts, (3, 4), np.random.default_rng(2))
        assert np.array_equal(a, b)
        assert a.max() < 4 and a.min() >= 0
