"""Unit-power symbol constellations and hard-decision helpers."""

from __future__ import annotations

import numpy as np

_S = 1.0 / np.sqrt(2.0)

# Gray-labelled, unit average power
CONSTELLATIONS = {
    "bpsk": np.array([1.0 + 0j, -1.0 + 0j]),
    "qpsk": np.array([_S + 1j * _S, -_S + 1j * _S, _S - 1j * _S, -_S - 1j * _S]),
}

BITS_PER_SYMBOL = {"bpsk": 1, "qpsk": 2}


def constellation(name_or_points):
    if isinstance(name_or_points, str):
        try:
            return CONSTELLATIONS[name_or_points]
        except KeyError:
            raise ValueError(f"unknown constellation {name_or_points!r}") from None
    return np.asarray(name_or_points, dtype=complex)


def random_symbol_indices(points, size, rng):
    rng = np.random.default_rng(rng)
    return rng.integers(0, len(points), size=size)


def nearest_point(values, points) -> np.ndarray:
    """Indices of the closest constellation points (first index wins ties)."""
    values = np.asarray(values)
    d = np.abs(values[..., None] - points)
    return np.argmin(d, axis=-1)


def symbol_error_rate(decided_idx, true_idx) -> float:
    decided_idx = np.asarray(decided_idx)
    true_idx = np.asarray(true_idx)
    if decided_idx.size == 0:
        return 0.0
    return float(np.mean(decided_idx != true_idx))


def bit_error_rate(decided_idx, true_idx, name: str) -> float:
    """BER under the Gray labelling of the named constellation."""
    nbits = BITS_PER_SYMBOL[name]
    diff = np.bitwise_xor(np.asarray(decided_idx), np.asarray(true_idx))
    if diff.size == 0:
        return 0.0
    errors = sum(np.mean((diff >> b) & 1) for b in range(nbits))
    return float(errors / nbits)
