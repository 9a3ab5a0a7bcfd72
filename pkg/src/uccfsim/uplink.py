"""Uplink multiuser detection: global MMSE and its local approximations.

A scene holds the per-subcarrier channel gains every detector works from,
the subcarrier assignment, and the per-symbol power coefficients.  Weights
are stored per UE as (M*N, N_k) matrices over the stacked observation
y = [y_1; ...; y_M]; local detectors simply leave the rows of APs they do
not use at zero, so every detector can be evaluated against the same
physical scene (interference from unmodeled UEs stays present).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .modulation import constellation, nearest_point, random_symbol_indices


@dataclass(frozen=True)
class UplinkScene:
    """Channels, subcarrier assignment, powers, and the normalized SNR."""

    freq: np.ndarray        # (M, K, N) complex subcarrier gains
    subcarriers: tuple      # subcarriers[k]: sorted int array, N_k entries
    power: tuple            # power[k]: eta_kn array matching subcarriers[k]
    gamma_u: float          # P_u / sigma^2

    def __post_init__(self):
        object.__setattr__(self, "freq", np.asarray(self.freq, dtype=complex))
        subs = tuple(np.asarray(s, dtype=int) for s in self.subcarriers)
        pows = tuple(np.asarray(p, dtype=float) for p in self.power)
        object.__setattr__(self, "subcarriers", subs)
        object.__setattr__(self, "power", pows)
        if self.gamma_u <= 0:
            raise ValueError("gamma_u must be positive")
        for k, (s, p) in enumerate(zip(subs, pows)):
            if len(s) != len(p):
                raise ValueError(f"UE {k}: power vector does not match subcarriers")
            if p.sum() > 1.0 + 1e-9:
                raise ValueError(f"UE {k}: power budget exceeded")
            if np.any(p < 0):
                raise ValueError(f"UE {k}: negative power")

    @property
    def num_aps(self) -> int:
        return self.freq.shape[0]

    @property
    def num_ues(self) -> int:
        return self.freq.shape[1]

    @property
    def num_subcarriers(self) -> int:
        return self.freq.shape[2]


def equal_power_scene(freq, subcarriers, gamma_u, budget=1.0) -> UplinkScene:
    """Scene with each UE's budget split evenly over its subcarriers."""
    power = tuple(np.full(len(s), budget / max(len(s), 1)) for s in subcarriers)
    return UplinkScene(freq=freq, subcarriers=subcarriers, power=power,
                       gamma_u=gamma_u)


def stacked_channel(scene: UplinkScene, k: int, aps=None) -> np.ndarray:
    """Channel-times-mapping block H_k Phi_k over the chosen APs.

    Shape (len(aps)*N, N_k); row blocks follow the order of ``aps``
    (default: all APs).
    """
    N = scene.num_subcarriers
    aps = range(scene.num_aps) if aps is None else list(aps)
    sub = scene.subcarriers[k]
    B = np.zeros((len(list(aps)) * N, len(sub)), dtype=complex)
    for row, m in enumerate(aps):
        B[row * N + sub, np.arange(len(sub))] = scene.freq[m, k, sub]
    return B


def scene_covariance(scene: UplinkScene, aps=None) -> np.ndarray:
    """Autocorrelation of the stacked observation over the chosen APs."""
    aps = range(scene.num_aps) if aps is None else list(aps)
    n = len(list(aps)) * scene.num_subcarriers
    R = (1.0 / scene.gamma_u) * np.eye(n, dtype=complex)
    for l in range(scene.num_ues):
        B = stacked_channel(scene, l, aps)
        R += (B * scene.power[l]) @ B.conj().T
    return R


def gmmse_weights(scene: UplinkScene):
    """Global MMSE weights per UE, solved jointly on the (MN, MN) system."""
    R = scene_covariance(scene)
    out = []
    for k in range(scene.num_ues):
        B = stacked_channel(scene, k)
        out.append(np.linalg.solve(R, B * np.sqrt(scene.power[k])))
    return out


def gmmse_per_subcarrier(scene: UplinkScene):
    """N parallel M-dimensional MMSE solves; equals the joint solution
    when subcarriers do not interfere (diagonal per-link channels)."""
    M, K, N = scene.freq.shape
    eta = np.zeros((K, N))
    for k, (sub, p) in enumerate(zip(scene.subcarriers, scene.power)):
        eta[k, sub] = p
    out = [np.zeros((M * N, len(scene.subcarriers[k])), dtype=complex)
           for k in range(K)]
    for n in range(N):
        active = np.flatnonzero(eta[:, n] > 0)
        if active.size == 0:
            continue
        H = scene.freq[:, active, n]                      # (M, |active|)
        Rn = (H * eta[active, n]) @ H.conj().T \
            + (1.0 / scene.gamma_u) * np.eye(M, dtype=complex)
        W = np.linalg.solve(Rn, H * np.sqrt(eta[active, n]))
        for col, k in enumerate(active):
            i = int(np.flatnonzero(scene.subcarriers[k] == n)[0])
            out[k][np.arange(M) * N + n, i] = W[:, col]
    return out


def solve_flop_estimate(num_aps: int, num_subcarriers: int, joint: bool) -> float:
    """Cubic-order flop count of the covariance solve(s)."""
    if joint:
        return float((num_aps * num_subcarriers) ** 3)
    return float(num_subcarriers * num_aps**3)


def uplink_sinr(scene: UplinkScene, k: int, i: int) -> float:
    """Closed-form MMSE output SINR of UE k's i-th symbol."""
    R = scene_covariance(scene)
    b = stacked_channel(scene, k)[:, i]
    eta = scene.power[k][i]
    Rki = R - eta * np.outer(b, b.conj())
    return float(np.real(eta * b.conj() @ np.linalg.solve(Rki, b)))


def uplink_sinr_all(scene: UplinkScene):
    """Per-UE arrays of closed-form MMSE symbol SINRs."""
    R = scene_covariance(scene)
    out = []
    for k in range(scene.num_ues):
        B = stacked_channel(scene, k)
        sinrs = np.empty(B.shape[1])
        for i in range(B.shape[1]):
            b = B[:, i]
            eta = scene.power[k][i]
            Rki = R - eta * np.outer(b, b.conj())
            sinrs[i] = np.real(eta * b.conj() @ np.linalg.solve(Rki, b))
        out.append(sinrs)
    return out


def sum_rate(sinrs) -> float:
    """Sum over UEs and symbols of log2(1 + SINR), bits/s/Hz."""
    return float(sum(np.sum(np.log2(1.0 + np.asarray(g))) for g in sinrs))


def uplink_sum_rate(scene: UplinkScene) -> float:
    return sum_rate(uplink_sinr_all(scene))


def lmmse_column_sliced(scene: UplinkScene, assoc):
    """Approximate weights using only the R_y^-1 column blocks of the
    associated APs; with full association this reconstructs the GMMSE."""
    M, N = scene.num_aps, scene.num_subcarriers
    Rinv = np.linalg.inv(scene_covariance(scene))
    out = []
    for k in range(scene.num_ues):
        sub = scene.subcarriers[k]
        W = np.zeros((M * N, len(sub)), dtype=complex)
        for m in assoc.ap_sets[k]:
            Qm = Rinv[:, m * N:(m + 1) * N]
            local = np.zeros((N, len(sub)), dtype=complex)
            local[sub, np.arange(len(sub))] = (scene.freq[m, k, sub]
                                               * np.sqrt(scene.power[k]))
            W += Qm @ local
        out.append(W)
    return out


def lmmse_reduced(scene: UplinkScene, assoc, k: int) -> np.ndarray:
    """GMMSE restricted to the observations of UE k's associated APs.

    Returns full-size (M*N, N_k) weights with zero rows at excluded APs.
    """
    aps = list(assoc.ap_sets[k])
    if not aps:
        raise ValueError("unassociated UE")
    R = scene_covariance(scene, aps)
    B = stacked_channel(scene, k, aps)
    W_sub = np.linalg.solve(R, B * np.sqrt(scene.power[k]))
    N = scene.num_subcarriers
    W = np.zeros((scene.num_aps * N, B.shape[1]), dtype=complex)
    for row, m in enumerate(aps):
        W[m * N:(m + 1) * N] = W_sub[row * N:(row + 1) * N]
    return W


def weight_output_sinr(scene: UplinkScene, k: int, W: np.ndarray) -> np.ndarray:
    """Analytic output SINR of arbitrary stacked weights for UE k."""
    R = scene_covariance(scene)
    B = stacked_channel(scene, k)
    sinrs = np.empty(B.shape[1])
    for i in range(B.shape[1]):
        w = W[:, i]
        b = B[:, i]
        eta = scene.power[k][i]
        signal = eta * np.abs(w.conj() @ b) ** 2
        total = np.real(w.conj() @ R @ w)
        denom = total - signal
        sinrs[i] = signal / denom if denom > 0 else np.inf
    return sinrs


def local_ap_weights(scene: UplinkScene, m: int, k: int) -> np.ndarray:
    """Per-AP MMSE weights (N, N_k) from AP m's own observation model."""
    N = scene.num_subcarriers
    diag = np.full(N, 1.0 / scene.gamma_u)
    for l in range(scene.num_ues):
        sub = scene.subcarriers[l]
        diag[sub] += np.abs(scene.freq[m, l, sub]) ** 2 * scene.power[l]
    sub = scene.subcarriers[k]
    B = np.zeros((N, len(sub)), dtype=complex)
    B[sub, np.arange(len(sub))] = scene.freq[m, k, sub] * np.sqrt(scene.power[k])
    return B / diag[:, None]


def local_ap_estimate(scene: UplinkScene, assoc, y_m: np.ndarray,
                      m: int, k: int) -> np.ndarray:
    """Local soft symbol estimate z_mk = W_mk^H y_m at an associated AP."""
    if m not in assoc.ap_sets[k]:
        raise ValueError(f"AP {m} is not associated with UE {k}")
    return local_ap_weights(scene, m, k).conj().T @ y_m


def local_combining_stats(scene: UplinkScene, assoc, k: int):
    """Per-AP (A_mk, C_mk) of the decomposition z_mk = A_mk x_k + noise.

    A_mk is the signal gain matrix and C_mk the interference-plus-noise
    covariance of AP m's local estimate; both are exact scene statistics.
    """
    N = scene.num_subcarriers
    stats = {}
    for m in assoc.ap_sets[k]:
        W = local_ap_weights(scene, m, k)
        Bk = _local_block(scene, m, k)
        A = W.conj().T @ Bk
        Rm = (1.0 / scene.gamma_u) * np.eye(N, dtype=complex)
        for l in range(scene.num_ues):
            Bl = _local_block(scene, m, l)
            Rm += Bl @ Bl.conj().T
        C = W.conj().T @ (Rm - Bk @ Bk.conj().T) @ W
        stats[m] = (A, C)
    return stats


def _local_block(scene, m, l):
    N = scene.num_subcarriers
    sub = scene.subcarriers[l]
    B = np.zeros((N, len(sub)), dtype=complex)
    B[sub, np.arange(len(sub))] = scene.freq[m, l, sub] * np.sqrt(scene.power[l])
    return B


def sample_combining_stats(scene: UplinkScene, assoc, k: int,
                           num_draws: int, rng, points="qpsk"):
    """Per-AP (A_mk, C_mk) estimated from simulated piloted draws.

    Realism counterpart of :func:`local_combining_stats`: the CPU measures
    the signal gains and residual covariances instead of reading them off
    the scene.  Approaches the analytic statistics as draws grow.
    """
    indices, y = simulate_uplink(scene, num_draws, rng, points)
    pts = constellation(points)
    N = scene.num_subcarriers
    x = pts[indices[k]]                              # (draws, N_k)
    stats = {}
    for m in assoc.ap_sets[k]:
        W = local_ap_weights(scene, m, k)
        z = y[:, m * N:(m + 1) * N] @ W.conj()       # (draws, N_k)
        A = np.diag(np.mean(z * x.conj(), axis=0))   # unit-power symbols
        resid = z - x @ A.T
        C = resid.T @ resid.conj() / num_draws
        stats[m] = (A, C)
    return stats


def cpu_combine(estimates: dict, mode: str, gains=None, stats=None) -> np.ndarray:
    """Fuse per-AP local estimates {m: z_mk} into one decision vector.

    Modes: ``equal`` (no side knowledge), ``mrc`` (needs ``stats`` from
    :func:`local_combining_stats`), ``large_scale_linear`` and
    ``large_scale_sqrt`` (need per-AP ``gains``).
    """
    if not estimates:
        raise ValueError("no associated APs to combine")
    aps = sorted(estimates)
    count = len(aps)
    first = np.asarray(estimates[aps[0]])
    if mode == "equal":
        return sum(np.asarray(estimates[m]) for m in aps) / count
    if mode == "mrc":
        if stats is None:
            raise ValueError("mrc combining needs per-AP (A, C) statistics")
        z = np.zeros_like(first, dtype=complex)
        for m in aps:
            A, C = stats[m]
            z += np.linalg.solve(C, A.conj().T @ np.asarray(estimates[m]))
        return z / count
    if mode in ("large_scale_linear", "large_scale_sqrt"):
        if gains is None:
            raise ValueError("large-scale combining needs per-AP gains")
        g = np.array([gains[m] for m in aps], dtype=float)
        if mode == "large_scale_sqrt":
            g = np.sqrt(g)
        w = g / g.sum()
        return sum(wi * np.asarray(estimates[m]) for wi, m in zip(w, aps))
    raise ValueError(f"unknown combining mode {mode!r}")


def combined_sinr(scene: UplinkScene, assoc, k: int, lambdas: dict) -> np.ndarray:
    """Analytic post-combining SINR for per-AP diagonal combining weights.

    ``lambdas`` maps AP -> (N_k,) per-symbol weights.  Interference is
    correlated across APs (same transmitted symbols), which the variance
    below accounts for exactly.
    """
    aps = sorted(lambdas)
    weights = {m: local_ap_weights(scene, m, k) for m in aps}
    nk = len(scene.subcarriers[k])
    sinrs = np.empty(nk)
    for i in range(nk):
        amp = 0.0 + 0j
        for m in aps:
            w = weights[m][:, i]
            amp += lambdas[m][i] * (w.conj() @ _local_block(scene, m, k)[:, i])
        var = 0.0
        for l in range(scene.num_ues):
            for j in range(len(scene.subcarriers[l])):
                if l == k and j == i:
                    continue
                coef = sum(lambdas[m][i] * (weights[m][:, i].conj()
                                            @ _local_block(scene, m, l)[:, j])
                           for m in aps)
                var += np.abs(coef) ** 2
        var += sum(np.abs(lambdas[m][i]) ** 2
                   * np.linalg.norm(weights[m][:, i]) ** 2 for m in aps) / scene.gamma_u
        sinrs[i] = np.abs(amp) ** 2 / var
    return sinrs


def combining_lambdas(scene: UplinkScene, assoc, k: int, mode: str) -> dict:
    """Per-AP diagonal combining weights for the analytic SINR evaluation."""
    aps = list(assoc.ap_sets[k])
    nk = len(scene.subcarriers[k])
    count = len(aps)
    if mode == "equal":
        return {m: np.ones(nk, dtype=complex) / count for m in aps}
    if mode == "mrc":
        stats = local_combining_stats(scene, assoc, k)
        out = {}
        for m in aps:
            A, C = stats[m]
            out[m] = np.diag(np.linalg.solve(C, A.conj().T)) / count
        return out
    if mode in ("large_scale_linear", "large_scale_sqrt"):
        raise ValueError("large-scale modes need gains; use cpu_combine")
    raise ValueError(f"unknown combining mode {mode!r}")


def simulate_uplink(scene: UplinkScene, num_draws: int, rng,
                    points="qpsk"):
    """Draw symbols and stacked observations from the scene model.

    Returns (symbol index arrays per UE, y) with y of shape
    (num_draws, M*N).
    """
    rng = np.random.default_rng(rng)
    pts = constellation(points)
    M, N = scene.num_aps, scene.num_subcarriers
    y = np.sqrt(0.5 / scene.gamma_u) * (
        rng.standard_normal((num_draws, M * N))
        + 1j * rng.standard_normal((num_draws, M * N)))
    indices = []
    for k in range(scene.num_ues):
        idx = random_symbol_indices(pts, (num_draws, len(scene.subcarriers[k])), rng)
        indices.append(idx)
        y += (pts[idx] * np.sqrt(scene.power[k])) @ stacked_channel(scene, k).T
    return indices, y


def empirical_output_sinr(scene: UplinkScene, k: int, W: np.ndarray,
                          num_draws: int, rng, points="qpsk") -> np.ndarray:
    """Measured per-symbol SINR at the detector output over symbol draws."""
    indices, y = simulate_uplink(scene, num_draws, rng, points)
    pts = constellation(points)
    z = y @ W.conj()                                    # (draws, N_k)
    amp = np.sqrt(scene.power[k]) * np.einsum(
        "ni,ni->i", W.conj(), stacked_channel(scene, k))
    desired = pts[indices[k]] * amp
    err = z - desired
    return (np.abs(amp) ** 2) / np.mean(np.abs(err) ** 2, axis=0)


def sample_scene_covariance(scene: UplinkScene, num_draws: int, rng,
                            points="qpsk") -> np.ndarray:
    """Sample estimate of the stacked-observation autocorrelation."""
    _, y = simulate_uplink(scene, num_draws, rng, points)
    return y.T @ y.conj() / num_draws


def detect_symbols(weights, y, points="qpsk"):
    """Hard decisions per UE from stacked observations y (draws, M*N)."""
    pts = constellation(points)
    return [nearest_point(y @ W.conj(), pts) for W in weights]
