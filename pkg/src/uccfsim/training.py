"""Pilot training and MMSE channel estimation.

UEs send unit-modulus pilot blocks over their assigned subcarriers for
``num_symbols`` OFDM symbols.  Each AP sees the superposition of its
associated UEs through the frequency-domain observation model and estimates
the time-domain CIR taps with an unbiased (diagonally renormalized) MMSE
estimator, with or without explicit multiuser-interference suppression.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# relative diagonal jitter guarding the estimator's matrix inversions
_JITTER = 1e-12


@dataclass(frozen=True)
class PilotPlan:
    """Per-UE pilot blocks, subcarrier maps, tap counts, and powers."""

    pilot_blocks: tuple          # pilot_blocks[k]: (N_k, tau_p) complex
    subcarrier_sets: tuple       # subcarrier_sets[k]: sorted int array (N_k,)
    num_taps: tuple              # modeled CIR length per UE
    pilot_power: tuple           # watts per active subcarrier, per UE
    num_subcarriers: int
    num_symbols: int             # tau_p

    def __post_init__(self):
        for k, (s, sub, L) in enumerate(zip(self.pilot_blocks,
                                            self.subcarrier_sets, self.num_taps)):
            nk = len(sub)
            if s.shape != (nk, self.num_symbols):
                raise ValueError(f"pilot block of UE {k} has wrong shape")
            if not L <= nk <= self.num_subcarriers:
                raise ValueError(f"UE {k} needs L <= N_k <= N")

    @property
    def num_ues(self) -> int:
        return len(self.pilot_blocks)


def make_pilot_plan(num_ues, num_subcarriers, num_symbols, num_taps,
                    pilot_power=1.0, subcarrier_sets=None, roots=None) -> PilotPlan:
    """Build a DFT-family pilot plan.

    UE k repeats the unit-modulus sequence exp(j 2 pi r_k t / (N_k tau_p))
    over its pilot resource grid; distinct roots make the observation
    matrices nearly orthogonal, repeated roots force pilot contamination.
    By default every UE pilots on all N subcarriers with root index k.
    """
    if subcarrier_sets is None:
        subcarrier_sets = [np.arange(num_subcarriers)] * num_ues
    subcarrier_sets = [np.sort(np.asarray(s, dtype=int)) for s in subcarrier_sets]
    num_taps = np.broadcast_to(np.asarray(num_taps, dtype=int), (num_ues,))
    if roots is None:
        # stagger the roots: a time offset inside tau_p plus hops of
        # tau_p * L keeps both the symbol dimension and the tap subspaces
        # of different UEs orthogonal (up to N * tau_p / L users)
        lmax = int(num_taps.max())
        roots = [(k % num_symbols) + num_symbols * lmax * (k // num_symbols)
                 for k in range(num_ues)]
    pilot_power = np.broadcast_to(np.asarray(pilot_power, dtype=float), (num_ues,))

    blocks = []
    for k in range(num_ues):
        nk = len(subcarrier_sets[k])
        t = np.arange(nk * num_symbols)
        seq = np.exp(2j * np.pi * roots[k] * t / (nk * num_symbols))
        blocks.append(seq.reshape(num_symbols, nk).T.copy())
    return PilotPlan(pilot_blocks=tuple(blocks),
                     subcarrier_sets=tuple(subcarrier_sets),
                     num_taps=tuple(int(x) for x in num_taps),
                     pilot_power=tuple(float(x) for x in pilot_power),
                     num_subcarriers=num_subcarriers,
                     num_symbols=num_symbols)


def _dft_columns(n, L):
    grid = np.arange(n)[:, None] * np.arange(L)[None, :]
    return np.exp(-2j * np.pi * grid / n)


def build_observation_matrix(plan: PilotPlan, ue: int) -> np.ndarray:
    """Observation matrix mapping UE ``ue``'s taps into the stacked pilot rx.

    Shape (N * tau_p, L_k): symbol block i equals
    sqrt(P_k) * diag(scattered pilot column i) * F[:, :L_k].
    """
    N, tau_p = plan.num_subcarriers, plan.num_symbols
    L = plan.num_taps[ue]
    sub = plan.subcarrier_sets[ue]
    F_L = _dft_columns(N, L)
    A = np.zeros((N * tau_p, L), dtype=complex)
    for i in range(tau_p):
        scattered = np.zeros(N, dtype=complex)
        scattered[sub] = plan.pilot_blocks[ue][:, i]
        A[i * N:(i + 1) * N] = scattered[:, None] * F_L
    return np.sqrt(plan.pilot_power[ue]) * A


@dataclass(frozen=True)
class PilotObservation:
    """One AP's received pilot block and its noise/interference levels."""

    matrix: np.ndarray          # (N, tau_p)
    noise_var: float
    interference_var: float
    forward_gain: float = 1.0   # backhaul gain applied on the way to the CPU

    @property
    def vec(self) -> np.ndarray:
        """Column-stacked observation (N * tau_p,)."""
        return self.matrix.reshape(-1, order="F")


def default_interference_var(gains, plan: PilotPlan, assoc, ap: int) -> float:
    """Mean per-element rx power from UEs not associated with ``ap``."""
    N = plan.num_subcarriers
    total = 0.0
    for k in range(plan.num_ues):
        if ap in assoc.ap_sets[k]:
            continue
        total += plan.pilot_power[k] * gains[ap, k] * len(plan.subcarrier_sets[k]) / N
    return total


def simulate_pilot_rx(plan: PilotPlan, channels, assoc, noise_var, rng,
                      interference_var=None):
    """Received pilot blocks at every AP.

    ``interference_var`` may be a scalar, a per-AP sequence, or None to use
    the aggregate mean power of non-associated UEs at each AP.
    """
    rng = np.random.default_rng(rng)
    N, tau_p = plan.num_subcarriers, plan.num_symbols
    M = channels.gains.shape[0]
    out = []
    for m in range(M):
        if interference_var is None:
            sj2 = default_interference_var(channels.gains, plan, assoc, m)
        else:
            sj2 = float(np.broadcast_to(interference_var, (M,))[m])
        Y = np.zeros((N, tau_p), dtype=complex)
        for k in assoc.ue_sets[m]:
            sub = plan.subcarrier_sets[k]
            hf = channels.freq[m, k]          # sqrt(g) already applied
            scattered = np.zeros((N, tau_p), dtype=complex)
            scattered[sub] = plan.pilot_blocks[k]
            Y += np.sqrt(plan.pilot_power[k]) * hf[:, None] * scattered
        level = noise_var + sj2
        if level > 0:
            Y += np.sqrt(level / 2.0) * (rng.standard_normal((N, tau_p))
                                         + 1j * rng.standard_normal((N, tau_p)))
        out.append(PilotObservation(matrix=Y, noise_var=noise_var,
                                    interference_var=sj2))
    return out


def tap_prior(gain, num_taps, decay=0.0) -> np.ndarray:
    """Diagonal prior covariance: large-scale gain times the tap profile."""
    from .channel import pdp_profile
    return gain * np.diag(pdp_profile(num_taps, decay))


def cpu_forward(obs: PilotObservation, backhaul_gain: float) -> PilotObservation:
    """Scale an AP observation by the AP-to-CPU channel gain."""
    if backhaul_gain == 0:
        raise ValueError("dead backhaul")
    return PilotObservation(matrix=backhaul_gain * obs.matrix,
                            noise_var=obs.noise_var,
                            interference_var=obs.interference_var,
                            forward_gain=backhaul_gain * obs.forward_gain)


def sample_autocorrelation(Y, extra=None) -> np.ndarray:
    """Sample autocorrelation Y Y^H averaged over the observed columns.

    ``extra`` appends data-phase observation columns to sharpen the estimate.
    """
    Y = np.asarray(Y)
    if extra is not None:
        Y = np.concatenate([Y, np.asarray(extra)], axis=1)
    return Y @ Y.conj().T / Y.shape[1]


def _guarded_inverse(bracket):
    """Hermitian inverse with eigenvalues below 1e-12 * trace/N truncated.

    Truncation (rather than plain diagonal jitter) keeps the noiseless,
    rank-deficient case exact instead of amplifying rounding noise in the
    null directions.
    """
    n = bracket.shape[0]
    lam, V = np.linalg.eigh((bracket + bracket.conj().T) / 2.0)
    floor = _JITTER * np.trace(bracket).real / n
    keep = lam > floor
    if not np.any(keep):
        raise ValueError("ill-conditioned training")
    inv = np.zeros_like(lam)
    inv[keep] = 1.0 / lam[keep]
    return (V * inv) @ V.conj().T


def mmse_estimate(obs: PilotObservation, plan: PilotPlan, ue: int, priors,
                  mode="single", coestimated=(), sample_autocorr=None):
    """Unbiased MMSE estimate of UE ``ue``'s CIR taps from one AP observation.

    ``priors`` maps UE index -> diagonal tap covariance.  In ``single`` mode
    the bracket uses only this UE's statistics (near-orthogonal pilots); in
    ``mui_suppress`` mode it sums over ``coestimated`` UEs as well; passing
    an (N, N) ``sample_autocorr`` replaces the bracket with its per-symbol
    block-diagonal expansion.  A per-tap diagonal renormalization makes the
    estimator unbiased.
    """
    a = obs.forward_gain
    A = a * build_observation_matrix(plan, ue)
    Q = np.asarray(priors[ue], dtype=complex)
    level = (obs.noise_var + obs.interference_var) * a * np.conj(a)
    n = A.shape[0]

    if sample_autocorr is not None:
        bracket = np.kron(np.eye(plan.num_symbols), np.asarray(sample_autocorr))
    elif mode == "single":
        bracket = A @ Q @ A.conj().T + level * np.eye(n)
    elif mode == "mui_suppress":
        others = set(coestimated) | {ue}
        bracket = level * np.eye(n).astype(complex)
        for l in sorted(others):
            Al = a * build_observation_matrix(plan, l)
            bracket += Al @ np.asarray(priors[l], dtype=complex) @ Al.conj().T
    else:
        raise ValueError(f"unknown mode {mode!r}")

    G = Q.conj().T @ A.conj().T @ _guarded_inverse(bracket)
    c = np.diag(G @ A)
    if np.any(np.abs(c) < 1e-300):
        raise ValueError("ill-conditioned training: degenerate prior")
    return (G @ obs.vec) / c


def estimate_all(observations, plan: PilotPlan, assoc, channels,
                 mode="single", decay=0.0, priors=None):
    """Estimate every associated link; returns dict (ap, ue) -> tap vector.

    Default priors are the genie ones: the generator's true PDP scaled by
    the realized large-scale gain of each link.
    """
    out = {}
    for m, obs in enumerate(observations):
        if priors is None:
            local = {k: tap_prior(channels.gains[m, k], plan.num_taps[k], decay)
                     for k in assoc.ue_sets[m]}
        else:
            local = {k: priors[(m, k)] for k in assoc.ue_sets[m]}
        for k in assoc.ue_sets[m]:
            out[(m, k)] = mmse_estimate(obs, plan, k, local, mode=mode,
                                        coestimated=assoc.ue_sets[m])
    return out


def estimates_to_csv(estimates, channels) -> str:
    """Estimated next to true taps, one row per (AP, UE, tap), for error
    analysis outside the simulator."""
    lines = ["ap,ue,tap,true_re,true_im,est_re,est_im,sq_error"]
    for (m, k), est in sorted(estimates.items()):
        truth = np.sqrt(channels.gains[m, k]) * channels.taps[m, k, :len(est)]
        for l, (t, e) in enumerate(zip(truth, est)):
            lines.append(f"{m},{k},{l},{t.real:.9g},{t.imag:.9g},"
                         f"{e.real:.9g},{e.imag:.9g},{abs(e - t) ** 2:.9g}")
    return "\n".join(lines) + "\n"


def estimated_subcarrier_gains(estimates, channels, assoc) -> np.ndarray:
    """Per-subcarrier gains from estimated taps; unestimated links are zero.

    Mirrors the tap-to-frequency map of the generator so that, in the
    noiseless limit, estimated and true subcarrier gains coincide on the
    associated links.
    """
    from .channel import subcarrier_gains as taps_to_freq
    M, K, N = channels.freq.shape
    hf = np.zeros((M, K, N), dtype=complex)
    for (m, k), taps in estimates.items():
        hf[m, k] = taps_to_freq(taps, 1.0, N)   # estimate already carries sqrt(g)
    return hf
