"""AP message-passing detection on the AP-UE factor graph.

Each AP holds a local Gaussian likelihood over the symbols of its
associated UEs (per subcarrier, subcarriers do not couple).  APs exchange
per-UE, per-symbol extrinsic log-likelihood vectors with the adjacent APs
that monitor the same UE, under a flooding schedule: every round, each AP
re-marginalizes its local likelihood against the latest messages from the
other APs, excluding its own previous contribution.  On cycle-free graphs
the resulting beliefs are the exact posterior marginals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .modulation import constellation

# largest local enumeration: |constellation| ** participants <= 2 ** 8
_LOCAL_GUARD = 256
# largest joint enumeration allowed in the exact oracle
_ORACLE_GUARD = 2 ** 20


@dataclass(frozen=True)
class ApmpConfig:
    max_iterations: int = 20
    tol: float = 1e-4            # stop when total LLRs move less than this
    damping: float = 0.0         # 0 = undamped flooding
    points: object = "bpsk"
    llr_clamp: float = 50.0
    record_trace: bool = False   # keep per-round belief snapshots

    def __post_init__(self):
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if not 0.0 <= self.damping < 1.0:
            raise ValueError("damping must lie in [0, 1)")


@dataclass
class ApmpResult:
    decisions: list              # per UE: (N_k,) symbol indices, or None
    marginals: list              # per UE: (N_k, Q) posteriors, or None
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)   # per-round max belief change
    belief_trace: list = field(default_factory=list)  # per-round snapshots
    undetected: frozenset = frozenset()


class _Layout:
    """Precomputed slot/participant bookkeeping for one scene."""

    def __init__(self, scene, assoc):
        self.scene = scene
        self.assoc = assoc
        M, N = scene.num_aps, scene.num_subcarriers
        self.slot_of = []
        for k in range(scene.num_ues):
            table = {int(n): i for i, n in enumerate(scene.subcarriers[k])}
            self.slot_of.append(table)
        self.participants = {}
        for m in range(M):
            for n in range(N):
                who = [k for k in assoc.ue_sets[m] if n in self.slot_of[k]]
                if who:
                    self.participants[(m, n)] = who
        self.edges = [(m, k, i)
                      for (m, n), who in self.participants.items()
                      for k in who
                      for i in [self.slot_of[k][n]]]

    def amplitude(self, m, k, n):
        i = self.slot_of[k][n]
        return np.sqrt(self.scene.power[k][i]) * self.scene.freq[m, k, n]


def _normalize(vec, clamp):
    v = vec - vec[0]
    return np.clip(v, -clamp, clamp)


def _logsumexp(a, axis=0):
    peak = np.max(a, axis=axis, keepdims=True)
    return (peak + np.log(np.sum(np.exp(a - peak), axis=axis,
                                 keepdims=True))).squeeze(axis)


def _fn_messages_at(layout, m, n, y_mn, priors, pts, gamma_u, clamp):
    """Messages from AP m about every UE it monitors on subcarrier n.

    ``priors`` maps (ue, slot) -> incoming log-prob vector used for the
    co-monitored UEs during marginalization.
    """
    who = layout.participants[(m, n)]
    Q = len(pts)
    if Q ** len(who) > _LOCAL_GUARD:
        raise ValueError("local marginalization too large")
    coefs = np.array([layout.amplitude(m, k, n) for k in who])
    out = {}
    for pos, k in enumerate(who):
        others = [j for j in range(len(who)) if j != pos]
        msg = np.empty(Q)
        if not others:
            msg = -gamma_u * np.abs(y_mn - coefs[pos] * pts) ** 2
        else:
            combos = np.array(list(product(range(Q), repeat=len(others))))
            partial = (pts[combos] * coefs[others]).sum(axis=1)
            slots = [layout.slot_of[who[j]][n] for j in others]
            prior = np.zeros(len(combos))
            for col, j in enumerate(others):
                prior = prior + priors[(who[j], slots[col])][combos[:, col]]
            for q in range(Q):
                ll = -gamma_u * np.abs(y_mn - partial - coefs[pos] * pts[q]) ** 2
                msg[q] = _logsumexp(ll + prior)
        out[(k, layout.slot_of[k][n])] = _normalize(msg, clamp)
    return out


def message_round(scene, assoc, y, messages, config: ApmpConfig,
                  layout=None) -> dict:
    """One flooding round: recompute every AP-to-peers message.

    ``messages`` maps (ap, ue, slot) -> log-prob vector from the previous
    round (an empty dict yields the intrinsic messages).  The message an AP
    emits about a UE never reads what that same AP previously received
    about that UE, only the co-monitored UEs' aggregated priors.
    """
    layout = layout or _Layout(scene, assoc)
    pts = constellation(config.points)
    Q = len(pts)
    zero = np.zeros(Q)
    new = {}
    for (m, n), who in layout.participants.items():
        priors = {}
        for k in who:
            i = layout.slot_of[k][n]
            agg = np.zeros(Q)
            for j in assoc.ap_sets[k]:
                if j != m:
                    agg = agg + messages.get((j, k, i), zero)
            priors[(k, i)] = agg
        local = _fn_messages_at(layout, m, n, y[m, n], priors, pts,
                                scene.gamma_u, config.llr_clamp)
        for (k, i), msg in local.items():
            if config.damping > 0 and (m, k, i) in messages:
                msg = ((1 - config.damping) * msg
                       + config.damping * messages[(m, k, i)])
            new[(m, k, i)] = _normalize(msg, config.llr_clamp)
    return new


def intrinsic_llr(scene, assoc, m, y_m, config: ApmpConfig = ApmpConfig()):
    """Uniform-prior (intrinsic) log-likelihood vectors at a single AP.

    Returns {(ue, slot): normalized log-prob vector} for every symbol AP m
    monitors in its own observation y_m (length N).
    """
    layout = _Layout(scene, assoc)
    pts = constellation(config.points)
    out = {}
    for (ap, n), who in layout.participants.items():
        if ap != m:
            continue
        priors = {(k, layout.slot_of[k][n]): np.zeros(len(pts)) for k in who}
        out.update(_fn_messages_at(layout, m, n, y_m[n], priors, pts,
                                   scene.gamma_u, config.llr_clamp))
    return out


def _beliefs(assoc, layout, messages, Q):
    """Designated-AP beliefs: the sum of all per-AP messages about a slot."""
    beliefs = {}
    for (m, k, i), msg in messages.items():
        key = (k, i)
        beliefs[key] = beliefs.get(key, np.zeros(Q)) + msg
    return beliefs


def apmp_detect(scene, assoc, y, config: ApmpConfig = ApmpConfig()) -> ApmpResult:
    """Run flooding message passing and decide every UE's symbols.

    ``y`` is the (M, N) per-AP, per-subcarrier observation.  Decisions for
    UE k are taken at its lowest-index associated AP; UEs with no
    association are reported in ``undetected``.
    """
    layout = _Layout(scene, assoc)
    pts = constellation(config.points)
    Q = len(pts)
    undetected = frozenset(k for k in range(scene.num_ues)
                           if not assoc.ap_sets[k])

    messages = message_round(scene, assoc, y, {}, config, layout)
    trace = []
    belief_trace = []
    iterations = 0
    converged = config.max_iterations == 0
    if config.record_trace:
        belief_trace.append(_beliefs(assoc, layout, messages, Q))
    if config.max_iterations > 0:
        prev_belief = _beliefs(assoc, layout, messages, Q)
        for it in range(1, config.max_iterations + 1):
            messages = message_round(scene, assoc, y, messages, config, layout)
            belief = _beliefs(assoc, layout, messages, Q)
            delta = max((np.max(np.abs(belief[key] - prev_belief[key]))
                         for key in belief), default=0.0)
            trace.append(delta)
            if config.record_trace:
                belief_trace.append(belief)
            iterations = it
            prev_belief = belief
            if delta < config.tol:
                converged = True
                break

    decisions, marginals = [], []
    for k in range(scene.num_ues):
        if k in undetected or not scene.subcarriers[k].size:
            decisions.append(None)
            marginals.append(None)
            continue
        designated = min(assoc.ap_sets[k])
        nk = len(scene.subcarriers[k])
        dec = np.empty(nk, dtype=int)
        marg = np.empty((nk, Q))
        for i in range(nk):
            total = messages[(designated, k, i)].copy()
            if config.max_iterations > 0:
                for j in assoc.ap_sets[k]:
                    if j != designated:
                        total = total + messages[(j, k, i)]
            p = np.exp(total - total.max())
            marg[i] = p / p.sum()
            dec[i] = int(np.argmax(total))
        decisions.append(dec)
        marginals.append(marg)
    return ApmpResult(decisions=decisions, marginals=marginals,
                      iterations=iterations, converged=converged,
                      trace=trace, belief_trace=belief_trace,
                      undetected=undetected)


def map_oracle(scene, assoc, component, y, points="bpsk"):
    """Exact posterior marginals by joint enumeration inside one component.

    ``component`` is an (AP set, UE set) pair from the factor graph.  The
    joint likelihood factorizes over subcarriers, so each subcarrier's
    active UEs are enumerated separately; the guard caps that enumeration.
    Returns {(ue, slot): (Q,) posterior} for every symbol in the component.
    """
    aps, ues = component
    pts = constellation(points)
    Q = len(pts)
    layout = _Layout(scene, assoc)
    out = {}
    for n in range(scene.num_subcarriers):
        active = sorted(k for k in ues if n in layout.slot_of[k])
        if not active:
            continue
        if Q ** len(active) > _ORACLE_GUARD:
            raise ValueError("oracle state space too large")
        combos = np.array(list(product(range(Q), repeat=len(active))))
        loglik = np.zeros(len(combos))
        for m in sorted(aps):
            who = layout.participants.get((m, n))
            if not who:
                continue
            cols = [active.index(k) for k in who]
            coefs = np.array([layout.amplitude(m, k, n) for k in who])
            mean = (pts[combos[:, cols]] * coefs).sum(axis=1)
            loglik = loglik - scene.gamma_u * np.abs(y[m, n] - mean) ** 2
        for col, k in enumerate(active):
            post = np.full(Q, -np.inf)
            for q in range(Q):
                sel = combos[:, col] == q
                post[q] = _logsumexp(loglik[sel])
            p = np.exp(post - post.max())
            out[(k, layout.slot_of[k][n])] = p / p.sum()
    return out
