"""Joint decoder for the superposition scheme: per-message sum-product
decoders coupled through state nodes that marginalize over the joint bit
vector of one channel use, run in rounds under parallel scheduling."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np

from .channel import GicParameters, active_planes, default_decoded_set, plane_gain
from .ensembles import ParityCheckMatrix

# Message magnitudes are saturated here; beyond 30 a bit is numerically certain.
LLR_CLIP = 30.0

_LN2 = np.log(2.0)


class DecoderError(ValueError):
    pass


def marginal_llr(y: np.ndarray, gains, q_planes, target: int, n0: float) -> np.ndarray:
    """State-node LLR of one plane's bit by joint marginalization.

    ``gains`` are the effective received amplitudes of the planes,
    ``q_planes`` the per-symbol probabilities of bit 0 (the target's own
    entry is ignored: extrinsic principle). The Gaussian likelihood has
    variance n0/2 around the noiseless superposition; the sum over joint
    assignments is evaluated in the log domain with exact log-sum-exp,
    so the result is never NaN.
    """
    y = np.asarray(y, dtype=float)
    gains = np.asarray(gains, dtype=float)
    K = gains.size
    with np.errstate(divide="ignore"):
        log_q0 = [np.log(np.asarray(q, dtype=float)) for q in q_planes]
        log_q1 = [np.log1p(-np.asarray(q, dtype=float)) for q in q_planes]

    num = np.full(y.shape, -np.inf)
    den = np.full(y.shape, -np.inf)
    for combo in range(1 << K):
        bits = (combo >> np.arange(K)) & 1
        signs = 1.0 - 2.0 * bits
        mu = float(signs @ gains)
        term = -((y - mu) ** 2) / n0
        for p in range(K):
            if p == target:
                continue
            term = term + (log_q0[p] if bits[p] == 0 else log_q1[p])
        if bits[target] == 0:
            num = np.logaddexp(num, term)
        else:
            den = np.logaddexp(den, term)
    return np.clip(num - den, -LLR_CLIP, LLR_CLIP)


@dataclass
class StateNodePrior:
    """Per-symbol bit-0 probabilities per message, as seen by the state
    nodes. Undecoded messages keep their 1/2 entries across all rounds."""

    q: dict[str, np.ndarray]

    def __post_init__(self):
        for msg, arr in self.q.items():
            arr = np.asarray(arr, dtype=float)
            if arr.min() < 0.0 or arr.max() > 1.0:
                raise DecoderError(f"prior for {msg} outside [0, 1]")
            self.q[msg] = arr

    @classmethod
    def uniform(cls, planes, n: int) -> "StateNodePrior":
        return cls({m: np.full(n, 0.5) for m in planes})


def state_node_llr(y: np.ndarray, priors: StateNodePrior, target: str,
                   p: GicParameters, receiver: int) -> np.ndarray:
    """LLRs fed to the ``target`` message's decoder at one receiver.

    Planes with zero received gain are invisible to this receiver and drop
    out of the marginalization exactly.
    """
    planes = [m for m in active_planes(p)
              if plane_gain(p, m, receiver) > 0.0 or m == target]
    if target not in planes:
        raise DecoderError(f"{target} is not an active plane")
    gains = [plane_gain(p, m, receiver) for m in planes]
    n = np.asarray(y).size
    q_list = [priors.q.get(m, np.full(n, 0.5)) for m in planes]
    return marginal_llr(y, gains, q_list, planes.index(target), p.N0)


class BpDecoder:
    """Flooding sum-product decoder over one sparse parity-check matrix.

    Keeps its check-to-variable messages across calls so a joint-decoding
    round can resume where the previous round stopped.
    """

    def __init__(self, code: ParityCheckMatrix):
        self.n = code.n
        self.m = code.m
        self.v = code.var_index
        self.c = code.chk_index
        self.c2v = np.zeros(self.v.size)

    def reset(self):
        self.c2v[:] = 0.0

    def iterate(self, channel_llr: np.ndarray, collector=None, true_signs=None):
        """One flooding iteration: variable update then check update."""
        tot = channel_llr + np.bincount(self.v, weights=self.c2v, minlength=self.n)
        v2c = np.clip(tot[self.v] - self.c2v, -LLR_CLIP, LLR_CLIP)

        t = np.tanh(0.5 * v2c)
        at = np.abs(t)
        zero = at == 0.0
        neg = (t < 0.0).astype(float)
        nz_neg = np.where(zero, 0.0, neg)
        logm = np.log(np.where(zero, 1.0, at))

        sum_log = np.bincount(self.c, weights=logm, minlength=self.m)
        n_zero = np.bincount(self.c, weights=zero.astype(float), minlength=self.m)
        n_neg = np.bincount(self.c, weights=nz_neg, minlength=self.m)

        others_zero = n_zero[self.c] - zero
        others_neg = n_neg[self.c] - nz_neg
        mag = np.exp(np.minimum(sum_log[self.c] - logm, 0.0))
        val = 2.0 * np.arctanh(np.minimum(mag, 1.0 - 1e-16))
        sign = 1.0 - 2.0 * (others_neg % 2)
        self.c2v = np.where(others_zero > 0, 0.0,
                            sign * np.minimum(val, LLR_CLIP))
        if collector is not None:
            s_e = true_signs[self.v]
            collector.add("var_to_chk", v2c * s_e)
            collector.add("chk_to_var", self.c2v * s_e)

    def run_round(self, channel_llr: np.ndarray, iters: int,
                  collector=None, true_signs=None) -> np.ndarray:
        """Run ``iters`` iterations and return the per-bit posteriors
        (channel input plus all check messages) handed back to the state
        nodes. With zero iterations this is the channel input unchanged."""
        for _ in range(iters):
            self.iterate(channel_llr, collector=collector, true_signs=true_signs)
        return channel_llr + np.bincount(self.v, weights=self.c2v, minlength=self.n)

    def syndrome_weight(self, hard_bits: np.ndarray) -> int:
        parity = np.bincount(self.c, weights=hard_bits[self.v].astype(float),
                             minlength=self.m)
        return int((parity.astype(np.int64) % 2).sum())


@dataclass
class JointDecoderConfig:
    rounds_max: int = 250
    inner_iters: int = 2
    total_iter_cap: int = 500
    early_stop: bool = True
    decoded_set: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.rounds_max * self.inner_iters > self.total_iter_cap:
            raise DecoderError("rounds_max * inner_iters exceeds total_iter_cap")


class TraceRow(NamedTuple):
    round: int
    message: str
    i_state_to_vnd: float
    i_vnd_to_state: float
    syndrome_weight: int


class LlrCollector:
    """Bounded store of truth-normalized LLR samples per exchange stage."""

    def __init__(self, cap: int = 4_000_000):
        self.cap = cap
        self._parts: dict[str, list[np.ndarray]] = {}
        self._sizes: dict[str, int] = {}

    def add(self, stage: str, samples: np.ndarray):
        have = self._sizes.get(stage, 0)
        if have >= self.cap:
            return
        take = samples[: self.cap - have]
        self._parts.setdefault(stage, []).append(np.asarray(take, dtype=float))
        self._sizes[stage] = have + take.size

    def arrays(self) -> dict[str, np.ndarray]:
        return {k: np.concatenate(v) for k, v in self._parts.items()}


@dataclass
class JointDecodeResult:
    bits: dict[str, np.ndarray]
    converged: bool
    rounds_used: int
    trace: list[TraceRow]
    syndrome_weights: dict[str, int]
    llr_samples: dict[str, np.ndarray] | None = None


def _sample_mi(u: np.ndarray) -> float:
    """Mutual-information estimate from truth-normalized LLR samples."""
    val = 1.0 - float(np.mean(np.logaddexp(0.0, -u))) / _LN2
    return min(max(val, 0.0), 1.0)


def trace_to_csv(rows) -> str:
    out = ["round,message_id,I_state_to_vnd,I_vnd_to_state,syndrome_weight"]
    for r in rows:
        out.append(f"{r.round},{r.message},{r.i_state_to_vnd:.6g},"
                   f"{r.i_vnd_to_state:.6g},{r.syndrome_weight}")
    return "\n".join(out) + "\n"


def joint_decode(y: np.ndarray, codes: Mapping[str, ParityCheckMatrix],
                 p: GicParameters, receiver: int, cfg: JointDecoderConfig,
                 truth: Mapping[str, np.ndarray] | None = None,
                 collect_llrs: bool = False,
                 collect_cap: int = 4_000_000) -> JointDecodeResult:
    """Decode one received block at one receiver.

    Rounds alternate state-node marginalization (with all decoders' current
    posteriors as priors, target excluded) and ``inner_iters`` BP iterations
    per decoded message. Stops early when every decoded message has a zero
    syndrome, or at the round/iteration caps. Deterministic.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    planes = active_planes(p)
    other = 2 if receiver == 1 else 1
    decoded = tuple(cfg.decoded_set) if cfg.decoded_set else default_decoded_set(p, receiver)
    if f"U{other}" in decoded:
        raise DecoderError(f"receiver {receiver} cannot decode the interferer's private message")
    for msg in decoded:
        if msg not in planes:
            raise DecoderError(f"decoded message {msg} is not an active plane")
        if msg not in codes:
            raise DecoderError(f"no parity-check matrix for {msg}")
        if codes[msg].n != n:
            raise DecoderError(f"code length {codes[msg].n} != block length {n}")

    decoders = {m: BpDecoder(codes[m]) for m in decoded}
    priors = StateNodePrior.uniform(planes, n)
    truth_signs = None
    if truth is not None:
        truth_signs = {m: 1.0 - 2.0 * np.asarray(truth[m], dtype=float)
                       for m in decoded if m in truth}
    collector = LlrCollector(collect_cap) if collect_llrs else None
    if collect_llrs and truth_signs is None:
        raise DecoderError("collect_llrs requires the true bits")

    max_rounds = cfg.rounds_max
    if cfg.inner_iters > 0:
        max_rounds = min(max_rounds, cfg.total_iter_cap // cfg.inner_iters)

    trace: list[TraceRow] = []
    hard = {m: np.zeros(n, dtype=np.int8) for m in decoded}
    synd = {m: -1 for m in decoded}
    converged = False
    rounds_used = 0
    for rnd in range(1, max_rounds + 1):
        rounds_used = rnd
        state = {m: state_node_llr(y, priors, m, p, receiver) for m in decoded}
        for m in decoded:
            s = truth_signs.get(m) if truth_signs else None
            if collector is not None and s is not None:
                collector.add("state_to_var", state[m] * s)
            app = decoders[m].run_round(state[m], cfg.inner_iters,
                                        collector=collector, true_signs=s)
            priors.q[m] = 1.0 / (1.0 + np.exp(-np.clip(app, -LLR_CLIP, LLR_CLIP)))
            hard[m] = (app < 0.0).astype(np.int8)
            synd[m] = decoders[m].syndrome_weight(hard[m])
            mi_in = _sample_mi(state[m] * s) if s is not None else float("nan")
            mi_out = _sample_mi(app * s) if s is not None else float("nan")
            trace.append(TraceRow(rnd, m, mi_in, mi_out, synd[m]))
        if cfg.early_stop and all(w == 0 for w in synd.values()):
            converged = True
            break

    return JointDecodeResult(
        bits=hard, converged=converged, rounds_used=rounds_used, trace=trace,
        syndrome_weights=synd,
        llr_samples=collector.arrays() if collector else None)
