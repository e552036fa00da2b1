"""Ensemble-level Monte-Carlo density evolution: sampled LLR populations
pushed through state-node / variable / check updates with no Gaussian
assumption, mutual-information tracking, and admissibility decisions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .channel import GicParameters, active_planes, default_decoded_set, plane_gain
from .decoder import LLR_CLIP, marginal_llr
from .ensembles import DegreeDistribution, HkCodeSet, node_fractions

_LN2 = np.log(2.0)


class DensityError(ValueError):
    pass


@dataclass
class LlrPopulation:
    """Sampled LLR messages paired with the true bit signs they refer to."""

    llr: np.ndarray
    sign: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.llr = np.asarray(self.llr, dtype=float)
        self.sign = np.asarray(self.sign)
        if self.llr.size != self.sign.size:
            raise DensityError("llr and sign lengths differ")
        if self.llr.size and not np.isfinite(self.llr).all():
            raise DensityError("population contains NaN/Inf after saturation")

    @property
    def size(self) -> int:
        return self.llr.size

    def products(self) -> np.ndarray:
        """Truth-normalized values x*L; their density is the bit-0-conditioned one."""
        return self.llr * self.sign


def mi_from_products(u: np.ndarray) -> float:
    """1 - E log2(1 + exp(-x L)) from truth-normalized samples, clamped to [0, 1]."""
    if u.size == 0:
        raise DensityError("empty population")
    val = 1.0 - float(np.mean(np.logaddexp(0.0, -u))) / _LN2
    return min(max(val, 0.0), 1.0)


def mutual_information(pop: LlrPopulation) -> float:
    """Sample estimate of I(L; X) for a symmetric LLR population."""
    return mi_from_products(pop.products())


def binned_symmetry_deviation(u: np.ndarray, bin_width: float = 0.25,
                              min_count: int = 500, max_abs: float = 10.0):
    """Check the exchanged-LLR symmetry condition ln(p(L)/p(-L)) = L on
    truth-normalized samples.

    Pairs mirrored histogram bins, keeps pairs where both sides hold at
    least ``min_count`` samples, and returns (mean absolute deviation of
    the empirical log-ratio from the bin center, number of bins used).
    """
    u = np.asarray(u, dtype=float)
    k = int(np.ceil(max_abs / bin_width))
    edges = np.arange(-k, k + 1) * bin_width
    counts, _ = np.histogram(u, bins=edges)
    pos = counts[k:]
    neg = counts[:k][::-1]
    centers = (np.arange(k) + 0.5) * bin_width
    ok = (pos >= min_count) & (neg >= min_count) & (centers > bin_width / 2)
    if not ok.any():
        return float("nan"), 0
    dev = np.abs(np.log(pos[ok] / neg[ok]) - centers[ok])
    return float(dev.mean()), int(ok.sum())


@dataclass
class DensityEvolutionConfig:
    population: int = 200_000
    rounds_max: int = 500
    epsilon_mi: float = 1e-4
    seed: int = 0
    receivers: tuple[int, ...] = (1, 2)
    decoded_sets: Mapping[int, tuple[str, ...]] | None = None
    min_population: int = 10_000
    # Abort a run early when no message's MI moved by stall_delta over the
    # last stall_window rounds while still clearly below target.
    stall_window: int = 40
    stall_delta: float = 0.002
    stall_mi_ceiling: float = 0.95


@dataclass
class AdmissibilityReport:
    converged: bool
    rounds_used: int
    final_mi: dict[str, float]
    trajectory: list[dict[str, float]]

    def to_csv(self) -> str:
        rows = ["round,message,MI"]
        for rnd, entry in enumerate(self.trajectory, start=1):
            for key in sorted(entry):
                rows.append(f"{rnd},{key},{entry[key]:.6g}")
        return "\n".join(rows) + "\n"


def _sum_of_draws(pool: np.ndarray, counts: np.ndarray, rng) -> np.ndarray:
    """Per-sample sum of ``counts[i]`` draws (with replacement) from pool."""
    out = np.zeros(counts.size)
    for d in np.unique(counts):
        if d == 0:
            continue
        idx = np.nonzero(counts == d)[0]
        picks = rng.integers(0, pool.size, size=(idx.size, int(d)))
        out[idx] = pool[picks].sum(axis=1)
    return out


def _check_products(pool: np.ndarray, counts: np.ndarray, rng) -> np.ndarray:
    """Tanh-rule combination of counts[i] incoming messages per sample."""
    out = np.empty(counts.size)
    for d in np.unique(counts):
        idx = np.nonzero(counts == d)[0]
        if d == 0:
            out[idx] = np.inf  # degree-1 check: no incoming constraint
            continue
        picks = rng.integers(0, pool.size, size=(idx.size, int(d)))
        prod = np.tanh(0.5 * pool[picks]).prod(axis=1)
        out[idx] = 2.0 * np.arctanh(np.clip(prod, -1.0 + 1e-16, 1.0 - 1e-16))
    return np.clip(out, -LLR_CLIP, LLR_CLIP)


class _MessageTracker:
    """Populations and degree samplers of one decoded message at one receiver."""

    def __init__(self, dist: DegreeDistribution, n_samples: int):
        self.edge_degs = np.array(sorted(dist.lam_support()), dtype=np.int64)
        self.edge_mass = np.array([dist.lam[d] for d in self.edge_degs])
        nf = node_fractions({d: dist.lam[d] for d in dist.lam_support()})
        self.node_degs = np.array(sorted(nf), dtype=np.int64)
        self.node_mass = np.array([nf[d] for d in self.node_degs])
        self.chk_degs = np.array(sorted(dist.rho_support()), dtype=np.int64)
        self.chk_mass = np.array([dist.rho[d] for d in self.chk_degs])
        self.c2v = np.zeros(n_samples)
        self.v2s = np.zeros(n_samples)
        self.mi = 0.0


def evolve_ensemble(codes: HkCodeSet, p: GicParameters, cfg: DensityEvolutionConfig,
                    stage_hook: Callable | None = None) -> AdmissibilityReport:
    """Track mutual information of every decoded message through rounds of
    sampled joint density evolution; converged when all reach 1 - epsilon.

    Each round draws fresh channel uses with uniformly random bit planes,
    forms state-node LLR samples by marginalization against the current
    posterior populations, then applies the variable-node sum (edge-
    perspective degree) and the exact tanh check rule on independently
    resampled messages. All samples are kept truth-normalized.
    """
    if not (codes.alpha1 == p.alpha1 and codes.alpha2 == p.alpha2):
        raise DensityError("code set and channel disagree on power splits")
    N = int(cfg.population)
    if N < cfg.min_population:
        raise DensityError(f"population {N} below minimum {cfg.min_population}")
    rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed), 0xDE]))
    sigma = np.sqrt(p.N0 / 2.0)

    setups = []
    for rx in cfg.receivers:
        decoded = (tuple(cfg.decoded_sets[rx]) if cfg.decoded_sets
                   else default_decoded_set(p, rx))
        planes = [m for m in active_planes(p) if plane_gain(p, m, rx) > 0.0]
        gains = np.array([plane_gain(p, m, rx) for m in planes])
        for msg in decoded:
            if msg not in planes:
                raise DensityError(f"{msg} invisible at receiver {rx}")
            if msg not in codes.distributions:
                raise DensityError(f"no degree distribution for decoded message {msg}")
        trackers = {m: _MessageTracker(codes.distributions[m], N) for m in decoded}
        setups.append((rx, planes, gains, decoded, trackers))

    trajectory: list[dict[str, float]] = []
    converged = False
    rounds_used = 0
    for rnd in range(1, cfg.rounds_max + 1):
        rounds_used = rnd
        entry = {}
        for rx, planes, gains, decoded, trackers in setups:
            prev_v2s = {m: trackers[m].v2s for m in decoded}
            for msg in decoded:
                tr = trackers[msg]
                bits = rng.integers(0, 2, size=(len(planes), N))
                signs = 1.0 - 2.0 * bits
                y = signs.T @ gains + rng.normal(0.0, sigma, size=N)
                q_list = []
                for k, pl in enumerate(planes):
                    if pl == msg or pl not in decoded:
                        q_list.append(np.full(N, 0.5))
                    else:
                        draws = prev_v2s[pl][rng.integers(0, N, size=N)]
                        q_list.append(1.0 / (1.0 + np.exp(-signs[k] * draws)))
                t_idx = planes.index(msg)
                u_state = signs[t_idx] * marginal_llr(y, gains, q_list, t_idx, p.N0)
                if stage_hook:
                    stage_hook(rnd, f"{msg}@rx{rx}", "state_to_var", u_state)

                edge_d = rng.choice(tr.edge_degs, size=N, p=tr.edge_mass)
                v2c = np.clip(u_state + _sum_of_draws(tr.c2v, edge_d - 1, rng),
                              -LLR_CLIP, LLR_CLIP)
                if stage_hook:
                    stage_hook(rnd, f"{msg}@rx{rx}", "var_to_chk", v2c)

                chk_d = rng.choice(tr.chk_degs, size=N, p=tr.chk_mass)
                tr.c2v = _check_products(v2c, chk_d - 1, rng)
                if stage_hook:
                    stage_hook(rnd, f"{msg}@rx{rx}", "chk_to_var", tr.c2v)

                node_d = rng.choice(tr.node_degs, size=N, p=tr.node_mass)
                tr.v2s = np.clip(u_state + _sum_of_draws(tr.c2v, node_d, rng),
                                 -LLR_CLIP, LLR_CLIP)
                tr.mi = mi_from_products(tr.v2s)
                entry[f"{msg}@rx{rx}"] = tr.mi
        trajectory.append(entry)
        if all(v >= 1.0 - cfg.epsilon_mi for v in entry.values()):
            converged = True
            break
        if cfg.stall_window and rnd > cfg.stall_window:
            past = trajectory[rnd - cfg.stall_window - 1]
            gains_seen = [entry[k] - past.get(k, 0.0) for k in entry]
            if (max(gains_seen) < cfg.stall_delta
                    and min(entry.values()) < cfg.stall_mi_ceiling):
                break

    return AdmissibilityReport(converged=converged, rounds_used=rounds_used,
                               final_mi=dict(trajectory[-1]), trajectory=trajectory)


def threshold_bisect(codes: HkCodeSet, p: GicParameters, cfg: DensityEvolutionConfig,
                     lo_db: float, hi_db: float, tol_db: float = 0.05) -> float:
    """Bisect the noise-scaling offset (dB) at which the ensemble switches
    from non-converging to converging; SNR/INR ratios stay fixed.

    Requires convergence at ``hi_db`` and failure at ``lo_db``. The same
    seed is reused at every probe so the verdict is monotone in the offset
    up to Monte-Carlo resolution.
    """
    if hi_db <= lo_db:
        raise DensityError("bracket invalid: hi_db must exceed lo_db")

    def verdict(offset):
        return evolve_ensemble(codes, p.with_noise_offset_db(offset), cfg).converged

    if not verdict(hi_db):
        raise DensityError(f"bracket invalid: not admissible at hi_db={hi_db}")
    if verdict(lo_db):
        raise DensityError(f"bracket invalid: already admissible at lo_db={lo_db}")
    lo, hi = float(lo_db), float(hi_db)
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        if verdict(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
