"""Irregular LDPC ensembles: degree distributions, design rates, and
finite-length parity-check matrix construction via configuration-model
socket matching."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

# Messages of the two-user superposition scheme: private (U) and public (W)
# sub-message of each user.
MESSAGES = ("U1", "W1", "U2", "W2")

# Candidate variable degrees used by the degree-distribution optimizer.
OPTIMIZER_DEGREES = (2, 3, 4, 9, 10, 19, 20, 49, 50)

_SUM_TOL = 1e-9


class EnsembleError(ValueError):
    pass


def _validate_side(masses: Mapping[int, float], name: str) -> dict[int, float]:
    if not masses:
        raise EnsembleError(f"{name}: empty distribution")
    out = {}
    for deg, mass in masses.items():
        deg = int(deg)
        mass = float(mass)
        if deg < 2:
            raise EnsembleError(f"{name}: degree {deg} < 2")
        if not (-1e-15 <= mass <= 1.0 + 1e-12):
            raise EnsembleError(f"{name}: mass {mass} for degree {deg} outside [0, 1]")
        out[deg] = max(mass, 0.0)
    total = sum(out.values())
    if abs(total - 1.0) > _SUM_TOL:
        raise EnsembleError(f"{name}: masses sum to {total}, expected 1")
    return dict(sorted(out.items()))


@dataclass(frozen=True)
class DegreeDistribution:
    """Edge-perspective degree distribution pair of an irregular LDPC ensemble.

    ``lam[i]`` is the fraction of edges attached to degree-``i`` variable
    nodes, ``rho[j]`` the fraction attached to degree-``j`` check nodes.
    Zero masses are allowed; degrees must be >= 2 and each side must sum
    to one within 1e-9.
    """

    lam: Mapping[int, float]
    rho: Mapping[int, float]

    def __post_init__(self):
        object.__setattr__(self, "lam", _validate_side(self.lam, "lambda"))
        object.__setattr__(self, "rho", _validate_side(self.rho, "rho"))

    def lam_support(self) -> tuple[int, ...]:
        return tuple(d for d, m in self.lam.items() if m > 0.0)

    def rho_support(self) -> tuple[int, ...]:
        return tuple(d for d, m in self.rho.items() if m > 0.0)

    def singleton_dc(self) -> int | None:
        """Check degree if rho is concentrated on a single degree, else None."""
        sup = self.rho_support()
        return sup[0] if len(sup) == 1 else None

    def to_json(self) -> str:
        enc = lambda side: {str(d): float(f"{m:.10g}") for d, m in side.items()}
        return json.dumps({"lambda": enc(self.lam), "rho": enc(self.rho)}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "DegreeDistribution":
        raw = json.loads(text)
        return cls(
            {int(k): float(v) for k, v in raw["lambda"].items()},
            {int(k): float(v) for k, v in raw["rho"].items()},
        )

    @classmethod
    def regular(cls, dv: int, dc: int) -> "DegreeDistribution":
        return cls({dv: 1.0}, {dc: 1.0})

    @classmethod
    def singleton_rho(cls, lam: Mapping[int, float], dc: int) -> "DegreeDistribution":
        return cls(lam, {dc: 1.0})


def _inv_moment(masses: Mapping[int, float]) -> float:
    """Sum of mass/degree; the reciprocal is the average node degree."""
    return sum(m / d for d, m in masses.items())


def design_rate(d: DegreeDistribution) -> float:
    """Asymptotic rate 1 - (sum_j rho_j/j) / (sum_i lambda_i/i)."""
    lam_inv = _inv_moment(d.lam)
    if lam_inv <= 0.0:
        raise EnsembleError("empty distribution")
    r = 1.0 - _inv_moment(d.rho) / lam_inv
    if not (0.0 < r < 1.0):
        raise EnsembleError(f"design rate {r} outside (0, 1)")
    return r


def rate_of_lambda(lam: Mapping[int, float], dc: int) -> float:
    """Design rate for a singleton check distribution at degree dc."""
    return design_rate(DegreeDistribution.singleton_rho(lam, dc))


def node_edge_convert(d: DegreeDistribution, direction: str) -> DegreeDistribution:
    """Convert both sides between edge and node perspectives.

    ``direction`` is "edge_to_node" or "node_to_edge"; the two conversions
    are mutually inverse.
    """
    if direction == "edge_to_node":
        conv = lambda side: {deg: m / deg for deg, m in side.items()}
    elif direction == "node_to_edge":
        conv = lambda side: {deg: m * deg for deg, m in side.items()}
    else:
        raise EnsembleError(f"unknown direction {direction!r}")

    def normalized(side):
        raw = conv(side)
        total = sum(raw.values())
        return {deg: v / total for deg, v in raw.items()}

    return DegreeDistribution(normalized(d.lam), normalized(d.rho))


def node_fractions(masses: Mapping[int, float]) -> dict[int, float]:
    """Edge-perspective masses to node fractions (share of nodes per degree)."""
    raw = {deg: m / deg for deg, m in masses.items()}
    total = sum(raw.values())
    return {deg: v / total for deg, v in raw.items()}


@dataclass(frozen=True)
class HkCodeSet:
    """The code ensembles of one superposition-coding operating point.

    Holds a DegreeDistribution per active message plus the private power
    fractions that fix the modulation powers. A user's private plane exists
    iff its alpha is positive, its public plane iff alpha < 1.
    """

    distributions: Mapping[str, DegreeDistribution]
    alpha1: float = 0.0
    alpha2: float = 0.0

    def __post_init__(self):
        for a, name in ((self.alpha1, "alpha1"), (self.alpha2, "alpha2")):
            if not (0.0 <= a <= 1.0):
                raise EnsembleError(f"{name}={a} outside [0, 1]")
        dists = dict(self.distributions)
        for msg in dists:
            if msg not in MESSAGES:
                raise EnsembleError(f"unknown message {msg!r}")
        for msg in self.active_messages():
            if msg not in dists:
                raise EnsembleError(f"missing distribution for active message {msg}")
        object.__setattr__(self, "distributions", dists)

    def active_messages(self) -> tuple[str, ...]:
        out = []
        for user, alpha in ((1, self.alpha1), (2, self.alpha2)):
            if alpha > 0.0:
                out.append(f"U{user}")
            if alpha < 1.0:
                out.append(f"W{user}")
        return tuple(out)

    def rate(self, msg: str) -> float:
        return design_rate(self.distributions[msg])

    def user_rate(self, user: int) -> float:
        return sum(self.rate(m) for m in self.active_messages() if m.endswith(str(user)))

    def rate_point(self) -> tuple[float, float]:
        return (self.user_rate(1), self.user_rate(2))

    def replace(self, msg: str, dist: DegreeDistribution) -> "HkCodeSet":
        if msg not in self.distributions:
            raise EnsembleError(f"no such message {msg}")
        dists = dict(self.distributions)
        dists[msg] = dist
        return HkCodeSet(dists, self.alpha1, self.alpha2)


@dataclass
class ParityCheckMatrix:
    """Sparse bipartite parity-check matrix as an edge list.

    ``var_index[e]`` and ``chk_index[e]`` give the endpoints of edge e.
    Edges are unique; every variable has degree >= 2.
    """

    n: int
    m: int
    var_index: np.ndarray
    chk_index: np.ndarray
    _enc: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def num_edges(self) -> int:
        return self.var_index.size

    def var_degrees(self) -> np.ndarray:
        return np.bincount(self.var_index, minlength=self.n)

    def chk_degrees(self) -> np.ndarray:
        return np.bincount(self.chk_index, minlength=self.m)

    def realized_rate(self) -> float:
        return (self.n - self.m) / self.n

    def validate(self):
        keys = self.var_index.astype(np.int64) * self.m + self.chk_index
        if np.unique(keys).size != keys.size:
            raise EnsembleError("duplicate edges")
        if self.var_degrees().min() < 2:
            raise EnsembleError("variable of degree < 2")

    def count_4cycles(self) -> int:
        return _count_4cycles(self.var_index, self.chk_index, self.n, self.m)

    def to_alist(self) -> str:
        vdeg = self.var_degrees()
        cdeg = self.chk_degrees()
        lines = [f"{self.n} {self.m}", f"{vdeg.max()} {cdeg.max()}"]
        lines.append(" ".join(str(d) for d in vdeg))
        lines.append(" ".join(str(d) for d in cdeg))
        order = np.argsort(self.var_index, kind="stable")
        nb = self.chk_index[order] + 1
        ptr = np.concatenate(([0], np.cumsum(vdeg)))
        for i in range(self.n):
            lines.append(" ".join(str(c) for c in sorted(nb[ptr[i]:ptr[i + 1]])))
        order = np.argsort(self.chk_index, kind="stable")
        nb = self.var_index[order] + 1
        ptr = np.concatenate(([0], np.cumsum(cdeg)))
        for j in range(self.m):
            lines.append(" ".join(str(v) for v in sorted(nb[ptr[j]:ptr[j + 1]])))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_alist(cls, text: str) -> "ParityCheckMatrix":
        rows = [r for r in text.splitlines() if r.strip()]
        n, m = (int(x) for x in rows[0].split())
        vdeg = [int(x) for x in rows[2].split()]
        var_idx, chk_idx = [], []
        for i in range(n):
            for c in rows[4 + i].split():
                var_idx.append(i)
                chk_idx.append(int(c) - 1)
        mat = cls(n, m, np.asarray(var_idx, dtype=np.int32),
                  np.asarray(chk_idx, dtype=np.int32))
        if not np.array_equal(mat.var_degrees(), vdeg):
            raise EnsembleError("alist degree header mismatch")
        return mat


def _apportion(total: int, quotas: np.ndarray) -> np.ndarray:
    """Integer counts summing to ``total``, largest-remainder rounding."""
    quotas = quotas * (total / quotas.sum())
    base = np.floor(quotas).astype(np.int64)
    short = total - int(base.sum())
    order = np.argsort(-(quotas - base), kind="stable")
    base[order[:short]] += 1
    return base


def _count_4cycles(var_index, chk_index, n, m):
    keys = _chk_pair_keys(var_index, chk_index, n, m)[0]
    if keys.size == 0:
        return 0
    _, counts = np.unique(keys, return_counts=True)
    return int((counts * (counts - 1) // 2).sum())


def _chk_pair_keys(var_index, chk_index, n, m):
    """All unordered check-pairs seen through one variable, as int64 keys.

    Returns (keys, edge_of_pair) where edge_of_pair is one incident edge
    index per pair, usable for cycle-breaking swaps.
    """
    order = np.argsort(var_index, kind="stable")
    deg = np.bincount(var_index, minlength=n)
    ptr = np.concatenate(([0], np.cumsum(deg)))
    keys_parts, edge_parts = [], []
    for d in np.unique(deg):
        if d < 2:
            continue
        vs = np.nonzero(deg == d)[0]
        # (num_vars_of_deg_d, d) matrix of edge ids
        rows = ptr[vs][:, None] + np.arange(d)[None, :]
        eids = order[rows]
        chks = chk_index[eids]
        iu, ju = np.triu_indices(d, k=1)
        a = chks[:, iu]
        b = chks[:, ju]
        lo = np.minimum(a, b).astype(np.int64)
        hi = np.maximum(a, b).astype(np.int64)
        keys_parts.append((lo * m + hi).ravel())
        edge_parts.append(eids[:, ju].ravel())
    if not keys_parts:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    return np.concatenate(keys_parts), np.concatenate(edge_parts)


def _duplicate_edge_positions(var_index, chk_index, m):
    keys = var_index.astype(np.int64) * m + chk_index
    order = np.argsort(keys, kind="stable")
    dup = np.empty(keys.size, dtype=bool)
    dup[0] = False
    dup[1:] = keys[order][1:] == keys[order][:-1]
    return order[dup]


def sample_code(d: DegreeDistribution, n: int, seed: int,
                remove_4cycles: bool = True) -> ParityCheckMatrix:
    """Draw one parity-check matrix of length ``n`` from the ensemble.

    Node counts per degree come from largest-remainder apportionment of the
    node-perspective fractions, sockets are matched by a seeded permutation,
    duplicate edges are rewired away, and (optionally) length-4 cycles are
    broken by edge swaps within a bounded attempt budget. Deterministic in
    (d, n, seed).
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), n, 0x5C0DE]))

    vfrac = node_fractions(d.lam)
    vdegs = np.array(sorted(vfrac), dtype=np.int64)
    vcounts = _apportion(n, np.array([vfrac[g] for g in vdegs]))
    if (vcounts == 0).any():
        missing = vdegs[vcounts == 0].tolist()
        raise EnsembleError(f"n={n} too small: degrees {missing} get no nodes")
    num_edges = int((vdegs * vcounts).sum())

    cdegs = np.array(sorted(d.rho_support()), dtype=np.int64)
    cmass = np.array([d.rho[g] for g in cdegs], dtype=float)
    quotas = num_edges * cmass / cdegs
    m = int(round(quotas.sum()))
    ccounts = _apportion(m, quotas)
    chk_deg_list = np.repeat(cdegs, ccounts)
    gap = num_edges - int(chk_deg_list.sum())
    # Socket-count fixup: spread +-1 over distinct checks to hit the edge total.
    step = 1 if gap > 0 else -1
    order = np.argsort(chk_deg_list if gap > 0 else -chk_deg_list, kind="stable")
    i = 0
    while gap != 0:
        j = order[i % m]
        if step < 0 and chk_deg_list[j] <= 2:
            i += 1
            continue
        chk_deg_list[j] += step
        gap -= step
        i += 1

    var_deg_per_node = np.repeat(vdegs, vcounts)
    var_ids = np.repeat(np.arange(n, dtype=np.int32), var_deg_per_node)
    chk_ids = np.repeat(np.arange(m, dtype=np.int32), chk_deg_list)
    assert var_ids.size == chk_ids.size == num_edges

    chk_sockets = rng.permutation(chk_ids)
    var_index = var_ids
    chk_index = chk_sockets.astype(np.int32)

    budget = 100 * n
    attempts = 0
    # Duplicate-edge rewiring: swap check endpoints with random partner edges.
    for _ in range(200):
        dup = _duplicate_edge_positions(var_index, chk_index, m)
        if dup.size == 0:
            break
        attempts += dup.size
        if attempts > budget:
            raise EnsembleError(
                f"could not remove duplicate edges after {attempts} rewiring attempts")
        partners = rng.integers(0, num_edges, size=dup.size)
        chk_index[dup], chk_index[partners] = chk_index[partners], chk_index[dup].copy()
    else:
        raise EnsembleError(f"could not remove duplicate edges after {attempts} rewiring attempts")

    if remove_4cycles:
        while attempts < budget:
            keys, pair_edge = _chk_pair_keys(var_index, chk_index, n, m)
            order = np.argsort(keys, kind="stable")
            repeated = np.empty(keys.size, dtype=bool)
            if keys.size == 0:
                break
            repeated[0] = False
            repeated[1:] = keys[order][1:] == keys[order][:-1]
            bad_edges = np.unique(pair_edge[order[repeated]])
            if bad_edges.size == 0:
                break
            attempts += bad_edges.size
            partners = rng.integers(0, num_edges, size=bad_edges.size)
            chk_index[bad_edges], chk_index[partners] = (
                chk_index[partners], chk_index[bad_edges].copy())
            # Swaps may reintroduce duplicates; clean them before re-scanning.
            for _ in range(200):
                dup = _duplicate_edge_positions(var_index, chk_index, m)
                if dup.size == 0:
                    break
                attempts += dup.size
                partners = rng.integers(0, num_edges, size=dup.size)
                chk_index[dup], chk_index[partners] = (
                    chk_index[partners], chk_index[dup].copy())

    mat = ParityCheckMatrix(n, m, var_index.astype(np.int32), chk_index)
    mat.validate()
    target = design_rate(d)
    if abs(mat.realized_rate() - target) > 0.005:
        raise EnsembleError(
            f"realized rate {mat.realized_rate():.4f} drifted from design {target:.4f}")
    return mat
