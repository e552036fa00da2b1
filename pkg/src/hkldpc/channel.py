"""Two-user Gaussian interference channel: parameters, interference
classification, superimposed-BPSK modulation, and block transmission."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, NamedTuple

import numpy as np

from .ensembles import MESSAGES


class ChannelError(ValueError):
    pass


@dataclass(frozen=True)
class GicParameters:
    """Channel gains, per-user powers, noise level, and power splits.

    h_ij is the gain from user i to receiver j. Noise is Gaussian with
    variance N0/2 per real dimension; BPSK occupies the real dimension only.
    alpha_i is the fraction of user i's power spent on its private message.
    """

    h11: float = 1.0
    h12: float = 1.0
    h21: float = 1.0
    h22: float = 1.0
    P1: float = 1.0
    P2: float = 1.0
    N0: float = 1.0
    alpha1: float = 0.0
    alpha2: float = 0.0

    def __post_init__(self):
        for name in ("P1", "P2", "N0"):
            if getattr(self, name) <= 0:
                raise ChannelError(f"{name} must be positive")
        for name in ("alpha1", "alpha2"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ChannelError(f"{name} outside [0, 1]")
        for name in ("h11", "h12", "h21", "h22"):
            g = getattr(self, name)
            if not np.isfinite(g) or g < 0:
                raise ChannelError(f"gain {name}={g} must be finite and nonnegative")

    def snr(self, i: int) -> float:
        h = self.h11 if i == 1 else self.h22
        p = self.P1 if i == 1 else self.P2
        return h * h * p / self.N0

    def inr(self, i: int) -> float:
        # interference at receiver i comes from the other user
        h = self.h21 if i == 1 else self.h12
        p = self.P2 if i == 1 else self.P1
        return h * h * p / self.N0

    def interference_ratio(self, i: int) -> float:
        return self.inr(i) / self.snr(i)

    def alpha(self, user: int) -> float:
        return self.alpha1 if user == 1 else self.alpha2

    def power(self, user: int) -> float:
        return self.P1 if user == 1 else self.P2

    def gain(self, user: int, receiver: int) -> float:
        return getattr(self, f"h{user}{receiver}")

    def with_noise_offset_db(self, offset_db: float) -> "GicParameters":
        """Scale the noise level by 10^(-offset/10); positive offset means a
        better channel. SNR/INR ratios are preserved."""
        return replace(self, N0=self.N0 * 10.0 ** (-offset_db / 10.0))

    def with_alphas(self, alpha1: float, alpha2: float) -> "GicParameters":
        return replace(self, alpha1=alpha1, alpha2=alpha2)

    @classmethod
    def symmetric(cls, snr_db: float, inr_db: float, N0: float = 1.0,
                  alpha1: float = 0.0, alpha2: float = 0.0) -> "GicParameters":
        """Symmetric GIC with unit direct gains: equal SNRs and equal INRs."""
        snr = 10.0 ** (snr_db / 10.0)
        inr = 10.0 ** (inr_db / 10.0)
        cross = float(np.sqrt(inr / snr))
        return cls(h11=1.0, h22=1.0, h12=cross, h21=cross,
                   P1=snr * N0, P2=snr * N0, N0=N0,
                   alpha1=alpha1, alpha2=alpha2)


class InterferenceClass(NamedTuple):
    kind: str          # "strong" | "weak" | "mixed"
    boundary: bool     # some a_i is exactly 1; the category is then a convention


def classify(p: GicParameters) -> InterferenceClass:
    """Strong iff both INR/SNR ratios exceed 1, weak iff both are below 1,
    mixed otherwise. Ratios exactly 1 set the boundary flag."""
    a1, a2 = p.interference_ratio(1), p.interference_ratio(2)
    boundary = a1 == 1.0 or a2 == 1.0
    if a1 > 1.0 and a2 > 1.0:
        kind = "strong"
    elif a1 < 1.0 and a2 < 1.0:
        kind = "weak"
    elif boundary:
        # convention: treat the boundary ratio as strong-side
        kind = "strong" if (a1 >= 1.0 and a2 >= 1.0) else "mixed"
    else:
        kind = "mixed"
    return InterferenceClass(kind, boundary)


def active_planes(p: GicParameters) -> tuple[str, ...]:
    """Bit planes actually transmitted: U_i iff alpha_i > 0, W_i iff alpha_i < 1."""
    out = []
    for user in (1, 2):
        a = p.alpha(user)
        if a > 0.0:
            out.append(f"U{user}")
        if a < 1.0:
            out.append(f"W{user}")
    return tuple(out)


def plane_amplitude(p: GicParameters, msg: str) -> float:
    """Transmit-side amplitude of one plane: sqrt(alpha P) private,
    sqrt((1-alpha) P) public."""
    user = int(msg[1])
    a, pw = p.alpha(user), p.power(user)
    frac = a if msg[0] == "U" else (1.0 - a)
    return float(np.sqrt(frac * pw))


def plane_gain(p: GicParameters, msg: str, receiver: int) -> float:
    """Effective received amplitude of one plane at one receiver."""
    return plane_amplitude(p, msg) * p.gain(int(msg[1]), receiver)


def default_decoded_set(p: GicParameters, receiver: int) -> tuple[str, ...]:
    """Messages receiver j decodes: both of its own planes plus the
    interferer's public plane (never the interferer's private one). The
    cross public plane is dropped when its received gain is exactly zero."""
    own, other = (1, 2) if receiver == 1 else (2, 1)
    out = [m for m in (f"U{own}", f"W{own}") if m in active_planes(p)]
    cross = f"W{other}"
    if cross in active_planes(p) and plane_gain(p, cross, receiver) > 0.0:
        out.append(cross)
    return tuple(out)


def modulate_hk(c_u: np.ndarray, c_w: np.ndarray, P: float, alpha: float) -> np.ndarray:
    """Superimpose the private and public BPSK planes of one user:
    sqrt(alpha P)(1-2c_u) + sqrt((1-alpha) P)(1-2c_w)."""
    if not 0.0 <= alpha <= 1.0:
        raise ChannelError(f"alpha={alpha} outside [0, 1]")
    c_u = np.asarray(c_u)
    c_w = np.asarray(c_w)
    if c_u.shape != c_w.shape:
        raise ChannelError("bit planes must share one length")
    return (np.sqrt(alpha * P) * (1.0 - 2.0 * c_u)
            + np.sqrt((1.0 - alpha) * P) * (1.0 - 2.0 * c_w))


@dataclass(frozen=True)
class ChannelBlock:
    """One transmitted block: received vectors at both receivers, the
    transmitted symbol vectors, and the underlying bit planes."""

    y1: np.ndarray
    y2: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    bits: Mapping[str, np.ndarray]

    def __post_init__(self):
        n = self.y1.size
        for arr in (self.y2, self.x1, self.x2, *self.bits.values()):
            if arr.size != n:
                raise ChannelError("all block vectors must share one length")

    def received(self, receiver: int) -> np.ndarray:
        return self.y1 if receiver == 1 else self.y2


def _user_symbols(p: GicParameters, user: int, bits: Mapping[str, np.ndarray],
                  n: int) -> np.ndarray:
    a = p.alpha(user)
    zeros = np.zeros(n, dtype=np.int8)
    c_u = bits.get(f"U{user}", zeros)
    c_w = bits.get(f"W{user}", zeros)
    return modulate_hk(c_u, c_w, p.power(user), a)


def transmit(p: GicParameters, bits: Mapping[str, np.ndarray], seed: int) -> ChannelBlock:
    """Modulate both users' planes and push them through the channel.

    y_j = h_1j x1 + h_2j x2 + z_j with z_j i.i.d. N(0, N0/2). Deterministic
    given the seed.
    """
    planes = active_planes(p)
    for msg in bits:
        if msg not in MESSAGES:
            raise ChannelError(f"unknown bit plane {msg!r}")
    missing = [m for m in planes if m not in bits]
    if missing:
        raise ChannelError(f"missing bit planes {missing}")
    lengths = {np.asarray(b).size for b in bits.values()}
    if len(lengths) != 1:
        raise ChannelError("bit planes must share one length")
    n = lengths.pop()

    x1 = _user_symbols(p, 1, bits, n)
    x2 = _user_symbols(p, 2, bits, n)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x6C1C]))
    sigma = np.sqrt(p.N0 / 2.0)
    y1 = p.h11 * x1 + p.h21 * x2 + rng.normal(0.0, sigma, size=n)
    y2 = p.h12 * x1 + p.h22 * x2 + rng.normal(0.0, sigma, size=n)
    return ChannelBlock(y1=y1, y2=y2, x1=x1, x2=x2,
                        bits={k: np.asarray(v) for k, v in bits.items()})


def ts_power_schedule(p: GicParameters, tau: float, mode: str):
    """Per-slot transmit powers of a two-slot time-sharing schedule.

    naive: each user keeps its per-symbol power constraint during its slot.
    non-naive: user i boosts to P_i / (its slot fraction); the time-averaged
    total stays at P1 + P2.
    Returns ((P1_slot1, P2_slot1), (P1_slot2, P2_slot2), average_total).
    """
    if not 0.0 < tau < 1.0:
        raise ChannelError("tau endpoints excluded")
    if mode == "naive":
        slot1, slot2 = (p.P1, 0.0), (0.0, p.P2)
    elif mode == "non-naive":
        slot1, slot2 = (p.P1 / tau, 0.0), (0.0, p.P2 / (1.0 - tau))
    else:
        raise ChannelError(f"unknown TS mode {mode!r}")
    avg = tau * sum(slot1) + (1.0 - tau) * sum(slot2)
    return slot1, slot2, avg
