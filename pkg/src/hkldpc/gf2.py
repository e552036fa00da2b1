"""Bit-packed GF(2) elimination used to encode random codewords of a
parity-check matrix for finite-length simulations."""

from __future__ import annotations

import numpy as np


def _pack(rows: np.ndarray) -> np.ndarray:
    return np.packbits(rows, axis=1)


def _rref_packed(H: np.ndarray, n: int):
    """Reduced row echelon form over GF(2) of a dense bool matrix, packed
    bytewise. Returns (rref rows, pivot columns)."""
    P = _pack(H.astype(np.uint8))
    m = P.shape[0]
    col_byte = np.arange(n) // 8
    col_bit = np.uint8(0x80) >> (np.arange(n) % 8).astype(np.uint8)
    row = 0
    pivots = []
    for col in range(n):
        if row >= m:
            break
        cb, bit = col_byte[col], col_bit[col]
        hits = (P[row:, cb] & bit) != 0
        if not hits.any():
            continue
        pr = row + int(np.argmax(hits))
        if pr != row:
            P[[row, pr]] = P[[pr, row]]
        mask = (P[:, cb] & bit) != 0
        mask[row] = False
        if mask.any():
            P[mask] ^= P[row]
        pivots.append(col)
        row += 1
    return P[:row], np.asarray(pivots, dtype=np.int64)


class Gf2Encoder:
    """Systematic encoder: free columns carry the message, pivot columns are
    solved from the RREF so that every codeword satisfies H c = 0."""

    def __init__(self, n: int, m: int, var_index: np.ndarray, chk_index: np.ndarray):
        H = np.zeros((m, n), dtype=bool)
        H[chk_index, var_index] = True
        R, pivots = _rref_packed(H, n)
        free = np.setdiff1d(np.arange(n), pivots)
        self.n = n
        self.rank = pivots.size
        self.k = free.size
        self.pivots = pivots
        self.free = free
        # dependence of each pivot bit on the message bits
        unpacked = np.unpackbits(R, axis=1, count=n)
        self._B = unpacked[:, free].astype(np.float32)

    def encode(self, message: np.ndarray) -> np.ndarray:
        """Map a k-bit message to an n-bit codeword."""
        msg = np.asarray(message, dtype=np.float32)
        if msg.size != self.k:
            raise ValueError(f"message length {msg.size} != k={self.k}")
        out = np.zeros(self.n, dtype=np.int8)
        out[self.free] = msg.astype(np.int8)
        out[self.pivots] = (self._B @ msg).astype(np.int64) & 1
        return out

    def random_codeword(self, rng: np.random.Generator) -> np.ndarray:
        return self.encode(rng.integers(0, 2, size=self.k))
