"""Binary extension fields GF(2^w) with log/antilog tables, vectorised over numpy."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import ValidationError

PRIMITIVE_POLY = {8: 0x11D, 16: 0x1100B}


class GF:
    """GF(2^w) for w in {8, 16}. Elements are unsigned ints in [0, 2^w)."""

    def __init__(self, w: int = 16):
        if w not in PRIMITIVE_POLY:
            raise ValidationError(f"field width w must be 8 or 16, got {w}")
        self.w = w
        self.order = 1 << w
        self.dtype = np.uint8 if w == 8 else np.uint16
        n = self.order - 1
        exp = np.zeros(2 * n, dtype=np.int64)
        log = np.zeros(self.order, dtype=np.int64)
        x = 1
        for i in range(n):
            exp[i] = x
            log[x] = i
            x <<= 1
            if x & self.order:
                x ^= PRIMITIVE_POLY[w]
        if x != 1 or len(set(exp[:n].tolist())) != n:
            raise ValidationError(f"polynomial {PRIMITIVE_POLY[w]:#x} is not primitive")
        exp[n:] = exp[:n]
        self._exp, self._log, self._n = exp, log, n

    def __repr__(self):
        return f"GF(2^{self.w})"

    def array(self, values) -> np.ndarray:
        a = np.asarray(values, dtype=np.int64)
        if a.size and (a.min() < 0 or a.max() >= self.order):
            raise ValidationError(f"element outside GF(2^{self.w})")
        return a

    def mul(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        out = self._exp[self._log[a] + self._log[b]]
        return np.where((a == 0) | (b == 0), 0, out)

    def inv(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise ZeroDivisionError("zero has no inverse")
        return self._exp[(self._n - self._log[a]) % self._n]

    def div(self, a, b) -> np.ndarray:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, e: int) -> int:
        if a == 0:
            return 0 if e else 1
        return int(self._exp[(int(self._log[a]) * e) % self._n])

    def matmul(self, A, B) -> np.ndarray:
        """A @ B over the field; XOR-accumulates one column of A at a time."""
        A = np.asarray(A, dtype=np.int64)
        B = np.asarray(B, dtype=np.int64)
        if A.shape[1] != B.shape[0]:
            raise ValueError(f"shape mismatch {A.shape} @ {B.shape}")
        out = np.zeros((A.shape[0], B.shape[1]), dtype=np.int64)
        for k in range(A.shape[1]):
            out ^= self.mul(A[:, k:k + 1], B[k:k + 1, :])
        return out

    def _eliminate(self, A, B):
        """Reduce [A | B] so A becomes identity. Returns (rank, reduced B)."""
        A = np.array(A, dtype=np.int64)
        B = np.array(B, dtype=np.int64)
        n = A.shape[0]
        rank = 0
        for col in range(A.shape[1]):
            piv = next((i for i in range(rank, n) if A[i, col]), None)
            if piv is None:
                continue
            if piv != rank:
                A[[rank, piv]] = A[[piv, rank]]
                B[[rank, piv]] = B[[piv, rank]]
            s = self.inv(A[rank, col])
            A[rank] = self.mul(A[rank], s)
            B[rank] = self.mul(B[rank], s)
            others = np.nonzero(A[:, col])[0]
            others = others[others != rank]
            if others.size:
                f = A[others, col][:, None]
                A[others] ^= self.mul(f, A[rank][None, :])
                B[others] ^= self.mul(f, B[rank][None, :])
            rank += 1
        return rank, B

    def rank(self, A) -> int:
        A = np.asarray(A, dtype=np.int64)
        return self._eliminate(A, np.zeros((A.shape[0], 0), dtype=np.int64))[0]

    def solve(self, A, B):
        """Solve A X = B for square A; returns None when A is singular."""
        A = np.asarray(A, dtype=np.int64)
        if A.shape[0] != A.shape[1]:
            raise ValueError("solve needs a square system")
        B = np.asarray(B, dtype=np.int64)
        vec = B.ndim == 1
        rank, X = self._eliminate(A, B[:, None] if vec else B)
        if rank < A.shape[0]:
            return None
        return X[:, 0] if vec else X

    def inverse(self, A):
        A = np.asarray(A, dtype=np.int64)
        return self.solve(A, np.eye(A.shape[0], dtype=np.int64))


@lru_cache(maxsize=None)
def field(w: int = 16) -> GF:
    return GF(w)
