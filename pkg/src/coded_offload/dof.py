"""Per-receiver degrees of freedom of the uplink and downlink channels.

Only DoF values are produced; they act as high-SNR rate multipliers.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import RangeError
from .scheme import binom


@dataclass(frozen=True)
class DofQuery:
    tx: int
    rx: int
    group: int
    link: str = "downlink"

    def __post_init__(self):
        if min(self.tx, self.rx, self.group) < 1:
            raise RangeError("tx, rx and group must be positive")
        if self.link == "downlink" and self.group > self.tx:
            raise RangeError("cooperation group cannot exceed the transmitter count")
        if self.link == "uplink" and self.group > self.rx:
            raise RangeError("multicast group cannot exceed the receiver count")

    def evaluate(self) -> Fraction:
        if self.link == "uplink":
            return uplink_dof(self.tx, self.rx, self.group)
        return downlink_dof(self.tx, self.rx, self.group)


def uplink_dof(M: int, K: int, r: int) -> Fraction:
    """X-multicast channel, M users to K ENs with multicast groups of size r."""
    if not 1 <= r <= K:
        raise RangeError(f"r = {r} outside [1, {K}]")
    return Fraction(M * r, M * r + K - r)


@lru_cache(maxsize=None)
def downlink_dof(p1: int, M: int, p2: int) -> Fraction:
    """Cooperative X channel: p1 ENs, M users, cooperation groups of p2 ENs.

    Zero-forcing alone suffices once p2 >= M; below that, ZF is cascaded
    with alignment and d' is maximised over t by direct scan.
    """
    if not 1 <= p2 <= p1:
        raise RangeError(f"need 1 <= p2 <= p1, got p1={p1}, p2={p2}")
    if p2 >= M:
        return Fraction(1)
    if p2 == M - 1:
        c = binom(p1, M - 1) * (M - 1)
        return Fraction(c, c + 1)
    d_prime = max(Fraction(p1 - t + 1, M + p1 - 2 * t + 1) for t in range(1, p2 + 1))
    return max(d_prime, Fraction(p2, M))
