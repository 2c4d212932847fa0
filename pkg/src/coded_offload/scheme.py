"""Feasibility set, cascaded code rates, B-coefficient tables and task assignment.

All combinatorics are exact (``int`` / ``Fraction``). ENs and users are
0-indexed.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .config import NetworkConfig
from .errors import NoFeasibleRate, RangeError, SizingError


def binom(a: int, b: int) -> int:
    """C(a, b), zero outside 0 <= b <= a."""
    if a < 0 or b < 0 or b > a:
        return 0
    return math.comb(a, b)


def is_feasible(cfg: NetworkConfig, r: int, q: int) -> bool:
    return 1 <= r <= cfg.K and 1 <= q <= cfg.K and (r - cfg.K + q) * cfg.mu >= 1


def feasible_pairs(cfg: NetworkConfig) -> set[tuple[int, int]]:
    K = cfg.K
    return {(r, q) for r in range(1, K + 1) for q in range(1, K + 1) if is_feasible(cfg, r, q)}


def q_range(cfg: NetworkConfig, r: int) -> list[int]:
    """Feasible recovery orders for repetition order r, ascending."""
    return [q for q in range(1, cfg.K + 1) if is_feasible(cfg, r, q)]


def p1_range(K: int, r: int, q: int) -> range:
    """How many survivors can hold a given input: r-K+q .. min(r, q)."""
    return range(max(r - K + q, 0), min(r, q) + 1)


def p2_bounds(K: int, p1: int, rho2: int) -> tuple[int, int]:
    """(l_min, l_max): replication levels of a coded row among p1 ENs."""
    return max(rho2 - K + p1, 1), min(p1, rho2)


def recovery_condition(K: int, r: int, q: int, rho1: Fraction, rho2: int) -> bool:
    """Any r-K+q ENs jointly hold at least m distinct coded rows."""
    return binom(K, rho2) - binom(2 * K - r - q, rho2) >= Fraction(binom(K, rho2)) / rho1


def rate_grid(cfg: NetworkConfig) -> list[tuple[Fraction, int]]:
    """Admissible (rho1, rho2) with rho1 * rho2 = K*mu, rho2 descending."""
    c = cfg.storage_units
    return [(Fraction(c, rho2), rho2) for rho2 in range(c, 0, -1)]


def select_code_rates(cfg: NetworkConfig, r: int, q: int) -> tuple[Fraction, int]:
    """Largest repetition degree rho2 that still satisfies the recovery condition."""
    if not (1 <= r <= cfg.K and 1 <= q <= cfg.K):
        raise RangeError(f"(r, q) = ({r}, {q}) outside [1, {cfg.K}]^2")
    for rho1, rho2 in rate_grid(cfg):
        if recovery_condition(cfg.K, r, q, rho1, rho2):
            return rho1, rho2
    raise NoFeasibleRate(
        f"no rho2 in [1, {cfg.storage_units}] satisfies the recovery condition at "
        f"(r, q) = ({r}, {q}); (r-K+q)*mu = {(r - cfg.K + q) * cfg.mu} < 1"
    )


def b_p1_table(K: int, r: int, q: int) -> dict[int, Fraction]:
    """Fraction of each user's inputs held by exactly p1 survivors."""
    total = binom(K, r)
    return {p1: Fraction(binom(q, p1) * binom(K - q, r - p1), total) for p1 in p1_range(K, r, q)}


def b_p2_table(K: int, p1: int, rho1: Fraction, rho2: int) -> dict[int, Fraction]:
    """Coded-row mass (in units of m) replicated at exactly p2 of p1 ENs.

    Entries may exceed 1: with little repetition the p1 ENs can hold more
    distinct MDS rows than the m that are needed.
    """
    lmin, lmax = p2_bounds(K, p1, rho2)
    denom = binom(K, rho2)
    return {
        p2: Fraction(binom(p1, p2) * binom(K - p1, rho2 - p2)) * rho1 / denom
        for p2 in range(lmin, lmax + 1)
    }


def _l_for(table: dict[int, Fraction], lmin: int, lmax: int) -> int:
    tail = Fraction(0)
    best = lmax + 1
    for l in range(lmax, lmin - 1, -1):
        tail += table[l]
        if tail > 1:
            break
        best = l
    return best


def compute_l_table(cfg: NetworkConfig, r: int, q: int, rho1: Fraction, rho2: int) -> dict[int, int]:
    """Per p1: smallest level l whose tail sum of B_p2 still fits in m.

    l = l_max + 1 means even the top level alone over-covers m; all needed
    rows are then taken from level l_max.
    """
    out = {}
    for p1 in p1_range(cfg.K, r, q):
        if p1 == 0:
            continue
        lmin, lmax = p2_bounds(cfg.K, p1, rho2)
        out[p1] = _l_for(b_p2_table(cfg.K, p1, rho1, rho2), lmin, lmax)
    return out


@dataclass(frozen=True)
class BCoefficients:
    B_p1: dict[int, Fraction]
    B_p2: dict[tuple[int, int], Fraction]
    B_lminus1: dict[int, Fraction]

    def tail(self, p1: int, l: int, lmax: int) -> Fraction:
        return sum((self.B_p2[(p1, p2)] for p2 in range(l, lmax + 1)), Fraction(0))


def b_coefficients(cfg: NetworkConfig, r: int, q: int, rho1: Fraction, rho2: int,
                   l_table: dict[int, int] | None = None) -> BCoefficients:
    if l_table is None:
        l_table = compute_l_table(cfg, r, q, rho1, rho2)
    B_p1 = b_p1_table(cfg.K, r, q)
    B_p2 = {}
    B_l = {}
    for p1, l in l_table.items():
        table = b_p2_table(cfg.K, p1, rho1, rho2)
        for p2, v in table.items():
            B_p2[(p1, p2)] = v
        lmax = p2_bounds(cfg.K, p1, rho2)[1]
        B_l[p1] = 1 - sum((table[p2] for p2 in range(l, lmax + 1)), Fraction(0))
    return BCoefficients(B_p1, B_p2, B_l)


@dataclass(frozen=True)
class SchemeDesign:
    r: int
    q: int
    rho1: Fraction
    rho2: int
    l_table: dict[int, int]
    coeffs: BCoefficients

    @property
    def p1_values(self) -> list[int]:
        return sorted(self.l_table)

    def p2_levels(self, K: int, p1: int) -> tuple[int, int]:
        return p2_bounds(K, p1, self.rho2)


def design_scheme(cfg: NetworkConfig, r: int, q: int,
                  rates: tuple[Fraction, int] | None = None) -> SchemeDesign:
    """Full scheme at (r, q). Forced ``rates`` are checked against the recovery condition."""
    if rates is None:
        rho1, rho2 = select_code_rates(cfg, r, q)
    else:
        rho1, rho2 = Fraction(rates[0]), int(rates[1])
        if rho1 * rho2 != cfg.storage_units or not 1 <= rho2 <= cfg.storage_units:
            raise NoFeasibleRate(f"rates ({rho1}, {rho2}) do not satisfy rho1*rho2 = K*mu = {cfg.storage_units}")
        if not is_feasible(cfg, r, q) or not recovery_condition(cfg.K, r, q, rho1, rho2):
            raise NoFeasibleRate(f"rates ({rho1}, {rho2}) violate the recovery condition at (r, q) = ({r}, {q})")
    l_table = compute_l_table(cfg, r, q, rho1, rho2)
    return SchemeDesign(r, q, rho1, rho2, l_table, b_coefficients(cfg, r, q, rho1, rho2, l_table))


@dataclass(frozen=True)
class TaskAssignment:
    r: int
    groups: dict[tuple[int, ...], list[tuple[int, int]]]
    per_en_load: dict[int, int]

    def repetition_order(self, M: int, N: int) -> Fraction:
        return Fraction(sum(self.per_en_load.values()), M * N)

    def subset_of(self) -> dict[tuple[int, int], tuple[int, ...]]:
        """Map (user, input) -> the r-subset of ENs it was assigned to."""
        return {idx: subset for subset, members in self.groups.items() for idx in members}


def build_assignment(cfg: NetworkConfig, r: int, seed: int | None = None) -> TaskAssignment:
    """Round-robin each user's inputs over the r-subsets in lexicographic order.

    With a seed, input indices are shuffled per user first; the partition
    stays balanced either way.
    """
    if not 1 <= r <= cfg.K:
        raise RangeError(f"r = {r} outside [1, {cfg.K}]")
    subsets = list(itertools.combinations(range(cfg.K), r))
    if cfg.N % len(subsets):
        n_min = len(subsets)
        raise SizingError(
            f"N = {cfg.N} is not divisible by C(K, r) = C({cfg.K}, {r}) = {n_min}; "
            f"minimal valid N is {n_min} (next compliant: {-(-cfg.N // n_min) * n_min})",
            hint={"N": n_min},
        )
    rng = np.random.default_rng(seed) if seed is not None else None
    groups: dict[tuple[int, ...], list[tuple[int, int]]] = {s: [] for s in subsets}
    for i in range(cfg.M):
        order = list(range(cfg.N)) if rng is None else [int(j) for j in rng.permutation(cfg.N)]
        for pos, j in enumerate(order):
            groups[subsets[pos % len(subsets)]].append((i, j))
    load = {k: 0 for k in range(cfg.K)}
    for subset, members in groups.items():
        for k in subset:
            load[k] += len(members)
    return TaskAssignment(r, groups, load)


def minimal_sizes(cfg: NetworkConfig, r: int, q: int | None = None,
                  rates: tuple[Fraction, int] | None = None) -> dict[str, int]:
    """Smallest N and m for which assignment and coded storage are integral.

    N must be a multiple of C(K, r). With c = K*mu, m must make mu*m,
    rho1*m and rho1*m / C(K, rho2) integers, i.e. c*m divisible by
    lcm(K, rho2*C(K, rho2)).
    """
    out = {"N": binom(cfg.K, r)}
    if q is not None or rates is not None:
        rho1, rho2 = rates if rates is not None else select_code_rates(cfg, r, q)
        c = cfg.storage_units
        L = math.lcm(cfg.K, rho2 * binom(cfg.K, rho2))
        out["m"] = L // math.gcd(L, c)
    return out


def check_sizing(cfg: NetworkConfig, r: int, q: int | None = None,
                 rates: tuple[Fraction, int] | None = None) -> dict[str, int]:
    """Raise SizingError naming the minimal valid N/m when cfg does not comply."""
    need = minimal_sizes(cfg, r, q, rates)
    problems = []
    if cfg.N % need["N"]:
        problems.append(f"N = {cfg.N} not divisible by C(K, r) = {need['N']}")
    if "m" in need and cfg.m % need["m"]:
        problems.append(f"m = {cfg.m} not a multiple of {need['m']} (integral mu*m, rho1*m and rows per block)")
    if problems:
        hint = dict(need)
        raise SizingError("; ".join(problems) + f"; minimal valid sizes: {hint}", hint=hint)
    return need
