"""Achievable latency triplets, converse bounds, gaps, optimisation and regions.

Everything is evaluated in exact rationals; callers convert to float for
display only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from .config import NetworkConfig
from .dof import downlink_dof, uplink_dof
from .errors import EmptyRegion, InfeasibleBaseline, NoFeasibleRate, RangeError
from .scheme import (SchemeDesign, binom, design_scheme, feasible_pairs, is_feasible,
                     p2_bounds, q_range)

BASELINES = ("mds_only", "repetition_only", "full_replication")


@lru_cache(maxsize=None)
def harmonic(k: int) -> Fraction:
    if k < 0:
        raise RangeError("harmonic number of a negative index")
    return sum((Fraction(1, i) for i in range(1, k + 1)), Fraction(0))


def _check_rq(cfg: NetworkConfig, r: int, q: int | None = None):
    if not 1 <= r <= cfg.K:
        raise RangeError(f"r = {r} outside [1, {cfg.K}]")
    if q is not None and not 1 <= q <= cfg.K:
        raise RangeError(f"q = {q} outside [1, {cfg.K}]")


@dataclass(frozen=True)
class LatencyTriplet:
    tau_u: Fraction
    tau_c: Fraction
    tau_d: Fraction
    tau_total: Fraction

    @classmethod
    def assemble(cls, cfg: NetworkConfig, tau_u, tau_c, tau_d) -> "LatencyTriplet":
        return cls(tau_u, tau_c, tau_d, tau_u + cfg.delta_c * tau_c + cfg.delta_d * tau_d)

    def as_floats(self) -> tuple[float, float, float, float]:
        return float(self.tau_u), float(self.tau_c), float(self.tau_d), float(self.tau_total)


# --- achievable -------------------------------------------------------------

def nult_achievable(cfg: NetworkConfig, r: int) -> Fraction:
    _check_rq(cfg, r)
    return Fraction((cfg.M - 1) * r + cfg.K, cfg.K)


def nct_achievable(cfg: NetworkConfig, r: int, q: int) -> Fraction:
    """Expected q-th order statistic of K exponentials, scaled by the per-EN load."""
    _check_rq(cfg, r, q)
    return cfg.M * r * cfg.mu * (harmonic(cfg.K) - harmonic(cfg.K - q)) / cfg.K


@dataclass(frozen=True)
class NdltTerm:
    """One (p1, p2) download round; ``partial`` marks the l-1 level."""

    p1: int
    p2: int
    b_p1: Fraction
    b_row: Fraction
    dof: Fraction
    partial: bool

    @property
    def value(self) -> Fraction:
        return self.b_p1 * self.b_row / self.dof


def ndlt_terms(cfg: NetworkConfig, scheme: SchemeDesign) -> list[NdltTerm]:
    terms = []
    co = scheme.coeffs
    for p1 in scheme.p1_values:
        bp1 = co.B_p1[p1]
        if bp1 == 0:
            continue
        l = scheme.l_table[p1]
        lmax = p2_bounds(cfg.K, p1, scheme.rho2)[1]
        for p2 in range(l, lmax + 1):
            terms.append(NdltTerm(p1, p2, bp1, co.B_p2[(p1, p2)], downlink_dof(p1, cfg.M, p2), False))
        rest = co.B_lminus1[p1]
        if rest:
            terms.append(NdltTerm(p1, l - 1, bp1, rest, downlink_dof(p1, cfg.M, l - 1), True))
    return terms


def ndlt_achievable(cfg: NetworkConfig, r: int, q: int, scheme: SchemeDesign | None = None) -> Fraction:
    _check_rq(cfg, r, q)
    if scheme is None:
        scheme = design_scheme(cfg, r, q)
    return sum((t.value for t in ndlt_terms(cfg, scheme)), Fraction(0))


def _row_mass(cfg: NetworkConfig, scheme: SchemeDesign, p1: int, p2: int) -> Fraction:
    if p1 not in scheme.l_table:
        raise RangeError(f"p1 = {p1} outside [{min(scheme.l_table)}, {max(scheme.l_table)}]")
    l = scheme.l_table[p1]
    lmax = p2_bounds(cfg.K, p1, scheme.rho2)[1]
    if l <= p2 <= lmax:
        return scheme.coeffs.B_p2[(p1, p2)]
    if p2 == l - 1 and p2 >= 1:
        return scheme.coeffs.B_lminus1[p1]
    raise RangeError(f"p2 = {p2} outside [{l - 1}, {lmax}] for p1 = {p1}")


def per_group_ndlt(cfg: NetworkConfig, scheme: SchemeDesign, p1: int, p2: int) -> Fraction:
    """NDLT of one cooperating p1-subset of survivors at replication level p2.

    There are C(q, p1) such subsets; summing over them and over p2 gives
    the total NDLT.
    """
    mass = _row_mass(cfg, scheme, p1, p2)
    return scheme.coeffs.B_p1[p1] * mass / binom(scheme.q, p1) / downlink_dof(p1, cfg.M, p2)


def per_input_ndlt(cfg: NetworkConfig, scheme: SchemeDesign, p1: int, p2: int) -> Fraction:
    """Same round, attributed to a single input index (all M users at once)."""
    return _row_mass(cfg, scheme, p1, p2) / cfg.N / downlink_dof(p1, cfg.M, p2)


# --- converse ---------------------------------------------------------------

def nult_lower(cfg: NetworkConfig, r: int) -> Fraction:
    _check_rq(cfg, r)
    return Fraction(r * (cfg.M - 1) + cfg.K, cfg.K)


def nct_lower(cfg: NetworkConfig, r: int, q: int) -> Fraction:
    _check_rq(cfg, r, q)
    K, HK = cfg.K, harmonic(cfg.K)
    return max(
        (HK - harmonic(K - q + t - 1)) * max(r - K + t, 0) * cfg.M * cfg.mu / t
        for t in range(1, q + 1)
    )


def ndlt_lower(cfg: NetworkConfig, r: int, q: int) -> Fraction:
    _check_rq(cfg, r, q)
    M = cfg.M
    return max(
        (M - (M - t) * (q - t) * Fraction(r, cfg.K) * cfg.mu) / t
        for t in range(1, min(q, M) + 1)
    )


@dataclass(frozen=True)
class GapReport:
    ratio_c: Fraction
    ratio_d: Fraction
    bound_c: int
    bound_d: Fraction
    n1: int
    n2: int
    n: int
    hypotheses_c: bool
    hypotheses_d: bool

    @property
    def within_c(self) -> bool:
        return self.ratio_c <= self.bound_c

    @property
    def within_d(self) -> bool:
        return self.ratio_d <= self.bound_d


def gap_report(cfg: NetworkConfig, r: int, q: int) -> GapReport:
    """Achievable-to-converse ratios next to the order-optimality guarantees.

    The NCT guarantee needs n1 = K - r < q/2; a violation is flagged, not raised.
    """
    K = cfg.K
    n1 = n = K - r
    n2 = math.ceil(Fraction(K, K - q + 1))
    ratio_c = nct_achievable(cfg, r, q) / nct_lower(cfg, r, q)
    ratio_d = ndlt_achievable(cfg, r, q) / ndlt_lower(cfg, r, q)
    return GapReport(
        ratio_c=ratio_c,
        ratio_d=ratio_d,
        bound_c=(1 + n1) * (1 + n2),
        bound_d=2 * (1 + n * cfg.mu),
        n1=n1,
        n2=n2,
        n=n,
        hypotheses_c=2 * n1 < q,
        hypotheses_d=is_feasible(cfg, r, q),
    )


# --- end-to-end and optimisation ---------------------------------------------

@lru_cache(maxsize=65536)
def _components(M: int, K: int, mu: Fraction, r: int, q: int, rates) -> tuple[Fraction, Fraction, Fraction]:
    cfg = NetworkConfig(M=M, K=K, mu=mu)
    scheme = design_scheme(cfg, r, q, rates)
    return nult_achievable(cfg, r), nct_achievable(cfg, r, q), ndlt_achievable(cfg, r, q, scheme)


def end_to_end(cfg: NetworkConfig, r: int, q: int, rates: tuple[Fraction, int] | None = None) -> LatencyTriplet:
    _check_rq(cfg, r, q)
    if not is_feasible(cfg, r, q):
        raise NoFeasibleRate(f"(r, q) = ({r}, {q}) is outside the feasible set: (r-K+q)*mu < 1")
    key = None if rates is None else (Fraction(rates[0]), int(rates[1]))
    return LatencyTriplet.assemble(cfg, *_components(cfg.M, cfg.K, cfg.mu, r, q, key))


def lower_end_to_end(cfg: NetworkConfig, r: int, q: int) -> LatencyTriplet:
    return LatencyTriplet.assemble(cfg, nult_lower(cfg, r), nct_lower(cfg, r, q), ndlt_lower(cfg, r, q))


def _best(candidates: Iterable[tuple[int, int, LatencyTriplet]]):
    best = None
    for r, q, t in sorted(candidates, key=lambda c: (c[0], c[1])):
        if best is None or t.tau_total < best[2].tau_total:
            best = (r, q, t)
    return best


def optimize(cfg: NetworkConfig) -> tuple[int, int, LatencyTriplet]:
    """Exhaustive scan of the feasible set; ties go to smaller r, then smaller q."""
    pairs = feasible_pairs(cfg)
    if not pairs:
        raise EmptyRegion(f"no feasible (r, q) for K = {cfg.K}, mu = {cfg.mu}")
    return _best((r, q, end_to_end(cfg, r, q)) for r, q in pairs)


def baseline_rates(cfg: NetworkConfig, name: str) -> tuple[Fraction, int] | None:
    c = cfg.storage_units
    if name == "mds_only":
        return Fraction(c), 1
    if name == "repetition_only":
        return Fraction(1), c
    if name in ("full_replication", "proposed"):
        return None
    raise ValueError(f"unknown baseline {name!r}")


def baseline_triplet(cfg: NetworkConfig, name: str, r: int, q: int) -> LatencyTriplet:
    """One baseline at (r, q). Full replication pins r to K."""
    if name == "full_replication":
        r = cfg.K
    try:
        return end_to_end(cfg, r, q, baseline_rates(cfg, name))
    except NoFeasibleRate as exc:
        raise InfeasibleBaseline(f"{name} at (r, q) = ({r}, {q}): {exc}") from None


def baselines(cfg: NetworkConfig, r: int, q: int) -> dict[str, LatencyTriplet]:
    """Proposed scheme plus every baseline that is feasible at (r, q)."""
    out = {"proposed": end_to_end(cfg, r, q)}
    for name in BASELINES:
        try:
            out[name] = baseline_triplet(cfg, name, r, q)
        except InfeasibleBaseline:
            pass
    return out


def optimize_baseline(cfg: NetworkConfig, name: str) -> tuple[int, int, LatencyTriplet]:
    """Best (r, q) for a named scheme ("proposed" or one of BASELINES)."""
    if name == "proposed":
        return optimize(cfg)
    pairs = feasible_pairs(cfg)
    if name == "full_replication":
        pairs = {(r, q) for r, q in pairs if r == cfg.K}
    cands = []
    for r, q in pairs:
        try:
            cands.append((r, q, baseline_triplet(cfg, name, r, q)))
        except InfeasibleBaseline:
            continue
    if not cands:
        raise EmptyRegion(f"{name} has no feasible (r, q)")
    return _best(cands)


def sweep(cfg: NetworkConfig, axis: str, values: Sequence,
          schemes: Sequence[str] = ("proposed",) + BASELINES) -> list[dict]:
    """Optimal end-to-end time per scheme as one weight varies."""
    if axis not in ("delta_c", "delta_d"):
        raise ValueError("axis must be delta_c or delta_d")
    rows = []
    for v in values:
        point = cfg.replace(**{axis: v})
        row = {"axis": axis, "value": point.delta_c if axis == "delta_c" else point.delta_d}
        for name in schemes:
            try:
                r, q, t = optimize_baseline(point, name)
                row[name] = (r, q, t)
            except EmptyRegion:
                row[name] = None
        rows.append(row)
    return rows


# --- compute-download regions -----------------------------------------------

@dataclass(frozen=True)
class RegionCurve:
    points: list[tuple[int, Fraction, Fraction]]
    hull: list[tuple[Fraction, Fraction]] = field(default_factory=list)

    def boundary(self, tau_c) -> float:
        return hull_value(self.hull, tau_c)


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def pareto_hull(points: Iterable[tuple]) -> list[tuple]:
    """Lower-left convex Pareto hull, tau_c ascending and tau_d strictly descending."""
    lowest: dict = {}
    for x, y in points:
        if x not in lowest or y < lowest[x]:
            lowest[x] = y
    lower: list = []
    for p in sorted(lowest.items()):
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    hull = lower[:1]
    for p in lower[1:]:
        if p[1] < hull[-1][1]:
            hull.append(p)
        else:
            break
    return hull


def hull_value(hull: Sequence[tuple], x) -> float:
    """Smallest tau_d reachable at tau_c = x (time sharing along hull edges)."""
    if not hull or x < hull[0][0]:
        return math.inf
    for (x0, y0), (x1, y1) in zip(hull, hull[1:]):
        if x0 <= x <= x1:
            return float(y0 + (y1 - y0) * (Fraction(x) - x0) / (x1 - x0))
    return float(hull[-1][1])


def region(cfg: NetworkConfig, r: int, kind: str = "inner") -> RegionCurve:
    """(tau_c, tau_d) points over the feasible q at this r, with their hull."""
    _check_rq(cfg, r)
    if kind not in ("inner", "outer"):
        raise ValueError("kind must be 'inner' or 'outer'")
    pts = []
    for q in q_range(cfg, r):
        if kind == "inner":
            t = end_to_end(cfg, r, q)
            pts.append((q, t.tau_c, t.tau_d))
        else:
            pts.append((q, nct_lower(cfg, r, q), ndlt_lower(cfg, r, q)))
    return RegionCurve(pts, pareto_hull((c, d) for _, c, d in pts))
