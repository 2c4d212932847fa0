"""Monte Carlo straggler draws and wall-clock phase times.

Randomness comes from numpy's Philox counter generator keyed by the seed.
Trial t owns a fixed window of the counter space, so any trial can be
regenerated alone and campaigns split across threads give identical output.
"""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .config import NetworkConfig, SimParams
from .dof import downlink_dof, uplink_dof
from .errors import ValidationError
from .latency import nct_achievable, ndlt_achievable
from .scheme import SchemeDesign, binom, design_scheme, p2_bounds

Z95 = 1.959963984540054


# --- random streams ------------------------------------------------------------

def draws_per_trial(cfg: NetworkConfig, sim: SimParams) -> int:
    """Uniforms reserved per trial: K compute times, then uplink and downlink fades."""
    return cfg.K + 2 * sim.fading_samples


def _blocks_per_trial(cfg, sim) -> int:
    return -(-draws_per_trial(cfg, sim) // 4)


def trial_uniforms(cfg: NetworkConfig, sim: SimParams, start: int, count: int) -> np.ndarray:
    """Uniforms for trials start .. start+count-1, one row per trial."""
    S = _blocks_per_trial(cfg, sim)
    bitgen = np.random.Philox(key=sim.seed).advance(start * S)
    u = np.random.Generator(bitgen).random((count, 4 * S))
    return u[:, :draws_per_trial(cfg, sim)]


def omegas_from(cfg: NetworkConfig, u: np.ndarray) -> np.ndarray:
    """Per-EN row-product times, exponential with rate eta."""
    return -np.log1p(-u[..., :cfg.K]) / cfg.eta


def fading_rates(cfg: NetworkConfig, sim: SimParams, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-trial spectral efficiencies (bit/s/Hz) for uplink and downlink."""
    shape = u.shape[:-1]
    if sim.rate_model == "deterministic-dof":
        return np.full(shape, math.log2(1 + sim.P_u)), np.full(shape, math.log2(1 + sim.P_d))
    L = sim.fading_samples
    gain_u = -np.log1p(-u[..., cfg.K:cfg.K + L])
    gain_d = -np.log1p(-u[..., cfg.K + L:cfg.K + 2 * L])
    return np.log2(1 + sim.P_u * gain_u).mean(axis=-1), np.log2(1 + sim.P_d * gain_d).mean(axis=-1)


def fastest(times: np.ndarray, q: int) -> np.ndarray:
    """Indices of the q smallest times per row; ties go to the lower index."""
    return np.sort(np.argsort(times, axis=-1, kind="stable")[..., :q], axis=-1)


# --- per-pattern accounting ------------------------------------------------------

def per_en_load(cfg: NetworkConfig, r: int) -> Fraction:
    """Inputs held by each EN under the balanced assignment, MNr/K."""
    return Fraction(cfg.M * cfg.N * r, cfg.K)


def download_rows(cfg: NetworkConfig, scheme: SchemeDesign, p1: int) -> dict[int, Fraction]:
    """Rows fetched per replication level for an input held by p1 survivors.

    Level counts follow the block placement; rows are taken from the most
    replicated level down until m rows are collected.
    """
    K, m = cfg.K, cfg.m
    per_block = scheme.rho1 * m / binom(K, scheme.rho2)
    lmin, lmax = p2_bounds(K, p1, scheme.rho2)
    need = Fraction(m)
    taken = {}
    for p2 in range(lmax, lmin - 1, -1):
        if need <= 0:
            break
        have = binom(p1, p2) * binom(K - p1, scheme.rho2 - p2) * per_block
        take = min(have, need)
        if take:
            taken[p2] = take
        need -= take
    return taken


def p1_counts(cfg: NetworkConfig, r: int, survivors) -> dict[int, Fraction]:
    """Inputs per user held by exactly p1 survivors, for one survivor set."""
    alive = set(int(k) for k in survivors)
    per_subset = Fraction(cfg.N, binom(cfg.K, r))
    out: dict[int, Fraction] = {}
    for s in itertools.combinations(range(cfg.K), r):
        p1 = len(alive.intersection(s))
        out[p1] = out.get(p1, Fraction(0)) + per_subset
    return out


def _download_units(cfg, scheme, survivors) -> float:
    """Download time in units of one row (B bits) at unit rate, DoF included."""
    total = Fraction(0)
    for p1, count in p1_counts(cfg, scheme.r, survivors).items():
        if p1 == 0 or count == 0:
            continue
        for p2, rows in download_rows(cfg, scheme, p1).items():
            total += count * rows / downlink_dof(p1, cfg.M, p2)
    return float(total)


def phase_times(cfg: NetworkConfig, scheme: SchemeDesign, sim: SimParams, survivors,
                rates: tuple[float, float] | None = None) -> tuple[float, float]:
    """(T_u, T_d) in seconds for one survivor set.

    ``rates`` overrides the spectral efficiencies (used by the fading model).
    """
    if rates is None:
        rates = math.log2(1 + sim.P_u), math.log2(1 + sim.P_d)
    up_bits = float(per_en_load(cfg, scheme.r)) * cfg.n * cfg.B
    T_u = up_bits / (float(uplink_dof(cfg.M, cfg.K, scheme.r)) * sim.W_u * rates[0])
    T_d = _download_units(cfg, scheme, survivors) * cfg.B / (sim.W_d * rates[1])
    return T_u, T_d


# --- trials ----------------------------------------------------------------------

@dataclass(frozen=True)
class TrialRecord:
    omega: np.ndarray
    survivors: tuple[int, ...]
    T_u: float
    T_c: float
    T_d: float

    @property
    def T_total(self) -> float:
        return self.T_u + self.T_c + self.T_d

    def __eq__(self, other):
        return (isinstance(other, TrialRecord) and np.array_equal(self.omega, other.omega)
                and (self.survivors, self.T_u, self.T_c, self.T_d)
                == (other.survivors, other.T_u, other.T_c, other.T_d))


def compute_time_scale(cfg: NetworkConfig, r: int) -> float:
    """mu * m * |U_k|: seconds of work per unit of omega on every EN."""
    return float(cfg.mu * cfg.m * per_en_load(cfg, r))


def draw_trial(cfg: NetworkConfig, scheme: SchemeDesign, sim: SimParams, t: int,
               omega: np.ndarray | None = None) -> TrialRecord:
    u = trial_uniforms(cfg, sim, t, 1)[0]
    if omega is None:
        omega = omegas_from(cfg, u)
    omega = np.asarray(omega, dtype=float)
    finish = compute_time_scale(cfg, scheme.r) * omega
    surv = fastest(finish, scheme.q)
    R_u, R_d = fading_rates(cfg, sim, u)
    T_u, T_d = phase_times(cfg, scheme, sim, surv, (float(R_u), float(R_d)))
    return TrialRecord(omega, tuple(int(k) for k in surv), T_u, float(finish[surv].max()), T_d)


@dataclass(frozen=True)
class Batch:
    """Vectorised trial results for one (r, q)."""

    T_u: np.ndarray
    T_c: np.ndarray
    T_d: np.ndarray

    @property
    def T_total(self) -> np.ndarray:
        return self.T_u + self.T_c + self.T_d


def _run_chunk(cfg, scheme, sim, start, count) -> Batch:
    u = trial_uniforms(cfg, sim, start, count)
    finish = compute_time_scale(cfg, scheme.r) * omegas_from(cfg, u)
    # survivors are the q fastest, so T_c is the q-th order statistic
    T_c = np.sort(finish, axis=1)[:, scheme.q - 1]
    R_u, R_d = fading_rates(cfg, sim, u)
    T_u0, _ = phase_times(cfg, scheme, sim, range(cfg.K), (1.0, 1.0))
    # download units depend on the survivor set only through p1 counts, which
    # are identical for every set of size q; evaluate once
    units = _download_units(cfg, scheme, range(scheme.q)) * cfg.B / sim.W_d
    return Batch(T_u0 / R_u, T_c, units / R_d)


def thread_count() -> int:
    cap = os.environ.get("CODED_OFFLOAD_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ValidationError(f"CODED_OFFLOAD_THREADS must be an integer, got {cap!r}") from None
    return n


def simulate(cfg: NetworkConfig, scheme: SchemeDesign, sim: SimParams, threads: int | None = None,
             chunk: int = 20_000) -> Batch:
    starts = list(range(0, sim.trials, chunk))
    jobs = [(s, min(chunk, sim.trials - s)) for s in starts]
    threads = thread_count() if threads is None else threads
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(lambda j: _run_chunk(cfg, scheme, sim, *j), jobs))
    else:
        parts = [_run_chunk(cfg, scheme, sim, *j) for j in jobs]
    return Batch(*(np.concatenate([getattr(p, f) for p in parts]) for f in ("T_u", "T_c", "T_d")))


# --- estimators -------------------------------------------------------------------

@dataclass(frozen=True)
class Estimate:
    mean: float
    std_err: float

    @property
    def half_width(self) -> float:
        return Z95 * self.std_err


def _estimate(x: np.ndarray) -> Estimate:
    se = float(np.std(x, ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0
    return Estimate(float(np.mean(x)), se)


def nct_scale(cfg: NetworkConfig) -> float:
    """N m / eta: compute time of the whole job on one unloaded server."""
    return cfg.N * cfg.m / cfg.eta


def estimate_nct(cfg: NetworkConfig, scheme: SchemeDesign, sim: SimParams, batch: Batch | None = None) -> Estimate:
    if sim.trials < 100:
        raise ValidationError("estimate_nct needs at least 100 trials")
    if batch is None:
        batch = simulate(cfg, scheme, sim)
    return _estimate(batch.T_c / nct_scale(cfg))


def order_statistic_mean(K: int, q: int, eta: float = 1.0) -> float:
    """E of the q-th smallest of K i.i.d. exponential(eta) draws."""
    return sum(1.0 / i for i in range(K - q + 1, K + 1)) / eta


def p1_frequencies(cfg: NetworkConfig, scheme: SchemeDesign, sim: SimParams,
                   chunk: int = 10_000) -> dict[int, Estimate]:
    """Fraction of inputs held by exactly p1 survivors, per trial, averaged."""
    subsets = np.array(list(itertools.combinations(range(cfg.K), scheme.r)))
    per_trial = []
    for start in range(0, sim.trials, chunk):
        count = min(chunk, sim.trials - start)
        surv = fastest(omegas_from(cfg, trial_uniforms(cfg, sim, start, count)), scheme.q)
        alive = np.zeros((count, cfg.K), dtype=bool)
        np.put_along_axis(alive, surv, True, axis=1)
        hits = alive[:, subsets].sum(axis=2)
        per_trial.append(np.stack([(hits == p1).sum(axis=1) for p1 in range(cfg.K + 1)], axis=1))
    counts = np.concatenate(per_trial)
    out = {}
    for p1 in range(cfg.K + 1):
        col = counts[:, p1]
        if not col.any() and p1 not in scheme.coeffs.B_p1:
            continue
        # integer total keeps the mean exact up to one rounding
        mean = int(col.sum()) / (sim.trials * len(subsets))
        out[p1] = Estimate(mean, _estimate(col / len(subsets)).std_err)
    return out


# --- campaigns ----------------------------------------------------------------------

CAMPAIGN_COLUMNS = ("r", "q", "mean_Tu_s", "mean_Tc_s", "mean_Td_s", "mean_total_s",
                    "nct_est", "nct_ci", "ndlt_est")


def campaign_row(cfg: NetworkConfig, scheme: SchemeDesign, sim: SimParams, batch: Batch) -> dict:
    nct = _estimate(batch.T_c / nct_scale(cfg))
    ndlt = float(np.mean(batch.T_d)) * sim.W_d * math.log2(1 + sim.P_d) / (cfg.N * cfg.m * cfg.B)
    return {
        "r": scheme.r,
        "q": scheme.q,
        "mean_Tu_s": float(np.mean(batch.T_u)),
        "mean_Tc_s": float(np.mean(batch.T_c)),
        "mean_Td_s": float(np.mean(batch.T_d)),
        "mean_total_s": float(np.mean(batch.T_total)),
        "nct_est": nct.mean,
        "nct_ci": nct.half_width,
        "ndlt_est": ndlt,
    }


def run_campaign(cfg: NetworkConfig, pairs, sim: SimParams, threads: int | None = None) -> list[dict]:
    """One summary row per (r, q), in the order given; deterministic given the seed."""
    rows = []
    for r, q in pairs:
        scheme = design_scheme(cfg, r, q)
        rows.append(campaign_row(cfg, scheme, sim, simulate(cfg, scheme, sim, threads)))
    return rows


def closed_form_check(cfg: NetworkConfig, r: int, q: int) -> dict[str, Fraction]:
    """Analytical NCT and NDLT the campaign estimates should converge to."""
    scheme = design_scheme(cfg, r, q)
    return {"nct": nct_achievable(cfg, r, q), "ndlt": ndlt_achievable(cfg, r, q, scheme)}


def check_recovery(cfg: NetworkConfig, scheme: SchemeDesign, sim: SimParams, w: int = 16) -> int:
    """Decode every input for each sampled survivor set with real coded storage.

    Returns the number of distinct survivor sets exercised; raises
    ``Unrecoverable`` if any decode fails.
    """
    from . import coding
    from .scheme import build_assignment

    gf = coding.gf_field(w)
    rng = np.random.default_rng(sim.seed)
    A = rng.integers(0, gf.order, size=(cfg.m, cfg.n))
    storage = coding.encode_matrix(A, scheme.rho1, scheme.rho2, cfg.K, w)
    assignment = build_assignment(cfg, scheme.r)
    inputs = {(i, j): rng.integers(0, gf.order, size=cfg.n) for i in range(cfg.M) for j in range(cfg.N)}
    expected = {idx: gf.matmul(A, u[:, None])[:, 0] for idx, u in inputs.items()}
    outputs = coding.compute_outputs(storage, assignment, inputs, range(cfg.K))
    u = trial_uniforms(cfg, sim, 0, sim.trials)
    patterns = {tuple(row) for row in fastest(omegas_from(cfg, u), scheme.q).tolist()}
    for pattern in sorted(patterns):
        for idx in inputs:
            v = coding.decode_outputs(storage, pattern, outputs, idx)
            if not np.array_equal(v, expected[idx]):
                raise AssertionError(f"decode mismatch for input {idx}")
    return len(patterns)
