"""Executable cascaded MDS-repetition storage over GF(2^w).

``encode_matrix`` expands A with a systematic Vandermonde code, splits the
coded rows into one block per rho2-subset of ENs, and each EN keeps the
blocks whose subset contains it. ``decode_outputs`` is the recoverability
oracle: it either reproduces A u exactly or raises ``Unrecoverable``.
"""
from __future__ import annotations

import itertools
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .config import NetworkConfig
from .errors import FieldTooSmall, SizingError, Unrecoverable, ValidationError
from .gf import GF
from .gf import field as gf_field
from .scheme import TaskAssignment, binom, build_assignment, is_feasible, select_code_rates

MAGIC = b"CMM1"


@dataclass(frozen=True)
class Block:
    rows: range
    subset: tuple[int, ...]


@dataclass
class CodedStorage:
    gf: GF
    K: int
    m: int
    rho1: Fraction
    rho2: int
    generator: np.ndarray
    coded: np.ndarray
    blocks: list[Block]
    _inv_cache: dict = field(default_factory=dict, repr=False)

    @property
    def total_rows(self) -> int:
        return self.generator.shape[0]

    def blocks_of(self, k: int) -> list[Block]:
        return [b for b in self.blocks if k in b.subset]

    def rows_of(self, k: int) -> np.ndarray:
        """Generator row indices stored at EN k, ascending."""
        rows = [i for b in self.blocks_of(k) for i in b.rows]
        return np.array(sorted(rows), dtype=np.int64)

    def holders(self) -> np.ndarray:
        """For each coded row, a K-length boolean mask of the ENs storing it."""
        mask = np.zeros((self.total_rows, self.K), dtype=bool)
        for b in self.blocks:
            mask[b.rows.start:b.rows.stop, list(b.subset)] = True
        return mask

    def inverse_for(self, rows: tuple[int, ...]) -> np.ndarray | None:
        if rows not in self._inv_cache:
            self._inv_cache[rows] = self.gf.inverse(self.generator[list(rows)])
        return self._inv_cache[rows]


def systematic_generator(gf: GF, total: int, m: int) -> np.ndarray:
    """(total x m) generator: identity on top, any m rows invertible.

    Built as V V_top^{-1} where V is Vandermonde at the distinct nonzero
    points 1..total, so every m-row submatrix is a Vandermonde matrix times
    an invertible one.
    """
    if total > gf.order - 1:
        raise FieldTooSmall(
            f"rho1*m = {total} coded rows need more than {total} distinct nonzero points; "
            f"GF(2^{gf.w}) has only {gf.order - 1}"
        )
    V = np.array([[gf.pow(x, j) for j in range(m)] for x in range(1, total + 1)], dtype=np.int64)
    top_inv = gf.inverse(V[:m])
    G = gf.matmul(V, top_inv)
    G[:m] = np.eye(m, dtype=np.int64)
    return G


def encode_matrix(A, rho1, rho2: int, K: int, w: int = 16) -> CodedStorage:
    gf = gf_field(w)
    A = gf.array(A)
    if A.ndim != 2:
        raise ValidationError("A must be a 2-D matrix")
    m = A.shape[0]
    rho1 = Fraction(rho1)
    if rho1 < 1 or not 1 <= rho2 <= K:
        raise ValidationError(f"need rho1 >= 1 and 1 <= rho2 <= K, got ({rho1}, {rho2})")
    nblocks = binom(K, rho2)
    total = rho1 * m
    if total.denominator != 1 or total.numerator % nblocks:
        m_min = next(mm for mm in itertools.count(1) if (rho1 * mm).denominator == 1 and (rho1 * mm).numerator % nblocks == 0)
        raise SizingError(
            f"rho1*m = {total} must be an integer divisible by C(K, rho2) = {nblocks}; "
            f"m must be a multiple of {m_min}",
            hint={"m": m_min},
        )
    total = int(total)
    G = systematic_generator(gf, total, m)
    per = total // nblocks
    subsets = list(itertools.combinations(range(K), rho2))
    blocks = [Block(range(b * per, (b + 1) * per), s) for b, s in enumerate(subsets)]
    return CodedStorage(gf, K, m, rho1, rho2, G, gf.matmul(G, A), blocks)


def compute_outputs(storage: CodedStorage, assignment: TaskAssignment, inputs: dict,
                    survivors) -> dict[int, dict[tuple[int, int], np.ndarray]]:
    """Per surviving EN: coded products for each input assigned to it.

    ``inputs`` maps (user, index) to an n-vector. Each product vector is
    aligned with ``storage.rows_of(k)``.
    """
    gf = storage.gf
    subset_of = assignment.subset_of()
    out = {}
    for k in sorted(survivors):
        rows = storage.rows_of(k)
        local = storage.coded[rows]
        mine = [idx for idx in sorted(inputs) if k in subset_of[idx]]
        if not mine:
            out[k] = {}
            continue
        U = np.stack([gf.array(inputs[idx]) for idx in mine], axis=1)
        prod = gf.matmul(local, U)
        out[k] = {idx: prod[:, c] for c, idx in enumerate(mine)}
    return out


def available_rows(storage: CodedStorage, outputs: dict, index) -> dict[int, int]:
    """Distinct coded rows (generator index -> value) reported for one input."""
    got = {}
    for k in sorted(outputs):
        vals = outputs[k].get(index)
        if vals is None:
            continue
        for row, v in zip(storage.rows_of(k).tolist(), vals.tolist()):
            got.setdefault(row, v)
    return got


def decode_outputs(storage: CodedStorage, survivors, outputs: dict, index) -> np.ndarray:
    """Recover A u for one input from the survivors' coded products."""
    got = available_rows(storage, {k: outputs[k] for k in survivors if k in outputs}, index)
    m = storage.m
    if len(got) < m:
        raise Unrecoverable(f"input {index}: survivors hold {len(got)} distinct coded rows, need {m}")
    rows = tuple(sorted(got)[:m])
    inv = storage.inverse_for(rows)
    if inv is None:
        rows = _greedy_basis(storage, sorted(got))
        if rows is None:
            raise Unrecoverable(f"input {index}: available coded rows have rank < {m}")
        inv = storage.inverse_for(rows)
    y = np.array([got[i] for i in rows], dtype=np.int64)
    return storage.gf.matmul(inv, y[:, None])[:, 0]


def _greedy_basis(storage: CodedStorage, candidates) -> tuple[int, ...] | None:
    chosen: list[int] = []
    for i in candidates:
        if storage.gf.rank(storage.generator[chosen + [i]]) == len(chosen) + 1:
            chosen.append(i)
            if len(chosen) == storage.m:
                return tuple(chosen)
    return None


def redundancy_counts(storage: CodedStorage, survivors, subset) -> tuple[int, dict[int, int]]:
    """(p1, {p2: rows}) for an input assigned to ``subset`` of ENs.

    p1 is how many survivors hold the input; rows are counted by how many of
    those p1 ENs store them.
    """
    active = sorted(set(survivors) & set(subset))
    counts: dict[int, int] = {}
    if active:
        hits = storage.holders()[:, active].sum(axis=1)
        for p2, c in zip(*np.unique(hits[hits > 0], return_counts=True)):
            counts[int(p2)] = int(c)
    return len(active), counts


# --- fixtures ----------------------------------------------------------------

def write_fixture(path, matrix, w: int = 16) -> None:
    a = np.asarray(matrix)
    if a.ndim != 2:
        raise ValidationError("fixture matrix must be 2-D")
    dt = "<u1" if w == 8 else "<u2"
    data = MAGIC + struct.pack("<III", w, *a.shape) + a.astype(dt).tobytes(order="C")
    Path(path).write_bytes(data)


def read_fixture(path) -> tuple[int, np.ndarray]:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC or len(raw) < 16:
        raise ValidationError(f"{path}: not a CMM1 matrix fixture")
    w, rows, cols = struct.unpack("<III", raw[4:16])
    if w not in (8, 16):
        raise ValidationError(f"{path}: unsupported field width {w}")
    size = rows * cols * (w // 8)
    if len(raw) != 16 + size:
        raise ValidationError(f"{path}: expected {size} payload bytes, found {len(raw) - 16}")
    dt = "<u1" if w == 8 else "<u2"
    return w, np.frombuffer(raw[16:], dtype=dt).reshape(rows, cols).astype(np.int64)


# --- end-to-end check ---------------------------------------------------------

@dataclass
class CodingReport:
    r: int
    q: int
    rho1: Fraction
    rho2: int
    patterns: int = 0
    decoded: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def verify_coding(cfg: NetworkConfig, r: int, q: int, w: int = 16, seed: int = 0, A=None,
                  max_patterns: int | None = None, stop_on_failure: bool = True) -> CodingReport:
    """Encode, compute and decode every input under every q-survivor pattern.

    Feasible (r, q) use the selected cascaded rates; infeasible ones are
    probed with the pure MDS code (K*mu, 1). Raises ``Unrecoverable`` on
    the first failure when ``stop_on_failure``; otherwise failures are
    collected in the report.
    """
    rng = np.random.default_rng(seed)
    gf = gf_field(w)
    if A is None:
        A = rng.integers(0, gf.order, size=(cfg.m, cfg.n))
    A = gf.array(A)
    if A.shape[0] != cfg.m:
        raise ValidationError(f"A has {A.shape[0]} rows but m = {cfg.m}")
    if is_feasible(cfg, r, q):
        rho1, rho2 = select_code_rates(cfg, r, q)
    else:
        rho1, rho2 = Fraction(cfg.storage_units), 1
    storage = encode_matrix(A, rho1, rho2, cfg.K, w)
    assignment = build_assignment(cfg, r)
    inputs = {(i, j): rng.integers(0, gf.order, size=A.shape[1]) for i in range(cfg.M) for j in range(cfg.N)}
    expected = {idx: gf.matmul(A, u[:, None])[:, 0] for idx, u in inputs.items()}
    everything = compute_outputs(storage, assignment, inputs, range(cfg.K))
    report = CodingReport(r, q, rho1, rho2)
    for pattern in itertools.combinations(range(cfg.K), q):
        if max_patterns is not None and report.patterns >= max_patterns:
            break
        report.patterns += 1
        outputs = {k: everything[k] for k in pattern}
        for idx in sorted(inputs):
            try:
                v = decode_outputs(storage, pattern, outputs, idx)
            except Unrecoverable as exc:
                report.failures.append((pattern, idx))
                if stop_on_failure:
                    raise Unrecoverable(f"(r, q) = ({r}, {q}), survivors {list(pattern)}: {exc}") from None
                continue
            if not np.array_equal(v, expected[idx]):
                raise AssertionError(f"decoded output differs from A u for input {idx}")
            report.decoded += 1
    return report
