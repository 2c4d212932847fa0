import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coded_offload import coding as C
from coded_offload.config import NetworkConfig
from coded_offload.errors import FieldTooSmall, SizingError, Unrecoverable, ValidationError
from coded_offload.gf import field
from coded_offload.scheme import binom, build_assignment, design_scheme, feasible_pairs, minimal_sizes, p1_range


def rand_matrix(rows, cols, w=16, seed=0):
    return np.random.default_rng(seed).integers(0, 1 << w, size=(rows, cols))


def test_five_en_layout():
    s = C.encode_matrix(rand_matrix(40, 3), Fraction(3, 2), 2, 5)
    assert s.total_rows == 60
    assert len(s.blocks) == 10 and all(len(b.rows) == 6 for b in s.blocks)
    for k in range(5):
        assert len(s.blocks_of(k)) == 4
        assert len(s.rows_of(k)) == 24
    assert np.all(s.holders().sum(axis=1) == 2)


def test_identity_code():
    A = rand_matrix(5, 4)
    s = C.encode_matrix(A, 1, 1, 1)
    assert np.array_equal(s.coded, A)
    assert np.array_equal(s.generator, np.eye(5, dtype=np.int64))


@pytest.mark.parametrize("w", [8, 16])
def test_generator_every_m_subset_invertible(w):
    gf = field(w)
    G = C.systematic_generator(gf, 12, 6)
    assert np.array_equal(G[:6], np.eye(6, dtype=np.int64))
    for rows in itertools.combinations(range(12), 6):
        assert gf.rank(G[list(rows)]) == 6


def test_field_too_small():
    with pytest.raises(FieldTooSmall):
        C.encode_matrix(rand_matrix(200, 2, w=8), 2, 1, 2, w=8)


def test_sizing_errors():
    with pytest.raises(SizingError) as exc:
        C.encode_matrix(rand_matrix(7, 2), Fraction(3, 2), 2, 5)
    assert exc.value.hint == {"m": 20}
    with pytest.raises(ValidationError):
        C.encode_matrix(rand_matrix(4, 2), Fraction(1, 2), 1, 2)


def naive_outputs(storage, assignment, inputs, survivors):
    gf = storage.gf
    subset_of = assignment.subset_of()
    out = {}
    for k in survivors:
        rows = storage.rows_of(k)
        out[k] = {}
        for idx, u in inputs.items():
            if k not in subset_of[idx]:
                continue
            vals = []
            for row in rows:
                acc = 0
                for a, x in zip(storage.coded[row].tolist(), u.tolist()):
                    acc ^= int(gf.mul(a, x))
                vals.append(acc)
            out[k][idx] = np.array(vals)
    return out


def test_outputs_match_naive_loop():
    cfg = NetworkConfig(M=2, K=4, mu=Fraction(1, 2), N=6, m=6, n=3)
    A = rand_matrix(6, 3, seed=3)
    s = C.encode_matrix(A, 1, 2, 4)
    a = build_assignment(cfg, 2)
    rng = np.random.default_rng(4)
    inputs = {(i, j): rng.integers(0, 1 << 16, size=3) for i in range(2) for j in range(6)}
    fast = C.compute_outputs(s, a, inputs, [0, 2, 3])
    slow = naive_outputs(s, a, inputs, [0, 2, 3])
    assert fast.keys() == slow.keys()
    for k in fast:
        assert fast[k].keys() == slow[k].keys()
        for idx in fast[k]:
            assert np.array_equal(fast[k][idx], slow[k][idx])


def test_five_en_availability_pattern(five_en):
    a = build_assignment(five_en, 4)
    survivors = {0, 1, 2}
    for i in range(five_en.M):
        held = [len(survivors & set(a.subset_of()[(i, j)])) for j in range(five_en.N)]
        assert sorted(held) == [2, 2, 2, 3, 3]


def test_single_en_products_are_plain():
    gf = field(16)
    A = rand_matrix(4, 3)
    cfg = NetworkConfig(M=1, K=1, mu=1, N=1, m=4, n=3)
    s = C.encode_matrix(A, 1, 1, 1)
    u = np.array([5, 6, 7])
    out = C.compute_outputs(s, build_assignment(cfg, 1), {(0, 0): u}, [0])
    assert np.array_equal(out[0][(0, 0)], gf.matmul(A, u[:, None])[:, 0])


def test_all_survivors_trivially_recoverable():
    cfg = NetworkConfig(M=2, K=3, mu=Fraction(1, 3), N=3, m=3, n=2)
    rep = C.verify_coding(cfg, 3, 3)
    assert rep.ok and rep.decoded == 6 and rep.rho1 == 1


def test_infeasible_pair_fails_somewhere():
    cfg = NetworkConfig(M=2, K=4, mu=Fraction(1, 2), N=6, m=4, n=2)
    assert (2, 3) not in feasible_pairs(cfg)
    rep = C.verify_coding(cfg, 2, 3, stop_on_failure=False)
    assert rep.failures
    with pytest.raises(Unrecoverable):
        C.verify_coding(cfg, 2, 3)


def test_decode_reports_shortfall(five_en):
    s = C.encode_matrix(rand_matrix(40, 2), Fraction(3, 2), 2, 5)
    with pytest.raises(Unrecoverable):
        C.decode_outputs(s, [0], {0: {(0, 0): np.zeros(24, dtype=np.int64)}}, (0, 0))


def test_decode_caches_inverse(five_en):
    cfg = five_en.replace(n=2)
    rep = C.verify_coding(cfg, 4, 3, max_patterns=2)
    assert rep.ok and rep.patterns == 2


small = st.tuples(st.integers(2, 5), st.integers(1, 5)).filter(lambda t: t[1] <= t[0])


@settings(max_examples=30)
@given(small, st.data())
def test_redundancy_counts_match_tables(kc, data):
    K, c = kc
    cfg = NetworkConfig(M=1, K=K, mu=Fraction(c, K))
    r, q = data.draw(st.sampled_from(sorted(feasible_pairs(cfg))))
    s = design_scheme(cfg, r, q)
    m = minimal_sizes(cfg, r, q)["m"]
    storage = C.encode_matrix(np.zeros((m, 1), dtype=np.int64), s.rho1, s.rho2, K)
    survivors = data.draw(st.sampled_from(list(itertools.combinations(range(K), q))))
    subset = data.draw(st.sampled_from(list(itertools.combinations(range(K), r))))
    p1, counts = C.redundancy_counts(storage, survivors, subset)
    assert p1 in p1_range(K, r, q)
    expect = {p2: s.coeffs.B_p2[(p1, p2)] * m for (a, p2) in s.coeffs.B_p2 if a == p1}
    assert {p2: Fraction(v) for p2, v in counts.items()} == {p2: v for p2, v in expect.items() if v}


def test_fixture_roundtrip(tmp_path):
    for w in (8, 16):
        A = rand_matrix(5, 7, w=w)
        path = tmp_path / f"a{w}.cmm"
        C.write_fixture(path, A, w)
        raw = path.read_bytes()
        assert raw[:4] == b"CMM1" and len(raw) == 16 + 35 * (w // 8)
        assert int.from_bytes(raw[4:8], "little") == w
        w2, B = C.read_fixture(path)
        assert w2 == w and np.array_equal(A, B)


def test_fixture_rejects_garbage(tmp_path):
    p = tmp_path / "bad.cmm"
    p.write_bytes(b"NOPE" + bytes(12))
    with pytest.raises(ValidationError):
        C.read_fixture(p)
    p.write_bytes(b"CMM1" + (16).to_bytes(4, "little") + (2).to_bytes(4, "little") * 2 + bytes(3))
    with pytest.raises(ValidationError):
        C.read_fixture(p)
