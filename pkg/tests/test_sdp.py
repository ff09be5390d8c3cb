"""Solver-level tests: oracle values, invariances, certificates, formats."""

import numpy as np
import pytest

from qrandcert.sdp import (
    BlockSDP,
    ComplexBlockSDP,
    SdpInfeasibleError,
    SolverOptions,
    extract_hermitian,
    embed_hermitian,
    read_sdpa,
    solve,
    solve_complex,
    write_sdpa,
)


def random_symmetric(rng, n):
    a = rng.normal(size=(n, n))
    return a + a.T


def random_trace_problem(rng, max_blocks=3, max_dim=6):
    """Random objective over the spectraplex {X >= 0, tr X = 1}."""
    dims = rng.integers(1, max_dim + 1, size=rng.integers(1, max_blocks + 1)).tolist()
    C = [random_symmetric(rng, n) for n in dims]
    cons = [({i: np.eye(n) for i, n in enumerate(dims)}, 1.0)]
    return BlockSDP(dims, C, cons), max(float(np.linalg.eigvalsh(c)[-1]) for c in C)


def test_identity_objective():
    p = BlockSDP([3], [np.eye(3)], [({0: np.eye(3)}, 1.0)])
    s = solve(p)
    assert s.status == "optimal"
    assert abs(s.primal_value - 1.0) < 1e-7


def test_diagonal_objective_reaches_top_eigenvalue():
    p = BlockSDP([3], [np.diag([1.0, 2.0, 3.0])], [({0: np.eye(3)}, 1.0)])
    s = solve(p)
    assert abs(s.primal_value - 3.0) < 1e-7
    assert abs(s.dual_value - 3.0) < 1e-6


def test_eigenvalue_oracle_batch():
    rng = np.random.default_rng(7)
    for _ in range(50):
        p, top = random_trace_problem(rng)
        s = solve(p)
        assert s.status == "optimal"
        assert s.duality_gap <= 1e-7
        assert abs(s.primal_value - top) <= 1e-6


def test_returned_blocks_are_psd_and_feasible():
    rng = np.random.default_rng(3)
    for _ in range(10):
        p, _ = random_trace_problem(rng)
        s = solve(p)
        for x in s.primal_blocks:
            assert np.linalg.eigvalsh(x)[0] >= -1e-9
        total = sum(np.trace(x) for x in s.primal_blocks)
        assert abs(total - 1.0) <= 1e-8


def test_objective_scaling_is_linear():
    rng = np.random.default_rng(11)
    tight = SolverOptions(gap_tol=1e-11, feas_tol=1e-10)
    for _ in range(10):
        p, _ = random_trace_problem(rng)
        lam = float(rng.uniform(0.3, 7.0))
        p2 = BlockSDP(p.blocks, [lam * c for c in p.objective], p.constraints)
        v1 = solve(p, tight).primal_value
        v2 = solve(p2, tight).primal_value
        assert abs(v2 - lam * v1) <= 1e-9 * max(1.0, abs(lam * v1))


def test_orthogonal_conjugation_invariance():
    rng = np.random.default_rng(13)
    for _ in range(5):
        n = 5
        C = random_symmetric(rng, n)
        A1 = random_symmetric(rng, n)
        x0 = rng.normal(size=(n, n))
        x0 = x0 @ x0.T + 0.2 * np.eye(n)
        cons = [({0: np.eye(n)}, float(np.trace(x0))), ({0: A1}, float(np.vdot(A1, x0)))]
        v1 = solve(BlockSDP([n], [C], cons)).primal_value
        q, _ = np.linalg.qr(rng.normal(size=(n, n)))
        rot = lambda m: q @ m @ q.T
        cons_r = [({0: rot(a[0])}, r) for a, r in cons]
        v2 = solve(BlockSDP([n], [rot(C)], cons_r)).primal_value
        assert abs(v1 - v2) <= 1e-7 * max(1.0, abs(v1))


def test_weak_duality_on_feasible_batch():
    rng = np.random.default_rng(17)
    for _ in range(40):
        dims = rng.integers(1, 6, size=rng.integers(1, 4)).tolist()
        C = [random_symmetric(rng, n) for n in dims]
        X0 = []
        for n in dims:
            g = rng.normal(size=(n, n))
            X0.append(g @ g.T + 0.1 * np.eye(n))
        cons = [({i: np.eye(n) for i, n in enumerate(dims)},
                 sum(float(np.trace(x)) for x in X0))]
        for _ in range(int(rng.integers(0, 4))):
            A = {i: random_symmetric(rng, n) for i, n in enumerate(dims)}
            cons.append((A, sum(float(np.vdot(A[i], X0[i])) for i in A)))
        s = solve(BlockSDP(dims, C, cons))
        assert s.status == "optimal"
        scale = max(1.0, abs(s.primal_value), abs(s.dual_value))
        assert s.dual_value >= s.primal_value - 1e-12 * scale


def test_inconsistent_rows_detected_in_presolve():
    p = BlockSDP([3], [np.eye(3)], [({0: np.eye(3)}, 1.0), ({0: np.eye(3)}, 2.0)])
    with pytest.raises(SdpInfeasibleError):
        solve(p)


def test_farkas_certificate_for_cone_infeasibility():
    # X11 = -1 cannot hold for X >= 0
    p = BlockSDP(
        [2], [np.eye(2)],
        [({0: np.diag([1.0, 0.0])}, -1.0), ({0: np.eye(2)}, 1.0)],
    )
    with pytest.raises(SdpInfeasibleError) as exc:
        solve(p)
    cert = exc.value.certificate
    assert cert is not None
    slack = cert[0] * np.diag([1.0, 0.0]) + cert[1] * np.eye(2)
    assert np.linalg.eigvalsh(slack)[0] >= -1e-8
    assert cert[0] * (-1.0) + cert[1] * 1.0 < 0


def test_redundant_rows_are_dropped():
    p = BlockSDP(
        [3], [np.diag([1.0, 2.0, 3.0])],
        [({0: np.eye(3)}, 1.0), ({0: 2.0 * np.eye(3)}, 2.0)],
    )
    s = solve(p)
    assert s.status == "optimal"
    assert abs(s.primal_value - 3.0) <= 1e-6


def test_min_sense():
    p = BlockSDP([2], [np.diag([1.0, 3.0])], [({0: np.eye(2)}, 1.0)], sense="min")
    s = solve(p)
    assert abs(s.primal_value - 1.0) <= 1e-6
    scale = max(1.0, abs(s.primal_value))
    assert s.dual_value <= s.primal_value + 1e-12 * scale


def test_zero_row_with_nonzero_rhs_is_infeasible():
    p = BlockSDP([2], [np.eye(2)], [({0: np.eye(2)}, 1.0), ({0: np.zeros((2, 2))}, 0.5)])
    with pytest.raises(SdpInfeasibleError):
        solve(p)


def test_validation_rejects_bad_input():
    with pytest.raises(ValueError):
        BlockSDP([], [], [({0: np.eye(2)}, 1.0)])
    with pytest.raises(ValueError):
        BlockSDP([2], [np.array([[0.0, 1.0], [0.0, 0.0]])], [({0: np.eye(2)}, 1.0)])
    with pytest.raises(ValueError):
        BlockSDP([2], [np.eye(2)], [])
    with pytest.raises(ValueError):
        BlockSDP([2], [np.eye(2)], [({0: np.eye(3)}, 1.0)])
    with pytest.raises(ValueError):
        BlockSDP([2], [np.eye(2)], [({0: np.eye(2)}, 1.0)], sense="best")
    with pytest.raises(ValueError):
        BlockSDP([2], [np.eye(2)], [({0: np.eye(2)}, np.nan)])


def test_hermitian_embedding_round_trip():
    rng = np.random.default_rng(19)
    h = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = h + h.conj().T
    e = embed_hermitian(h)
    assert np.allclose(e, e.T)
    assert np.max(np.abs(extract_hermitian(e) - h)) < 1e-14
    # eigenvalues doubled in multiplicity
    we = np.linalg.eigvalsh(e)
    wh = np.linalg.eigvalsh(h)
    assert np.allclose(np.sort(we), np.sort(np.concatenate([wh, wh])), atol=1e-12)
    with pytest.raises(ValueError):
        embed_hermitian(rng.normal(size=(3, 3)) + 1j * np.eye(3))


def test_complex_solve_matches_eigenvalue_oracle():
    rng = np.random.default_rng(23)
    for _ in range(10):
        n = int(rng.integers(2, 5))
        h = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        h = h + h.conj().T
        p = ComplexBlockSDP([n], [h], [({0: np.eye(n, dtype=complex)}, 1.0)])
        s = solve_complex(p)
        assert s.status == "optimal"
        assert abs(s.primal_value - np.linalg.eigvalsh(h)[-1]) <= 1e-6
        x = s.primal_blocks[0]
        assert np.max(np.abs(x - x.conj().T)) < 1e-12
        assert abs(np.trace(x).real - 1.0) <= 1e-7


def test_sdpa_round_trip(tmp_path):
    rng = np.random.default_rng(29)
    dims = [3, 2]
    C = [random_symmetric(rng, n) for n in dims]
    p = BlockSDP(
        dims, C,
        [({0: np.eye(3), 1: np.eye(2)}, 1.0), ({0: np.diag([1.0, -1.0, 0.0])}, 0.2)],
    )
    f1 = tmp_path / "prob.dat-s"
    f2 = tmp_path / "prob2.dat-s"
    write_sdpa(p, f1)
    p2 = read_sdpa(f1)
    write_sdpa(p2, f2)
    assert f1.read_text() == f2.read_text()
    assert abs(solve(p).primal_value - solve(p2).primal_value) <= 1e-8


def test_sdpa_reads_diagonal_blocks(tmp_path):
    text = """* diagonal second block
2
2
2 -2
1.0 0.5
0 1 1 1 1.0
0 1 2 2 2.0
0 2 1 1 0.5
1 1 1 1 1.0
1 1 2 2 1.0
1 2 1 1 1.0
1 2 2 2 1.0
2 2 1 1 1.0
"""
    f = tmp_path / "diag.dat-s"
    f.write_text(text)
    p = read_sdpa(f)
    assert p.blocks == [2, 2]
    s = solve(p)
    assert s.status == "optimal"
