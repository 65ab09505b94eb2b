import numpy as np
import pytest

from dstab import lmi

rng = np.random.default_rng(7)


def random_sym(n):
    M = rng.standard_normal((n, n))
    return M + M.T


def test_kron_against_dense_numeric():
    space = lmi.VariableSpace()
    P = space.symmetric("P", 3)
    Pe = lmi.AffineMatrixExpr.from_var(P)
    M = random_sym(2)
    e = lmi.kron(M, Pe)
    x = rng.standard_normal(space.nvars)
    Pv = space.value(P, x)
    assert np.allclose(e.evaluate(x), np.kron(M, Pv), rtol=1e-14, atol=1e-14)


def test_kron_zero_and_identity():
    space = lmi.VariableSpace()
    P = space.symmetric("P", 2)
    Pe = lmi.AffineMatrixExpr.from_var(P)
    z = lmi.kron(np.zeros((1, 1)), Pe)
    x = rng.standard_normal(space.nvars)
    assert np.allclose(z.evaluate(x), 0.0)
    bd = lmi.kron(np.eye(2), Pe)
    Pv = space.value(P, x)
    expect = np.block([[Pv, np.zeros((2, 2))], [np.zeros((2, 2)), Pv]])
    assert np.allclose(bd.evaluate(x), expect)


def test_sym_kron_pair_is_lyapunov_operator():
    space = lmi.VariableSpace()
    P = space.symmetric("P", 3)
    Pe = lmi.AffineMatrixExpr.from_var(P)
    A = rng.standard_normal((3, 3))
    e = lmi.sym_kron_pair(np.ones((1, 1)), A @ Pe)
    x = rng.standard_normal(space.nvars)
    Pv = space.value(P, x)
    assert np.allclose(e.evaluate(x), A @ Pv + Pv @ A.T, atol=1e-13)


def test_sym_kron_pair_zero_expr():
    space = lmi.VariableSpace()
    tau = space.scalar("tau")
    e = lmi.sym_kron_pair(rng.standard_normal((2, 2)), lmi.const_expr(np.zeros((3, 3))))
    assert np.allclose(e.evaluate(np.zeros(space.nvars)), 0.0)


def test_matmul_both_sides_and_vstack():
    space = lmi.VariableSpace()
    P = space.symmetric("P", 2)
    Y = space.rectangular("Y", 1, 2)
    Pe = lmi.AffineMatrixExpr.from_var(P)
    Ye = lmi.AffineMatrixExpr.from_var(Y)
    PY = lmi.vstack([Pe, Ye])  # [P; Y], 3x2
    Zc = rng.standard_normal((3, 2))
    e = Zc.T @ PY  # 2x2? -> (2,3)@(3,2)
    x = rng.standard_normal(space.nvars)
    Pv, Yv = space.value(P, x), space.value(Y, x)
    stack = np.vstack([Pv, Yv])
    assert np.allclose(e.evaluate(x), Zc.T @ stack, atol=1e-13)
    e2 = PY @ rng.standard_normal((2, 4))
    assert e2.shape == (3, 4)


def test_block2x2_matches_dense_assembly():
    space = lmi.VariableSpace()
    P = space.symmetric("P", 2)
    Pe = lmi.AffineMatrixExpr.from_var(P)
    B12 = rng.standard_normal((2, 3))
    C22 = random_sym(3)
    e = lmi.block2x2(Pe, B12, C22)
    x = rng.standard_normal(space.nvars)
    Pv = space.value(P, x)
    expect = np.block([[Pv, B12], [B12.T, C22]])
    assert np.allclose(e.evaluate(x), expect)
    assert np.allclose(e.evaluate(x), e.evaluate(x).T)


def test_block_rejects_mismatched_dims():
    space = lmi.VariableSpace()
    P = space.symmetric("P", 2)
    Pe = lmi.AffineMatrixExpr.from_var(P)
    with pytest.raises(ValueError):
        lmi.block2x2(Pe, rng.standard_normal((3, 3)), random_sym(3))


def test_evaluation_homomorphism_random_ops():
    # evaluate(op(e1,e2)) == op(evaluate(e1), evaluate(e2)) on random expressions
    space = lmi.VariableSpace()
    P = space.symmetric("P", 3)
    Y = space.rectangular("Y", 2, 3)
    Pe = lmi.AffineMatrixExpr.from_var(P)
    Ye = lmi.AffineMatrixExpr.from_var(Y)
    for _ in range(20):
        x = rng.standard_normal(space.nvars)
        Pv, Yv = space.value(P, x), space.value(Y, x)
        M = rng.standard_normal((2, 2))
        e = lmi.kron(M, Pe)
        assert np.allclose(e.evaluate(x), np.kron(M, Pv), rtol=1e-13, atol=1e-13)
        s = lmi.vstack([Pe, Ye])
        assert np.allclose(s.evaluate(x), np.vstack([Pv, Yv]), atol=1e-13)
        a = Pe + Pe * 2.0 - np.eye(3)
        assert np.allclose(a.evaluate(x), 3 * Pv - np.eye(3), atol=1e-13)


def test_scalar_variable_times_constant():
    space = lmi.VariableSpace()
    tau = space.scalar("tau", nonneg=True)
    M = random_sym(3)
    e = lmi.AffineMatrixExpr.scaled_const(tau, M)
    x = np.array([1.7])
    assert np.allclose(e.evaluate(x), 1.7 * M)
    assert space.nonneg_mask[0]


def test_scalarize_single_scalar_constraint_roundtrip():
    # x - 1 < 0 with margin: block form [[x - 1]]
    space = lmi.VariableSpace()
    xv = space.scalar("x")
    e = lmi.AffineMatrixExpr.scaled_const(xv, np.ones((1, 1))) - np.ones((1, 1))
    prob = lmi.scalarize([e], space, margin=1e-6)
    assert prob.blocks[0].dim == 1
    assert prob.blocks[0].C[0, 0] == -1.0
    r = prob.residuals(np.array([0.5]))
    assert np.isclose(r[0], -0.5)


def test_scalarize_requires_constraints_and_positive_margin():
    space = lmi.VariableSpace()
    space.scalar("x")
    with pytest.raises(ValueError):
        lmi.scalarize([], space)
    e = lmi.const_expr(-np.eye(2))
    with pytest.raises(ValueError):
        lmi.scalarize([e], space, margin=0.0)


def test_sdpa_export_import_roundtrip(tmp_path):
    space = lmi.VariableSpace()
    P = space.symmetric("P", 2)
    Pe = lmi.AffineMatrixExpr.from_var(P)
    A = np.array([[-1.0, 0.3], [0.0, -2.0]])
    cons = [lmi.sym_kron_pair(np.ones((1, 1)), A @ Pe), -Pe]
    prob = lmi.scalarize(cons, space, margin=1e-7)
    path = tmp_path / "prob.sdpa"
    lmi.export_sdpa(prob, str(path))
    back = lmi.import_sdpa(str(path))
    assert back.nvars == prob.nvars
    assert len(back.blocks) == len(prob.blocks)
    x = rng.standard_normal(space.nvars)
    for b0, b1 in zip(prob.blocks, back.blocks):
        M0 = b0.C + prob.margin * np.eye(b0.dim) + np.tensordot(x[b0.idx], b0.A, axes=1)
        M1 = b1.C + np.tensordot(x[b1.idx], b1.A, axes=1)
        assert np.allclose(M0, M1, atol=1e-12)
