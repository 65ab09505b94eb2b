"""Strict-feasibility decisions for block-diagonal LMI problems.

The reference backend is a primal-dual path-following interior-point method
(Nesterov-Todd scaling, Mehrotra predictor-corrector) on the phase-I program

    maximize t  subject to  C_j + margin*I + sum_i x_i A_ji + t I ⪯ 0,
                            0 <= x_i (flagged scalars),  |x_i| <= R,

written as the conic pair  min c'z : G z + s = h, s in K  with K a product of
semidefinite blocks and a nonnegative orthant.  Folding the strictness margin
into the constants makes infeasibility of the *strict* problem show up as a
negative phase-I optimum, which the dual iterate certifies (homogeneous LMIs
otherwise have sup t = 0 exactly).  Verdicts:

* ``FEASIBLE``  — an iterate satisfies every original constraint with
  eigenvalue margin at least ``margin`` (checked directly each iteration);
* ``INFEASIBLE`` — a (numerically) dual-feasible certificate bounds the
  phase-I value below zero;
* ``MARGINAL``  — the optimum is squeezed into [0, margin): razor-thin;
* ``NUMERICAL_FAILURE`` — iteration cap or breakdown before any of the above.

Problem sizes here are small (at most a few hundred scalar variables, blocks
of a few dozen rows), so dense normal equations per iteration are adequate.
An adapter seam (``backend="cvxopt"``) delegates the same program to the
CVXOPT conic solver for cross-checks; it is optional.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .lmi import SdpProblem

__all__ = ["SolveStatus", "SolveOutcome", "solve_feasibility"]

_BOX = 1e6  # box half-width bounding the phase-I program


class SolveStatus(enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    MARGINAL = "marginal"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class SolveOutcome:
    status: SolveStatus
    assignment: dict[str, np.ndarray] | None
    max_residual: float
    iterations: int
    t: float  # phase-I value at the reported iterate (scaled blocks)
    gap: float  # complementarity gap at termination
    margin: float

    @property
    def feasible(self) -> bool:
        return self.status is SolveStatus.FEASIBLE


def solve_feasibility(
    problem: SdpProblem,
    margin: float | None = None,
    max_iter: int = 200,
    tol: float = 1e-8,
    backend: str = "reference",
) -> SolveOutcome:
    """Decide strict feasibility of a scalarized problem.

    Parameters
    ----------
    problem : SdpProblem
        Output of :func:`dstab.lmi.scalarize`.
    margin : float, optional
        Required eigenvalue margin; defaults to the problem's own margin.
    max_iter : int
        Iteration cap.
    tol : float
        Relative convergence tolerance on residuals and complementarity gap.
    backend : str
        ``"reference"`` (built-in) or ``"cvxopt"`` (external cross-check).
    """
    if margin is None:
        margins = np.asarray(problem.margins, dtype=float)
    else:
        margins = np.full(len(problem.blocks), float(margin))
    if np.any(margins <= 0):
        raise ValueError("margins must be positive")
    if backend == "reference":
        return _solve_reference(problem, margins, max_iter, tol)
    if backend == "cvxopt":
        return _solve_cvxopt(problem, margins, max_iter, tol)
    raise ValueError(f"unknown backend {backend!r}")


# -- reference backend -------------------------------------------------------


def _jordan_inv(sig: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Solve (diag(sig) X + X diag(sig))/2 = Y for symmetric X."""
    return 2.0 * Y / np.add.outer(sig, sig)


class _PsdBlock:
    """One semidefinite cone block with its NT scaling state."""

    def __init__(self, Chat: np.ndarray, Ahat: np.ndarray, idx: np.ndarray, n_z: int):
        self.d = Chat.shape[0]
        self.h = -Chat
        self.A = Ahat  # (k, d, d)
        self.idx = idx
        self.cols = np.concatenate([idx, [n_z - 1]])  # variable columns incl. t

    def mat_of(self, z: np.ndarray) -> np.ndarray:
        M = z[-1] * np.eye(self.d)
        if len(self.idx):
            M = M + np.tensordot(z[self.idx], self.A, axes=1)
        return M

    def update_scaling(self, S: np.ndarray, Z: np.ndarray) -> None:
        L1 = np.linalg.cholesky(S)
        L2 = np.linalg.cholesky(Z)
        U, sig, Vt = np.linalg.svd(L2.T @ L1)
        self.L1, self.L2, self.sig = L1, L2, sig
        isq = 1.0 / np.sqrt(sig)
        self.Rmat = L1 @ Vt.T * isq  # R
        self.Rinv = (isq[:, None] * U.T) @ L2.T  # R^{-1}
        # scaled coefficient matrices (columns of (W'W)^{-1/2} G)
        k = len(self.idx)
        stack = np.concatenate([self.A, np.eye(self.d)[None, :, :]], axis=0)
        self.Atil = self._congr_all(self.Rinv, stack, k + 1)

    @staticmethod
    def _congr_all(Rinv: np.ndarray, stack: np.ndarray, k: int) -> np.ndarray:
        tmp = np.einsum("ab,kbc->kac", Rinv, stack)
        return np.einsum("kab,cb->kac", tmp, Rinv)

    def congr_rinv(self, V: np.ndarray) -> np.ndarray:
        return self.Rinv @ V @ self.Rinv.T

    def max_step(self, L: np.ndarray, dM: np.ndarray) -> float:
        W = scipy.linalg.solve_triangular(L, dM, lower=True)
        W = scipy.linalg.solve_triangular(L, W.T, lower=True)
        wmin = np.linalg.eigvalsh(0.5 * (W + W.T))[0]
        return np.inf if wmin >= 0 else -1.0 / wmin


def _solve_reference(problem: SdpProblem, margins, max_iter, tol) -> SolveOutcome:
    N = problem.nvars
    n_z = N + 1  # decision vector (x, t)
    nonneg = problem.nonneg

    scales = np.array([max(1.0, np.linalg.norm(b.C, "fro")) for b in problem.blocks])
    blocks = [
        _PsdBlock((b.C + mg * np.eye(b.dim)) / s, b.A / s, b.idx, n_z)
        for b, s, mg in zip(problem.blocks, scales, margins)
    ]

    # linear rows: x_i <= R for all, -x_i <= (0 if nonneg else R), and a cap
    # t <= t_cap that bounds the phase-I value for homogeneous feasible
    # problems (any t >= 0 at a feasible iterate already satisfies the margin)
    t_cap = max(1.0, 10.0 * float(margins.max()))
    Gl = np.zeros((2 * N + 1, n_z))
    hl = np.zeros(2 * N + 1)
    for i in range(N):
        Gl[2 * i, i] = 1.0
        hl[2 * i] = _BOX
        Gl[2 * i + 1, i] = -1.0
        hl[2 * i + 1] = 0.0 if nonneg[i] else _BOX
    Gl[2 * N, N] = 1.0
    hl[2 * N] = t_cap
    nu = sum(b.d for b in blocks) + 2 * N + 1

    z = np.zeros(n_z)
    z[:N][nonneg] = 1.0
    t0 = -max(np.linalg.eigvalsh(b.mat_of(z) - b.h)[-1] for b in blocks) - 1.0
    z[-1] = t0

    S = [b.h - b.mat_of(z) for b in blocks]
    Z = [np.linalg.inv(Sj) for Sj in S]
    Z = [0.5 * (Zj + Zj.T) for Zj in Z]
    sl = hl - Gl @ z
    wl = 1.0 / sl

    best_x = z[:N].copy()
    status = None
    iters = 0
    gap = np.nan
    cmax = max(1.0, abs(t0))

    def margin_ok(xv):
        return bool(np.all(problem.residuals(xv) <= -margins))

    for iters in range(1, max_iter + 1):
        # residuals of the KKT equalities
        rx = np.zeros(n_z)  # G'w + c
        rx[-1] = -1.0
        for b, Zj in zip(blocks, Z):
            k = len(b.idx)
            stack = np.concatenate([b.A, np.eye(b.d)[None, :, :]], axis=0)
            rx[b.cols] += np.tensordot(stack, Zj, axes=([1, 2], [0, 1]))
        rx += Gl.T @ wl
        # primal residuals are zero by construction (s tracks h - Gz exactly)

        gap = sum(np.tensordot(Sj, Zj) for Sj, Zj in zip(S, Z)) + sl @ wl
        mu = gap / nu

        hw = sum(np.tensordot(b.h, Zj) for b, Zj in zip(blocks, Z)) + hl @ wl
        dres = np.linalg.norm(rx) / cmax

        if margin_ok(z[:N]):
            status = SolveStatus.FEASIBLE
            best_x = z[:N].copy()
            break
        if dres <= 1e3 * tol and hw < -1e-10 * max(1.0, abs(t0)):
            # dual certificate: sup t <= h'w < 0
            status = SolveStatus.INFEASIBLE
            break
        if dres <= tol and gap <= tol * max(1.0, abs(z[-1])):
            status = SolveStatus.MARGINAL
            best_x = z[:N].copy()
            break

        for b, Sj, Zj in zip(blocks, S, Z):
            b.update_scaling(Sj, Zj)
        wscl = np.sqrt(sl / wl)
        lam_l = np.sqrt(sl * wl)

        H = np.zeros((n_z, n_z))
        for b in blocks:
            k1 = len(b.cols)
            Vf = b.Atil.reshape(k1, b.d * b.d)
            H[np.ix_(b.cols, b.cols)] += Vf @ Vf.T
        GlW = Gl / wscl[:, None]
        H += GlW.T @ GlW

        try:
            cf = scipy.linalg.cho_factor(H)
        except scipy.linalg.LinAlgError:
            H[np.arange(n_z), np.arange(n_z)] += 1e-12 * max(1.0, np.trace(H) / n_z)
            try:
                cf = scipy.linalg.cho_factor(H)
            except scipy.linalg.LinAlgError:
                status = SolveStatus.NUMERICAL_FAILURE
                break

        def solve_direction(sigma_mu, corr_mats, corr_l):
            # complementarity targets in scaled space
            Ds = []
            rhs = -rx.copy()
            for b, cm in zip(blocks, corr_mats):
                rc = -np.diag(b.sig**2) + sigma_mu * np.eye(b.d)
                if cm is not None:
                    rc = rc - cm
                D = _jordan_inv(b.sig, rc)
                Ds.append(D)
                k1 = len(b.cols)
                rhs[b.cols] -= np.tensordot(
                    b.Atil.reshape(k1, b.d * b.d), D.reshape(b.d * b.d), axes=1
                )
            dl = (sigma_mu - sl * wl) / lam_l
            if corr_l is not None:
                dl = dl - corr_l / lam_l
            rhs -= GlW.T @ dl
            dz = scipy.linalg.cho_solve(cf, rhs)
            # recover cone directions
            dS = [-b.mat_of(dz) for b in blocks]
            dZ = []
            for b, D, dSj in zip(blocks, Ds, dS):
                T_dS = b.congr_rinv(dSj)
                dW = b.Rinv.T @ (D - T_dS) @ b.Rinv
                dZ.append(0.5 * (dW + dW.T))
            dsl = -(Gl @ dz)
            dwl = (dl - dsl / wscl) / wscl
            return dz, dS, dZ, dsl, dwl

        def max_alpha(dS, dZ, dsl, dwl):
            a = np.inf
            for b, Sj, Zj, dSj, dZj in zip(blocks, S, Z, dS, dZ):
                a = min(a, b.max_step(b.L1, dSj))
                a = min(a, b.max_step(b.L2, dZj))
            neg = dsl < 0
            if np.any(neg):
                a = min(a, np.min(-sl[neg] / dsl[neg]))
            neg = dwl < 0
            if np.any(neg):
                a = min(a, np.min(-wl[neg] / dwl[neg]))
            return a

        # predictor
        dz_a, dS_a, dZ_a, dsl_a, dwl_a = solve_direction(0.0, [None] * len(blocks), None)
        a_aff = min(1.0, max_alpha(dS_a, dZ_a, dsl_a, dwl_a))
        gap_aff = (
            sum(np.tensordot(Sj + a_aff * dSj, Zj + a_aff * dZj)
                for Sj, Zj, dSj, dZj in zip(S, Z, dS_a, dZ_a))
            + (sl + a_aff * dsl_a) @ (wl + a_aff * dwl_a)
        )
        sigma = min(0.99, max(1e-10, (max(gap_aff, 0.0) / gap) ** 3))

        # corrector
        corr_mats = []
        for b, dSj, dZj in zip(blocks, dS_a, dZ_a):
            dls = b.congr_rinv(dSj)
            dlw = b.Rmat.T @ dZj @ b.Rmat
            corr_mats.append(0.5 * (dls @ dlw + dlw @ dls))
        corr_l = (dsl_a / wscl) * (dwl_a * wscl)
        dz, dS, dZ, dsl, dwl = solve_direction(sigma * mu, corr_mats, corr_l)

        alpha = 0.99 * max_alpha(dS, dZ, dsl, dwl)
        alpha = min(1.0, alpha)
        if not np.isfinite(alpha) or alpha <= 1e-14:
            status = SolveStatus.NUMERICAL_FAILURE
            break

        z = z + alpha * dz
        S = [Sj + alpha * dSj for Sj, dSj in zip(S, dS)]
        Z = [Zj + alpha * dZj for Zj, dZj in zip(Z, dZ)]
        sl = sl + alpha * dsl
        wl = wl + alpha * dwl
        best_x = z[:N].copy()

    if status is None:
        status = SolveStatus.NUMERICAL_FAILURE

    res = problem.residuals(best_x)
    assignment = None
    if status in (SolveStatus.FEASIBLE, SolveStatus.MARGINAL):
        assignment = problem.space.values(best_x) if problem.space is not None else None
        if assignment is not None:
            assignment["_x"] = best_x
    return SolveOutcome(
        status, assignment, float(res.max()), iters, float(z[-1]), float(gap), float(margins.min())
    )


# -- optional external backend ----------------------------------------------


def _solve_cvxopt(problem: SdpProblem, margins, max_iter, tol) -> SolveOutcome:
    from cvxopt import matrix, solvers

    N = problem.nvars
    scales = [max(1.0, np.linalg.norm(b.C, "fro")) for b in problem.blocks]
    c = matrix(np.r_[np.zeros(N), -1.0])

    Gs, hs = [], []
    for b, s, mg in zip(problem.blocks, scales, margins):
        d = b.dim
        G = np.zeros((d * d, N + 1))
        for p, i in enumerate(b.idx):
            G[:, i] = (b.A[p] / s).reshape(-1)
        G[:, N] = np.eye(d).reshape(-1)
        Gs.append(matrix(G))
        hs.append(matrix(-(b.C + mg * np.eye(d)) / s))

    rows = []
    rhs = []
    for i in range(N):
        e = np.zeros(N + 1)
        e[i] = 1.0
        rows.append(e)
        rhs.append(_BOX)
        rows.append(-e)
        rhs.append(0.0 if problem.nonneg[i] else _BOX)
    e = np.zeros(N + 1)
    e[N] = 1.0
    rows.append(e)
    rhs.append(max(1.0, 10.0 * float(margins.max())))
    Gl = matrix(np.array(rows))
    hl = matrix(np.array(rhs))

    solvers.options["show_progress"] = False
    solvers.options["maxiters"] = max_iter
    try:
        sol = solvers.sdp(c, Gl, hl, Gs, hs)
    except (ArithmeticError, ValueError):
        return SolveOutcome(SolveStatus.NUMERICAL_FAILURE, None, np.inf, 0, np.nan, np.inf, float(margins.min()))
    if sol["x"] is None:
        return SolveOutcome(SolveStatus.NUMERICAL_FAILURE, None, np.inf, 0, np.nan, np.inf, float(margins.min()))
    z = np.array(sol["x"]).ravel()
    x, t = z[:N], z[N]
    res = problem.residuals(x)
    if np.all(res <= -margins):
        status = SolveStatus.FEASIBLE
    elif sol["status"] == "optimal" and t < 0.0:
        status = SolveStatus.INFEASIBLE
    elif sol["status"] == "optimal":
        status = SolveStatus.MARGINAL
    else:
        return SolveOutcome(SolveStatus.NUMERICAL_FAILURE, None, float(res.max()), 0, float(t), np.inf, float(margins.min()))
    assignment = None
    if status in (SolveStatus.FEASIBLE, SolveStatus.MARGINAL):
        assignment = problem.space.values(x) if problem.space is not None else None
        if assignment is not None:
            assignment["_x"] = x
    return SolveOutcome(status, assignment, float(res.max()), sol["iterations"], float(t), np.nan, float(margins.min()))
