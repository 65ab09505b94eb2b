"""Controller synthesis programs for eigenvalue placement in LMI regions.

All programs share the change of variables ``Y = K P`` with a single
Lyapunov-like certificate ``P = P' > 0`` common to every target region, and
recover the gain as ``K = Y P^{-1}``.  Variants:

* ``model_based``     — known (A, B); necessary and sufficient placement
  conditions per region.
* ``synth_petersen``  — robust placement over the whole energy-bound
  consistency ellipsoid by eliminating the norm-bounded uncertainty block;
  sufficient only for region dimension s > 1 (the elimination replaces a
  block-diagonal uncertainty with a full one).
* ``synth_rank_one``  — for regions whose beta factors as eta*gamma', the
  same elimination is loss-free: feasibility is necessary AND sufficient for
  placement over the ellipsoid.
* ``synth_sproc_energy``  — multiplier (S-procedure) relaxation working
  directly on the quadratic form of the ellipsoid; one multiplier per region.
* ``synth_sproc_instant`` — multiplier relaxation for the per-sample
  (instantaneous) disturbance model; T multipliers per region.

Multipliers are independent across regions (the larger feasible set); blocks
are assembled per region with that region's own dimension s, no padding.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import lmi
from .consistency import CenterForm, PointwiseForms, QuadraticConsistencyForm
from .regions import (
    LmiRegion,
    RankOneFactor,
    RegionIntersection,
    membership_margin,
    rank_one_factor,
)
from .solve import SolveOutcome, SolveStatus, solve_feasibility

__all__ = [
    "SynthMethod",
    "SynthesisResult",
    "RankOneUnavailableError",
    "model_based",
    "synth_petersen",
    "synth_rank_one",
    "synth_sproc_energy",
    "synth_sproc_instant",
    "recover_gain",
    "result_to_dict",
]


class SynthMethod(enum.Enum):
    MODEL = "model"
    PETERSEN = "petersen"
    RANK_ONE = "rank1"
    SPROC_ENERGY = "sproc-energy"
    SPROC_INSTANT = "sproc-instant"


class RankOneUnavailableError(ValueError):
    """A target region has no rank-1 factorization of beta.

    Replace the offending region by an inner approximation made of
    halfplanes/disks (e.g. the two-disk approximation of the wedge) before
    calling the rank-1 program.
    """


@dataclass
class SynthesisResult:
    P: np.ndarray | None
    Y: np.ndarray | None
    K: np.ndarray | None
    taus: list | None
    method: SynthMethod
    outcome: SolveOutcome

    @property
    def feasible(self) -> bool:
        return self.outcome.status is SolveStatus.FEASIBLE


def recover_gain(P: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Gain ``K = Y P^{-1}`` via a linear solve, with residual check."""
    P = np.asarray(P, dtype=float)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    try:
        K = np.linalg.solve(P.T, Y.T).T
    except np.linalg.LinAlgError:
        raise ValueError("certificate P is numerically singular") from None
    resid = np.linalg.norm(K @ P - Y)
    if resid > 1e-10 * max(1.0, np.linalg.norm(Y)):
        raise ValueError(f"gain recovery residual {resid:.2e} too large; P ill-conditioned")
    return K


def _py_vars(n: int, m: int):
    space = lmi.VariableSpace()
    P = space.symmetric("P", n)
    Y = space.rectangular("Y", m, n)
    Pe = lmi.AffineMatrixExpr.from_var(P)
    Ye = lmi.AffineMatrixExpr.from_var(Y)
    PY = lmi.vstack([Pe, Ye])
    return space, Pe, Ye, PY


def _finish(space, outcome: SolveOutcome, method: SynthMethod, taus=None) -> SynthesisResult:
    if outcome.status not in (SolveStatus.FEASIBLE, SolveStatus.MARGINAL) or outcome.assignment is None:
        return SynthesisResult(None, None, None, None, method, outcome)
    P = outcome.assignment["P"]
    Y = np.atleast_2d(outcome.assignment["Y"])
    K = recover_gain(P, Y)
    tau_vals = None
    if taus is not None:
        tau_vals = [
            [float(outcome.assignment[name]) for name in group] if isinstance(group, list) else float(outcome.assignment[group])
            for group in taus
        ]
    return SynthesisResult(P, Y, K, tau_vals, method, outcome)


def model_based(A: np.ndarray, B: np.ndarray, target, margin: float | None = None) -> SynthesisResult:
    """Placement for a known system: find P > 0, Y with every region's
    characteristic matrix (in the Y = K P variables) negative definite."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    target = target.as_intersection()
    n, m = A.shape[0], B.shape[1]
    space, Pe, Ye, PY = _py_vars(n, m)
    L = A @ Pe + B @ Ye  # A P + B Y, square n x n
    cons = [-Pe]
    for r in target:
        cons.append(lmi.kron(r.alpha, Pe) + lmi.trsym(lmi.kron(r.beta, L)))
    out = solve_feasibility(lmi.scalarize(cons, space, margin=margin))
    res = _finish(space, out, SynthMethod.MODEL)
    if res.feasible:
        eigs = np.linalg.eigvals(A + B @ res.K)
        worst = min(membership_margin(r, z) for r in target for z in eigs)
        if worst <= 0:
            raise RuntimeError(
                "solver reported feasibility but closed-loop eigenvalues are "
                f"not strictly placed (margin {worst:.2e})"
            )
    return res


def synth_petersen(cf: CenterForm, target, margin: float | None = None) -> SynthesisResult:
    """Robust placement over the energy-bound ellipsoid (sufficient).

    Per region, a 2x2 block constraint couples the placement form at the
    ellipsoid center with the shape matrix; feasibility certifies placement
    for every consistent (A, B).  Infeasibility is inconclusive except for
    rank-1 regions (use the rank-1 program there).
    """
    target = target.as_intersection()
    n, m = cf.n, cf.m
    space, Pe, Ye, PY = _py_vars(n, m)
    ZcT = cf.Zc.T  # n x (n+m)
    cons = [-Pe]
    for r in target:
        s = r.s
        tl = (
            lmi.const_expr(np.kron(r.beta @ r.beta.T, cf.Qc))
            + lmi.kron(r.alpha, Pe)
            + lmi.trsym(lmi.kron(r.beta, ZcT @ PY))
        )
        bl = lmi.kron(np.eye(s), PY)
        br = lmi.const_expr(np.kron(np.eye(s), -cf.Ac))
        cons.append(lmi.block([[tl, bl.T], [bl, br]]))
    out = solve_feasibility(lmi.scalarize(cons, space, margin=margin))
    return _finish(space, out, SynthMethod.PETERSEN)


def synth_rank_one(
    cf: CenterForm,
    target,
    factors: list[RankOneFactor] | None = None,
    margin: float | None = None,
) -> SynthesisResult:
    """Loss-free robust placement for rank-1 regions (necessary and
    sufficient over the energy-bound ellipsoid)."""
    target = target.as_intersection()
    if factors is None:
        factors = []
        for r in target:
            f = rank_one_factor(r)
            if f is None:
                raise RankOneUnavailableError(
                    f"region {r.label or r.kind or '?'} has no rank-1 structure; "
                    "inner-approximate it with halfplanes/disks first"
                )
            factors.append(f)
    if len(factors) != len(target.regions):
        raise ValueError("one factor per region required")
    n, m = cf.n, cf.m
    space, Pe, Ye, PY = _py_vars(n, m)
    ZcT = cf.Zc.T
    cons = [-Pe]
    for r, f in zip(target, factors):
        s = r.s
        eta = f.eta.reshape(s, 1)
        gam_t = f.gamma.reshape(1, s)
        eta_I = np.kron(eta, np.eye(n))  # (s n) x n
        tl = (
            lmi.const_expr(eta_I @ cf.Qc @ eta_I.T)
            + lmi.kron(r.alpha, Pe)
            + lmi.trsym((eta_I @ ZcT) @ lmi.kron(gam_t, PY))
        )
        bl = lmi.kron(gam_t, PY)  # (n+m) x (s n)
        cons.append(lmi.block([[tl, bl.T], [bl, -cf.Ac]]))
    out = solve_feasibility(lmi.scalarize(cons, space, margin=margin))
    return _finish(space, out, SynthMethod.RANK_ONE)


def synth_sproc_energy(q: QuadraticConsistencyForm, target, margin: float | None = None) -> SynthesisResult:
    """Multiplier relaxation on the quadratic form of the energy-bound set
    (sufficient; no rank condition on the regressors required)."""
    target = target.as_intersection()
    n, m = q.n, q.m
    space, Pe, Ye, PY = _py_vars(n, m)
    cons = [-Pe]
    tau_names = []
    for k, r in enumerate(target):
        s = r.s
        tau = space.scalar(f"tau_{k}", nonneg=True)
        tau_names.append(f"tau_{k}")
        base = lmi.block(
            [
                [lmi.kron(r.alpha, Pe), lmi.kron(r.beta.T, PY.T)],
                [lmi.kron(r.beta, PY), np.zeros((s * (n + m), s * (n + m)))],
            ]
        )
        data_term = np.block(
            [
                [np.kron(np.eye(s), q.Cc), np.kron(np.eye(s), q.Bc.T)],
                [np.kron(np.eye(s), q.Bc), np.kron(np.eye(s), q.Ac)],
            ]
        )
        cons.append(base - lmi.AffineMatrixExpr.scaled_const(tau, data_term))
    out = solve_feasibility(lmi.scalarize(cons, space, margin=margin))
    return _finish(space, out, SynthMethod.SPROC_ENERGY, taus=tau_names)


def synth_sproc_instant(pw: PointwiseForms, target, margin: float | None = None, warn_T: int = 400) -> SynthesisResult:
    """Multiplier relaxation for the per-sample disturbance model
    (sufficient); one multiplier per data point per region, so cost grows
    with the record length T."""
    import warnings

    target = target.as_intersection()
    n, m = pw.n, pw.m
    T = pw.T
    if T > warn_T:
        warnings.warn(
            f"record length T={T} adds {T} multipliers per region; expect a slow solve",
            stacklevel=2,
        )
    space, Pe, Ye, PY = _py_vars(n, m)
    cons = [-Pe]
    tau_groups = []
    for k, r in enumerate(target):
        s = r.s
        Is = np.eye(s)
        base = lmi.block(
            [
                [lmi.kron(r.alpha, Pe), lmi.kron(r.beta.T, PY.T)],
                [lmi.kron(r.beta, PY), np.zeros((s * (n + m), s * (n + m)))],
            ]
        )
        names = []
        terms = [base]
        for i in range(T):
            tau = space.scalar(f"tau_{k}_{i}", nonneg=True)
            names.append(f"tau_{k}_{i}")
            Mi = np.block(
                [
                    [np.kron(Is, pw.c[i]), np.kron(Is, pw.b[i].T)],
                    [np.kron(Is, pw.b[i]), np.kron(Is, pw.a[i])],
                ]
            )
            terms.append(lmi.AffineMatrixExpr.scaled_const(tau, -Mi))
        tau_groups.append(names)
        cons.append(lmi.sum_exprs(terms))
    out = solve_feasibility(lmi.scalarize(cons, space, margin=margin))
    return _finish(space, out, SynthMethod.SPROC_INSTANT, taus=tau_groups)


def result_to_dict(result: SynthesisResult, target=None, nominal=None) -> dict:
    """JSON-ready record: method, status, gain, certificate and, when a
    nominal (A, B) is supplied, its closed-loop eigenvalues and margins."""
    d = {
        "method": result.method.value,
        "status": result.outcome.status.value,
        "solver_iterations": result.outcome.iterations,
        "max_residual": result.outcome.max_residual,
    }
    if result.K is not None:
        d["K"] = result.K.tolist()
        d["P"] = result.P.tolist()
    if result.taus is not None:
        d["taus"] = result.taus
    if result.K is not None and nominal is not None:
        A, B = nominal
        eigs = np.linalg.eigvals(np.asarray(A) + np.asarray(B) @ result.K)
        d["eig_closed_loop"] = [[float(z.real), float(z.imag)] for z in eigs]
        if target is not None:
            target = target.as_intersection()
            d["margins"] = [
                [float(membership_margin(r, z)) for r in target] for z in eigs
            ]
    return d
