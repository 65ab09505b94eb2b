"""Experiment data and the set of system matrices consistent with it.

Measured input/state/state-preview sequences are collected column-per-sample
in ``U0`` (m x T), ``X0`` (n x T) and ``X1`` (n x T); the preview is the state
derivative in continuous time and the successor state in discrete time.
Together with a disturbance bound they determine the set of pairs (A, B) that
could have generated the data.  Under an energy bound the set is a matrix
ellipsoid available in three equivalent forms:

* quadratic form: ``[I Z'] [[Cc, Bc'], [Bc, Ac]] [I; Z] ⪯ 0`` with
  ``Z' = [A B]``;
* center form: ``(Z - Zc)' Ac (Z - Zc) ⪯ Qc`` with ``Zc = -Ac^{-1} Bc`` and
  ``Qc = Bc' Ac^{-1} Bc - Cc`` (requires the regressor matrix ``[X0; U0]`` to
  have full row rank, which makes ``Ac`` positive definite and ``Qc``
  positive semidefinite);
* square-root parameterization: ``Z = Zc + Ac^{-1/2} Y Qc^{1/2}`` over all
  contractions ``Y``.

Under a per-sample (instantaneous) bound, each data point constrains (A, B)
through its own rank-1 quadratic form and the consistent set is the
intersection over samples.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Domain",
    "ExperimentData",
    "EnergyBound",
    "EnergyQuadraticBound",
    "InstantaneousBound",
    "InstantaneousQuadraticBound",
    "QuadraticConsistencyForm",
    "CenterForm",
    "PointwiseForms",
    "check_rank",
    "quadratic_form",
    "center_form",
    "sample_consistent",
    "contains",
    "pointwise_forms",
    "experiment_to_dict",
    "experiment_from_dict",
    "disturbance_to_dict",
    "disturbance_from_dict",
]


class Domain:
    CONTINUOUS = "ct"
    DISCRETE = "dt"


@dataclass(frozen=True)
class ExperimentData:
    """Input/state/preview sequences sampled with period Ts."""

    U0: np.ndarray
    X0: np.ndarray
    X1: np.ndarray
    Ts: float
    domain: str

    def __post_init__(self):
        U0 = np.atleast_2d(np.asarray(self.U0, dtype=float))
        X0 = np.atleast_2d(np.asarray(self.X0, dtype=float))
        X1 = np.atleast_2d(np.asarray(self.X1, dtype=float))
        if not (U0.shape[1] == X0.shape[1] == X1.shape[1]):
            raise ValueError("U0, X0, X1 must share the sample count T")
        if X0.shape != X1.shape:
            raise ValueError("X0 and X1 must have equal shapes")
        if U0.shape[1] < 1:
            raise ValueError("need at least one sample")
        if self.Ts <= 0:
            raise ValueError("sampling period must be positive")
        if self.domain not in (Domain.CONTINUOUS, Domain.DISCRETE):
            raise ValueError("domain must be 'ct' or 'dt'")
        object.__setattr__(self, "U0", U0)
        object.__setattr__(self, "X0", X0)
        object.__setattr__(self, "X1", X1)

    @property
    def n(self) -> int:
        return self.X0.shape[0]

    @property
    def m(self) -> int:
        return self.U0.shape[0]

    @property
    def T(self) -> int:
        return self.U0.shape[1]

    @property
    def regressor(self) -> np.ndarray:
        """Stacked [X0; U0], shape (n+m, T)."""
        return np.vstack([self.X0, self.U0])


def _check_sym_pd(M: np.ndarray, name: str) -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.allclose(M, M.T, rtol=0, atol=1e-10 * max(1.0, np.abs(M).max())):
        raise ValueError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(M)[0] <= 0:
        raise ValueError(f"{name} must be positive definite")
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class EnergyBound:
    """Disturbance sequences D with ``D D' ⪯ Delta Delta'``."""

    Delta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Delta", np.atleast_2d(np.asarray(self.Delta, dtype=float)))

    @staticmethod
    def from_instantaneous(eps: float, n: int, T: int) -> "EnergyBound":
        """Embed a per-sample bound |d|^2 <= eps as Delta = sqrt(T*eps)*I."""
        if eps < 0:
            raise ValueError("eps must be nonnegative")
        return EnergyBound(np.sqrt(T * eps) * np.eye(n))


@dataclass(frozen=True)
class EnergyQuadraticBound:
    """Disturbance sequences D with ``[I D] [[R, S'], [S, Q]] [I; D'] ⪯ 0``."""

    R: np.ndarray
    S: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        S = np.atleast_2d(np.asarray(self.S, dtype=float))
        if not np.allclose(R, R.T, rtol=0, atol=1e-10 * max(1.0, np.abs(R).max())):
            raise ValueError("R must be symmetric")
        Q = _check_sym_pd(self.Q, "Q")
        object.__setattr__(self, "R", 0.5 * (R + R.T))
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "Q", Q)


@dataclass(frozen=True)
class InstantaneousBound:
    """Per-sample bound ``|d|^2 <= eps``."""

    eps: float

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")


@dataclass(frozen=True)
class InstantaneousQuadraticBound:
    """Per-sample bound ``[I d] [[r, s'], [s, q]] [I; d'] ⪯ 0`` with q > 0."""

    r: np.ndarray
    s: np.ndarray
    q: float

    def __post_init__(self):
        r = np.atleast_2d(np.asarray(self.r, dtype=float))
        if not np.allclose(r, r.T, rtol=0, atol=1e-10 * max(1.0, np.abs(r).max())):
            raise ValueError("r must be symmetric")
        if self.q <= 0:
            raise ValueError("q must be positive")
        object.__setattr__(self, "r", 0.5 * (r + r.T))
        object.__setattr__(self, "s", np.atleast_2d(np.asarray(self.s, dtype=float)))


@dataclass(frozen=True)
class QuadraticConsistencyForm:
    """Data of the quadratic containment test for (A, B)."""

    Cc: np.ndarray  # n x n symmetric
    Bc: np.ndarray  # (n+m) x n
    Ac: np.ndarray  # (n+m) x (n+m) symmetric
    n: int
    m: int


@dataclass(frozen=True)
class CenterForm:
    """Matrix-ellipsoid form: center, shape and squared radius."""

    Zc: np.ndarray  # (n+m) x n
    Ac: np.ndarray
    Qc: np.ndarray  # n x n, PSD up to tolerance
    n: int
    m: int
    Ac_inv_sqrt: np.ndarray = field(repr=False, default=None)
    Qc_sqrt: np.ndarray = field(repr=False, default=None)


@dataclass(frozen=True)
class PointwiseForms:
    """Per-sample quadratic forms for the instantaneous disturbance bound."""

    c: np.ndarray  # (T, n, n)
    b: np.ndarray  # (T, n+m, n)
    a: np.ndarray  # (T, n+m, n+m), each rank <= 1
    n: int
    m: int
    data: ExperimentData = field(repr=False, default=None)
    eps: float | None = field(repr=False, default=None)

    @property
    def T(self) -> int:
        return self.c.shape[0]

    def slacks(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """Largest eigenvalue of each per-sample form at (A, B)."""
        Z = np.hstack([np.asarray(A, float), np.asarray(B, float)]).T
        if self.eps is not None and self.data is not None:
            # plain instantaneous model: the form is -eps I + r r' with r the
            # preview residual, so its top eigenvalue is |r|^2 - eps
            R = self.data.X1 - Z.T @ self.data.regressor
            return np.sum(R * R, axis=0) - self.eps
        out = np.empty(self.T)
        for i in range(self.T):
            M = self.c[i] + Z.T @ self.b[i] + self.b[i].T @ Z + Z.T @ self.a[i] @ Z
            out[i] = np.linalg.eigvalsh(M)[-1]
        return out

    def contains(self, A: np.ndarray, B: np.ndarray, tol: float = 0.0) -> bool:
        return bool(np.all(self.slacks(A, B) <= tol))


# -- operations ----------------------------------------------------------------


def check_rank(data: ExperimentData, rank_tol: float = 1e-8) -> tuple[bool, float]:
    """Full-row-rank test of [X0; U0]; returns (verdict, smallest singular value)."""
    sv = np.linalg.svd(data.regressor, compute_uv=False)
    smallest = float(sv[-1]) if len(sv) == data.n + data.m else 0.0
    return bool(data.T >= data.n + data.m and smallest > rank_tol * sv[0]), smallest


def quadratic_form(data: ExperimentData, model) -> QuadraticConsistencyForm:
    """Quadratic containment data for an energy-type disturbance model."""
    W = data.regressor
    X1 = data.X1
    if isinstance(model, EnergyBound):
        if model.Delta.shape[0] != data.n:
            raise ValueError("Delta must have n rows")
        Cc = -model.Delta @ model.Delta.T + X1 @ X1.T
        Bc = -W @ X1.T
        Ac = W @ W.T
    elif isinstance(model, EnergyQuadraticBound):
        R, S, Q = model.R, model.S, model.Q
        if R.shape != (data.n, data.n) or S.shape != (data.T, data.n) or Q.shape != (data.T, data.T):
            raise ValueError("quadratic energy bound dimensions do not match the data")
        Cc = R + X1 @ S + S.T @ X1.T + X1 @ Q @ X1.T
        Bc = -W @ (S + Q @ X1.T)
        Ac = W @ Q @ W.T
    else:
        raise TypeError("quadratic_form needs an energy-type disturbance model")
    return QuadraticConsistencyForm(0.5 * (Cc + Cc.T), Bc, 0.5 * (Ac + Ac.T), data.n, data.m)


def _psd_sqrt(M: np.ndarray, clip_rel: float = 1e-9):
    """Symmetric square root with small-negative-eigenvalue clipping.

    Returns (sqrt, inv_sqrt or None, min_eig).  Eigenvalues above
    ``-clip_rel * ||M||`` are clipped to zero; anything lower is the caller's
    inconsistency to handle.
    """
    vals, vecs = np.linalg.eigh(M)
    scale = max(np.abs(vals).max(), 1e-300)
    min_eig = float(vals[0])
    clipped = np.clip(vals, 0.0, None)
    root = (vecs * np.sqrt(clipped)) @ vecs.T
    inv = None
    if vals[0] > 0:
        inv = (vecs * (1.0 / np.sqrt(vals))) @ vecs.T
    return root, inv, min_eig, scale


def center_form(q: QuadraticConsistencyForm) -> CenterForm:
    """Ellipsoid center/shape/radius from the quadratic form.

    Raises when ``Ac`` is not positive definite (rank-deficient regressors)
    or when the radius matrix has an eigenvalue below ``-1e-9 * ||Qc||``
    (data not explainable by the disturbance model).
    """
    try:
        np.linalg.cholesky(q.Ac)
    except np.linalg.LinAlgError:
        raise ValueError(
            "Ac is not positive definite: the regressor matrix [X0; U0] is "
            "rank deficient; collect more data"
        ) from None
    Zc = -np.linalg.solve(q.Ac, q.Bc)
    Qc = q.Bc.T @ Zc * (-1.0) - q.Cc
    Qc = 0.5 * (Qc + Qc.T)
    Qc_root, _, min_eig, scale = _psd_sqrt(Qc)
    # absolute floor: Qc is a difference of same-magnitude products, so its
    # round-off noise scales with the forming terms, not with ||Qc|| itself
    # (which vanishes for noiseless data)
    form_scale = max(1.0, np.linalg.norm(q.Cc, "fro"), np.linalg.norm(q.Bc.T @ Zc, "fro"))
    if min_eig < -max(1e-9 * scale, 1e-12 * form_scale):
        raise ValueError(
            f"radius matrix has eigenvalue {min_eig:.3e} below tolerance: "
            "data are not consistent with the disturbance model"
        )
    vals, vecs = np.linalg.eigh(q.Ac)
    Ac_inv_sqrt = (vecs * (1.0 / np.sqrt(vals))) @ vecs.T
    return CenterForm(Zc, q.Ac, Qc, q.n, q.m, Ac_inv_sqrt, Qc_root)


def sample_consistent(cf: CenterForm, Upsilon: np.ndarray) -> np.ndarray:
    """One consistent ``[A B]`` from a contraction, as an n x (n+m) matrix."""
    Upsilon = np.asarray(Upsilon, dtype=float)
    if Upsilon.shape != (cf.n + cf.m, cf.n):
        raise ValueError("contraction must be (n+m) x n")
    sv = np.linalg.svd(Upsilon, compute_uv=False)
    if sv[0] > 1.0 + 1e-12:
        raise ValueError("contraction must satisfy ||Upsilon|| <= 1")
    Z = cf.Zc + cf.Ac_inv_sqrt @ Upsilon @ cf.Qc_sqrt
    return Z.T


def contains(
    q: QuadraticConsistencyForm,
    A: np.ndarray,
    B: np.ndarray,
    tol: float | None = None,
) -> tuple[bool, float]:
    """Containment test; returns (verdict, largest eigenvalue of the form)."""
    Z = np.hstack([np.asarray(A, float), np.asarray(B, float)]).T
    M = q.Cc + Z.T @ q.Bc + q.Bc.T @ Z + Z.T @ q.Ac @ Z
    slack = float(np.linalg.eigvalsh(M)[-1])
    if tol is None:
        tol = 1e-9 * max(1.0, np.linalg.norm(q.Cc, "fro"), np.linalg.norm(q.Ac, "fro"))
    return slack <= tol, slack


def pointwise_forms(data: ExperimentData, model) -> PointwiseForms:
    """Per-sample forms for an instantaneous-type disturbance model."""
    W = data.regressor
    X1 = data.X1
    T, n = data.T, data.n
    c = np.empty((T, n, n))
    b = np.empty((T, n + data.m, n))
    a = np.empty((T, n + data.m, n + data.m))
    if isinstance(model, InstantaneousBound):
        eps = model.eps
        for i in range(T):
            x1 = X1[:, [i]]
            w = W[:, [i]]
            c[i] = -eps * np.eye(n) + x1 @ x1.T
            b[i] = -w @ x1.T
            a[i] = w @ w.T
        return PointwiseForms(c, b, a, n, data.m, data, eps)
    if isinstance(model, InstantaneousQuadraticBound):
        r, s, qq = model.r, model.s, model.q
        if r.shape != (n, n) or s.shape != (1, n):
            raise ValueError("instantaneous quadratic bound dimensions do not match")
        for i in range(T):
            x1 = X1[:, [i]]
            w = W[:, [i]]
            c[i] = r + x1 @ s + s.T @ x1.T + qq * (x1 @ x1.T)
            b[i] = -w @ (s + qq * x1.T)
            a[i] = qq * (w @ w.T)
        return PointwiseForms(c, b, a, n, data.m, data, None)
    raise TypeError("pointwise_forms needs an instantaneous-type disturbance model")


# -- serialization --------------------------------------------------------------


def experiment_to_dict(data: ExperimentData) -> dict:
    return {
        "domain": data.domain,
        "Ts": data.Ts,
        "n": data.n,
        "m": data.m,
        "T": data.T,
        "U0": data.U0.tolist(),
        "X0": data.X0.tolist(),
        "X1": data.X1.tolist(),
    }


def experiment_from_dict(d: dict) -> ExperimentData:
    data = ExperimentData(
        np.array(d["U0"], dtype=float),
        np.array(d["X0"], dtype=float),
        np.array(d["X1"], dtype=float),
        float(d["Ts"]),
        d["domain"],
    )
    for key in ("n", "m", "T"):
        if key in d and getattr(data, key) != d[key]:
            raise ValueError(f"declared {key}={d[key]} does not match the arrays")
    return data


def save_experiment(data: ExperimentData, path: str) -> None:
    with open(path, "w") as f:
        json.dump(experiment_to_dict(data), f)


def load_experiment(path: str) -> ExperimentData:
    with open(path) as f:
        return experiment_from_dict(json.load(f))


def disturbance_to_dict(model) -> dict:
    if isinstance(model, EnergyBound):
        return {"type": "energy", "Delta": model.Delta.tolist()}
    if isinstance(model, EnergyQuadraticBound):
        return {"type": "energy_quadratic", "R": model.R.tolist(), "S": model.S.tolist(), "Q": model.Q.tolist()}
    if isinstance(model, InstantaneousBound):
        return {"type": "instantaneous", "eps": model.eps}
    if isinstance(model, InstantaneousQuadraticBound):
        return {"type": "instantaneous_quadratic", "r": model.r.tolist(), "s": model.s.tolist(), "q": model.q}
    raise TypeError(f"not a disturbance model: {model!r}")


def disturbance_from_dict(d: dict):
    t = d["type"]
    if t == "energy":
        return EnergyBound(np.array(d["Delta"], dtype=float))
    if t == "energy_quadratic":
        return EnergyQuadraticBound(np.array(d["R"]), np.array(d["S"]), np.array(d["Q"]))
    if t == "instantaneous":
        return InstantaneousBound(float(d["eps"]))
    if t == "instantaneous_quadratic":
        return InstantaneousQuadraticBound(np.array(d["r"]), np.array(d["s"]), float(d["q"]))
    raise ValueError(f"unknown disturbance model type {t!r}")
