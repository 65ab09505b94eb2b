"""Benchmark systems, open-loop experiment generation and closed-loop runs.

The two built-in plants are the 5-state digital tape transport (continuous
time, single input on the last state) and a discrete-time network system
``x+ = (I - L/2) x + e3 u`` built from a digraph Laplacian.  Experiments
excite the plant with a unit-variance Gaussian input (piecewise-linear
interpolated in continuous time) under a disturbance drawn uniformly in the
ball ``|d| <= sqrt(eps)``, and record the data matrices column-per-sample.
In continuous time the recorded preview is the exact instantaneous
derivative ``A x + B u + d`` at the sample times, so no differentiation
error enters the data; integration between samples uses fixed-step RK4 with
substep Ts/20.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .consistency import Domain, ExperimentData

__all__ = [
    "LinearSystem",
    "tape_transport",
    "laplacian_system",
    "run_experiment_ct",
    "run_experiment_dt",
    "run_experiment",
    "closed_loop_response",
    "Trajectory",
]


@dataclass(frozen=True)
class LinearSystem:
    A: np.ndarray
    B: np.ndarray
    domain: str
    label: str = ""

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0]:
            raise ValueError("A must be square and B must have matching rows")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


def tape_transport() -> LinearSystem:
    """5-state digital tape transport drive, continuous time."""
    A = np.array(
        [
            [0.0, 2.0, 0.0, 0.0, 0.0],
            [-0.1, -0.35, 0.1, 0.1, 0.75],
            [0.0, 0.0, 0.0, 2.0, 0.0],
            [0.4, 0.4, -0.4, -1.4, 0.0],
            [0.0, -0.03, 0.0, 0.0, -1.0],
        ]
    )
    B = np.array([[0.0], [0.0], [0.0], [0.0], [1.0]])
    return LinearSystem(A, B, Domain.CONTINUOUS, "tape transport")


def laplacian_system() -> LinearSystem:
    """Discrete-time diffusion on a 5-node digraph, input on node 3."""
    L = np.array(
        [
            [1.0, 0.0, -1.0, 0.0, 0.0],
            [-1.0, 1.0, 0.0, 0.0, 0.0],
            [0.0, -1.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0, -1.0],
            [-1.0, 0.0, 0.0, -1.0, 2.0],
        ]
    )
    A = np.eye(5) - 0.5 * L
    B = np.array([[0.0], [0.0], [1.0], [0.0], [0.0]])
    return LinearSystem(A, B, Domain.DISCRETE, "laplacian network")


def _uniform_ball(rng: np.random.Generator, n: int, radius: float, count: int) -> np.ndarray:
    """Columns drawn uniformly from the n-ball of given radius."""
    if radius == 0.0:
        return np.zeros((n, count))
    g = rng.standard_normal((n, count))
    g /= np.linalg.norm(g, axis=0, keepdims=True)
    r = radius * rng.uniform(0.0, 1.0, count) ** (1.0 / n)
    return g * r


def _rk4_step(f, t, x, h):
    k1 = f(t, x)
    k2 = f(t + h / 2, x + h / 2 * k1)
    k3 = f(t + h / 2, x + h / 2 * k2)
    k4 = f(t + h, x + h * k3)
    return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def run_experiment_ct(
    sys: LinearSystem,
    T: int,
    Ts: float,
    input_seed: int,
    dist_seed: int,
    eps: float,
    substeps: int = 20,
) -> ExperimentData:
    """Open-loop experiment on a continuous-time plant.

    Input and disturbance are piecewise-linear interpolations of knots at the
    sample instants: input knots i.i.d. standard Gaussian, disturbance knots
    uniform in ``|d| <= sqrt(eps)`` (so the bound holds along the whole
    trajectory by convexity).  The recorded preview column i is the exact
    derivative ``A x(t_i) + B u(t_i) + d(t_i)``.
    """
    if sys.domain != Domain.CONTINUOUS:
        raise ValueError("run_experiment_ct needs a continuous-time system")
    n, m = sys.n, sys.m
    rng_u = np.random.default_rng(input_seed)
    rng_d = np.random.default_rng(dist_seed)
    u_knots = rng_u.standard_normal((m, T))
    d_knots = _uniform_ball(rng_d, n, np.sqrt(eps), T)

    def interp(knots, t):
        # piecewise linear between sample instants
        s = t / Ts
        i = min(int(np.floor(s)), T - 1)
        j = min(i + 1, T - 1)
        w = s - i
        return (1 - w) * knots[:, i] + w * knots[:, j]

    def f(t, x):
        return sys.A @ x + sys.B @ interp(u_knots, t) + interp(d_knots, t)

    h = Ts / substeps
    x = np.zeros(n)
    X0 = np.empty((n, T))
    X1 = np.empty((n, T))
    for i in range(T):
        t_i = i * Ts
        X0[:, i] = x
        X1[:, i] = sys.A @ x + sys.B @ u_knots[:, i] + d_knots[:, i]
        if i < T - 1:
            for k in range(substeps):
                x = _rk4_step(f, t_i + k * h, x, h)
    return ExperimentData(u_knots, X0, X1, Ts, Domain.CONTINUOUS)


def run_experiment_dt(
    sys: LinearSystem,
    T: int,
    input_seed: int,
    dist_seed: int,
    eps: float,
    Ts: float = 1.0,
) -> ExperimentData:
    """Open-loop experiment on a discrete-time plant (preview = next state)."""
    if sys.domain != Domain.DISCRETE:
        raise ValueError("run_experiment_dt needs a discrete-time system")
    n, m = sys.n, sys.m
    rng_u = np.random.default_rng(input_seed)
    rng_d = np.random.default_rng(dist_seed)
    U0 = rng_u.standard_normal((m, T))
    D0 = _uniform_ball(rng_d, n, np.sqrt(eps), T)
    X0 = np.empty((n, T))
    X1 = np.empty((n, T))
    x = np.zeros(n)
    for i in range(T):
        X0[:, i] = x
        x = sys.A @ x + sys.B @ U0[:, i] + D0[:, i]
        X1[:, i] = x
    return ExperimentData(U0, X0, X1, Ts, Domain.DISCRETE)


def run_experiment(sys: LinearSystem, T: int, Ts: float, input_seed: int, dist_seed: int, eps: float) -> ExperimentData:
    if sys.domain == Domain.CONTINUOUS:
        return run_experiment_ct(sys, T, Ts, input_seed, dist_seed, eps)
    return run_experiment_dt(sys, T, input_seed, dist_seed, eps, Ts=Ts)


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray  # (K,)
    x: np.ndarray  # (K, n)
    u: np.ndarray  # (K, m)

    def to_csv(self, path: str) -> None:
        n, m = self.x.shape[1], self.u.shape[1]
        header = "t," + ",".join(f"x{i+1}" for i in range(n)) + "," + ",".join(
            f"u{j+1}" for j in range(m)
        )
        np.savetxt(
            path,
            np.column_stack([self.t, self.x, self.u]),
            delimiter=",",
            header=header,
            comments="",
        )


def closed_loop_response(
    sys: LinearSystem,
    K: np.ndarray,
    x0: np.ndarray,
    horizon: float,
    step: float | None = None,
) -> Trajectory:
    """Disturbance-free closed-loop run of ``u = K x`` from ``x0``.

    Continuous time integrates with RK4 at ``step`` (default 0.02); discrete
    time iterates the map, with ``horizon`` counted in steps.
    """
    K = np.atleast_2d(np.asarray(K, dtype=float))
    x0 = np.asarray(x0, dtype=float).ravel()
    Acl = sys.A + sys.B @ K
    if sys.domain == Domain.DISCRETE:
        steps = int(round(horizon))
        xs = np.empty((steps + 1, sys.n))
        xs[0] = x0
        for k in range(steps):
            xs[k + 1] = Acl @ xs[k]
        t = np.arange(steps + 1, dtype=float)
    else:
        step = 0.02 if step is None else float(step)
        steps = int(np.ceil(horizon / step))
        xs = np.empty((steps + 1, sys.n))
        xs[0] = x0
        f = lambda _t, x: Acl @ x
        for k in range(steps):
            xs[k + 1] = _rk4_step(f, k * step, xs[k], step)
        t = np.arange(steps + 1) * step
    us = xs @ K.T
    return Trajectory(t, xs, us)
