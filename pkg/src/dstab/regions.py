"""LMI-region algebra.

A region is the set of complex numbers z where the Hermitian pencil
``alpha + z*beta + conj(z)*beta.T`` is negative definite, for a real
symmetric ``alpha`` and a real ``beta`` of common dimension ``s``.  This
module provides:

* a catalog of standard regions (halfplanes, disks, strips, ellipses,
  parabolas, hyperbolas, cones, plus the open left halfplane and open unit
  disk used for continuous/discrete-time stability),
* membership tests and per-point margins,
* the characteristic matrix ``alpha ⊗ P + beta ⊗ (A P) + beta.T ⊗ (P A.T)``
  whose negative definiteness certifies eigenvalue placement,
* placement checks for intersections, by eigenvalues or by certificate,
* rank-1 structure of ``beta`` (when ``beta = eta * gamma.T``) and the
  classification of the point sets such regions can describe,
* inner approximation of the decay/frequency/damping wedge by two disks,
  with the tangent-disk center found by 1-D maximization of the overlap
  area,
* JSON (de)serialization and boundary polyline sampling for reports.
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from . import lmi
from .solve import SolveOutcome, SolveStatus, solve_feasibility

__all__ = [
    "LmiRegion",
    "RegionIntersection",
    "RankOneFactor",
    "RegionClassKind",
    "RegionClass",
    "StabilityReport",
    "make_region",
    "hurwitz_region",
    "schur_region",
    "membership",
    "membership_margin",
    "characteristic_matrix",
    "characteristic_expr",
    "s_stability_check",
    "rank_one_factor",
    "classify_rank_one",
    "wedge_regions",
    "inner_approx_wedge",
    "InnerApproxResult",
    "dt_disk_spec",
    "region_to_dict",
    "region_from_dict",
    "intersection_to_dict",
    "intersection_from_dict",
    "boundary_points",
]


@dataclass(frozen=True)
class LmiRegion:
    """Region data ``(alpha, beta)`` of dimension ``s`` plus a label."""

    alpha: np.ndarray
    beta: np.ndarray
    label: str = ""
    kind: str | None = field(default=None, compare=False)
    params: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        alpha = np.atleast_2d(np.asarray(self.alpha, dtype=float))
        beta = np.atleast_2d(np.asarray(self.beta, dtype=float))
        if alpha.shape != beta.shape or alpha.shape[0] != alpha.shape[1]:
            raise ValueError("alpha and beta must be square of equal dimension")
        nrm = max(1.0, np.abs(alpha).max())
        if np.abs(alpha - alpha.T).max() > 1e-12 * nrm:
            raise ValueError("alpha must be symmetric")
        object.__setattr__(self, "alpha", 0.5 * (alpha + alpha.T))
        object.__setattr__(self, "beta", beta)

    @property
    def s(self) -> int:
        return self.alpha.shape[0]

    @property
    def is_constant(self) -> bool:
        """True when beta = 0, so membership does not depend on z."""
        return bool(np.all(self.beta == 0.0))

    def pencil(self, z: complex) -> np.ndarray:
        return self.alpha + z * self.beta + np.conj(z) * self.beta.T

    def scaled(self, lam: float) -> "LmiRegion":
        """The same point set, with data scaled by ``lam > 0``."""
        if lam <= 0:
            raise ValueError("scaling must be positive")
        return LmiRegion(lam * self.alpha, lam * self.beta, self.label)

    def as_intersection(self) -> "RegionIntersection":
        return RegionIntersection([self])


@dataclass(frozen=True)
class RegionIntersection:
    """Ordered, non-empty list of regions whose intersection is the target."""

    regions: tuple[LmiRegion, ...]

    def __post_init__(self):
        regs = tuple(self.regions)
        if not regs:
            raise ValueError("intersection needs at least one region")
        object.__setattr__(self, "regions", regs)

    def __iter__(self):
        return iter(self.regions)

    def __len__(self):
        return len(self.regions)

    def as_intersection(self) -> "RegionIntersection":
        return self


@dataclass(frozen=True)
class RankOneFactor:
    """Vectors with ``eta @ gamma.T == beta`` for a rank-1 region."""

    eta: np.ndarray
    gamma: np.ndarray


class RegionClassKind(str, enum.Enum):
    EMPTY = "empty"
    FULL_PLANE = "full_plane"
    VERTICAL_HALFPLANE = "vertical_halfplane"
    VERTICAL_STRIP = "vertical_strip"
    DISK = "disk"
    DISK_HALFPLANE_INTERSECTION = "disk_halfplane_intersection"


@dataclass(frozen=True)
class RegionClass:
    """Point-set classification of a rank-1 region.

    ``x0``/``sigma`` describe a disk (center abscissa / squared radius);
    ``halfplane_bound``/``halfplane_side`` a halfplane (side "left" means
    ``x < bound``); ``strip`` the open interval of real parts.  The spec's
    field list leaves halfplane direction and strip bounds implicit; they are
    carried explicitly here so the class reproduces the point set exactly.
    """

    kind: RegionClassKind
    x0: float | None = None
    sigma: float | None = None
    halfplane_bound: float | None = None
    halfplane_side: str | None = None
    strip: tuple[float, float] | None = None

    def contains(self, z: complex) -> bool:
        x, y = z.real, z.imag
        k = self.kind
        if k is RegionClassKind.EMPTY:
            return False
        if k is RegionClassKind.FULL_PLANE:
            return True
        if k is RegionClassKind.VERTICAL_HALFPLANE:
            return x < self.halfplane_bound if self.halfplane_side == "left" else x > self.halfplane_bound
        if k is RegionClassKind.VERTICAL_STRIP:
            return self.strip[0] < x < self.strip[1]
        in_disk = (x - self.x0) ** 2 + y**2 < self.sigma
        if k is RegionClassKind.DISK:
            return in_disk
        hp = x < self.halfplane_bound if self.halfplane_side == "left" else x > self.halfplane_bound
        return in_disk and hp


# -- catalog -----------------------------------------------------------------


def _chk(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


def _catalog(kind: str, p: tuple[float, ...], s: int | None):
    """Return (alpha, beta, label) for a catalog kind.

    Data follows the standard table of s=2 quadratic regions (the table lists
    ``2*beta``; halved here).  Halfplanes admit an equivalent s=1 form
    (``alpha=-l, beta=1/2`` for the left halfplane), selected with ``s=1``.
    """
    if kind == "hurwitz":
        return np.zeros((1, 1)), np.ones((1, 1)), "open left halfplane"
    if kind == "schur":
        return (
            -np.eye(2),
            np.array([[0.0, 0.0], [-1.0, 0.0]]),
            "open unit disk",
        )
    if kind == "halfplane_left":
        (l,) = p
        if s == 2:
            return (
                np.array([[-l, 0.0], [0.0, -1.0]]),
                np.array([[0.5, 0.0], [0.0, 0.0]]),
                f"halfplane x < {l:g}",
            )
        return np.array([[-l]]), np.array([[0.5]]), f"halfplane x < {l:g}"
    if kind == "halfplane_right":
        (r,) = p
        if s == 2:
            return (
                np.array([[r, 0.0], [0.0, -1.0]]),
                np.array([[-0.5, 0.0], [0.0, 0.0]]),
                f"halfplane x > {r:g}",
            )
        return np.array([[r]]), np.array([[-0.5]]), f"halfplane x > {r:g}"
    if kind == "disk":
        xd, rd = p
        _chk(rd > 0, "disk radius must satisfy r_d > 0")
        return (
            np.array([[-rd, xd], [xd, -rd]]),
            np.array([[0.0, 0.0], [-1.0, 0.0]]),
            f"disk center ({xd:g},0) radius {rd:g}",
        )
    if kind == "vstrip":
        l, r = p
        _chk(l < r, "vertical strip requires l < r")
        return (
            np.array([[-r, 0.0], [0.0, l]]),
            np.array([[0.5, 0.0], [0.0, -0.5]]),
            f"vertical strip {l:g} < x < {r:g}",
        )
    if kind == "hstrip":
        (w,) = p
        _chk(w > 0, "horizontal strip requires w > 0")
        return (
            np.array([[-w, 0.0], [0.0, -w]]),
            np.array([[0.0, 0.5], [-0.5, 0.0]]),
            f"horizontal strip |y| < {w:g}",
        )
    if kind == "ellipse":
        xe, mu1, mu2 = p
        _chk(mu1 > 0, "ellipse requires mu_1 > 0")
        _chk(mu2 > 0, "ellipse requires mu_2 > 0")
        return (
            np.array([[-mu1**2, xe * mu2], [xe * mu2, -mu2**2]]),
            np.array([[0.0, (mu1 - mu2) / 2], [-(mu1 + mu2) / 2, 0.0]]),
            f"ellipse center ({xe:g},0) semiaxes {mu1:g},{mu2:g}",
        )
    if kind in ("parabola_left", "parabola_right"):
        xp, cp = p
        _chk(cp > 0, "parabola requires c_p > 0")
        q = math.sqrt(cp / 2.0)
        if kind == "parabola_left":
            return (
                np.array([[-1.0, 0.0], [0.0, -xp]]),
                np.array([[0.0, q], [-q, 1.0]]) / 2.0,
                f"left parabola vertex ({xp:g},0)",
            )
        return (
            np.array([[-1.0, 0.0], [0.0, xp]]),
            np.array([[0.0, q], [-q, -1.0]]) / 2.0,
            f"right parabola vertex ({xp:g},0)",
        )
    if kind in ("hyperbola_left", "hyperbola_right"):
        xh, ch = p
        _chk(xh > 0, "hyperbola requires x_h > 0")
        _chk(ch > 0, "hyperbola requires c_h > 0")
        alpha = np.array([[0.0, ch * xh], [ch * xh, 0.0]])
        if kind == "hyperbola_left":
            return alpha, np.array([[ch, 1.0], [-1.0, ch]]) / 2.0, f"left hyperbola vertex (-{xh:g},0)"
        return alpha, np.array([[-ch, 1.0], [-1.0, -ch]]) / 2.0, f"right hyperbola vertex ({xh:g},0)"
    if kind in ("cone_left", "cone_right"):
        xc, th = p
        _chk(0 < th < math.pi / 2, "cone requires theta in (0, pi/2)")
        st, ct = math.sin(th), math.cos(th)
        if kind == "cone_left":
            return (
                -st * xc * np.eye(2),
                np.array([[st, ct], [-ct, st]]) / 2.0,
                f"left cone vertex ({xc:g},0) semiaperture {th:g}",
            )
        return (
            st * xc * np.eye(2),
            -np.array([[st, -ct], [ct, st]]) / 2.0,
            f"right cone vertex ({xc:g},0) semiaperture {th:g}",
        )
    raise ValueError(f"unknown region kind {kind!r}")


CATALOG_KINDS = (
    "hurwitz",
    "schur",
    "halfplane_left",
    "halfplane_right",
    "disk",
    "vstrip",
    "hstrip",
    "ellipse",
    "parabola_left",
    "parabola_right",
    "hyperbola_left",
    "hyperbola_right",
    "cone_left",
    "cone_right",
)


def make_region(kind: str, *params: float, s: int | None = None) -> LmiRegion:
    """Build a catalog region from its kind and positional parameters.

    Parameter order follows the catalog table: ``disk(x_d, r_d)``,
    ``vstrip(l, r)``, ``ellipse(x_e, mu_1, mu_2)``, ``cone_left(x_c, theta)``
    and so on.  ``s`` selects the s=1 form for halfplanes (the default there).
    """
    alpha, beta, label = _catalog(kind, tuple(float(v) for v in params), s)
    return LmiRegion(alpha, beta, label, kind=kind, params=tuple(float(v) for v in params))


def hurwitz_region() -> LmiRegion:
    return make_region("hurwitz")


def schur_region() -> LmiRegion:
    return make_region("schur")


# -- membership and characteristic matrices ----------------------------------


def membership_margin(region: LmiRegion, z: complex) -> float:
    """Negated largest eigenvalue of the pencil; positive strictly inside."""
    return float(-np.linalg.eigvalsh(region.pencil(complex(z)))[-1])


def membership(region: LmiRegion, z: complex, tol: float = 0.0) -> bool:
    """Strict membership: all pencil eigenvalues below ``-tol``."""
    return membership_margin(region, z) > tol


def characteristic_matrix(region: LmiRegion, A: np.ndarray, P: np.ndarray) -> np.ndarray:
    """``alpha ⊗ P + beta ⊗ (A P) + beta.T ⊗ (P A.T)``."""
    A = np.asarray(A, dtype=float)
    P = np.asarray(P, dtype=float)
    if A.shape != P.shape or A.shape[0] != A.shape[1]:
        raise ValueError("A and P must be square of equal dimension")
    if not np.allclose(P, P.T, rtol=0, atol=1e-10 * max(1.0, np.abs(P).max())):
        raise ValueError("P must be symmetric")
    AP = A @ P
    return np.kron(region.alpha, P) + np.kron(region.beta, AP) + np.kron(region.beta.T, AP.T)


def characteristic_expr(region: LmiRegion, A: np.ndarray, P_expr) -> "lmi.AffineMatrixExpr":
    """Characteristic matrix as an affine expression in a matrix variable."""
    return lmi.kron(region.alpha, P_expr) + lmi.trsym(lmi.kron(region.beta, np.asarray(A) @ P_expr))


@dataclass
class StabilityReport:
    stable: bool | None
    margins: np.ndarray | None  # (n_eigs, n_regions) for eigenvalue mode
    eigenvalues: np.ndarray | None
    P: np.ndarray | None
    outcome: SolveOutcome | None
    mode: str


def s_stability_check(target, A: np.ndarray, mode: str = "eigenvalue") -> StabilityReport:
    """Check placement of ``eig(A)`` in an intersection of regions.

    ``mode="eigenvalue"`` computes eigenvalues and per-region membership
    margins.  ``mode="certificate"`` solves for a single symmetric P > 0
    making every characteristic matrix negative definite; solver failure is
    reported as ``stable=None`` rather than conflated with infeasibility.
    """
    target = target.as_intersection()
    A = np.asarray(A, dtype=float)
    if mode == "eigenvalue":
        eigs = np.linalg.eigvals(A)
        margins = np.array([[membership_margin(r, z) for r in target] for z in eigs])
        return StabilityReport(bool(np.all(margins > 0)), margins, eigs, None, None, mode)
    if mode != "certificate":
        raise ValueError("mode must be 'eigenvalue' or 'certificate'")
    n = A.shape[0]
    space = lmi.VariableSpace()
    P = space.symmetric("P", n)
    Pe = lmi.AffineMatrixExpr.from_var(P)
    cons = [-Pe] + [characteristic_expr(r, A, Pe) for r in target]
    out = solve_feasibility(lmi.scalarize(cons, space))
    if out.status is SolveStatus.NUMERICAL_FAILURE:
        return StabilityReport(None, None, None, None, out, mode)
    stable = out.status is SolveStatus.FEASIBLE
    Pv = out.assignment["P"] if out.assignment is not None else None
    return StabilityReport(stable, None, None, Pv, out, mode)


# -- rank-1 structure ---------------------------------------------------------


def rank_one_factor(region: LmiRegion, rel_tol: float = 1e-9) -> RankOneFactor | None:
    """Factor ``beta = eta @ gamma.T`` when beta has numerical rank one.

    Returns None when the second singular value exceeds ``rel_tol`` times the
    first, and for ``beta = 0`` (a constant region: membership independent of
    z; flagged by :attr:`LmiRegion.is_constant`).
    """
    if region.is_constant:
        return None
    U, sv, Vt = np.linalg.svd(region.beta)
    if sv[0] <= 0 or (len(sv) > 1 and sv[1] > rel_tol * sv[0]):
        return None
    eta = U[:, 0] * sv[0]
    gamma = Vt[0, :]
    return RankOneFactor(eta=eta, gamma=gamma)


def _interval_from_affine(a: float, b: float, strict_neg: bool, scale: float):
    """Solution interval of ``a + 2 x b < 0`` (or ``> 0``) as (lo, hi)."""
    if abs(b) <= 1e-12 * scale:
        sat = (a < 0) if strict_neg else (a > 0)
        return (-np.inf, np.inf) if sat else None
    bound = -a / (2.0 * b)
    if strict_neg:
        return (-np.inf, bound) if b > 0 else (bound, np.inf)
    return (bound, np.inf) if b > 0 else (-np.inf, bound)


def classify_rank_one(region: LmiRegion, factor: RankOneFactor) -> RegionClass:
    """Identify the point set of an s=2 region with rank-1 beta.

    When ``eta1*gamma2 - eta2*gamma1`` vanishes the two scalar conditions are
    affine in the real part (halfplane/strip family); otherwise completing
    the square yields a disk centered on the real axis, possibly cut by the
    halfplane of the first condition, or the empty set.
    """
    if region.s != 2:
        raise ValueError("classification applies to s = 2 regions")
    eta, gam = factor.eta, factor.gamma
    a = region.alpha
    scale = max(1e-300, float(np.linalg.norm(eta) * np.linalg.norm(gam)))
    D = eta[0] * gam[1] - eta[1] * gam[0]
    b11 = eta[0] * gam[0]
    a2 = a[0, 0] * a[1, 1] - a[0, 1] ** 2
    c2 = a[0, 0] * eta[1] * gam[1] + a[1, 1] * eta[0] * gam[0] - a[0, 1] * (eta[0] * gam[1] + eta[1] * gam[0])

    if abs(D) <= 1e-10 * scale:
        i1 = _interval_from_affine(a[0, 0], b11, True, scale**1)
        i2 = _interval_from_affine(a2, c2, False, scale**2)
        if i1 is None or i2 is None:
            return RegionClass(RegionClassKind.EMPTY)
        lo = max(i1[0], i2[0])
        hi = min(i1[1], i2[1])
        if lo >= hi:
            return RegionClass(RegionClassKind.EMPTY)
        if np.isinf(lo) and np.isinf(hi):
            return RegionClass(RegionClassKind.FULL_PLANE)
        if np.isinf(lo):
            return RegionClass(RegionClassKind.VERTICAL_HALFPLANE, halfplane_bound=hi, halfplane_side="left")
        if np.isinf(hi):
            return RegionClass(RegionClassKind.VERTICAL_HALFPLANE, halfplane_bound=lo, halfplane_side="right")
        return RegionClass(RegionClassKind.VERTICAL_STRIP, strip=(lo, hi))

    x0 = c2 / D**2
    sigma = (c2**2 + a2 * D**2) / D**4
    if sigma <= 0:
        return RegionClass(RegionClassKind.EMPTY)
    hp = _interval_from_affine(a[0, 0], b11, True, scale)
    if hp is None:
        return RegionClass(RegionClassKind.EMPTY)
    lo, hi = hp
    r = math.sqrt(sigma)
    if np.isinf(lo) and np.isinf(hi):
        return RegionClass(RegionClassKind.DISK, x0=x0, sigma=sigma)
    if np.isinf(lo):  # halfplane x < hi
        if x0 + r <= hi:
            return RegionClass(RegionClassKind.DISK, x0=x0, sigma=sigma)
        if x0 - r >= hi:
            return RegionClass(RegionClassKind.EMPTY)
        return RegionClass(
            RegionClassKind.DISK_HALFPLANE_INTERSECTION,
            x0=x0, sigma=sigma, halfplane_bound=hi, halfplane_side="left",
        )
    if x0 - r >= lo:
        return RegionClass(RegionClassKind.DISK, x0=x0, sigma=sigma)
    if x0 + r <= lo:
        return RegionClass(RegionClassKind.EMPTY)
    return RegionClass(
        RegionClassKind.DISK_HALFPLANE_INTERSECTION,
        x0=x0, sigma=sigma, halfplane_bound=lo, halfplane_side="right",
    )


# -- performance wedge and its inner approximation ----------------------------


def wedge_regions(ell: float, rho: float, theta: float) -> RegionIntersection:
    """Decay/frequency/damping wedge: halfplane x < -ell, disk of radius
    rho at the origin, left cone with vertex 0 and semiaperture theta.

    The halfplane uses the s=2 catalog data (the form the wedge's three
    constraints are conventionally displayed in).
    """
    _chk(ell > 0, "wedge requires ell > 0")
    _chk(rho > 0, "wedge requires rho > 0")
    _chk(0 < theta < math.pi / 2, "wedge requires theta in (0, pi/2)")
    return RegionIntersection(
        (
            make_region("halfplane_left", -ell, s=2),
            make_region("disk", 0.0, rho),
            make_region("cone_left", 0.0, theta),
        )
    )


def _overlap_half_area(xt: float, rho: float, theta: float) -> float:
    """Half (upper-half-plane) area of the overlap between the origin disk of
    radius rho and the cone-inscribed disk centered at ``xt < 0``.

    This is the exact closed form of the circular-lens area (validated against
    independent quadrature in the test suite).  Arccosine arguments are
    clipped to [-1, 1]; they leave the domain only at the internally-tangent
    endpoint where the expression degenerates.
    """
    st = math.sin(theta)
    ct = math.cos(theta)
    t1sq = (xt**2 * (1 + st) ** 2 - rho**2) * (rho**2 - (1 - st) ** 2 * xt**2)
    term1 = 0.25 * math.sqrt(max(0.0, t1sq))
    u1 = np.clip((xt**2 * ct**2 + rho**2) / (2 * rho * xt), -1.0, 1.0)
    u2 = np.clip((xt**2 * (1 + st**2) - rho**2) / (2 * st * xt**2), -1.0, 1.0)
    return (
        math.pi * rho**2 / 2.0
        - term1
        - rho**2 / 2.0 * math.acos(u1)
        + st**2 * xt**2 / 2.0 * math.acos(u2)
    )


@dataclass
class InnerApproxResult:
    intersection: RegionIntersection  # two disks
    x_t: float
    area: float  # full overlap area of the two disks
    right_end_ok: bool


def inner_approx_wedge(ell: float, rho: float, theta: float) -> InnerApproxResult:
    """Best two-disk inner approximation of the wedge.

    Maximizes the overlap area between the origin disk of radius ``rho`` and
    a disk inscribed in the cone (center ``x_t``, radius ``|x_t| sin(theta)``)
    over ``x_t`` in the bracket where the two circles cross, by a 1000-point
    grid plus bounded 1-D refinement (absolute tolerance 1e-6 on ``x_t``).
    Requires ``theta < pi/4`` and ``rho > ell*(3 + 2*sqrt(2))`` so that the
    overlap stays left of ``-ell``; the right-end condition
    ``x_t*(1 - sin(theta)) <= -ell`` is re-checked on the result and a
    warning is issued (approximation still returned) if it fails.
    """
    _chk(0 < theta < math.pi / 4, "inner approximation requires theta in (0, pi/4)")
    _chk(rho > ell * (3 + 2 * math.sqrt(2)), "inner approximation requires rho > ell*(3+2*sqrt(2))")
    st, ct = math.sin(theta), math.cos(theta)
    lo = -rho / ct
    hi = -rho / (1 + st)
    grid = np.linspace(lo, hi, 1000)
    vals = np.array([_overlap_half_area(x, rho, theta) for x in grid])
    k = int(np.argmax(vals))
    blo = grid[max(0, k - 1)]
    bhi = grid[min(len(grid) - 1, k + 1)]
    res = scipy.optimize.minimize_scalar(
        lambda x: -_overlap_half_area(x, rho, theta),
        bounds=(blo, bhi),
        method="bounded",
        options={"xatol": 1e-6},
    )
    xt = float(res.x)
    area = 2.0 * _overlap_half_area(xt, rho, theta)
    right_end_ok = xt * (1 - st) <= -ell
    if not right_end_ok:
        warnings.warn(
            "inner approximation disk extends right of -ell; result returned anyway",
            stacklevel=2,
        )
    inter = RegionIntersection(
        (make_region("disk", 0.0, rho), make_region("disk", xt, abs(xt) * st))
    )
    return InnerApproxResult(inter, xt, area, right_end_ok)


def dt_disk_spec(center_x: float, radius: float) -> LmiRegion:
    """Disk spec used as the discrete-time performance inner approximation."""
    return make_region("disk", center_x, radius)


# -- serialization -------------------------------------------------------------


def region_to_dict(region: LmiRegion) -> dict:
    if region.kind is not None:
        return {"kind": region.kind, "params": list(region.params)}
    return {
        "s": region.s,
        "alpha": region.alpha.tolist(),
        "beta": region.beta.tolist(),
        "label": region.label,
    }


def region_from_dict(d: dict) -> LmiRegion:
    if "kind" in d:
        s = d.get("s")
        return make_region(d["kind"], *d.get("params", []), s=s)
    return LmiRegion(np.array(d["alpha"]), np.array(d["beta"]), d.get("label", ""))


def intersection_to_dict(target: RegionIntersection) -> dict:
    return {"regions": [region_to_dict(r) for r in target.as_intersection()]}


def intersection_from_dict(d: dict) -> RegionIntersection:
    return RegionIntersection(tuple(region_from_dict(r) for r in d["regions"]))


def region_to_json(region, path: str) -> None:
    obj = intersection_to_dict(region) if isinstance(region, RegionIntersection) else region_to_dict(region)
    with open(path, "w") as f:
        json.dump(obj, f, indent=1)


def region_from_json(path: str):
    with open(path) as f:
        d = json.load(f)
    if "regions" in d:
        return intersection_from_dict(d)
    return region_from_dict(d)


# -- boundary sampling ---------------------------------------------------------


def _find_interior_point(target: RegionIntersection, r_max: float) -> complex | None:
    """Coarse search for a well-centered interior point.

    The margin is normalized by 1 + |z|^2 so unbounded regions (halfplanes,
    cones) yield a point near the interesting geometry instead of running off
    to infinity.
    """
    best = None
    best_score = 0.0
    for radius in np.geomspace(1e-3, min(r_max, 20.0), 25):
        for ang in np.linspace(0, 2 * math.pi, 72, endpoint=False):
            z = radius * complex(math.cos(ang), math.sin(ang))
            m = min(membership_margin(r, z) for r in target)
            score = m / (1.0 + abs(z) ** 2)
            if score > best_score:
                best, best_score = z, score
    z = 0.0 + 0.0j
    if min(membership_margin(r, z) for r in target) > best_score:
        best = z
    return best


def boundary_points(
    target,
    n_points: int = 360,
    r_max: float = 1e3,
    interior: complex | None = None,
) -> np.ndarray:
    """Sample the boundary of a region intersection as complex points.

    Casts rays from an interior point (found by coarse search when not
    given); along each ray the worst-case pencil eigenvalue crosses zero
    exactly once by convexity, and the crossing is located by root finding.
    Directions along which the set is unbounded (within ``r_max``) are
    skipped, so halfplanes and cones yield their finite boundary portions.
    """
    target = target.as_intersection()
    if interior is None:
        interior = _find_interior_point(target, r_max)
    if interior is None:
        return np.empty(0, dtype=complex)

    def worst(z: complex) -> float:
        return max(-membership_margin(r, z) for r in target)

    pts = []
    for ang in np.linspace(0, 2 * math.pi, n_points, endpoint=False):
        d = complex(math.cos(ang), math.sin(ang))
        if worst(interior + r_max * d) < 0:
            continue  # unbounded (or boundary beyond horizon) this way
        f = lambda rr: worst(interior + rr * d)
        r0 = scipy.optimize.brentq(f, 0.0, r_max, xtol=1e-13, rtol=1e-15)
        pts.append(interior + r0 * d)
    return np.array(pts, dtype=complex)
