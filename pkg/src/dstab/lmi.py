"""Symmetric matrix expressions affine in scalar decision variables.

Matrix decision variables (symmetric, rectangular, scalar) are registered in a
:class:`VariableSpace`, which assigns each free scalar entry an index.  A
symmetric k-by-k variable is parameterized by its packed lower triangle
(k(k+1)/2 scalars), so symmetry holds by construction and no equality
constraints are needed.  :class:`AffineMatrixExpr` represents a matrix-valued
affine function of those scalars and supports the operations needed to
assemble block LMIs: addition, constant multiplication, Kronecker products
with constant factors, transposition-symmetrization and block stacking.

``scalarize`` turns a list of expressions required to be negative definite
into a block-diagonal semidefinite feasibility problem consumable by
:mod:`dstab.solve`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "VariableSpace",
    "MatrixVar",
    "AffineMatrixExpr",
    "const_expr",
    "kron",
    "trsym",
    "vstack",
    "block",
    "block2x2",
    "sum_exprs",
    "scalarize",
    "SdpBlock",
    "SdpProblem",
    "export_sdpa",
]


@dataclass(frozen=True)
class MatrixVar:
    """Handle for a declared matrix/scalar decision variable."""

    name: str
    kind: str  # "symmetric" | "rectangular" | "scalar"
    shape: tuple[int, int]
    offset: int  # first scalar index in the variable space
    size: int  # number of scalar entries


class VariableSpace:
    """Registry of scalar decision variables backing matrix variables."""

    def __init__(self) -> None:
        self._vars: list[MatrixVar] = []
        self._by_name: dict[str, MatrixVar] = {}
        self._nonneg: list[bool] = []

    @property
    def nvars(self) -> int:
        return len(self._nonneg)

    @property
    def variables(self) -> list[MatrixVar]:
        return list(self._vars)

    @property
    def nonneg_mask(self) -> np.ndarray:
        return np.array(self._nonneg, dtype=bool)

    def _register(self, var: MatrixVar, nonneg: bool = False) -> MatrixVar:
        if var.name in self._by_name:
            raise ValueError(f"variable name {var.name!r} already declared")
        self._vars.append(var)
        self._by_name[var.name] = var
        self._nonneg.extend([nonneg] * var.size)
        return var

    def symmetric(self, name: str, k: int) -> MatrixVar:
        """Declare a symmetric k-by-k variable (packed lower triangle)."""
        if k < 1:
            raise ValueError("symmetric variable dimension must be >= 1")
        return self._register(
            MatrixVar(name, "symmetric", (k, k), self.nvars, k * (k + 1) // 2)
        )

    def rectangular(self, name: str, rows: int, cols: int) -> MatrixVar:
        if rows < 1 or cols < 1:
            raise ValueError("rectangular variable dimensions must be >= 1")
        return self._register(
            MatrixVar(name, "rectangular", (rows, cols), self.nvars, rows * cols)
        )

    def scalar(self, name: str, nonneg: bool = False) -> MatrixVar:
        return self._register(MatrixVar(name, "scalar", (1, 1), self.nvars, 1), nonneg)

    def value(self, var: MatrixVar, x: np.ndarray) -> np.ndarray:
        """Materialize a variable's numeric value from a scalar assignment."""
        seg = np.asarray(x, dtype=float)[var.offset : var.offset + var.size]
        if var.kind == "scalar":
            return float(seg[0])
        if var.kind == "rectangular":
            return seg.reshape(var.shape)
        k = var.shape[0]
        M = np.zeros((k, k))
        p = 0
        for i in range(k):
            for j in range(i + 1):
                M[i, j] = seg[p]
                M[j, i] = seg[p]
                p += 1
        return M

    def values(self, x: np.ndarray) -> dict[str, np.ndarray]:
        return {v.name: self.value(v, x) for v in self._vars}


class AffineMatrixExpr:
    """Matrix-valued affine function of the scalar decision variables.

    Stored as a constant term plus a sparse map from scalar-variable index to
    a constant coefficient matrix, all of a common shape.
    """

    __array_priority__ = 1000.0  # make ndarray @ expr defer to __rmatmul__

    def __init__(self, shape, const=None, coeffs=None):
        self.shape = (int(shape[0]), int(shape[1]))
        self.const = (
            np.zeros(self.shape) if const is None else np.asarray(const, dtype=float)
        )
        if self.const.shape != self.shape:
            raise ValueError("constant term shape mismatch")
        self.coeffs: dict[int, np.ndarray] = {} if coeffs is None else coeffs

    # -- construction -----------------------------------------------------

    @staticmethod
    def from_var(var: MatrixVar) -> "AffineMatrixExpr":
        """Expression equal to the declared variable itself."""
        r, c = var.shape
        coeffs: dict[int, np.ndarray] = {}
        if var.kind == "scalar":
            coeffs[var.offset] = np.ones((1, 1))
        elif var.kind == "rectangular":
            for i in range(r):
                for j in range(c):
                    E = np.zeros((r, c))
                    E[i, j] = 1.0
                    coeffs[var.offset + i * c + j] = E
        else:  # symmetric, packed lower triangle
            p = 0
            for i in range(r):
                for j in range(i + 1):
                    E = np.zeros((r, c))
                    E[i, j] = 1.0
                    E[j, i] = 1.0
                    coeffs[var.offset + p] = E
                    p += 1
        return AffineMatrixExpr(var.shape, None, coeffs)

    @staticmethod
    def scaled_const(var: MatrixVar, M: np.ndarray) -> "AffineMatrixExpr":
        """Expression ``x * M`` for a scalar variable ``x``."""
        if var.kind != "scalar":
            raise ValueError("scaled_const requires a scalar variable")
        M = np.asarray(M, dtype=float)
        return AffineMatrixExpr(M.shape, None, {var.offset: M.copy()})

    def copy(self) -> "AffineMatrixExpr":
        return AffineMatrixExpr(
            self.shape, self.const.copy(), {i: c.copy() for i, c in self.coeffs.items()}
        )

    # -- arithmetic --------------------------------------------------------

    def _binary(self, other, sign: float) -> "AffineMatrixExpr":
        other = as_expr(other, self.shape)
        if other.shape != self.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        out = self.copy()
        out.const = out.const + sign * other.const
        for i, c in other.coeffs.items():
            if i in out.coeffs:
                out.coeffs[i] = out.coeffs[i] + sign * c
            else:
                out.coeffs[i] = sign * c
        return out

    def __add__(self, other):
        return self._binary(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, -1.0)

    def __rsub__(self, other):
        return as_expr(other, self.shape) - self

    def __neg__(self):
        return self * (-1.0)

    def __mul__(self, scalar: float) -> "AffineMatrixExpr":
        s = float(scalar)
        return AffineMatrixExpr(
            self.shape,
            s * self.const,
            {i: s * c for i, c in self.coeffs.items()},
        )

    __rmul__ = __mul__

    def __matmul__(self, M: np.ndarray) -> "AffineMatrixExpr":
        M = np.asarray(M, dtype=float)
        return AffineMatrixExpr(
            (self.shape[0], M.shape[1]),
            self.const @ M,
            {i: c @ M for i, c in self.coeffs.items()},
        )

    def __rmatmul__(self, M: np.ndarray) -> "AffineMatrixExpr":
        M = np.asarray(M, dtype=float)
        return AffineMatrixExpr(
            (M.shape[0], self.shape[1]),
            M @ self.const,
            {i: M @ c for i, c in self.coeffs.items()},
        )

    @property
    def T(self) -> "AffineMatrixExpr":
        return AffineMatrixExpr(
            (self.shape[1], self.shape[0]),
            self.const.T.copy(),
            {i: c.T.copy() for i, c in self.coeffs.items()},
        )

    # -- evaluation --------------------------------------------------------

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = self.const.copy()
        for i, c in self.coeffs.items():
            xi = x[i]
            if xi != 0.0:
                out += xi * c
        return out


def as_expr(obj, shape=None) -> AffineMatrixExpr:
    if isinstance(obj, AffineMatrixExpr):
        return obj
    M = np.atleast_2d(np.asarray(obj, dtype=float))
    if shape is not None and M.shape != tuple(shape):
        raise ValueError(f"constant shape {M.shape} incompatible with {shape}")
    return AffineMatrixExpr(M.shape, M, {})


def const_expr(M) -> AffineMatrixExpr:
    return as_expr(M)


def kron(M: np.ndarray, e) -> AffineMatrixExpr:
    """Kronecker product of a constant left factor with an affine expression."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    e = as_expr(e)
    shape = (M.shape[0] * e.shape[0], M.shape[1] * e.shape[1])
    return AffineMatrixExpr(
        shape,
        np.kron(M, e.const),
        {i: np.kron(M, c) for i, c in e.coeffs.items()},
    )


def trsym(e) -> AffineMatrixExpr:
    """Transposition-symmetrization ``e + e.T`` of a square expression."""
    e = as_expr(e)
    if e.shape[0] != e.shape[1]:
        raise ValueError("trsym requires a square expression")
    return e + e.T


def sym_kron_pair(beta: np.ndarray, L) -> AffineMatrixExpr:
    """``kron(beta, L) + kron(beta.T, L.T)``, symmetric by construction."""
    return trsym(kron(beta, as_expr(L)))


def vstack(exprs) -> AffineMatrixExpr:
    exprs = [as_expr(e) for e in exprs]
    cols = exprs[0].shape[1]
    if any(e.shape[1] != cols for e in exprs):
        raise ValueError("vstack requires equal column counts")
    rows = sum(e.shape[0] for e in exprs)
    out = AffineMatrixExpr((rows, cols))
    r0 = 0
    for e in exprs:
        r1 = r0 + e.shape[0]
        out.const[r0:r1, :] = e.const
        for i, c in e.coeffs.items():
            if i not in out.coeffs:
                out.coeffs[i] = np.zeros((rows, cols))
            out.coeffs[i][r0:r1, :] = c
        r0 = r1
    return out


def block(cells) -> AffineMatrixExpr:
    """Assemble a block matrix from a grid of expressions/constants/None.

    ``None`` cells are zero blocks; their sizes are inferred from the other
    cells in the same row and column.
    """
    nrows = len(cells)
    ncols = len(cells[0])
    if any(len(row) != ncols for row in cells):
        raise ValueError("ragged block grid")
    grid = [[None if c is None else as_expr(c) for c in row] for row in cells]
    row_h = [None] * nrows
    col_w = [None] * ncols
    for i in range(nrows):
        for j in range(ncols):
            if grid[i][j] is not None:
                r, c = grid[i][j].shape
                if row_h[i] is None:
                    row_h[i] = r
                elif row_h[i] != r:
                    raise ValueError(f"row {i} height mismatch")
                if col_w[j] is None:
                    col_w[j] = c
                elif col_w[j] != c:
                    raise ValueError(f"column {j} width mismatch")
    if any(h is None for h in row_h) or any(w is None for w in col_w):
        raise ValueError("cannot infer size of an all-None row/column")
    rows = sum(row_h)
    cols = sum(col_w)
    out = AffineMatrixExpr((rows, cols))
    r0 = 0
    for i in range(nrows):
        c0 = 0
        for j in range(ncols):
            e = grid[i][j]
            if e is not None:
                r1, c1 = r0 + row_h[i], c0 + col_w[j]
                out.const[r0:r1, c0:c1] = e.const
                for k, coef in e.coeffs.items():
                    if k not in out.coeffs:
                        out.coeffs[k] = np.zeros((rows, cols))
                    out.coeffs[k][r0:r1, c0:c1] = coef
            c0 += col_w[j]
        r0 += row_h[i]
    return out


def block2x2(a11, a12, a22) -> AffineMatrixExpr:
    """Symmetric 2x2 block assembly ``[[a11, a12], [a12.T, a22]]``."""
    a12 = as_expr(a12)
    return block([[a11, a12], [a12.T, a22]])


def sum_exprs(exprs) -> AffineMatrixExpr:
    """Sum a list of same-shape expressions in a single pass.

    Equivalent to repeated ``+`` but linear instead of quadratic in the list
    length; used where hundreds of terms are accumulated.
    """
    exprs = [as_expr(e) for e in exprs]
    shape = exprs[0].shape
    out = AffineMatrixExpr(shape)
    for e in exprs:
        if e.shape != shape:
            raise ValueError("sum_exprs requires equal shapes")
        out.const += e.const
        for i, c in e.coeffs.items():
            if i in out.coeffs:
                out.coeffs[i] += c
            else:
                out.coeffs[i] = c.copy()
    return out


# -- scalarization ---------------------------------------------------------


@dataclass
class SdpBlock:
    """One negative-definiteness constraint in stacked coefficient form."""

    dim: int
    C: np.ndarray  # constant term, symmetric (dim, dim)
    idx: np.ndarray  # (k,) scalar-variable indices with nonzero coefficients
    A: np.ndarray  # (k, dim, dim) symmetric coefficient matrices


@dataclass
class SdpProblem:
    """Block-diagonal semidefinite feasibility problem.

    Feasibility means: there is an assignment x with every block satisfying
    ``C_j + sum_i x_i A_ji + margin_j*I  ⪯ 0`` (strictness via additive
    per-block margins) and nonnegativity of the flagged scalar variables.
    """

    blocks: list[SdpBlock]
    nvars: int
    nonneg: np.ndarray  # (nvars,) bool
    margins: np.ndarray  # (nblocks,) additive strictness per block
    scale: float
    space: VariableSpace = field(repr=False, default=None)

    @property
    def margin(self) -> float:
        """Smallest per-block margin (back-compat scalar view)."""
        return float(self.margins.min())

    def residuals(self, x: np.ndarray) -> np.ndarray:
        """Largest eigenvalue of each constraint block at the assignment."""
        out = np.empty(len(self.blocks))
        for j, b in enumerate(self.blocks):
            M = b.C + np.tensordot(x[b.idx], b.A, axes=1)
            out[j] = np.linalg.eigvalsh(M)[-1]
        return out


def scalarize(constraints, space: VariableSpace, margin: float | None = None) -> SdpProblem:
    """Convert expressions required ``≺ 0`` into a feasibility problem.

    Strictness margins default to ``1e-11 * max(1, ||C_j||_F)`` per block: a
    relative floor just above solver accuracy.  (A margin proportional to the
    largest constant across blocks looks natural but strangles mixed-scale
    programs, where a data Gram of norm ~1e3 and a radius term of norm ~1e-4
    share one block and the achievable strict slack is tiny.)  An explicit
    ``margin`` is applied uniformly to every block.
    """
    if not constraints:
        raise ValueError("empty constraint list")
    if margin is not None and margin <= 0:
        raise ValueError("margin must be positive")
    blocks = []
    margins = []
    scale = 1.0
    for e in constraints:
        e = as_expr(e)
        if e.shape[0] != e.shape[1]:
            raise ValueError("constraints must be square expressions")
        d = e.shape[0]
        C = 0.5 * (e.const + e.const.T)
        if not np.allclose(e.const, C, rtol=0, atol=1e-10 * max(1.0, np.abs(C).max())):
            raise ValueError("constraint constant term is not symmetric")
        idx = np.array(sorted(e.coeffs.keys()), dtype=int)
        A = np.empty((len(idx), d, d))
        for p, i in enumerate(idx):
            A[p] = 0.5 * (e.coeffs[i] + e.coeffs[i].T)
        blocks.append(SdpBlock(d, C, idx, A))
        cnorm = float(np.linalg.norm(C, "fro"))
        scale = max(scale, cnorm)
        margins.append(margin if margin is not None else 1e-11 * max(1.0, cnorm))
    return SdpProblem(
        blocks, space.nvars, space.nonneg_mask, np.array(margins), scale, space
    )


def export_sdpa(problem: SdpProblem, path: str) -> None:
    """Write the problem in a sparse SDPA-like text format.

    Layout (documented for external cross-checks):
      line 1: nvars
      line 2: nblocks
      line 3: block dimensions (negative dim = diagonal/bound block)
      line 4: objective vector (zeros; pure feasibility)
      then one entry per line, ``matno blockno i j value`` (1-based, upper
      triangle) where matno 0 holds the constant ``C + margin*I`` per block
      and matno k holds the coefficient of scalar variable k.  The encoded
      primal constraint is ``F0(block) + sum_k x_k Fk(block) ⪯ 0`` plus
      ``x_k >= 0`` for indices listed in the trailing ``*NONNEG`` line.
    """
    lines = [str(problem.nvars), str(len(problem.blocks))]
    lines.append(" ".join(str(b.dim) for b in problem.blocks))
    lines.append(" ".join("0" for _ in range(problem.nvars)))
    ents = []
    for bno, b in enumerate(problem.blocks, start=1):
        C = b.C + problem.margins[bno - 1] * np.eye(b.dim)
        for i in range(b.dim):
            for j in range(i, b.dim):
                if C[i, j] != 0.0:
                    ents.append(f"0 {bno} {i + 1} {j + 1} {float(C[i, j])!r}")
        for p, k in enumerate(b.idx):
            for i in range(b.dim):
                for j in range(i, b.dim):
                    v = float(b.A[p, i, j])
                    if v != 0.0:
                        ents.append(f"{k + 1} {bno} {i + 1} {j + 1} {v!r}")
    lines.extend(ents)
    nn = np.flatnonzero(problem.nonneg)
    lines.append("*NONNEG " + " ".join(str(i + 1) for i in nn))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def import_sdpa(path: str) -> SdpProblem:
    """Read back a problem written by :func:`export_sdpa` (round-trip checks)."""
    with open(path) as f:
        raw = [ln.strip() for ln in f if ln.strip()]
    nvars = int(raw[0])
    nblocks = int(raw[1])
    dims = [int(v) for v in raw[2].split()]
    nonneg = np.zeros(nvars, dtype=bool)
    mats: list[dict[int, np.ndarray]] = [dict() for _ in range(nblocks)]
    for ln in raw[4:]:
        if ln.startswith("*NONNEG"):
            for tok in ln.split()[1:]:
                nonneg[int(tok) - 1] = True
            continue
        k, bno, i, j, v = ln.split()
        k, bno, i, j = int(k), int(bno) - 1, int(i) - 1, int(j) - 1
        M = mats[bno].setdefault(k, np.zeros((dims[bno], dims[bno])))
        M[i, j] = float(v)
        M[j, i] = float(v)
    blocks = []
    for bno in range(nblocks):
        C = mats[bno].pop(0, np.zeros((dims[bno], dims[bno])))
        idx = np.array(sorted(mats[bno].keys()), dtype=int) - 1
        A = np.stack([mats[bno][k + 1] for k in idx]) if len(idx) else np.zeros((0, dims[bno], dims[bno]))
        blocks.append(SdpBlock(dims[bno], C, idx, A))
    # margin was folded into the exported constant; reconstruct with margin
    # already included and a nominally tiny residual margin.
    return SdpProblem(blocks, nvars, nonneg, 1e-12, 1.0, None)
