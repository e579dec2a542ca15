"""Grids, step functions and step graphons on [0, 1].

Every graphon handled by the library is a step kernel: constant on the
products I_a x I_b of the cells of an interval grid.  Cells are half-open
[b_{i-1}, b_i) except the last one, which also contains 1.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

SYMMETRY_WARN_TOL = 1e-12


class ValidationError(ValueError):
    """Invalid input data; carries a short machine-readable code."""

    def __init__(self, message: str, code: str = "invalid-input"):
        super().__init__(message)
        self.code = code


class QuadratureError(RuntimeError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Grid:
    breakpoints: np.ndarray

    def __post_init__(self):
        b = np.array(self.breakpoints, dtype=float).ravel()
        if b.size < 2:
            raise ValidationError("a grid needs at least the breakpoints 0 and 1", "bad-grid")
        if b[0] != 0.0 or b[-1] != 1.0:
            raise ValidationError("grid must start at 0 and end at 1", "bad-grid")
        if not np.all(np.diff(b) > 0):
            raise ValidationError("grid breakpoints must be strictly increasing", "bad-grid")
        object.__setattr__(self, "breakpoints", _frozen(b))

    @classmethod
    def uniform(cls, n: int) -> "Grid":
        if n < 1:
            raise ValidationError("number of cells must be positive", "bad-grid")
        return cls(np.arange(n + 1) / n)

    @property
    def n_cells(self) -> int:
        return self.breakpoints.size - 1

    @cached_property
    def masses(self) -> np.ndarray:
        return _frozen(np.diff(self.breakpoints))

    def is_uniform(self) -> bool:
        n = self.n_cells
        return bool(np.array_equal(self.breakpoints, np.arange(n + 1) / n))

    def exact_masses(self) -> list[Fraction]:
        """Cell lengths as exact rationals.

        Uniform grids report 1/n exactly; other grids use the exact binary
        value of each float breakpoint.
        """
        if self.is_uniform():
            return [Fraction(1, self.n_cells)] * self.n_cells
        b = [Fraction(float(x)) for x in self.breakpoints]
        return [hi - lo for lo, hi in zip(b[:-1], b[1:])]

    def cell_of(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        return np.clip(idx, 0, self.n_cells - 1)

    def midpoints(self) -> np.ndarray:
        b = self.breakpoints
        return 0.5 * (b[:-1] + b[1:])

    def contains(self, other: "Grid") -> bool:
        """True if every breakpoint of ``other`` is a breakpoint of this grid."""
        return bool(np.all(np.isin(other.breakpoints, self.breakpoints)))

    def cell_map(self, coarse: "Grid") -> np.ndarray:
        """Index of the ``coarse`` cell containing each cell of this grid."""
        if not self.contains(coarse):
            raise ValidationError("grid is not a refinement of the target grid", "not-refinement")
        return coarse.cell_of(self.midpoints())

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return np.array_equal(self.breakpoints, other.breakpoints)

    def __hash__(self):
        return hash(self.breakpoints.tobytes())

    def __repr__(self):
        return f"Grid(n_cells={self.n_cells})"


def common_refinement(*grids: Grid) -> Grid:
    if len(grids) == 1:
        return grids[0]
    first = grids[0]
    if all(g == first for g in grids[1:]):
        return first
    return Grid(np.unique(np.concatenate([g.breakpoints for g in grids])))


@dataclass(frozen=True, eq=False)
class StepFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size != self.grid.n_cells:
            raise ValidationError(
                f"expected {self.grid.n_cells} values, got {v.size}", "dimension-mismatch"
            )
        if not np.all(np.isfinite(v)):
            raise ValidationError("step function values must be finite", "non-finite")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "StepFunction":
        return cls(grid, np.full(grid.n_cells, float(c)))

    def refine(self, grid: Grid) -> "StepFunction":
        if grid == self.grid:
            return self
        return StepFunction(grid, self.values[grid.cell_map(self.grid)])

    def integral(self) -> float:
        return float(self.grid.masses @ self.values)

    def inner(self, other: "StepFunction") -> float:
        a, b = align(self, other)
        return float(np.sum(a.grid.masses * a.values * b.values))

    def norm2(self) -> float:
        return float(self.grid.masses @ self.values**2)

    def norm(self) -> float:
        return float(np.sqrt(self.norm2()))

    def __call__(self, x):
        return self.values[self.grid.cell_of(x)]

    def __add__(self, other: "StepFunction") -> "StepFunction":
        a, b = align(self, other)
        return StepFunction(a.grid, a.values + b.values)

    def __sub__(self, other: "StepFunction") -> "StepFunction":
        a, b = align(self, other)
        return StepFunction(a.grid, a.values - b.values)

    def __mul__(self, c: float) -> "StepFunction":
        return StepFunction(self.grid, self.values * float(c))

    __rmul__ = __mul__


def align(*objs):
    """Refine step objects (functions or graphons) onto their common grid."""
    grid = common_refinement(*(o.grid for o in objs))
    return tuple(o.refine(grid) for o in objs)


def sup_norm_diff(f: StepFunction, g: StepFunction) -> float:
    """Essential sup of |f - g| for two step functions."""
    a, b = align(f, g)
    return float(np.max(np.abs(a.values - b.values)))


@dataclass(frozen=True, eq=False)
class StepGraphon:
    """Symmetric step kernel.

    ``mode`` is "graphon" when all values lie in [0, 1] and "kernel" for
    signed differences with values in [-1, 1].
    """

    grid: Grid
    values: np.ndarray
    mode: str = "graphon"
    symmetry_correction: float = field(default=0.0, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        k = self.grid.n_cells
        if v.shape != (k, k):
            raise ValidationError(
                f"values must be a {k}x{k} matrix, got shape {v.shape}", "dimension-mismatch"
            )
        if not np.all(np.isfinite(v)):
            raise ValidationError("graphon values must be finite", "non-finite")
        sym = 0.5 * (v + v.T)
        correction = float(np.max(np.abs(v - sym))) if k else 0.0
        if correction > SYMMETRY_WARN_TOL:
            warnings.warn(f"graphon values symmetrized (max correction {correction:.3g})")
        if np.any(np.abs(sym) > 1.0):
            raise ValidationError("kernel entries must lie in [-1, 1]", "out-of-range")
        if self.mode not in ("graphon", "kernel"):
            raise ValidationError(f"unknown mode {self.mode!r}", "bad-mode")
        if self.mode == "graphon" and np.any(sym < 0.0):
            raise ValidationError("graphon entries must lie in [0, 1]", "out-of-range")
        object.__setattr__(self, "values", _frozen(sym))
        object.__setattr__(self, "symmetry_correction", max(correction, self.symmetry_correction))

    @property
    def n_cells(self) -> int:
        return self.grid.n_cells

    @property
    def symmetrized(self) -> bool:
        return self.symmetry_correction > SYMMETRY_WARN_TOL

    def refine(self, grid: Grid) -> "StepGraphon":
        if grid == self.grid:
            return self
        idx = grid.cell_map(self.grid)
        return StepGraphon(grid, self.values[np.ix_(idx, idx)], self.mode)

    def degree(self) -> StepFunction:
        return degree_function(self)

    def __call__(self, x, y):
        return self.values[self.grid.cell_of(x), self.grid.cell_of(y)]

    def __sub__(self, other: "StepGraphon") -> "StepGraphon":
        a, b = align(self, other)
        return StepGraphon(a.grid, a.values - b.values, "kernel")

    def __add__(self, other: "StepGraphon") -> "StepGraphon":
        a, b = align(self, other)
        return StepGraphon(a.grid, a.values + b.values, "kernel")

    def __neg__(self) -> "StepGraphon":
        return StepGraphon(self.grid, -self.values, "kernel")

    def scaled(self, c: float) -> "StepGraphon":
        return StepGraphon(self.grid, float(c) * self.values, "kernel")

    def as_kernel(self) -> "StepGraphon":
        return StepGraphon(self.grid, self.values, "kernel")

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(self.grid.breakpoints.tobytes())
        h.update(self.values.tobytes())
        h.update(self.mode.encode())
        return h.hexdigest()


def make_step_graphon(grid: Grid, values, mode: Optional[str] = None) -> StepGraphon:
    """Build a step graphon, inferring the mode from the value range when not given."""
    v = np.asarray(values, dtype=float)
    if mode is None:
        sym = 0.5 * (v + v.T) if v.ndim == 2 and v.shape[0] == v.shape[1] else v
        mode = "graphon" if np.all((sym >= 0.0) & (sym <= 1.0)) else "kernel"
    return StepGraphon(grid, v, mode)


def constant_graphon(p: float, n_cells: int = 1) -> StepGraphon:
    return StepGraphon(Grid.uniform(n_cells), np.full((n_cells, n_cells), float(p)))


def sbm_graphon(sizes: Sequence[float], block_matrix) -> StepGraphon:
    """Stochastic block model graphon with block proportions ``sizes``."""
    sizes = np.asarray(sizes, dtype=float)
    if np.any(sizes <= 0):
        raise ValidationError("block sizes must be positive", "bad-grid")
    b = np.concatenate([[0.0], np.cumsum(sizes / sizes.sum())])
    b[-1] = 1.0
    return StepGraphon(Grid(b), block_matrix)


def degree_function(w: StepGraphon) -> StepFunction:
    return StepFunction(w.grid, w.values @ w.grid.masses)


def _overlaps(target: Grid, source: Grid) -> np.ndarray:
    """Matrix of lengths |target cell a  intersect  source cell b|."""
    tb, sb = target.breakpoints, source.breakpoints
    lo = np.maximum(tb[:-1, None], sb[None, :-1])
    hi = np.minimum(tb[1:, None], sb[None, 1:])
    return np.clip(hi - lo, 0.0, None)


@dataclass(frozen=True)
class AnalyticGraphon:
    """Pointwise-evaluable graphon given by a vectorized closed form.

    ``degree`` is the closed-form degree function when known.
    """

    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    name: str = "analytic"
    params: tuple = ()
    degree: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, x, y):
        return self.func(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def degree_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.degree is not None:
            return np.broadcast_to(self.degree(x), x.shape).astype(float)
        # composite Gauss-Legendre in y: 64 panels x 16 nodes
        nodes, weights = np.polynomial.legendre.leggauss(16)
        panels = np.linspace(0.0, 1.0, 65)
        h = np.diff(panels)[:, None]
        ys = (panels[:-1, None] + 0.5 * h * (nodes[None, :] + 1.0)).ravel()
        ws = (0.5 * h * weights[None, :]).ravel()
        vals = self.func(x[..., None], ys)
        return np.asarray(vals @ ws, dtype=float)


CLOSED_FORMS = {
    "xy": (lambda x, y: x * y, lambda x: 0.5 * x),
    "mean": (lambda x, y: 0.5 * (x + y), lambda x: 0.5 * x + 0.25),
    "max": (lambda x, y: np.maximum(x, y), lambda x: 0.5 * (1.0 + x * x)),
    "min": (lambda x, y: np.minimum(x, y), lambda x: x - 0.5 * x * x),
    "exp": (lambda x, y: np.exp(-np.abs(x - y)), None),
}


def closed_form_graphon(name: str, **params) -> AnalyticGraphon | StepGraphon:
    """Library of named graphons.

    ``constant`` (param ``p``) and ``sbm`` (params ``sizes``, ``matrix``)
    are returned as exact step graphons.
    """
    if name == "constant":
        return constant_graphon(float(params.get("p", 0.5)))
    if name == "sbm":
        return sbm_graphon(params["sizes"], params["matrix"])
    if name == "power":
        a = float(params.get("a", 1.0))
        return AnalyticGraphon(
            lambda x, y: (x * y) ** a, name, (("a", a),), lambda x: x**a / (a + 1.0)
        )
    if name not in CLOSED_FORMS:
        raise ValidationError(f"unknown closed-form graphon {name!r}", "unknown-graphon")
    func, deg = CLOSED_FORMS[name]
    return AnalyticGraphon(func, name, tuple(sorted(params.items())), deg)


def _gl_cell_means(func, x0, x1, y0, y1, diag, order: int) -> np.ndarray:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    t = 0.5 * (nodes + 1.0)
    wt = 0.5 * weights
    hx, hy = (x1 - x0)[:, None, None], (y1 - y0)[:, None, None]
    s, u = t[None, :, None], t[None, None, :]
    # diagonal squares: twice the lower triangle, x = x0 + h s, y = y0 + h s u,
    # which keeps kinks along x = y on the boundary of the integration domain
    xs = x0[:, None, None] + hx * s
    ys = np.where(diag[:, None, None], y0[:, None, None] + hy * s * u, y0[:, None, None] + hy * u)
    xs = np.broadcast_to(xs, ys.shape)
    jac = np.where(diag[:, None, None], 2.0 * s, 1.0)
    vals = np.broadcast_to(func(xs, ys), ys.shape) * jac
    return np.einsum("rij,i,j->r", vals, wt, wt)


def _adaptive_means(func, x0, x1, y0, y1, diag, tol: float, depth: int, max_depth: int) -> np.ndarray:
    lo = _gl_cell_means(func, x0, x1, y0, y1, diag, 8)
    hi = _gl_cell_means(func, x0, x1, y0, y1, diag, 16)
    bad = np.abs(hi - lo) > tol
    if np.any(bad):
        if depth >= max_depth:
            raise QuadratureError(
                f"cell averages did not converge to {tol:g} after {max_depth} subdivisions"
            )
        bx0, bx1, by0, by1, bd = x0[bad], x1[bad], y0[bad], y1[bad], diag[bad]
        xm, ym = 0.5 * (bx0 + bx1), 0.5 * (by0 + by1)
        off = np.zeros_like(bd)
        sub = [
            _adaptive_means(func, a0, a1, c0, c1, d, tol, depth + 1, max_depth)
            for a0, a1, c0, c1, d in (
                (bx0, xm, by0, ym, bd),
                (xm, bx1, ym, by1, bd),
                (bx0, xm, ym, by1, off),
                (xm, bx1, by0, ym, off),
            )
        ]
        hi = hi.copy()
        hi[bad] = 0.25 * (sub[0] + sub[1] + sub[2] + sub[3])
    return hi


def average_graphon(w, n: int, tol: float = 1e-10, max_depth: int = 12) -> StepGraphon:
    """Average ``w`` over the squares of the uniform n-grid.

    Step inputs are averaged in closed form; analytic inputs use adaptive
    tensor Gauss-Legendre quadrature with absolute tolerance ``tol`` on
    each cell mean.
    """
    if n < 1:
        raise ValidationError("n must be positive", "bad-n")
    grid = Grid.uniform(n)
    if isinstance(w, StepGraphon):
        if w.grid == grid:
            return w
        ov = _overlaps(grid, w.grid) * n
        vals = ov @ w.values @ ov.T
        if w.mode == "graphon":
            vals = np.clip(vals, 0.0, 1.0)
        return StepGraphon(grid, vals, w.mode)
    iu, ju = np.triu_indices(n)
    b = grid.breakpoints
    means = np.empty(iu.size)
    chunk = 8192
    for s in range(0, iu.size, chunk):
        i, j = iu[s:s + chunk], ju[s:s + chunk]
        means[s:s + chunk] = _adaptive_means(
            w, b[i], b[i + 1], b[j], b[j + 1], i == j, tol, 0, max_depth
        )
    vals = np.empty((n, n))
    vals[iu, ju] = means
    vals[ju, iu] = means
    return StepGraphon(grid, np.clip(vals, 0.0, 1.0))


def analytic_sup_degree_gap(d_n: StepFunction, w: AnalyticGraphon, samples: int = 64) -> float:
    """sup_x |d_n(x) - d_w(x)| with d_w evaluated in closed form.

    The sup over each cell is taken over its two endpoints and ``samples``
    interior points; this is exact whenever d_w is monotone on every cell.
    """
    b = d_n.grid.breakpoints
    t = np.linspace(0.0, 1.0, samples + 2)
    xs = b[:-1, None] + np.diff(b)[:, None] * t[None, :]
    return float(np.max(np.abs(d_n.values[:, None] - w.degree_at(xs))))


def is_connected(w: StepGraphon) -> bool:
    """Connectivity of a step graphon in the sense of positive cut integrals.

    With two or more cells this is connectivity of the cell graph (i ~ j for
    i != j when w_ij > 0).  A single cell is connected iff its value is positive.
    """
    k = w.n_cells
    if k == 1:
        return bool(w.values[0, 0] > 0)
    parent = list(range(k))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    rows, cols = np.nonzero(np.triu(w.values, 1) > 0)
    components = k
    for a, b in zip(rows, cols):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            components -= 1
    return components == 1
