"""Discretized graphon operators and their spectral calculus.

A step graphon w on a grid acts on L^2[0,1] = (step functions) + (functions
with zero mean on every cell).  The two summands are invariant:

* on step functions the operators act through a k x k matrix;
* on cell-mean-zero functions T_w vanishes, so M_w and L_w act as
  multiplication by the cell degree d_i.

``DiscretizedOperator`` keeps both parts, so spectra, gaps and operator
norms refer to the operator on all of L^2, not only to its step block.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .core import Grid, StepFunction, StepGraphon, ValidationError, align, common_refinement

KINDS = ("adjacency", "laplacian", "degree-mult")
BOUNDARY_GUARD = 1e-8


class SpectralBoundaryError(ValidationError):
    def __init__(self, message: str):
        super().__init__(message, "spectral-boundary")


class EigensolverError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class DiscretizedOperator:
    """Operator K on L^2 of a union of cells with lengths ``masses``.

    ``matrix`` is the cell-action matrix: (K f)_i = sum_j matrix[i, j] f_j
    for step f.  ``intra`` is the multiplier on cell-mean-zero functions.
    """

    kind: str
    masses: np.ndarray
    matrix: np.ndarray
    intra: np.ndarray
    grid: Optional[Grid] = None

    def symmetric_form(self) -> np.ndarray:
        """D^{1/2} K D^{-1/2}, symmetric in the ordinary sense."""
        s = np.sqrt(self.masses)
        b = s[:, None] * self.matrix / s[None, :]
        return 0.5 * (b + b.T)

    def apply(self, values: np.ndarray) -> np.ndarray:
        return self.matrix @ values

    def quadratic(self, values: np.ndarray) -> float:
        """<K f, f> in weighted L^2."""
        return float(np.sum(self.masses * values * (self.matrix @ values)))


def _operator(kind: str, values: np.ndarray, masses: np.ndarray, grid=None) -> DiscretizedOperator:
    if kind not in KINDS:
        raise ValidationError(f"unknown operator kind {kind!r}", "bad-kind")
    t = values * masses[None, :]
    d = t.sum(axis=1)
    if kind == "adjacency":
        return DiscretizedOperator(kind, masses, t, np.zeros_like(d), grid)
    if kind == "degree-mult":
        return DiscretizedOperator(kind, masses, np.diag(d), d, grid)
    return DiscretizedOperator(kind, masses, np.diag(d) - t, d, grid)


def discretize(w: StepGraphon, kind: str = "laplacian") -> DiscretizedOperator:
    if w.mode != "graphon":
        raise ValidationError("operators are defined for graphons, not signed kernels", "kernel-mode")
    return _operator(kind, w.values, w.grid.masses, w.grid)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenpairs of the step block plus the multipliers on cell-mean-zero
    functions (each an eigenvalue of infinite multiplicity)."""

    kind: str
    eigenvalues: np.ndarray
    vectors: np.ndarray  # columns: eigenfunction values per cell, weighted-orthonormal
    masses: np.ndarray
    intra: np.ndarray
    grid: Optional[Grid] = None

    def eigenfunction(self, a: int) -> StepFunction:
        if self.grid is None:
            raise ValueError("decomposition of a restricted operator has no global grid")
        return StepFunction(self.grid, self.vectors[:, a])

    def eigenfunctions(self) -> list[StepFunction]:
        return [self.eigenfunction(a) for a in range(self.eigenvalues.size)]

    def spectrum(self) -> np.ndarray:
        """Sorted union of step eigenvalues and distinct cell multipliers."""
        return np.sort(np.concatenate([self.eigenvalues, np.unique(self.intra)]))

    def reconstruction_error(self, op: DiscretizedOperator) -> float:
        s = np.sqrt(self.masses)
        v = s[:, None] * self.vectors
        return float(np.linalg.norm(op.symmetric_form() - (v * self.eigenvalues) @ v.T, 2))


def _sign_fix(v: np.ndarray) -> np.ndarray:
    v = v.copy()
    tol = 1e-12 * np.max(np.abs(v), axis=0)
    for a in range(v.shape[1]):
        nz = np.flatnonzero(np.abs(v[:, a]) > tol[a])
        if nz.size and v[nz[0], a] < 0:
            v[:, a] = -v[:, a]
    return v


def eigendecompose(op: DiscretizedOperator) -> SpectralDecomposition:
    b = op.symmetric_form()
    try:
        lam, u = scipy.linalg.eigh(b)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise EigensolverError(str(exc)) from exc
    vec = _sign_fix(u / np.sqrt(op.masses)[:, None])
    return SpectralDecomposition(op.kind, lam, vec, op.masses, op.intra, op.grid)


class _DecompositionCache:
    """Small LRU cache keyed by graphon content hash; safe for concurrent use."""

    def __init__(self, maxsize: int = 32):
        self._data: OrderedDict = OrderedDict()
        self._lock = threading.Lock()
        self.maxsize = maxsize

    def get(self, w: StepGraphon, kind: str) -> SpectralDecomposition:
        key = (w.content_hash(), kind)
        with self._lock:
            if key in self._data:
                self._data.move_to_end(key)
                return self._data[key]
        dec = eigendecompose(discretize(w, kind))
        with self._lock:
            self._data[key] = dec
            while len(self._data) > self.maxsize:
                self._data.popitem(last=False)
        return dec

    def clear(self):
        with self._lock:
            self._data.clear()


decomposition_cache = _DecompositionCache()


def spectral_decomposition(w: StepGraphon, kind: str = "laplacian") -> SpectralDecomposition:
    return decomposition_cache.get(w, kind)


def dirichlet_energy(w: StepGraphon, f: StepFunction) -> float:
    """(1/2) sum_ij w_ij (f_i - f_j)^2 m_i m_j = ||L_w^{1/2} f||^2."""
    w, f = align(w, f)
    return _dirichlet(w.values, w.grid.masses, f.values)


def _dirichlet(values: np.ndarray, masses: np.ndarray, f: np.ndarray) -> float:
    diff = f[:, None] - f[None, :]
    return float(0.5 * np.einsum("ij,ij,i,j->", values, diff * diff, masses, masses))


def check_boundary(dec: SpectralDecomposition, gamma: float) -> None:
    spec = dec.spectrum()
    close = np.abs(spec - gamma) < BOUNDARY_GUARD
    if np.any(close):
        raise SpectralBoundaryError(
            f"gamma={gamma!r} lies within {BOUNDARY_GUARD:g} of the eigenvalue {spec[close][0]!r}"
        )


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not gamma >= 0:
        raise ValidationError("gamma must be nonnegative", "bad-gamma")
    return gamma


def pw_basis(w: StepGraphon, gamma: float) -> list[StepFunction]:
    """Orthonormal step eigenfunctions of L_w with eigenvalue <= gamma.

    These span the step-function part of PW_gamma(w) on the grid of ``w``;
    PW_gamma(w) additionally contains cell-mean-zero functions on every
    cell whose degree is <= gamma (see ``pw_has_intra_part``).
    """
    gamma = _check_gamma(gamma)
    dec = spectral_decomposition(w, "laplacian")
    check_boundary(dec, gamma)
    return [dec.eigenfunction(a) for a in np.flatnonzero(dec.eigenvalues <= gamma)]


def pw_basis_matrix(w: StepGraphon, gamma: float) -> np.ndarray:
    gamma = _check_gamma(gamma)
    dec = spectral_decomposition(w, "laplacian")
    check_boundary(dec, gamma)
    return dec.vectors[:, dec.eigenvalues <= gamma]


def pw_has_intra_part(w: StepGraphon, gamma: float) -> bool:
    return bool(np.any(w.degree().values <= gamma))


def pw_project(w: StepGraphon, gamma: float, f: StepFunction) -> StepFunction:
    """P_gamma f = sum over eigenvalues <= gamma of <f, phi_a> phi_a."""
    gamma = _check_gamma(gamma)
    w, f = align(w, f)
    phi = pw_basis_matrix(w, gamma)
    coef = phi.T @ (w.grid.masses * f.values)
    return StepFunction(w.grid, phi @ coef)


def operator_norm_diff(w1: StepGraphon, w2: StepGraphon, kind: str = "laplacian") -> float:
    """||K_{w1} - K_{w2}|| on L^2[0,1], computed on the common refinement."""
    a, b = align(w1, w2)
    m = a.grid.masses
    da, db = a.values @ m, b.values @ m
    deg_gap = float(np.max(np.abs(da - db)))
    if kind == "degree-mult":
        return deg_gap
    if kind not in KINDS:
        raise ValidationError(f"unknown operator kind {kind!r}", "bad-kind")
    s = np.sqrt(m)
    diff = s[:, None] * (a.values - b.values) * s[None, :]
    if kind == "laplacian":
        diff = np.diag(da - db) - diff
    step_norm = float(np.max(np.abs(scipy.linalg.eigvalsh(diff))))
    return step_norm if kind == "adjacency" else max(step_norm, deg_gap)


def wot_pairing(
    w1: StepGraphon, w2: StepGraphon, f: StepFunction, g: StepFunction, kind: str = "laplacian"
) -> float:
    """<(K_{w1} - K_{w2}) f, g> in weighted L^2."""
    a, b, f, g = align(w1, w2, f, g)
    ka = _operator(kind, a.values, a.grid.masses).matrix
    kb = _operator(kind, b.values, b.grid.masses).matrix
    return float(np.sum(a.grid.masses * ((ka - kb) @ f.values) * g.values))


def grid_for(*objs) -> Grid:
    return common_refinement(*(o.grid for o in objs))
