"""Cut norm of step kernels.

For a step kernel u the bilinear form (S, T) -> int_{S x T} u is
multilinear in the cell fractions of S and T, so its supremum is attained
at unions of whole cells.  The exact routine enumerates S over all 2^k cell
unions and closes T greedily; the heuristic alternates the two greedy
closures from random starts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Grid, StepGraphon, ValidationError

MAX_EXACT_CELLS = 22
_CHUNK_BITS = 14


@dataclass(frozen=True)
class CutNormResult:
    value: float
    s: np.ndarray  # boolean membership per cell
    t: np.ndarray
    method: str
    grid: Grid

    @property
    def s_cells(self) -> list[int]:
        return np.flatnonzero(self.s).tolist()

    @property
    def t_cells(self) -> list[int]:
        return np.flatnonzero(self.t).tolist()


def _weighted(u: StepGraphon) -> np.ndarray:
    m = u.grid.masses
    return u.values * m[:, None] * m[None, :]


def box_integral(u: StepGraphon, s: np.ndarray, t: np.ndarray) -> float:
    """int_{S x T} u for cell unions S, T, summed directly."""
    a = _weighted(u)
    return float(np.sum(a[np.ix_(np.asarray(s, bool), np.asarray(t, bool))]))


def _close_t(colsums: np.ndarray):
    """Best T for given column sums: (value, positive_sign?)."""
    pos = np.sum(np.where(colsums > 0, colsums, 0.0), axis=-1)
    neg = -np.sum(np.where(colsums < 0, colsums, 0.0), axis=-1)
    return pos, neg


def cut_norm_exact(u: StepGraphon) -> CutNormResult:
    """Exact cut norm; ties resolve to the smallest S (bit i = cell i), then T
    with positive orientation, columns with zero sum excluded."""
    k = u.n_cells
    if k > MAX_EXACT_CELLS:
        raise ValidationError(
            f"exact cut norm enumerates 2^k subsets; k={k} exceeds {MAX_EXACT_CELLS}", "size-guard"
        )
    a = _weighted(u)
    total = 1 << k
    chunk = 1 << min(_CHUNK_BITS, k)
    bits = np.arange(k)
    best_val, best_s = -1.0, 0
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        member = ((idx[:, None] >> bits[None, :]) & 1).astype(float)
        cols = member @ a
        pos, neg = _close_t(cols)
        vals = np.maximum(pos, neg)
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val, best_s = float(vals[j]), int(idx[j])
    s = ((best_s >> bits) & 1).astype(bool)
    return _finish(u, a, s, "exact")


def _finish(u: StepGraphon, a: np.ndarray, s: np.ndarray, method: str) -> CutNormResult:
    cols = s.astype(float) @ a
    pos, neg = _close_t(cols)
    t = cols > 0 if pos >= neg else cols < 0
    value = abs(float(np.sum(a[np.ix_(s, t)])))
    return CutNormResult(value, s, t, method, u.grid)


def cut_norm_lower(u: StepGraphon, restarts: int = 64, seed: int = 0) -> CutNormResult:
    """Lower bound by alternating greedy maximization from random starts.

    Each restart draws a random S and runs the alternation for both signs of
    the bilinear form until the value stops increasing.
    """
    if restarts < 1:
        raise ValidationError("restarts must be positive", "bad-restarts")
    a = _weighted(u)
    k = u.n_cells
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(7,))))
    best_val, best_s = -1.0, np.zeros(k, bool)
    for _ in range(restarts):
        start = rng.random(k) < 0.5
        for sign in (1.0, -1.0):
            s = start.copy()
            val = -np.inf
            while True:
                t = sign * (s.astype(float) @ a) > 0
                s_new = sign * (a @ t.astype(float)) > 0
                new_val = sign * float(s_new.astype(float) @ a @ t.astype(float))
                if new_val <= val:
                    break
                s, val = s_new, new_val
            if val > best_val:
                best_val, best_s = val, s
    return _finish(u, a, best_s, "heuristic")


def cut_norm(u: StepGraphon, exact: bool | None = None, restarts: int = 64, seed: int = 0) -> CutNormResult:
    """Exact when the grid is small enough (or forced), heuristic otherwise."""
    if exact is None:
        exact = u.n_cells <= MAX_EXACT_CELLS
    return cut_norm_exact(u) if exact else cut_norm_lower(u, restarts, seed)


def cut_distance(w1: StepGraphon, w2: StepGraphon, **kwargs) -> CutNormResult:
    """||w1 - w2||_box with the labelings as given (no relabeling search)."""
    return cut_norm(w1 - w2, **kwargs)
