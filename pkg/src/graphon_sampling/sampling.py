"""Average sampling on graphons: partitions, local spectral gaps, sampling
functionals and frame-bound certificates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import (
    Grid,
    StepFunction,
    StepGraphon,
    ValidationError,
    common_refinement,
    is_connected,
)
from .spectral import DiscretizedOperator, _dirichlet, _operator, eigendecompose

PSI_TOL = 1e-12
GAP_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Partition:
    """Partition of [0, 1] into unions of grid cells; parts are 0..k-1."""

    grid: Grid
    part_of: np.ndarray

    def __post_init__(self):
        p = np.array(self.part_of, dtype=int).ravel()
        if p.size != self.grid.n_cells:
            raise ValidationError(
                f"partition assigns {p.size} cells, grid has {self.grid.n_cells}", "dimension-mismatch"
            )
        if p.size and p.min() < 0:
            raise ValidationError("part indices must be nonnegative", "bad-partition")
        k = int(p.max()) + 1
        if np.unique(p).size != k:
            raise ValidationError("every part must contain at least one cell", "empty-part")
        p.flags.writeable = False
        object.__setattr__(self, "part_of", p)

    @classmethod
    def equipartition(cls, k: int) -> "Partition":
        return cls(Grid.uniform(k), np.arange(k))

    @property
    def k(self) -> int:
        return int(self.part_of.max()) + 1

    def measures(self) -> np.ndarray:
        return np.bincount(self.part_of, weights=self.grid.masses, minlength=self.k)

    def cells(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.part_of == j)

    def indicator(self, j: int) -> StepFunction:
        return StepFunction(self.grid, (self.part_of == j).astype(float))

    def refine(self, grid: Grid) -> "Partition":
        if grid == self.grid:
            return self
        return Partition(grid, self.part_of[grid.cell_map(self.grid)])


@dataclass(frozen=True, eq=False)
class Restriction:
    """w restricted to S_j x S_j, with L_j acting on L^2(S_j)."""

    part: int
    cells: np.ndarray
    masses: np.ndarray
    values: np.ndarray
    laplacian: DiscretizedOperator

    @property
    def measure(self) -> float:
        return float(self.masses.sum())

    def is_connected(self) -> bool:
        # connectivity ignores cell lengths, so rescale S_j onto [0, 1]
        b = np.concatenate([[0.0], np.cumsum(self.masses) / self.measure])
        b[-1] = 1.0
        return is_connected(StepGraphon(Grid(b), self.values))

    def energy(self, f_values: np.ndarray) -> float:
        """||L_j^{1/2} f_j||^2 for f given on the cells of the part."""
        return _dirichlet(self.values, self.masses, f_values)


def restrict(w: StepGraphon, partition: Partition, j: int) -> Restriction:
    if w.grid != partition.grid:
        grid = common_refinement(w.grid, partition.grid)
        w, partition = w.refine(grid), partition.refine(grid)
    cells = partition.cells(j)
    if cells.size == 0:
        raise ValidationError(f"part {j} is empty", "empty-part")
    masses = w.grid.masses[cells]
    values = w.values[np.ix_(cells, cells)]
    return Restriction(j, cells, masses, values, _operator("laplacian", values, masses))


@dataclass(frozen=True)
class Gap:
    delta: float
    lambda2: float
    witness: np.ndarray  # values on the part's cells, refined x2 when intra-cell
    intra_cell: bool


def spectral_gap_detail(r: Restriction) -> Gap:
    """Sharpest delta_j with ||L_j^{1/2} f|| >= delta_j ||f|| for mean-zero f.

    The mean-zero subspace of L^2(S_j) splits into mean-zero step functions
    (step eigenvalues after the constant) and cell-mean-zero functions (cell
    degrees within S_j); delta_j^2 is the smallest value over both.
    """
    dec = eigendecompose(r.laplacian)
    step = dec.eigenvalues[1:]
    lam_step = float(step[0]) if step.size else math.inf
    i_min = int(np.argmin(r.laplacian.intra))
    lam_intra = float(r.laplacian.intra[i_min])
    if lam_step <= lam_intra:
        lam, witness, intra = lam_step, dec.vectors[:, 1], False
    else:
        # +1/-1 on the two halves of the cell, expressed on the halved grid
        witness = np.zeros(2 * r.cells.size)
        witness[2 * i_min], witness[2 * i_min + 1] = 1.0, -1.0
        lam, intra = lam_intra, True
    if lam <= GAP_TOL:
        raise ValidationError(
            f"part {r.part}: 0 is not a simple eigenvalue of the restricted Laplacian "
            f"(second eigenvalue {lam:.3g}); the restricted graphon is disconnected",
            "zero-gap",
        )
    return Gap(math.sqrt(lam), lam, witness, intra)


def spectral_gap(r: Restriction) -> float:
    return spectral_gap_detail(r).delta


def halve_cells(r: Restriction) -> Restriction:
    """The same restriction with every cell split in two equal halves."""
    idx = np.repeat(np.arange(r.cells.size), 2)
    masses = np.repeat(r.masses, 2) / 2
    values = r.values[np.ix_(idx, idx)]
    return Restriction(r.part, np.repeat(r.cells, 2), masses, values, _operator("laplacian", values, masses))


def default_psi(partition: Partition, j: int) -> StepFunction:
    """1_{S_j} / sqrt(|S_j|)."""
    ind = partition.indicator(j)
    return ind * (1.0 / math.sqrt(partition.measures()[j]))


@dataclass(frozen=True, eq=False)
class SamplingSystem:
    w: StepGraphon
    partition: Partition
    psi: tuple
    measures: np.ndarray
    psi_integrals: np.ndarray
    delta_j: np.ndarray
    theta_j: np.ndarray
    sharp_delta_j: np.ndarray = field(repr=False)

    @property
    def grid(self) -> Grid:
        return self.w.grid

    @property
    def k(self) -> int:
        return self.partition.k

    @property
    def theta(self) -> float:
        return float(np.max(self.theta_j))

    @property
    def delta(self) -> float:
        return float(np.min(self.delta_j))

    def psi_matrix(self) -> np.ndarray:
        return np.stack([p.values for p in self.psi], axis=1)

    def restriction(self, j: int) -> Restriction:
        return restrict(self.w, self.partition, j)

    def on_grid(self, grid: Grid) -> "SamplingSystem":
        """Same system expressed on a refinement of its grid."""
        if grid == self.grid:
            return self
        return SamplingSystem(
            self.w.refine(grid),
            self.partition.refine(grid),
            tuple(p.refine(grid) for p in self.psi),
            self.measures,
            self.psi_integrals,
            self.delta_j,
            self.theta_j,
            self.sharp_delta_j,
        )


def build_sampling_system(
    w: StepGraphon,
    partition: Partition,
    psi: Optional[Sequence[StepFunction]] = None,
    deltas: Optional[Sequence[float]] = None,
) -> SamplingSystem:
    """Validate the sampling functionals and compute delta_j, theta_j.

    ``deltas`` may lower the per-part gaps below the sharp values for a
    conservative certificate; values above the sharp gap are rejected.
    """
    if w.mode != "graphon":
        raise ValidationError("sampling needs a graphon, not a signed kernel", "kernel-mode")
    grids = [w.grid, partition.grid] + [p.grid for p in psi or ()]
    grid = common_refinement(*grids)
    w, partition = w.refine(grid), partition.refine(grid)
    k = partition.k
    if psi is None:
        psi = [default_psi(partition, j) for j in range(k)]
    else:
        psi = [p.refine(grid) for p in psi]
        if len(psi) != k:
            raise ValidationError(f"expected {k} sampling functions, got {len(psi)}", "bad-psi")
    measures = partition.measures()
    integrals = np.empty(k)
    for j, p in enumerate(psi):
        outside = p.values[partition.part_of != j]
        if np.any(outside != 0.0):
            raise ValidationError(f"psi_{j} is not supported in S_{j}", "bad-psi")
        if abs(p.norm() - 1.0) > PSI_TOL:
            raise ValidationError(f"psi_{j} has norm {p.norm()!r}, expected 1", "bad-psi")
        integrals[j] = p.integral()
        if abs(integrals[j]) <= PSI_TOL:
            raise ValidationError(f"psi_{j} has (numerically) zero integral", "bad-psi")
    sharp = np.array([spectral_gap(restrict(w, partition, j)) for j in range(k)])
    if deltas is None:
        delta_j = sharp
    else:
        delta_j = np.asarray(deltas, dtype=float)
        if delta_j.shape != (k,) or np.any(delta_j <= 0) or np.any(delta_j > sharp * (1 + 1e-12)):
            raise ValidationError(
                "supplied gaps must be positive and not exceed the sharp spectral gaps", "bad-delta"
            )
    theta_j = measures / integrals**2
    return SamplingSystem(w, partition, tuple(psi), measures, integrals, delta_j, theta_j, sharp)


def _on_common(f: StepFunction, sys: SamplingSystem):
    grid = common_refinement(f.grid, sys.grid)
    return f.refine(grid), sys.on_grid(grid)


def measure_samples(f: StepFunction, sys: SamplingSystem):
    """Coefficients c_j = <f, psi_j> and the sample energy sum c_j^2."""
    f, sys = _on_common(f, sys)
    c = sys.psi_matrix().T @ (sys.grid.masses * f.values)
    return c, float(c @ c)


def part_energies(f: StepFunction, sys: SamplingSystem) -> np.ndarray:
    """||L_j^{1/2} f_j||^2 for every part."""
    f, sys = _on_common(f, sys)
    out = np.empty(sys.k)
    for j in range(sys.k):
        r = sys.restriction(j)
        out[j] = r.energy(f.values[r.cells])
    return out


def _check_eps(epsilon: float) -> float:
    epsilon = float(epsilon)
    if not epsilon > 0:
        raise ValidationError("epsilon must be positive", "bad-epsilon")
    return epsilon


def theorem1_bound(f: StepFunction, sys: SamplingSystem, epsilon: float) -> float:
    """Right-hand side of the local-energy upper bound for ||f||^2."""
    epsilon = _check_eps(epsilon)
    energies = part_energies(f, sys)
    c, _ = measure_samples(f, sys)
    sq = sys.psi_integrals**2
    terms = sys.measures * energies / (sys.delta_j**2 * sq) + sys.measures * c**2 / (epsilon * sq)
    return float((1 + epsilon) * np.sum(terms))


def energy_split(f: StepFunction, sys: SamplingSystem) -> tuple[float, float]:
    """(sum_j ||L_j^{1/2} f_j||^2, ||L_w^{1/2} f||^2)."""
    f, sys = _on_common(f, sys)
    return float(part_energies(f, sys).sum()), _dirichlet(sys.w.values, sys.grid.masses, f.values)


def corollary2_bound(f: StepFunction, sys: SamplingSystem, epsilon: float) -> float:
    """(1+eps) theta/delta^2 ||L^{1/2} f||^2 + (1+eps)/eps theta sum c_j^2."""
    epsilon = _check_eps(epsilon)
    local, full = energy_split(f, sys)
    if local > full + 1e-12 * max(1.0, full):
        raise RuntimeError(f"local energies {local!r} exceed the global energy {full!r}")
    _, samples = measure_samples(f, sys)
    theta, delta = sys.theta, sys.delta
    return float((1 + epsilon) * theta / delta**2 * full + (1 + epsilon) / epsilon * theta * samples)


def chi_membership(f_j: StepFunction, r: Restriction, tau: float) -> bool:
    """||L_j^{1/2} f_j|| <= tau ||f_j|| (+1e-12); f_j given on the part's cells."""
    tau = float(tau)
    if tau < 0:
        raise ValidationError("tau must be nonnegative", "bad-tau")
    vals = np.asarray(getattr(f_j, "values", f_j), dtype=float)
    energy = r.energy(vals)
    norm = math.sqrt(float(np.sum(r.masses * vals**2)))
    return math.sqrt(max(energy, 0.0)) <= tau * norm + 1e-12


@dataclass(frozen=True)
class SandwichResult:
    lower_constant: float
    lower: float
    energy: float
    upper: float
    epsilon: float

    @property
    def holds(self) -> bool:
        return self.lower <= self.energy + 1e-10 and self.energy <= self.upper + 1e-12


def default_sigma_epsilon(sigma: float) -> float:
    return 1.0 if sigma == 0 else (1.0 - sigma) / (2.0 * sigma)


def corollary3_bounds(
    f: StepFunction,
    sys: SamplingSystem,
    sigma: float,
    tau: Sequence[float],
    epsilon: Optional[float] = None,
) -> SandwichResult:
    """Frame sandwich for signals with locally small energy (f_j in chi_j(tau_j))."""
    sigma = float(sigma)
    if not 0 <= sigma < 1:
        raise ValidationError("sigma must lie in [0, 1)", "bad-sigma")
    tau = np.asarray(tau, dtype=float)
    if tau.shape != (sys.k,) or np.any(tau < 0):
        raise ValidationError(f"need {sys.k} nonnegative tau values", "bad-tau")
    ratio = sys.theta_j * tau**2 / sys.delta_j**2
    if np.any(ratio > sigma):
        bad = int(np.argmax(ratio - sigma))
        raise ValidationError(
            f"tau_{bad} too large: theta_j tau_j^2 / delta_j^2 = {ratio[bad]:.6g} > sigma", "bad-tau"
        )
    eps = default_sigma_epsilon(sigma) if epsilon is None else _check_eps(epsilon)
    if not (1 + eps) * sigma < 1:
        raise ValidationError("epsilon must satisfy (1 + epsilon) sigma < 1", "bad-epsilon")
    f, sys = _on_common(f, sys)
    for j in range(sys.k):
        r = sys.restriction(j)
        if not chi_membership(f.values[r.cells], r, tau[j]):
            raise ValidationError(f"restriction of f to part {j} is not in chi_j(tau_j)", "not-in-chi")
    _, energy = measure_samples(f, sys)
    const = (1 - (1 + eps) * sigma) * eps / ((1 + eps) * sys.theta)
    norm2 = f.norm2()
    return SandwichResult(const, const * norm2, energy, norm2, eps)


def optimal_epsilon(delta: float, theta: float, gamma: float) -> float:
    """delta / sqrt(theta gamma) - 1, the maximizer of the Paley-Wiener lower constant."""
    if not (gamma > 0 and gamma < delta**2 / theta):
        raise ValidationError("optimal epsilon needs 0 < gamma < delta^2 / theta", "infeasible-gamma")
    return delta / math.sqrt(theta * gamma) - 1.0


def lower_constant_h(eps, delta: float, theta: float, gamma: float):
    """Lower frame constant as a function of epsilon (before optimization)."""
    eps = np.asarray(eps, dtype=float)
    return (1 - (1 + eps) * theta * gamma / delta**2) * eps / ((1 + eps) * theta)


@dataclass(frozen=True)
class FrameBoundReport:
    gamma: float
    feasible: bool
    lower: Optional[float]
    upper: float
    epsilon: Optional[float]
    delta: float
    theta: float
    threshold: float  # delta^2 / theta
    parts: tuple  # (|S_j|, delta_j, theta_j)
    limit_case: bool = False

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "feasible": self.feasible,
            "lower": self.lower,
            "upper": self.upper,
            "epsilon": self.epsilon,
            "limit_case": self.limit_case,
            "delta": self.delta,
            "theta": self.theta,
            "gamma_threshold": self.threshold,
            "parts": [
                {"measure": m, "delta_j": d, "theta_j": t} for m, d, t in self.parts
            ],
        }


def pw_lower_constant(delta: float, theta: float, gamma: float) -> float:
    return (delta - math.sqrt(theta * gamma)) ** 2 / (theta * delta**2)


def frame_bounds(sys: SamplingSystem, gamma: float) -> FrameBoundReport:
    gamma = float(gamma)
    if not gamma >= 0:
        raise ValidationError("gamma must be nonnegative", "bad-gamma")
    delta, theta = sys.delta, sys.theta
    threshold = delta**2 / theta
    parts = tuple(
        (float(m), float(d), float(t)) for m, d, t in zip(sys.measures, sys.delta_j, sys.theta_j)
    )
    if not gamma < threshold:
        return FrameBoundReport(gamma, False, None, 1.0, None, delta, theta, threshold, parts)
    lower = pw_lower_constant(delta, theta, gamma)
    if gamma == 0:
        return FrameBoundReport(gamma, True, lower, 1.0, None, delta, theta, threshold, parts, True)
    eps = optimal_epsilon(delta, theta, gamma)
    return FrameBoundReport(gamma, True, lower, 1.0, eps, delta, theta, threshold, parts)
