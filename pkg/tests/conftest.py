import zlib

import numpy as np
import pytest

from graphon_sampling.core import Grid, StepFunction, StepGraphon
from graphon_sampling.sampling import Partition

ACCEPTANCE_LINES: dict[int, str] = {}


def random_grid(rng, k: int) -> Grid:
    if k == 1:
        return Grid([0.0, 1.0])
    cuts = np.sort(rng.uniform(0.02, 0.98, size=k - 1))
    b = np.concatenate([[0.0], cuts, [1.0]])
    if np.any(np.diff(b) < 1e-3):
        return Grid.uniform(k)
    return Grid(b)


def random_graphon(rng, k: int, zero_prob: float = 0.0, grid: Grid | None = None) -> StepGraphon:
    grid = grid or random_grid(rng, k)
    a = rng.uniform(0.0, 1.0, size=(k, k))
    if zero_prob:
        a[rng.uniform(size=(k, k)) < zero_prob] = 0.0
    a = np.triu(a) + np.triu(a, 1).T
    return StepGraphon(grid, a)


def random_partition(rng, grid: Grid, k: int) -> Partition:
    n = grid.n_cells
    k = min(k, n)
    part_of = np.concatenate([np.arange(k), rng.integers(0, k, size=n - k)])
    rng.shuffle(part_of)
    return Partition(grid, part_of)


def community_graphon(rng, grid: Grid, partition: Partition) -> StepGraphon:
    """Dense within parts, weak across parts: small global eigenvalues."""
    k = grid.n_cells
    a = rng.uniform(0.3, 1.0, size=(k, k))
    same = partition.part_of[:, None] == partition.part_of[None, :]
    scale = 10 ** rng.uniform(-3, 0)
    a = np.where(same, a, a * scale * rng.uniform(0, 1, size=(k, k)))
    a = np.triu(a) + np.triu(a, 1).T
    return StepGraphon(grid, a)


def random_function(rng, grid: Grid, scale: float = 1.0) -> StepFunction:
    return StepFunction(grid, scale * rng.standard_normal(grid.n_cells))


def random_psi(rng, partition: Partition, j: int) -> StepFunction:
    """Unit-norm function supported on part j with nonzero integral."""
    grid = partition.grid
    cells = partition.cells(j)
    v = np.zeros(grid.n_cells)
    v[cells] = rng.uniform(0.2, 1.0, size=cells.size) * rng.choice([1.0, 1.0, -0.3], size=cells.size)
    if abs(np.sum(grid.masses[cells] * v[cells])) < 1e-3:
        v[cells] = np.abs(v[cells])
    norm = np.sqrt(np.sum(grid.masses * v**2))
    return StepFunction(grid, v / norm)


@pytest.fixture
def rng(request):
    seed = zlib.crc32(request.node.nodeid.encode())
    return np.random.default_rng(seed)


@pytest.fixture
def acceptance():
    def record(number: int, passed: bool, detail: str):
        status = "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES[number] = f"[{status}] criterion {number:>2}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
