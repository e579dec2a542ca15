"""Sampling estimates along graphon sequences converging to a limit.

All sampling constants (delta, theta, the lower frame constant and the
operator-norm threshold eps') come from the limit graphon only.  Each
approximant w_n is then checked against them: hypothesis gaps are measured
and random unit signals from PW_gamma(w_n) are sampled.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np

from .core import (
    AnalyticGraphon,
    StepGraphon,
    ValidationError,
    analytic_sup_degree_gap,
    average_graphon,
    closed_form_graphon,
    common_refinement,
    degree_function,
    sup_norm_diff,
)
from .cutnorm import MAX_EXACT_CELLS, cut_norm_exact, cut_norm_lower
from .graphs import graph_to_graphon, sample_w_random_graph
from .io import function_from_dict, graphon_from_dict, partition_from_dict
from .sampling import (
    Partition,
    SamplingSystem,
    build_sampling_system,
    optimal_epsilon,
    pw_lower_constant,
)
from .spectral import SpectralBoundaryError, operator_norm_diff, pw_basis_matrix

SEQUENCE_KINDS = ("averaged", "w-random")
PASS_TOL = 1e-9


@dataclass
class ConsistencyConfig:
    limit: Union[AnalyticGraphon, StepGraphon]
    indices: list
    partition: Partition
    sequence: str = "averaged"
    gamma: Optional[float] = None
    gamma_fraction: Optional[float] = None  # gamma = fraction * delta^2 / theta
    psi: Optional[list] = None
    trials: int = 50
    seed: int = 0
    epsilon_prime: Optional[float] = None  # None: the largest admissible value
    reference_cells: int = 512
    cutnorm_restarts: int = 16
    limit_label: str = ""

    def __post_init__(self):
        if self.sequence not in SEQUENCE_KINDS:
            raise ValidationError(f"sequence must be one of {SEQUENCE_KINDS}", "bad-config")
        idx = [int(n) for n in self.indices]
        if not idx or any(n < 1 for n in idx) or any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValidationError("indices must be positive and strictly increasing", "bad-config")
        self.indices = idx
        if (self.gamma is None) == (self.gamma_fraction is None):
            raise ValidationError("give exactly one of gamma and gamma_fraction", "bad-config")
        if self.gamma is not None and not self.gamma > 0:
            raise ValidationError("gamma must be positive", "bad-config")
        if self.gamma_fraction is not None and not 0 < self.gamma_fraction < 1:
            raise ValidationError("gamma_fraction must lie in (0, 1)", "bad-config")
        if self.trials < 1:
            raise ValidationError("trials must be at least 1", "bad-config")
        if self.seed < 0:
            raise ValidationError("seed must be nonnegative", "bad-config")
        if self.reference_cells < 1:
            raise ValidationError("reference_cells must be positive", "bad-config")


@dataclass
class LimitData:
    graphon: StepGraphon  # numerical proxy of the limit
    analytic: Optional[AnalyticGraphon]
    system: SamplingSystem
    gamma: float
    epsilon: float
    epsilon_prime: float
    target: float  # halved lower frame constant
    pw_constant: float
    bias: dict = field(default_factory=dict)


def limit_proxy(limit, cells: int) -> StepGraphon:
    if isinstance(limit, StepGraphon):
        return limit
    return average_graphon(limit, cells)


def prepare_limit(cfg: ConsistencyConfig) -> LimitData:
    proxy = limit_proxy(cfg.limit, cfg.reference_cells)
    system = build_sampling_system(proxy, cfg.partition, cfg.psi)
    delta, theta = system.delta, system.theta
    gamma = cfg.gamma if cfg.gamma is not None else cfg.gamma_fraction * delta**2 / theta
    if not gamma < delta**2 / theta:
        raise ValidationError(
            f"gamma={gamma!r} is not below delta^2/theta={delta**2 / theta!r}", "infeasible-gamma"
        )
    eps = optimal_epsilon(delta, theta, gamma)
    eps_max = (delta - math.sqrt(theta * gamma)) ** 2 / (2 * eps * theta)
    if cfg.epsilon_prime is None:
        eps_prime = eps_max
    elif 0 < cfg.epsilon_prime <= eps_max:
        eps_prime = float(cfg.epsilon_prime)
    else:
        raise ValidationError(
            f"epsilon_prime must lie in (0, {eps_max!r}] for the halved bound to follow", "bad-config"
        )
    pw_const = pw_lower_constant(delta, theta, gamma)
    bias = {"reference_cells": cfg.reference_cells}
    if isinstance(cfg.limit, AnalyticGraphon):
        fine = build_sampling_system(limit_proxy(cfg.limit, 2 * cfg.reference_cells), cfg.partition, cfg.psi)
        bias.update(
            delta_2R=fine.delta,
            theta_2R=fine.theta,
            delta_disagreement=abs(fine.delta - delta),
            theta_disagreement=abs(fine.theta - theta),
        )
    else:
        bias.update(delta_disagreement=0.0, theta_disagreement=0.0)
    analytic = cfg.limit if isinstance(cfg.limit, AnalyticGraphon) else None
    return LimitData(proxy, analytic, system, gamma, eps, eps_prime, pw_const / 2, pw_const, bias)


def _seed_for(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=key)


def sequence_term(cfg: ConsistencyConfig, n: int) -> StepGraphon:
    if cfg.sequence == "averaged":
        return average_graphon(cfg.limit, n)
    w = cfg.limit if isinstance(cfg.limit, StepGraphon) else limit_proxy(cfg.limit, cfg.reference_cells)
    graph_seed = int(_seed_for(cfg.seed, 3, n).generate_state(1)[0])
    return graph_to_graphon(sample_w_random_graph(w, n, graph_seed))


def build_sequence(cfg: ConsistencyConfig) -> list[StepGraphon]:
    return [sequence_term(cfg, n) for n in cfg.indices]


def _gaps(cfg: ConsistencyConfig, lim: LimitData, n: int, wn: StepGraphon) -> dict:
    proxy = lim.graphon
    deg_proxy = sup_norm_diff(degree_function(wn), degree_function(proxy))
    if lim.analytic is not None:
        deg_gap = analytic_sup_degree_gap(degree_function(wn), lim.analytic)
    else:
        deg_gap = deg_proxy
    u = wn - proxy
    lower = cut_norm_lower(u, cfg.cutnorm_restarts, int(_seed_for(cfg.seed, 4, n).generate_state(1)[0]))
    row = {
        "n": n,
        "cutnorm": lower.value,
        "cutnorm_method": "heuristic",
        "cutnorm_exact": None,
        "deg_gap": deg_gap,
        "deg_gap_proxy": deg_proxy,
        "Mop_gap": deg_gap,
        "Top_gap": operator_norm_diff(wn, proxy, "adjacency"),
        "Lop_gap": operator_norm_diff(wn, proxy, "laplacian"),
    }
    if u.n_cells <= MAX_EXACT_CELLS:
        exact = cut_norm_exact(u).value
        row.update(cutnorm=exact, cutnorm_method="exact", cutnorm_exact=exact)
    return row


def _trials(cfg: ConsistencyConfig, lim: LimitData, n: int, wn: StepGraphon) -> dict:
    try:
        basis = pw_basis_matrix(wn, lim.gamma)
    except SpectralBoundaryError as exc:
        return {"pw_dim": None, "pass_rate": math.nan, "min_ratio": math.nan, "violations": None,
                "status": str(exc)}
    rng = np.random.Generator(np.random.Philox(_seed_for(cfg.seed, 2, n)))
    masses = wn.grid.masses
    grid = common_refinement(wn.grid, lim.system.grid)
    to_wn = grid.cell_map(wn.grid)
    # sampling rows: c = psi_matrix^T (m * f) on the common grid
    sampler = (lim.system.on_grid(grid).psi_matrix() * grid.masses[:, None]).T
    passes, ratios = 0, []
    for _ in range(cfg.trials):
        coef = rng.standard_normal(basis.shape[1])
        coef /= np.linalg.norm(coef)  # basis is weighted-orthonormal, so ||f|| = 1
        values = basis @ coef
        norm2 = float(masses @ values**2)
        c = sampler @ values[to_wn]
        energy = float(c @ c)
        ok = lim.target * norm2 - PASS_TOL <= energy <= norm2 + PASS_TOL
        passes += ok
        ratios.append(energy / norm2)
    return {
        "pw_dim": int(basis.shape[1]),
        "pass_rate": passes / cfg.trials,
        "min_ratio": float(min(ratios)),
        "violations": cfg.trials - passes,
        "status": "ok",
    }


def hypothesis_decay(cfg: ConsistencyConfig, threads: int = 1, lim: Optional[LimitData] = None) -> list[dict]:
    """Per-n cut-norm distance, degree gap and operator-norm gaps."""
    lim = lim or prepare_limit(cfg)

    def one(n):
        return _gaps(cfg, lim, n, sequence_term(cfg, n))

    return _map(one, cfg.indices, threads)


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass
class ConsistencyReport:
    rows: list
    certified_n: Optional[int]
    target: float
    pw_constant: float
    delta: float
    theta: float
    gamma: float
    epsilon: float
    epsilon_prime: float
    limit_hash: str
    limit_label: str
    sequence: str
    discretization: dict

    @property
    def certified(self) -> bool:
        return self.certified_n is not None

    def implication_violations(self) -> int:
        """Trial failures at indices where the operator gap is below eps'."""
        return sum(r["violations"] or 0 for r in self.rows if r["below_threshold"])

    def to_dict(self) -> dict:
        d = asdict(self)
        d["certified"] = self.certified
        d["status"] = "certified" if self.certified else "not certified at tested scale"
        return d

    CSV_COLUMNS = ("n", "cutnorm", "cutnorm_method", "deg_gap", "Lop_gap", "pass_rate")


def run_consistency(cfg: ConsistencyConfig, threads: int = 1) -> ConsistencyReport:
    lim = prepare_limit(cfg)

    def one(n):
        wn = sequence_term(cfg, n)
        row = _gaps(cfg, lim, n, wn)
        row["below_threshold"] = bool(row["Lop_gap"] < lim.epsilon_prime)
        row.update(_trials(cfg, lim, n, wn))
        return row

    rows = _map(one, cfg.indices, threads)
    certified = None
    for row in reversed(rows):
        if not row["below_threshold"]:
            break
        certified = row["n"]
    return ConsistencyReport(
        rows=rows,
        certified_n=certified,
        target=lim.target,
        pw_constant=lim.pw_constant,
        delta=lim.system.delta,
        theta=lim.system.theta,
        gamma=lim.gamma,
        epsilon=lim.epsilon,
        epsilon_prime=lim.epsilon_prime,
        limit_hash=lim.graphon.content_hash(),
        limit_label=cfg.limit_label,
        sequence=cfg.sequence,
        discretization=lim.bias,
    )


def limit_from_config(entry: dict):
    """Limit graphon from a config entry: {"closed_form": name, "params": {...}}
    or an inline step graphon {"breakpoints": ..., "values": ...}."""
    if "closed_form" in entry:
        name = entry["closed_form"]
        params = entry.get("params", {})
        label = name + ("" if not params else " " + ",".join(f"{k}={v}" for k, v in sorted(params.items())))
        return closed_form_graphon(name, **params), label
    if "breakpoints" in entry:
        return graphon_from_dict(entry), "step"
    raise ValidationError("limit must be a closed form or an inline step graphon", "bad-config")


def config_from_dict(d: dict) -> ConsistencyConfig:
    if not isinstance(d, dict):
        raise ValidationError("config must be a JSON object", "malformed-json")
    for key in ("limit", "indices", "partition"):
        if key not in d:
            raise ValidationError(f"config is missing {key!r}", "bad-config")
    limit, label = limit_from_config(d["limit"])
    psi = d.get("psi")
    if psi is not None:
        psi = [function_from_dict(p) for p in psi]
    eps_prime = d.get("epsilon_prime", "max")
    return ConsistencyConfig(
        limit=limit,
        indices=d["indices"],
        partition=partition_from_dict(d["partition"]),
        sequence=d.get("sequence", "averaged"),
        gamma=d.get("gamma"),
        gamma_fraction=d.get("gamma_fraction"),
        psi=psi,
        trials=int(d.get("trials", 50)),
        seed=int(d["seed"]) if "seed" in d else _missing_seed(),
        epsilon_prime=None if eps_prime == "max" else float(eps_prime),
        reference_cells=int(d.get("reference_cells", 512)),
        cutnorm_restarts=int(d.get("cutnorm_restarts", 16)),
        limit_label=label,
    )


def _missing_seed():
    raise ValidationError("config must specify an integer 'seed'", "missing-seed")
