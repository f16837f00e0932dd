"""Random model families and M-scaling scans of the gap bound.

Families: complete and cycle graphs, star graphs, random regular graphs
(pairing model), connected Erdos-Renyi graphs and Metropolis chains on a
base graph. Instances either have their rates rescaled to the infinitesimal
envelope 1/(ln M)^alpha or are degree-normalized to H = L / min_n k(n); the
scan drives the full bound diagnostics over a size schedule with seeds
derived per (M, replica) from the master seed.
"""

from __future__ import annotations

import math
import time
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from . import bound
from .generator import (
    GeneratorError,
    GeneratorMatrix,
    check_detailed_balance,
    check_irreducible,
    generator_from_matrix,
    symmetrize,
)
from .rng import derive_seed, make_rng
from .spectra import HermitianOperator

__all__ = [
    "EnsembleError",
    "EnsembleSpec",
    "ScanRow",
    "FAMILIES",
    "complete_graph",
    "cycle_graph",
    "star_graph",
    "random_regular",
    "er_connected",
    "infinitesimal_rescale",
    "metropolis_chain",
    "build_instance",
    "scan",
]

FAMILIES = ("complete", "cycle", "star", "random-regular", "er-connected", "metropolis")

REJECTION_CAP = 1000


class EnsembleError(ValueError):
    """Invalid ensemble specification or exhausted rejection budget."""


def _laplacian_from_adjacency(adj: np.ndarray) -> GeneratorMatrix:
    L = -adj.astype(float)
    np.fill_diagonal(L, 0.0)
    np.fill_diagonal(L, -L.sum(axis=0) + 0.0)
    return generator_from_matrix(L)


def complete_graph(M: int) -> GeneratorMatrix:
    adj = np.ones((M, M), dtype=bool)
    np.fill_diagonal(adj, False)
    return _laplacian_from_adjacency(adj)


def cycle_graph(M: int) -> GeneratorMatrix:
    adj = np.zeros((M, M), dtype=bool)
    idx = np.arange(M)
    adj[idx, (idx + 1) % M] = True
    adj |= adj.T
    return _laplacian_from_adjacency(adj)


def star_graph(M: int) -> GeneratorMatrix:
    adj = np.zeros((M, M), dtype=bool)
    adj[0, 1:] = True
    adj |= adj.T
    return _laplacian_from_adjacency(adj)


def _suitable(edges: set, potential: dict) -> bool:
    if not potential:
        return True
    nodes = list(potential)
    for i, s1 in enumerate(nodes):
        for s2 in nodes[i:]:
            if s1 == s2:
                continue
            pair = (s2, s1) if s1 > s2 else (s1, s2)
            if pair not in edges:
                return True
    return False


def _try_pairing(M: int, k: int, rng: np.random.Generator):
    edges: set = set()
    stubs = list(range(M)) * k
    while stubs:
        arr = np.array(stubs)
        rng.shuffle(arr)
        potential: dict = defaultdict(int)
        it = iter(arr.tolist())
        for s1, s2 in zip(it, it):
            if s1 > s2:
                s1, s2 = s2, s1
            if s1 != s2 and (s1, s2) not in edges:
                edges.add((s1, s2))
            else:
                potential[s1] += 1
                potential[s2] += 1
        if not potential:
            return edges
        if not _suitable(edges, potential):
            return None
        stubs = [node for node, count in potential.items() for _ in range(count)]
    return edges


def random_regular(M: int, k: int, seed: int, max_attempts: int = REJECTION_CAP) -> GeneratorMatrix:
    """Simple connected k-regular graph via the pairing model.

    Colliding stub pairs are re-drawn; a draw that cannot be repaired, or a
    disconnected result, counts as a rejected attempt.
    """
    if k >= M or k < 1:
        raise EnsembleError(f"degree k={k} infeasible for M={M}")
    if (M * k) % 2 != 0:
        raise EnsembleError("M * k must be even")
    rng = make_rng(seed)
    for attempt in range(max_attempts):
        edges = _try_pairing(M, k, rng)
        if edges is None:
            continue
        adj = np.zeros((M, M), dtype=bool)
        for a, b in edges:
            adj[a, b] = adj[b, a] = True
        L = _laplacian_from_adjacency(adj)
        if check_irreducible(L):
            return L
    raise EnsembleError(f"no connected {k}-regular graph after {max_attempts} attempts")


def er_connected(M: int, p: float, seed: int, max_attempts: int = REJECTION_CAP) -> GeneratorMatrix:
    """Connected Erdos-Renyi graph; disconnected draws are rejected."""
    if not 0 < p <= 1:
        raise EnsembleError("edge probability must be in (0, 1]")
    rng = make_rng(seed)
    for attempt in range(max_attempts):
        upper = np.triu(rng.random((M, M)) < p, 1)
        adj = upper | upper.T
        L = _laplacian_from_adjacency(adj)
        if check_irreducible(L):
            return L
    raise EnsembleError(f"no connected draw after {max_attempts} attempts (p={p})")


def infinitesimal_rescale(L: GeneratorMatrix, alpha: float) -> GeneratorMatrix:
    """Scale all rates so max |L_mn| = 1/(ln M)^alpha holds with equality."""
    if not 0 < alpha < 1:
        raise EnsembleError("alpha must lie in (0, 1)")
    if not L.is_symmetric:
        raise EnsembleError("infinitesimal rescaling expects a symmetric generator")
    off = L.matrix - np.diag(np.diag(L.matrix))
    w_max = float(np.abs(off).max())
    if w_max == 0:
        raise EnsembleError("zero generator cannot be rescaled")
    target = 1.0 / math.log(L.size) ** alpha
    scaled = (off / w_max) * target
    np.fill_diagonal(scaled, 0.0)
    np.fill_diagonal(scaled, -scaled.sum(axis=0) + 0.0)
    return generator_from_matrix(scaled)


def metropolis_chain(
    energies,
    beta: float,
    base: GeneratorMatrix,
    seed: int | None = None,
    energy_scale: float = 1.0,
) -> GeneratorMatrix:
    """Metropolis rates W(n->m) = min(1, exp(-beta (E_m - E_n))) on base edges.

    ``energies`` may be None, in which case they are drawn uniformly from
    [0, energy_scale) with the given seed. Detailed balance of the result
    (with p_eq proportional to the Boltzmann weights) is verified before
    returning.
    """
    if not base.is_symmetric:
        raise EnsembleError("base graph must be symmetric")
    M = base.size
    if energies is None:
        if seed is None:
            raise EnsembleError("provide energies or a seed to draw them")
        energies = make_rng(seed).uniform(0.0, energy_scale, M)
    energies = np.asarray(energies, dtype=float)
    if energies.shape != (M,):
        raise EnsembleError(f"need {M} energies, got shape {energies.shape}")
    adj = base.matrix < 0
    np.fill_diagonal(adj, False)
    accept = np.minimum(1.0, np.exp(-beta * (energies[:, None] - energies[None, :])))
    W = np.where(adj, accept, 0.0)
    L = -W
    np.fill_diagonal(L, 0.0)
    np.fill_diagonal(L, -L.sum(axis=0) + 0.0)
    out = generator_from_matrix(L)
    check_detailed_balance(out)
    return out


@dataclass(frozen=True)
class EnsembleSpec:
    """Seeded description of a scan over a random model family.

    ``k`` applies to random-regular graphs and is either an integer or the
    string "log-squared" for ceil((ln M)^2). The g rule is either an explicit
    ``g_value``, an exponent ``g_alpha`` for g = 1/(ln M)^alpha, or (default)
    the reciprocal minimal degree of the instance.
    """

    family: str
    sizes: tuple
    replicas: int
    seed: int
    alpha: float | None = None
    k: object = None
    p: float | None = None
    beta: float | None = None
    energy_scale: float = 1.0
    base: str = "complete"
    g_value: float | None = None
    g_alpha: float | None = None
    ergodicity_threshold: float = 1e-3

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise EnsembleError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if not self.sizes or any(int(m) < 2 for m in self.sizes):
            raise EnsembleError("sizes must be a non-empty list of integers >= 2")
        object.__setattr__(self, "sizes", tuple(int(m) for m in self.sizes))
        if self.replicas < 1:
            raise EnsembleError("replicas must be >= 1")
        if self.alpha is not None and not 0 < self.alpha < 1:
            raise EnsembleError("alpha must lie in (0, 1)")
        if self.family == "random-regular":
            if self.k is None:
                raise EnsembleError("random-regular needs k (integer or 'log-squared')")
            if not (self.k == "log-squared" or (isinstance(self.k, int) and self.k >= 1)):
                raise EnsembleError(f"invalid k {self.k!r}")
        if self.family == "er-connected" and (self.p is None or not 0 < self.p <= 1):
            raise EnsembleError("er-connected needs p in (0, 1]")
        if self.family == "metropolis":
            if self.beta is None or self.beta < 0:
                raise EnsembleError("metropolis needs beta >= 0")
            if self.base not in ("complete", "cycle"):
                raise EnsembleError("metropolis base must be 'complete' or 'cycle'")
        if self.g_value is not None and self.g_alpha is not None:
            raise EnsembleError("g_value and g_alpha are mutually exclusive")
        if self.g_value is not None and self.g_value <= 0:
            raise EnsembleError("g_value must be positive")

    def degree_for(self, M: int) -> int | None:
        if self.family != "random-regular":
            return None
        if self.k == "log-squared":
            return int(math.ceil(math.log(M) ** 2))
        return int(self.k)


@dataclass(frozen=True)
class ScanRow:
    family: str
    M: int
    replica: int
    seed: int
    alpha: float | None
    min_V: float
    mu2: float
    ratio: float
    sigma: float
    g: float
    s: float
    s_star: float
    min_abs_u: float
    ergodicity: str
    verdict: str
    wall_ms: int


def _build_graph(spec: EnsembleSpec, M: int, seed: int) -> GeneratorMatrix:
    if spec.family == "complete":
        return complete_graph(M)
    if spec.family == "cycle":
        return cycle_graph(M)
    if spec.family == "star":
        return star_graph(M)
    if spec.family == "random-regular":
        return random_regular(M, spec.degree_for(M), seed)
    if spec.family == "er-connected":
        return er_connected(M, spec.p, seed)
    raise EnsembleError(f"not a graph family: {spec.family}")


def build_instance(spec: EnsembleSpec, M: int, replica: int):
    """Materialize one scan row input: (H, g_value, row seed).

    Symmetric-walk families take H = L (alpha rescaling applied) or the
    degree-normalized H = L / min_n k(n); Metropolis chains are symmetrized
    first and normalized by the minimal weighted degree.
    """
    seed = derive_seed(spec.seed, M, replica)
    if spec.family == "metropolis":
        base = complete_graph(M) if spec.base == "complete" else cycle_graph(M)
        L = metropolis_chain(None, spec.beta, base, seed=seed, energy_scale=spec.energy_scale)
        if spec.alpha is not None:
            factor = infinitesimal_rescale_factor(L, spec.alpha)
            L = generator_from_matrix(L.matrix * factor)
        p_eq = check_detailed_balance(L)
        H_sym = symmetrize(L, p_eq).matrix
        if spec.alpha is None:
            min_deg = float(np.diag(L.matrix).min())
            H = HermitianOperator.from_matrix(H_sym / min_deg)
        else:
            H = HermitianOperator.from_matrix(H_sym)
    else:
        L = _build_graph(spec, M, seed)
        if spec.alpha is not None:
            L = infinitesimal_rescale(L, spec.alpha)
            H = HermitianOperator.from_matrix(L.matrix)
        else:
            min_deg = float(np.diag(L.matrix).min())
            H = HermitianOperator.from_matrix(L.matrix / min_deg)
    if spec.g_value is not None:
        g = spec.g_value
    elif spec.g_alpha is not None:
        g = 1.0 / math.log(M) ** spec.g_alpha
    elif spec.alpha is not None:
        g = 1.0 / math.log(M) ** spec.alpha
    else:
        g = 1.0 / float(np.diag(L.matrix).min())
    return H, float(g), seed


def infinitesimal_rescale_factor(L: GeneratorMatrix, alpha: float) -> float:
    """Scalar that brings the largest rate of L onto the infinitesimal envelope."""
    off = L.matrix - np.diag(np.diag(L.matrix))
    w_max = float(np.abs(off).max())
    if w_max == 0:
        raise EnsembleError("zero generator cannot be rescaled")
    return (1.0 / math.log(L.size) ** alpha) / w_max


def _scan_one(spec: EnsembleSpec, M: int, replica: int) -> ScanRow:
    start = time.perf_counter()
    seed = derive_seed(spec.seed, M, replica)
    try:
        H, g, seed = build_instance(spec, M, replica)
        report = bound.bound_verdict(H, g, ergodicity_threshold=spec.ergodicity_threshold)
        prof = report.profile
        row = ScanRow(
            family=spec.family, M=M, replica=replica, seed=seed, alpha=spec.alpha,
            min_V=report.min_V, mu2=report.mu2, ratio=report.ratio,
            sigma=prof.sigma, g=g, s=prof.s, s_star=prof.s_star,
            min_abs_u=prof.min_abs_u, ergodicity=prof.ergodicity,
            verdict=report.verdict,
            wall_ms=int(1000 * (time.perf_counter() - start)),
        )
    except Exception as exc:  # recorded, not fatal
        row = ScanRow(
            family=spec.family, M=M, replica=replica, seed=seed, alpha=spec.alpha,
            min_V=math.nan, mu2=math.nan, ratio=math.nan, sigma=math.nan,
            g=math.nan, s=math.nan, s_star=math.nan, min_abs_u=math.nan,
            ergodicity="", verdict=f"error: {exc}",
            wall_ms=int(1000 * (time.perf_counter() - start)),
        )
    return row


def scan(spec: EnsembleSpec, jobs: int = 1) -> list:
    """Run the scan over all (M, replica) cells in deterministic order."""
    cells = [(M, r) for M in spec.sizes for r in range(spec.replicas)]
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda c: _scan_one(spec, *c), cells))
    else:
        rows = [_scan_one(spec, *cell) for cell in cells]
    return rows
