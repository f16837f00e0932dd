"""Master-equation generators (weighted Laplacians).

A generator L drives dp/dt = -L p over M states. Columns sum to zero
(probability conservation), off-diagonal entries are non-positive (negated
jump rates W(n->m) = -L[m,n]) and the diagonal carries the total exit rate
of each state. Detailed balance, when it holds, makes L similar to a real
symmetric operator through the diagonal square-root of the equilibrium
distribution, which is the entry point for all spectral analysis here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph

from .spectra import HermitianOperator

__all__ = [
    "GeneratorError",
    "ReducibleGeneratorError",
    "DetailedBalanceError",
    "GeneratorMatrix",
    "StochasticMatrixView",
    "build_generator",
    "generator_from_matrix",
    "stochastic_view",
    "check_irreducible",
    "check_detailed_balance",
    "symmetrize",
    "validate_probability_vector",
]


class GeneratorError(ValueError):
    """Invalid generator construction or input."""


class ReducibleGeneratorError(GeneratorError):
    """Generator whose jump graph is not strongly connected.

    Carries the strongly connected components as ``components`` (list of
    index arrays) so callers can report the decomposition.
    """

    def __init__(self, message, components):
        super().__init__(message)
        self.components = components


class DetailedBalanceError(GeneratorError):
    """Detailed balance violated; ``pair`` holds the worst (m, n) witness."""

    def __init__(self, message, pair=None, residual=None):
        super().__init__(message)
        self.pair = pair
        self.residual = residual


def _default_tol(matrix: np.ndarray) -> float:
    scale = np.abs(matrix).max() if matrix.size else 1.0
    return 1e-9 * max(scale, 1.0)


@dataclass(frozen=True)
class GeneratorMatrix:
    """Dense M x M generator with its validity flags.

    Immutable after construction; the matrix array is never mutated by any
    operation in this package.
    """

    matrix: np.ndarray
    is_symmetric: bool
    is_valid_generator: bool

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def rate(self, n: int, m: int) -> float:
        """Jump rate W(n -> m), 1-based state labels."""
        return -float(self.matrix[m - 1, n - 1])


@dataclass(frozen=True)
class StochasticMatrixView:
    """Column-stochastic S = I - L/r with r = max_n L[n,n]."""

    entries: np.ndarray
    rate_scale: float


def _classify(matrix: np.ndarray, tol: float) -> tuple[bool, bool]:
    off = matrix - np.diag(np.diag(matrix))
    col_ok = np.abs(matrix.sum(axis=0)).max() <= tol
    sign_ok = (off <= tol).all() and (np.diag(matrix) >= -tol).all()
    symmetric = np.abs(matrix - matrix.T).max() <= tol
    return symmetric, bool(col_ok and sign_ok)


def build_generator(M: int, rates) -> GeneratorMatrix:
    """Assemble a generator from a sparse list of (from, to, rate) triples.

    States are labelled 1..M. The diagonal is set to minus the off-diagonal
    column sums, so conservation holds by construction.
    """
    if M < 1:
        raise GeneratorError("M must be a positive integer")
    matrix = np.zeros((M, M))
    seen = set()
    for entry in rates:
        src, dst, w = entry
        if not (1 <= src <= M and 1 <= dst <= M):
            raise GeneratorError(f"state index out of range in rate {entry!r}")
        if src == dst:
            raise GeneratorError(f"self-transition forbidden in rate {entry!r}")
        if w <= 0:
            raise GeneratorError(f"non-positive rate in {entry!r}")
        if (src, dst) in seen:
            raise GeneratorError(f"duplicate edge ({src}, {dst})")
        seen.add((src, dst))
        matrix[dst - 1, src - 1] = -w
    # +0.0 turns -0.0 into +0.0 on empty columns (sign matters downstream)
    np.fill_diagonal(matrix, -matrix.sum(axis=0) + 0.0)
    symmetric, valid = _classify(matrix, _default_tol(matrix))
    return GeneratorMatrix(matrix=matrix, is_symmetric=symmetric, is_valid_generator=valid)


def generator_from_matrix(matrix, tol: float | None = None) -> GeneratorMatrix:
    """Wrap a raw square matrix, recording whether it is a valid generator.

    Invalid or reducible matrices are constructible (for negative tests);
    analysis entry points check the flags and refuse them.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise GeneratorError("generator matrix must be square")
    if tol is None:
        tol = _default_tol(matrix)
    symmetric, valid = _classify(matrix, tol)
    return GeneratorMatrix(matrix=matrix.copy(), is_symmetric=symmetric, is_valid_generator=valid)


def validate_probability_vector(p, tol: float = 1e-12) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise GeneratorError("probability vector must be one-dimensional")
    if (p < -tol).any():
        raise GeneratorError("probability vector has a negative component")
    if abs(p.sum() - 1.0) > tol:
        raise GeneratorError(f"probability vector sums to {p.sum()!r}, not 1")
    return p


def stochastic_view(L: GeneratorMatrix) -> StochasticMatrixView:
    """Return S = I - L/r with r = max_n L[n,n]; columns sum to one."""
    if not L.is_valid_generator:
        raise GeneratorError("not a valid generator")
    r = float(np.diag(L.matrix).max())
    if r <= 0.0:
        raise GeneratorError("zero generator has no finite rate scale")
    S = np.eye(L.size) - L.matrix / r
    return StochasticMatrixView(entries=S, rate_scale=r)


def _adjacency(L: GeneratorMatrix) -> np.ndarray:
    adj = L.matrix < 0
    np.fill_diagonal(adj, False)
    return adj


def check_irreducible(L: GeneratorMatrix) -> bool:
    """True iff the directed jump graph is strongly connected.

    Edge n -> m exists when L[m,n] < 0; reachability is checked by frontier
    expansion from state 1 in both edge directions.
    """
    adj = _adjacency(L)
    for mat in (adj, adj.T):
        seen = np.zeros(L.size, dtype=bool)
        seen[0] = True
        frontier = seen.copy()
        while frontier.any():
            frontier = mat[:, frontier].any(axis=1) & ~seen
            seen |= frontier
        if not seen.all():
            return False
    return True


def _strong_components(L: GeneratorMatrix):
    graph = sp.csr_matrix(_adjacency(L).T.astype(np.int8))
    n, labels = csgraph.connected_components(graph, directed=True, connection="strong")
    return [np.flatnonzero(labels == i) for i in range(n)]


def check_detailed_balance(L: GeneratorMatrix, tol: float | None = None) -> np.ndarray:
    """Solve L p = 0 and verify the pairwise condition L[m,n] p_n = L[n,m] p_m.

    Returns the normalized equilibrium vector on success. Raises
    ReducibleGeneratorError (with the component decomposition) for reducible
    input and DetailedBalanceError (with the worst offending pair) when the
    pairwise condition fails or no positive stationary vector exists.

    The stationary vector comes from LU solving the rank-deficient system
    with one row replaced by the normalization constraint.
    """
    if not L.is_valid_generator:
        raise GeneratorError("not a valid generator")
    if tol is None:
        tol = _default_tol(L.matrix)
    if not check_irreducible(L):
        raise ReducibleGeneratorError(
            "generator is reducible; strongly connected components reported",
            components=_strong_components(L),
        )
    M = L.size
    A = L.matrix.copy()
    A[-1, :] = 1.0
    b = np.zeros(M)
    b[-1] = 1.0
    try:
        p = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - blocked by irreducibility
        raise DetailedBalanceError(f"stationary solve failed: {exc}") from exc
    if (p <= 0).any():
        raise DetailedBalanceError("no positive stationary solution")
    p = p / p.sum()
    residual = np.abs(L.matrix @ p).max()
    if residual > tol:
        raise DetailedBalanceError(
            f"stationary residual {residual:g} exceeds tolerance", residual=residual
        )
    flux = L.matrix * p[None, :]
    gap = np.abs(flux - flux.T)
    worst = np.unravel_index(np.argmax(gap), gap.shape)
    if gap[worst] > tol:
        m, n = worst
        raise DetailedBalanceError(
            f"detailed balance violated on pair ({m + 1}, {n + 1}): "
            f"L[m,n] p_n = {flux[m, n]!r} vs L[n,m] p_m = {flux[n, m]!r}",
            pair=(m + 1, n + 1),
            residual=float(gap[worst]),
        )
    return p


def symmetrize(L: GeneratorMatrix, p_eq) -> HermitianOperator:
    """Similarity transform R^-1 L R with R = diag(sqrt(p_eq)).

    Isospectral to L when detailed balance holds; the result must be
    symmetric within 1e-12 * max|L| or the transform is rejected.
    """
    p_eq = np.asarray(p_eq, dtype=float)
    if (p_eq <= 0).any():
        raise GeneratorError("equilibrium components must all be positive")
    root = np.sqrt(p_eq)
    Ls = L.matrix * (root[None, :] / root[:, None])
    scale = max(np.abs(L.matrix).max(), 1.0)
    asym = np.abs(Ls - Ls.T).max()
    if asym > 1e-12 * scale:
        raise DetailedBalanceError(
            f"symmetrized operator asymmetric ({asym:g}); detailed balance does not hold"
        )
    return HermitianOperator.from_matrix(Ls)
