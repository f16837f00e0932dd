"""Dense Hermitian eigenanalysis and the deflation operators of the gap bound.

Everything downstream (hypothesis diagnostics, dynamics cross-checks, scans)
consumes the Spectrum/GroundSpace objects produced here. Ground-state
components are carried in the scaled form u_n = sqrt(M) <n|E1>, normalized so
that sum_n |u_n|^2 = M.

The deflation operator F(lambda) = H + sum_i (lambda_i + E1) P_i shifts the
ground levels upward while leaving the rest of the spectrum untouched; with
the ground level at zero its ground level equals min(lambda, mu2), which is
the mechanism the whole bound rests on and is verified exactly in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "SpectraError",
    "EigensolverError",
    "HermitianOperator",
    "Spectrum",
    "GroundSpace",
    "DeflatedOperator",
    "DeflationGapResult",
    "norm_proxy",
    "eigendecompose",
    "ground_space",
    "gap",
    "gsl",
    "deflate",
    "gap_via_deflation",
]


class SpectraError(ValueError):
    """Invalid operator or spectral request."""


class EigensolverError(RuntimeError):
    """Eigensolver failed to converge."""


@dataclass(frozen=True)
class HermitianOperator:
    """Dense Hermitian matrix with real-storage fast path.

    ``matrix`` is float64 when every imaginary part vanishes, complex128
    otherwise. ``hermiticity_residual`` records max|H - H^dagger| at
    construction time.
    """

    matrix: np.ndarray
    hermiticity_residual: float

    @classmethod
    def from_matrix(cls, matrix, tol_factor: float = 1e-12) -> "HermitianOperator":
        matrix = np.asarray(matrix)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise SpectraError("operator must be a square matrix")
        if np.iscomplexobj(matrix) and not np.any(matrix.imag):
            matrix = matrix.real
        matrix = matrix.astype(complex if np.iscomplexobj(matrix) else float)
        residual = float(np.abs(matrix - matrix.conj().T).max()) if matrix.size else 0.0
        scale = max(float(np.abs(matrix).max()), 1.0) if matrix.size else 1.0
        if residual > tol_factor * scale:
            raise SpectraError(f"matrix is not Hermitian: residual {residual:g}")
        return cls(matrix=matrix, hermiticity_residual=residual)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.matrix)


def _as_operator(H) -> HermitianOperator:
    if isinstance(H, HermitianOperator):
        return H
    return HermitianOperator.from_matrix(H)


def norm_proxy(H) -> float:
    """Spectral-norm proxy: maximal absolute row sum (infinity norm)."""
    H = _as_operator(H)
    if H.size == 0:
        return 0.0
    return float(np.abs(H.matrix).sum(axis=1).max())


@dataclass(frozen=True)
class Spectrum:
    """Full eigendecomposition with distinct-level clustering.

    ``eigenvalues`` ascend with multiplicities; ``eigenvectors`` holds the
    matching orthonormal columns. ``levels`` lists the distinct values
    E1 < E2 < ... as (value, multiplicity) pairs, clustered by single
    linkage at ``degeneracy_tol``. ``residual_norms[j] = ||H v_j - E_j v_j||``.
    ``marginal_clustering`` warns that some inter-level gap clears the
    tolerance by less than a factor 10, so the level structure is sensitive
    to the tolerance choice.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    levels: tuple
    residual_norms: np.ndarray
    degeneracy_tol: float
    marginal_clustering: bool = False

    @property
    def size(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def residual_max(self) -> float:
        return float(self.residual_norms.max()) if self.residual_norms.size else 0.0

    def to_json_dict(self) -> dict:
        return {
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "levels": [{"value": float(v), "mult": int(m)} for v, m in self.levels],
            "residual_max": self.residual_max,
        }


@dataclass(frozen=True)
class GroundSpace:
    """Lowest level E1 with its degeneracy and scaled components.

    ``vectors`` is M x k orthonormal; ``u`` is sqrt(M) times the components,
    one column per ground vector, so each column satisfies sum |u_n|^2 = M.
    """

    energy: float
    degeneracy: int
    vectors: np.ndarray
    u: np.ndarray

    @property
    def size(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True)
class DeflatedOperator:
    """F = H + sum_i (lambda_i + E1) P_i over the ground vectors of ``ground``."""

    base: HermitianOperator
    shifts: tuple
    ground: GroundSpace
    operator: HermitianOperator


@dataclass(frozen=True)
class DeflationGapResult:
    """Gap read off the deflation plateau; ``plateau`` False means lambda_max
    was not large enough for the two probe points to agree."""

    value: float
    plateau: bool
    lambda_max: float


def _default_degeneracy_tol(eigenvalues: np.ndarray) -> float:
    spread = float(eigenvalues[-1] - eigenvalues[0])
    return 1e-8 * (spread + 1.0)


def _cluster_levels(eigenvalues: np.ndarray, tol: float) -> tuple:
    levels = []
    start = 0
    for j in range(1, len(eigenvalues) + 1):
        if j == len(eigenvalues) or eigenvalues[j] - eigenvalues[j - 1] > tol:
            block = eigenvalues[start:j]
            levels.append((float(block.mean()), int(block.size)))
            start = j
    return tuple(levels)


def eigendecompose(H, degeneracy_tol: float | None = None) -> Spectrum:
    """Full dense Hermitian eigendecomposition (ascending, orthonormal).

    Deterministic for identical input bits. Raises EigensolverError when the
    LAPACK driver fails to converge (the message names the offending block).
    """
    H = _as_operator(H)
    if H.size == 0:
        raise SpectraError("empty operator")
    try:
        w, v = scipy.linalg.eigh(H.matrix, driver="evd", check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise EigensolverError(f"eigendecomposition failed to converge: {exc}") from exc
    if degeneracy_tol is None:
        degeneracy_tol = _default_degeneracy_tol(w)
    residual = H.matrix @ v - v * w[None, :]
    residual_norms = np.linalg.norm(residual, axis=0)
    gaps = np.diff(w)
    marginal = bool(((gaps > degeneracy_tol) & (gaps < 10 * degeneracy_tol)).any())
    return Spectrum(
        eigenvalues=w,
        eigenvectors=v,
        levels=_cluster_levels(w, degeneracy_tol),
        residual_norms=residual_norms,
        degeneracy_tol=degeneracy_tol,
        marginal_clustering=marginal,
    )


def _fix_phase(vector: np.ndarray) -> np.ndarray:
    """Rotate so the largest-magnitude component is real positive."""
    pivot = vector[np.argmax(np.abs(vector))]
    if pivot == 0:
        return vector
    if np.iscomplexobj(vector):
        return vector * (np.conj(pivot) / abs(pivot))
    return vector if pivot > 0 else -vector


def ground_space(spec: Spectrum, degeneracy_tol: float | None = None) -> GroundSpace:
    """Extract the lowest level, counting eigenvalues within the tolerance."""
    if degeneracy_tol is None:
        degeneracy_tol = spec.degeneracy_tol
    w = spec.eigenvalues
    k = int(np.sum(w <= w[0] + degeneracy_tol))
    vectors = np.column_stack([_fix_phase(spec.eigenvectors[:, i]) for i in range(k)])
    M = spec.size
    u = np.sqrt(M) * vectors
    return GroundSpace(energy=float(w[:k].mean()), degeneracy=k, vectors=vectors, u=u)


def gap(spec: Spectrum) -> float:
    """mu2 = E2 - E1 between the two lowest distinct levels."""
    if len(spec.levels) < 2:
        raise SpectraError("no gap: all eigenvalues coincide within tolerance")
    return spec.levels[1][0] - spec.levels[0][0]


def gsl(H) -> float:
    """Ground-state level: the minimal eigenvalue."""
    H = _as_operator(H)
    try:
        w = scipy.linalg.eigh(H.matrix, eigvals_only=True, driver="evd", check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise EigensolverError(f"eigendecomposition failed to converge: {exc}") from exc
    return float(w[0])


def deflate(H, gs: GroundSpace, lambdas) -> DeflatedOperator:
    """Materialize F = H + sum_i (lambda_i + E1) P_i."""
    H = _as_operator(H)
    lambdas = [float(x) for x in np.atleast_1d(lambdas)]
    if len(lambdas) != gs.degeneracy:
        raise SpectraError(
            f"need {gs.degeneracy} shift(s) for a {gs.degeneracy}-fold ground space, "
            f"got {len(lambdas)}"
        )
    F = H.matrix.astype(complex) if not H.is_real else H.matrix.copy()
    for i, lam in enumerate(lambdas):
        v = gs.vectors[:, i]
        F = F + (lam + gs.energy) * np.outer(v, v.conj())
    return DeflatedOperator(
        base=H,
        shifts=tuple(lambdas),
        ground=gs,
        operator=HermitianOperator.from_matrix(F),
    )


def gap_via_deflation(H, gs: GroundSpace | None = None, lambda_max: float | None = None) -> DeflationGapResult:
    """Read mu2 off the deflation plateau: GSL[F(lambda_max, ...)] - E1.

    With lambda_max on the plateau this equals the spectral gap; the result
    carries ``plateau=False`` when the probes at lambda_max and lambda_max/2
    disagree, signalling that lambda_max was too small.
    """
    H = _as_operator(H)
    spec = eigendecompose(H)
    if gs is None:
        gs = ground_space(spec)
    if lambda_max is None:
        spread = float(spec.eigenvalues[-1] - spec.eigenvalues[0])
        lambda_max = 10.0 * spread
    if lambda_max <= 0:
        raise SpectraError("lambda_max must be positive")
    k = gs.degeneracy
    g_full = gsl(deflate(H, gs, [lambda_max] * k).operator) - gs.energy
    g_half = gsl(deflate(H, gs, [lambda_max / 2.0] * k).operator) - gs.energy
    tol = 1e-9 * max(1.0, norm_proxy(H))
    return DeflationGapResult(
        value=g_full,
        plateau=bool(abs(g_full - g_half) <= tol),
        lambda_max=float(lambda_max),
    )
