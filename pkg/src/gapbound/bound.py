"""Hypothesis diagnostics and conclusion check for the gap lower bound.

The operator is split as H = V + K into a diagonal potential and an
off-diagonal kinetic part K = -sigma. The bound machinery measures, per
instance, everything the lower-bound theorem needs:

* sigma        -- max over pairs (and ground vectors) of |sigma_mn| / |u_n u_m|,
* ergodicity   -- whether all (or all coupled) ground components stay away
                  from zero,
* s, s_star    -- max squared component and the magnitude of the lowest
                  eigenvalue of the U operator (the intensive-phase level),
* E1/M         -- the ground-level density,

and compares the measured gap mu2 against min_n V_n. The asymptotic
hypotheses are replaced by explicit finite-size thresholds; the verdict
`bound-violated-hypotheses-hold` is the falsification trigger that the test
suite requires to never fire.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .generator import GeneratorError, GeneratorMatrix, check_irreducible
from .spectra import (
    GroundSpace,
    HermitianOperator,
    eigendecompose,
    gap,
    ground_space,
    norm_proxy,
)

__all__ = [
    "ErgodicityError",
    "Decomposition",
    "ErgodicityReport",
    "UOperator",
    "AlphaULevel",
    "WeylCheck",
    "HypothesisProfile",
    "GapBoundReport",
    "RandomWalkBound",
    "VERDICT_OK",
    "VERDICT_FAIL",
    "VERDICT_VIOLATED",
    "decompose",
    "sigma_max",
    "ergodicity_report",
    "u_operator",
    "s_and_s_star",
    "secular_smallest_root",
    "gsl_alpha_u",
    "weyl_check",
    "lambda_schedule",
    "bound_verdict",
    "rw_bound",
]

VERDICT_OK = "hypotheses-hold-and-bound-holds"
VERDICT_FAIL = "hypotheses-fail"
VERDICT_VIOLATED = "bound-violated-hypotheses-hold"

ERGODIC = "ergodic"
WEAKLY_ERGODIC = "weakly-ergodic"
NON_ERGODIC = "non-ergodic"


class ErgodicityError(ValueError):
    """A zero ground component meets a nonzero coupling; the instance must go
    through the weak/non-ergodic classification instead of sigma_max."""


@dataclass(frozen=True)
class Decomposition:
    """H = diag(potential) + kinetic, with sigma = -kinetic off the diagonal."""

    potential: np.ndarray
    kinetic: np.ndarray
    sigma: np.ndarray

    @property
    def size(self) -> int:
        return self.potential.shape[0]

    def operator_matrix(self) -> np.ndarray:
        return np.diag(self.potential.astype(self.kinetic.dtype)) + self.kinetic


@dataclass(frozen=True)
class ErgodicityReport:
    classification: str
    min_abs_u: float
    argmin_state: int
    touched_min: float
    n_touched: int


@dataclass(frozen=True)
class UOperator:
    """M * (sum of ground projectors) minus the diagonal of squared components.

    Zero diagonal by construction; Hermitian. The off-diagonal entries are
    conj(u_m) u_n summed over the ground vectors.
    """

    matrix: np.ndarray
    ground: GroundSpace


@dataclass(frozen=True)
class AlphaULevel:
    """GSL[alpha U] together with the two-branch formula value it must track."""

    value: float
    formula: float
    uniform: bool
    s_star: float
    s_diamond: float


@dataclass(frozen=True)
class WeylCheck:
    holds: bool
    slack: float
    lhs: float
    rhs: float


@dataclass(frozen=True)
class HypothesisProfile:
    sigma: float
    g_value: float
    s: float
    s_star: float
    ergodicity: str
    min_abs_u: float
    lambda_schedule: float
    e1_over_m: float


@dataclass(frozen=True)
class GapBoundReport:
    M: int
    E1: float
    mu2: float
    degeneracy: int
    min_V: float
    min_V_index: int
    ratio: float
    profile: HypothesisProfile
    verdict: str

    def to_json_dict(self) -> dict:
        p = self.profile
        return {
            "M": self.M,
            "E1": self.E1,
            "mu2": self.mu2,
            "k": self.degeneracy,
            "min_V": self.min_V,
            "ratio": self.ratio,
            "sigma": p.sigma,
            "g": p.g_value,
            "s": p.s,
            "s_star": p.s_star,
            "min_abs_u": p.min_abs_u,
            "ergodicity": p.ergodicity,
            "E1_over_M": p.e1_over_m,
            "lambda_schedule": p.lambda_schedule,
            "verdict": self.verdict,
        }


@dataclass(frozen=True)
class RandomWalkBound:
    min_degree: float
    mu2: float
    ratio: float


def _as_operator(H) -> HermitianOperator:
    if isinstance(H, HermitianOperator):
        return H
    return HermitianOperator.from_matrix(H)


def decompose(H) -> Decomposition:
    """Split H into its diagonal potential and zero-diagonal kinetic part."""
    H = _as_operator(H)
    potential = H.matrix.diagonal().real.copy()
    kinetic = H.matrix.copy()
    np.fill_diagonal(kinetic, 0.0)
    return Decomposition(potential=potential, kinetic=kinetic, sigma=-kinetic)


def _touched_states(sigma: np.ndarray) -> np.ndarray:
    mask = sigma != 0
    np.fill_diagonal(mask, False)
    return mask.any(axis=0) | mask.any(axis=1)


def sigma_max(dec: Decomposition, gs: GroundSpace) -> float:
    """max over ground vectors i and pairs m != n of |sigma_mn| / |u_n u_m|.

    Pairs with sigma_mn = 0 are skipped; the empty maximum is 0. A nonzero
    coupling meeting an exactly-zero component raises ErgodicityError.
    """
    mask = dec.sigma != 0
    np.fill_diagonal(mask, False)
    if not mask.any():
        return 0.0
    abs_sigma = np.abs(dec.sigma)
    out = 0.0
    for i in range(gs.degeneracy):
        absu = np.abs(gs.u[:, i])
        weight = np.outer(absu, absu)
        if (weight[mask] == 0).any():
            raise ErgodicityError(
                "nonzero coupling meets a zero ground-state component; "
                "use ergodicity_report for weak/non-ergodic classification"
            )
        out = max(out, float((abs_sigma[mask] / weight[mask]).max()))
    return out


def ergodicity_report(gs: GroundSpace, dec: Decomposition, threshold: float = 1e-3) -> ErgodicityReport:
    """Classify the ground space as ergodic / weakly-ergodic / non-ergodic.

    Ergodic: every |u_n| (for every ground vector) is at least ``threshold``.
    Weakly ergodic: only components coupled by some nonzero sigma row or
    column clear the threshold, while at least one decoupled component does
    not. Anything else (including an uncoupled ground space with a small
    component) is non-ergodic.
    """
    absu = np.abs(gs.u)
    per_state_min = absu.min(axis=1)
    argmin_state = int(np.argmin(per_state_min))
    min_abs_u = float(per_state_min[argmin_state])
    touched = _touched_states(dec.sigma)
    n_touched = int(touched.sum())
    touched_min = float(per_state_min[touched].min()) if n_touched else math.inf
    if min_abs_u >= threshold:
        cls = ERGODIC
    elif n_touched and touched_min >= threshold:
        cls = WEAKLY_ERGODIC
    else:
        cls = NON_ERGODIC
    return ErgodicityReport(
        classification=cls,
        min_abs_u=min_abs_u,
        argmin_state=argmin_state + 1,
        touched_min=touched_min,
        n_touched=n_touched,
    )


def u_operator(gs: GroundSpace) -> UOperator:
    """Build U = M * sum_i P_i - sum_i D_i (zero diagonal, Hermitian)."""
    U = None
    for i in range(gs.degeneracy):
        u = gs.u[:, i]
        term = np.outer(u, u.conj())
        U = term if U is None else U + term
    np.fill_diagonal(U, 0.0)
    return UOperator(matrix=U, ground=gs)


def _min_max_eigs(matrix: np.ndarray) -> tuple[float, float]:
    w = scipy.linalg.eigh(matrix, eigvals_only=True, check_finite=False)
    return float(w[0]), float(w[-1])


def s_and_s_star(gs: GroundSpace) -> tuple[float, float]:
    """s = max_n |u_n|^2 and s_star = -lambda_min(U), per ground vector.

    For a degenerate ground space both quantities are computed per vector
    and the maxima are returned. The eigensolve route is exact; the secular
    characterization is available separately as a cross-check.
    """
    s = 0.0
    s_star = 0.0
    for i in range(gs.degeneracy):
        u = gs.u[:, i]
        single = GroundSpace(
            energy=gs.energy, degeneracy=1, vectors=gs.vectors[:, i : i + 1], u=u[:, None]
        )
        U = u_operator(single).matrix
        lo, _ = _min_max_eigs(U)
        s = max(s, float(np.abs(u).max() ** 2))
        s_star = max(s_star, -lo)
    return s, s_star


def secular_smallest_root(squared_components) -> float:
    """Smallest root of sum_n c_n / (mu + c_n) = 1 for c_n = |u_n|^2.

    The root sits between the two leftmost poles -max(c) and -second(c) and
    equals the lowest eigenvalue of the U operator; it is found by bisection,
    assuming the two largest c_n are distinct.
    """
    c = np.sort(np.asarray(squared_components, dtype=float))[::-1]
    if c.size < 2:
        raise ValueError("need at least two components")
    if c[0] <= c[1]:
        raise ValueError("the two largest squared components must be distinct")

    def f(mu: float) -> float:
        return float((c / (mu + c)).sum() - 1.0)

    span = c[0] - c[1]
    lo = -c[0] + span * 1e-15
    hi = -c[1] - span * 1e-15
    if not (f(lo) > 0 > f(hi)):
        raise ValueError("secular function does not bracket a root; degenerate poles?")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def gsl_alpha_u(alpha: float, gs: GroundSpace) -> AlphaULevel:
    """GSL[alpha U] by direct eigensolve, compared against the branch formula.

    Uniform ground state: -|alpha|(M-1) for alpha < 0, -|alpha| for
    alpha >= 0, and the agreement is exact (asserted). General ground state:
    the alpha >= 0 branch uses s_star; the alpha < 0 branch uses M - s_diamond
    with s_diamond = M - lambda_max(U), reported rather than asserted beyond
    the interlacing bound s_star <= s.
    """
    M = gs.size
    U = u_operator(gs).matrix
    lo, hi = _min_max_eigs(U)
    s_star = -lo
    s_diamond = M - hi
    value = alpha * hi if alpha < 0 else alpha * lo
    uniform = gs.degeneracy == 1 and bool(
        np.allclose(np.abs(gs.u) ** 2, 1.0, rtol=0.0, atol=1e-12)
    )
    if alpha < 0:
        formula = -abs(alpha) * (M - 1) if uniform else -abs(alpha) * (M - s_diamond)
    else:
        formula = -abs(alpha) * 1.0 if uniform else -abs(alpha) * s_star
    tol = 1e-10 * M * max(1.0, abs(alpha))
    if uniform and abs(value - formula) > tol:
        raise AssertionError(
            f"uniform-state level formula violated: {value!r} vs {formula!r}"
        )
    if not uniform and alpha >= 0 and abs(value - formula) > tol:
        raise AssertionError(
            f"intensive-branch level disagrees with s_star: {value!r} vs {formula!r}"
        )
    return AlphaULevel(value=float(value), formula=float(formula), uniform=uniform,
                       s_star=float(s_star), s_diamond=float(s_diamond))


def weyl_check(dec: Decomposition, gs: GroundSpace, lam: float) -> WeylCheck:
    """Verify GSL[H + lam P] >= min_n(V_n + (lam/M) d_n) + GSL[K + (lam/M) U].

    P is the sum of ground projectors and d_n the summed squared components;
    this is an unconditional consequence of the additive eigenvalue
    inequality, so it must hold (up to roundoff) for every Hermitian input.
    """
    M = dec.size
    H = dec.operator_matrix()
    P = gs.vectors @ gs.vectors.conj().T
    lhs, _ = _min_max_eigs(H + lam * P)
    d = (np.abs(gs.u) ** 2).sum(axis=1)
    diag_part = float((dec.potential + (lam / M) * d).min())
    U = u_operator(gs).matrix
    kin_part, _ = _min_max_eigs(dec.kinetic + (lam / M) * U)
    rhs = diag_part + kin_part
    slack = lhs - rhs
    scale = norm_proxy(HermitianOperator.from_matrix(H))
    return WeylCheck(holds=bool(slack >= -1e-10 * max(1.0, scale)), slack=float(slack),
                     lhs=float(lhs), rhs=float(rhs))


def lambda_schedule(M: int, g_value: float) -> float:
    """Deflation-shift schedule lambda(M) = M * sqrt(g)."""
    if g_value <= 0:
        raise ValueError("g must be positive")
    return M * math.sqrt(g_value)


def bound_verdict(
    H,
    g_value: float,
    ergodicity_threshold: float = 1e-3,
    e1_threshold: float = 1e-6,
    degeneracy_tol: float | None = None,
) -> GapBoundReport:
    """Run the full diagnostic pipeline and compare mu2 against min_n V_n.

    The finite-size hypothesis surrogate passes when sigma < g, the ground
    space is ergodic (or weakly ergodic with s_star * sqrt(g) below the
    ergodicity threshold) and |E1|/M is below its threshold. The verdict
    records whether the bound conclusion held on top of that.
    """
    if g_value <= 0:
        raise ValueError("g must be positive")
    H = _as_operator(H)
    spec = eigendecompose(H, degeneracy_tol=degeneracy_tol)
    gs = ground_space(spec)
    dec = decompose(H)
    M = H.size
    ergo = ergodicity_report(gs, dec, threshold=ergodicity_threshold)
    try:
        sigma = sigma_max(dec, gs)
    except ErgodicityError:
        sigma = math.inf
    s, s_star = s_and_s_star(gs)
    e1_over_m = gs.energy / M
    mu2 = gap(spec)
    min_idx = int(np.argmin(dec.potential))
    min_v = float(dec.potential[min_idx])
    profile = HypothesisProfile(
        sigma=sigma,
        g_value=g_value,
        s=s,
        s_star=s_star,
        ergodicity=ergo.classification,
        min_abs_u=ergo.min_abs_u,
        lambda_schedule=lambda_schedule(M, g_value),
        e1_over_m=e1_over_m,
    )
    ergodic_ok = ergo.classification == ERGODIC or (
        ergo.classification == WEAKLY_ERGODIC
        and s_star * math.sqrt(g_value) < ergodicity_threshold
    )
    hypotheses = sigma < g_value and ergodic_ok and abs(e1_over_m) < e1_threshold
    bound_ok = mu2 >= min_v - 1e-9 * max(1.0, norm_proxy(H))
    if not hypotheses:
        verdict = VERDICT_FAIL
    elif bound_ok:
        verdict = VERDICT_OK
    else:
        verdict = VERDICT_VIOLATED
    ratio = mu2 / min_v if min_v != 0 else math.inf
    return GapBoundReport(
        M=M,
        E1=gs.energy,
        mu2=mu2,
        degeneracy=gs.degeneracy,
        min_V=min_v,
        min_V_index=min_idx + 1,
        ratio=ratio,
        profile=profile,
        verdict=verdict,
    )


def rw_bound(L: GeneratorMatrix) -> RandomWalkBound:
    """Random-walk corollary: compare mu2 of a symmetric walk to min degree."""
    if not L.is_symmetric:
        raise GeneratorError("random-walk corollary requires a symmetric generator")
    if not check_irreducible(L):
        raise GeneratorError("random-walk corollary requires an irreducible generator")
    min_degree = float(np.diag(L.matrix).min())
    spec = eigendecompose(HermitianOperator.from_matrix(L.matrix))
    mu2 = gap(spec)
    return RandomWalkBound(min_degree=min_degree, mu2=mu2, ratio=mu2 / min_degree)
