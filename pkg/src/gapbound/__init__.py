"""Spectral-gap lower-bound diagnostics for master equations.

Builds weighted-Laplacian generators and general Hermitian operators,
computes their spectral gaps, and mechanically checks every ingredient of
the ergodic lower bound mu2 >= min_n V_n: deflation identities, the
two-phase U-operator levels, additive eigenvalue (Weyl) inequalities,
ergodicity classification and random-walk corollaries, on exact cases and
seeded random ensembles.
"""

from .bound import (
    Decomposition,
    GapBoundReport,
    HypothesisProfile,
    UOperator,
    bound_verdict,
    decompose,
    ergodicity_report,
    gsl_alpha_u,
    lambda_schedule,
    rw_bound,
    s_and_s_star,
    secular_smallest_root,
    sigma_max,
    u_operator,
    weyl_check,
)
from .dynamics import (
    JumpHistogram,
    RelaxationFit,
    Trajectory,
    evolve,
    evolve_spectral,
    jump_process_sample,
    relaxation_rate,
    stationary_distribution,
)
from .ensembles import (
    EnsembleSpec,
    ScanRow,
    complete_graph,
    cycle_graph,
    er_connected,
    infinitesimal_rescale,
    metropolis_chain,
    random_regular,
    scan,
    star_graph,
)
from .generator import (
    DetailedBalanceError,
    GeneratorError,
    GeneratorMatrix,
    ReducibleGeneratorError,
    StochasticMatrixView,
    build_generator,
    check_detailed_balance,
    check_irreducible,
    generator_from_matrix,
    stochastic_view,
    symmetrize,
)
from .rng import derive_seed, make_rng
from .spectra import (
    DeflatedOperator,
    DeflationGapResult,
    GroundSpace,
    HermitianOperator,
    Spectrum,
    deflate,
    eigendecompose,
    gap,
    gap_via_deflation,
    ground_space,
    gsl,
    norm_proxy,
)

__version__ = "0.1.0"
