"""Random walks on tori by commuting affine expanding maps.

Exact orbit identities for integer-matrix IFS attractors, decidable density
conditions on the torus, constructive stationary measures and Markov chains
in the rational case, Fourier analysis of self-similar measures, and
equidistribution statistics, with a seeded experiment CLI.
"""

from .exactcore import (
    AdaptedNorm,
    IntMatrix,
    IrrationalBasis,
    Scalar,
    TorusPoint,
    adapted_norm,
    commute,
    evaluate,
    fractional_part,
    is_expanding,
    parse_scalar,
)
from .fractal import (
    AffineEndo,
    AffineIFS,
    Word,
    code_prefix,
    h_word_at_zero,
    kappa_ell_s,
    orbit_identity_check,
    sample_word,
    walk_orbit_fixed,
    walk_trajectory,
)
from .groupcond import DensityVerdict, condition_ifs, condition_walk, is_dense
from .chains import (
    EtaChain,
    FiniteStationary,
    build_eta_chain,
    build_finite_stationary,
    limit_law_fourier,
    stationary_distribution,
)
from .spectral import (
    CoefficientFunction,
    DiscreteMeasure,
    SelfSimilarSpec,
    classify_index,
    convolve,
    is_haar_up_to,
)
from .stats import (
    OrbitSample,
    digit_block_freqs,
    star_discrepancy_1d,
    subsequence_compare,
    weyl_sums,
)

__version__ = "0.1.0"
