"""Low-rank matrix completion from a sparse, noisy subset of entries.

Trim over-represented rows and columns, start from the rescaled rank-r
projection, then run gradient descent over pairs of subspaces.
"""

from .errors import (
    ConvergenceError,
    CutLocusError,
    DegenerateInputError,
    InvalidArgumentError,
    NoGapError,
    RegularizerOverflowError,
)
from .manifold import FactorPoint, TangentVector, distance, geodesic_to, move, project_tangent
from .optimizer import CompletionResult, OptConfig, OptTrace, cost, gradient, minimize, optspace, solve_S
from .sparse_core import ObservedMatrix, SvdTriple, TrimInfo, read_mtx, sample_mask, spectral_norm, top_k_svd, trim, write_mtx
from .spectral_init import RankRProjection, estimate_rank, initial_point, rank_r_project

__version__ = "0.1.0"
