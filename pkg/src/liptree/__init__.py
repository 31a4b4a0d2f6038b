"""Root-marginal dynamics of uniform Lipschitz functions on trees."""
from .seqspace import ProbDist, RatioSeq, WeightSeq, inverse_ratio_transform, is_good_weight, \
    norm_modified, ratio_transform
from .recursion import apply_F, apply_psi, iterate_psi

__version__ = "0.1.0"
