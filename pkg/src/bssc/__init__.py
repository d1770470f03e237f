"""Capacity of the binary state symmetric channel with and without feedback and cost."""

from .capacity import (
    CapacityResult,
    capacity_fb,
    capacity_fb_cost,
    capacity_fb_ineq,
    capacity_nofb,
    kappa_max,
    kappa_star,
    lambda_of,
    markov_nofb_policy,
)
from .channel import (
    BsscParams,
    CanonicalFlags,
    ChannelKernel,
    CostSpec,
    FeedbackPolicy,
    MarkovPolicy,
    bssc_kernel,
    canonicalize,
    expected_cost,
    state_decompose,
)
from .errors import BsscError
from .probability import BinaryDist, JointTable, Matrix2, binary_entropy, directed_information

__version__ = "0.1.0"

__all__ = [
    "BinaryDist",
    "BsscError",
    "BsscParams",
    "CanonicalFlags",
    "CapacityResult",
    "ChannelKernel",
    "CostSpec",
    "FeedbackPolicy",
    "JointTable",
    "MarkovPolicy",
    "Matrix2",
    "binary_entropy",
    "bssc_kernel",
    "canonicalize",
    "capacity_fb",
    "capacity_fb_cost",
    "capacity_fb_ineq",
    "capacity_nofb",
    "directed_information",
    "expected_cost",
    "kappa_max",
    "kappa_star",
    "lambda_of",
    "markov_nofb_policy",
    "state_decompose",
]
