"""Valuations on piecewise-affine convex functions."""
from .convexfn import (
    NOT_CONVEX,
    CellPA,
    MaxAffine,
    conjugate,
    epi_scale,
    eval_fn,
    guarded_min,
    inf_convolve,
    pointwise_max,
    same_function,
)
from .decompose import homogeneous_components, polarize, polynomial_fit
from .errors import EpivalError
from .geometry import Polyhedron
from .hessian import Window, duality_check, hessian_measure, ps_volume_mc
from .valuations import TestFunction, ValuationOracle, dual_zeta_valuation, zeta_oracle, zeta_valuation

__version__ = "0.1.0"
