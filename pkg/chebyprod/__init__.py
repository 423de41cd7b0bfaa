"""
chebyprod: worst-case (Chebyshev) bounds on products, sums, minima and maxima
of non-negative random variables known through symmetric first and second moments.
"""
from chebyprod.errors import (ChebyprodError, GridInfeasibleError, InfeasibleSpecError,
                              InvalidSpecError, SolverError)
from chebyprod.events import Event
from chebyprod.moments import MomentSpec, validate
from chebyprod.product_bounds import BoundQuery, BoundResult, left_bound, product_bound, right_bound

__version__ = "0.1.0"
