"""superhaar: invariant integration on OSp(m|2n), U(p|q) and UOSp(m|2n).

Exact Grassmann calculus plus Haar sampling of the underlying classical
groups, with exact and Monte-Carlo integration modes.
"""

from .grassmann import (
    GaussianRational,
    GrassmannElement,
    berezin,
    nilpotent_series,
)
from .groups import GroupSpec, osp, u, uosp
from .integration import HaarStrategy, IntegralResult, density, integrate
from .supermatrix import SuperMatrix
from .symbols import SuperPolynomial, parse_monomial

__version__ = "0.1.0"

__all__ = [
    "GaussianRational",
    "GrassmannElement",
    "berezin",
    "nilpotent_series",
    "GroupSpec",
    "osp",
    "u",
    "uosp",
    "SuperMatrix",
    "SuperPolynomial",
    "parse_monomial",
    "HaarStrategy",
    "IntegralResult",
    "density",
    "integrate",
    "__version__",
]
