"""qsdec: exact and numeric machinery for decoupling experiments on
quadratic surfaces.

Exact side: polynomial algebra and minors, non-degeneracy hypothesis
checkers, BCCT/Brascamp-Lieb transversality, sublevel decompositions, cube
covers, and cap selection.  Numeric side: extension operators on lattices,
decoupling-ratio estimators reproducing the sharpness exponents, and the
exponent-descent recursion.
"""

__version__ = "0.1.0"

from . import polyalg, quadforms, hypotheses, transversality, varieties, capselect
from . import decnum
from .kernels import backend_name

__all__ = [
    "polyalg",
    "quadforms",
    "hypotheses",
    "transversality",
    "varieties",
    "capselect",
    "decnum",
    "backend_name",
    "__version__",
]
