"""Bishop-Phelps-Bollobas correction constructions on finite l_inf-sums."""

from .kernels import BACKEND
from .spaces import COMPLEX, REAL, SpaceDesc, SumSpaceDesc

__version__ = "0.1.0"

__all__ = ["BACKEND", "COMPLEX", "REAL", "SpaceDesc", "SumSpaceDesc", "__version__"]
