"""Good rotations: exactly representable (cos, sin) pairs with c**2 + s**2 close to 1.

Modules
  grid        grid points (x, y, p) and their exact float values
  scan        exhaustive small-defect search at a given precision
  numtheory   factoring, Gaussian integers, sums of two squares
  family      catalogs from the circles 2**(2n) + 1
  drift       iterating the rotation map, cycles, regimes
  celestial   SI2 integration of a perturbed Kepler problem in a rotating frame
  cli         command line front end
"""
__version__ = "0.1.0"

from .grid import GridPoint, defect, theta_of, to_sin_cos
from .numtheory import count_quadruplets, enumerate_solutions, factorize, gaussian_root
from .scan import nearest_good_angle, scan
from .family import emit_constants, generate_family

__all__ = [
    "__version__",
    "GridPoint",
    "defect",
    "theta_of",
    "to_sin_cos",
    "factorize",
    "count_quadruplets",
    "enumerate_solutions",
    "gaussian_root",
    "scan",
    "nearest_good_angle",
    "generate_family",
    "emit_constants",
]
