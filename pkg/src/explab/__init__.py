"""explab: an orbit-counting laboratory for Schottky groups.

Core pieces: exact free-group combinatorics (`freegroup`), Poincare-disc
geometry (`disc`), certified Schottky groups and orbit enumeration
(`schottky`, `orbits`), exponent-of-convergence estimators (`series`),
conjugation injections into normal subgroups (`injections`) and auditable
inequality checks (`checks`).  A FastAPI service (`explab.service`) wraps
it all; the CLI is a thin client of that service.
"""

__version__ = "0.1.0"

from .freegroup import Letter, QuotientHom, ReducedWord, stallings_build
from .schottky import MarkedGroup, schottky_symmetric

__all__ = [
    "Letter",
    "MarkedGroup",
    "QuotientHom",
    "ReducedWord",
    "schottky_symmetric",
    "stallings_build",
    "__version__",
]
