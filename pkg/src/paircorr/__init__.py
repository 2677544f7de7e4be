"""Pair correlation of dilated real sequences modulo one, additive energy
counting, and the numerical machinery behind metric Poissonian results."""

__version__ = "0.1.0"

from .errors import PairCorrError
from .sequences import RealSeq, SequenceSpec, materialize, from_values

__all__ = ["PairCorrError", "RealSeq", "SequenceSpec", "materialize", "from_values", "__version__"]
