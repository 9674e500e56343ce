"""Subgeometric convergence rates for Markov processes: rate functions,
drift certificates and reproducible simulation of three model families."""

__version__ = "0.1.0"

from .rates import RateFunction, polynomial_rate, tradeoff_menu  # noqa: E402,F401
from .jump import JumpModel, JumpRates, JumpWeights  # noqa: E402,F401
from .langevin import LangevinModel, TargetDensity  # noqa: E402,F401
from .cpou import CPOUModel, JumpLaw  # noqa: E402,F401
