"""Improved wavelet scattering network: scattering features, MLP classifier,
FLOPs model and metrics (C++ core)."""

from ._core import *  # noqa: F401,F403
from ._core import DataError, NumericError  # noqa: F401

__version__ = "0.1.0"
