"""Conformal false-negative-rate calibration for 3D detection candidates."""

from ._crcdet import *  # noqa: F401,F403
from ._crcdet import __doc__  # noqa: F401

__version__ = "0.1.0"
