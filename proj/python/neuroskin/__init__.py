"""Neuro-membrane finite-element model and hybrid PSO / quasi-Newton training."""

from ._neuroskin import *  # noqa: F401,F403
from ._neuroskin import __doc__  # noqa: F401

__version__ = "0.1.0"
