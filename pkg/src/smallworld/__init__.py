"""Metropolis-Hastings with small-world proposals on multimodal targets.

Submodules: ``targets`` (piecewise log-concave densities), ``proposals``
(ball, Cauchy, uniform and mixture kernels), ``mh_engine`` (seeded chains),
``spectral`` (grid discretization, gaps, conductance), ``bounds`` (analytic
inequality checks), ``tempering`` and ``harness`` (configs, sweeps, CLI).
"""
from .errors import UsageError

__version__ = "0.1.0"
__all__ = ["UsageError", "__version__"]
