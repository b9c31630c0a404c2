"""
fixtrack: fixed-time tracking of the minimizer of a barrier-relaxed,
CLF-constrained control cost, with an exponential-convergence baseline
and an independent Newton oracle.
"""

__version__ = '0.1.0'
