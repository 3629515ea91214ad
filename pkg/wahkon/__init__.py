"""
Wahkon: deep networks of learned univariate RKHS link functions.
Library modules for training, penalty tuning, prior diagnostics and benchmarks.
"""
__version__ = "0.1.0"
