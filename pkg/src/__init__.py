"""
NICD Lab - Non-interactive correlation distillation on trees
Exact protocol evaluation, optimum search and numerical checks of the
hypercontractive and spectral inequalities behind them
"""

__version__ = "1.0.0"
__author__ = "NICD Lab Team"
