"""
Numerical verification of the inequalities behind the laboratory
"""

from .registry import CHECKS, run_check
from .report import CheckReport

__all__ = ['CHECKS', 'run_check', 'CheckReport']
