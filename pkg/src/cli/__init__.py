"""Command-line surface"""

from .commands import run
from .config import RunConfig, build_parser

__all__ = ['build_parser', 'RunConfig', 'run']
