"""Core cube, tree and Markov chain computations"""

from .cube import BooleanFunction, CubeFunction, parse_boolean_function
from .errors import NicdLabError
from .markov import ReversibleChain, StayQuery
from .nicd import NicdInstance, Protocol, success_probability
from .settings import LabSettings

__all__ = [
    'BooleanFunction',
    'CubeFunction',
    'parse_boolean_function',
    'NicdLabError',
    'ReversibleChain',
    'StayQuery',
    'NicdInstance',
    'Protocol',
    'success_probability',
    'LabSettings',
]
