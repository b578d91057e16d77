"""
Instance and chain files

Instance file (JSON object):
    n: string length
    rho: correlation in [0, 1]
    edges: list of [u, v] pairs over 0-based vertices
    players: list of player vertices (all vertices when omitted)
    vertex_count: optional, defaults to len(edges) + 1
    protocol: optional mapping vertex id -> function encoding
    allow_unbalanced: optional boolean

Chain file (JSON object):
    size: number of states
    rows: size lists of size transition probabilities
    pi: optional stationary measure (derived when omitted)
"""

import json
import logging
from pathlib import Path
from typing import Optional, Tuple, Union

from .errors import EncodingError, InvalidInstance, NotReversible
from .markov import MAX_STATES, ReversibleChain
from .nicd import NicdInstance, Protocol, load_protocol

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _read_json(path: PathLike, error: type) -> dict:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"Could not read {path}: {e}")
        raise error(f"could not read {path}: {e}") from e
    if not isinstance(data, dict):
        raise error(f"{path} must hold a JSON object")
    return data


def instance_from_dict(data: dict) -> Tuple[NicdInstance, Optional[Protocol]]:
    """
    Raises:
        InvalidInstance: missing or malformed fields
        EncodingError / UnbalancedFunction: a bad protocol entry
    """
    try:
        n = int(data["n"])
        rho = float(data["rho"])
        edges = [tuple(int(x) for x in edge) for edge in data["edges"]]
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidInstance(f"instance needs integer n, real rho and [u, v] edges: {e}") from e
    if any(len(edge) != 2 for edge in edges):
        raise InvalidInstance("every edge must be a [u, v] pair")
    vertex_count = int(data.get("vertex_count", len(edges) + 1))
    players = data.get("players")
    inst = NicdInstance(vertex_count, edges, rho, n, players)
    protocol = None
    if data.get("protocol") is not None:
        if not isinstance(data["protocol"], dict):
            raise EncodingError("protocol must map vertex ids to function encodings")
        protocol = load_protocol(data["protocol"], n, bool(data.get("allow_unbalanced", False)))
    return inst, protocol


def load_instance(path: PathLike) -> Tuple[NicdInstance, Optional[Protocol]]:
    """Read an instance file and its optional protocol"""
    inst, protocol = instance_from_dict(_read_json(path, InvalidInstance))
    logger.info(f"Loaded {inst.describe()} from {path}")
    return inst, protocol


def instance_to_dict(inst: NicdInstance, protocol: Optional[Protocol] = None) -> dict:
    data = {
        "n": inst.n,
        "rho": inst.rho.rho,
        "vertex_count": inst.vertex_count,
        "edges": [list(e) for e in inst.edges],
        "players": sorted(inst.players),
    }
    if protocol is not None:
        data["protocol"] = {str(v): f.label for v, f in sorted(protocol.functions.items())}
        if protocol.allow_unbalanced:
            data["allow_unbalanced"] = True
    return data


def save_instance(path: PathLike, inst: NicdInstance, protocol: Optional[Protocol] = None):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(instance_to_dict(inst, protocol), f, indent=2)


def chain_from_dict(data: dict, max_states: int = MAX_STATES) -> ReversibleChain:
    """
    Raises:
        EncodingError: missing or malformed fields
        NotReversible: the matrix fails validation
    """
    try:
        rows = [[float(x) for x in row] for row in data["rows"]]
    except (KeyError, TypeError, ValueError) as e:
        raise EncodingError(f"chain needs a rows matrix of reals: {e}") from e
    size = int(data.get("size", len(rows)))
    if size != len(rows):
        raise EncodingError(f"size {size} does not match {len(rows)} rows")
    pi = data.get("pi")
    return ReversibleChain(rows, pi, max_states=max_states)


def load_chain(path: PathLike, max_states: int = MAX_STATES) -> ReversibleChain:
    """Read and validate a chain file"""
    data = _read_json(path, EncodingError)
    try:
        chain = chain_from_dict(data, max_states)
    except NotReversible:
        logger.error(f"Chain in {path} is not reversible")
        raise
    logger.info(f"Loaded chain with {chain.size} states from {path}")
    return chain


def chain_to_dict(chain: ReversibleChain) -> dict:
    return {
        "size": chain.size,
        "rows": chain.transition.tolist(),
        "pi": chain.stationary.tolist(),
    }
