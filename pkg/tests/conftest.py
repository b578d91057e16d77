"""
Shared test fixtures and configuration for NICD Lab tests
"""

import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.core.markov import product_noise_chain
from src.core.nicd import path_instance, star_instance
from src.core.settings import LabSettings


@pytest.fixture
def rng():
    """Seeded generator so sampled cases are reproducible"""
    return np.random.default_rng(20240611)


@pytest.fixture
def settings(tmp_path):
    """Settings backed by a temporary file"""
    return LabSettings(tmp_path / 'nicd_lab.json')


@pytest.fixture
def path3_instance():
    """Path with 2 edges, every vertex playing, n=1, rho=0.5"""
    return path_instance(2, 0.5, 1)


@pytest.fixture
def star2_instance():
    """Star with 2 playing leaves, n=1, rho=0.5"""
    return star_instance(2, 0.5, 1)


@pytest.fixture
def two_state_chain():
    """T_rho on a single bit at rho=0.5"""
    return product_noise_chain(1, 0.5)


@pytest.fixture
def instance_file(tmp_path):
    """Two adjacent players using the first-bit dictator"""
    path = tmp_path / 'instance.json'
    path.write_text(json.dumps({
        "n": 2,
        "rho": 0.5,
        "edges": [[0, 1]],
        "players": [0, 1],
        "protocol": {"0": "dict:1", "1": "dict:1"},
    }))
    return path


@pytest.fixture
def chain_file(tmp_path):
    """Two-state T_0.5 chain file"""
    path = tmp_path / 'chain.json'
    path.write_text(json.dumps({
        "size": 2,
        "rows": [[0.75, 0.25], [0.25, 0.75]],
        "pi": [0.5, 0.5],
    }))
    return path
