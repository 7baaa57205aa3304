import os
from fractions import Fraction

import numpy as np
import pytest

from cdc_shuffle.core.analysis import ShuffleAnalysis
from cdc_shuffle.core.config_loader import ShuffleSettings
from cdc_shuffle.core.exceptions import DescriptorError
from cdc_shuffle.core.instance import InstanceDescriptor, SystemInstance, generate, load_json

PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
DATA_DIR = os.path.join(PROJECT_ROOT, 'data')
ENV_KEYS = ('LOG_LEVEL', 'CDC_FIELD_BITS', 'CDC_SEED', 'CDC_MAX_RETRIES', 'CDC_SWEEP_SAMPLES', 'CDC_LOG_DIR')


@pytest.fixture
def example1() -> SystemInstance:
    return load_json(os.path.join(DATA_DIR, 'example1.json'))


@pytest.fixture
def example2() -> SystemInstance:
    return load_json(os.path.join(DATA_DIR, 'example2.json'))


@pytest.fixture
def example1_analysis(example1) -> ShuffleAnalysis:
    return ShuffleAnalysis(example1)


@pytest.fixture
def example2_analysis(example2) -> ShuffleAnalysis:
    return ShuffleAnalysis(example2)


@pytest.fixture
def crossed_pairs() -> SystemInstance:
    """
    One IV mapped by {2,3} for {1,4} and one mapped by {1,4} for {2,3}: every
    node has n = 1 in the 4-node round, yet no receiver can be fed from two
    senders of capacity 1.
    """
    return SystemInstance.create(4, 2, 2, [[2], [1], [1], [2]], [[1], [2], [2], [1]])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def settings() -> ShuffleSettings:
    return ShuffleSettings()


@pytest.fixture
def clean_env(monkeypatch):
    """Unsets every config key; values later loaded from .env files are undone at teardown."""
    for key in ENV_KEYS:
        # setenv first so teardown also removes keys that were absent
        monkeypatch.setenv(key, "")
        monkeypatch.delenv(key)
    return monkeypatch


def find_round(analysis: ShuffleAnalysis, label: str):
    return next(cr for cr in analysis.rounds if cr.label() == label)


def random_instance(seed: int, node_range=(3, 6), max_size: int = 24) -> SystemInstance:
    """
    Seeded random_by_load instance with K in node_range and N, Q <= max_size.
    Per-node counts start at ceil(N/K) so the loads can always cover; a failed
    covering draw skips the calling test.
    """
    rng = np.random.default_rng(seed)
    K = int(rng.integers(*node_range))
    N, Q = (int(x) for x in rng.integers(K, max_size + 1, size=2))
    m = [Fraction(int(rng.integers(-(-N // K), N + 1)), N) for _ in range(K)]
    w = [Fraction(int(rng.integers(-(-Q // K), Q + 1)), Q) for _ in range(K)]
    try:
        return generate(InstanceDescriptor.random_by_load(K, m, w, N, Q, seed=seed))
    except DescriptorError as e:
        pytest.skip(f"seed {seed}: {e}")
