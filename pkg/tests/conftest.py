import numpy as np
import pytest

from gswalk.instances import Instance


@pytest.fixture
def rng():
    return np.random.default_rng(np.random.SeedSequence(entropy=2024))


def make_columns(*cols) -> Instance:
    """Instance whose columns are the given vectors."""
    return Instance(np.column_stack([np.asarray(c, float) for c in cols]))
