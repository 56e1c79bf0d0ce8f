import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def constant_output_net(net, values):
    """Zero every layer and pin the final bias so the net is a constant map."""
    for w in net.weights:
        w[...] = 0.0
    for b in net.biases:
        b[...] = 0.0
    net.biases[-1][...] = np.asarray(values, dtype=np.float64)
    return net
