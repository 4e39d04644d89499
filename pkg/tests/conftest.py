import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from iaskit import Dag, GraphSamplerConfig, make_rng, sample_dag, substream

# The two 6-node reference graphs used throughout: in both, E drives X1
# and X2 and the response has the downstream child X4.
FIG_LEFT_EDGES = [(0, 1), (0, 2), (1, 3), (2, 3), (2, 4), (3, 5), (5, 4)]
FIG_RIGHT_EDGES = [(0, 1), (0, 2), (1, 5), (2, 3), (2, 4), (3, 5), (5, 4)]


@pytest.fixture
def fig_left():
    return Dag(4, FIG_LEFT_EDGES)


@pytest.fixture
def fig_right():
    return Dag(4, FIG_RIGHT_EDGES)


def chain_dag(d):
    """E -> X1 -> ... -> Xd -> Y."""
    return Dag(d, [(i, i + 1) for i in range(d + 1)])


def parallel_paths_dag(n_paths):
    """n disjoint directed two-predictor paths from E to Y; d = 2n."""
    edges = []
    for i in range(n_paths):
        a, b = 2 * i + 1, 2 * i + 2
        edges += [(0, a), (a, b), (b, 2 * n_paths + 1)]
    return Dag(2 * n_paths, edges)


def random_dags(n, seed, d_range=(3, 8), mode="exogenous", density_prior=(0.1, 0.9)):
    """Deterministic stream of sampled test graphs."""
    rng = make_rng(seed)
    out = []
    for i in range(n):
        d = int(rng.integers(d_range[0], d_range[1] + 1))
        config = GraphSamplerConfig(
            d=d,
            n_interventions=(1, d),
            mode=mode,
            density_prior=density_prior,
        )
        out.append(sample_dag(config, substream(seed, i)))
    return out
