import numpy as np
import pytest

from lapflow.graph_core import generate, laplacian, ground


def mnorm(splitting, v):
    v = np.asarray(v, dtype=float)
    return float(np.sqrt(v @ (splitting.D * v) - v @ (splitting.A @ v)))


def mnorm_rel_error(splitting, x, xstar):
    return mnorm(splitting, np.asarray(x) - np.asarray(xstar)) / mnorm(splitting, xstar)


def grounded_random(n, m, seed, w_min=1.0, w_max=1.0, ref=0):
    g = generate("random", {"n": n, "m": m, "w_min": w_min, "w_max": w_max}, seed=seed)
    return ground(laplacian(g), ref)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
