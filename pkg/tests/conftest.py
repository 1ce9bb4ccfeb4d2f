import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def naive_delta(m, order=2):
    """Loop-based regression delta with edge replication, straight from the formula."""
    m = np.asarray(m, dtype=float)
    n_frames = m.shape[0]
    denom = sum(2 * l * l for l in range(1, order + 1))
    out = np.zeros_like(m)
    for t in range(n_frames):
        for l in range(1, order + 1):
            ahead = m[min(t + l, n_frames - 1)]
            behind = m[max(t - l, 0)]
            out[t] += l * (ahead - behind)
    return out / denom


def central_difference(f, x, i, h):
    xp = np.array(x, dtype=float)
    xm = xp.copy()
    xp.flat[i] += h
    xm.flat[i] -= h
    return (f(xp) - f(xm)) / (2 * h)
