import numpy as np
import pytest

from hydrolim.spectral import GridSpec, build_grid, fft3


@pytest.fixture(scope="session")
def grid8():
    return build_grid(GridSpec(8, 8, 8))


@pytest.fixture(scope="session")
def grid16():
    return build_grid(GridSpec(16, 16, 16))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def from_physical(grid, fn):
    """Spectral coefficients of fn(x, y, z) sampled on the collocation grid."""
    x, y, z = grid.coords()
    return fft3(np.broadcast_to(fn(x, y, z), grid.shape).astype(float))


def mode_dict(grid, c, tol=0.0):
    """Nonzero coefficients keyed by signed integer mode index."""
    out = {}
    for idx in zip(*np.nonzero(np.abs(c) > tol)):
        k = tuple(int(grid_k) for grid_k in (grid.k1[idx[0], 0, 0], grid.k2[0, idx[1], 0], grid.k3[0, 0, idx[2]]))
        out[k] = c[idx]
    return out


def dense_product(grid, a, b):
    """Exact convolution of two coefficient arrays, truncated to the 2/3 mask.

    Loops over all pairs of nonzero modes; no transforms involved.
    """
    ma, mb = mode_dict(grid, a), mode_dict(grid, b)
    out = np.zeros(grid.shape, dtype=complex)
    lim = [n // 3 for n in grid.shape]
    for ka, ca in ma.items():
        for kb, cb in mb.items():
            k = tuple(i + j for i, j in zip(ka, kb))
            if all(abs(k[d]) <= lim[d] for d in range(3)):
                out[k[0] % grid.shape[0], k[1] % grid.shape[1], k[2] % grid.shape[2]] += ca * cb
    return out
