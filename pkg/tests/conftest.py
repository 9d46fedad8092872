import numpy as np
import pytest

from survcopula.copulas import Family

# three dependence levels per family, moderate enough for finite-difference oracles
THETAS = {
    Family.AMH: (-0.5, 0.3, 0.8),
    Family.CLAYTON: (0.5, 2.0, 5.0),
    Family.FRANK: (-3.0, 2.0, 5.0),
    Family.GH: (1.3, 2.0, 3.0),
    Family.JOE: (1.5, 2.0, 3.0),
}

FAMILY_THETA = [(f, th) for f, ths in THETAS.items() for th in ths]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def gauss_legendre_grid(n=200):
    x, w = np.polynomial.legendre.leggauss(n)
    u = (x + 1.0) / 2.0
    wu = w / 2.0
    U, V = np.meshgrid(u, u, indexing="ij")
    return U, V, np.outer(wu, wu)
