import numpy as np
import pytest

from subgap.model import JunctionParams, NumericsConfig
from subgap.floquet import build_floquet_basis
from subgap.leads import RateTable
from subgap.generator import build_generator


def hermitian_basis():
    """16 Hermitian matrices spanning the operator space."""
    out = []
    for i in range(4):
        m = np.zeros((4, 4), complex)
        m[i, i] = 1
        out.append(m)
    for i in range(4):
        for j in range(i + 1, 4):
            m = np.zeros((4, 4), complex)
            m[i, j] = m[j, i] = 1
            out.append(m)
            m = np.zeros((4, 4), complex)
            m[i, j] = 1j
            m[j, i] = -1j
            out.append(m)
    return out


@pytest.fixture(scope="session")
def driven_point():
    """Default study point at the first MAR peak, moderate resolution."""
    p = JunctionParams(g_L=0.5, g_R=0.5, bias=4 / 3)
    basis = build_floquet_basis(p, k_max=12, n_grid=1024, n_steps=6000)
    rates = RateTable(p)
    gen = build_generator(basis, rates)
    return p, basis, rates, gen


@pytest.fixture(scope="session")
def undriven_point():
    """g = 0 two-terminal junction above the transport threshold."""
    p = JunctionParams(bias=5.0)
    basis = build_floquet_basis(p, k_max=6, n_grid=512, n_steps=4000)
    rates = RateTable(p)
    gen = build_generator(basis, rates)
    return p, basis, rates, gen


def fast_numerics(**kw):
    defaults = dict(k_max=10, n_grid=1024, n_steps=6000)
    defaults.update(kw)
    return NumericsConfig(**defaults)
