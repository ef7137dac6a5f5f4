import math

import numpy as np
import pytest
from hypothesis import settings

from spatial_slepian.slepian import PolarCap, SphericalEllipse, slepian_basis, zonal_basis
from spatial_slepian.sphere import HarmonicCoefficients
from spatial_slepian.wigner import EulerAngles

settings.register_profile("repo", deadline=None, max_examples=30, derandomize=True)
settings.load_profile("repo")

FIG1_ROTATION = EulerAngles.from_degrees(60, 90, 45)


def random_coeffs(L, rng, real_only=False):
    c = rng.standard_normal(L * L)
    if not real_only:
        c = c + 1j * rng.standard_normal(L * L)
    return HarmonicCoefficients(L, c)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def fig1_ellipse():
    return SphericalEllipse(math.radians(15), math.radians(20), FIG1_ROTATION)


@pytest.fixture(scope="session")
def lva_ellipse():
    return SphericalEllipse(math.radians(20), math.radians(25), FIG1_ROTATION)


@pytest.fixture(scope="session")
def ellipse_basis_32(fig1_ellipse):
    return slepian_basis(fig1_ellipse, 32)


@pytest.fixture(scope="session")
def ellipse_basis_8(fig1_ellipse):
    return slepian_basis(fig1_ellipse, 8)


@pytest.fixture(scope="session")
def ellipse_basis_16(fig1_ellipse):
    return slepian_basis(fig1_ellipse, 16)


@pytest.fixture(scope="session")
def cap_basis_32():
    return slepian_basis(PolarCap(math.radians(15)), 32)


@pytest.fixture(scope="session")
def zonal_16():
    return zonal_basis(math.radians(30), 16)


@pytest.fixture(scope="session")
def bench_report():
    """One timing run over L = 16, 32, 64, 128 shared by the scaling tests."""
    from spatial_slepian.bench import run_bench

    return run_bench([16, 32, 64, 128], seed=0)
