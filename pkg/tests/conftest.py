import time

import pytest

import renewalsim as rs


@pytest.fixture(scope="session")
def const_spectral():
    """Constant unit birth rate and its eigendata (growth rate exactly 1)."""
    B = rs.BirthLaw.constant(1.0)
    return B, rs.solve_spectral(B)


@pytest.fixture(scope="session")
def ind_spectral():
    """Indicator birth rate 2 on [0, 1] and its eigendata."""
    B = rs.BirthLaw.indicator(2.0, 0.0, 1.0)
    return B, rs.solve_spectral(B)


@pytest.fixture(scope="session")
def dirac_benchmark(const_spectral):
    """The pinned benchmark run: unit rate, point mass at 0.5.

    Returns (trajectory, wall seconds spent building the birth trace).
    """
    B, sp = const_spectral
    n0 = rs.HybridMeasure.point_mass(0.5, 40.0, 0.005)
    start = time.perf_counter()
    traj = rs.birth_series(n0, B, sp, 0.001, 10.0)
    elapsed = time.perf_counter() - start
    return traj, elapsed
