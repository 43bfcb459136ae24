"""Session-scoped manifolds and kernel tables shared across test modules.

The parabolic solves dominate the suite's runtime, so each configuration
is produced once per session: small runs (t <= 1.2) back the small-time
checks, the medium trio backs the envelope-constant comparison across
families, and the big run (t <= 3600) backs the far-field sweeps and
the cross-module potential consistency check.
"""

import pytest

from evglab.geometry import build_manifold
from evglab.heat import solve_heat
from evglab.tilde import lambda_tilde_interpolant

T0_SMALL = 2e-3


@pytest.fixture(scope="session")
def flat3():
    return build_manifold("euclidean", 3)


@pytest.fixture(scope="session")
def exp3():
    return build_manifold("exp_taper", 3, {"c": 0.8})


@pytest.fixture(scope="session")
def poly3():
    return build_manifold("poly_taper", 3, {"c": 0.5, "a": 0.5})


@pytest.fixture(scope="session")
def lt_exp3(exp3):
    return lambda_tilde_interpolant(exp3, r_min=0.3, r_max=300.0)


def _small(m, refine=1):
    return solve_heat(m, T0_SMALL, 1.2, dr=0.002 / refine,
                      dt_ratio=0.01 / refine,
                      record_times=[2 * T0_SMALL, 4 * T0_SMALL])


@pytest.fixture(scope="session")
def kt_flat_small(flat3):
    return _small(flat3)


@pytest.fixture(scope="session")
def kt_flat_small_ref(flat3):
    return _small(flat3, refine=2)


@pytest.fixture(scope="session")
def kt_exp_small(exp3):
    return _small(exp3)


@pytest.fixture(scope="session")
def kt_exp_small_ref(exp3):
    return _small(exp3, refine=2)


def _medium(m):
    return solve_heat(m, T0_SMALL, 100.0, dr=0.005, dt_ratio=0.015)


@pytest.fixture(scope="session")
def kt_flat_med(flat3):
    return _medium(flat3)


@pytest.fixture(scope="session")
def kt_exp_med(exp3):
    return _medium(exp3)


@pytest.fixture(scope="session")
def kt_poly_med(poly3):
    return _medium(poly3)


BIG_RECORDS = [25.0, 50.0, 100.0, 200.0, 400.0, 1600.0]


@pytest.fixture(scope="session")
def kt_exp_big(exp3):
    return solve_heat(exp3, 0.01, 3600.0, dr=0.03, dt_ratio=0.015,
                      record_times=BIG_RECORDS)


@pytest.fixture(scope="session")
def kt_exp_big_ref(exp3):
    return solve_heat(exp3, 0.01, 3600.0, dr=0.015, dt_ratio=0.0075,
                      record_times=BIG_RECORDS)
