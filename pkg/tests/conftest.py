"""Shared fixtures: the nominal design pipeline, built once per session."""

import numpy as np
import pytest

from lqgltr import design, gimbal, reduction
from lqgltr.systems import default_grid


@pytest.fixture(scope="session")
def grid():
    return default_grid()


@pytest.fixture(scope="session")
def coarse_grid():
    return default_grid(points_per_decade=100)


@pytest.fixture(scope="session")
def gimbal_plant():
    return gimbal.build_mimo_model(gimbal.AZIMUTH_PARAMS,
                                   gimbal.ELEVATION_PARAMS)


@pytest.fixture(scope="session")
def we_design1():
    return design.sensitivity_weight_model(design.DESIGN1_WEIGHT, channels=2)


@pytest.fixture(scope="session")
def we_design2():
    return design.sensitivity_weight_model(design.DESIGN2_WEIGHT, channels=2)


@pytest.fixture(scope="session")
def w1_model():
    return gimbal.uncertainty_weights()[2]


@pytest.fixture(scope="session")
def augmented(gimbal_plant, we_design2):
    return design.augment_plant(gimbal_plant, we_design2)


@pytest.fixture(scope="session")
def kalman(augmented):
    noise = design.NoiseIntensities.default(2, 2)
    return design.design_kalman(augmented, noise)


@pytest.fixture(scope="session")
def sweep(augmented, kalman, coarse_grid):
    return design.ltr_sweep(augmented, kalman,
                            (1e-1, 1e-2, 1e-3, 1e-4, 1e-5), grid=coarse_grid)


@pytest.fixture(scope="session")
def compensator(sweep):
    return sweep.compensator(1e-4)


@pytest.fixture(scope="session")
def reduced_compensator(compensator):
    reduced, bound = reduction.balance_and_truncate(compensator, 12)
    return reduced, bound


@pytest.fixture(scope="session")
def discrete_controller(reduced_compensator):
    return reduction.bilinear_discretize(reduced_compensator[0], 5e-4)


def assert_response_close(sys, fn, omegas, rtol=1e-8):
    """Frequency response of ``sys`` matches the callable ``fn`` pointwise."""
    for w in omegas:
        got = sys.transfer_at(1j * w)
        want = np.atleast_2d(fn(1j * w))
        scale = max(np.max(np.abs(want)), 1e-12)
        assert np.max(np.abs(got - want)) <= rtol * scale, (
            f"response mismatch at w={w}: {got} vs {want}")
