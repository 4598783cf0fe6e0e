import numpy as np
import pytest

from cavdiatom import core, scattering
from cavdiatom.core import RadialGrid


class SyntheticCurves:
    """Stand-in curves object for driving the solvers with hand-built tables."""

    def __init__(self, thresholds, params, grid=None, omega=None, chi=None):
        self.thresholds = np.asarray(thresholds, dtype=float)
        self.params = params
        self.grid = grid
        self.omega = omega
        self.chi = chi


@pytest.fixture(scope="session")
def cs_optical():
    return core.load_params("cs-optical")


@pytest.fixture(scope="session")
def cs_rydberg():
    return core.load_params("cs-rydberg")


@pytest.fixture(scope="session")
def coarse_grid():
    """Coarse grid for structure-level checks that need no wall resolution."""
    return RadialGrid(r_wall=200.0, r_infinity=20000.0, n_points=8193)


@pytest.fixture(scope="session")
def warm_kernels(cs_optical):
    """Compile the march kernels once so timed tests measure physics only."""
    grid = RadialGrid(r_wall=1.0, r_infinity=30.0, n_points=65)
    th = np.array([0.0, 1.0, 2.0]) * core.kinetic_constant(cs_optical)
    curves = SyntheticCurves(th, cs_optical)
    w = np.zeros((grid.n_points, 3, 3))
    e = 0.25 * core.kinetic_constant(cs_optical)
    scattering.solve_at_energy(e, curves, w, grid)
    scattering.solve_at_energy(e, curves, w, grid, keep_regular=True)
    scattering.scan_s11(np.array([e]), curves, w, grid)
    ch = scattering.make_channels(e, curves)
    scattering.numerov_k_open(ch, w, grid)
    scattering.numerov_s11(np.array([e]), curves, w, grid)
    return True


@pytest.fixture()
def synthetic_curves_factory(cs_optical):
    def make(thresholds_in_kinetic_units, grid):
        a = core.kinetic_constant(cs_optical)
        th = np.asarray(thresholds_in_kinetic_units, dtype=float) * a
        return SyntheticCurves(th, cs_optical, grid=grid)

    return make
