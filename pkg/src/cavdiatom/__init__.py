"""Simulator of two cold atoms sharing one photon with a high-Q cavity mode.

The package computes the separation-dependent dressed potentials of the
one-excitation manifold, solves the three-channel low-energy scattering
problem through Jost-function machinery, locates the cavity-induced
quasibound resonances, and produces the vibrational levels and
Franck-Condon fluorescence spectrum of the giant quasibound diatom.
"""

__version__ = "0.1.0"

from .core import (  # noqa: F401
    NumericalError,
    RadialGrid,
    SystemParams,
    ValidationError,
    internal_to_mhz,
    kinetic_constant,
    load_grid,
    load_params,
    mhz_to_internal,
    preset_grid,
    preset_names,
)
