"""First-derivative coupling, transformation matrix and coupling potential.

tau(R) couples the adiabatic channels through the R-dependence of the
eigenvectors; T(R) is the ordered-product rotation that removes the
first-derivative coupling; W(R) is the resulting symmetric potential matrix
(threshold-subtracted, in a0^-2) entering the transformed radial equation

    d^2 Phi/dx^2 = (W - P^2) Phi .
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import RadialGrid, SystemParams, NumericalError, kinetic_constant
from .adiabatic import AdiabaticCurves, diagonalize_curves

DEGENERACY_FLOOR = 1e-6


@dataclass(frozen=True)
class CouplingTables:
    """tau (a0^-1), T (orthogonal) and W (a0^-2) on the radial grid."""

    grid: RadialGrid
    tau: np.ndarray    # (n, 3, 3) antisymmetric
    t_mat: np.ndarray  # (n, 3, 3) orthogonal, identity at r_infinity
    w: np.ndarray      # (n, 3, 3) symmetric, -> 0 at r_infinity


def compute_tau(curves: AdiabaticCurves, params: SystemParams) -> np.ndarray:
    """Nonadiabatic coupling tau_ij = <chi_i|dH/dR|chi_j>/(omega_j - omega_i).

    dH/dR acts only on the dipole-dipole element, so the numerator is
    -3 C3/R^4 (chi_i1 chi_j2 + chi_i2 chi_j1).  Antisymmetry is exact by
    construction.  Raises when two curves approach within DEGENERACY_FLOOR
    times the local eigenvalue spread.
    """
    r = curves.grid.points()
    dcdr = -3.0 * params.C3 / r**4
    chi = curves.chi
    omega = curves.omega

    # numer[k, i, j] = <chi_i|dH/dR|chi_j> at grid point k
    cross = chi[:, 0, :, None] * chi[:, 1, None, :]
    numer = dcdr[:, None, None] * (cross + np.swapaxes(cross, 1, 2))

    spread = omega[2] - omega[0]
    tau = np.zeros_like(numer)
    for i in range(3):
        for j in range(i + 1, 3):
            gap = omega[j] - omega[i]
            floor = DEGENERACY_FLOOR * spread
            if np.any(gap < floor):
                k = int(np.argmin(gap - floor))
                raise NumericalError(
                    f"near-degenerate curves {i + 1}/{j + 1} at R = {r[k]:.6g} a0 "
                    f"(gap {gap[k]:.3e} rad/s)"
                )
            tau[:, i, j] = numer[:, i, j] / gap
            tau[:, j, i] = -tau[:, i, j]
    return tau


def _rotation_exp(gen: np.ndarray) -> np.ndarray:
    """exp of a batch of antisymmetric 3x3 matrices (Rodrigues form)."""
    w1 = gen[:, 2, 1]
    w2 = gen[:, 0, 2]
    w3 = gen[:, 1, 0]
    theta = np.sqrt(w1**2 + w2**2 + w3**2)
    small = theta < 1e-30
    th = np.where(small, 1.0, theta)
    a = np.where(small, 1.0, np.sin(th) / th)
    b = np.where(small, 0.5, (1.0 - np.cos(th)) / th**2)
    gen2 = np.einsum("kij,kjl->kil", gen, gen)
    out = a[:, None, None] * gen + b[:, None, None] * gen2
    out[:, 0, 0] += 1.0
    out[:, 1, 1] += 1.0
    out[:, 2, 2] += 1.0
    return out


def compute_T(tau: np.ndarray, grid: RadialGrid) -> np.ndarray:
    """Ordered product of per-step rotations, accumulated inward from r_infinity.

    T solves dT/dR = T tau with T(r_infinity) = identity, each step using the
    midpoint tau; successive rotations do not commute, so the product order
    matters and is fixed by the inward sweep.
    """
    from . import _kernels

    n = tau.shape[0]
    dx = grid.spacing
    tau_mid = 0.5 * (tau[:-1] + tau[1:])
    gen = _rotation_exp(-dx * tau_mid)
    t_mat = np.empty((n, 3, 3))
    _kernels.accumulate_ordered_product(gen, t_mat)
    return t_mat


def compute_W(curves: AdiabaticCurves, t_mat: np.ndarray,
              params: SystemParams) -> np.ndarray:
    """Coupling potential W = (T diag(omega(R)) T^T - diag(omega(inf))) / A.

    A is the kinetic constant; the common omega_A offset cancels exactly.
    The result is symmetrized to remove accumulated roundoff asymmetry.
    """
    a_kin = kinetic_constant(params)
    omega_rel = curves.omega.T - params.omega_A          # (n, 3)
    th_rel = curves.thresholds - params.omega_A          # (3,)
    rotated = np.einsum("kij,kj,klj->kil", t_mat, omega_rel, t_mat)
    w = rotated - np.diag(th_rel)[None, :, :]
    w = 0.5 * (w + np.swapaxes(w, 1, 2))
    return w / a_kin


def coupling_tables(params: SystemParams, grid: RadialGrid,
                    curves: AdiabaticCurves | None = None) -> CouplingTables:
    """Full tau/T/W pipeline for one parameter set."""
    if curves is None:
        curves = diagonalize_curves(params, grid)
    tau = compute_tau(curves, params)
    t_mat = compute_T(tau, grid)
    w = compute_W(curves, t_mat, params)
    return CouplingTables(grid=grid, tau=tau, t_mat=t_mat, w=w)


@lru_cache(maxsize=6)
def tables_for(params: SystemParams, grid: RadialGrid):
    """Cached (curves, tables) pair; inputs are frozen and hashable."""
    curves = diagonalize_curves(params, grid)
    return curves, coupling_tables(params, grid, curves)
