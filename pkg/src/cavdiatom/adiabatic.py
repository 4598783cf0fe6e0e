"""Adiabatic dressed potentials of two atoms exchanging one photon with a cavity mode.

The one-excitation manifold is spanned by |e_A g_B, 0>, |e_B g_A, 0>,
|g_A g_B, 1>.  Diagonalizing the 3x3 matrix at fixed separation R yields three
potentials omega_1(R) < omega_2(R) < omega_3(R); omega_2 develops a minimum at
the omega_1/omega_2 pseudocrossing and acts as a binding potential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    RadialGrid,
    SystemParams,
    TWO_PI,
    NumericalError,
    ValidationError,
)

EIGEN_RESIDUAL_REL = 1e-10


def build_hamiltonian(params: SystemParams, r: float) -> np.ndarray:
    """3x3 symmetric one-excitation Hamiltonian at separation r [a0], in rad/s."""
    if r <= 0.0:
        raise ValidationError(f"separation r must be positive, got {r!r}")
    c = params.C3 / r**3
    return np.array(
        [
            [params.omega_A, c, params.kappa_A],
            [c, params.omega_B, params.kappa_B],
            [params.kappa_A, params.kappa_B, params.omega_c],
        ]
    )


def asymptotic_hamiltonian(params: SystemParams) -> np.ndarray:
    """R -> infinity limit: the dipole-dipole coupling is switched off."""
    return np.array(
        [
            [params.omega_A, 0.0, params.kappa_A],
            [0.0, params.omega_B, params.kappa_B],
            [params.kappa_A, params.kappa_B, params.omega_c],
        ]
    )


def thresholds(params: SystemParams) -> np.ndarray:
    """Asymptotic channel energies omega_i(R->inf), ascending [rad/s]."""
    return np.linalg.eigvalsh(asymptotic_hamiltonian(params))


@dataclass(frozen=True)
class AdiabaticCurves:
    """Eigenvalues and phase-continuous eigenvectors on a radial grid.

    omega : (3, n) eigenvalue table, omega[i] = omega_{i+1}(R) [rad/s]
    chi   : (n, 3, 3) orthonormal eigenvector table, chi[k, :, i] is the
            i-th eigenvector at grid point k (components in the bare basis)
    """

    grid: RadialGrid
    omega: np.ndarray
    chi: np.ndarray
    thresholds: np.ndarray
    params: SystemParams


def _fix_phases(chi: np.ndarray) -> np.ndarray:
    """Sign-fix eigenvectors for continuity, sweeping inward from r_infinity.

    The outermost point uses a positive-cavity-component convention, falling
    back to the largest-magnitude component when the cavity admixture is
    negligible (the middle asymptotic state is dark).
    """
    n = chi.shape[0]
    last = chi[-1]
    for i in range(3):
        comp = last[2, i]
        if abs(comp) < 1e-3:
            comp = last[np.argmax(np.abs(last[:, i])), i]
        if comp < 0.0:
            last[:, i] = -last[:, i]
    for k in range(n - 2, -1, -1):
        overlaps = np.einsum("ji,ji->i", chi[k + 1], chi[k])
        flip = overlaps < 0.0
        chi[k][:, flip] = -chi[k][:, flip]
    return chi


def diagonalize_curves(params: SystemParams, grid: RadialGrid,
                       check_flatness: bool = True) -> AdiabaticCurves:
    """Diagonalize the dressed Hamiltonian on every grid point.

    Eigenvalues are ordered by value; eigenvector signs are fixed by maximal
    overlap with the neighbouring grid point so that tau(1) is smooth.
    """
    if check_flatness:
        grid.check_flatness(params)
    r = grid.points()
    c = params.C3 / r**3
    n = r.size

    # Diagonalize the omega_A-shifted matrix for conditioning; the shift is exact.
    h = np.zeros((n, 3, 3))
    h[:, 0, 0] = 0.0
    h[:, 1, 1] = params.omega_B - params.omega_A
    h[:, 2, 2] = params.omega_c - params.omega_A
    h[:, 0, 1] = h[:, 1, 0] = c
    h[:, 0, 2] = h[:, 2, 0] = params.kappa_A
    h[:, 1, 2] = h[:, 2, 1] = params.kappa_B
    try:
        vals, vecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigen-solver failed on the radial grid: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        bad = int(np.argwhere(~np.isfinite(vals).all(axis=1))[0, 0])
        raise NumericalError(f"eigen-solver produced non-finite values at R = {r[bad]:.6g} a0")

    omega = vals.T + params.omega_A
    chi = _fix_phases(vecs)
    return AdiabaticCurves(
        grid=grid,
        omega=omega,
        chi=chi,
        thresholds=thresholds(params),
        params=params,
    )


@dataclass(frozen=True)
class WellCharacterization:
    """Location and depth of the omega_2 binding well.

    r_c       : position of the omega_2 minimum [a0] (parabolic refinement)
    depth     : omega_2(inf) - omega_2(R_c) [rad/s]
    min_value : omega_2(R_c) - omega_A [rad/s]
    """

    r_c: float
    depth: float
    min_value: float


def characterize_well(curves: AdiabaticCurves) -> WellCharacterization | None:
    """Locate the omega_2 minimum; returns None when no interior well exists."""
    w2 = curves.omega[1]
    k = int(np.argmin(w2))
    if k == 0 or k == w2.size - 1:
        return None
    threshold = curves.thresholds[1]
    depth = threshold - w2[k]
    if depth <= 1e-12 * max(abs(threshold), 1.0):
        return None

    r = curves.grid.points()
    # Parabolic refinement through the discrete minimum and its neighbours.
    y0, y1, y2 = w2[k - 1], w2[k], w2[k + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom > 0.0:
        shift = 0.5 * (y0 - y2) / denom
        shift = float(np.clip(shift, -1.0, 1.0))
        r_c = r[k] + shift * curves.grid.spacing
        min_value = y1 - 0.25 * (y0 - y2) * shift
    else:
        r_c = r[k]
        min_value = y1
    return WellCharacterization(
        r_c=float(r_c),
        depth=float(threshold - min_value),
        min_value=float(min_value - curves.params.omega_A),
    )


_CALIBRATION_GRID = RadialGrid(r_wall=200.0, r_infinity=20000.0, n_points=8193)


def calibrate_C3(params: SystemParams, target_rc: float,
                 grid: RadialGrid | None = None,
                 tol: float = 1.0) -> float:
    """Find C3 placing the omega_2 minimum at target_rc [a0], by bisection.

    r_c grows monotonically with C3 (the crossing sits where C3/R^3 matches
    the coupling scale), so a sign change of r_c(C3) - target brackets the root.
    """
    if grid is None:
        grid = _CALIBRATION_GRID
    if not (grid.r_wall < target_rc < grid.r_infinity):
        raise ValidationError(
            f"target_rc must lie inside the grid, got {target_rc!r}"
        )

    kappa_scale = max(params.kappa_A + params.kappa_B, abs(params.detuning), 1.0)

    def rc_of(c3: float) -> float:
        well = characterize_well(
            diagonalize_curves(params.replace(C3=c3), grid, check_flatness=False)
        )
        if well is None:
            raise NumericalError(f"no omega_2 well for C3 = {c3:.6e}")
        return well.r_c

    lo = kappa_scale * (2.0 * grid.r_wall) ** 3
    hi = kappa_scale * (0.5 * grid.r_infinity) ** 3
    if not (rc_of(lo) < target_rc < rc_of(hi)):
        raise ValidationError(
            f"calibration interval does not bracket target_rc = {target_rc!r}"
        )
    mid = math.sqrt(lo * hi)
    for _ in range(100):
        mid = math.sqrt(lo * hi)
        rc_mid = rc_of(mid)
        if abs(rc_mid - target_rc) <= tol and hi / lo < 1.0 + 1e-4:
            break
        if rc_mid < target_rc:
            lo = mid
        else:
            hi = mid
    return mid


def sweep_coupling(params: SystemParams, kappa_values,
                   grid: RadialGrid | None = None) -> np.ndarray:
    """Depth and R_c of the omega_2 well versus kappa_A.

    kappa_B tracks kappa_A at the fixed ratio of the input params.  Returns a
    structured-free (n, 3) array with columns (kappa_A, depth, r_c).
    """
    if grid is None:
        grid = _CALIBRATION_GRID
    ratio = params.kappa_B / params.kappa_A if params.kappa_A > 0.0 else 1.0
    rows = []
    for kappa in np.atleast_1d(np.asarray(kappa_values, dtype=float)):
        p = params.replace(kappa_A=float(kappa), kappa_B=float(ratio * kappa))
        well = characterize_well(diagonalize_curves(p, grid))
        if well is None:
            rows.append((kappa, 0.0, np.nan))
        else:
            rows.append((kappa, well.depth, well.r_c))
    return np.array(rows)


def sweep_detuning(params: SystemParams, detuning_values,
                   grid: RadialGrid | None = None) -> np.ndarray:
    """omega_2 minimum (relative to omega_A) versus cavity-atom detuning.

    Returns an (n, 2) array with columns (omega_c - omega_A, min_value).
    """
    if grid is None:
        grid = _CALIBRATION_GRID
    rows = []
    for delta in np.atleast_1d(np.asarray(detuning_values, dtype=float)):
        p = params.replace(omega_c=params.omega_A + float(delta))
        well = characterize_well(diagonalize_curves(p, grid))
        if well is None:
            rows.append((delta, np.nan))
        else:
            rows.append((delta, well.min_value))
    return np.array(rows)


def check_limits(params: SystemParams, curves: AdiabaticCurves) -> dict:
    """Residuals of the small-R and large-R closed-form limits.

    Small R:  omega_{3,1} -> omega_A +/- C3/R^3, omega_2 -> omega_c, within
    the perturbative scale (kappa_A+kappa_B)^2 R^3/C3.
    Large R:  omega_1 -> omega_a and omega_{2,3} -> (omega_s+omega_c -/+ Omega)/2
    with Omega = sqrt(2(kappa_A+kappa_B)^2 + (omega_s-omega_c)^2), within
    (C3/R^3)^2/kappa plus the quoted-Omega discrepancy for kappa_A != kappa_B.
    """
    r = curves.grid.points()
    kap_sum = params.kappa_A + params.kappa_B

    c_in = params.C3 / r[0] ** 3
    tol_in = 2.0 * kap_sum**2 / c_in + 1e-9 * params.omega_A
    res_in = {
        "omega1_small_r": abs(curves.omega[0, 0] - (params.omega_A - c_in)),
        "omega2_small_r": abs(curves.omega[1, 0] - params.omega_c),
        "omega3_small_r": abs(curves.omega[2, 0] - (params.omega_A + c_in)),
        "tol_small_r": tol_in,
    }

    c_out = params.C3 / r[-1] ** 3
    omega_s = params.omega_A + c_out
    omega_a = params.omega_A - c_out
    big_omega = math.sqrt(2.0 * kap_sum**2 + (omega_s - params.omega_c) ** 2)
    big_omega_exact = math.sqrt(
        4.0 * (params.kappa_A**2 + params.kappa_B**2) + (omega_s - params.omega_c) ** 2
    )
    kappa_scale = max(params.kappa_A, params.kappa_B)
    tol_out = (
        2.0 * c_out**2 / kappa_scale
        + 0.55 * abs(big_omega_exact - big_omega)
        + 1e-9 * params.omega_A
    )
    lower = 0.5 * (omega_s + params.omega_c - big_omega)
    upper = 0.5 * (omega_s + params.omega_c + big_omega)
    res_out = {
        "omega1_large_r": abs(curves.omega[0, -1] - min(omega_a, lower)),
        "omega2_large_r": abs(curves.omega[1, -1] - max(omega_a, lower)),
        "omega3_large_r": abs(curves.omega[2, -1] - upper),
        "tol_large_r": tol_out,
    }
    return {**res_in, **res_out}
