"""Vibrational structure of the omega_2 binding well.

The well is approximated by a Morse potential (analytic anharmonic
spectrum); each level then receives a semiclassical Landau-Zener-Stueckelberg
shift and predissociation width from the omega_1/omega_2 pseudocrossing.
Orientation enters through the projection of the couplings on the cavity
axis: kappa -> kappa sin(theta) for Sigma runs and kappa cos(theta) for Pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize
import scipy.special

from .adiabatic import AdiabaticCurves, WellCharacterization, characterize_well, diagonalize_curves
from .core import RadialGrid, SystemParams, NumericalError, ValidationError, kinetic_constant

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class MorseFit:
    """Morse parameters of the omega_2 well (energies in rad/s, R in a0).

    The model is D_e (1 - exp(-a(R-R_e)))^2 - D_e, fitted to
    omega_2(R) - omega_2(inf); omega_e = 2 a sqrt(A D_e) and
    omega_e x_e = A a^2 with A the kinetic constant.
    """

    d_e: float
    r_e: float
    a: float
    omega_e: float
    omega_e_x_e: float
    rms_residual: float

    @property
    def v_max(self) -> int:
        return max(int(math.floor(math.sqrt(self.d_e * self.omega_e_x_e) / self.omega_e_x_e
                                  - 0.5)), -1)


@dataclass(frozen=True)
class VibrationalLevel:
    """One vibrational level of the fitted well.

    e_v        : energy below the omega_2 threshold [rad/s], negative
    lzs_shift  : pseudocrossing energy shift [rad/s]
    lzs_width  : predissociation width [rad/s]
    theta      : molecular-axis angle the level was computed for [rad]
    """

    v: int
    e_v: float
    lzs_shift: float
    lzs_width: float
    theta: float


def _morse(r, d_e, r_e, a):
    y = 1.0 - np.exp(-a * (r - r_e))
    return d_e * y * y - d_e


def fit_morse(curves: AdiabaticCurves,
              well: WellCharacterization | None = None,
              n_iter: int = 4) -> MorseFit:
    """Least-squares Morse fit of omega_2 around its minimum.

    The fit window [R_e - 3/a, R_e + 6/a] is re-evaluated as the range
    parameter converges.  Raises when the curves hold no well.
    """
    if well is None:
        well = characterize_well(curves)
    if well is None:
        raise NumericalError("omega_2 has no interior well to fit")
    r = curves.grid.points()
    a_kin = kinetic_constant(curves.params)
    v_data = curves.omega[1] - curves.thresholds[1]

    # curvature of the discrete minimum seeds the range parameter
    k = int(np.argmin(np.abs(r - well.r_c)))
    dr = curves.grid.spacing
    curv = (v_data[k - 1] - 2.0 * v_data[k] + v_data[k + 1]) / dr**2
    a_par = math.sqrt(max(curv, 1e-30) / (2.0 * well.depth))

    # the fit window is anchored at the measured minimum and excludes the
    # asymptotic plateau: the dipole-dipole tail falls off as a power law,
    # which no Morse exponential represents, and including it drags the
    # range parameter away from the well curvature
    in_well = v_data <= -0.05 * well.depth
    popt = (well.depth, well.r_c, a_par)
    mask = slice(None)
    for _ in range(n_iter):
        lo = well.r_c - 3.0 / popt[2]
        hi = well.r_c + 6.0 / popt[2]
        mask = (r >= lo) & (r <= hi) & in_well
        if np.count_nonzero(mask) < 8:
            raise NumericalError("Morse fit window contains too few grid points")
        try:
            popt, _ = scipy.optimize.curve_fit(
                _morse, r[mask], v_data[mask], p0=popt,
                bounds=([0.0, r[0], 1e-12], [np.inf, r[-1], np.inf]),
                maxfev=20000,
            )
        except (RuntimeError, ValueError) as exc:
            raise NumericalError(f"Morse fit failed: {exc}") from exc
    d_e, r_e = popt[0], popt[1]
    resid = _morse(r[mask], *popt) - v_data[mask]
    rms = float(np.sqrt(np.mean(resid**2)))
    a_fit = float(popt[2])
    return MorseFit(
        d_e=float(d_e), r_e=float(r_e), a=a_fit,
        omega_e=2.0 * a_fit * math.sqrt(a_kin * d_e),
        omega_e_x_e=a_kin * a_fit**2,
        rms_residual=rms,
    )


def morse_levels(fit: MorseFit, theta: float = math.pi / 2.0) -> list[VibrationalLevel]:
    """Analytic Morse spectrum E_v = omega_e(v+1/2) - omega_e x_e (v+1/2)^2 - D_e."""
    out = []
    for v in range(fit.v_max + 1):
        h = v + 0.5
        e_v = fit.omega_e * h - fit.omega_e_x_e * h * h - fit.d_e
        if e_v >= 0.0:
            break
        out.append(VibrationalLevel(v=v, e_v=float(e_v), lzs_shift=0.0,
                                    lzs_width=0.0, theta=theta))
    return out


def morse_wavefunction(fit: MorseFit, v: int, r, a_kin: float) -> np.ndarray:
    """Normalized Morse eigenfunction on the radial grid.

    Standard Laguerre form with lambda = sqrt(D_e/(A a^2)); normalization is
    analytic, so the tabulated function integrates to one on a sufficiently
    wide grid.
    """
    lam = math.sqrt(fit.d_e / (a_kin * fit.a**2))
    if v > fit.v_max:
        raise ValidationError(f"v = {v} exceeds v_max = {fit.v_max}")
    s = 2.0 * lam - 2.0 * v - 1.0
    xi = 2.0 * lam * np.exp(-fit.a * (np.asarray(r, dtype=float) - fit.r_e))
    log_norm = (math.log(fit.a) + math.log(s)
                + scipy.special.gammaln(v + 1.0)
                - scipy.special.gammaln(2.0 * lam - v))
    lag = scipy.special.eval_genlaguerre(v, s, xi)
    with np.errstate(over="ignore", under="ignore"):
        base = np.exp(0.5 * log_norm - 0.5 * xi + 0.5 * s * np.log(xi))
    psi = base * lag
    return np.where(np.isfinite(psi), psi, 0.0)


@dataclass(frozen=True)
class CrossingParameters:
    """Two-state pseudocrossing data extracted from the adiabatic pair.

    v12      : adiabatic half-gap at the crossing [rad/s]
    r_gap    : gap-minimum position [a0]
    slope_diff : |difference of diabatic slopes| [rad/s per a0]
    depth_at_gap : omega_2(inf) - omega_2(r_gap) [rad/s]
    """

    v12: float
    r_gap: float
    slope_diff: float
    depth_at_gap: float


def crossing_parameters(curves: AdiabaticCurves, fit: MorseFit) -> CrossingParameters:
    """Half-gap and diabatic slope difference near the omega_1/omega_2 crossing.

    The diabats are reconstructed from the adiabatic pair assuming a locally
    constant coupling equal to the half-gap; straight lines are fitted over
    +-5/a around the gap minimum.
    """
    r = curves.grid.points()
    gap = curves.omega[1] - curves.omega[0]
    lo = np.searchsorted(r, fit.r_e - 5.0 / fit.a)
    hi = np.searchsorted(r, fit.r_e + 5.0 / fit.a)
    if hi - lo < 8:
        raise NumericalError("crossing window contains too few grid points")
    k = lo + int(np.argmin(gap[lo:hi]))
    v12 = 0.5 * gap[k]
    r_gap = r[k]

    window = (r >= r_gap - 5.0 / fit.a) & (r <= r_gap + 5.0 / fit.a)
    rw = r[window]
    mean = 0.5 * (curves.omega[0][window] + curves.omega[1][window])
    half = np.sqrt(np.maximum((0.5 * gap[window]) ** 2 - v12**2, 0.0))
    sign = np.where(rw >= r_gap, 1.0, -1.0)
    d_upper = mean + sign * half
    d_lower = mean - sign * half
    slope_up = np.polyfit(rw, d_upper, 1)[0]
    slope_lo = np.polyfit(rw, d_lower, 1)[0]
    return CrossingParameters(
        v12=float(v12), r_gap=float(r_gap),
        slope_diff=float(abs(slope_up - slope_lo)),
        depth_at_gap=float(curves.thresholds[1] - curves.omega[1][k]),
    )


def stueckelberg_phase(delta: float) -> float:
    """Connection-formula phase: pi/4 + arg Gamma(1 - i delta) + delta(ln delta - 1).

    Tends to pi/4 in the diabatic limit (delta -> 0) and to zero in the
    adiabatic limit (delta -> infinity).
    """
    if delta <= 0.0:
        return math.pi / 4.0
    # loggamma keeps the continuous branch of arg Gamma, which the principal
    # angle loses already for delta of order one
    arg_gamma = float(np.imag(scipy.special.loggamma(1.0 - 1j * delta)))
    return math.pi / 4.0 + arg_gamma + delta * (math.log(delta) - 1.0)


def lzs_correct(levels: list[VibrationalLevel], curves: AdiabaticCurves,
                fit: MorseFit) -> list[VibrationalLevel]:
    """Landau-Zener-Stueckelberg shift and predissociation width per level.

    P_LZ = exp(-2 pi V12^2 / (v_cl |dF|)) with the classical radial velocity
    at the crossing from energy conservation in the well; the width is
    nu_v P_LZ and the shift nu_v phi_S(delta), nu_v being the classical
    vibration frequency (local level spacing over 2 pi).  Levels that cannot
    classically reach the crossing keep zero shift and width.
    """
    a_kin = kinetic_constant(curves.params)
    cross = crossing_parameters(curves, fit)
    out = []
    for lev in levels:
        kin = lev.e_v + cross.depth_at_gap
        if kin <= 0.0 or cross.slope_diff <= 0.0:
            out.append(lev)
            continue
        v_cl = 2.0 * math.sqrt(a_kin * kin)
        delta = cross.v12**2 / (v_cl * cross.slope_diff)
        p_lz = math.exp(-TWO_PI * delta)
        spacing = fit.omega_e - 2.0 * fit.omega_e_x_e * (lev.v + 1.0)
        nu_v = max(spacing, 0.0) / TWO_PI
        out.append(VibrationalLevel(
            v=lev.v, e_v=lev.e_v,
            lzs_shift=float(nu_v * stueckelberg_phase(delta)),
            lzs_width=float(nu_v * p_lz),
            theta=lev.theta,
        ))
    return out


LEVELS_GRID_POINTS = 16385


def levels_grid(grid: RadialGrid) -> RadialGrid:
    """Coarser grid for the smooth well fit (the Morse pipeline needs no
    wall-scale resolution)."""
    return RadialGrid(grid.r_wall, grid.r_infinity,
                      min(grid.n_points, LEVELS_GRID_POINTS))


def oriented_params(params: SystemParams, theta: float, symmetry: str) -> SystemParams:
    """Couplings projected on the cavity axis for molecular-axis angle theta."""
    if symmetry == "sigma":
        s = abs(math.sin(theta))
    elif symmetry == "pi":
        s = abs(math.cos(theta))
    else:
        raise ValidationError(f"symmetry must be 'sigma' or 'pi', got {symmetry!r}")
    return params.replace(kappa_A=params.kappa_A * s, kappa_B=params.kappa_B * s)


def levels_for_orientation(params: SystemParams, grid: RadialGrid, theta: float,
                           symmetry: str, corrected: bool = True):
    """Curves, Morse fit and (optionally LZS-corrected) levels at one angle.

    Returns (curves, fit, levels); (None, None, []) when the projected
    coupling leaves no well.
    """
    p_theta = oriented_params(params, theta, symmetry)
    if p_theta.kappa_A <= 0.0 and p_theta.kappa_B <= 0.0:
        return None, None, []
    g = levels_grid(grid)
    curves = diagonalize_curves(p_theta, g, check_flatness=False)
    well = characterize_well(curves)
    if well is None:
        return None, None, []
    try:
        fit = fit_morse(curves, well)
    except NumericalError:
        return None, None, []
    levels = morse_levels(fit, theta=theta)
    if corrected:
        levels = lzs_correct(levels, curves, fit)
    return curves, fit, levels
