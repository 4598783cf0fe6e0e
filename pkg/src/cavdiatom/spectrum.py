"""Angle-averaged fluorescence spectrum of the quasibound diatom.

Emission lines from the vibrational levels of the binding well are weighted
by Franck-Condon overlaps with the free ground-state pair and by the
orientation factors sin^2(theta) (Sigma) or cos^2(theta) (Pi), then summed
with Lorentzian profiles of half-width gamma_eff over a molecular-axis
quadrature.  The frequency axis is reported relative to the bare atomic
line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.special

from . import bound_states
from .core import (
    BOHR_RADIUS_M,
    RadialGrid,
    SPEED_OF_LIGHT_M_S,
    SystemParams,
    ValidationError,
    kinetic_constant,
)

TWO_PI = 2.0 * math.pi


def recoil_energy(params: SystemParams) -> float:
    """One-photon recoil energy for the atomic transition [rad/s].

    E_rec = hbar k^2 / (2 m) with k = omega_A / c and m the single-atom
    mass (twice the reduced mass).
    """
    k_a0 = params.omega_A / SPEED_OF_LIGHT_M_S * BOHR_RADIUS_M
    return 0.5 * kinetic_constant(params) * k_a0**2


@dataclass(frozen=True)
class SpectrumConfig:
    """Inputs of the emission-spectrum evaluation.

    symmetry   : 'sigma' or 'pi'
    gamma_eff  : Lorentzian half-width at half maximum [rad/s]
    e_gg       : ground-pair collision energy [rad/s]; defaults to the
                 one-photon recoil energy when built via for_params
    omega_grid : emission frequencies relative to omega_A [rad/s]
    n_theta    : number of molecular-axis quadrature intervals on [0, pi]
    l_gg       : partial wave of the free pair (dipole selection fixes 1)
    """

    symmetry: str
    gamma_eff: float
    e_gg: float
    omega_grid: np.ndarray = field(repr=False)
    n_theta: int = 32
    l_gg: int = 1

    def __post_init__(self):
        if self.symmetry not in ("sigma", "pi"):
            raise ValidationError(f"symmetry must be 'sigma' or 'pi', got {self.symmetry!r}")
        if self.gamma_eff <= 0.0:
            raise ValidationError(f"gamma_eff must be positive, got {self.gamma_eff!r}")
        if self.e_gg <= 0.0:
            raise ValidationError(f"e_gg must be positive, got {self.e_gg!r}")
        if self.n_theta < 8:
            raise ValidationError(f"n_theta must be at least 8, got {self.n_theta!r}")


def default_config(params: SystemParams, symmetry: str, gamma_eff: float,
                   depth: float, n_theta: int = 128,
                   n_omega: int = 3001) -> SpectrumConfig:
    """Config with the recoil-energy default and a depth-spanning omega grid."""
    omega = np.linspace(-1.25 * depth, 0.25 * depth, n_omega)
    return SpectrumConfig(symmetry=symmetry, gamma_eff=gamma_eff,
                          e_gg=recoil_energy(params), omega_grid=omega,
                          n_theta=n_theta)


def ground_wavefunction(e_gg: float, params: SystemParams, r) -> np.ndarray:
    """Free-pair radial function R j_1(kR), unit maximum amplitude.

    k = sqrt(2 mu E_gg)/hbar; the overall normalization is absorbed into
    the arbitrary spectrum constant.
    """
    if e_gg <= 0.0:
        raise ValidationError(f"e_gg must be positive, got {e_gg!r}")
    r = np.asarray(r, dtype=float)
    k = math.sqrt(e_gg / kinetic_constant(params))
    phi = r * scipy.special.spherical_jn(1, k * r)
    peak = np.max(np.abs(phi))
    return phi / peak if peak > 0.0 else phi


def symmetric_admixture(curves) -> np.ndarray:
    """Symmetric-state component of chi_2: (chi_2^(1) + chi_2^(2))/sqrt(2).

    The photon-annihilation dipole operator maps the one-photon ground
    state onto the symmetric excited pair, so only this projection of the
    emitting channel contributes to the transition amplitude.
    """
    return (curves.chi[:, 0, 1] + curves.chi[:, 1, 1]) / math.sqrt(2.0)


def franck_condon_amplitude(fit, v: int, curves, ground: np.ndarray) -> float:
    """Radial overlap integral of one vibrational level with the free pair."""
    r = curves.grid.points()
    a_kin = kinetic_constant(curves.params)
    psi_v = bound_states.morse_wavefunction(fit, v, r, a_kin)
    c_s = symmetric_admixture(curves)
    return float(np.trapezoid(psi_v * c_s * ground, r))


@dataclass(frozen=True)
class SpectralLine:
    theta: float
    v: int
    omega_line: float     # line center relative to omega_A [rad/s]
    weight: float         # quadrature weight x W_theta x sin(theta) x |amp|^2


@dataclass(frozen=True)
class SpectrumResult:
    """Intensity table I(omega) with its per-(theta, v) line decomposition."""

    config: SpectrumConfig
    intensity: np.ndarray
    lines: list[SpectralLine]


# Levels bound by less than a few percent of the fitted depth are faded out
# of the emission model: their outer turning points fall in the extrapolated
# Morse tail, where the exponential model no longer represents the power-law
# dipole-dipole potential and level positions are artifacts.  The taper is
# smooth so that the orientation quadrature keeps a continuous integrand as
# levels slide through the validity edge.
LEVEL_DEPTH_CUTOFF = 0.04
LEVEL_DEPTH_FULL = 0.08


def _level_validity(omega_line: float, d_e: float) -> float:
    """Smooth 0..1 weight fading out levels near the Morse validity edge."""
    x = (-omega_line / d_e - LEVEL_DEPTH_CUTOFF) / (LEVEL_DEPTH_FULL - LEVEL_DEPTH_CUTOFF)
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    return x * x * (3.0 - 2.0 * x)


def compute_lines(params: SystemParams, grid: RadialGrid,
                  config: SpectrumConfig) -> list[SpectralLine]:
    """Per-orientation level positions, weights and overlap amplitudes.

    The quadrature runs over [0, pi/2] and mirrors: the projected couplings
    and both weight factors are exactly symmetric about pi/2.
    """
    thetas = np.linspace(0.0, math.pi, config.n_theta + 1)
    d_theta = thetas[1] - thetas[0]
    half = thetas[thetas <= 0.5 * math.pi + 1e-12]
    lines: list[SpectralLine] = []
    for i, theta in enumerate(half):
        quad_w = d_theta * (0.5 if i == 0 else 1.0)
        mirror = 2.0 if theta < 0.5 * math.pi - 1e-12 else 1.0
        w_theta = math.sin(theta) ** 2 if config.symmetry == "sigma" else math.cos(theta) ** 2
        geom = mirror * quad_w * w_theta * math.sin(theta)
        if geom <= 0.0:
            continue
        curves, fit, levels = bound_states.levels_for_orientation(
            params, grid, theta, config.symmetry)
        if not levels:
            continue
        ground = ground_wavefunction(config.e_gg, params, curves.grid.points())
        for lev in levels:
            omega_line = lev.e_v + lev.lzs_shift
            validity = _level_validity(omega_line, fit.d_e)
            if validity <= 0.0:
                continue
            amp = franck_condon_amplitude(fit, lev.v, curves, ground)
            lines.append(SpectralLine(theta=float(theta), v=lev.v,
                                      omega_line=float(omega_line),
                                      weight=float(validity * geom * amp * amp)))
    return lines


def emission_spectrum(config: SpectrumConfig,
                      lines: list[SpectralLine]) -> SpectrumResult:
    """Lorentzian line sum on the frequency grid, normalized to unit maximum."""
    omega = np.asarray(config.omega_grid, dtype=float)
    intensity = np.zeros_like(omega)
    g2 = config.gamma_eff**2
    for line in lines:
        intensity += line.weight * g2 / ((omega - line.omega_line) ** 2 + g2)
    peak = intensity.max() if intensity.size else 0.0
    if peak > 0.0:
        intensity /= peak
    else:
        import warnings

        warnings.warn("emission spectrum is identically zero (no lines)")
    return SpectrumResult(config=config, intensity=intensity, lines=lines)


def spectrum_for(params: SystemParams, grid: RadialGrid,
                 config: SpectrumConfig) -> SpectrumResult:
    """Full pipeline: orientation-resolved levels -> lines -> intensity."""
    return emission_spectrum(config, compute_lines(params, grid, config))
