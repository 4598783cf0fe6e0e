import math

import numpy as np
import pytest
import scipy.integrate
import scipy.special

from cavdiatom import adiabatic, bound_states, core, spectrum
from cavdiatom.core import RadialGrid, mhz_to_internal

A_CS = core.kinetic_constant(core.load_params("cs-optical"))
TWO_PI = 2.0 * math.pi

# independent hand calculation: E_rec = hbar k^2 / (2 m_Cs), k = omega_A/c
HBAR = 1.054571817e-34
M_CS = 132.905451961 * 1.66053906660e-27
RECOIL_CS_OPTICAL = HBAR * (3.5172e14 / 2.99792458e8) ** 2 / (2.0 * M_CS)


def test_recoil_energy_matches_hand_calculation(cs_optical):
    assert spectrum.recoil_energy(cs_optical) == pytest.approx(
        RECOIL_CS_OPTICAL, rel=1e-9)
    assert spectrum.recoil_energy(cs_optical) == pytest.approx(328.857, rel=1e-4)


def test_ground_wavefunction_leading_order(cs_optical):
    # kR << 1 everywhere: phi is proportional to R * (kR)/3, i.e. to R^2
    r = np.linspace(1.0, 50.0, 200)
    phi = spectrum.ground_wavefunction(1e-8 * A_CS, cs_optical, r)
    ratio = phi / r**2
    assert np.allclose(ratio, ratio[0], rtol=1e-6)


def test_ground_wavefunction_nodes_at_bessel_zeros(cs_optical):
    e_gg = mhz_to_internal(2.0)
    k = math.sqrt(e_gg / A_CS)
    first_zero = 4.493409457909064 / k
    r = np.linspace(0.9 * first_zero, 1.1 * first_zero, 400)
    phi = spectrum.ground_wavefunction(e_gg, cs_optical, r)
    signs = np.sign(phi)
    flips = np.flatnonzero(np.diff(signs) != 0.0)
    assert flips.size == 1
    assert abs(r[flips[0]] - first_zero) < (r[1] - r[0]) * 2


def test_ground_wavefunction_unit_max(cs_optical, coarse_grid):
    phi = spectrum.ground_wavefunction(mhz_to_internal(1e-4), cs_optical,
                                       coarse_grid.points())
    assert np.max(np.abs(phi)) == pytest.approx(1.0, rel=1e-12)


def _morse_curve_stub(cs_optical, grid, chi_mode):
    from conftest import SyntheticCurves

    r = grid.points()
    d_e, r_e, a = TWO_PI * 60e6, 2200.0, 1.0 / 300.0
    y = 1.0 - np.exp(-a * (r - r_e))
    omega = np.vstack([np.full_like(r, cs_optical.omega_A - 10 * d_e),
                       cs_optical.omega_A + d_e * y * y - d_e,
                       np.full_like(r, cs_optical.omega_A + 10 * d_e)])
    chi = np.zeros((r.size, 3, 3))
    if chi_mode == "antisymmetric":
        chi[:, 0, 1] = 1.0 / math.sqrt(2.0)
        chi[:, 1, 1] = -1.0 / math.sqrt(2.0)
    else:
        chi[:, 0, 1] = 1.0
    th = np.array([cs_optical.omega_A - 10 * d_e, cs_optical.omega_A,
                   cs_optical.omega_A + 10 * d_e])
    curves = SyntheticCurves(th, cs_optical, grid=grid, omega=omega, chi=chi)
    fit = bound_states.fit_morse(curves)
    return curves, fit


def test_amplitude_vanishes_for_antisymmetric_channel(cs_optical):
    grid = RadialGrid(200.0, 20000.0, 8193)
    curves, fit = _morse_curve_stub(cs_optical, grid, "antisymmetric")
    ground = spectrum.ground_wavefunction(spectrum.recoil_energy(cs_optical),
                                          cs_optical, grid.points())
    amp = spectrum.franck_condon_amplitude(fit, 0, curves, ground)
    assert amp == 0.0


def test_amplitude_orthonormality_sanity(cs_optical):
    grid = RadialGrid(200.0, 20000.0, 16385)
    curves, fit = _morse_curve_stub(cs_optical, grid, "plain")
    r = grid.points()
    # with c_s == 1 and the free pair replaced by another Morse state, the
    # overlap reduces to eigenfunction orthonormality
    curves.chi[:, 0, 1] = math.sqrt(2.0)          # c_s(R) == 1
    for vp in (0, 1, 3):
        ground = bound_states.morse_wavefunction(fit, vp, r, A_CS)
        for v in (0, 1, 3):
            amp = spectrum.franck_condon_amplitude(fit, v, curves, ground)
            assert amp == pytest.approx(1.0 if v == vp else 0.0, abs=2e-6)


def test_amplitude_matches_refined_quadrature(cs_optical):
    grid = core.preset_grid("cs-optical")
    g = bound_states.levels_grid(grid)
    curves = adiabatic.diagonalize_curves(cs_optical, g, check_flatness=False)
    fit = bound_states.fit_morse(curves)
    r = g.points()
    ground = spectrum.ground_wavefunction(spectrum.recoil_energy(cs_optical),
                                          cs_optical, r)
    amp = spectrum.franck_condon_amplitude(fit, 0, curves, ground)

    # brute-force oracle: Simpson quadrature at doubled radial resolution
    r2 = np.linspace(g.r_wall, g.r_infinity, 2 * g.n_points - 1)
    psi2 = bound_states.morse_wavefunction(fit, 0, r2, A_CS)
    cs2 = np.interp(r2, r, spectrum.symmetric_admixture(curves))
    ground2 = spectrum.ground_wavefunction(spectrum.recoil_energy(cs_optical),
                                           cs_optical, r2)
    oracle = scipy.integrate.simpson(psi2 * cs2 * ground2, x=r2)
    assert amp == pytest.approx(oracle, rel=1e-3)


def test_emission_single_line_is_lorentzian():
    gamma = mhz_to_internal(8.0)
    omega = np.linspace(-40.0, 40.0, 2001) * gamma / mhz_to_internal(8.0) * mhz_to_internal(1.0)
    cfg = spectrum.SpectrumConfig(symmetry="sigma", gamma_eff=gamma,
                                  e_gg=1.0, omega_grid=omega, n_theta=8)
    line = spectrum.SpectralLine(theta=1.0, v=0,
                                 omega_line=mhz_to_internal(-5.0), weight=2.0)
    res = spectrum.emission_spectrum(cfg, [line])
    expected = gamma**2 / ((omega - line.omega_line) ** 2 + gamma**2)
    assert np.max(np.abs(res.intensity - expected)) < 1e-12
    k = int(np.argmin(np.abs(omega - line.omega_line)))
    half = np.interp(line.omega_line + gamma, omega, res.intensity)
    assert half == pytest.approx(0.5, abs=1e-3)
    assert res.intensity[k] == pytest.approx(1.0, abs=1e-6)


def test_emission_zero_spectrum_warns():
    cfg = spectrum.SpectrumConfig(symmetry="pi", gamma_eff=1.0, e_gg=1.0,
                                  omega_grid=np.linspace(-1, 1, 11), n_theta=8)
    with pytest.warns(UserWarning, match="zero"):
        res = spectrum.emission_spectrum(cfg, [])
    assert np.all(res.intensity == 0.0)


def test_config_validation():
    grid_om = np.linspace(-1, 1, 5)
    with pytest.raises(core.ValidationError):
        spectrum.SpectrumConfig(symmetry="x", gamma_eff=1.0, e_gg=1.0,
                                omega_grid=grid_om)
    with pytest.raises(core.ValidationError):
        spectrum.SpectrumConfig(symmetry="sigma", gamma_eff=0.0, e_gg=1.0,
                                omega_grid=grid_om)
    with pytest.raises(core.ValidationError):
        spectrum.SpectrumConfig(symmetry="sigma", gamma_eff=1.0, e_gg=-1.0,
                                omega_grid=grid_om)
    with pytest.raises(core.ValidationError):
        spectrum.SpectrumConfig(symmetry="sigma", gamma_eff=1.0, e_gg=1.0,
                                omega_grid=grid_om, n_theta=4)


def test_validity_taper_is_smooth_and_bounded():
    d_e = 1.0
    xs = np.linspace(0.0, -0.2, 400)
    vals = np.array([spectrum._level_validity(x, d_e) for x in xs])
    assert np.all((0.0 <= vals) & (vals <= 1.0))
    assert spectrum._level_validity(-0.02, d_e) == 0.0
    assert spectrum._level_validity(-0.2, d_e) == 1.0
    assert np.all(np.diff(vals) >= -1e-12)
