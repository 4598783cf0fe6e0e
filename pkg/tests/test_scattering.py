import math

import numpy as np
import pytest
import scipy.linalg
import scipy.optimize

from cavdiatom import core, nonadiabatic, scattering
from cavdiatom.core import (
    RadialGrid,
    NumericalError,
    ValidationError,
    mhz_to_internal,
)

A_CS = core.kinetic_constant(core.load_params("cs-optical"))


def test_make_channels_flags(cs_optical, synthetic_curves_factory, coarse_grid):
    curves = synthetic_curves_factory([0.0, 1.0, 2.0], coarse_grid)
    ch = scattering.make_channels(3.0 * A_CS, curves)
    assert ch.n_open == 3 and np.all(np.imag(ch.p) == 0.0)
    ch = scattering.make_channels(0.5 * A_CS, curves)
    assert list(ch.open_ch) == [True, False, False]
    assert np.real(ch.p[0]) > 0.0
    assert np.imag(ch.p[1]) > 0.0 and np.real(ch.p[1]) == 0.0
    with pytest.raises(ValidationError, match="threshold"):
        scattering.make_channels(1.0 * A_CS, curves)


def test_momentum_square_root_law(synthetic_curves_factory, coarse_grid):
    curves = synthetic_curves_factory([0.0, 1.0, 2.0], coarse_grid)
    eps = np.array([1e-6, 4e-6])
    p1 = [np.real(scattering.make_channels(e * A_CS, curves).p[0]) for e in eps]
    assert p1[1] / p1[0] == pytest.approx(2.0, rel=1e-6)


@pytest.fixture(scope="module")
def free_setup(cs_optical, warm_kernels):
    grid = RadialGrid(r_wall=1e-9, r_infinity=100.0, n_points=4097)
    th = np.array([0.0, 50.0, 300.0]) * A_CS
    from conftest import SyntheticCurves

    curves = SyntheticCurves(th, cs_optical, grid=grid)
    w = np.zeros((grid.n_points, 3, 3))
    return grid, curves, w


def test_free_solution_matches_sine(free_setup):
    grid, curves, w = free_setup
    e = 0.04 * A_CS
    ch = scattering.make_channels(e, curves)
    reg = scattering.solve_regular(ch, w, grid)
    x = grid.points() - grid.r_wall
    p1 = np.real(ch.p[0])
    expected = np.sin(p1 * x) / p1
    m11 = reg.m_cum[0, 0]
    assert np.max(np.abs(reg.phi[:, 0, 0] - expected * m11)) < 1e-9 * np.abs(m11) / p1
    assert np.max(np.abs(reg.phi[:, 0, 1])) == 0.0


def test_free_jost_is_identity_scaled(free_setup):
    grid, curves, w = free_setup
    ch = scattering.make_channels(0.04 * A_CS, curves)
    sm = scattering.solve_at_energy(0.04 * A_CS, curves, w, grid)
    assert sm.s_open[0, 0] == pytest.approx(1.0, abs=1e-12)
    assert sm.k_open[0, 0] == pytest.approx(0.0, abs=1e-12)
    # the full matrix equals the stabilizer once the open-row phase is undone
    jm = scattering.jost_fused(ch, w, grid)
    num, den = jm.schur_factors()
    assert num[0, 0] / den[0, 0] == pytest.approx(1.0, abs=1e-12)


def square_well_exact_s(k, v0, a):
    kin = math.sqrt(k * k + v0)
    delta = math.atan2(k * math.tan(kin * a), kin) - k * a
    return complex(math.cos(2 * delta), math.sin(2 * delta))


@pytest.fixture(scope="module")
def square_well(cs_optical, warm_kernels):
    grid = RadialGrid(r_wall=1e-9, r_infinity=100.0, n_points=262145)
    th = np.array([0.0, 50.0, 300.0]) * A_CS
    from conftest import SyntheticCurves

    curves = SyntheticCurves(th, cs_optical, grid=grid)
    x = grid.points() - grid.r_wall
    v0, a_well = 0.01, 40.0
    w = np.zeros((grid.n_points, 3, 3))
    w[:, 0, 0] = np.where(x < a_well, -v0, 0.0)
    j = int(np.argmin(np.abs(x - a_well)))
    w[j, 0, 0] = -0.5 * v0
    return grid, curves, w, v0, a_well


def test_square_well_matches_closed_form(square_well):
    # the potential jump limits any smooth-order quadrature to O(dx^2) with a
    # sizable constant; the smooth exponential well below carries the
    # tight closed-form comparison
    grid, curves, w, v0, a_well = square_well
    k1 = 0.2
    sm = scattering.solve_at_energy(k1 * k1 * A_CS, curves, w, grid, keep_regular=True)
    s_exact = square_well_exact_s(k1, v0, a_well)
    assert abs(sm.s_open[0, 0] - s_exact) < 2e-5
    assert abs(abs(sm.s_open[0, 0]) - 1.0) < 1e-12
    assert sm.k_open[0, 0] == pytest.approx(math.tan(np.angle(s_exact) / 2.0), abs=2e-5)


def exponential_well_exact_s(k, v0, rho):
    import mpmath as mp

    mp.mp.dps = 30
    nu = mp.mpc(0, 2.0 * k * rho)
    z0 = mp.mpf(2.0 * rho * math.sqrt(v0))
    s = (mp.besselj(nu, z0) / mp.besselj(-nu, z0)
         * mp.power(rho * math.sqrt(v0), -4j * k * rho)
         * mp.gamma(1 + nu) / mp.gamma(1 - nu))
    return complex(s)


def test_exponential_well_matches_closed_form(cs_optical, warm_kernels):
    grid = RadialGrid(r_wall=1e-9, r_infinity=100.0, n_points=262145)
    th = np.array([0.0, 50.0, 300.0]) * A_CS
    from conftest import SyntheticCurves

    curves = SyntheticCurves(th, cs_optical, grid=grid)
    x = grid.points() - grid.r_wall
    v0, rho = 0.01, 5.0
    w = np.zeros((grid.n_points, 3, 3))
    w[:, 0, 0] = -v0 * np.exp(-x / rho)
    for k1 in (0.1, 0.2):
        sm = scattering.solve_at_energy(k1 * k1 * A_CS, curves, w, grid)
        s_exact = exponential_well_exact_s(k1, v0, rho)
        assert abs(sm.s_open[0, 0] - s_exact) < 1e-8


def test_square_well_numerov_matches_closed_form(square_well):
    grid, curves, w, v0, a_well = square_well
    k1 = 0.2
    ch = scattering.make_channels(k1 * k1 * A_CS, curves)
    k_open = scattering.numerov_k_open(ch, w, grid)
    s11 = (1.0 + 1j * k_open[0, 0]) / (1.0 - 1j * k_open[0, 0])
    assert abs(s11 - square_well_exact_s(k1, v0, a_well)) < 2e-5


def test_fused_and_stored_jost_agree(square_well):
    grid, curves, w, *_ = square_well
    e = 0.05 * A_CS
    fused = scattering.solve_at_energy(e, curves, w, grid)
    stored = scattering.solve_at_energy(e, curves, w, grid, keep_regular=True)
    assert abs(fused.s_open[0, 0] - stored.s_open[0, 0]) < 1e-12


def test_boundary_jost_matches_literal_quadrature(cs_optical, warm_kernels):
    # benign case: weakly closed channels, so the integral form stays in range
    grid = RadialGrid(r_wall=1e-9, r_infinity=60.0, n_points=8193)
    th = np.array([0.0, 0.02, 0.05]) * A_CS
    from conftest import SyntheticCurves

    curves = SyntheticCurves(th, cs_optical, grid=grid)
    x = grid.points() - grid.r_wall
    w = np.zeros((grid.n_points, 3, 3))
    bump = 0.004 * np.exp(-((x - 15.0) / 6.0) ** 2)
    w[:, 0, 0] = -bump
    w[:, 0, 1] = w[:, 1, 0] = 0.4 * bump
    w[:, 1, 1] = -0.5 * bump
    w[:, 2, 2] = 0.8 * bump
    w[:, 1, 2] = w[:, 2, 1] = 0.2 * bump
    ch = scattering.make_channels(0.01 * A_CS, curves)
    reg = scattering.solve_regular(ch, w, grid)
    jm = scattering.jost_matrix(ch, w, reg, grid)
    fq_plus, fq_minus = scattering.jost_quadrature(ch, w, reg, grid)
    # the boundary form stores closed rows without their e^{+-iPL} prefactor
    span = grid.r_infinity - grid.r_wall
    pref = np.where(ch.open_ch, 1.0 + 0j, np.exp(1j * ch.p * span))
    fb_plus = pref[:, None] * jm.f_plus
    fb_minus = pref[:, None] * jm.f_minus
    for got, ref in ((fb_plus, fq_plus), (fb_minus, fq_minus)):
        for i in range(3):
            row_scale = np.max(np.abs(ref[i]))
            assert np.max(np.abs(got[i] - ref[i])) < 2e-5 * row_scale


def test_single_channel_bound_state_is_jost_zero(cs_optical, warm_kernels):
    grid = RadialGrid(r_wall=1e-9, r_infinity=80.0, n_points=16385)
    th = np.array([0.0, 5.0, 10.0]) * A_CS
    from conftest import SyntheticCurves

    curves = SyntheticCurves(th, cs_optical, grid=grid)
    x = grid.points() - grid.r_wall
    w = np.zeros((grid.n_points, 3, 3))
    w[:, 0, 0] = -0.02 * np.exp(-((x - 12.0) / 8.0) ** 2)

    # dense-grid oracle for the bound level of that single-channel well
    h = grid.spacing
    diag = 2.0 / h**2 + w[1:-1, 0, 0]
    off = np.full(grid.n_points - 3, -1.0 / h**2)
    levels = scipy.linalg.eigh_tridiagonal(diag, off, select="v",
                                           select_range=(-1.0, -1e-8),
                                           eigvals_only=True)
    assert levels.size >= 1
    e_bound = levels[-1] * A_CS

    def det_at(e):
        return np.real(scattering.det_jost(e, curves, w, grid))

    span = 0.1 * abs(e_bound)
    lo, hi = det_at(e_bound - span), det_at(e_bound + span)
    assert lo * hi < 0.0
    root = scipy.optimize.brentq(det_at, e_bound - span, e_bound + span,
                                 xtol=1e-10 * abs(e_bound))
    assert abs(root - e_bound) < 2e-3 * abs(e_bound)


@pytest.fixture(scope="module")
def optical_full(cs_optical):
    grid = core.preset_grid("cs-optical")
    curves, tabs = nonadiabatic.tables_for(cs_optical, grid)
    return grid, curves, tabs


def test_preset_unitarity_one_open(cs_optical, optical_full, warm_kernels):
    grid, curves, tabs = optical_full
    for e_mhz in (-80.0, -40.0, -12.0):
        e = cs_optical.omega_A + mhz_to_internal(e_mhz)
        sm = scattering.solve_at_energy(e, curves, tabs.w, grid)
        assert scattering.unitarity_defect(sm.s_open) < 1e-10
        assert sm.k_open.shape == (1, 1) and np.isrealobj(sm.k_open)


def test_preset_two_open_symmetry_and_unitarity(cs_optical, optical_full):
    grid, curves, tabs = optical_full
    e = cs_optical.omega_A + mhz_to_internal(40.0)   # channels 1 and 2 open
    sm = scattering.solve_at_energy(e, curves, tabs.w, grid)
    assert sm.s_open.shape == (2, 2)
    assert scattering.unitarity_defect(sm.s_open) < 1e-6
    assert abs(sm.s_open[0, 1] - sm.s_open[1, 0]) < 1e-6
    assert np.max(np.abs(sm.k_open - sm.k_open.T)) < 1e-6


def test_volterra_vs_numerov_on_preset(cs_optical, optical_full):
    grid, curves, tabs = optical_full
    energies = cs_optical.omega_A + mhz_to_internal(np.array([-85.0, -33.0, -9.0]))
    sig_v, _ = scattering.scan_sigma11(cs_optical, grid, energies, "volterra")
    sig_n, _ = scattering.scan_sigma11(cs_optical, grid, energies, "numerov")
    floor = 1e-2 * max(sig_v.max(), sig_n.max())
    rel = np.abs(sig_v - sig_n) / np.maximum(np.maximum(sig_v, sig_n), floor)
    assert np.max(rel) < 1e-4


def test_threshold_law(cs_optical, optical_full):
    grid, curves, tabs = optical_full
    th1 = curves.thresholds[0]
    eps = mhz_to_internal(np.array([4e-4, 16e-4]))
    vals = []
    for e in th1 + eps:
        sm = scattering.solve_at_energy(e, curves, tabs.w, grid)
        vals.append(abs(1.0 - sm.s_open[0, 0]))
    assert vals[1] / vals[0] == pytest.approx(2.0, rel=0.2)
    sig = scattering.s11_to_sigma(np.array([th1 + eps[0]]),
                                  np.array([1.0 - vals[0]]), curves)
    assert np.isfinite(sig).all()


def test_cross_section_limits(synthetic_curves_factory, coarse_grid):
    curves = synthetic_curves_factory([0.0, 1.0, 2.0], coarse_grid)
    ch = scattering.make_channels(0.25 * A_CS, curves)
    p1 = np.real(ch.p[0])
    assert scattering.cross_section(ch, np.array([[1.0 + 0j]]))[0, 0] == 0.0
    sig = scattering.cross_section(ch, np.array([[-1.0 + 0j]]))[0, 0]
    assert sig == pytest.approx(4.0 * math.pi / p1**2 * scattering.SIGMA_A0CM2, rel=1e-12)
    below = scattering.make_channels(-0.5 * A_CS, curves)
    with pytest.raises(ValidationError):
        scattering.cross_section(below, np.zeros((0, 0)))


def test_lossy_convolve_identity_and_closure():
    # window much wider than the widths, so tail escape stays below 1e-3
    e = np.linspace(-2500.0, 2500.0, 20001)
    gamma_r, gamma_c = 4.0, 6.0
    lor = (0.5 * gamma_r) ** 2 / (e**2 + (0.5 * gamma_r) ** 2)
    assert np.array_equal(scattering.lossy_convolve(e, lor, 0.0), lor)
    out = scattering.lossy_convolve(e, lor, gamma_c)
    # Lorentzian widths add under convolution
    from cavdiatom.resonance import fit_peak

    sel = np.abs(e) < 60.0
    center, fwhm = fit_peak(e[sel], out[sel], 0.0, gamma_r + gamma_c)
    assert fwhm == pytest.approx(gamma_r + gamma_c, rel=0.01)
    assert center == pytest.approx(0.0, abs=0.05)
    assert np.trapezoid(out, e) == pytest.approx(np.trapezoid(lor, e), rel=1e-3)
    with pytest.raises(ValidationError):
        scattering.lossy_convolve(e, lor, -1.0)
    with pytest.raises(ValidationError):
        scattering.lossy_convolve(np.array([0.0, 1.0, 3.0]), np.zeros(3), 1.0)


def test_jost_tail_error_for_unconverged_window(cs_optical, warm_kernels):
    grid = RadialGrid(r_wall=1e-9, r_infinity=50.0, n_points=2049)
    th = np.array([0.0, 5.0, 10.0]) * A_CS
    from conftest import SyntheticCurves

    curves = SyntheticCurves(th, cs_optical, grid=grid)
    x = grid.points() - grid.r_wall
    w = np.zeros((grid.n_points, 3, 3))
    w[:, 0, 0] = -0.01 * np.exp(-x / 200.0)       # far from flat at the edge
    ch = scattering.make_channels(0.02 * A_CS, curves)
    reg = scattering.solve_regular(ch, w, grid)
    with pytest.raises(NumericalError, match="r_infinity"):
        scattering.jost_matrix(ch, w, reg, grid)


def test_grid_halving_helper(optical_full):
    grid, _, _ = optical_full
    half = scattering.half_grid(grid)
    assert half.n_points == (grid.n_points - 1) // 2 + 1
    assert half.r_wall == grid.r_wall and half.r_infinity == grid.r_infinity
    with pytest.raises(ValidationError):
        scattering.half_grid(RadialGrid(1.0, 2.0, 4))
