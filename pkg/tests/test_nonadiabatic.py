import math

import numpy as np
import pytest

from cavdiatom import adiabatic, nonadiabatic
from cavdiatom.core import RadialGrid, kinetic_constant


@pytest.fixture(scope="module")
def optical_tables(cs_optical, coarse_grid):
    curves = adiabatic.diagonalize_curves(cs_optical, coarse_grid)
    return curves, nonadiabatic.coupling_tables(cs_optical, coarse_grid, curves)


def test_tau_antisymmetry(optical_tables):
    _, tabs = optical_tables
    assert np.array_equal(tabs.tau, -np.swapaxes(tabs.tau, 1, 2))
    assert np.all(tabs.tau[:, 0, 0] == 0.0)


def test_tau_vanishes_for_constant_eigenvectors(cs_optical, coarse_grid):
    p = cs_optical.replace(kappa_A=0.0, kappa_B=0.0)
    curves = adiabatic.diagonalize_curves(p, coarse_grid, check_flatness=False)
    tau = nonadiabatic.compute_tau(curves, p)
    # eigenvectors are R-independent, only the tiny 1-2 rotation survives
    assert np.max(np.abs(tau[:, 0, 2])) == 0.0
    assert np.max(np.abs(tau[:, 1, 2])) == 0.0


def test_tau_peaks_near_crossing(cs_optical, optical_tables):
    curves, tabs = optical_tables
    r = curves.grid.points()
    well = adiabatic.characterize_well(curves)
    peak_r = r[int(np.argmax(np.abs(tabs.tau[:, 0, 1])))]
    assert abs(peak_r - well.r_c) < 0.2 * well.r_c


def test_tau_against_finite_difference_eigenvectors(cs_optical, optical_tables):
    curves, tabs = optical_tables
    r = curves.grid.points()
    h = 0.05
    scale = np.max(np.abs(tabs.tau))
    for r0 in (1200.0, 1900.0, 2100.0, 4000.0):
        k = int(np.argmin(np.abs(r - r0)))
        chis = []
        for rr in (r[k] - h, r[k] + h):
            vals, vecs = np.linalg.eigh(adiabatic.build_hamiltonian(cs_optical, rr))
            # align phases with the stored eigenvectors
            for i in range(3):
                if np.dot(vecs[:, i], curves.chi[k, :, i]) < 0.0:
                    vecs[:, i] = -vecs[:, i]
            chis.append(vecs)
        dchi = (chis[1] - chis[0]) / (2.0 * h)
        tau_fd = curves.chi[k].T @ dchi
        for i in range(3):
            for j in range(3):
                if i == j:
                    continue
                assert abs(tau_fd[i, j] - tabs.tau[k, i, j]) < 1e-4 * scale


def test_tau_gauge_invariance_under_global_sign_flip(cs_optical, optical_tables):
    curves, tabs = optical_tables
    flipped = curves.chi.copy()
    k = flipped.shape[0] // 2
    flipped[k] = -flipped[k]
    alt = adiabatic.AdiabaticCurves(grid=curves.grid, omega=curves.omega,
                                    chi=flipped, thresholds=curves.thresholds,
                                    params=curves.params)
    tau_alt = nonadiabatic.compute_tau(alt, cs_optical)
    assert np.array_equal(tau_alt, tabs.tau)


def test_transform_identity_for_zero_tau(coarse_grid):
    tau = np.zeros((coarse_grid.n_points, 3, 3))
    t_mat = nonadiabatic.compute_T(tau, coarse_grid)
    assert np.max(np.abs(t_mat - np.eye(3))) == 0.0


def test_transform_constant_block_rotation():
    grid = RadialGrid(r_wall=1.0, r_infinity=101.0, n_points=2001)
    t12 = 0.0123
    tau = np.zeros((grid.n_points, 3, 3))
    tau[:, 0, 1] = t12
    tau[:, 1, 0] = -t12
    t_mat = nonadiabatic.compute_T(tau, grid)
    r = grid.points()
    angle = t12 * (grid.r_infinity - r[0])
    expected = np.array([
        [math.cos(angle), -math.sin(angle), 0.0],
        [math.sin(angle), math.cos(angle), 0.0],
        [0.0, 0.0, 1.0],
    ])
    assert np.max(np.abs(np.abs(t_mat[0]) - np.abs(expected))) < 1e-8
    # rotation angle magnitude matches the closed form
    got = math.atan2(abs(t_mat[0][1, 0]), t_mat[0][0, 0])
    assert got == pytest.approx(angle % math.pi, abs=1e-6) or \
        got == pytest.approx(math.pi - angle % math.pi, abs=1e-6)


def test_transform_orthogonality_and_boundary(optical_tables):
    _, tabs = optical_tables
    t_mat = tabs.t_mat
    assert np.max(np.abs(t_mat[-1] - np.eye(3))) == 0.0
    idx = np.linspace(0, t_mat.shape[0] - 1, 40).astype(int)
    for k in idx:
        assert np.max(np.abs(t_mat[k] @ t_mat[k].T - np.eye(3))) < 1e-8


def test_transform_step_halving_second_order(cs_optical):
    grids = [RadialGrid(200.0, 20000.0, n) for n in (2049, 4097, 8193)]
    t_at_wall = []
    for g in grids:
        curves = adiabatic.diagonalize_curves(cs_optical, g)
        tau = nonadiabatic.compute_tau(curves, cs_optical)
        t_at_wall.append(nonadiabatic.compute_T(tau, g)[0])
    err1 = np.max(np.abs(t_at_wall[0] - t_at_wall[2]))
    err2 = np.max(np.abs(t_at_wall[1] - t_at_wall[2]))
    assert err1 / err2 == pytest.approx(4.0, rel=0.5)


def test_tau_noncommutativity_diagnostic(optical_tables):
    curves, tabs = optical_tables
    r = curves.grid.points()
    ka = int(np.argmin(np.abs(r - 1800.0)))
    kb = int(np.argmin(np.abs(r - 2300.0)))
    comm = tabs.tau[ka] @ tabs.tau[kb] - tabs.tau[kb] @ tabs.tau[ka]
    assert np.max(np.abs(comm)) > 0.0


def test_w_symmetry_and_asymptotics(cs_optical, optical_tables):
    curves, tabs = optical_tables
    w = tabs.w
    assert np.array_equal(w, np.swapaxes(w, 1, 2))
    a_kin = kinetic_constant(cs_optical)
    flat_tol = 1e-3 * (cs_optical.kappa_A + cs_optical.kappa_B) / a_kin
    assert np.max(np.abs(w[-1])) < flat_tol
    # where the transform is near identity the diagonal follows the curves
    k = w.shape[0] - 5
    expected = (curves.omega[:, k] - curves.thresholds) / a_kin
    assert np.max(np.abs(np.diag(w[k]) - expected)) < 1e-6 * np.max(np.abs(expected))


def test_w22_reproduces_binding_well(cs_optical, optical_tables):
    curves, tabs = optical_tables
    a_kin = kinetic_constant(cs_optical)
    well = adiabatic.characterize_well(curves)
    w22_min = np.min(tabs.w[:, 1, 1]) * a_kin
    # the diabatic diagonal dives below the adiabatic minimum inside R_c and
    # still mixes just beyond it; well past the crossing it traces omega_2
    r = curves.grid.points()
    sel = r > 1.6 * well.r_c
    diff = tabs.w[sel, 1, 1] * a_kin - (curves.omega[1, sel] - curves.thresholds[1])
    assert np.max(np.abs(diff)) < 0.05 * well.depth
    assert w22_min <= -0.9 * well.depth
