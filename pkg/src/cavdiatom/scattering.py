"""Three-channel scattering: regular solution, Jost matrices, S/K, cross sections.

The radial problem is solved on the wall-shifted coordinate x = R - r_wall,
so the regular solution vanishes at the inner hard wall and all reported
phases are measured relative to the wall.  Two independent integrators are
provided: the Volterra march of the sine-kernel integral equation (primary)
and a renormalized-Numerov propagator with asymptotic matching (oracle).

The Jost integral F(P) = 1 + int exp(iPx) W(x) Phi(x) dx reduces, after
integrating the kernel by parts against a solution of the radial equation,
to the exact boundary form

    F(P)  = e^{+iPL} [Phi'(L) - iP Phi(L)],
    F(-P) = e^{-iPL} [Phi'(L) + iP Phi(L)]   (L = r_infinity - r_wall),

which is how the matrices are evaluated here: the quadrature form is
mathematically identical but numerically annihilates the open-channel
content under the exponentially amplified closed-channel tail coupling.
Closed rows are stored without their e^{+-iPL} prefactors (a diagonal left
scaling that cancels in the open-block S ratio and in pole locations).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .adiabatic import AdiabaticCurves
from .core import (
    BOHR_RADIUS_CM,
    RadialGrid,
    NumericalError,
    ValidationError,
    kinetic_constant,
)

SIGMA_A0CM2 = BOHR_RADIUS_CM**2


@dataclass(frozen=True)
class ChannelContext:
    """Scattering energy, thresholds and channel momenta.

    e          : total energy [rad/s], absolute (same frame as thresholds);
                 complex off the real axis during pole searches
    thresholds : asymptotic channel energies, ascending [rad/s]
    p          : channel momenta [1/a0]; real positive when open, positive
                 imaginary when closed
    open_ch    : open-channel flags (for complex e, decided by Re e)
    a_kin      : kinetic constant hbar/(2 mu a0^2) [rad/s]
    """

    e: complex
    thresholds: np.ndarray
    p: np.ndarray
    open_ch: np.ndarray
    a_kin: float

    @property
    def n_open(self) -> int:
        return int(np.count_nonzero(self.open_ch))


def make_channels(e, curves: AdiabaticCurves) -> ChannelContext:
    """Channel momenta at total energy e [rad/s, absolute, may be complex]."""
    th = np.asarray(curves.thresholds, dtype=float)
    a_kin = kinetic_constant(curves.params)
    spread = max(th[-1] - th[0], 1.0)
    e_ref = float(np.real(e))
    if np.min(np.abs(e_ref - th)) < 1e-12 * spread:
        raise ValidationError(f"threshold energy: e = {e_ref!r} is degenerate with a channel")
    open_ch = e_ref > th
    p = np.empty(3, dtype=complex)
    for i in range(3):
        d = (e - th[i]) / a_kin
        if open_ch[i]:
            p[i] = np.sqrt(complex(d))
        else:
            p[i] = 1j * np.sqrt(complex(-d))
    return ChannelContext(e=e, thresholds=th, p=p, open_ch=open_ch, a_kin=a_kin)


@dataclass(frozen=True)
class RegularSolution:
    """Regular solution matrix on the grid, in the stabilized final frame.

    phi[k] equals the true regular solution at x_k right-multiplied by the
    (common, invertible) stabilization transform; entries whose true
    magnitude lies below the representable floor underflow to zero.
    phi_last/psi_last hold the stabilized (Phi, Phi') pair at r_infinity.
    """

    grid: RadialGrid
    channels: ChannelContext
    phi: np.ndarray          # (n, 3, 3) complex, final frame
    phi_last: np.ndarray     # (3, 3)
    psi_last: np.ndarray     # (3, 3)
    m_cum: np.ndarray        # (3, 3) final transform M


def source_derivative(w: np.ndarray, grid: RadialGrid) -> np.ndarray:
    """Radial derivative of the coupling table (central differences)."""
    return np.gradient(w, grid.spacing, axis=0)


def solve_regular(channels: ChannelContext, w: np.ndarray,
                  grid: RadialGrid, corrected: bool = True) -> RegularSolution:
    """Volterra forward march of the regular solution across the grid."""
    n = grid.n_points
    if w.shape != (n, 3, 3):
        raise ValidationError(f"w table shape {w.shape} does not match grid ({n}, 3, 3)")
    _check_growth(channels, grid)
    phi_hist = np.empty((n, 3, 3), dtype=complex)
    scale_hist = np.empty((n, 3, 3), dtype=complex)
    phi_l = np.empty((3, 3), dtype=complex)
    psi_l = np.empty((3, 3), dtype=complex)
    m = np.empty((3, 3), dtype=complex)
    wc = np.ascontiguousarray(w)
    _kernels.volterra_march(grid.spacing, channels.p, wc,
                            source_derivative(wc, grid), corrected,
                            phi_l, psi_l, m, True, phi_hist, scale_hist)
    if not np.all(np.isfinite(phi_l)):
        raise NumericalError("regular-solution march overflowed despite renormalization")
    _kernels.rebase_history(phi_hist, scale_hist)
    return RegularSolution(grid=grid, channels=channels, phi=phi_hist,
                           phi_last=phi_l, psi_last=psi_l, m_cum=m)


@dataclass(frozen=True)
class JostMatrices:
    """F(P) and F(-P), right-multiplied by the common stabilizer M.

    Closed rows carry no e^{+-iPL} prefactor (diagonal left scaling, see the
    module docstring).  The stabilized matrices still have disparate row and
    column scales, so open-block quantities are extracted through the
    open/closed Schur complement, where every factor is well conditioned:

        S_oo ~ [F-_oo - F-_oc Z] [F+_oo - F+_oc Z]^{-1},
        Z = (F+_cc)^{-1} F+_co .
    """

    channels: ChannelContext
    f_plus: np.ndarray
    f_minus: np.ndarray
    m_cum: np.ndarray

    def _blocks(self):
        idx_o = np.flatnonzero(self.channels.open_ch)
        idx_c = np.flatnonzero(~self.channels.open_ch)
        return idx_o, idx_c

    def schur_factors(self):
        """Open-block numerator/denominator matrices of the S ratio."""
        idx_o, idx_c = self._blocks()
        fp, fm = self.f_plus, self.f_minus
        if idx_c.size == 0:
            return fm, fp
        cc = fp[np.ix_(idx_c, idx_c)].copy()
        co = fp[np.ix_(idx_c, idx_o)].copy()
        # equilibrate rows jointly, then columns of cc; a fully underflowed
        # column marks a channel with negligible coupling and is replaced by
        # the identity column (exact for a decoupled channel)
        row_scale = np.maximum(np.abs(cc).max(axis=1), np.abs(co).max(axis=1))
        row_scale[row_scale == 0.0] = 1.0
        cc /= row_scale[:, None]
        co /= row_scale[:, None]
        col_scale = np.abs(cc).max(axis=0)
        dead = col_scale == 0.0
        if np.any(dead):
            for j in np.flatnonzero(dead):
                cc[j, j] = 1.0
            col_scale[dead] = 1.0
        try:
            # z_s = D z with D = diag(col_scale); the factors recombine inside
            # the correction product so neither huge nor tiny z is materialized
            z_s = np.linalg.solve(cc / col_scale[None, :], co)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                "Jost singularity (possible bound state at this energy)"
            ) from exc
        oc_m = fm[np.ix_(idx_o, idx_c)] / col_scale[None, :]
        oc_p = fp[np.ix_(idx_o, idx_c)] / col_scale[None, :]
        num = fm[np.ix_(idx_o, idx_o)] - oc_m @ z_s
        den = fp[np.ix_(idx_o, idx_o)] - oc_p @ z_s
        return num, den

    def pole_function(self) -> complex:
        """Scalar whose zeros (in E) are the S-matrix poles.

        det of the Schur complement of the closed-closed block: det F(P) up
        to the nonvanishing closed-block factor and positive equilibration,
        well-scaled where the raw determinant under- or overflows.
        """
        _, den = self.schur_factors()
        return complex(np.linalg.det(den))

    def equilibration_scales(self):
        """Positive row/column scales that bring F(P) M to O(1) entries."""
        fp = self.f_plus
        row = np.abs(fp).max(axis=1)
        row[row == 0.0] = 1.0
        col = np.abs(fp / row[:, None]).max(axis=0)
        col[col == 0.0] = 1.0
        return row, col

    def det_scaled(self, row_scale=None, col_scale=None) -> complex:
        """det of the diagonally rescaled F(P) M; zeros are S-matrix poles.

        det F factorizes into the closed-block determinant times the Schur
        complement, so its zeros are exactly the S poles with no spurious
        zero/pole pairs; the positive rescaling (frozen scales keep the
        function analytic during complex root searches) only conditions it.
        """
        row, col = (row_scale, col_scale)
        if row is None or col is None:
            row, col = self.equilibration_scales()
        fp = (self.f_plus / row[:, None]) / col[None, :]
        return complex(np.linalg.det(fp))

    def det_equilibrated(self) -> complex:
        """det_scaled with scales from this energy (real positive rescale).

        Used for bound-state sign scans below all thresholds, where the
        matrix is real and the positive equilibration preserves sign changes.
        """
        return self.det_scaled()

    def det_closed(self) -> float:
        """Sign-carrying det of the equilibrated closed-channel block.

        Real for real energy (closed rows of the Wronskian form are real);
        its simple zeros mark the quasibound levels of the closed subsystem,
        which seed the complex pole search.  The positive equilibration
        preserves the sign structure.
        """
        _, idx_c = self._blocks()
        if idx_c.size == 0:
            raise ValidationError("no closed channel: det_closed is undefined")
        cc = np.real(self.f_plus[np.ix_(idx_c, idx_c)]).copy()
        for i in range(cc.shape[0]):
            norm = np.abs(cc[i]).max()
            if norm > 0.0:
                cc[i] /= norm
        for j in range(cc.shape[1]):
            norm = np.abs(cc[:, j]).max()
            if norm == 0.0:
                cc[j, j] = 1.0
            else:
                cc[:, j] /= norm
        return float(np.linalg.det(cc))


def _jost_from_pair(channels: ChannelContext, grid: RadialGrid,
                    phi_l: np.ndarray, psi_l: np.ndarray,
                    m_cum: np.ndarray) -> JostMatrices:
    span = grid.r_infinity - grid.r_wall
    p = channels.p
    f_plus = psi_l - 1j * p[:, None] * phi_l
    f_minus = psi_l + 1j * p[:, None] * phi_l
    for i in np.flatnonzero(channels.open_ch):
        f_plus[i] *= np.exp(1j * p[i] * span)
        f_minus[i] *= np.exp(-1j * p[i] * span)
    return JostMatrices(channels=channels, f_plus=f_plus, f_minus=f_minus,
                        m_cum=m_cum)


def jost_matrix(channels: ChannelContext, w: np.ndarray,
                regular: RegularSolution, grid: RadialGrid,
                tail_tol: float = 1e-3) -> JostMatrices:
    """Jost matrices of the truncated problem from the regular solution.

    Evaluated in the boundary (integrated-by-parts) form; errors out when
    the coupling potential has not flattened at r_infinity, since the
    truncated integral then still depends on the cutoff.
    """
    w_tail = np.max(np.abs(w[-1]))
    w_scale = np.max(np.abs(w))
    if w_scale > 0.0 and w_tail > tail_tol * w_scale:
        raise NumericalError(
            "Jost integrand has not converged at r_infinity "
            f"(tail/scale = {w_tail / w_scale:.2e}); increase r_infinity"
        )
    return _jost_from_pair(channels, grid, regular.phi_last.copy(),
                           regular.psi_last.copy(), regular.m_cum)


def jost_quadrature(channels: ChannelContext, w: np.ndarray,
                    regular: RegularSolution, grid: RadialGrid):
    """Literal trapezoid of the Jost integral over the stored solution.

    Diagnostic only: agrees with jost_matrix wherever closed-channel tail
    amplification stays below the double-precision dynamic range.
    """
    x = grid.points() - grid.r_wall
    wphi = np.einsum("kij,kjl->kil", w, regular.phi)
    weights = np.full(grid.n_points, grid.spacing)
    weights[0] = weights[-1] = 0.5 * grid.spacing
    f_plus = regular.m_cum.astype(complex).copy()
    f_minus = regular.m_cum.astype(complex).copy()
    phase_p = np.exp(1j * np.outer(x, channels.p))
    p_ref = np.where(channels.open_ch, -channels.p, channels.p)
    phase_m = np.exp(1j * np.outer(x, p_ref))
    f_plus += np.einsum("k,ki,kij->ij", weights, phase_p, wphi)
    f_minus += np.einsum("k,ki,kij->ij", weights, phase_m, wphi)
    return f_plus, f_minus


def jost_fused(channels: ChannelContext, w: np.ndarray,
               grid: RadialGrid, w_prime: np.ndarray | None = None,
               corrected: bool = True) -> JostMatrices:
    """Jost matrices straight from the march, without storing the solution."""
    _check_growth(channels, grid)
    phi_l = np.empty((3, 3), dtype=complex)
    psi_l = np.empty((3, 3), dtype=complex)
    m = np.empty((3, 3), dtype=complex)
    dummy = np.zeros((1, 3, 3), dtype=complex)
    wc = np.ascontiguousarray(w)
    if w_prime is None:
        w_prime = source_derivative(wc, grid)
    _kernels.volterra_march(grid.spacing, channels.p, wc,
                            w_prime, corrected,
                            phi_l, psi_l, m, False, dummy, dummy.copy())
    if not np.all(np.isfinite(phi_l)):
        raise NumericalError("regular-solution march overflowed despite renormalization")
    return _jost_from_pair(channels, grid, phi_l, psi_l, m)


def _check_growth(channels: ChannelContext, grid: RadialGrid) -> None:
    # closed-channel growth is handled by renormalization; only the mild
    # open-channel growth of complex-energy continuation needs a guard
    span = grid.r_infinity - grid.r_wall
    open_growth = np.max(np.where(channels.open_ch,
                                  np.abs(np.imag(channels.p)), 0.0)) * span
    if open_growth > 200.0:
        raise NumericalError(
            "energy lies too deep in the complex plane for the Jost march "
            f"(open-channel growth exponent {open_growth:.1f})"
        )


@dataclass(frozen=True)
class ScatteringMatrices:
    """Open-block scattering quantities derived from the Jost matrices."""

    channels: ChannelContext
    s_open: np.ndarray          # (n_open, n_open) complex
    k_open: np.ndarray          # (n_open, n_open) real
    sigma: np.ndarray           # (n_open, n_open) cross sections [cm^2]
    jost: JostMatrices | None = None
    regular: RegularSolution | None = None


def s_and_k(channels: ChannelContext, jost: JostMatrices,
            regular: RegularSolution | None = None) -> ScatteringMatrices:
    """S = P^{1/2} F(-P) F(P)^{-1} P^{-1/2} and K, restricted to open channels."""
    if channels.n_open == 0:
        raise ValidationError("no open channel: S and K are undefined")
    num, den = jost.schur_factors()
    if not np.all(np.isfinite(den)) or abs(np.linalg.det(den)) == 0.0:
        raise NumericalError("Jost singularity (possible bound state at this energy)")
    x_open = num @ np.linalg.inv(den)
    idx = np.flatnonzero(channels.open_ch)
    # flux normalization: the sine-kernel regular solution carries 1/P per
    # channel, so the momentum square roots enter in this order (the open
    # block then comes out unitary and symmetric to machine precision)
    sqrt_p = np.sqrt(channels.p[idx])
    s_open = (sqrt_p[None, :] / sqrt_p[:, None]) * x_open
    n_open = idx.size
    eye = np.eye(n_open)
    k_mat = 1j * (eye - s_open) @ np.linalg.inv(eye + s_open)
    sigma = cross_section(channels, s_open)
    return ScatteringMatrices(channels=channels, s_open=s_open,
                              k_open=np.real(k_mat), sigma=sigma,
                              jost=jost, regular=regular)


def cross_section(channels: ChannelContext, s_open: np.ndarray) -> np.ndarray:
    """s-wave cross sections sigma_ij = pi/P_i^2 |delta_ij - S_ij|^2 [cm^2]."""
    idx = np.flatnonzero(channels.open_ch)
    if idx.size == 0:
        raise ValidationError("no open channel: cross sections are undefined")
    if s_open.shape != (idx.size, idx.size):
        raise ValidationError(
            f"S block shape {s_open.shape} does not match {idx.size} open channels"
        )
    p_open = np.real(channels.p[idx])
    if np.any(p_open <= 0.0):
        raise ValidationError("closed incident channel in cross_section")
    amp = np.eye(idx.size) - s_open
    return (np.pi / p_open[:, None] ** 2) * np.abs(amp) ** 2 * SIGMA_A0CM2


def solve_at_energy(e, curves: AdiabaticCurves, w: np.ndarray,
                    grid: RadialGrid, keep_regular: bool = False) -> ScatteringMatrices:
    """Channels + Volterra + Jost + S/K at one energy [rad/s absolute]."""
    channels = make_channels(e, curves)
    if keep_regular:
        regular = solve_regular(channels, w, grid)
        jost = jost_matrix(channels, w, regular, grid)
        return s_and_k(channels, jost, regular)
    return s_and_k(channels, jost_fused(channels, w, grid))


def det_jost(e, curves: AdiabaticCurves, w: np.ndarray, grid: RadialGrid) -> complex:
    """Pole function at (possibly complex) energy e; zeros locate S-matrix poles.

    Above the lowest threshold this is the Schur-complement factor of
    det F(P); below all thresholds it is the equilibrated determinant
    (real there, so sign changes flag bound states).
    """
    channels = make_channels(e, curves)
    jm = jost_fused(channels, w, grid)
    if channels.n_open == 0:
        return jm.det_equilibrated()
    return jm.pole_function()


def scan_s11(energies, curves: AdiabaticCurves, w: np.ndarray,
             grid: RadialGrid) -> np.ndarray:
    """Batched Volterra scan of the open-channel-1 S_11 over real energies."""
    energies = np.asarray(energies, dtype=float)
    n_e = energies.size
    contexts = [make_channels(e, curves) for e in energies]
    p_all = np.array([ch.p for ch in contexts])
    phi_all = np.empty((n_e, 3, 3), dtype=complex)
    psi_all = np.empty((n_e, 3, 3), dtype=complex)
    m_all = np.empty((n_e, 3, 3), dtype=complex)
    wc = np.ascontiguousarray(w)
    _kernels.volterra_scan(grid.spacing, p_all, wc,
                           source_derivative(wc, grid), True,
                           phi_all, psi_all, m_all)
    s11 = np.empty(n_e, dtype=complex)
    for k, ch in enumerate(contexts):
        jm = _jost_from_pair(ch, grid, phi_all[k], psi_all[k], m_all[k])
        num, den = jm.schur_factors()
        s11[k] = (num @ np.linalg.inv(den))[0, 0]
    return s11


def numerov_k_open(channels: ChannelContext, w: np.ndarray,
                   grid: RadialGrid) -> np.ndarray:
    """Open-block K matrix from the renormalized-Numerov oracle."""
    q2s = np.real((channels.e - channels.thresholds) / channels.a_kin)
    ratio = _kernels.numerov_ratio(grid.spacing, q2s, np.ascontiguousarray(w))
    return _match_numerov(channels, w, grid, ratio)


def _match_numerov(channels: ChannelContext, w: np.ndarray, grid: RadialGrid,
                   ratio: np.ndarray) -> np.ndarray:
    """Match the Numerov ratio at the two outermost points to free solutions."""
    n = grid.n_points
    dx = grid.spacing
    x_a = (n - 2) * dx
    x_b = (n - 1) * dx
    fac = dx * dx / 12.0
    q2s = np.real((channels.e - channels.thresholds) / channels.a_kin)
    tn_a = fac * (w[n - 2] - np.diag(q2s))
    tn_b = fac * (w[n - 1] - np.diag(q2s))
    a_b = np.eye(3) - tn_b
    lhs = ratio @ (np.eye(3) - tn_a)

    idx_open = np.flatnonzero(channels.open_ch)
    idx_closed = np.flatnonzero(~channels.open_ch)
    p_open = np.real(channels.p[idx_open])
    q_closed = np.imag(channels.p[idx_closed])

    s_a = np.zeros(3)
    s_b = np.zeros(3)
    c_a = np.zeros(3)
    c_b = np.zeros(3)
    d_a = np.zeros(3)
    d_b = np.zeros(3)
    s_a[idx_open] = np.sin(p_open * x_a)
    s_b[idx_open] = np.sin(p_open * x_b)
    c_a[idx_open] = np.cos(p_open * x_a)
    c_b[idx_open] = np.cos(p_open * x_b)
    d_a[idx_closed] = np.exp(-q_closed * (x_a - x_b))
    d_b[idx_closed] = 1.0

    g = np.zeros((3, 3))
    for i in idx_open:
        g[:, i] = a_b[:, i] * c_b[i] - lhs[:, i] * c_a[i]
    for i in idx_closed:
        g[:, i] = a_b[:, i] * d_b[i] - lhs[:, i] * d_a[i]

    k_open = np.empty((idx_open.size, idx_open.size))
    for col, m_ch in enumerate(idx_open):
        rhs = lhs[:, m_ch] * s_a[m_ch] - a_b[:, m_ch] * s_b[m_ch]
        beta = np.linalg.solve(g, rhs)
        k_open[:, col] = beta[idx_open]
    # flux normalization (sine/cosine reference functions carry no 1/sqrt P)
    sq = np.sqrt(p_open)
    return (sq[:, None] / sq[None, :]) * k_open


def numerov_s11(energies, curves: AdiabaticCurves, w: np.ndarray,
                grid: RadialGrid) -> np.ndarray:
    """S_11 over a real-energy batch from the Numerov oracle."""
    energies = np.asarray(energies, dtype=float)
    n_e = energies.size
    contexts = [make_channels(e, curves) for e in energies]
    q2s_all = np.array([np.real((c.e - c.thresholds) / c.a_kin) for c in contexts])
    r_all = np.empty((n_e, 3, 3))
    _kernels.numerov_scan(grid.spacing, q2s_all, np.ascontiguousarray(w), r_all)
    s11 = np.empty(n_e, dtype=complex)
    for k, ch in enumerate(contexts):
        k_open = _match_numerov(ch, w, grid, r_all[k])
        eye = np.eye(k_open.shape[0])
        s_open = (eye + 1j * k_open) @ np.linalg.inv(eye - 1j * k_open)
        s11[k] = s_open[0, 0]
    return s11


def half_grid(grid: RadialGrid) -> RadialGrid:
    """Grid with every other point (n-1 must be even), same endpoints."""
    if (grid.n_points - 1) % 2:
        raise ValidationError("grid interval count must be even to halve")
    return RadialGrid(grid.r_wall, grid.r_infinity, (grid.n_points - 1) // 2 + 1)


def richardson_phase(s_fine, s_coarse, order: int = 4) -> np.ndarray:
    """Eliminate the leading O(h^order) phase error from two unit-circle runs."""
    fac = 2.0**order - 1.0
    s_fine = np.asarray(s_fine)
    return s_fine * np.exp(1j * np.angle(s_fine / np.asarray(s_coarse)) / fac)


def scan_sigma11(params, grid: RadialGrid, energies, method: str = "volterra",
                 richardson: bool = True):
    """sigma_11 [cm^2] and S_11 over real energies [rad/s absolute].

    method 'volterra' uses the primary integral-equation march, 'numerov'
    the independent oracle; with richardson=True each is paired with a
    half-resolution run to cancel the leading discretization error.
    """
    from .nonadiabatic import tables_for

    energies = np.asarray(energies, dtype=float)
    curves, tabs = tables_for(params, grid)
    runner = scan_s11 if method == "volterra" else numerov_s11
    if method not in ("volterra", "numerov"):
        raise ValidationError(f"unknown scan method {method!r}")
    s11 = runner(energies, curves, tabs.w, grid)
    if richardson:
        grid2 = half_grid(grid)
        curves2, tabs2 = tables_for(params, grid2)
        s11_coarse = runner(energies, curves2, tabs2.w, grid2)
        s11 = richardson_phase(s11, s11_coarse)
    sigma = s11_to_sigma(energies, s11, curves)
    return sigma, s11


def s11_to_sigma(energies, s11, curves: AdiabaticCurves) -> np.ndarray:
    """sigma_11 [cm^2] from S_11 on a real-energy batch."""
    th = curves.thresholds
    a_kin = kinetic_constant(curves.params)
    p1 = np.sqrt((np.asarray(energies, dtype=float) - th[0]) / a_kin)
    return (np.pi / p1**2) * np.abs(1.0 - np.asarray(s11)) ** 2 * SIGMA_A0CM2


def lossy_convolve(energies, sigma, gamma_c) -> np.ndarray:
    """Convolve a cross-section curve with a unit-area Lorentzian of FWHM gamma_c.

    Requires a uniform energy grid; the discrete kernel is renormalized to
    unit mass so integrated area is preserved away from the window edges.
    """
    energies = np.asarray(energies, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if gamma_c < 0.0:
        raise ValidationError(f"gamma_c must be non-negative, got {gamma_c!r}")
    if gamma_c == 0.0:
        return sigma.copy()
    de = np.diff(energies)
    if de.size == 0 or not np.allclose(de, de[0], rtol=1e-8):
        raise ValidationError("lossy_convolve requires a uniform energy grid")
    step = de[0]
    half = gamma_c / 2.0
    n_half = int(min(max(25.0 * gamma_c / step, 10), 20 * energies.size))
    offsets = np.arange(-n_half, n_half + 1) * step
    kernel = half / (offsets**2 + half**2)
    kernel /= kernel.sum()
    padded = np.concatenate([np.full(n_half, sigma[0]), sigma,
                             np.full(n_half, sigma[-1])])
    return np.convolve(padded, kernel, mode="same")[n_half:-n_half]


def unitarity_defect(s_open: np.ndarray) -> float:
    """max |S^dag S - 1| over the open block."""
    eye = np.eye(s_open.shape[0])
    return float(np.max(np.abs(s_open.conj().T @ s_open - eye)))
