"""Compiled propagation kernels for the three-channel radial problem.

All kernels work on the wall-shifted coordinate x = R - r_wall with a uniform
step dx.  Channel momenta are complex: real positive for open channels,
i*|P| for closed ones (analytically continued for complex energies).

The Volterra march propagates the pair (Phi, Phi') with the exact free
propagator of each channel per step and trapezoidal panels of the coupling
source; this is algebraically the composite-trapezoid evaluation of the
sine-kernel integral equation.  Closed-channel growth (factors easily
exceeding exp(700) on the shipped grids) is absorbed by per-column
renormalization plus periodic Gram-Schmidt re-separation; all objects are
right-multiplied by a common invertible transform M, which cancels in
S-matrix ratios and leaves determinant zeros in place.
"""

import numba
import numpy as np
from numba import njit, prange

CAP = 1e6
KSEP = 64


@njit(cache=True, fastmath=True)
def accumulate_ordered_product(gen, out):
    """out[k] = out[k+1] @ gen[k], out[n-1] = identity (inward sweep)."""
    n = out.shape[0]
    for i in range(3):
        for j in range(3):
            out[n - 1, i, j] = 1.0 if i == j else 0.0
    for k in range(n - 2, -1, -1):
        for i in range(3):
            for j in range(3):
                acc = 0.0
                for m in range(3):
                    acc += out[k + 1, i, m] * gen[k, m, j]
                out[k, i, j] = acc


@njit(cache=True, inline="always", fastmath=True)
def _separate_columns(phi, psi, mcum, gmat):
    """Renormalize and orthonormalize the stacked (phi; psi) columns.

    Every elementary column operation is applied identically to the
    cumulative transform and to gmat (which therefore records the transform
    of this event when it starts as the identity).
    """
    for j in range(3):
        s = 0.0
        for row in range(3):
            a = abs(phi[row, j])
            if a > s:
                s = a
            a = abs(psi[row, j])
            if a > s:
                s = a
        if s > CAP:
            inv = CAP / s
            for row in range(3):
                phi[row, j] *= inv
                psi[row, j] *= inv
                mcum[row, j] *= inv
                gmat[row, j] *= inv
    for j in range(3):
        for i in range(j):
            r = 0.0 + 0.0j
            for row in range(3):
                r += np.conj(phi[row, i]) * phi[row, j] + np.conj(psi[row, i]) * psi[row, j]
            for row in range(3):
                phi[row, j] -= r * phi[row, i]
                psi[row, j] -= r * psi[row, i]
                mcum[row, j] -= r * mcum[row, i]
                gmat[row, j] -= r * gmat[row, i]
        nrm = 0.0
        for row in range(3):
            nrm += abs(phi[row, j]) ** 2 + abs(psi[row, j]) ** 2
        nrm = np.sqrt(nrm)
        if nrm > 0.0:
            inv = 1.0 / nrm
            for row in range(3):
                phi[row, j] *= inv
                psi[row, j] *= inv
                mcum[row, j] *= inv
                gmat[row, j] *= inv


@njit(cache=True, fastmath=True)
def volterra_march(dx, p, w, wp, corrected, phi_out, psi_out, m_out,
                   record, phi_hist, scale_hist):
    """March the regular-solution pair across the grid.

    p        : (3,) complex channel momenta
    w        : (n, 3, 3) coupling potential [a0^-2]
    wp       : (n, 3, 3) radial derivative of w (used when corrected)
    corrected: apply the Euler-Maclaurin endpoint correction to each
               trapezoid panel (predictor-corrector, fourth-order global);
               when False the panels are plain trapezoids (second order)
    phi_out, psi_out, m_out : (3, 3) complex outputs; the stabilized pair at
               the outermost point and the cumulative transform M, so that
               (phi_out, psi_out) = (Phi(L), Phi'(L)) @ M.
    record   : when True, phi_hist[k] receives the stabilized regular
               solution and scale_hist[k] the column transform applied right
               after grid point k (identity when none); rebase_history turns
               that into the final-frame solution Phi(x_k) @ M.
    """
    n = w.shape[0]
    cd = np.empty(3, dtype=np.complex128)
    sd = np.empty(3, dtype=np.complex128)
    p2 = np.empty(3, dtype=np.complex128)
    for i in range(3):
        z = p[i] * dx
        cd[i] = np.cos(z)
        if abs(z) < 1e-8:
            sd[i] = dx * (1.0 - z * z / 6.0)
        else:
            sd[i] = np.sin(z) / p[i]
        p2[i] = p[i] * p[i]

    phi = np.zeros((3, 3), dtype=np.complex128)
    psi = np.zeros((3, 3), dtype=np.complex128)
    mcum = np.zeros((3, 3), dtype=np.complex128)
    gmat = np.zeros((3, 3), dtype=np.complex128)
    for i in range(3):
        psi[i, i] = 1.0
        mcum[i, i] = 1.0

    f_cur = np.zeros((3, 3), dtype=np.complex128)
    fp_cur = np.zeros((3, 3), dtype=np.complex128)
    f_new = np.zeros((3, 3), dtype=np.complex128)
    fp_new = np.zeros((3, 3), dtype=np.complex128)
    phi_new = np.zeros((3, 3), dtype=np.complex128)
    psi_new = np.zeros((3, 3), dtype=np.complex128)
    half = 0.5 * dx
    c12 = dx * dx / 12.0

    if record:
        for i in range(3):
            for j in range(3):
                phi_hist[0, i, j] = 0.0
                scale_hist[0, i, j] = 1.0 if i == j else 0.0

    for k in range(n - 1):
        for i in range(3):
            for j in range(3):
                acc = 0.0 + 0.0j
                accp = 0.0 + 0.0j
                for m in range(3):
                    acc += w[k, i, m] * phi[m, j]
                    accp += wp[k, i, m] * phi[m, j] + w[k, i, m] * psi[m, j]
                f_cur[i, j] = acc
                fp_cur[i, j] = accp
        # predictor: plain trapezoid panels
        for i in range(3):
            for j in range(3):
                phi_new[i, j] = cd[i] * phi[i, j] + sd[i] * psi[i, j] + half * sd[i] * f_cur[i, j]
        for i in range(3):
            for j in range(3):
                acc = 0.0 + 0.0j
                for m in range(3):
                    acc += w[k + 1, i, m] * phi_new[m, j]
                f_new[i, j] = acc
        for i in range(3):
            for j in range(3):
                psi_new[i, j] = (
                    -p2[i] * sd[i] * phi[i, j]
                    + cd[i] * psi[i, j]
                    + half * (cd[i] * f_cur[i, j] + f_new[i, j])
                )
        if corrected:
            # corrector: - (dx^2/12) (g'(panel end) - g'(panel start)) with
            # g the kernel-weighted source of each panel
            for i in range(3):
                for j in range(3):
                    phi_new[i, j] += c12 * (f_new[i, j] - cd[i] * f_cur[i, j]
                                            + sd[i] * fp_cur[i, j])
            for i in range(3):
                for j in range(3):
                    acc = 0.0 + 0.0j
                    accp = 0.0 + 0.0j
                    for m in range(3):
                        acc += w[k + 1, i, m] * phi_new[m, j]
                        accp += wp[k + 1, i, m] * phi_new[m, j] + w[k + 1, i, m] * psi_new[m, j]
                    f_new[i, j] = acc
                    fp_new[i, j] = accp
            for i in range(3):
                for j in range(3):
                    psi_new[i, j] = (
                        -p2[i] * sd[i] * phi[i, j]
                        + cd[i] * psi[i, j]
                        + half * (cd[i] * f_cur[i, j] + f_new[i, j])
                        - c12 * (fp_new[i, j] - p2[i] * sd[i] * f_cur[i, j]
                                 - cd[i] * fp_cur[i, j])
                    )
        for i in range(3):
            for j in range(3):
                phi[i, j] = phi_new[i, j]
                psi[i, j] = psi_new[i, j]

        if record:
            for i in range(3):
                for j in range(3):
                    phi_hist[k + 1, i, j] = phi[i, j]
                    scale_hist[k + 1, i, j] = 1.0 if i == j else 0.0

        if (k + 1) % KSEP == 0 or k == n - 2:
            for i in range(3):
                for j in range(3):
                    gmat[i, j] = 1.0 if i == j else 0.0
            _separate_columns(phi, psi, mcum, gmat)
            if record:
                for i in range(3):
                    for j in range(3):
                        scale_hist[k + 1, i, j] = gmat[i, j]

    for i in range(3):
        for j in range(3):
            phi_out[i, j] = phi[i, j]
            psi_out[i, j] = psi[i, j]
            m_out[i, j] = mcum[i, j]


@njit(cache=True, fastmath=True)
def rebase_history(phi_hist, scale_hist):
    """Re-express the stored regular solution in the final frame, in place.

    phi_final(x_k) = phi_hist[k] @ scale_hist[k] @ scale_hist[k+1] @ ...,
    i.e. the true regular solution right-multiplied by the final cumulative
    transform M (entries lying below the double-precision floor underflow to
    zero; their contribution to any quadrature over the solution is
    negligible by the same factor).
    """
    n = phi_hist.shape[0]
    prod = np.zeros((3, 3), dtype=np.complex128)
    for i in range(3):
        prod[i, i] = 1.0
    tmp = np.empty((3, 3), dtype=np.complex128)
    for k in range(n - 1, -1, -1):
        for i in range(3):
            for j in range(3):
                acc = 0.0 + 0.0j
                for m in range(3):
                    acc += scale_hist[k, i, m] * prod[m, j]
                tmp[i, j] = acc
        for i in range(3):
            for j in range(3):
                prod[i, j] = tmp[i, j]
        for i in range(3):
            for j in range(3):
                acc = 0.0 + 0.0j
                for m in range(3):
                    acc += phi_hist[k, i, m] * prod[m, j]
                tmp[i, j] = acc
        for i in range(3):
            for j in range(3):
                phi_hist[k, i, j] = tmp[i, j]


@njit(cache=True, parallel=True, fastmath=True)
def volterra_scan(dx, p_all, w, wp, corrected, phi_all, psi_all, m_all):
    """volterra_march over a batch of energies (prange over the batch)."""
    n_e = p_all.shape[0]
    for e in prange(n_e):
        dummy_phi = np.zeros((1, 3, 3), dtype=np.complex128)
        dummy_scale = np.zeros((1, 3, 3), dtype=np.complex128)
        volterra_march(dx, p_all[e], w, wp, corrected,
                       phi_all[e], psi_all[e], m_all[e],
                       False, dummy_phi, dummy_scale)


@njit(cache=True, inline="always", fastmath=True)
def _inv3(a, out):
    """Inverse of a real 3x3 matrix via the adjugate."""
    c00 = a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1]
    c01 = a[1, 2] * a[2, 0] - a[1, 0] * a[2, 2]
    c02 = a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0]
    det = a[0, 0] * c00 + a[0, 1] * c01 + a[0, 2] * c02
    inv = 1.0 / det
    out[0, 0] = c00 * inv
    out[1, 0] = c01 * inv
    out[2, 0] = c02 * inv
    out[0, 1] = (a[0, 2] * a[2, 1] - a[0, 1] * a[2, 2]) * inv
    out[1, 1] = (a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0]) * inv
    out[2, 1] = (a[0, 1] * a[2, 0] - a[0, 0] * a[2, 1]) * inv
    out[0, 2] = (a[0, 1] * a[1, 2] - a[0, 2] * a[1, 1]) * inv
    out[1, 2] = (a[0, 2] * a[1, 0] - a[0, 0] * a[1, 2]) * inv
    out[2, 2] = (a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]) * inv


@njit(cache=True, fastmath=True)
def numerov_ratio(dx, q2s, w):
    """Renormalized-Numerov sweep; returns R = F(x_last) F(x_last-dx)^{-1}.

    q2s are the signed squared momenta (e - threshold)/A per channel; the
    recursion starts from the hard wall (solution zero at x = 0) and stays
    bounded because only ratio matrices propagate.
    """
    n = w.shape[0]
    fac = dx * dx / 12.0
    tn = np.empty((3, 3))
    b = np.empty((3, 3))
    binv = np.empty((3, 3))
    u = np.empty((3, 3))
    r_prev_inv = np.zeros((3, 3))
    r_cur = np.empty((3, 3))
    started = False
    for k in range(1, n - 1):
        for i in range(3):
            for j in range(3):
                tn[i, j] = fac * w[k, i, j]
            tn[i, i] -= fac * q2s[i]
        for i in range(3):
            for j in range(3):
                b[i, j] = -tn[i, j]
            b[i, i] += 1.0
        _inv3(b, binv)
        for i in range(3):
            for j in range(3):
                acc = 0.0
                for m in range(3):
                    t = 10.0 * tn[i, m]
                    if i == m:
                        t += 2.0
                    acc += t * binv[m, j]
                u[i, j] = acc
        if not started:
            for i in range(3):
                for j in range(3):
                    r_cur[i, j] = u[i, j]
            started = True
        else:
            for i in range(3):
                for j in range(3):
                    r_cur[i, j] = u[i, j] - r_prev_inv[i, j]
        if k < n - 2:
            _inv3(r_cur, r_prev_inv)
    return r_cur


@njit(cache=True, parallel=True, fastmath=True)
def numerov_scan(dx, q2s_all, w, r_all):
    n_e = q2s_all.shape[0]
    for e in prange(n_e):
        r_all[e] = numerov_ratio(dx, q2s_all[e], w)


def set_threads(n: int) -> None:
    limit = numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(min(max(1, int(n)), limit))
