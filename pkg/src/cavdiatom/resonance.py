"""Quasibound resonances and true bound states of the coupled-channel problem.

Resonances appear twice: as Lorentzian peaks of the sigma_11 energy scan and
as complex zeros of the Jost pole function continued below the real axis;
true bound states are real zeros below the lowest threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize
import scipy.signal

from .core import RadialGrid, SystemParams, NumericalError, ValidationError, kinetic_constant
from .nonadiabatic import tables_for
from . import scattering


@dataclass(frozen=True)
class Resonance:
    """A quasibound state: center e_r, width gamma_r [rad/s, absolute frame].

    kind is 'peak-fit' (Lorentzian fit of a sigma scan), 'complex-pole'
    (converged zero of the Jost pole function, pole = e_r - i gamma_r/2) or
    'unfitted'/'unconverged' for detections that failed refinement.
    """

    e_r: float
    gamma_r: float
    kind: str
    pole: complex | None = None


@dataclass(frozen=True)
class BoundState:
    """Real pole below the lowest threshold [rad/s, absolute frame]."""

    e_b: float


def _lorentz_linear(e, center, gamma, area, slope, offset):
    hwhm = 0.5 * gamma
    return area * hwhm / np.pi / ((e - center) ** 2 + hwhm**2) + slope * e + offset


def fit_peak(energies, sigma, center_guess, gamma_guess):
    """Lorentzian-plus-linear-background fit around one peak.

    Returns (center, fwhm) or raises NumericalError when the fit fails.
    """
    energies = np.asarray(energies, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    scale = energies[-1] - energies[0]
    e0 = energies[0]
    x = energies - e0
    c0 = center_guess - e0
    peak_height = np.interp(c0, x, sigma)
    p0 = (c0, gamma_guess, peak_height * np.pi * 0.5 * gamma_guess,
          0.0, float(np.min(sigma)))
    try:
        popt, _ = scipy.optimize.curve_fit(
            _lorentz_linear, x, sigma, p0=p0,
            bounds=([0.0, gamma_guess * 1e-3, 0.0, -np.inf, -np.inf],
                    [scale, scale, np.inf, np.inf, np.inf]),
            maxfev=20000,
        )
    except (RuntimeError, ValueError) as exc:
        raise NumericalError(f"peak fit failed near {center_guess!r}: {exc}") from exc
    return float(popt[0] + e0), float(abs(popt[1]))


def scan_and_fit(energies, sigma, prominence_mads: float = 3.0,
                 max_peaks: int | None = None) -> list[Resonance]:
    """Detect local maxima above the background noise floor and fit them.

    The prominence threshold is prominence_mads times the median absolute
    deviation of the scan, a robust floor against the slowly varying
    potential background.  Non-converging fits are kept with kind
    'unfitted' and the discrete peak location.
    """
    energies = np.asarray(energies, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if energies.size < 5:
        return []
    mad = np.median(np.abs(sigma - np.median(sigma)))
    floor = prominence_mads * mad
    if floor <= 0.0:
        floor = 1e-12 * np.max(sigma) if np.max(sigma) > 0 else 1.0
    peaks, props = scipy.signal.find_peaks(sigma, prominence=floor)
    if peaks.size == 0:
        return []
    order = np.argsort(props["prominences"])[::-1]
    if max_peaks is not None:
        order = order[:max_peaks]
    de = energies[1] - energies[0]
    out = []
    for idx in sorted(peaks[order]):
        # half-prominence width estimate seeds the fit window
        res_w = scipy.signal.peak_widths(sigma, [idx], rel_height=0.5)
        gamma_guess = max(float(res_w[0][0]) * de, 0.5 * de)
        half_window = max(int(4 * gamma_guess / de), 5)
        lo = max(idx - half_window, 0)
        hi = min(idx + half_window + 1, energies.size)
        try:
            center, fwhm = fit_peak(energies[lo:hi], sigma[lo:hi],
                                    energies[idx], gamma_guess)
            out.append(Resonance(e_r=center, gamma_r=fwhm, kind="peak-fit"))
        except NumericalError:
            out.append(Resonance(e_r=float(energies[idx]),
                                 gamma_r=gamma_guess, kind="unfitted"))
    return out


def _default_tables(params: SystemParams, grid: RadialGrid):
    curves, tabs = tables_for(params, grid)
    return curves, tabs.w


def scan_det_closed(energies, curves, w, grid: RadialGrid) -> np.ndarray:
    """Real closed-block determinant over a batch of energies (batched march)."""
    energies = np.asarray(energies, dtype=float)
    contexts = [scattering.make_channels(e, curves) for e in energies]
    p_all = np.array([ch.p for ch in contexts])
    n_e = energies.size
    phi_all = np.empty((n_e, 3, 3), dtype=complex)
    psi_all = np.empty((n_e, 3, 3), dtype=complex)
    m_all = np.empty((n_e, 3, 3), dtype=complex)
    from . import _kernels
    wc = np.ascontiguousarray(w)
    _kernels.volterra_scan(grid.spacing, p_all, wc,
                           scattering.source_derivative(wc, grid), True,
                           phi_all, psi_all, m_all)
    out = np.empty(n_e)
    for k, ch in enumerate(contexts):
        jm = scattering._jost_from_pair(ch, grid, phi_all[k], psi_all[k], m_all[k])
        out[k] = jm.det_closed()
    return out


def closed_channel_levels(params: SystemParams, grid: RadialGrid,
                          e_window=None, n_scan: int = 1200,
                          tables=None) -> np.ndarray:
    """Quasibound levels of the closed-channel subsystem, to seed pole finding.

    Sign changes of the real closed-block determinant are bracketed on a
    uniform scan of the one-open-channel window and bisected; each zero sits
    within a width-scale distance of a true S-matrix pole, however narrow.
    Returns absolute energies [rad/s], ascending.
    """
    curves, w = tables if tables is not None else _default_tables(params, grid)
    th = curves.thresholds
    if e_window is None:
        e_window = (th[0] + 1e-4 * (th[1] - th[0]), th[1] - 1e-6 * (th[1] - th[0]))
    es = np.linspace(e_window[0], e_window[1], n_scan)
    vals = scan_det_closed(es, curves, w, grid)

    def det_c(e):
        ch = scattering.make_channels(e, curves)
        return scattering.jost_fused(ch, w, grid).det_closed()

    xtol = max(1e-6 * (e_window[1] - e_window[0]), 1e-12 * abs(th[1]))
    roots = []
    for k in range(n_scan - 1):
        if vals[k] == 0.0:
            roots.append(float(es[k]))
        elif vals[k] * vals[k + 1] < 0.0:
            roots.append(float(scipy.optimize.brentq(det_c, es[k], es[k + 1],
                                                     xtol=xtol)))
    return np.asarray(roots)


def find_poles(params: SystemParams, grid: RadialGrid, seeds,
               bracket: float | None = None,
               tol_rel: float = 1e-8, max_iter: int = 40,
               tables=None) -> list[Resonance]:
    """Locate complex zeros of the Jost determinant near real seeds.

    Stage one pins each seed to the nearby real zero of the closed-block
    determinant (exact bracketing bisection, robust at any resonance width);
    stage two runs a complex secant on the full determinant with the
    equilibration scales frozen at the seed, so the iterated function stays
    analytic.  Non-converging seeds are reported with kind 'unconverged'.
    """
    curves, w = tables if tables is not None else _default_tables(params, grid)
    if len(seeds) == 0:
        return []
    seeds = np.sort(np.asarray(seeds, dtype=float))
    th = curves.thresholds
    window = th[1] - th[0]

    def jost_at(z):
        ch = scattering.make_channels(z, curves)
        return scattering.jost_fused(ch, w, grid)

    out = []
    for i, seed in enumerate(seeds):
        gaps = []
        if i > 0:
            gaps.append(seed - seeds[i - 1])
        if i + 1 < seeds.size:
            gaps.append(seeds[i + 1] - seed)
        local = min(gaps) if gaps else 0.05 * window
        half = bracket if bracket is not None else 0.35 * local
        lo = max(seed - half, th[0] + 1e-9 * window)
        hi = min(seed + half, th[1] - 1e-9 * window)
        try:
            e_star = _pin_seed(jost_at, seed, lo, hi, window)
            jm0 = jost_at(e_star)
            row_s, col_s = jm0.equilibration_scales()

            def f_at(z):
                return jost_at(z).det_scaled(row_s, col_s)

            f0 = jm0.det_scaled(row_s, col_s)
            h = max(1e-9 * window, 1e-13 * abs(e_star))
            fprime = (f_at(e_star + h) - f_at(e_star - h)) / (2.0 * h)
        except (NumericalError, ValidationError):
            out.append(Resonance(e_r=float(seed), gamma_r=0.0, kind="unconverged"))
            continue
        if abs(fprime) == 0.0:
            out.append(Resonance(e_r=float(seed), gamma_r=0.0, kind="unconverged"))
            continue
        gamma_est = 2.0 * abs(f0) / abs(fprime)
        scale = abs(f0) + abs(fprime) * max(gamma_est, h)
        f_init = abs(f0)
        # start shallow: the first secant step is then Newton-like and lands
        # on the nearby narrow zero instead of diving toward broad ones
        z0 = complex(e_star)
        z1 = complex(e_star, -h)
        f1 = None
        converged = False
        try:
            f1 = f_at(z1)
            for _ in range(max_iter):
                if f1 == f0:
                    break
                step = -f1 * (z1 - z0) / (f1 - f0)
                if abs(step) > 0.5 * half:
                    step *= 0.5 * half / abs(step)
                z2 = z1 + step
                z0, f0 = z1, f1
                z1 = z2
                f1 = f_at(z1)
                # converged when the iterate stalls on its own width scale
                # and the determinant has genuinely collapsed; the absolute
                # floor of |f| is set by roundoff, not by tol_rel alone
                stalled = abs(step) < 1e-3 * max(abs(np.imag(z1)), 0.1 * h)
                if stalled and abs(f1) < max(tol_rel * scale, 1e-3 * f_init) \
                        and np.imag(z1) < 0.0:
                    converged = True
                    break
        except (NumericalError, ValidationError):
            converged = False
        keep = (converged
                and abs(np.real(z1) - e_star) < 0.6 * half
                and 0.0 < -np.imag(z1) < half)
        if keep:
            out.append(Resonance(e_r=float(np.real(z1)),
                                 gamma_r=float(-2.0 * np.imag(z1)),
                                 kind="complex-pole", pole=complex(z1)))
        else:
            out.append(Resonance(e_r=float(seed), gamma_r=0.0, kind="unconverged"))
    return _dedupe_poles(out)


def _dedupe_poles(poles: list[Resonance]) -> list[Resonance]:
    """Drop repeated converged poles (neighbouring seeds can share a zero)."""
    out: list[Resonance] = []
    for res in poles:
        if res.kind == "complex-pole":
            dup = any(
                other.kind == "complex-pole"
                and abs(other.e_r - res.e_r) < 0.5 * (other.gamma_r + res.gamma_r) + 1e-12 * abs(res.e_r)
                for other in out
            )
            if dup:
                continue
        out.append(res)
    return out


def _pin_seed(jost_at, seed, lo, hi, window) -> float:
    """Real zero of the closed-block determinant nearest to the seed."""
    def det_c(e):
        return jost_at(e).det_closed()

    n_probe = 13
    es = np.linspace(lo, hi, n_probe)
    vals = np.array([det_c(e) for e in es])
    flips = np.flatnonzero(vals[:-1] * vals[1:] < 0.0)
    if flips.size == 0:
        # no closed-channel zero in the bracket: fall back to the seed itself
        return float(seed)
    centers = 0.5 * (es[flips] + es[flips + 1])
    k = int(flips[np.argmin(np.abs(centers - seed))])
    xtol = max(1e-7 * (hi - lo), 1e-13 * abs(seed))
    return float(scipy.optimize.brentq(det_c, es[k], es[k + 1], xtol=xtol))


def quasibound_seeds(params: SystemParams, grid: RadialGrid,
                     e_window=None) -> np.ndarray:
    """Level seeds from the single-channel spectrum of the W_22 diagonal.

    The diagonal of the transformed coupling matrix follows the diabatic
    binding potential through the crossing; its isolated-channel levels land
    within a fraction of a spacing of the true resonances, close enough for
    secant refinement.  Returns absolute energies [rad/s].
    """
    curves, w = _default_tables(params, grid)
    a_kin = kinetic_constant(params)
    th2 = curves.thresholds[1]
    w22 = w[:, 1, 1]
    if e_window is None:
        # resonance territory: above the lowest threshold, below channel 2
        e_window = (curves.thresholds[0] + 1e-6 * (th2 - curves.thresholds[0]), th2)
    lo = (e_window[0] - th2) / a_kin
    hi = (e_window[1] - th2) / a_kin

    k_max = float(np.sqrt(np.max(np.maximum(-w22, 1e-30))))
    dx = grid.spacing
    decim = max(1, int(0.15 / (k_max * dx)))
    w_d = w22[::decim]
    h = dx * decim
    n = w_d.size

    from scipy.linalg import eigh_tridiagonal

    diag = 2.0 / h**2 + w_d[1:-1]
    off = np.full(n - 3, -1.0 / h**2)
    vals = eigh_tridiagonal(diag, off, select="v",
                            select_range=(lo, min(hi, 0.0) - 1e-30),
                            eigvals_only=True)
    return th2 + a_kin * vals


def find_bound_states(params: SystemParams, grid: RadialGrid,
                      e_window, n_scan: int = 400,
                      tables=None) -> list[BoundState]:
    """Real-axis sign-change scan of the Jost determinant, with bisection.

    e_window is (e_lo, e_hi) [rad/s absolute], both below the lowest
    threshold; an empty list is a valid outcome.
    """
    curves, w = tables if tables is not None else _default_tables(params, grid)
    e_lo, e_hi = float(e_window[0]), float(e_window[1])
    th_low = curves.thresholds[0]
    if e_hi >= th_low:
        raise ValidationError("bound-state window must lie below the lowest threshold")

    def det_real(e):
        val = scattering.det_jost(e, curves, w, grid)
        return float(np.real(val))

    es = np.linspace(e_lo, e_hi, n_scan)
    vals = np.array([det_real(e) for e in es])
    out = []
    for k in range(n_scan - 1):
        if vals[k] == 0.0:
            out.append(BoundState(e_b=float(es[k])))
        elif vals[k] * vals[k + 1] < 0.0:
            root = scipy.optimize.brentq(det_real, es[k], es[k + 1],
                                         xtol=1e-12 * max(abs(e_lo), 1.0))
            out.append(BoundState(e_b=float(root)))
    return out


def pair_poles_with_peaks(poles: list[Resonance], peaks: list[Resonance],
                          max_distance: float) -> list[tuple[Resonance, Resonance]]:
    """Greedy nearest-center pairing of converged poles with fitted peaks."""
    pairs = []
    used = set()
    for pole in poles:
        if pole.kind != "complex-pole":
            continue
        best, best_d = None, max_distance
        for i, pk in enumerate(peaks):
            if i in used or pk.kind != "peak-fit":
                continue
            d = abs(pk.e_r - pole.e_r)
            if d < best_d:
                best, best_d = i, d
        if best is not None:
            used.add(best)
            pairs.append((pole, peaks[best]))
    return pairs
