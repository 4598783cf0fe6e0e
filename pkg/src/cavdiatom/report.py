"""Delimited output and figure rendering for the command-line pipelines.

CSV files are written with 17-significant-digit formatting and LF line
endings so reruns are bit-identical and values round-trip exactly; figures
are rendered headlessly at fixed size and resolution next to the data they
display.
"""

from __future__ import annotations

import json
import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .core import ValidationError, internal_to_mhz

FIG_DPI = 150
FIG_SIZE = (7.0, 4.6)


def format_value(x) -> str:
    return f"{float(x):.17g}"


def emit_csv(path, header: list[str], columns: list[np.ndarray]) -> None:
    """Write columns as CSV; refuses NaN, keeps byte-stable formatting."""
    if len(columns) != len(header):
        raise ValidationError(
            f"header has {len(header)} names but table has {len(columns)} columns"
        )
    cols = [np.atleast_1d(np.asarray(c, dtype=float)) for c in columns]
    if cols and any(c.shape != cols[0].shape for c in cols):
        raise ValidationError("CSV columns must share one length")
    for name, col in zip(header, cols):
        if np.any(~np.isfinite(col)):
            raise ValidationError(f"refusing to write non-finite values in column {name!r}")
    n_rows = cols[0].size if cols else 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(n_rows):
            fh.write(",".join(format_value(c[k]) for c in cols) + "\n")


def read_csv(path):
    """Read back an emit_csv file: (header list, dict of column arrays)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        return header, {name: np.array([]) for name in header}
    return header, {name: data[:, i] for i, name in enumerate(header)}


def write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _new_axes(title, xlabel, ylabel):
    fig, ax = plt.subplots(figsize=FIG_SIZE, dpi=FIG_DPI)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return fig, ax


def _save(fig, path):
    if len(fig.axes) <= 1:
        fig.tight_layout()
    fig.savefig(path, dpi=FIG_DPI)
    plt.close(fig)


def figure_curves(path, r, omega_rel_mhz, r_c=None) -> None:
    """Dressed potentials versus separation, with a zoom on the binding well."""
    fig, ax = _new_axes("Adiabatic dressed potentials", "R [a0]", "omega - omega_A [MHz]")
    for i, style in enumerate(("C0-", "C1-", "C2-")):
        ax.plot(r, omega_rel_mhz[i], style, label=f"omega_{i + 1}")
    span = np.abs(omega_rel_mhz[1]).max() * 3.0
    ax.set_ylim(-span, span)
    ax.legend(loc="upper right")
    if r_c is not None:
        inset = fig.add_axes([0.58, 0.2, 0.3, 0.3])
        sel = (r > 0.3 * r_c) & (r < 3.0 * r_c)
        inset.plot(r[sel], omega_rel_mhz[1][sel], "C1-")
        inset.axvline(r_c, color="k", lw=0.6, ls=":")
        inset.set_title("omega_2 well", fontsize=8)
        inset.tick_params(labelsize=7)
    _save(fig, path)


def figure_sweep_kappa(path, kappa_mhz, depth_mhz, r_c) -> None:
    fig, ax = _new_axes("Well depth versus coupling", "kappa_A [MHz]", "depth [MHz]")
    ax.loglog(kappa_mhz, depth_mhz, "C0o-")
    ax2 = ax.twinx()
    ax2.loglog(kappa_mhz, r_c, "C3s--")
    ax2.set_ylabel("R_c [a0]")
    _save(fig, path)


def figure_sweep_detuning(path, detuning_mhz, min_mhz) -> None:
    fig, ax = _new_axes("Well minimum versus cavity detuning",
                        "omega_c - omega_A [MHz]", "min omega_2 - omega_A [MHz]")
    ax.plot(detuning_mhz, min_mhz, "C0o-")
    ax.axvline(0.0, color="k", lw=0.6, ls=":")
    _save(fig, path)


def figure_scatter(path, e_mhz, sigma, sigma_lossy=None, loss_mhz=None) -> None:
    fig, ax = _new_axes("s-wave cross section", "E above lowest threshold [MHz]",
                        "sigma_11 [cm^2]")
    ax.semilogy(e_mhz, sigma, "C0-", lw=0.8, label="lossless")
    if sigma_lossy is not None:
        label = f"Gamma_c = {loss_mhz:g} MHz" if loss_mhz else "with loss"
        ax.semilogy(e_mhz, sigma_lossy, "C3--", lw=1.0, label=label)
    ax.legend(loc="upper right")
    _save(fig, path)


def figure_resonances(path, centers_mhz, widths_mhz) -> None:
    fig, ax = _new_axes("Quasibound resonances", "E above lowest threshold [MHz]",
                        "Gamma_R [MHz]")
    if len(centers_mhz):
        ax.set_yscale("log")
        ax.stem(centers_mhz, np.maximum(widths_mhz, 1e-12))
    _save(fig, path)


def figure_levels(path, theta, e_v_mhz, sym_label) -> None:
    fig, ax = _new_axes(f"Vibrational levels ({sym_label})",
                        "theta [rad]", "e_v below threshold [MHz]")
    ax.plot(theta, e_v_mhz, "C0.", ms=2.5)
    _save(fig, path)


def figure_spectrum(path, omega_mhz, i_sigma, i_pi) -> None:
    fig, ax = _new_axes("Fluorescence spectrum", "omega - omega_A [MHz]",
                        "intensity [arb.]")
    ax.plot(omega_mhz, i_sigma, "C0-", label="Sigma")
    ax.plot(omega_mhz, i_pi, "C3--", label="Pi")
    ax.legend(loc="upper left")
    _save(fig, path)


def mhz(values) -> np.ndarray:
    return np.asarray(internal_to_mhz(np.asarray(values, dtype=float)))


def momentum_cgs_1e22(p_a0):
    """hbar P in units of 1e-22 g cm/s from momenta in 1/a0."""
    from .core import BOHR_RADIUS_CM, HBAR_SI

    hbar_cgs = HBAR_SI * 1e7  # erg s
    return np.asarray(p_a0, dtype=float) / BOHR_RADIUS_CM * hbar_cgs / 1e-22
