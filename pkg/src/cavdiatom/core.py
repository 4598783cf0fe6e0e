"""Physical parameters, unit system and radial grid shared by all physics modules.

Internal units everywhere outside this module:
  energy  -> angular frequency [rad/s]
  length  -> Bohr radius a0
Quantities quoted in MHz/kHz (couplings, detunings, linewidths) are ordinary
frequencies and are multiplied by 2*pi on ingestion.  The atomic transition
frequency omega_A is stored at face value in 1/s; see the preset notes in the
README for the sensitivity of derived quantities to this convention.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, asdict

import yaml

TWO_PI = 2.0 * math.pi

# CODATA 2018
HBAR_SI = 1.054571817e-34        # J s
ATOMIC_MASS_KG = 1.66053906660e-27
BOHR_RADIUS_M = 5.29177210903e-11
BOHR_RADIUS_CM = BOHR_RADIUS_M * 1e2
SPEED_OF_LIGHT_M_S = 2.99792458e8
CS133_MASS_U = 132.905451961
CS133_MASS_KG = CS133_MASS_U * ATOMIC_MASS_KG


class ValidationError(ValueError):
    """A configuration or parameter check failed; message names the field."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (overflow, non-convergence, singularity)."""


def mhz_to_internal(value_mhz: float) -> float:
    """Ordinary frequency in MHz -> internal angular frequency [rad/s]."""
    return TWO_PI * 1e6 * value_mhz


def internal_to_mhz(value: float):
    """Internal angular frequency [rad/s] -> ordinary frequency in MHz."""
    return value / (TWO_PI * 1e6)


@dataclass(frozen=True)
class SystemParams:
    """Parameters of the two-atom/one-mode model, in internal units.

    omega_A, omega_B : atomic transition angular frequencies [rad/s]
    omega_c          : cavity mode angular frequency [rad/s]
    kappa_A, kappa_B : atom-cavity coupling strengths [rad/s]
    C3               : resonant dipole-dipole coefficient [rad/s a0^3]
    mu               : reduced mass [kg]
    gamma_c          : cavity linewidth [rad/s]
    l                : partial wave (0 for all shipped work)
    """

    omega_A: float
    omega_B: float
    omega_c: float
    kappa_A: float
    kappa_B: float
    C3: float
    mu: float
    gamma_c: float
    l: int = 0

    def __post_init__(self):
        for name in ("omega_A", "omega_B", "omega_c"):
            if getattr(self, name) <= 0.0:
                raise ValidationError(f"{name} must be positive, got {getattr(self, name)!r}")
        for name in ("kappa_A", "kappa_B", "C3", "gamma_c"):
            if getattr(self, name) < 0.0:
                raise ValidationError(f"{name} must be non-negative, got {getattr(self, name)!r}")
        if self.mu <= 0.0:
            raise ValidationError(f"mu must be positive, got {self.mu!r}")
        if self.l < 0:
            raise ValidationError(f"l must be non-negative, got {self.l!r}")
        if abs(self.omega_A - self.omega_B) > 1e-3 * self.omega_A:
            raise ValidationError(
                "omega_B must be nearly resonant with omega_A "
                f"(|omega_A-omega_B| = {abs(self.omega_A - self.omega_B):.3e} rad/s)"
            )

    @property
    def detuning(self) -> float:
        """Cavity-atom detuning omega_c - omega_A [rad/s]."""
        return self.omega_c - self.omega_A

    def replace(self, **changes) -> "SystemParams":
        fields = asdict(self)
        fields.update(changes)
        return SystemParams(**fields)


@dataclass(frozen=True)
class RadialGrid:
    """Uniform radial grid [r_wall, r_infinity] in a0."""

    r_wall: float = 200.0
    r_infinity: float = 20000.0
    n_points: int = 262145

    def __post_init__(self):
        if self.r_wall <= 0.0:
            raise ValidationError(f"r_wall must be positive, got {self.r_wall!r}")
        if self.r_infinity <= self.r_wall:
            raise ValidationError(
                f"r_infinity must exceed r_wall, got {self.r_infinity!r} <= {self.r_wall!r}"
            )
        if self.n_points < 2:
            raise ValidationError(f"n_points must be at least 2, got {self.n_points!r}")

    @property
    def spacing(self) -> float:
        return (self.r_infinity - self.r_wall) / (self.n_points - 1)

    def points(self):
        import numpy as np

        return np.linspace(self.r_wall, self.r_infinity, self.n_points)

    def check_flatness(self, params: SystemParams, tol: float | None = None) -> None:
        """Require the dipole-dipole tail to be flat at r_infinity.

        tol is an angular-frequency scale [rad/s]; both the residual C3/R^3
        and the per-step potential change must sit below it.  The default is
        1e-3 of the coupling/detuning structure scale.
        """
        if tol is None:
            tol = 1e-3 * max(params.kappa_A + params.kappa_B,
                             abs(params.omega_c - params.omega_A))
        tail = params.C3 / self.r_infinity**3
        slope_step = 3.0 * tail / self.r_infinity * self.spacing
        if tail > tol or slope_step > tol:
            raise ValidationError(
                f"r_infinity={self.r_infinity} is not in the flat region: "
                f"C3/R^3 = {tail:.3e} rad/s exceeds tol = {tol:.3e} rad/s"
            )


def kinetic_constant(params: SystemParams) -> float:
    """hbar/(2 mu a0^2) in internal angular-frequency units [rad/s].

    This is the prefactor of -d^2/dR^2 (R in a0) in the radial equation once
    energies are expressed as angular frequencies.
    """
    if params.mu <= 0.0:
        raise ValidationError(f"mu must be positive, got {params.mu!r}")
    return HBAR_SI / (2.0 * params.mu * BOHR_RADIUS_M**2)


# Dipole-dipole coefficients calibrated with adiabatic.calibrate_C3 (values
# frozen from those runs): the optical well minimum sits at R_c = 2000 a0,
# the Rydberg one at R_c = 6000 a0 (larger Rydberg dipoles; also keeps
# several resolvable quasibound levels in the one-open-channel window).
C3_CS_OPTICAL = 6.00069184643436e18    # rad/s a0^3
C3_CS_RYDBERG = 2.028932810514994e17   # rad/s a0^3

_PRESETS = {
    # Cs 6S-6P3/2 pair sharing an optical photon; strong-coupling optical cavity.
    "cs-optical": dict(
        omega_A=3.5172e14,
        omega_B=3.5172e14,
        omega_c=3.5172e14 + mhz_to_internal(1.0),
        kappa_A=mhz_to_internal(120.0),
        kappa_B=0.8 * mhz_to_internal(120.0),
        C3=C3_CS_OPTICAL,
        mu=CS133_MASS_KG / 2.0,
        gamma_c=mhz_to_internal(40.0),
        l=0,
    ),
    # Cs Rydberg pair sharing a microwave photon; high-Q microwave cavity.
    "cs-rydberg": dict(
        omega_A=TWO_PI * 600e9,
        omega_B=TWO_PI * 600e9,
        omega_c=TWO_PI * 600e9 + mhz_to_internal(1.0e-3),
        kappa_A=mhz_to_internal(0.150),
        kappa_B=0.99 * mhz_to_internal(0.150),
        C3=C3_CS_RYDBERG,
        mu=CS133_MASS_KG / 2.0,
        gamma_c=mhz_to_internal(2.0e-3),
        l=0,
    ),
}

DEFAULT_GRID = RadialGrid()

_PRESET_GRIDS = {
    "cs-optical": RadialGrid(r_wall=200.0, r_infinity=20000.0, n_points=262145),
    # the Rydberg crossing sits at 6000 a0, so the flat region starts farther out
    "cs-rydberg": RadialGrid(r_wall=200.0, r_infinity=60000.0, n_points=262145),
}


def preset_grid(name: str) -> RadialGrid:
    """Default radial grid for a shipped preset."""
    if name not in _PRESET_GRIDS:
        raise ValidationError(f"preset must be one of {preset_names()}, got {name!r}")
    return _PRESET_GRIDS[name]

_PARAM_FIELDS = ("omega_A", "omega_B", "omega_c", "kappa_A", "kappa_B",
                 "C3", "mu", "gamma_c", "l")
_GRID_FIELDS = ("r_wall", "r_infinity", "n_points")


def preset_names():
    return sorted(_PRESETS)


def load_params(config) -> SystemParams:
    """Build validated SystemParams from a preset name or a config mapping.

    Accepts a preset name, or a mapping with either a top-level ``preset`` key
    plus overrides in a ``params`` section, or a full ``params`` section with
    every field in internal units.
    """
    if isinstance(config, str):
        config = {"preset": config}
    if not isinstance(config, dict):
        raise ValidationError(f"config must be a preset name or mapping, got {type(config)!r}")

    fields: dict = {}
    preset = config.get("preset")
    if preset is not None:
        if preset not in _PRESETS:
            raise ValidationError(f"preset must be one of {preset_names()}, got {preset!r}")
        fields.update(_PRESETS[preset])

    overrides = config.get("params", {})
    unknown = set(overrides) - set(_PARAM_FIELDS)
    if unknown:
        raise ValidationError(f"unknown params keys: {sorted(unknown)}")
    fields.update(overrides)

    missing = [name for name in _PARAM_FIELDS if name != "l" and name not in fields]
    if missing:
        raise ValidationError(f"missing parameter: {missing[0]}")
    return SystemParams(**fields)


def load_grid(config) -> RadialGrid:
    """Build a RadialGrid from the ``grid`` section of a config mapping."""
    if isinstance(config, str):
        config = {}
    section = config.get("grid", {})
    unknown = set(section) - set(_GRID_FIELDS)
    if unknown:
        raise ValidationError(f"unknown grid keys: {sorted(unknown)}")
    kwargs = {k: section[k] for k in _GRID_FIELDS if k in section}
    if "n_points" in kwargs:
        kwargs["n_points"] = int(kwargs["n_points"])
    return RadialGrid(**kwargs)


def read_config(path) -> dict:
    """Read a YAML config file (sections: preset, params, grid, run)."""
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ValidationError(f"config file {path} must contain a mapping")
    return data


def write_config(path, params: SystemParams, grid: RadialGrid | None = None,
                 preset: str | None = None) -> None:
    """Serialize params (and optionally grid) to YAML; round-trips exactly."""
    doc: dict = {}
    if preset is not None:
        doc["preset"] = preset
    doc["params"] = asdict(params)
    if grid is not None:
        doc["grid"] = {k: getattr(grid, k) for k in _GRID_FIELDS}
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=True)


def config_fingerprint(config: dict) -> str:
    """Stable hash of a config mapping, for run manifests."""
    import hashlib
    import json

    canon = json.dumps(config, sort_keys=True, separators=(",", ":"), default=repr)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def preset_config(name: str) -> dict:
    if name not in _PRESETS:
        raise ValidationError(f"preset must be one of {preset_names()}, got {name!r}")
    return {"preset": name, "params": copy.deepcopy(_PRESETS[name])}
