import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cavdiatom import core
from cavdiatom.core import (
    RadialGrid,
    SystemParams,
    ValidationError,
    internal_to_mhz,
    kinetic_constant,
    load_params,
    mhz_to_internal,
)

TWO_PI = 2.0 * math.pi

# independent hand calculation from CODATA constants
HBAR = 1.054571817e-34
M_CS = 132.905451961 * 1.66053906660e-27
A0 = 5.29177210903e-11
KINETIC_CS = HBAR / (M_CS * A0**2)          # mu = m_Cs/2
assert abs(KINETIC_CS - 1.7064045512273e11) < 1e-2 * 1e11 * 1e-4


def test_preset_cs_optical_matches_quoted_parameters():
    p = load_params("cs-optical")
    assert p.omega_A == 3.5172e14
    assert p.omega_B == p.omega_A
    # absolute-frequency storage limits detuning resolution to ~ULP(omega_A)
    assert p.omega_c - p.omega_A == pytest.approx(TWO_PI * 1e6, abs=0.1)
    assert p.kappa_A == pytest.approx(TWO_PI * 120e6, rel=1e-12)
    assert p.kappa_B == pytest.approx(0.8 * p.kappa_A, rel=1e-12)
    assert p.mu == pytest.approx(M_CS / 2.0, rel=1e-9)
    assert p.l == 0


def test_preset_cs_rydberg_matches_quoted_parameters():
    p = load_params("cs-rydberg")
    assert p.omega_A == pytest.approx(TWO_PI * 600e9, rel=1e-12)
    assert p.omega_c - p.omega_A == pytest.approx(TWO_PI * 1e3, abs=0.01)
    assert p.kappa_A == pytest.approx(TWO_PI * 150e3, rel=1e-12)
    assert p.kappa_B == pytest.approx(0.99 * p.kappa_A, rel=1e-12)
    assert p.gamma_c == pytest.approx(TWO_PI * 2e3, rel=1e-12)


def test_negative_coupling_is_rejected_with_field_name():
    with pytest.raises(ValidationError, match="kappa_A"):
        load_params({"preset": "cs-optical", "params": {"kappa_A": -1.0}})


def test_missing_parameter_is_rejected_with_field_name():
    with pytest.raises(ValidationError, match="omega_c"):
        load_params({"params": {"omega_A": 1.0, "omega_B": 1.0}})


def test_unknown_keys_are_rejected():
    with pytest.raises(ValidationError, match="unknown"):
        load_params({"preset": "cs-optical", "params": {"bogus": 1.0}})
    with pytest.raises(ValidationError, match="preset"):
        load_params("no-such-preset")


def test_kinetic_constant_matches_hand_calculation():
    p = load_params("cs-optical")
    assert kinetic_constant(p) == pytest.approx(KINETIC_CS, rel=1e-12)


def test_kinetic_constant_inverse_in_reduced_mass():
    p = load_params("cs-optical")
    doubled = p.replace(mu=2.0 * p.mu)
    assert kinetic_constant(doubled) == pytest.approx(0.5 * kinetic_constant(p), rel=1e-12)


def test_kinetic_constant_identity_case():
    p = load_params("cs-optical").replace(mu=HBAR / (2.0 * A0**2))
    assert kinetic_constant(p) == pytest.approx(1.0, rel=1e-12)


@given(st.floats(min_value=1e-6, max_value=1e9, allow_nan=False))
def test_mhz_round_trip(value):
    assert internal_to_mhz(mhz_to_internal(value)) == pytest.approx(value, rel=1e-12)


def test_grid_validation():
    with pytest.raises(ValidationError, match="r_wall"):
        RadialGrid(r_wall=-1.0)
    with pytest.raises(ValidationError, match="r_infinity"):
        RadialGrid(r_wall=100.0, r_infinity=50.0)
    with pytest.raises(ValidationError, match="n_points"):
        RadialGrid(n_points=1)
    g = RadialGrid(r_wall=200.0, r_infinity=20000.0, n_points=262145)
    assert g.spacing == pytest.approx((20000.0 - 200.0) / 262144)
    assert g.points()[0] == 200.0 and g.points()[-1] == 20000.0


def test_flatness_check_fires_for_short_grid(cs_optical):
    short = RadialGrid(r_wall=200.0, r_infinity=2000.0, n_points=513)
    with pytest.raises(ValidationError, match="flat"):
        short.check_flatness(cs_optical)
    core.preset_grid("cs-optical").check_flatness(cs_optical)
    core.preset_grid("cs-rydberg").check_flatness(core.load_params("cs-rydberg"))


def test_config_round_trip_bitwise(tmp_path, cs_optical):
    path = tmp_path / "params.yaml"
    grid = core.preset_grid("cs-optical")
    core.write_config(path, cs_optical, grid=grid, preset="cs-optical")
    loaded = load_params(core.read_config(path))
    assert loaded == cs_optical
    assert core.load_grid(core.read_config(path)) == grid


def test_config_fingerprint_is_stable():
    cfg = core.preset_config("cs-optical")
    assert core.config_fingerprint(cfg) == core.config_fingerprint(
        core.preset_config("cs-optical"))
    assert core.config_fingerprint(cfg) != core.config_fingerprint(
        core.preset_config("cs-rydberg"))


def test_params_are_immutable(cs_optical):
    with pytest.raises(Exception):
        cs_optical.omega_A = 1.0


def test_detuning_sign_convention():
    p = load_params("cs-optical")
    assert p.detuning > 0.0
    red = p.replace(omega_c=p.omega_A - mhz_to_internal(3.0))
    assert red.detuning == pytest.approx(-mhz_to_internal(3.0), abs=0.1)
