import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noiseflux import fields
from noiseflux.errors import ConfigError, DomainError, QuadratureError, RangeError
from noiseflux.fields import (ConstantField, FemtoPulse, TabulatedField, UnitSystem, ZeroField,
                              convert, make_field, simpson)

# Reference values from mpmath.quad at 30 digits for the pulse
# E(t) = E0 * exp(-5 (w t / 2 pi - 1)^4) * sin(w t), E0 = 0.1, w = 0.114
FEMTO_F_55116 = -1.2540426992095442
FEMTO_F_PERIOD = -1.2540426998661821
FEMTO_PHI_100 = -13.7454327987187
PERIOD = 2 * math.pi / 0.114


def test_field_values():
    assert fields.field_at(ConstantField(0.3), 12.5) == 0.3
    femto = FemtoPulse(0.1, 0.114)
    assert femto.field_at(0.0) == 0.0
    assert abs(femto.field_at(PERIOD)) < 1e-15
    assert femto.period == pytest.approx(55.116, abs=1e-3)


def test_zero_and_constant_integrals():
    assert fields.momentum_gain(ZeroField(), 7.0) == 0.0
    assert fields.displacement(ZeroField(), 7.0) == 0.0
    c = ConstantField(0.3)
    assert fields.momentum_gain(c, 10.0) == pytest.approx(3.0, rel=1e-15)
    assert fields.displacement(c, 10.0) == pytest.approx(15.0, rel=1e-15)


def test_constant_closed_form_matches_quadrature():
    c = ConstantField(0.3)
    f_q = simpson(c.field_at, 0.0, 10.0)
    phi_q = simpson(c.momentum_gain, 0.0, 10.0)
    assert f_q == pytest.approx(c.momentum_gain(10.0), rel=1e-10)
    assert phi_q == pytest.approx(c.displacement(10.0), rel=1e-10)


def test_femto_against_high_precision_reference():
    femto = FemtoPulse(0.1, 0.114)
    assert femto.momentum_gain(55.116) == pytest.approx(FEMTO_F_55116, abs=1e-10)
    assert femto.momentum_gain(PERIOD) == pytest.approx(FEMTO_F_PERIOD, abs=1e-10)
    assert femto.displacement(100.0) == pytest.approx(FEMTO_PHI_100, abs=1e-10)


def test_integrals_vectorised_and_scalar():
    femto = FemtoPulse(0.1, 0.114)
    t = np.array([80.0, 5.0, 40.0, 0.0])
    f, phi = femto.integrals(t)
    assert f.shape == (4,) and phi.shape == (4,)
    for ti, fi, pi in zip(t, f, phi):
        fs, ps = femto.integrals(float(ti))
        assert isinstance(fs, float)
        assert fs == pytest.approx(fi, abs=1e-12)
        assert ps == pytest.approx(pi, abs=1e-12)
    assert f[3] == 0.0 and phi[3] == 0.0


def test_negative_time_rejected():
    with pytest.raises(DomainError):
        FemtoPulse().momentum_gain(-1.0)


@pytest.mark.parametrize("model", [ConstantField(0.3), FemtoPulse(0.1, 0.114),
                                   TabulatedField(np.linspace(0, 60, 61),
                                                  np.cos(np.linspace(0, 60, 61) / 7))])
def test_finite_difference_derivatives(model):
    """Phi' = f and f' = E, with the central-difference error shrinking at second order."""
    t = np.array([13.3, 27.9, 44.1])
    errs_phi, errs_f = [], []
    for h in (1e-2, 1e-3):
        _, pp = model.integrals(t + h)
        _, pm = model.integrals(t - h)
        fp, _ = model.integrals(t + h)
        fm, _ = model.integrals(t - h)
        errs_phi.append(np.max(np.abs((pp - pm) / (2 * h) - model.momentum_gain(t))))
        errs_f.append(np.max(np.abs((fp - fm) / (2 * h) - model.field_at(t))))
    assert errs_phi[1] < 1e-6 and errs_f[1] < 1e-6
    for e in (errs_phi, errs_f):
        if e[0] > 1e-10:  # not already at rounding level
            assert e[0] / max(e[1], 1e-300) > 50  # order >= 2 means a factor ~100


def test_tabulated_exact_piecewise_integrals():
    tab = TabulatedField(np.array([0.0, 1.0, 3.0]), np.array([0.0, 2.0, 2.0]))
    # E ramps 0 -> 2 on [0,1], then 2 on [1,3]
    assert tab.momentum_gain(1.0) == pytest.approx(1.0)
    assert tab.momentum_gain(3.0) == pytest.approx(5.0)
    # Phi(1) = int_0^1 s^2 ds = 1/3; Phi(3) = 1/3 + int_1^3 (1 + 2(s-1)) ds = 1/3 + 6
    assert tab.displacement(3.0) == pytest.approx(1 / 3 + 6.0)
    assert tab.field_at(2.0) == 2.0
    with pytest.raises(RangeError):
        tab.momentum_gain(3.5)
    assert tab.t_end == 3.0


def test_tabulated_rejects_bad_grid():
    with pytest.raises(ConfigError):
        TabulatedField(np.array([0.0, 2.0, 1.0]), np.zeros(3))
    with pytest.raises(ConfigError):
        TabulatedField(np.array([0.5, 1.0]), np.zeros(2))


def test_tabulated_from_file(tmp_path):
    p = tmp_path / "field.txt"
    p.write_text("# t E\n0 0\n1 0.5\n2 0.5\n", encoding="utf-8")
    tab = make_field("tabulated", field_file=str(p))
    assert tab.momentum_gain(2.0) == pytest.approx(0.75)
    with pytest.raises(ConfigError):
        make_field("tabulated", field_file=str(tmp_path / "missing.txt"))


def test_make_field():
    assert isinstance(make_field("zero"), ZeroField)
    assert make_field("constant", E=0.2).field_at(1.0) == 0.2
    assert isinstance(make_field("femto", E0=0.1, omega=0.114), FemtoPulse)
    with pytest.raises(ConfigError):
        make_field("laser")
    with pytest.raises(ConfigError):
        FemtoPulse(0.1, -1.0)


def test_simpson_failure_reports_diagnostics():
    with pytest.raises(QuadratureError) as err:
        simpson(lambda s: np.sin(1e4 * s ** 2), 0.0, 50.0, max_levels=6)
    assert err.value.levels == 6


def test_units():
    au = UnitSystem.atomic()
    assert au.tau0 == 1.0 and au.E0 == 1.0
    assert convert(au, "field", 1.0, "to_physical") == 1.0
    u = UnitSystem(x0=2.0)
    assert convert(u, "length", 2.0, "to_dimensionless") == 1.0
    si = UnitSystem.si()
    assert si.tau0 == pytest.approx(2.4188843265857e-17, rel=1e-9)
    assert si.E0 == pytest.approx(5.14220674763e11, rel=1e-9)
    # one free parameter: x0^2 / tau0 = hbar / m
    assert si.x0 ** 2 / si.tau0 == pytest.approx(si.hbar / si.mass, rel=1e-14)
    with pytest.raises(ConfigError):
        convert(au, "energy", 1.0)


@given(kind=st.sampled_from(["length", "time", "field", "flux"]),
       value=st.floats(-1e6, 1e6, allow_nan=False),
       x0=st.floats(1e-11, 1e3))
def test_convert_round_trip(kind, value, x0):
    u = UnitSystem(x0=x0)
    back = convert(u, kind, convert(u, kind, value, "to_physical"), "to_dimensionless")
    assert back == pytest.approx(value, rel=1e-14, abs=1e-300)


@settings(max_examples=30, deadline=None)
@given(scale=st.floats(0.1, 10.0), t=st.floats(0.0, 120.0))
def test_integrals_linear_in_amplitude(scale, t):
    f1, p1 = FemtoPulse(0.1, 0.114).integrals(t)
    f2, p2 = FemtoPulse(0.1 * scale, 0.114).integrals(t)
    assert f2 == pytest.approx(scale * f1, rel=1e-8, abs=1e-12)
    assert p2 == pytest.approx(scale * p1, rel=1e-8, abs=1e-12)
