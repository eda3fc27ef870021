import math
import warnings

import pytest
from hypothesis import given, strategies as st
from scipy.constants import h, hbar, k as k_B

from optokerr.params import (CHI_AB_UNIT_HZ, TWO_PI, DriveParams, EffectiveParams,
                             PerturbativeRegimeWarning, PhysicalParams, RawAnharmonicity,
                             convert_raw_anharmonicity, derive_effective, graphene_params,
                             thermal_occupation)


def test_thermal_occupation_at_36MHz_14mK():
    assert thermal_occupation(36.2e6, 14e-3) == pytest.approx(7.5687, abs=1e-4)
    assert abs(thermal_occupation(36.2e6, 14e-3) - 7.6) <= 0.1


def test_thermal_occupation_zero_temperature():
    assert thermal_occupation(1e6, 0.0) == 0.0


def test_thermal_occupation_high_temperature_limit():
    f, T = 1e6, 10.0
    assert thermal_occupation(f, T) == pytest.approx(k_B * T / (h * f) - 0.5, rel=1e-6)


@pytest.mark.parametrize("f,T", [(0.0, 1.0), (-1.0, 1.0), (1.0, -1.0)])
def test_thermal_occupation_rejects_bad_input(f, T):
    with pytest.raises(ValueError):
        thermal_occupation(f, T)


def test_physical_params_requires_one_bath_spec():
    with pytest.raises(ValueError):
        PhysicalParams(mech_freq=1.0)
    with pytest.raises(ValueError):
        PhysicalParams(mech_freq=1.0, bath_temp=1.0, mean_occupation=1.0)
    with pytest.raises(ValueError):
        PhysicalParams(mech_freq=0.0, mean_occupation=0.0)
    with pytest.raises(ValueError):
        PhysicalParams(mech_freq=1.0, cavity_decay=-1.0, mean_occupation=0.0)


def test_graphene_chi_values():
    p, d = graphene_params()
    ep = derive_effective(p, d)
    assert ep.chi_ab / TWO_PI == pytest.approx(CHI_AB_UNIT_HZ, rel=1e-3)
    assert ep.chi_a / TWO_PI == pytest.approx(1.9030e-8, rel=1e-4)
    assert ep.n_bar == pytest.approx(7.5687, abs=1e-4)


def test_effective_formulas_by_hand():
    p = PhysicalParams.from_angular(1.0, coupling=0.02, cubic_anharm=0.03, quartic_anharm=0.01)
    d = DriveParams(cavity_detuning=0.5, mech_detuning=0.25)
    ep = derive_effective(p, d)
    g, v, w = 0.02, 0.03, 0.01
    assert ep.omega_c_tilde == pytest.approx(0.5 + g * v)
    assert ep.Omega_tilde == pytest.approx(0.25 - 5 * v * v / 6 + w)
    assert ep.chi_a == pytest.approx(g * g)
    assert ep.chi_b == pytest.approx(5 * v * v / 6 - w)
    assert ep.chi_ab == pytest.approx(2 * g * v)


def test_zero_couplings_give_bare_detunings():
    p = PhysicalParams(mech_freq=1e6, mean_occupation=0.0)
    d = DriveParams(cavity_detuning=3.0, mech_detuning=-2.0)
    ep = derive_effective(p, d)
    assert (ep.omega_c_tilde, ep.Omega_tilde, ep.chi_a, ep.chi_b, ep.chi_ab) == (3.0, -2.0, 0, 0, 0)


def test_perturbative_warning():
    p = PhysicalParams(mech_freq=1.0, coupling=0.5, mean_occupation=0.0)
    with pytest.warns(PerturbativeRegimeWarning):
        derive_effective(p)
    small = PhysicalParams(mech_freq=1.0, coupling=0.01, mean_occupation=0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        derive_effective(small)


def test_with_mech_detuning_shifts_only_Omega_tilde():
    p, d = graphene_params()
    ep = derive_effective(p, d)
    e2 = ep.with_mech_detuning(0.0)
    ref = derive_effective(p, DriveParams(d.cavity_amp, d.mech_amp, d.cavity_detuning, 0.0))
    assert e2.Omega_tilde == pytest.approx(ref.Omega_tilde, rel=1e-12, abs=1e-9)
    assert e2.chi_b == ep.chi_b


def test_raw_anharmonicity_conversion():
    m, f = 1e-18, 1e6
    x2 = hbar / (2 * m * TWO_PI * f)
    v, w = convert_raw_anharmonicity(RawAnharmonicity(2.0, 3.0, m), f)
    assert v == pytest.approx(2.0 * x2**1.5 / h)
    assert w == pytest.approx(3.0 * x2**2 / h)
    with pytest.raises(ValueError):
        RawAnharmonicity(1.0, 1.0, 0.0)


def test_drive_ratios():
    p, d = graphene_params()
    assert d.cavity_amp == pytest.approx(8.39e4 * TWO_PI * 242e3)
    assert d.cavity_detuning == pytest.approx(1e-2 * TWO_PI * 36.2e6)
    with pytest.raises(ValueError):
        DriveParams(cavity_amp=-1.0)


@given(st.floats(0.1, 10), st.floats(-1e-2, 1e-2), st.floats(-1e-2, 1e-2), st.floats(-1e-2, 1e-2),
       st.floats(0.1, 10))
def test_scaling_all_rates_scales_effective_params(Omega, g, v, w, s):
    p1 = PhysicalParams.from_angular(Omega, g, v, w)
    p2 = PhysicalParams.from_angular(s * Omega, s * g, s * v, s * w)
    e1, e2 = derive_effective(p1), derive_effective(p2)
    for name in ("omega_c_tilde", "Omega_tilde", "chi_a", "chi_b", "chi_ab"):
        assert getattr(e2, name) == pytest.approx(s * getattr(e1, name), rel=1e-9, abs=1e-300)


def test_effective_params_frozen():
    ep = EffectiveParams(0, 0, 0, 0, 0)
    with pytest.raises(Exception):
        ep.chi_a = 1.0
    assert math.isclose(ep.with_chi_ab(2.0).chi_ab, 2.0)
