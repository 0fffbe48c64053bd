import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridsync.coupling import (
    CouplingError,
    antiderivative,
    antiderivative_quad,
    eval_krasovskii,
    eval_sigma,
    jump_at_zero,
    make_coupling,
    sector_mu,
    sigma_sup_c,
    validate_property1,
)

DELTA = math.pi / 4
L = math.pi + DELTA


def test_sign_values_and_selection():
    spec = make_coupling("sign", DELTA)
    assert eval_sigma(spec, 0.0) == 0.0
    assert eval_sigma(spec, 1e-14) == 1.0
    assert eval_sigma(spec, -0.3) == -1.0
    hull = eval_krasovskii(spec, 0.0)
    assert (hull.lo, hull.hi) == (-1.0, 1.0)
    assert 0.37 in hull
    assert sector_mu(spec) == 1.0
    assert sigma_sup_c(spec) == 1.0


def test_ramp_normalized_and_identity_slopes():
    unit = make_coupling("ramp", DELTA)
    assert eval_sigma(unit, L) == pytest.approx(1.0, abs=1e-15)
    assert eval_sigma(unit, -L / 2) == pytest.approx(-0.5, abs=1e-15)
    assert sector_mu(unit) is None
    assert sigma_sup_c(unit) == 1.0

    ident = make_coupling("ramp", DELTA, params={"slope": L})
    np.testing.assert_allclose(eval_sigma(ident, np.array([-1.0, 0.25, 3.0])),
                               [-1.0, 0.25, 3.0], atol=1e-14)
    with pytest.raises(CouplingError, match="slope"):
        make_coupling("ramp", DELTA, params={"slope": -2.0})


def test_sine_plus_ramp_values_and_weight_guard():
    small_delta = math.pi / 8
    spec = make_coupling("sine_plus_ramp", small_delta, params={"w": 0.5})
    s = 1.2345
    expected = math.sin(s) + 0.5 * s / (math.pi + small_delta)
    assert eval_sigma(spec, s) == pytest.approx(expected, abs=1e-15)
    # near the far end the sine is negative; for delta = pi/4 a weight of 0.5
    # cannot keep sign(s)*sigma(s) positive, so construction must refuse
    with pytest.raises(CouplingError, match="sector"):
        make_coupling("sine_plus_ramp", DELTA, params={"w": 0.5})
    ok = make_coupling("sine_plus_ramp", DELTA, params={"w": 0.95})
    assert validate_property1(ok).passed


def test_table_interpolation_and_hull():
    spec = make_coupling("table", DELTA, table=[(0.0, 0.5), (1.0, 0.5), (L, 2.0)])
    assert eval_sigma(spec, 0.5) == pytest.approx(0.5)
    assert eval_sigma(spec, -0.5) == pytest.approx(-0.5)
    mid = 1.0 + (L - 1.0) / 2
    assert eval_sigma(spec, mid) == pytest.approx(1.25)
    assert jump_at_zero(spec) == 0.5
    hull = eval_krasovskii(spec, 0.0)
    assert (hull.lo, hull.hi) == (-0.5, 0.5)
    assert sector_mu(spec) == 0.5
    assert sigma_sup_c(spec) == 2.0


def test_table_construction_errors():
    with pytest.raises(CouplingError, match="start at s = 0"):
        make_coupling("table", DELTA, table=[(0.1, 0.0), (L, 1.0)])
    with pytest.raises(CouplingError, match="increasing"):
        make_coupling("table", DELTA, table=[(0.0, 0.0), (1.0, 1.0), (1.0, 2.0), (L, 3.0)])
    with pytest.raises(CouplingError, match="pi \\+ delta"):
        make_coupling("table", DELTA, table=[(0.0, 0.0), (3.0, 1.0)])
    with pytest.raises(CouplingError, match="table"):
        make_coupling("ramp", DELTA, table=[(0.0, 0.0), (L, 1.0)])
    with pytest.raises(CouplingError, match="family"):
        make_coupling("tanh", DELTA)
    with pytest.raises(CouplingError, match="delta"):
        make_coupling("sign", 0.0)
    with pytest.raises(CouplingError, match="delta"):
        make_coupling("sign", math.pi)


def test_sampled_sine_table_fails_sector_with_witness():
    # a plain sine sampled on [0, pi+delta] dips negative past s = pi, so the
    # sector check must fail and point at a witness near the far end
    knots = np.linspace(0.0, L, 25)
    spec = make_coupling("table", DELTA, table=list(zip(knots, np.sin(knots))))
    report = validate_property1(spec)
    assert not report.passed
    assert report.witness is not None
    assert report.witness > math.pi
    assert any(inf_val <= 0.0 for _, inf_val in report.sector_levels)


def test_builtins_pass_property_checks():
    for spec in (
        make_coupling("sign", DELTA),
        make_coupling("ramp", DELTA),
        make_coupling("ramp", DELTA, params={"slope": L}),
        make_coupling("sine_plus_ramp", math.pi / 8),
        make_coupling("table", DELTA, table=[(0.0, 0.2), (L, 1.0)]),
    ):
        report = validate_property1(spec)
        assert report.passed, spec.family
        assert report.oddness_defect <= 1e-12


def test_domain_violation_raises():
    spec = make_coupling("sign", DELTA)
    with pytest.raises(CouplingError, match="domain"):
        eval_sigma(spec, L + 1e-6)
    # tiny rounding excess is tolerated
    assert eval_sigma(spec, L * (1 + 1e-14)) == 1.0


def test_antiderivative_closed_forms():
    sign = make_coupling("sign", DELTA)
    assert antiderivative(sign, 0.7) == pytest.approx(0.7, abs=1e-15)
    assert antiderivative(sign, -0.7) == pytest.approx(0.7, abs=1e-15)
    assert antiderivative(sign, L + 2.0) == pytest.approx(L + 2.0, abs=1e-14)

    unit = make_coupling("ramp", DELTA)
    assert antiderivative(unit, 1.0) == pytest.approx(1.0 / (2 * L), rel=1e-14)
    # past the domain the integrand saturates at sigma(L) = 1
    assert antiderivative(unit, L + 1.0) == pytest.approx(L / 2 + 1.0, rel=1e-14)


@pytest.mark.parametrize("maker", [
    lambda: make_coupling("sign", DELTA),
    lambda: make_coupling("ramp", DELTA),
    lambda: make_coupling("ramp", DELTA, params={"slope": L}),
    lambda: make_coupling("sine_plus_ramp", math.pi / 8),
    lambda: make_coupling("table", DELTA,
                          table=[(0.0, 0.3), (0.9, 0.4), (2.0, 1.5), (L, 2.0)]),
])
def test_antiderivative_matches_quadrature(maker):
    spec = maker()
    for z in (0.0, 0.31, 1.7, math.pi, spec.domain_limit, spec.domain_limit + 0.8):
        assert antiderivative(spec, z) == pytest.approx(
            antiderivative_quad(spec, z), abs=1e-8)


@settings(max_examples=60, deadline=None)
@given(st.floats(-L, L), st.sampled_from(["sign", "ramp"]))
def test_oddness_property(s, family):
    spec = make_coupling(family, DELTA)
    assert eval_sigma(spec, s) == pytest.approx(-eval_sigma(spec, -s), abs=1e-15)
    assert antiderivative(spec, s) == pytest.approx(antiderivative(spec, -s), abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, L), st.floats(0.0, L))
def test_antiderivative_monotone_in_magnitude(a, b):
    spec = make_coupling("sine_plus_ramp", math.pi / 8)
    lo, hi = sorted((a, b))
    assert antiderivative(spec, lo) <= antiderivative(spec, hi) + 1e-15
