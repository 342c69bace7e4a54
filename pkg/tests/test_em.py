import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dielectric_limit.em import (
    EmRunConfig,
    EmState,
    em_run,
    em_step,
    em_step_explicit,
    em_step_split,
    em_transport_rhs,
    em_wave_speed,
    stiff_E_update,
)
from dielectric_limit.eos import EosClosure
from dielectric_limit.harness.initial import default_background_ic
from dielectric_limit.mhd import MhdRunConfig, induced_E, mhd_step
from dielectric_limit.monitors import ListSink, PositivityError
from dielectric_limit.spectral import TorusGrid

EOS = EosClosure()


def rest_state(g, p=1.0, S=0.5, H=(0.0, 0.0, 0.0)):
    one = np.ones(g.shape)
    vec = np.zeros((3,) + g.shape)
    Hf = np.stack([h * one for h in H])
    return EmState.from_arrays(g, p * one, vec, S * one, vec.copy(), Hf)


def smooth_state(g, amp=0.1, E_offset=0.05):
    bg = default_background_ic(g, amp)
    E = induced_E(bg.u, bg.H).phys
    x1, x2, _ = g.coords()
    E = E + E_offset * np.stack(np.broadcast_arrays(np.sin(x2), np.cos(x1), np.sin(x1 - x2)))
    return EmState.from_arrays(g, bg.p.phys, bg.u.phys, bg.S.phys, E, bg.H.phys)


def test_config_validation():
    g = TorusGrid(16, 2)
    with pytest.raises(ValueError):
        EmRunConfig(0.0, 0.1, 1.0, g)
    with pytest.raises(ValueError):
        EmRunConfig(0.1, -0.1, 1.0, g)
    with pytest.raises(ValueError):
        EmRunConfig(0.1, 0.1, 1.0, g, cfl=1.5)


def test_rest_state_transport_is_zero():
    g = TorusGrid(16, 2)
    rhs = em_transport_rhs(rest_state(g), EOS)
    for f in (rhs.dp, rhs.du, rhs.dS, rhs.dH):
        assert f.max_abs() < 1e-15


def test_force_free_electric_field_gives_no_heating():
    g = TorusGrid(16, 2)
    one = np.ones(g.shape)
    u = np.stack([0.2 * one, -0.1 * one, 0 * one])
    H = np.stack([0 * one, 0 * one, one])
    E = -np.cross(u, H, axis=0)
    st_ = EmState.from_arrays(g, one, u, 0.3 * one, E, H)
    assert em_transport_rhs(st_, EOS).dS.max_abs() < 1e-15


@pytest.mark.parametrize("eps", [1.0, 1e-3])
def test_rest_state_is_steady(eps):
    g = TorusGrid(16, 2)
    s0 = rest_state(g, H=(0.0, 0.0, 1.0))
    cfg = EmRunConfig(eps, 0.05, 0.5, g)
    s = s0
    for _ in range(10):
        s = em_step(s, cfg)
    for a, b in zip(s.arrays(), s0.arrays()):
        assert np.max(np.abs(a - b)) < 1e-13
    assert s.t == pytest.approx(0.5)


def test_stiff_update_fixed_point():
    g = TorusGrid(16, 2)
    s = smooth_state(g, E_offset=0.0)
    out = stiff_E_update(s, 0.3, 1e-2)
    assert np.max(np.abs(out.E.phys - s.E.phys)) < 1e-15


def test_stiff_update_relaxes_to_induced_field():
    g = TorusGrid(16, 2)
    s = smooth_state(g)
    E_star = induced_E(s.u, s.H).phys
    out = stiff_E_update(s, 1.0, 1e-4)
    assert np.max(np.abs(out.E.phys - E_star)) < 1e-14


@given(st.floats(1e-3, 1.0), st.floats(1e-3, 1.0))
def test_stiff_update_composes_exactly(dt, eps):
    g = TorusGrid(8, 1)
    s = smooth_state(TorusGrid(8, 2), E_offset=0.3)
    s = EmState.from_arrays(g, *(a[:, :1] if a.ndim == 3 else a[:, :, :1] for a in s.arrays()))
    E_star = induced_E(s.u, s.H).phys
    out = s
    for _ in range(100):
        out = stiff_E_update(out, dt / 100, eps)
    expected = E_star + math.exp(-dt / eps) * (s.E.phys - E_star)
    np.testing.assert_allclose(out.E.phys, expected, atol=1e-13)


def test_wave_speed_rest_state():
    g = TorusGrid(8, 2)
    sp_ = em_wave_speed(rest_state(g, p=1.0, S=0.0), 1e-2, EosClosure(5 / 3))
    assert sp_.acoustic == pytest.approx(math.sqrt(5 / 3), rel=1e-14)
    assert sp_.maxwell == pytest.approx(10.0)


def test_wave_speed_scales_with_pressure_at_fixed_density():
    g = TorusGrid(8, 2)
    eos = EosClosure(5 / 3)
    c1 = em_wave_speed(rest_state(g, p=1.0, S=0.0), 1.0, eos).acoustic
    # doubling p and shifting S by ln 2 keeps rho fixed
    c2 = em_wave_speed(rest_state(g, p=2.0, S=math.log(2.0)), 1.0, eos).acoustic
    assert c2 / c1 == pytest.approx(math.sqrt(2.0), rel=1e-14)


def test_wave_speed_adds_flow():
    g = TorusGrid(8, 2)
    s = rest_state(g, p=1.0, S=0.0)
    u = s.u.phys.copy()
    u[0] = 0.5
    s = EmState.from_arrays(g, s.p.phys, u, s.S.phys, s.E.phys, s.H.phys)
    assert em_wave_speed(s, 1.0, EOS).acoustic == pytest.approx(0.5 + math.sqrt(5 / 3))


def _integrate(step, s, n):
    for _ in range(n):
        s = step(s)
    return s


def _diff(a, b):
    return max(np.max(np.abs(x - y)) for x, y in zip(a.arrays(), b.arrays()))


def test_imex_second_order_against_explicit_reference():
    g = TorusGrid(16, 2)
    eps, T = 0.5, 0.2
    s0 = smooth_state(g)
    ref = _integrate(lambda s: em_step_explicit(s, T / 400, eps, EOS), s0, 400)
    errs = []
    for n in (4, 8, 16):
        cfg = EmRunConfig(eps, T / n, T, g)
        errs.append(_diff(_integrate(lambda s: em_step(s, cfg), s0, n), ref))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.8), (errs, orders)


def test_split_reference_agrees_when_eps_resolved():
    g = TorusGrid(16, 2)
    eps, T, n = 0.5, 0.1, 20
    s0 = smooth_state(g)
    cfg = EmRunConfig(eps, T / n, T, g)
    a = _integrate(lambda s: em_step(s, cfg), s0, n)
    b = _integrate(lambda s: em_step_split(s, cfg), s0, n)
    assert _diff(a, b) < 1e-3


def test_asymptotic_preserving_limit():
    """As eps -> 0 one step approaches the MHD step from the same fluid data."""
    g = TorusGrid(16, 2)
    bg = default_background_ic(g)
    s0 = EmState.from_arrays(g, bg.p.phys, bg.u.phys, bg.S.phys, induced_E(bg.u, bg.H).phys, bg.H.phys)
    dt = 0.02
    m = mhd_step(bg, MhdRunConfig(dt, dt, g))
    gaps = []
    for eps in (1e-4, 1e-6):
        e = em_step(s0, EmRunConfig(eps, dt, dt, g))
        gaps.append(max(np.max(np.abs(x - y)) for x, y in zip(
            (e.p.phys, e.u.phys, e.S.phys, e.H.phys), m.arrays())))
    assert gaps[1] < 0.05 * gaps[0]
    assert gaps[1] < 1e-6


@pytest.mark.parametrize("eps", [1e-1, 1e-3])
def test_divergence_free_magnetic_field(eps):
    g = TorusGrid(32, 2)
    s = smooth_state(g)
    cfg = EmRunConfig(eps, 0.02, 0.2, g)
    s = em_run(s, cfg)
    assert s.div_H() < 1e-12


def test_two_and_three_dimensional_runs_agree():
    g2, g3 = TorusGrid(16, 2), TorusGrid(16, 3)
    s2 = smooth_state(g2)
    s3 = EmState.from_arrays(
        g3, *(np.broadcast_to(a, a.shape[:-1] + (16,)).copy() for a in s2.arrays())
    )
    for _ in range(3):
        s2 = em_step(s2, EmRunConfig(1e-2, 0.02, 1.0, g2))
        s3 = em_step(s3, EmRunConfig(1e-2, 0.02, 1.0, g3))
    for a, b in zip(s2.arrays(), s3.arrays()):
        assert np.max(np.abs(b - a)) < 1e-12


def test_cfl_violation_warns_and_substeps():
    g = TorusGrid(16, 2)
    s0 = smooth_state(g)
    big = EmRunConfig(1e-2, 0.4, 0.4, g)
    with pytest.warns(RuntimeWarning, match="CFL"):
        a = em_step(s0, big)
    assert a.t == pytest.approx(0.4)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fine = EmRunConfig(1e-2, 0.05, 0.4, g)
        b = _integrate(lambda s: em_step(s, fine), s0, 8)
    assert _diff(a, b) < 1e-12


def test_positivity_abort_carries_minima():
    g = TorusGrid(16, 2)
    s = smooth_state(g)
    p = s.p.phys - 1.2
    bad = EmState.from_arrays(g, p, *s.arrays()[1:])
    with pytest.raises(PositivityError) as info:
        em_step(bad, EmRunConfig(1e-2, 0.01, 0.01, g))
    assert info.value.min_p == pytest.approx(np.min(p))
    assert info.value.t == 0.0


def test_run_records_metrics():
    g = TorusGrid(16, 2)
    sink = ListSink()
    s = em_run(smooth_state(g), EmRunConfig(1e-2, 0.05, 0.2, g), sink)
    assert s.t == pytest.approx(0.2)
    np.testing.assert_allclose(sink.column("t"), [0.05, 0.1, 0.15, 0.2])
    assert np.all(sink.column("min_p") > 0)
    assert np.all(sink.column("div_H") < 1e-12)
