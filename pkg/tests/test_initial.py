import numpy as np
import pytest

from dielectric_limit.harness.initial import (
    Perturbation,
    PreparationError,
    default_background_ic,
    initial_error_size,
    well_prepared_init,
)
from dielectric_limit.mhd import induced_E
from dielectric_limit.spectral import TorusField, TorusGrid, sobolev_norm


def test_zero_amplitude_is_uniform():
    g = TorusGrid(16, 2)
    s = default_background_ic(g, 0.0)
    assert np.all(s.p.phys == 1.0) and np.all(s.S.phys == 1.0)
    assert np.all(s.u.phys == 0.0)
    np.testing.assert_array_equal(s.H.phys[2], 1.0)
    np.testing.assert_array_equal(s.H.phys[:2], 0.0)


def test_background_minimum_pressure():
    g = TorusGrid(64, 2)
    s = default_background_ic(g, 0.1)
    assert s.p.minimum() == pytest.approx(0.9, abs=1e-12)
    assert s.div_H() < 1e-13


@pytest.mark.parametrize("amp", [0.5, 0.7, -0.1])
def test_background_amplitude_range(amp):
    with pytest.raises(ValueError):
        default_background_ic(TorusGrid(16, 2), amp)


def test_zero_perturbation_lies_on_limit_manifold():
    g = TorusGrid(16, 2)
    bg = default_background_ic(g)
    em = well_prepared_init(bg, 1e-2, 0.0, seed=1)
    assert initial_error_size(em, bg, 1e-2, 4) == 0.0
    np.testing.assert_array_equal(em.E.phys, induced_E(bg.u, bg.H).phys)


@pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3])
def test_well_prepared_size(eps):
    g = TorusGrid(32, 2)
    bg = default_background_ic(g)
    em = well_prepared_init(bg, eps, 1.0, seed=5)
    size = initial_error_size(em, bg, eps, 4)
    assert size <= eps * (1 + 1e-10)
    assert size >= 0.5 * eps
    assert em.div_H() < 1e-13


def test_same_seed_same_fields():
    g = TorusGrid(16, 2)
    a, b = Perturbation.draw(g, 99, 4), Perturbation.draw(g, 99, 4)
    for name in ("p", "u", "S", "H", "E"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    c = Perturbation.draw(g, 100, 4)
    assert not np.array_equal(a.p, c.p)


def test_perturbation_shapes_are_unit_size_and_mean_free():
    g = TorusGrid(16, 2)
    d = Perturbation.draw(g, 3, 2)
    for name in ("p", "u", "S", "H", "E"):
        f = TorusField(g, getattr(d, name))
        assert sobolev_norm(f, 2) == pytest.approx(1.0, rel=1e-13)
        assert abs(np.mean(f.phys)) < 1e-14
    assert TorusField(g, g.div(d.H)).max_abs() < 1e-13


def test_rejects_bad_arguments():
    bg = default_background_ic(TorusGrid(16, 2))
    with pytest.raises(ValueError):
        well_prepared_init(bg, 0.0, 1.0, 1)
    with pytest.raises(ValueError):
        well_prepared_init(bg, 0.1, -1.0, 1)
    assert issubclass(PreparationError, RuntimeError)
