import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solwave import functionals as fn
from solwave import model as md
from solwave import spectral as sp
from solwave.spectral import Field

from conftest import kdv_soliton


def smooth_random(grid, rng, amp=0.3, decay=0.15):
    """Random real band-limited field with Gaussian spectral decay and no Nyquist mode."""
    c = rng.standard_normal(grid.modes) + 1j * rng.standard_normal(grid.modes)
    c *= np.exp(-(decay * grid.k) ** 2)
    v = np.fft.ifft(c).real
    v = sp.zero_nyquist(grid, v)
    return Field(grid, amp * v / np.max(np.abs(v)))


# --- closed-form values -------------------------------------------------------

def test_Q_constant_and_zero():
    g = sp.make_grid(5.0, 32)
    assert fn.eval_Q(Field(g, np.ones(32))) == pytest.approx(5.0)
    assert fn.eval_Q(Field(g, np.zeros(32))) == 0.0


def test_unit_symbol_gives_Q(rng):
    g = sp.make_grid(3.0, 64)
    u = smooth_random(g, rng)
    assert fn.eval_Ldisp(u, md.constant_symbol(1.0)) == pytest.approx(fn.eval_Q(u), rel=1e-13)


def test_Ldisp_single_mode():
    g = sp.make_grid(math.pi, 32)
    u = Field(g, np.sin(g.x))
    assert fn.eval_Ldisp(u, md.fkdv_symbol(2.0)) == pytest.approx(math.pi / 2, rel=1e-13)


def test_kdv_soliton_closed_forms(kdv_model):
    m, n = kdv_model
    g = sp.make_grid(60.0, 2048)
    u = kdv_soliton(g)
    b = fn.eval_E(u, m, n)
    assert b.q == pytest.approx(1 / 3, rel=1e-12)
    assert b.ldisp == pytest.approx(1 / 15, rel=1e-12)
    assert b.np == pytest.approx(4 / 15, rel=1e-12)
    assert b.nr == 0.0
    assert b.e == pytest.approx(-1 / 5, rel=1e-12)


def test_kdv_multiplier_and_residual(kdv_model):
    m, n = kdv_model
    g = sp.make_grid(60.0, 2048)
    u = kdv_soliton(g)
    assert fn.lagrange_multiplier(u, 1 / 3, m, n) == pytest.approx(-1.0, rel=1e-12)
    assert fn.el_residual(u, -1.0, m, n) < 1e-8


def test_Nr_constant_field():
    g = sp.make_grid(2.0, 16)
    eps = 0.1
    n = md.make_nonlinearity("A1", 1.0, 1.0, md.monomial_remainder(1.0, 3))
    _, nr = fn.eval_N(Field(g, np.full(16, eps)), n)
    assert nr == pytest.approx(eps ** 4 / 4 * 4.0, rel=1e-12)


def test_zero_field(whitham_model):
    m, n = whitham_model
    g = sp.make_grid(10.0, 64)
    z = Field(g, np.zeros(64))
    assert fn.eval_N(z, n) == (0.0, 0.0)
    b = fn.eval_E(z, m, n)
    assert (b.q, b.ldisp, b.np, b.nr, b.e) == (0.0, 0.0, 0.0, 0.0, 0.0)
    assert np.all(fn.gradient_E(z, m, n).values == 0.0)
    assert fn.el_residual(z, 0.37, m, n) == 0.0


def test_gradient_unit_symbol_no_nonlinearity(rng):
    g = sp.make_grid(4.0, 64)
    u = smooth_random(g, rng)
    n0 = md.NonlinearitySpec("A1", 0.0, 1.0)
    grad = fn.gradient_E(u, md.constant_symbol(1.0), n0)
    assert np.allclose(grad.values, u.values, atol=1e-14)


def test_zero_multiplier_for_trivial_model(rng):
    g = sp.make_grid(4.0, 64)
    u = smooth_random(g, rng)
    n0 = md.NonlinearitySpec("A1", 0.0, 1.0)
    assert fn.lagrange_multiplier(u, fn.eval_Q(u), md.constant_symbol(0.0), n0) == 0.0


def test_lagrange_multiplier_requires_positive_mass(rng, kdv_model):
    g = sp.make_grid(4.0, 64)
    with pytest.raises(ValueError):
        fn.lagrange_multiplier(smooth_random(g, rng), 0.0, *kdv_model)


# --- gradient consistency -------------------------------------------------------

MODELS = {
    "kdv": (md.fkdv_symbol(2.0), md.make_nonlinearity("A1", 3.0, 1.0)),
    "whitham_cubic": (md.whitham_symbol(0.5),
                      md.make_nonlinearity("A1", 1.0, 1.0, md.monomial_remainder(1.0, 3))),
    "fractional": (md.fkdv_symbol(0.8),
                   md.make_nonlinearity("A2", 1.5, 1.5, md.power_remainder(0.5, 2.0, odd=True))),
}


def central_difference(f, u, v, h=1e-5):
    return (f(Field(u.grid, u.values + h * v.values)) - f(Field(u.grid, u.values - h * v.values))) / (2 * h)


@pytest.mark.parametrize("name", sorted(MODELS))
def test_gradients_match_central_differences(name, rng):
    m, n = MODELS[name]
    g = sp.make_grid(8.0, 128)
    funcs = {
        "Q": (fn.eval_Q, fn.gradient_Q),
        "L": (lambda w: fn.eval_Ldisp(w, m), lambda w: fn.gradient_Ldisp(w, m)),
        "N": (lambda w: sum(fn.eval_N(w, n)), lambda w: fn.gradient_N(w, n)),
        "E": (lambda w: fn.eval_E(w, m, n).e, lambda w: fn.gradient_E(w, m, n)),
    }
    for _ in range(5):
        u, v = smooth_random(g, rng), smooth_random(g, rng)
        for key, (f, df) in funcs.items():
            exact = sp.inner(df(u), v)
            fd = central_difference(f, u, v)
            assert abs(fd - exact) <= 1e-6 * abs(exact), key


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(-7.0, 7.0))
def test_energy_translation_invariant(seed, dx):
    m, n = MODELS["whitham_cubic"]
    g = sp.make_grid(8.0, 128)
    u = smooth_random(g, np.random.default_rng(seed))
    e0 = fn.eval_E(u, m, n).e
    e1 = fn.eval_E(sp.shift(u, dx), m, n).e
    assert e1 == pytest.approx(e0, rel=1e-10, abs=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.1, 10.0))
def test_Q_homogeneity_and_Ldisp_positivity(seed, a):
    m, _ = MODELS["whitham_cubic"]
    g = sp.make_grid(8.0, 128)
    u = smooth_random(g, np.random.default_rng(seed))
    assert fn.eval_Q(u * a) == pytest.approx(a * a * fn.eval_Q(u), rel=1e-12)
    assert fn.eval_Ldisp(u, m) >= fn.eval_Q(u) * (1 - 1e-12)  # m >= 1 for Whitham T >= 1/3


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.05, 3.0))
def test_homogeneous_scaling_of_Np(seed, a):
    n = md.make_nonlinearity("A1", 2.0, 1.0)
    g = sp.make_grid(8.0, 128)
    u = smooth_random(g, np.random.default_rng(seed))
    np1, _ = fn.eval_N(u, n)
    npa, _ = fn.eval_N(u * a, n)
    assert npa == pytest.approx(a ** 3 * np1, rel=1e-10, abs=1e-300)


def test_el_identity_on_gradient(rng, whitham_model):
    m, n = whitham_model
    g = sp.make_grid(8.0, 128)
    u = smooth_random(g, rng)
    nu = fn.lagrange_multiplier(u, fn.eval_Q(u), m, n)
    r = fn.el_field(u, nu, m, n)
    # the residual is orthogonal to u by construction of nu
    assert abs(sp.inner(r, u)) < 1e-12 * sp.lp_norm(r, 2) * sp.lp_norm(u, 2)
