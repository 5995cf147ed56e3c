import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solwave import spectral as sp
from solwave.model import constant_symbol, fkdv_symbol, whitham_symbol


def test_grid_nodes_and_wavenumbers():
    g = sp.make_grid(math.pi, 8)
    assert g.spacing == pytest.approx(math.pi / 4)
    assert np.allclose(np.diff(g.x), math.pi / 4)
    assert sorted(g.xi.round(12).tolist()) == list(range(-4, 4))
    assert g.weights.sum() == pytest.approx(2 * math.pi)


def test_grid_first_wavenumber():
    g = sp.make_grid(10.0, 16)
    assert g.xi[1] == pytest.approx(math.pi / 10)


@pytest.mark.parametrize("ell,M", [(1.0, 7), (1.0, 6), (0.0, 16), (-2.0, 16)])
def test_grid_rejects_bad_shapes(ell, M):
    with pytest.raises(sp.ConfigurationError):
        sp.make_grid(ell, M)


def test_wavenumbers_symmetric_except_nyquist():
    g = sp.make_grid(3.0, 32)
    ks = set(g.k.tolist())
    ks.discard(-16)
    assert ks == {-k for k in ks}


def test_single_cosine_mode_support():
    g = sp.make_grid(5.0, 64)
    f = sp.Field(g, np.cos(np.pi * g.x / 5.0))
    c = np.abs(sp.transform(f).coefficients)
    big = set(g.k[c > 1e-12 * c.max()].tolist())
    assert big == {1, -1}


def test_constant_support():
    g = sp.make_grid(5.0, 64)
    c = np.abs(sp.transform(sp.Field(g, np.full(64, 2.0))).coefficients)
    assert set(g.k[c > 1e-12 * c.max()].tolist()) == {0}


def test_round_trip(rng):
    g = sp.make_grid(7.0, 256)
    v = rng.standard_normal(256)
    back = sp.inverse_transform(sp.transform(sp.Field(g, v))).values
    assert np.linalg.norm(back - v) / np.linalg.norm(v) < 1e-12


def test_conjugate_symmetry(rng):
    g = sp.make_grid(2.0, 64)
    c = sp.forward(g, rng.standard_normal(64))
    idx = {k: i for i, k in enumerate(g.k)}
    for k in range(1, 32):
        assert c[idx[-k]] == pytest.approx(np.conj(c[idx[k]]), abs=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 8), st.floats(0.5, 50.0), st.integers(0, 2**31 - 1))
def test_parseval(logM, ell, seed):
    g = sp.make_grid(ell, 2**logM)
    v = np.random.default_rng(seed).standard_normal(g.modes)
    c = sp.forward(g, v)
    lhs = np.sum(v * v) * g.spacing
    rhs = np.sum(np.abs(c) ** 2) * g.dxi
    assert rhs == pytest.approx(lhs, rel=1e-12)


def test_unit_multiplier_is_identity(rng):
    g = sp.make_grid(4.0, 64)
    f = sp.Field(g, sp.zero_nyquist(g, rng.standard_normal(64)))
    assert np.allclose(sp.apply_multiplier(constant_symbol(1.0), f).values, f.values, atol=1e-13)


def test_second_derivative_eigenfunction():
    g = sp.make_grid(math.pi, 32)
    f = sp.Field(g, np.sin(g.x))
    out = sp.apply_multiplier(fkdv_symbol(2.0), f)
    assert np.allclose(out.values, np.sin(g.x), atol=1e-13)


def test_whitham_single_mode_scaling():
    g = sp.make_grid(math.pi, 32)
    f = sp.Field(g, np.cos(g.x))
    out = sp.apply_multiplier(whitham_symbol(1 / 3), f)
    factor = math.sqrt(4 / 3 * math.tanh(1.0))
    assert np.allclose(out.values, factor * np.cos(g.x), atol=1e-13)


def test_symbol_nonfinite_raises():
    g = sp.make_grid(1.0, 16)
    with pytest.raises(FloatingPointError, match="xi"), np.errstate(divide="ignore"):
        sp.symbol_values(lambda xi: 1.0 / xi, g)


def test_sobolev_constant():
    g = sp.make_grid(3.0, 32)
    f = sp.Field(g, np.full(32, 1.7))
    assert sp.sobolev_norm(f, 0.0) == pytest.approx(1.7 * math.sqrt(6.0), rel=1e-13)


def test_sobolev_zero():
    g = sp.make_grid(3.0, 32)
    assert sp.sobolev_norm(sp.Field(g, np.zeros(32)), 2.5) == 0.0


def test_sobolev_single_mode():
    g = sp.make_grid(math.pi, 32)
    f = sp.Field(g, np.sin(g.x))
    l2 = sp.lp_norm(f, 2)
    assert sp.sobolev_norm(f, 1.0) == pytest.approx(math.sqrt(2) * l2, rel=1e-13)


def test_lp2_matches_sobolev0(rng):
    g = sp.make_grid(5.0, 128)
    f = sp.Field(g, rng.standard_normal(128))
    assert sp.lp_norm(f, 2) == pytest.approx(sp.sobolev_norm(f, 0.0), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(-1.0, 3.0), st.floats(0.0, 2.0), st.integers(0, 2**31 - 1))
def test_sobolev_monotone_in_alpha(a, da, seed):
    g = sp.make_grid(4.0, 64)
    f = sp.Field(g, np.random.default_rng(seed).standard_normal(64))
    assert sp.sobolev_norm(f, a) <= sp.sobolev_norm(f, a + da) * (1 + 1e-12)


def test_recenter_spike():
    g = sp.make_grid(10.0, 128)
    v = np.zeros(128)
    v[100] = 1.0
    out = sp.recenter(sp.Field(g, v))
    assert abs(g.x[np.argmax(out.values)]) < g.spacing


def test_recenter_shifted_sech2():
    g = sp.make_grid(20.0, 512)
    f = sp.Field(g, 1 / np.cosh(g.x - 3.0) ** 2)
    out = sp.recenter(f)
    assert np.max(np.abs(out.values - 1 / np.cosh(g.x) ** 2)) < 1e-10


def test_peak_location_subgrid():
    g = sp.make_grid(20.0, 512)
    f = sp.Field(g, 1 / np.cosh(g.x + 1.2345) ** 2)
    assert sp.peak_location(f) == pytest.approx(-1.2345, abs=1e-10)


def test_shift_is_exact_for_band_limited():
    g = sp.make_grid(math.pi, 32)
    f = sp.Field(g, np.sin(3 * g.x))
    out = sp.shift(f, 0.3)
    assert np.allclose(out.values, np.sin(3 * (g.x - 0.3)), atol=1e-13)


def test_padding_is_exact_for_squares(rng):
    g = sp.make_grid(2.0, 32)
    v = sp.zero_nyquist(g, rng.standard_normal(32))
    big, w = sp.interpolate(g, v, 2)
    assert np.allclose(w[::2], v, atol=1e-13)
    # product of two band-limited fields, truncated back, is the exact Galerkin projection
    sq = sp.truncate(g, big, w * w)
    lhs = np.sum(sq * v) * g.spacing
    rhs = np.sum(w ** 3) * big.spacing
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_tail_fraction():
    g = sp.make_grid(40.0, 1024)
    f = sp.Field(g, np.exp(-g.x ** 2))
    assert sp.tail_fraction(f) < 1e-100
    # half of the unit field's mass lies in |x| > l/2
    flat = sp.Field(g, np.ones(1024))
    assert sp.tail_fraction(flat) == pytest.approx(20.0, rel=1e-2)
