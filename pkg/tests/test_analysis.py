from dataclasses import replace
from types import SimpleNamespace

import numpy as np
import pytest

from solwave import analysis as an
from solwave import model as md
from solwave import spectral as sp
from solwave.minimizer import SolveConfig, continuation_sweep, optimize_B
from solwave.spectral import Field

MUS = np.logspace(-4, -3, 8)


@pytest.fixture(scope="module")
def kdv_sweep():
    m, n = md.fkdv_symbol(2.0), md.make_nonlinearity("A1", 3.0, 1.0)
    return continuation_sweep(MUS, SolveConfig(mu=MUS[-1], m=m, n=n))


@pytest.fixture(scope="module")
def whitham_sweep():
    m, n = md.whitham_symbol(0.5), md.make_nonlinearity("A1", 1.0, 1.0)
    return continuation_sweep(MUS, SolveConfig(mu=MUS[-1], m=m, n=n))


@pytest.fixture(scope="module")
def cubic_sweep():
    m = md.whitham_symbol(0.5)
    n = md.make_nonlinearity("A1", 1.0, 1.0, md.monomial_remainder(1.0, 3))
    return continuation_sweep(MUS, SolveConfig(mu=MUS[-1], m=m, n=n))


# --- scaling fits --------------------------------------------------------------------

def test_kdv_fit_matches_closed_form(kdv_sweep):
    fit = an.fit_scaling(kdv_sweep)
    assert fit["beta_energy"] == pytest.approx(5 / 3, abs=1e-6)
    assert fit["beta_speed"] == pytest.approx(2 / 3, abs=1e-6)
    assert fit["prefactor_energy"] == pytest.approx(3 ** (5 / 3) / 5, rel=1e-5)


def test_whitham_theoretical_beta(whitham_sweep):
    assert whitham_sweep.beta == pytest.approx(2 / 3)
    fit = an.fit_scaling(whitham_sweep)
    assert fit["beta_theory"] == pytest.approx(2 / 3)
    assert abs(fit["beta_energy"] - 5 / 3) < 0.1


def test_fit_needs_entries(kdv_sweep):
    single = replace(kdv_sweep, entries=kdv_sweep.entries[:1], fitted={})
    with pytest.raises(an.InsufficientDataError):
        an.fit_scaling(single)


def test_fit_needs_a_decade(kdv_sweep):
    with pytest.raises(an.InsufficientDataError, match="decades"):
        an.fit_scaling(kdv_sweep, min_decades=2.0)


def test_trial_energy_below_fitted_bound(whitham_sweep):
    # the optimized trial profile already lies in the near-minimizer regime
    kappa = an.fit_scaling(whitham_sweep)["kappa_hat"]
    m, n = md.whitham_symbol(0.5), md.make_nonlinearity("A1", 1.0, 1.0)
    _, E = optimize_B(1e-3, m, n)
    assert E < -kappa * 1e-3 ** (5 / 3)


# --- near-minimizer ratios ---------------------------------------------------------------

def test_kdv_ratios_constant(kdv_sweep):
    out = an.near_minimizer_ratios(kdv_sweep)
    assert out["passed"]
    for key, spread in out["spread"].items():
        assert spread < 1.01, key


def test_whitham_ratios_bounded(whitham_sweep):
    out = an.near_minimizer_ratios(whitham_sweep)
    assert out["passed"]
    assert len(out["mu"]) == 8


def test_unconverged_entries_excluded(kdv_sweep):
    entries = list(kdv_sweep.entries)
    entries[0] = replace(entries[0], converged=False, ldisp=123.0)
    rep = replace(kdv_sweep, entries=entries)
    out = an.near_minimizer_ratios(rep)
    assert len(out["mu"]) == 7
    assert out["spread"]["ldisp"] < 1.01


# --- remainder ------------------------------------------------------------------

def test_remainder_skipped_without_nr(whitham_sweep):
    assert an.remainder_smallness(whitham_sweep)["skipped"]


def test_remainder_ratio_vanishes(cubic_sweep):
    out = an.remainder_smallness(cubic_sweep)
    assert not out["skipped"]
    assert out["monotone"] and out["spearman"] > 0
    ratio = dict(zip(out["mu"], out["ratio"]))
    assert ratio[MUS[0]] < ratio[MUS[-1]]
    assert out["predicted_slope"] == pytest.approx(0.5)


# --- subadditivity ------------------------------------------------------------------

def test_kdv_closed_form_superadditivity():
    rng = np.random.default_rng(0)
    for a, b in rng.uniform(1e-4, 1.0, size=(50, 2)):
        k = 3 ** (5 / 3) / 5
        assert -k * (a + b) ** (5 / 3) < -k * (a ** (5 / 3) + b ** (5 / 3))


def test_subadditivity_on_sweeps(kdv_sweep, whitham_sweep):
    for rep in (kdv_sweep, whitham_sweep):
        out = an.subadditivity_check(rep, n_pairs=20, seed=1)
        assert out["passed"] and len(out["rows"]) == 20
        assert min(r["margin"] for r in out["rows"]) > 0


def test_subadditivity_equal_halves(whitham_sweep):
    mu = 8e-4
    out = an.subadditivity_check(whitham_sweep, pairs=[(mu / 2, mu / 2)])
    row = out["rows"][0]
    assert row["margin"] > 0
    # for an exact power law the relative margin is 1 - 2^(-beta)
    assert row["margin"] / -row["I12"] == pytest.approx(1 - 2 ** (-2 / 3), abs=0.05)


def test_subadditivity_skips_degenerate(whitham_sweep):
    out = an.subadditivity_check(whitham_sweep, pairs=[(0.0, 5e-4), (2e-4, 3e-4)])
    assert out["skipped"] == [(0.0, 5e-4)]
    assert len(out["rows"]) == 1


# --- congestion --------------------------------------------------------------------

def test_partition_of_unity():
    g = sp.make_grid(20.0, 1024)
    _, profile, err = an.congestion_profile(Field(g, np.exp(-g.x ** 2)), 1.0)
    assert err < 1e-14
    assert len(profile) >= 40


def test_bump_support():
    x = np.array([-0.76, -0.25, 0.0, 0.25, 0.76])
    b = an.unit_bump(x)
    assert b[0] == 0.0 and b[-1] == 0.0
    assert np.allclose(b[1:4], 1.0)


def test_local_support_captured():
    g = sp.make_grid(20.0, 2048)
    v = np.where(np.abs(g.x - 3.0) < 0.2, 1.0, 0.0)
    best, _, _ = an.congestion_profile(Field(g, v), 1.0)
    single = (np.sum(np.abs(an.unit_bump(g.x - 3.0) * v) ** 3) * g.spacing) ** (1 / 3)
    assert best >= single * (1 - 1e-12)


def test_congestion_bounded_below(whitham_sweep):
    ratios = [an.congestion_profile(r.u, 1.0)[0] / r.mu ** (2 / 3) for r in whitham_sweep.results]
    assert min(ratios) > 0.1 * max(ratios)


# --- commutator ------------------------------------------------------------------------

def test_constant_symbol_commutes():
    out = an.commutator_decay(md.constant_symbol(2.0), r_list=(4, 8), probes=4, iterations=5,
                              grid=sp.make_grid(64.0, 1024))
    assert max(out["estimates"]) < 1e-14


def test_whitham_commutator_decays():
    out = an.commutator_decay(md.whitham_symbol(0.5), r_list=(4, 8, 16), probes=8,
                              iterations=30, grid=sp.make_grid(256.0, 4096))
    est = out["estimates"]
    assert est[2] < est[0]
    # halving rate for a Lipschitz symbol, approximately
    assert 0.3 < est[1] / est[0] < 0.7


def test_commutator_rejects_bad_radii():
    with pytest.raises(ValueError):
        an.commutator_decay(md.whitham_symbol(0.5), r_list=(8, 4))


# --- regularity ---------------------------------------------------------------------------

def test_kdv_regularity_ratio_constant(kdv_sweep):
    out = an.regularity_sweep(kdv_sweep)
    assert out["passed"]
    assert out["spread"] < 1.05


def test_whitham_regularity(whitham_sweep):
    out = an.regularity_sweep(whitham_sweep)
    assert out["passed"], out
    assert all(v <= 1 for v in out["l_inf"])


def test_regularity_zero_field():
    g = sp.make_grid(10.0, 64)
    m, n = md.whitham_symbol(0.5), md.make_nonlinearity("A1", 1.0, 1.0)
    fake = SimpleNamespace(u=Field(g, np.zeros(64)), nu=0.5, mu=1.0, residual=0.0, m=m, n=n,
                           domain={"padding": 2})
    out = an.regularity_report(fake)
    assert out["fixed_point_error"] == 0.0 and out["passed"]


def test_regularity_flags_supercritical_speed():
    g = sp.make_grid(10.0, 64)
    m, n = md.whitham_symbol(0.5), md.make_nonlinearity("A1", 1.0, 1.0)
    fake = SimpleNamespace(u=Field(g, np.zeros(64)), nu=5.0, mu=1.0, residual=0.0, m=m, n=n,
                           domain={"padding": 2})
    out = an.regularity_report(fake)
    assert not out["invertible"] and not out["passed"]


# --- cutoff equivalence --------------------------------------------------------------------

def test_cutoff_equivalence_whitham():
    m, n = md.whitham_symbol(0.5), md.make_nonlinearity("A1", 1.0, 1.0)
    out = an.cutoff_equivalence(SolveConfig(mu=5e-4, m=m, n=n))
    assert out["profile_difference"] < 1e-10
    assert out["speed_mismatch"] < 1e-10
    assert out["converged"]


# --- report plumbing ---------------------------------------------------------------------------

def test_report_serialization(whitham_sweep):
    import json

    d = whitham_sweep.to_dict()
    json.dumps(d, sort_keys=True)
    cols, rows = whitham_sweep.table()
    assert "mu" in cols and len(rows) == 8
    assert not whitham_sweep.warnings


def test_branch_change_warning(kdv_sweep):
    res = list(kdv_sweep.results)
    swapped = [replace(res[0], reduced_energy=res[-1].reduced_energy * 2)] + res[1:]
    rep = an.SweepReport.from_results(swapped, res[0].m, res[0].n)
    assert any("branch" in w for w in rep.warnings)
