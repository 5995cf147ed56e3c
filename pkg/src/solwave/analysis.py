"""Checks of the quantitative structure of computed minimizers.

Everything here reads :class:`SweepReport` / :class:`SolveResult` objects and
returns plain report dictionaries; nothing mutates solver state.

Energies are reported for the reduced problem, i.e. with m(0) subtracted from
the symbol (``I = E - m(0) Q``); on the constraint set this only shifts E by
the constant m(0) mu and leaves minimizers unchanged.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats
from scipy.interpolate import PchipInterpolator

from . import spectral as sp
from .functionals import Discretization
from .model import NonlinearitySpec, SymbolSpec, beta_exponent
from .spectral import Field, Grid


class InsufficientDataError(ValueError):
    pass


@dataclass
class SweepEntry:
    mu: float
    I: float
    energy: float
    nu: float
    speed_deficit: float
    q: float
    ldisp: float
    np: float
    nr: float
    h_half_s: float
    h_one_plus_s: float
    l_2p: float
    l_inf: float
    residual: float
    converged: bool
    tail_ok: bool
    iterations: int

    @property
    def usable(self) -> bool:
        return self.converged and self.tail_ok


@dataclass
class SweepReport:
    entries: list[SweepEntry]
    s: float
    s_prime: float
    p: float
    r: float | None
    m0: float
    beta: float
    failures: dict = field(default_factory=dict)
    fitted: dict = field(default_factory=dict)
    results: list = field(default_factory=list, repr=False)
    warnings: list[str] = field(default_factory=list)

    @classmethod
    def from_results(cls, results, m: SymbolSpec, n: NonlinearitySpec, failures=None):
        entries = []
        for res in sorted(results, key=lambda r: r.mu):
            b = res.breakdown
            entries.append(SweepEntry(
                mu=res.mu, I=res.reduced_energy, energy=b.e, nu=res.nu,
                speed_deficit=res.m0 - res.nu, q=b.q, ldisp=b.ldisp - res.m0 * b.q,
                np=b.np, nr=b.nr, h_half_s=res.norms["h_half_s"],
                h_one_plus_s=res.norms["h_one_plus_s"], l_2p=res.norms["l_2p"],
                l_inf=res.norms["l_inf"], residual=res.residual, converged=res.converged,
                tail_ok=res.domain["tail_ok"], iterations=res.iterations))
        rep = cls(entries, m.s, m.s_prime, n.p, n.r, m.m0, beta_exponent(m.s_prime, n.p),
                  dict(failures or {}), results=sorted(results, key=lambda r: r.mu))
        Is = [e.I for e in entries if e.usable]
        if any(b > a for a, b in zip(Is, Is[1:])):
            rep.warnings.append("reduced energy is not decreasing in mu: possible branch change")
        return rep

    def usable(self) -> list[SweepEntry]:
        return [e for e in self.entries if e.usable]

    def to_dict(self) -> dict:
        return {
            "model": {"s": self.s, "s_prime": self.s_prime, "p": self.p, "r": self.r,
                      "m0": self.m0, "beta": self.beta},
            "entries": [asdict(e) for e in self.entries],
            "failures": {str(k): v for k, v in self.failures.items()},
            "fitted": dict(self.fitted),
            "warnings": list(self.warnings),
        }

    def table(self) -> tuple[list[str], list[list]]:
        cols = [f.name for f in SweepEntry.__dataclass_fields__.values()]
        return cols, [[getattr(e, c) for c in cols] for e in self.entries]


def _loglog_fit(x, y):
    fit = stats.linregress(np.log(x), np.log(y))
    return float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2)


def fit_scaling(report: SweepReport, min_entries: int = 5, min_decades: float = 1.0) -> dict:
    """Log-log slopes of -I against mu and of m(0) - nu against mu."""
    use = [e for e in report.usable() if e.I < 0 and e.speed_deficit > 0]
    if len(use) < min_entries:
        raise InsufficientDataError(
            f"need at least {min_entries} converged entries, have {len(use)}")
    mus = np.array([e.mu for e in use])
    if math.log10(mus.max() / mus.min()) < min_decades - 1e-9:
        raise InsufficientDataError(
            f"entries span {math.log10(mus.max() / mus.min()):.3g} decades, need {min_decades}")
    negI = np.array([-e.I for e in use])
    dfc = np.array([e.speed_deficit for e in use])
    be, ie, r2e = _loglog_fit(mus, negI)
    bs, _, r2s = _loglog_fit(mus, dfc)
    beta = report.beta
    out = {
        "beta_energy": be, "r2_energy": r2e, "prefactor_energy": math.exp(ie),
        "kappa_hat": 0.5 * float(np.min(negI / mus ** (1 + beta))),
        "beta_speed": bs, "r2_speed": r2s,
        "beta_theory": beta, "n_used": len(use),
    }
    report.fitted.update(out)
    return out


def near_minimizer_ratios(report: SweepReport, ratio_stability: float = 3.0) -> dict:
    """Size ratios that stay bounded above and below for near-minimizers."""
    use = report.usable()
    if not use:
        return {"passed": False, "note": "no converged entries", "ratios": {}, "spread": {}}
    beta, p = report.beta, report.p
    mus = np.array([e.mu for e in use])
    scale = mus ** (1 + beta)
    ratios = {
        "ldisp": np.array([e.ldisp for e in use]) / scale,
        "nonlinear": np.array([e.np + e.nr for e in use]) / scale,
        "lp_norm": np.array([e.l_2p ** (2 + p) for e in use]) / scale,
        "h_half_s": np.array([e.h_half_s ** 2 for e in use]) / mus,
    }
    spread = {}
    for k, v in ratios.items():
        spread[k] = float(np.max(np.abs(v)) / np.min(np.abs(v))) if np.min(np.abs(v)) > 0 \
            else math.inf
    return {
        "mu": mus.tolist(),
        "ratios": {k: v.tolist() for k, v in ratios.items()},
        "spread": spread,
        "passed": all(s < ratio_stability for s in spread.values()),
        "ratio_stability": ratio_stability,
    }


def remainder_smallness(report: SweepReport, alpha: float = 0.05) -> dict:
    """Trend of |N_r| / mu^(1+beta): it must vanish as mu decreases."""
    use = report.usable()
    if report.r is None or all(e.nr == 0 for e in use):
        return {"skipped": True, "note": "model has no remainder term", "passed": True}
    mus = np.array([e.mu for e in use])
    ratio = np.abs([e.nr for e in use]) / mus ** (1 + report.beta)
    rho, pval = stats.spearmanr(mus, ratio)
    order = np.argsort(mus)
    monotone = bool(np.all(np.diff(ratio[order]) > 0))
    slope, _, r2 = _loglog_fit(mus, ratio)
    return {
        "skipped": False,
        "mu": mus.tolist(), "ratio": ratio.tolist(),
        "spearman": float(rho), "p_value": float(pval),
        "monotone": monotone, "slope": slope, "r2": r2,
        "predicted_slope": 0.5 * (report.r - report.p),
        "passed": bool(rho > 0 and pval < alpha),
    }


def _interpolator(report: SweepReport):
    use = [e for e in report.usable() if e.I < 0]
    if len(use) < 2:
        raise InsufficientDataError("need at least two converged entries with I < 0")
    lm = np.log([e.mu for e in use])
    li = np.log([-e.I for e in use])
    f = PchipInterpolator(lm, li, extrapolate=False)
    lo, hi = float(np.exp(lm[0])), float(np.exp(lm[-1]))

    def I(mu):
        return -float(np.exp(f(math.log(mu))))

    return I, lo, hi


def subadditivity_check(report: SweepReport, pairs=None, n_pairs: int = 20,
                        seed: int = 0) -> dict:
    """Strict subadditivity I(mu1 + mu2) < I(mu1) + I(mu2) on interpolated data."""
    I, lo, hi = _interpolator(report)
    if pairs is None:
        rng = np.random.default_rng(seed)
        pairs = []
        while len(pairs) < n_pairs:
            a = float(np.exp(rng.uniform(math.log(lo), math.log(hi - lo))))
            b = float(np.exp(rng.uniform(math.log(lo), math.log(hi - a))))
            pairs.append((a, b))
    rows = []
    skipped = []
    for a, b in pairs:
        a, b = float(a), float(b)
        if a <= 0 or b <= 0 or min(a, b) < lo or a + b > hi:
            skipped.append((a, b))
            continue
        ia, ib, iab = I(a), I(b), I(a + b)
        margin = ia + ib - iab
        rows.append({"mu1": a, "mu2": b, "I1": ia, "I2": ib, "I12": iab,
                     "margin": margin, "passed": bool(margin > 0)})
    return {"rows": rows, "skipped": skipped,
            "passed": bool(rows) and all(r["passed"] for r in rows)}


# --- local mass concentration --------------------------------------------

def _smoothstep(z):
    """C-infinity transition from 0 (z <= -1) to 1 (z >= 1)."""
    z = np.asarray(z, dtype=float)
    a = 1.0 + z
    b = 1.0 - z
    with np.errstate(divide="ignore", over="ignore"):
        fa = np.where(a > 0, np.exp(-1.0 / np.where(a > 0, a, 1.0)), 0.0)
        fb = np.where(b > 0, np.exp(-1.0 / np.where(b > 0, b, 1.0)), 0.0)
    return fa / (fa + fb)


def unit_bump(x):
    """Indicator of [-1/2, 1/2] convolved with a mollifier supported in [-1/4, 1/4]."""
    x = np.asarray(x, dtype=float)
    return _smoothstep(4.0 * (x + 0.5)) - _smoothstep(4.0 * (x - 0.5))


def congestion_profile(u: Field, p: float):
    """max_j ||phi_j u||_(2+p) over the integer translates phi_j = bump(. - j).

    Returns ``(max, profile, partition_error)`` with ``profile`` a list of
    ``(j, norm)`` pairs.
    """
    g = u.grid
    x = g.x
    js = np.arange(math.floor(x[0]) - 1, math.ceil(x[-1]) + 2)
    total = np.zeros_like(x)
    profile = []
    q = 2.0 + p
    for j in js:
        phi = unit_bump(x - j)
        total += phi
        val = float((np.sum(np.abs(phi * u.values) ** q) * g.spacing) ** (1.0 / q))
        profile.append((int(j), val))
    err = float(np.max(np.abs(total - 1.0)))
    best = max(v for _, v in profile)
    return best, profile, err


# --- commutator ----------------------------------------------------------

def _profile(name: str):
    if name == "gaussian":
        return lambda x: np.exp(-x * x)
    if name == "sech":
        return lambda x: 1.0 / np.cosh(x)
    raise ValueError(f"unknown cutoff profile {name!r}")


def commutator_decay(m: SymbolSpec, profile: str = "gaussian", r_list=(4, 8, 16, 32, 64),
                     probes: int = 20, iterations: int = 50, grid: Grid | None = None,
                     seed: int = 0, noise: float = 0.05) -> dict:
    """Operator-norm estimates of [L, phi(./r)] from H^(s/2) to H^(-s/2).

    The norm equals the L^2 norm of W [L, phi_r] W with W = <D>^(-s/2); it is
    estimated by block power iteration on (W B W)^T (W B W) from ``probes``
    random starting vectors.
    """
    r_list = [float(r) for r in r_list]
    if any(r <= 0 for r in r_list) or any(b < a for a, b in zip(r_list, r_list[1:])):
        raise ValueError("r_list must be positive and ascending")
    if grid is None:
        grid = sp.make_grid(16.0 * max(r_list), 8192)
    phi = _profile(profile)
    mv = sp.symbol_values(m, grid)
    w = sp.bracket(grid.xi) ** (-0.5 * m.s)
    rng = np.random.default_rng(seed)
    X0 = rng.standard_normal((grid.modes, probes))

    def mult(a, X):
        return np.fft.ifft(np.fft.fft(X, axis=0) * a[:, None], axis=0).real

    estimates = []
    for r in r_list:
        ph = phi(grid.x / r)[:, None]

        def A(X):
            Y = mult(w, X)
            Y = mult(mv, ph * Y) - ph * mult(mv, Y)
            return mult(w, Y)

        X = X0 / np.linalg.norm(X0, axis=0)
        est = 0.0
        for _ in range(iterations):
            Y = A(X)
            Z = -A(Y)  # A is skew-adjoint, so A^T A = -A^2
            nrm = np.linalg.norm(Z, axis=0)
            est = float(np.sqrt(np.max(np.sum(X * Z, axis=0))))
            if not np.all(nrm > 0):
                est = 0.0
                break
            X = Z / nrm
        estimates.append(est)
    nonincreasing = all(b <= a * (1 + noise) + 1e-14 for a, b in zip(estimates, estimates[1:]))
    return {"r": r_list, "estimates": estimates, "nonincreasing": nonincreasing,
            "profile": profile, "probes": probes, "iterations": iterations, "seed": seed}


# --- regularity ----------------------------------------------------------

def regularity_report(result, m: SymbolSpec | None = None, n: NonlinearitySpec | None = None,
                      padding: int | None = None) -> dict:
    """H^(1+s) size and one bootstrap step u = (L - nu + 1)^(-1) (n(u) + u)."""
    m = m if m is not None else result.m
    n = n if n is not None else result.n
    padding = padding if padding is not None else result.domain.get("padding", 2)
    u = result.u
    g = u.grid
    nu = result.nu
    lam = sp.symbol_values(m, g) - nu + 1.0
    out = {"h_one_plus_s_ratio": sp.sobolev_norm(u, 1.0 + m.s) ** 2 / result.mu}
    if np.min(lam) <= 0:
        out.update({"invertible": False, "fixed_point_error": math.inf, "passed": False,
                    "note": "L - nu + 1 is not positive: wave speed outside the subcritical regime"})
        return out
    d = Discretization(g, m, n, padding)
    rhs = d.nonlinear(u.values) + u.values
    v = sp.multiply(g, 1.0 / lam, rhs)
    err = sp.lp_norm(Field(g, v - u.values), 2)
    out.update({"invertible": True, "fixed_point_error": err,
                "residual": result.residual,
                "passed": bool(err <= 10.0 * result.residual)})
    return out


def regularity_sweep(report: SweepReport, bound: float = 3.0) -> dict:
    res = [r for r in report.results if r.converged and r.domain["tail_ok"]]
    reps = [regularity_report(r) for r in res]
    ratios = [x["h_one_plus_s_ratio"] for x in reps]
    linf = [r.norms["l_inf"] for r in res]
    spread = max(ratios) / min(ratios) if ratios else math.inf
    return {"mu": [r.mu for r in res], "ratios": ratios, "spread": spread,
            "fixed_point": [x["passed"] for x in reps], "l_inf": linf,
            "passed": bool(ratios) and spread < bound and all(v <= 1.0 for v in linf)
            and all(x["passed"] for x in reps)}


def cutoff_equivalence(cfg) -> dict:
    """Solve with (n, m) and with (cutoff n, m - m(0)) and compare."""
    from dataclasses import replace

    from .minimizer import solve
    from .model import cutoff_nonlinearity, shift_symbol

    a = solve(cfg)
    b = solve(replace(cfg, m=shift_symbol(cfg.m), n=cutoff_nonlinearity(cfg.n)))
    if a.u.grid != b.u.grid:
        raise RuntimeError("cutoff solve landed on a different grid")
    diff = float(np.max(np.abs(a.u.values - b.u.values)))
    return {"profile_difference": diff, "nu": a.nu, "nu_tilde": b.nu, "m0": cfg.m.m0,
            "speed_mismatch": abs(a.nu - (b.nu + cfg.m.m0)),
            "l_inf": a.norms["l_inf"], "converged": a.converged and b.converged}
