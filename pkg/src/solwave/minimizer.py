"""Constrained minimization of E on the sphere Q(u) = mu.

The solver is a preconditioned projected gradient method: the tangential
gradient ``g = E'(u) - nu u`` (with ``nu = <E'(u), u> / 2 mu``) is
preconditioned by the multiplier ``1 / (1 + m(xi) - m(0))``, a Barzilai-Borwein
step is safeguarded by backtracking on E, and every iterate is rescaled back
onto Q = mu.  Iterates start from a band-limited long-wave trial profile whose
width is optimized numerically.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import spectral as sp
from .functionals import DEFAULT_PADDING, Discretization, EnergyBreakdown
from .model import NonlinearitySpec, SymbolSpec, beta_exponent, shift_symbol
from .spectral import ConfigurationError, Field, Grid

log = logging.getLogger(__name__)


class AnsatzWarning(UserWarning):
    """No trial width gave negative energy; mu may be too large."""


@dataclass
class SolveConfig:
    mu: float
    m: SymbolSpec
    n: NonlinearitySpec
    domain_factor: float = 40.0
    modes: int = 2048
    padding: int = DEFAULT_PADDING
    grad_tol: float | None = None
    e_tol: float = 1e-12
    max_iters: int = 20000
    precondition: bool = True
    symmetrize: bool = False
    B_search: tuple[float, float, int] = (1e-4, 1e2, 41)
    B: float | None = None
    half_length: float | None = None
    stall_window: int = 2000
    initial: Field | None = None

    def __post_init__(self):
        if not (self.mu > 0 and np.isfinite(self.mu)):
            raise ConfigurationError(f"mass mu must be positive, got {self.mu}")
        if self.grad_tol is None:
            self.grad_tol = 1e-9 * math.sqrt(self.mu)
        if not self.grad_tol > 0 or not self.e_tol > 0:
            raise ConfigurationError("tolerances must be positive")
        if self.domain_factor <= 0:
            raise ConfigurationError("domain_factor must be positive")
        if int(self.modes) != self.modes or self.modes < 8 or self.modes % 2:
            raise ConfigurationError(f"modes must be an even integer >= 8, got {self.modes}")
        if int(self.padding) < 1 or int(self.max_iters) < 1:
            raise ConfigurationError("padding and max_iters must be positive integers")
        lo, hi, pts = self.B_search
        if not (0 < lo < hi) or int(pts) < 3:
            raise ConfigurationError(f"invalid B_search range {self.B_search}")

    @property
    def beta(self) -> float:
        return beta_exponent(self.m.s_prime, self.n.p)

    def describe(self) -> dict:
        return {
            "mu": self.mu, "domain_factor": self.domain_factor, "modes": self.modes,
            "padding": self.padding, "grad_tol": self.grad_tol, "e_tol": self.e_tol,
            "max_iters": self.max_iters, "precondition": self.precondition,
            "symmetrize": self.symmetrize, "B_search": list(self.B_search), "B": self.B,
            "half_length": self.half_length, "stall_window": self.stall_window,
            "warm_start": self.initial is not None,
        }


@dataclass
class SolveResult:
    u: Field
    mu: float
    nu: float
    breakdown: EnergyBreakdown
    reduced_energy: float
    residual: float
    residual_l2: float
    iterations: int
    converged: bool
    norms: dict
    domain: dict
    m0: float
    beta: float
    history: dict = field(default_factory=dict, repr=False)
    config: dict = field(default_factory=dict, repr=False)
    m: SymbolSpec | None = field(default=None, repr=False)
    n: NonlinearitySpec | None = field(default=None, repr=False)

    @property
    def speed_deficit(self) -> float:
        return self.m0 - self.nu

    def to_dict(self) -> dict:
        return {
            "mu": self.mu, "nu": self.nu, "m0": self.m0, "beta": self.beta,
            "energy": self.breakdown.to_dict(), "reduced_energy": self.reduced_energy,
            "residual": self.residual, "residual_l2": self.residual_l2,
            "iterations": self.iterations, "converged": self.converged,
            "norms": dict(self.norms), "domain": dict(self.domain),
            "config": dict(self.config),
        }


def ansatz_width(mu: float, m: SymbolSpec, n: NonlinearitySpec, B: float) -> float:
    """Width t with t^(-s') = B mu^beta."""
    beta = beta_exponent(m.s_prime, n.p)
    return (B * mu ** beta) ** (-1.0 / m.s_prime)


def ansatz(mu: float, m: SymbolSpec, n: NonlinearitySpec, B: float, grid: Grid) -> Field:
    """Band-limited trial profile sqrt(mu/t) phi(x/t) with Q = mu.

    phi is a periodized Fejer kernel: its spectrum is the triangle
    ``(1 - t|xi|)_+``, so the result has no content at |xi| >= 1/t.  The sign
    follows the focusing direction of the homogeneous nonlinearity.
    """
    t = ansatz_width(mu, m, n, B)
    if t < 1.0:
        raise ConfigurationError(
            f"B={B:g} gives trial width t={t:.4g} < 1; the trial family requires t >= 1"
        )
    tri = np.clip(1.0 - t * np.abs(grid.xi), 0.0, None)
    if not np.any(tri[1:] > 0):
        raise ConfigurationError(
            f"grid too coarse: no wavenumber below 1/t = {1 / t:.4g} (half-length "
            f"{grid.half_length:g})"
        )
    vals = sp.backward(grid, tri.astype(complex))
    q = 0.5 * float(np.dot(vals, vals) * grid.spacing)
    vals *= n.polarity * math.sqrt(mu / q)
    return Field(grid, vals)


def grid_for(mu: float, m: SymbolSpec, n: NonlinearitySpec, B: float, domain_factor: float,
             modes: int) -> Grid:
    return sp.make_grid(domain_factor * ansatz_width(mu, m, n, B), modes)


def optimize_B(mu: float, m: SymbolSpec, n: NonlinearitySpec, grid: Grid | None = None,
               B_search=(1e-4, 1e2, 41), domain_factor: float = 40.0, modes: int = 2048,
               padding: int = DEFAULT_PADDING) -> tuple[float, float]:
    """Pick the trial width parameter B minimizing the reduced energy E - m(0) Q.

    A log-spaced scan over ``B_search`` (clipped so that t >= 1) is refined by
    golden-section search in log B.  Without a fixed ``grid`` each candidate is
    evaluated on a box scaled to its own width.
    """
    beta = beta_exponent(m.s_prime, n.p)
    mt = shift_symbol(m)
    lo, hi, pts = B_search
    hi = min(hi, mu ** (-beta))
    if lo >= hi:
        raise ConfigurationError(f"B_search lower bound {lo:g} leaves no width t >= 1")

    cache: dict[float, float] = {}

    def energy(logB):
        if logB in cache:
            return cache[logB]
        B = math.exp(logB)
        g = grid if grid is not None else grid_for(mu, m, n, B, domain_factor, modes)
        try:
            u = ansatz(mu, m, n, B, g)
            e = Discretization(g, mt, n, padding).energy(u.values)
        except ConfigurationError:
            e = math.inf
        cache[logB] = e
        return e

    logs = np.linspace(math.log(lo), math.log(hi), int(pts))
    es = np.array([energy(v) for v in logs])
    j = int(np.argmin(es))
    if not np.isfinite(es[j]):
        raise ConfigurationError("no admissible trial width in B_search")
    a = logs[max(j - 1, 0)]
    b = logs[min(j + 1, len(logs) - 1)]
    invphi = (math.sqrt(5) - 1) / 2
    c1 = b - invphi * (b - a)
    c2 = a + invphi * (b - a)
    for _ in range(40):
        if energy(c1) < energy(c2):
            b = c2
        else:
            a = c1
        c1 = b - invphi * (b - a)
        c2 = a + invphi * (b - a)
        if b - a < 1e-6:
            break
    best = min(cache, key=cache.get)
    E = cache[best]
    if E >= 0:
        warnings.warn(
            f"trial energy is non-negative for every scanned B at mu={mu:g}; mu may "
            "exceed the small-mass regime", AnsatzWarning, stacklevel=2)
    return math.exp(best), E


def _project_constraint(u: np.ndarray, mu: float, h: float) -> np.ndarray:
    q = 0.5 * float(np.dot(u, u) * h)
    return u * math.sqrt(mu / q)


def _symmetrize(grid: Grid, u: np.ndarray) -> np.ndarray:
    return 0.5 * (u + np.roll(u[::-1], 1))


class _Problem:
    """Arrays and operators for one solve on the reduced (m - m(0)) problem."""

    def __init__(self, cfg: SolveConfig, grid: Grid):
        self.cfg = cfg
        self.grid = grid
        self.mu = cfg.mu
        self.disc = Discretization(grid, shift_symbol(cfg.m), cfg.n, cfg.padding)
        mt = self.disc.mvals
        if cfg.precondition:
            self.P = 1.0 / (1.0 + mt)
        else:
            self.P = np.ones_like(mt)
        self.Pinv = 1.0 / self.P
        self.h = grid.spacing

    def precond(self, g):
        if not self.cfg.precondition:
            return g.copy()
        return sp.multiply(self.grid, self.P, g)

    def precond_inv(self, g):
        if not self.cfg.precondition:
            return g.copy()
        return sp.multiply(self.grid, self.Pinv, g)

    def state(self, u):
        b = self.disc.breakdown(u)
        G = self.disc.gradient(u)
        nu = self.disc.inner(G, u) / (2.0 * self.mu)
        g = G - nu * u
        return b, nu, g


def _solve_on_grid(cfg: SolveConfig, grid: Grid, u: np.ndarray):
    prob = _Problem(cfg, grid)
    disc = prob.disc
    h = prob.h
    mu = cfg.mu
    u = _project_constraint(u, mu, h)
    b, nu, g = prob.state(u)
    E = b.e
    res = disc.dual_norm(g)
    hist_E, hist_res = [E], [res]
    tau = None
    u_prev = g_prev = None
    stall = 0
    best_res = res
    iters = 0
    converged = res <= cfg.grad_tol
    while not converged and iters < cfg.max_iters:
        iters += 1
        d = prob.precond(g)
        d -= (disc.inner(d, u) / disc.inner(u, u)) * u
        if tau is None:
            dn = math.sqrt(disc.inner(d, d))
            tau = 0.1 * math.sqrt(2 * mu) / dn if dn > 0 else 1.0
        elif u_prev is not None:
            s = u - u_prev
            y = g - g_prev
            sy = disc.inner(s, y)
            if sy > 0:
                if iters % 2:
                    tau = disc.inner(s, prob.precond_inv(s)) / sy
                else:
                    tau = sy / disc.inner(y, prob.precond(y))
            else:
                tau = tau * 2.0
        scale = abs(b.ldisp) + abs(b.np) + abs(b.nr)
        tolE = 64 * np.finfo(float).eps * max(scale, 1e-300)
        accepted = False
        for _ in range(60):
            trial = _project_constraint(u - tau * d, mu, h)
            if cfg.symmetrize:
                trial = _project_constraint(_symmetrize(grid, trial), mu, h)
            bt = disc.breakdown(trial)
            if bt.e <= E + tolE:
                accepted = True
                break
            tau *= 0.5
        if not accepted:
            log.debug("step rejected after backtracking at iteration %d", iters)
            tau = None
            u_prev = g_prev = None
            stall += 1
            if stall > cfg.stall_window:
                break
            continue
        u_prev, g_prev = u, g
        u = trial
        b, nu, g = prob.state(u)
        dE = abs(b.e - E) / max(abs(b.e), 1e-300)
        E = b.e
        res = disc.dual_norm(g)
        if iters % 10 == 0:
            hist_E.append(E)
            hist_res.append(res)
        converged = res <= cfg.grad_tol
        if res < best_res * (1 - 1e-3):
            best_res = res
            stall = 0
        elif dE < cfg.e_tol:
            stall += 1
            if stall > cfg.stall_window:
                break
        else:
            stall += 1
            if stall > 10 * cfg.stall_window:
                break
    hist_E.append(E)
    hist_res.append(res)
    return u, iters, converged, {"energy": hist_E, "residual": hist_res}


def solve(cfg: SolveConfig) -> SolveResult:
    """Minimize E over Q(u) = mu starting from the trial profile or ``cfg.initial``."""
    from .functionals import el_residual, el_residual_l2, lagrange_multiplier

    m, n, mu = cfg.m, cfg.n, cfg.mu
    beta = cfg.beta
    if cfg.B is not None:
        B = float(cfg.B)
        t = ansatz_width(mu, m, n, B)
        if t < 1:
            raise ConfigurationError(f"B={B:g} gives trial width t={t:.4g} < 1")
    else:
        B, _ = optimize_B(mu, m, n, None, cfg.B_search, cfg.domain_factor, cfg.modes,
                          cfg.padding)
        t = ansatz_width(mu, m, n, B)
    half = cfg.half_length if cfg.half_length is not None else cfg.domain_factor * t
    grid = sp.make_grid(half, cfg.modes)
    if cfg.initial is not None:
        if cfg.initial.grid.modes != cfg.modes:
            raise ConfigurationError("warm start must use the same number of modes")
        u0 = np.array(cfg.initial.values, dtype=float)
    else:
        u0 = ansatz(mu, m, n, B, grid).values
    u, iters, _, history = _solve_on_grid(cfg, grid, u0)
    field_u = sp.recenter(Field(grid, u), n.polarity)
    field_u = Field(grid, _project_constraint(field_u.values, mu, grid.spacing))
    disc = Discretization(grid, m, n, cfg.padding)
    nu = lagrange_multiplier(field_u, mu, m, n, cfg.padding)
    res = el_residual(field_u, nu, m, n, cfg.padding)
    res2 = el_residual_l2(field_u, nu, m, n, cfg.padding)
    bd = disc.breakdown(field_u.values)
    norms = {
        "h_half_s": sp.sobolev_norm(field_u, 0.5 * m.s),
        "h_one_plus_s": sp.sobolev_norm(field_u, 1.0 + m.s),
        "l_2p": sp.lp_norm(field_u, 2.0 + n.p),
        "l_inf": sp.lp_norm(field_u, math.inf),
    }
    tail = sp.tail_fraction(field_u)
    domain = {"half_length": grid.half_length, "modes": grid.modes, "padding": cfg.padding,
              "B": B, "t": t, "tail_mass": tail, "tail_ok": bool(tail < 1e-10 * mu)}
    return SolveResult(
        u=field_u, mu=mu, nu=nu, breakdown=bd, reduced_energy=bd.e - m.m0 * bd.q,
        residual=res, residual_l2=res2, iterations=iters,
        converged=bool(res <= cfg.grad_tol), norms=norms, domain=domain, m0=m.m0,
        beta=beta, history=history, config=cfg.describe(), m=m, n=n,
    )


def continuation_sweep(mu_list, template: SolveConfig, warm_start: bool = True):
    """Solve for every mass in ``mu_list``, largest first.

    With ``warm_start`` each solve starts from the previous solution: the
    sample values are carried over to the new box (whose length scales with the
    trial width) and rescaled onto the new constraint.  Failures are recorded
    per mass and do not stop the sweep.
    """
    from .analysis import SweepReport

    mus = [float(v) for v in mu_list]
    if not mus:
        raise ValueError("continuation sweep needs at least one mass")
    if any(b < a for a, b in zip(mus, mus[1:])):
        raise ValueError("mu_list must be sorted ascending")
    results = []
    failures = {}
    prev = None
    for mu in reversed(mus):
        cfg = replace(template, mu=mu, grad_tol=None if template.grad_tol is None
                      else template.grad_tol * math.sqrt(mu / template.mu),
                      initial=prev if warm_start else None)
        try:
            res = solve(cfg)
        except (ConfigurationError, FloatingPointError, ValueError) as exc:
            failures[mu] = str(exc)
            log.warning("solve failed at mu=%g: %s", mu, exc)
            continue
        results.append(res)
        if res.converged:
            prev = res.u
    results.reverse()
    return SweepReport.from_results(results, template.m, template.n, failures)
