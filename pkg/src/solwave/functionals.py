"""Conserved and variational functionals, their gradients and the E-L residual.

All functionals are spectral/trapezoid discretizations on a :class:`Grid`:

    Q(u)  = 1/2 int u^2
    L(u)  = 1/2 int m(xi) |u^|^2
    N(u)  = int N_p(u) + int N_r(u)
    E(u)  = L(u) - N(u)

Nonlinear terms are evaluated after spectral interpolation onto a grid with
``padding`` times as many nodes and restricted back with the adjoint
operation, so the discrete gradient of N is exactly the restricted n(u).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral as sp
from .model import NonlinearitySpec, SymbolSpec
from .spectral import Field, Grid

DEFAULT_PADDING = 2


@dataclass(frozen=True)
class EnergyBreakdown:
    q: float
    ldisp: float
    np: float
    nr: float
    e: float

    def to_dict(self):
        return {"q": self.q, "ldisp": self.ldisp, "np": self.np, "nr": self.nr, "e": self.e}


class Discretization:
    """Cached multiplier tables for one (grid, m, n, padding) combination.

    Works on raw sample arrays; the public functions below wrap it for
    :class:`Field` inputs.
    """

    def __init__(self, grid: Grid, m: SymbolSpec, n: NonlinearitySpec | None,
                 padding: int = DEFAULT_PADDING):
        if int(padding) < 1:
            raise sp.ConfigurationError(f"padding factor must be >= 1, got {padding}")
        self.grid = grid
        self.m = m
        self.n = n
        self.padding = int(padding)
        self.mvals = sp.symbol_values(m, grid)
        self.h = grid.spacing
        self.s = m.s

    # -- linear pieces ----------------------------------------------------
    def L(self, u: np.ndarray) -> np.ndarray:
        return sp.multiply(self.grid, self.mvals, u)

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.dot(a, b) * self.h)

    def Q(self, u: np.ndarray) -> float:
        return 0.5 * float(np.dot(u, u) * self.h)

    def Ldisp(self, u: np.ndarray) -> float:
        c = sp.forward(self.grid, u)
        return 0.5 * float(np.sum(self.mvals * (c.real ** 2 + c.imag ** 2)) * self.grid.dxi)

    def dual_norm(self, r: np.ndarray) -> float:
        return sp.sobolev_norm_values(self.grid, r, -0.5 * self.s)

    # -- nonlinear pieces -------------------------------------------------
    def _fine(self, u: np.ndarray):
        return sp.interpolate(self.grid, u, self.padding)

    def N_parts(self, u: np.ndarray) -> tuple[float, float]:
        if self.n is None:
            return 0.0, 0.0
        big, ub = self._fine(u)
        hb = big.spacing
        return (float(np.sum(self.n.N_p(ub)) * hb), float(np.sum(self.n.N_r(ub)) * hb))

    def nonlinear(self, u: np.ndarray) -> np.ndarray:
        """n(u) restricted to the base grid (the gradient of N)."""
        if self.n is None:
            return np.zeros_like(u)
        big, ub = self._fine(u)
        return sp.truncate(self.grid, big, self.n(ub))

    def nonlinear_parts(self, u: np.ndarray):
        if self.n is None:
            z = np.zeros_like(u)
            return z, z
        big, ub = self._fine(u)
        return (sp.truncate(self.grid, big, self.n.n_p(ub)),
                sp.truncate(self.grid, big, self.n.n_r(ub)))

    # -- composites ---------------------------------------------------------
    def breakdown(self, u: np.ndarray) -> EnergyBreakdown:
        q = self.Q(u)
        ld = self.Ldisp(u)
        np_, nr = self.N_parts(u)
        return EnergyBreakdown(q, ld, np_, nr, ld - (np_ + nr))

    def energy(self, u: np.ndarray) -> float:
        return self.breakdown(u).e

    def gradient(self, u: np.ndarray) -> np.ndarray:
        return self.L(u) - self.nonlinear(u)

    def euler_lagrange(self, u: np.ndarray, nu: float) -> np.ndarray:
        return self.gradient(u) - nu * u


def _disc(u: Field, m: SymbolSpec, n: NonlinearitySpec | None, padding: int) -> Discretization:
    return Discretization(u.grid, m, n, padding)


def eval_Q(u: Field) -> float:
    return 0.5 * sp.lp_norm(u, 2) ** 2


def eval_Ldisp(u: Field, m: SymbolSpec) -> float:
    return Discretization(u.grid, m, None).Ldisp(u.values)


def eval_N(u: Field, n: NonlinearitySpec, padding: int = DEFAULT_PADDING) -> tuple[float, float]:
    """Return (N_p(u), N_r(u))."""
    g = u.grid
    big, ub = sp.interpolate(g, u.values, padding)
    hb = big.spacing
    return float(np.sum(n.N_p(ub)) * hb), float(np.sum(n.N_r(ub)) * hb)


def eval_E(u: Field, m: SymbolSpec, n: NonlinearitySpec,
           padding: int = DEFAULT_PADDING) -> EnergyBreakdown:
    return _disc(u, m, n, padding).breakdown(u.values)


def gradient_Q(u: Field) -> Field:
    return u.copy()


def gradient_Ldisp(u: Field, m: SymbolSpec) -> Field:
    return sp.apply_multiplier(m, u)


def gradient_N(u: Field, n: NonlinearitySpec, padding: int = DEFAULT_PADDING) -> Field:
    big, ub = sp.interpolate(u.grid, u.values, padding)
    return Field(u.grid, sp.truncate(u.grid, big, n(ub)))


def gradient_E(u: Field, m: SymbolSpec, n: NonlinearitySpec,
               padding: int = DEFAULT_PADDING) -> Field:
    return Field(u.grid, _disc(u, m, n, padding).gradient(u.values))


def lagrange_multiplier(u: Field, mu: float, m: SymbolSpec, n: NonlinearitySpec,
                        padding: int = DEFAULT_PADDING) -> float:
    """nu = <E'(u), u> / (2 mu)."""
    if not mu > 0:
        raise ValueError(f"mass mu must be positive, got {mu}")
    d = _disc(u, m, n, padding)
    return d.inner(d.gradient(u.values), u.values) / (2.0 * mu)


def el_field(u: Field, nu: float, m: SymbolSpec, n: NonlinearitySpec,
             padding: int = DEFAULT_PADDING) -> Field:
    """The Euler-Lagrange expression -nu u + L u - n(u)."""
    return Field(u.grid, _disc(u, m, n, padding).euler_lagrange(u.values, nu))


def el_residual(u: Field, nu: float, m: SymbolSpec, n: NonlinearitySpec,
                padding: int = DEFAULT_PADDING) -> float:
    """H^(-s/2) norm of -nu u + L u - n(u)."""
    return sp.sobolev_norm(el_field(u, nu, m, n, padding), -0.5 * m.s)


def el_residual_l2(u: Field, nu: float, m: SymbolSpec, n: NonlinearitySpec,
                   padding: int = DEFAULT_PADDING) -> float:
    return sp.lp_norm(el_field(u, nu, m, n, padding), 2)
