"""Dispersion symbols, nonlinearities and sampled checks of their hypotheses.

A model is a pair (m, n): an even symbol m with growth orders s (high
frequency) and s' (low frequency), and a nonlinearity n = n_p + n_r whose
homogeneous part is ``c|x|^(1+p)`` (form A1) or ``c x|x|^p`` with c > 0
(form A2) and whose remainder is O(|x|^(1+r)) with r > p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .spectral import ConfigurationError

WHITHAM_T_MIN = 1.0 / 3.0
FKDV_ALPHA_MIN = 1.0 / 3.0


@dataclass(frozen=True)
class SymbolSpec:
    """An even dispersion symbol together with its declared growth orders."""

    id: str
    eval: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    s: float
    s_prime: float
    m0: float
    params: dict = field(default_factory=dict, compare=False)
    shift: float = 0.0
    excess_eval: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False,
                                                                    compare=False)

    def __call__(self, xi):
        return self.eval(np.asarray(xi, dtype=float))

    def excess(self, xi):
        """m(xi) - m(0), evaluated without cancellation when a formula is available."""
        xi = np.asarray(xi, dtype=float)
        if self.excess_eval is not None:
            return self.excess_eval(xi)
        return self.eval(xi) - self.m0

    def reduced(self) -> "SymbolSpec":
        """Alias of :func:`shift_symbol`."""
        return shift_symbol(self)


# Taylor coefficients of tanh(x)/x in powers of x^2
_TANH_SERIES = (1.0, -1 / 3, 2 / 15, -17 / 315, 62 / 2835, -1382 / 155925, 21844 / 6081075)
_SERIES_CUT = 0.05


def _tanh_over_xi(xi: np.ndarray) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    small = np.abs(xi) < 1e-4
    safe = np.where(small, 1.0, xi)
    x2 = xi * xi
    return np.where(small, 1.0 - x2 / 3.0 + 2.0 * x2 * x2 / 15.0, np.tanh(safe) / safe)


def whitham_symbol(T: float, allow_weak_tension: bool = False) -> SymbolSpec:
    """Capillary-gravity Whitham symbol ``((1 + T xi^2) tanh(xi)/xi)^(1/2)``.

    The low-frequency order is 2, except at T = 1/3 where the xi^2 term of
    m - 1 cancels and the order becomes 4.
    """
    if not np.isfinite(T) or T < 0:
        raise ConfigurationError(f"surface tension must be non-negative, got T={T}")
    if T < WHITHAM_T_MIN and not allow_weak_tension:
        raise ConfigurationError(
            f"weak surface tension T={T} < 1/3 is outside the strong-tension existence "
            "regime; pass allow_weak_tension to override"
        )

    def m(xi):
        return np.sqrt((1.0 + T * xi * xi) * _tanh_over_xi(xi))

    # m^2 - 1 = sum_k (a_k + T a_{k-1}) xi^(2k); near 0 sum the series directly
    coeffs = [a + T * b for a, b in zip(_TANH_SERIES[1:], _TANH_SERIES[:-1])]

    def excess(xi):
        small = np.abs(xi) < _SERIES_CUT
        x2 = np.where(small, xi * xi, 0.0)
        ser = np.zeros_like(x2)
        for c in reversed(coeffs):
            ser = (ser + c) * x2
        full = m(xi)
        sq = np.where(small, ser, full * full - 1.0)
        return sq / (np.where(small, np.sqrt(1.0 + ser), full) + 1.0)

    s_prime = 4.0 if abs(T - WHITHAM_T_MIN) < 1e-14 else 2.0
    return SymbolSpec("whitham", m, s=0.5, s_prime=s_prime, m0=1.0, params={"T": T},
                      excess_eval=excess)


def fkdv_symbol(alpha: float) -> SymbolSpec:
    """Homogeneous symbol ``|xi|^alpha`` (alpha = 2 is KdV)."""
    if not np.isfinite(alpha) or alpha <= FKDV_ALPHA_MIN:
        raise ConfigurationError(
            f"fractional KdV order alpha={alpha} must exceed 1/3: below this value "
            "the homogeneous equation has no solitary waves"
        )
    if alpha == 2.0:
        return SymbolSpec("fkdv", lambda xi: xi * xi, s=2.0, s_prime=2.0, m0=0.0,
                          params={"alpha": alpha})
    return SymbolSpec("fkdv", lambda xi: np.abs(xi) ** alpha, s=alpha, s_prime=alpha,
                      m0=0.0, params={"alpha": alpha})


def constant_symbol(value: float) -> SymbolSpec:
    """m(xi) = value.  Not a valid dispersion for existence, but useful as a probe."""
    return SymbolSpec("constant", lambda xi: np.full(np.shape(xi), float(value)),
                      s=1.0, s_prime=1.0, m0=float(value), params={"value": value})


def tabulated_symbol(xi, values, s: float, s_prime: float, name: str = "tabulated") -> SymbolSpec:
    """Cubic-spline symbol through (|xi|, m) pairs.

    Beyond the last tabulated wavenumber the symbol continues as
    ``m0 + (m_last - m0) (|xi| / xi_last)^s``.
    """
    xi = np.abs(np.asarray(xi, dtype=float))
    values = np.asarray(values, dtype=float)
    order = np.argsort(xi)
    xi, values = xi[order], values[order]
    xi, idx = np.unique(xi, return_index=True)
    values = values[idx]
    if xi.size < 4 or xi[0] != 0.0:
        raise ConfigurationError("tabulated symbol needs >= 4 points including xi = 0")
    spline = CubicSpline(xi, values, bc_type=((1, 0.0), "not-a-knot"))
    m0 = float(values[0])
    last, mlast = xi[-1], values[-1]

    def m(q):
        a = np.abs(q)
        inside = np.minimum(a, last)
        out = spline(inside)
        return np.where(a <= last, out, m0 + (mlast - m0) * (a / last) ** s)

    return SymbolSpec(name, m, s=s, s_prime=s_prime, m0=m0,
                      params={"points": int(xi.size)})


def shift_symbol(m: SymbolSpec) -> SymbolSpec:
    """Subtract m(0), so the returned symbol vanishes at the origin."""
    if m.m0 == 0.0:
        return m
    m0 = m.m0
    f = m.eval

    def mt(xi):
        return f(xi) - m0

    return SymbolSpec(m.id, mt, s=m.s, s_prime=m.s_prime, m0=0.0, params=dict(m.params),
                      shift=m.shift + m0, excess_eval=m.excess_eval)


def beta_exponent(s_prime: float, p: float) -> float:
    """Scaling exponent s'p / (2 s' - p)."""
    return s_prime * p / (2.0 * s_prime - p)


@dataclass
class GrowthReport:
    low_ratio: tuple[float, float]
    high_ratio: tuple[float, float]
    passed: bool
    messages: list[str] = field(default_factory=list)
    witness: float | None = None

    def to_dict(self):
        return {
            "low_ratio": list(self.low_ratio),
            "high_ratio": list(self.high_ratio),
            "passed": self.passed,
            "messages": list(self.messages),
            "witness": self.witness,
        }


def _ratio_band(m: SymbolSpec, xi: np.ndarray, order: float, label: str, ratio_bound: float):
    with np.errstate(over="ignore", invalid="ignore"):
        plus = m.excess(xi)
        minus = m.excess(-xi)
        ratio = plus / xi ** order
    msgs = []
    witness = None
    if not np.all(np.isfinite(plus)):
        j = int(np.argmax(~np.isfinite(plus)))
        witness = float(xi[j])
        msgs.append(f"{label}: symbol not finite at xi={witness:.6g}")
        return (float("nan"), float("nan")), False, msgs, witness
    if not np.allclose(plus, minus, rtol=1e-12, atol=1e-14):
        j = int(np.argmax(np.abs(plus - minus)))
        witness = float(xi[j])
        msgs.append(f"{label}: symbol not even at xi={witness:.6g}")
        return (float(np.min(ratio)), float(np.max(ratio))), False, msgs, witness
    lo, hi = float(np.min(ratio)), float(np.max(ratio))
    ok = True
    if not (np.isfinite(lo) and np.isfinite(hi)):
        j = int(np.argmax(~np.isfinite(ratio)))
        witness = float(xi[j])
        msgs.append(f"{label}: ratio not finite at xi={witness:.6g}")
        ok = False
    elif lo <= 0:
        j = int(np.argmin(ratio))
        witness = float(xi[j])
        msgs.append(f"{label}: ratio degenerates to {lo:.3g} at xi={witness:.6g}")
        ok = False
    elif hi / lo >= ratio_bound:
        j = int(np.argmax(ratio))
        witness = float(xi[j])
        msgs.append(f"{label}: ratio spread {hi / lo:.3g} exceeds {ratio_bound:g} "
                    f"(max at xi={witness:.6g})")
        ok = False
    return (lo, hi), ok, msgs, witness


def check_assumption_B(m: SymbolSpec, xi_max: float = 100.0, samples: int = 512,
                       nonlinearity: "NonlinearitySpec | None" = None,
                       ratio_bound: float = 1e3, xi_min: float = 1e-4) -> GrowthReport:
    """Sampled check of the two-sided power growth of m - m(0).

    ``samples`` is the number of log-spaced points per dyadic band.
    """
    if xi_max <= 1:
        raise ValueError("xi_max must exceed 1")
    if samples < 100:
        raise ValueError("at least 100 samples per band are required")
    n_low = int(samples * math.ceil(math.log2(1.0 / xi_min)))
    n_high = int(samples * max(1, math.ceil(math.log2(xi_max))))
    low_xi = np.logspace(math.log10(xi_min), 0.0, n_low, endpoint=False)
    high_xi = np.logspace(0.0, math.log10(xi_max), n_high + 1)[1:]
    lo_r, lo_ok, lo_msg, lo_w = _ratio_band(m, low_xi, m.s_prime, "|xi|<1", ratio_bound)
    hi_r, hi_ok, hi_msg, hi_w = _ratio_band(m, high_xi, m.s, "|xi|>1", ratio_bound)
    msgs = lo_msg + hi_msg
    ok = lo_ok and hi_ok
    if nonlinearity is not None:
        p = nonlinearity.p
        if not m.s_prime > p / 2:
            msgs.append(f"low-frequency order s'={m.s_prime} must exceed p/2={p / 2:g}")
            ok = False
        if not m.s > p / (2 + p):
            msgs.append(f"high-frequency order s={m.s} must exceed p/(2+p)={p / (2 + p):g}")
            ok = False
    return GrowthReport(lo_r, hi_r, ok, msgs, lo_w if lo_w is not None else hi_w)


@dataclass
class ModulusReport:
    offsets: list[float]
    omega: list[float]
    uniformly_continuous: bool
    message: str = ""

    def pairs(self):
        return list(zip(self.offsets, self.omega))

    def to_dict(self):
        return {"offsets": self.offsets, "omega": self.omega,
                "uniformly_continuous": self.uniformly_continuous, "message": self.message}


def modulus_estimate(m: SymbolSpec, offsets, xi_max: float = 50.0, spacing: float = 1e-2,
                     vanish_fraction: float = 0.1) -> ModulusReport:
    """Empirical continuity modulus of m relative to the H^(s/2) weights.

    omega(t) = sup_xi |m(xi) - m(xi - t)| / (<xi>^(s/2) <xi - t>^(s/2)), the sup
    taken over a uniform xi-grid on [-xi_max, xi_max] whose spacing is refined
    to t/4 for small offsets.  The modulus is flagged when it does not
    decrease toward zero with the offset.
    """
    offsets = [float(t) for t in offsets]
    half_s = 0.5 * m.s
    omega = []
    for t in offsets:
        if t == 0.0:
            omega.append(0.0)
            continue
        d = min(spacing, abs(t) / 4.0)
        n = int(2 * xi_max / d) + 1
        xi = np.linspace(-xi_max, xi_max, n)
        w = (1 + xi * xi) ** (half_s / 2) * (1 + (xi - t) ** 2) ** (half_s / 2)
        omega.append(float(np.max(np.abs(m(xi) - m(xi - t)) / w)))
    nz = sorted((abs(t), w) for t, w in zip(offsets, omega) if t != 0.0)
    ok = True
    msg = ""
    if len(nz) >= 2:
        ws = [w for _, w in nz]
        for a, b in zip(ws, ws[1:]):
            if a > b * (1 + 1e-6) + 1e-15:
                ok = False
                msg = "modulus increases as the offset shrinks"
                break
        if ok and ws[0] > vanish_fraction * ws[-1]:
            ok = False
            msg = (f"modulus does not vanish: omega({nz[0][0]:g})={ws[0]:.3g} vs "
                   f"omega({nz[-1][0]:g})={ws[-1]:.3g}")
    return ModulusReport(offsets, omega, ok, msg)


# --- nonlinearities -------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


@dataclass(frozen=True)
class Remainder:
    """Higher-order part n_r with |n_r(x)| = O(|x|^(1+r))."""

    func: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    r: float
    primitive: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False,
                                                                  compare=False)
    label: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def witness(self) -> float:
        x = np.logspace(-6, 0, 2000)
        x = np.concatenate([-x, x])
        return float(np.max(np.abs(self.func(x)) / np.abs(x) ** (1 + self.r)))


def monomial_remainder(coeff: float, power: int) -> Remainder:
    """n_r(x) = coeff * x^power for an integer power >= 2, so r = power - 1."""
    power = int(power)
    if power < 2:
        raise ConfigurationError(f"monomial remainder needs power >= 2, got {power}")
    return Remainder(lambda x: coeff * x ** power, r=float(power - 1),
                     primitive=lambda x: coeff * x ** (power + 1) / (power + 1),
                     label="monomial", params={"coeff": coeff, "power": power})


def power_remainder(coeff: float, r: float, odd: bool = False) -> Remainder:
    """n_r(x) = coeff |x|^(1+r), or coeff x|x|^r when ``odd``."""
    if odd:
        return Remainder(lambda x: coeff * x * np.abs(x) ** r, r=r,
                         primitive=lambda x: coeff * np.abs(x) ** (2 + r) / (2 + r),
                         label="power", params={"coeff": coeff, "r": r, "odd": True})
    return Remainder(lambda x: coeff * np.abs(x) ** (1 + r), r=r,
                     primitive=lambda x: coeff * x * np.abs(x) ** (1 + r) / (2 + r),
                     label="power", params={"coeff": coeff, "r": r, "odd": False})


@dataclass(frozen=True)
class NonlinearitySpec:
    form: str
    c: float
    p: float
    remainder: Remainder | None = None
    cutoff_applied: bool = False

    @property
    def r(self) -> float | None:
        return None if self.remainder is None else self.remainder.r

    @property
    def polarity(self) -> float:
        """Sign of the solitary profile: the homogeneous part is focusing for c*u >= 0."""
        return -1.0 if self.c < 0 else 1.0

    def homogeneous(self, x):
        x = np.asarray(x, dtype=float)
        if self.form == "A1":
            return self.c * np.abs(x) ** (1 + self.p)
        return self.c * x * np.abs(x) ** self.p

    def homogeneous_primitive(self, x):
        x = np.asarray(x, dtype=float)
        if self.form == "A1":
            return self.c * x * np.abs(x) ** (1 + self.p) / (2 + self.p)
        return self.c * np.abs(x) ** (2 + self.p) / (2 + self.p)

    def rem(self, x):
        x = np.asarray(x, dtype=float)
        if self.remainder is None:
            return np.zeros_like(x)
        return np.asarray(self.remainder.func(x), dtype=float)

    def rem_primitive(self, x):
        x = np.asarray(x, dtype=float)
        if self.remainder is None:
            return np.zeros_like(x)
        if self.remainder.primitive is not None:
            return np.asarray(self.remainder.primitive(x), dtype=float)
        if x.ndim == 0:
            return np.asarray(integrate.quad(self.remainder.func, 0.0, float(x),
                                             epsabs=1e-15, epsrel=1e-12)[0])
        # vectorized fixed Gauss-Legendre rule on [0, x]
        t = 0.5 * (_GL_NODES + 1.0)
        vals = self.remainder.func(x[..., None] * t)
        return 0.5 * x * (vals @ _GL_WEIGHTS)

    def _parts(self, x):
        x = np.asarray(x, dtype=float)
        if not self.cutoff_applied:
            return x, None
        return np.clip(x, -1.0, 1.0), x

    def n_p(self, x):
        xc, _ = self._parts(x)
        return self.homogeneous(xc)

    def n_r(self, x):
        xc, _ = self._parts(x)
        return self.rem(xc)

    def __call__(self, x):
        xc, _ = self._parts(x)
        return self.homogeneous(xc) + self.rem(xc)

    def N_p(self, x):
        xc, x0 = self._parts(x)
        out = self.homogeneous_primitive(xc)
        if x0 is not None:
            out = out + self.homogeneous(xc) * (x0 - xc)
        return out

    def N_r(self, x):
        xc, x0 = self._parts(x)
        out = self.rem_primitive(xc)
        if x0 is not None:
            out = out + self.rem(xc) * (x0 - xc)
        return out

    def N(self, x):
        return self.N_p(x) + self.N_r(x)

    def derivative(self, x, h: float = 1e-7):
        x = np.asarray(x, dtype=float)
        return (self(x + h) - self(x - h)) / (2 * h)

    def describe(self) -> dict:
        d = {"form": self.form, "c": self.c, "p": self.p, "cutoff_applied": self.cutoff_applied}
        if self.remainder is not None:
            d["remainder"] = {"kind": self.remainder.label, "r": self.remainder.r,
                              **self.remainder.params}
        return d


def make_nonlinearity(form: str, c: float, p: float,
                      remainder: Remainder | None = None) -> NonlinearitySpec:
    form = str(form).upper()
    if form not in ("A1", "A2"):
        raise ConfigurationError(f"nonlinearity form must be A1 or A2, got {form!r}")
    if not np.isfinite(p) or p <= 0:
        raise ConfigurationError(f"homogeneity exponent p must be positive, got {p}")
    if not np.isfinite(c) or c == 0:
        raise ConfigurationError("homogeneous coefficient c must be non-zero")
    if form == "A2" and c <= 0:
        raise ConfigurationError(
            f"form A2 with c={c} <= 0 is the excluded defocusing regime: the "
            "variational method breaks down there"
        )
    if remainder is not None and not remainder.r > p:
        raise ConfigurationError(
            f"remainder exponent r={remainder.r} must exceed p={p}"
        )
    return NonlinearitySpec(form, float(c), float(p), remainder)


def primitive_N(n: NonlinearitySpec, x):
    """N(x) = int_0^x n(t) dt, split as N_p + N_r."""
    out = n.N(x)
    return float(out) if np.ndim(out) == 0 else out


def cutoff_nonlinearity(n: NonlinearitySpec) -> NonlinearitySpec:
    """Freeze n outside [-1, 1] at n(+-1), making it globally Lipschitz."""
    if n.cutoff_applied:
        return n
    return replace(n, cutoff_applied=True)


def lipschitz_estimate(n: NonlinearitySpec, radius: float = 1.0, samples: int = 20001) -> float:
    x = np.linspace(-radius, radius, samples)
    v = n(x)
    return float(np.max(np.abs(np.diff(v)) / np.diff(x)))
