"""Periodic grids, discrete Fourier transforms and Fourier-multiplier algebra.

The line is truncated to the box [-l, l) sampled at M equispaced nodes.  Spectra
approximate the unitary continuous transform

    f^(xi) = (2 pi)^(-1/2) * int f(x) exp(-i x xi) dx

so that, with quadrature weights ``dxi = pi / l``, the discrete Parseval identity
``h * sum |f_j|^2 == dxi * sum |f^_k|^2`` holds exactly (up to round-off).
Coefficients are stored in numpy FFT order (k = 0, 1, ..., -1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class ConfigurationError(ValueError):
    """Raised for invalid numerical or model configuration."""


@dataclass(frozen=True)
class Grid:
    half_length: float
    modes: int

    def __post_init__(self):
        if not np.isfinite(self.half_length) or self.half_length <= 0:
            raise ConfigurationError(f"grid half-length must be positive, got {self.half_length}")
        if int(self.modes) != self.modes or self.modes % 2 != 0:
            raise ConfigurationError(f"number of modes must be an even integer, got {self.modes}")
        if self.modes < 8:
            raise ConfigurationError(f"number of modes must be at least 8, got {self.modes}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / self.modes

    @property
    def length(self) -> float:
        return 2.0 * self.half_length

    @property
    def dxi(self) -> float:
        return np.pi / self.half_length

    @cached_property
    def x(self) -> np.ndarray:
        x = -self.half_length + self.spacing * np.arange(self.modes)
        x.setflags(write=False)
        return x

    @cached_property
    def k(self) -> np.ndarray:
        k = np.fft.fftfreq(self.modes, 1.0 / self.modes).astype(int)
        k.setflags(write=False)
        return k

    @cached_property
    def xi(self) -> np.ndarray:
        xi = np.pi * self.k / self.half_length
        xi.setflags(write=False)
        return xi

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.modes, self.spacing)
        w.setflags(write=False)
        return w

    @cached_property
    def _phase(self) -> np.ndarray:
        # exp(-i xi_k x_0) with x_0 = -l equals (-1)^k
        ph = np.where(self.k % 2 == 0, 1.0, -1.0)
        ph.setflags(write=False)
        return ph

    @property
    def nyquist(self) -> int:
        return self.modes // 2

    def padded(self, factor: int) -> "Grid":
        return Grid(self.half_length, self.modes * factor)

    def scaled(self, half_length: float) -> "Grid":
        return Grid(half_length, self.modes)


def make_grid(half_length: float, modes: int) -> Grid:
    return Grid(float(half_length), int(modes))


@dataclass(frozen=True)
class Spectrum:
    grid: Grid
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.shape != (self.grid.modes,):
            raise ValueError(f"expected {self.grid.modes} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    def at(self, k: int) -> complex:
        return complex(self.coefficients[k % self.grid.modes])


@dataclass
class Field:
    grid: Grid
    values: np.ndarray
    _spectrum: Spectrum | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.modes,):
            raise ValueError(f"expected {self.grid.modes} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        self.values = v

    @classmethod
    def from_function(cls, grid: Grid, f) -> "Field":
        return cls(grid, np.asarray(f(grid.x), dtype=float))

    @property
    def spectrum(self) -> Spectrum:
        if self._spectrum is None:
            self._spectrum = transform(self)
        return self._spectrum

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def __add__(self, other: "Field") -> "Field":
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        return Field(self.grid, self.values - other.values)

    def __mul__(self, a: float) -> "Field":
        return Field(self.grid, a * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values)


def forward(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Raw forward transform of samples to Parseval-normalized coefficients."""
    return np.fft.fft(values) * (grid.spacing / np.sqrt(2 * np.pi)) * grid._phase


def backward(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`forward`, returning real samples."""
    raw = np.fft.ifft(coeffs * grid._phase) * (np.sqrt(2 * np.pi) / grid.spacing)
    return raw.real


def transform(f: Field) -> Spectrum:
    return Spectrum(f.grid, forward(f.grid, f.values))


def inverse_transform(F: Spectrum) -> Field:
    return Field(F.grid, backward(F.grid, F.coefficients))


def symbol_values(m, grid: Grid) -> np.ndarray:
    """Evaluate a symbol on the grid wavenumbers, aborting on non-finite values."""
    vals = np.asarray(m(grid.xi), dtype=float)
    bad = ~np.isfinite(vals)
    if bad.any():
        xi_bad = grid.xi[np.argmax(bad)]
        raise FloatingPointError(f"symbol is not finite at xi = {xi_bad!r}")
    return vals


def multiply(grid: Grid, multiplier: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Apply a diagonal multiplier given by its values on grid.xi."""
    return np.fft.ifft(np.fft.fft(values) * multiplier).real


def apply_multiplier(m, f: Field) -> Field:
    """Return the field whose spectrum is m(xi_k) * f^(xi_k).

    ``m`` is a :class:`~solwave.model.SymbolSpec` or any callable of xi.
    """
    mv = symbol_values(m, f.grid)
    return Field(f.grid, multiply(f.grid, mv, f.values))


def bracket(xi: np.ndarray) -> np.ndarray:
    return np.sqrt(1.0 + xi * xi)


def sobolev_norm(f: Field, alpha: float) -> float:
    """H^alpha norm ``|| <xi>^alpha f^ ||_2`` with the discrete Parseval weights."""
    g = f.grid
    c = f.spectrum.coefficients
    w = bracket(g.xi) ** (2.0 * alpha)
    return float(np.sqrt(np.sum(w * np.abs(c) ** 2) * g.dxi))


def sobolev_norm_values(grid: Grid, values: np.ndarray, alpha: float) -> float:
    c = forward(grid, values)
    return float(np.sqrt(np.sum(bracket(grid.xi) ** (2.0 * alpha) * np.abs(c) ** 2) * grid.dxi))


def inner(f: Field, g: Field) -> float:
    return float(np.dot(f.values, g.values) * f.grid.spacing)


def lp_norm(f: Field, q: float) -> float:
    if q < 1:
        raise ValueError(f"lp_norm requires q >= 1, got {q}")
    if np.isinf(q):
        return float(np.max(np.abs(f.values)))
    return float((np.sum(np.abs(f.values) ** q) * f.grid.spacing) ** (1.0 / q))


def zero_nyquist(grid: Grid, values: np.ndarray) -> np.ndarray:
    c = np.fft.fft(values)
    c[grid.nyquist] = 0.0
    return np.fft.ifft(c).real


def interpolate(grid: Grid, values: np.ndarray, factor: int) -> tuple[Grid, np.ndarray]:
    """Zero-pad the spectrum to ``factor * M`` modes (the Nyquist mode is dropped)."""
    if factor == 1:
        return grid, zero_nyquist(grid, values)
    M = grid.modes
    big = grid.padded(factor)
    c = np.fft.fft(values)
    C = np.zeros(big.modes, dtype=complex)
    half = M // 2
    C[:half] = c[:half]
    C[-half + 1:] = c[-half + 1:]
    return big, np.fft.ifft(C).real * factor


def truncate(grid: Grid, big: Grid, values: np.ndarray) -> np.ndarray:
    """Adjoint-consistent restriction from the padded grid: keep |k| < M/2."""
    if big.modes == grid.modes:
        return zero_nyquist(grid, values)
    factor = big.modes // grid.modes
    C = np.fft.fft(values)
    M = grid.modes
    half = M // 2
    c = np.zeros(M, dtype=complex)
    c[:half] = C[:half]
    c[-half + 1:] = C[-half + 1:]
    return np.fft.ifft(c).real / factor


def shift(f: Field, dx: float) -> Field:
    """Translate by dx: returns g(x) = f(x - dx) on the periodic box.

    Whole-cell shifts are exact rolls; the fractional remainder is applied as a
    spectral phase with the Nyquist mode removed.
    """
    g = f.grid
    cells = dx / g.spacing
    n = int(np.round(cells))
    vals = np.roll(f.values, n)
    frac = (cells - n) * g.spacing
    if frac != 0.0:
        c = np.fft.fft(vals) * np.exp(-1j * g.xi * frac)
        c[g.nyquist] = 0.0
        vals = np.fft.ifft(c).real
    return Field(g, vals)


def peak_location(f: Field, polarity: float | None = None) -> float:
    """Sub-grid location of the extremum via 3-point quadratic interpolation.

    With ``polarity`` None the maximizer of |f| is used, otherwise the
    maximizer of ``polarity * f``.
    """
    v = f.values if polarity is None else np.sign(polarity) * f.values
    a = np.abs(v) if polarity is None else v
    j = int(np.argmax(a))
    M = f.grid.modes
    ym, y0, yp = a[(j - 1) % M], a[j], a[(j + 1) % M]
    denom = ym - 2 * y0 + yp
    offset = 0.0
    if denom < 0:
        offset = 0.5 * (ym - yp) / denom
        offset = float(np.clip(offset, -0.5, 0.5))
    g = f.grid
    x0 = float(g.x[j] + offset * g.spacing)
    # polish with Newton steps on the trigonometric interpolant
    c = np.fft.fft(a) / M
    kk = np.fft.fftfreq(M, 1.0 / M) * (np.pi / g.half_length)
    kk[g.nyquist] = 0.0
    for _ in range(4):
        e = np.exp(1j * kk * (x0 + g.half_length))
        d1 = float(np.real(np.sum(1j * kk * c * e)))
        d2 = float(np.real(np.sum(-kk * kk * c * e)))
        if d2 >= 0:
            break
        step = -d1 / d2
        if abs(step) > g.spacing:
            break
        x0 += step
        if abs(step) < 1e-15 * max(1.0, abs(x0)):
            break
    return x0


def recenter(f: Field, polarity: float | None = None) -> Field:
    """Circularly shift ``f`` so that its peak sits at x = 0."""
    x0 = peak_location(f, polarity)
    return shift(f, -x0)


def tail_fraction(f: Field) -> float:
    """Mass 0.5*int u^2 on |x| > l/2 (apply after recentering)."""
    g = f.grid
    mask = np.abs(g.x) > 0.5 * g.half_length
    return float(0.5 * np.sum(f.values[mask] ** 2) * g.spacing)
