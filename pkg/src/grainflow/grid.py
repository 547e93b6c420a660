"""Periodic zero-mean grid functions on [0, 1) with spectral calculus.

Everything downstream (energy, flow, analysis) works with uniform samples
u_j = u(j/N) of 1-periodic functions whose mean has been subtracted.  The
derivative, second derivative and antiderivative are computed in Fourier
space, so they are exact for trigonometric polynomials of degree < N/2;
quadrature is the rectangle rule, which is spectrally accurate on the torus.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

MIN_N = 8


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _validate_n(n: int) -> None:
    if n < MIN_N or not _is_power_of_two(n):
        raise ValueError(
            f"grid size must be a power of two >= {MIN_N}, got {n}"
        )


@dataclass(frozen=True)
class GridFunction:
    """Samples of a zero-mean 1-periodic function at x_j = j/N.

    Invariants: n is a power of two >= 8, len(values) == n, and
    |mean(values)| <= 1e-13.  Use :func:`make_grid_function` to build one
    from arbitrary samples (it subtracts the mean for you).
    """

    values: np.ndarray
    n: int

    def __post_init__(self):
        _validate_n(self.n)
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.n,):
            raise ValueError(f"expected {self.n} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("samples must be finite")
        scale = float(np.max(np.abs(v))) if self.n else 0.0
        if abs(float(v.mean())) > 1e-13 * max(1.0, scale):
            raise ValueError("samples must have zero mean; use make_grid_function")
        object.__setattr__(self, "values", v)

    def to_json_dict(self) -> dict:
        return {"n": self.n, "values": self.values.tolist()}

    @staticmethod
    def from_json_dict(d: dict) -> "GridFunction":
        return GridFunction(np.asarray(d["values"], dtype=float), int(d["n"]))

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @staticmethod
    def from_json(s: str) -> "GridFunction":
        return GridFunction.from_json_dict(json.loads(s))


@dataclass(frozen=True)
class XVector:
    """Phase-space element (h, beta): a grid function paired with a scalar."""

    h: GridFunction
    beta: float


def grid_points(n: int) -> np.ndarray:
    """The sample locations x_j = j/n."""
    _validate_n(n)
    return np.arange(n) / n


def make_grid_function(samples) -> GridFunction:
    """Build a GridFunction from raw samples, subtracting their mean."""
    v = np.asarray(samples, dtype=float)
    if v.ndim != 1:
        raise ValueError("samples must be one-dimensional")
    _validate_n(v.size)
    if not np.all(np.isfinite(v)):
        raise ValueError("samples must be finite")
    v = v - v.mean()
    # a second pass kills the last few ulps of roundoff in the mean
    v = v - v.mean()
    return GridFunction(v, v.size)


def _wavenumbers(n: int) -> np.ndarray:
    """Angular wavenumbers 2*pi*k for the real FFT layout, k = 0..n/2."""
    return 2.0 * np.pi * np.arange(n // 2 + 1)


def derivative(u, scheme: str = "spectral") -> np.ndarray:
    """First derivative samples of a periodic function.

    `u` may be a GridFunction or a plain sample array.  The spectral scheme
    multiplies by i*k in Fourier space (Nyquist mode zeroed, as its
    derivative is not representable on the grid); the "central" scheme is a
    2nd-order centered difference kept for cross-validation.
    """
    v = u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)
    n = v.size
    if scheme == "central":
        return (np.roll(v, -1) - np.roll(v, 1)) * (0.5 * n)
    if scheme != "spectral":
        raise ValueError(f"unknown scheme {scheme!r}")
    fh = np.fft.rfft(v)
    fh *= 1j * _wavenumbers(n)
    fh[-1] = 0.0
    return np.fft.irfft(fh, n)


def second_derivative(u, scheme: str = "spectral") -> np.ndarray:
    """Second derivative samples (the first-derivative operator applied twice)."""
    v = u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)
    n = v.size
    if scheme == "central":
        return (np.roll(v, -1) - 2.0 * v + np.roll(v, 1)) * float(n * n)
    if scheme != "spectral":
        raise ValueError(f"unknown scheme {scheme!r}")
    fh = np.fft.rfft(v)
    fh *= -(_wavenumbers(n) ** 2)
    fh[-1] = 0.0
    return np.fft.irfft(fh, n)


def antiderivative(f) -> np.ndarray:
    """Zero-mean periodic antiderivative of the zero-mean part of f.

    In Fourier space the modes k >= 1 are divided by i*k and the k = 0 mode
    is dropped, so the result G satisfies G' = f - mean(f) and mean(G) = 0.
    """
    v = f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float)
    n = v.size
    fh = np.fft.rfft(v)
    k = _wavenumbers(n)
    fh[0] = 0.0
    fh[1:] /= 1j * k[1:]
    fh[-1] = 0.0
    return np.fft.irfft(fh, n)


def integrate(f) -> float:
    """Rectangle-rule integral over one period: (1/N) * sum of samples."""
    v = f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float)
    return float(v.mean())


def x_norm(vec: XVector) -> float:
    """sqrt( int (h_x)^2 dx + beta^2 ) — the H^1-seminorm-plus-scalar norm."""
    hx = derivative(vec.h)
    return float(np.sqrt(integrate(hx * hx) + vec.beta * vec.beta))


def y_norm(vec: XVector) -> float:
    """sqrt( int (h_x)^2 + int (h_xx)^2 dx + beta^2 )."""
    hx = derivative(vec.h)
    hxx = second_derivative(vec.h)
    return float(np.sqrt(integrate(hx * hx) + integrate(hxx * hxx) + vec.beta * vec.beta))


def random_band_limited(
    rng: np.random.Generator,
    n: int,
    max_mode: int | None = None,
    amplitude: float = 1.0,
) -> GridFunction:
    """Random zero-mean trigonometric polynomial with modes 1..max_mode.

    Coefficients are drawn uniformly and rescaled so the sup-norm is
    roughly `amplitude`.  Used throughout the test batches.
    """
    _validate_n(n)
    if max_mode is None:
        max_mode = n // 8
    max_mode = int(min(max_mode, n // 2 - 1))
    x = grid_points(n)
    v = np.zeros(n)
    for k in range(1, max_mode + 1):
        a, b = rng.uniform(-1.0, 1.0, size=2)
        v += a * np.cos(2.0 * np.pi * k * x) + b * np.sin(2.0 * np.pi * k * x)
    sup = np.max(np.abs(v))
    if sup > 0:
        v *= amplitude / sup
    return make_grid_function(v)
