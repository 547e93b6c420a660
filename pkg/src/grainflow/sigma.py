"""Analytic energy-density models sigma(alpha) and their critical points.

Three closed-form families are shipped: a constant density, a trigonometric
one (base + amplitude*sin^2(frequency*alpha), the usual lattice-symmetry
shape), and a convex quadratic.  All expose derivatives up to third order
in closed form and a strictly positive floor c1 = min sigma.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# |sigma''| below this at a critical point flags it as degenerate
DEGENERACY_TOL = 1e-10

# kind codes shared with the compiled flow kernel
KIND_CONSTANT = 0
KIND_TRIG = 1
KIND_QUADRATIC = 2


@dataclass(frozen=True)
class Constant:
    """sigma(alpha) = c with c > 0.  Every alpha is a critical point."""

    c: float

    def __post_init__(self):
        if not (self.c > 0.0):
            raise ValueError(f"positivity floor violated: c = {self.c} must be > 0")

    def eval(self, alpha: float, order: int = 0) -> float:
        _check_order(order)
        return float(self.c) if order == 0 else 0.0

    @property
    def c1(self) -> float:
        return float(self.c)

    @property
    def is_flat(self) -> bool:
        return True

    def diff(self, a: float, b: float) -> float:
        return 0.0

    def max_reachable(self, alpha0: float) -> float:
        return float(self.c)

    def kernel_params(self):
        return KIND_CONSTANT, float(self.c), 0.0, 0.0

    def to_json_dict(self) -> dict:
        return {"kind": "constant", "c": float(self.c)}


@dataclass(frozen=True)
class TrigPeriodic:
    """sigma(alpha) = base + amplitude * sin^2(frequency * alpha).

    Periodic with period pi/frequency; the default frequency 2 gives the
    quarter-turn symmetry typical of grain-boundary energy densities.
    Minima sit at multiples of pi/(2 frequency) with sigma'' = 2*amplitude*
    frequency^2 > 0, maxima halfway between with the opposite sign.
    """

    base: float
    amplitude: float
    frequency: float = 2.0

    def __post_init__(self):
        if not (self.base > 0.0):
            raise ValueError(f"positivity floor violated: base = {self.base} must be > 0")
        if self.amplitude < 0.0:
            raise ValueError("amplitude must be >= 0")
        if not (self.frequency > 0.0):
            raise ValueError("frequency must be > 0")

    def eval(self, alpha: float, order: int = 0) -> float:
        _check_order(order)
        a, f = self.amplitude, self.frequency
        if order == 0:
            s = np.sin(f * alpha)
            return float(self.base + a * s * s)
        if order == 1:
            return float(a * f * np.sin(2.0 * f * alpha))
        if order == 2:
            return float(2.0 * a * f * f * np.cos(2.0 * f * alpha))
        return float(-4.0 * a * f ** 3 * np.sin(2.0 * f * alpha))

    @property
    def c1(self) -> float:
        return float(self.base)

    @property
    def is_flat(self) -> bool:
        return self.amplitude == 0.0

    def diff(self, a: float, b: float) -> float:
        """sigma(a) - sigma(b) in product form (no cancellation for a ~ b)."""
        f = self.frequency
        return float(self.amplitude * np.sin(f * (a + b)) * np.sin(f * (a - b)))

    def max_reachable(self, alpha0: float) -> float:
        return float(self.base + self.amplitude)

    def kernel_params(self):
        return KIND_TRIG, float(self.base), float(self.amplitude), float(self.frequency)

    def to_json_dict(self) -> dict:
        return {
            "kind": "trig_periodic",
            "base": float(self.base),
            "amplitude": float(self.amplitude),
            "frequency": float(self.frequency),
        }


@dataclass(frozen=True)
class QuadraticConvex:
    """sigma(alpha) = base + curvature * alpha^2 (convex, alpha*sigma' >= 0)."""

    base: float
    curvature: float

    def __post_init__(self):
        if not (self.base > 0.0):
            raise ValueError(f"positivity floor violated: base = {self.base} must be > 0")
        if self.curvature < 0.0:
            raise ValueError("curvature must be >= 0")

    def eval(self, alpha: float, order: int = 0) -> float:
        _check_order(order)
        if order == 0:
            return float(self.base + self.curvature * alpha * alpha)
        if order == 1:
            return float(2.0 * self.curvature * alpha)
        if order == 2:
            return float(2.0 * self.curvature)
        return 0.0

    @property
    def c1(self) -> float:
        return float(self.base)

    @property
    def is_flat(self) -> bool:
        return self.curvature == 0.0

    def diff(self, a: float, b: float) -> float:
        return float(self.curvature * (a - b) * (a + b))

    def max_reachable(self, alpha0: float) -> float:
        # |alpha| never grows under the descent dynamics of a convex density
        return self.eval(abs(alpha0), 0)

    def kernel_params(self):
        return KIND_QUADRATIC, float(self.base), float(self.curvature), 0.0

    def to_json_dict(self) -> dict:
        return {
            "kind": "quadratic_convex",
            "base": float(self.base),
            "curvature": float(self.curvature),
        }


SigmaModel = Constant | TrigPeriodic | QuadraticConvex


def _check_order(order: int) -> None:
    if order not in (0, 1, 2, 3):
        raise ValueError(f"derivative order must be 0..3, got {order}")


def sigma_from_json_dict(d: dict) -> SigmaModel:
    try:
        kind = d["kind"]
    except (KeyError, TypeError):
        raise ValueError("sigma descriptor must be an object with a 'kind' field")
    if kind == "constant":
        return Constant(float(d["c"]))
    if kind == "trig_periodic":
        return TrigPeriodic(
            float(d["base"]), float(d["amplitude"]), float(d.get("frequency", 2.0))
        )
    if kind == "quadratic_convex":
        return QuadraticConvex(float(d["base"]), float(d["curvature"]))
    raise ValueError(f"unknown sigma kind: {kind!r}")


def sampled_min(model: SigmaModel, lo: float = -4.0, hi: float = 4.0, count: int = 10_000) -> float:
    """Minimum of sigma over a dense alpha sample (positivity audit)."""
    a = np.linspace(lo, hi, count)
    if isinstance(model, TrigPeriodic):
        s = np.sin(model.frequency * a)
        vals = model.base + model.amplitude * s * s
    elif isinstance(model, QuadraticConvex):
        vals = model.base + model.curvature * a * a
    else:
        vals = np.full(count, model.c)
    return float(vals.min())


@dataclass(frozen=True)
class CriticalPoint:
    """A root of sigma' with its second-derivative value and degeneracy flag."""

    alpha_bar: float
    sigma_second: float
    degenerate: bool


class AllCritical:
    """Sentinel for flat models: every alpha is a critical point."""

    def __repr__(self):
        return "AllCritical()"


ALL_CRITICAL = AllCritical()


def _bisect(model: SigmaModel, lo: float, hi: float) -> float:
    """Bisection on sigma' down to machine-width brackets."""
    flo = model.eval(lo, 1)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fmid = model.eval(mid, 1)
        if fmid == 0.0:
            return mid
        if (flo < 0.0) == (fmid < 0.0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_critical_points(model: SigmaModel, interval: tuple[float, float]):
    """All roots of sigma' in [a, b], or the all-critical sentinel.

    Roots are bracketed by sign changes on a 10^4-point sample and polished
    by bisection until the bracket collapses to machine width, which leaves
    |sigma'| below 1e-12 at every returned point for the shipped families.
    """
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise ValueError(f"interval must satisfy a < b, got [{a}, {b}]")
    if model.is_flat:
        return ALL_CRITICAL

    grid = np.linspace(a, b, 10_000)
    vals = np.array([model.eval(t, 1) for t in grid])
    roots: list[float] = []
    for i in range(len(grid) - 1):
        lo, hi = vals[i], vals[i + 1]
        if lo == 0.0:
            roots.append(float(grid[i]))
        elif (lo < 0.0) != (hi < 0.0):
            roots.append(_bisect(model, float(grid[i]), float(grid[i + 1])))
    if vals[-1] == 0.0:
        roots.append(float(grid[-1]))

    # collapse near-duplicates (a sampled exact zero next to a bracket)
    out: list[CriticalPoint] = []
    for r in sorted(roots):
        if out and abs(r - out[-1].alpha_bar) < 1e-9:
            continue
        s2 = model.eval(r, 2)
        out.append(CriticalPoint(r, s2, abs(s2) < DEGENERACY_TOL))
    return out
