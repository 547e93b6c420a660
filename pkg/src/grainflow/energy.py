"""The interface energy E[u, alpha] = sigma(alpha) * length(u) and its calculus.

The first variation on the phase space (u, alpha) has a closed form: the
u-component is sigma(alpha) times the zero-mean periodic antiderivative of
w = u_x / sqrt(1 + u_x^2), and the alpha-component is sigma'(alpha) times the
graph length.  The second (directional) derivative is implemented alongside,
collapsing to the diagonal map (h, beta) -> (sigma*h, sigma''*beta) at
critical points (u = 0, sigma'(alpha) = 0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (
    GridFunction,
    XVector,
    antiderivative,
    derivative,
    integrate,
    make_grid_function,
    second_derivative,
    x_norm,
    y_norm,
)
from .sigma import SigmaModel


@dataclass(frozen=True)
class EnergyGradient:
    """First variation of E: a zero-mean grid function plus a scalar slot."""

    u_part: GridFunction
    alpha_part: float

    def as_xvector(self) -> XVector:
        return XVector(self.u_part, self.alpha_part)


def length(u: GridFunction) -> float:
    """Graph length over one period: int sqrt(1 + u_x^2) dx (always >= 1)."""
    ux = derivative(u)
    return float(integrate(np.sqrt(1.0 + ux * ux)))


def length_excess(u: GridFunction) -> float:
    """length(u) - 1 computed without cancellation.

    Uses sqrt(1+s) - 1 = s / (1 + sqrt(1+s)) with s = u_x^2, so the result
    stays accurate down to ~1e-30 for nearly flat graphs.
    """
    ux = derivative(u)
    s = ux * ux
    return float(integrate(s / (1.0 + np.sqrt(1.0 + s))))


def energy(u: GridFunction, alpha: float, model: SigmaModel) -> float:
    """E[u, alpha] = sigma(alpha) * int sqrt(1 + u_x^2) dx."""
    return model.eval(alpha, 0) * length(u)


def energy_gap(u: GridFunction, alpha: float, model: SigmaModel, alpha_bar: float) -> float:
    """E[u, alpha] - E[0, alpha_bar], cancellation-free.

    Splits the gap into sigma(alpha)*(L - 1) + (sigma(alpha) - sigma(alpha_bar))
    with both pieces evaluated in forms that avoid subtracting nearly equal
    quantities, so gaps far below machine epsilon relative to E are exact.
    """
    return model.eval(alpha, 0) * length_excess(u) + model.diff(alpha, alpha_bar)


def frechet_derivative(u: GridFunction, alpha: float, model: SigmaModel) -> EnergyGradient:
    """First variation of E at (u, alpha).

    u-part: sigma(alpha) * (zero-mean antiderivative of w), w = u_x/sqrt(1+u_x^2);
    alpha-part: sigma'(alpha) * length.  The antiderivative drops the mean of w
    (only the zero-mean part of w is visible against periodic directions).
    """
    ux = derivative(u)
    v = np.sqrt(1.0 + ux * ux)
    w = ux / v
    up = model.eval(alpha, 0) * antiderivative(w)
    ap = model.eval(alpha, 1) * float(integrate(v))
    return EnergyGradient(make_grid_function(up), ap)


def gateaux_second_derivative(
    u: GridFunction,
    alpha: float,
    h: GridFunction,
    beta: float,
    model: SigmaModel,
) -> EnergyGradient:
    """Directional derivative of the energy gradient at (u, alpha) along (h, beta).

    u-part: antiderivative of [ sigma'(alpha)*beta*w + sigma(alpha)*h_x/v^3 ],
    mean dropped; alpha-part: sigma''(alpha)*beta*L + sigma'(alpha)*int u_x h_x / v.
    At a critical point this reduces to (sigma(a)*h, sigma''(a)*beta).
    """
    ux = derivative(u)
    hx = derivative(h)
    v = np.sqrt(1.0 + ux * ux)
    w = ux / v
    integrand = model.eval(alpha, 1) * beta * w + model.eval(alpha, 0) * hx / (v * v * v)
    up = antiderivative(integrand)
    ap = model.eval(alpha, 2) * beta * float(integrate(v)) + model.eval(alpha, 1) * float(
        integrate(ux * hx / v)
    )
    return EnergyGradient(make_grid_function(up), ap)


def critical_manifold_check(u: GridFunction, alpha: float, model: SigmaModel) -> bool:
    """True iff (u, alpha) sits on the critical manifold {u = 0, sigma'(alpha) = 0}.

    u is tested in the discrete H^2 norm (tolerance 1e-10); flat models accept
    every alpha.
    """
    vals = u.values
    ux = derivative(u)
    uxx = second_derivative(u)
    h2 = np.sqrt(integrate(vals * vals) + integrate(ux * ux) + integrate(uxx * uxx))
    if h2 > 1e-10:
        return False
    return model.is_flat or abs(model.eval(alpha, 1)) <= 1e-10


def gradient_x_norm(g: EnergyGradient) -> float:
    return x_norm(g.as_xvector())


def gradient_y_norm(g: EnergyGradient) -> float:
    return y_norm(g.as_xvector())
