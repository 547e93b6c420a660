"""Pointwise and embedding inequalities the analysis relies on.

Four global Lipschitz bounds for algebraic functions of the slope, the three
discrete Sobolev embeddings used by the stability arguments, the periodic
Poincare inequality, and the norm ordering between the two phase-space norms.
Each check runs over a randomized batch and reports its worst slack
(bound minus value; the inequality holds when the slack stays above -1e-8).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import XVector, derivative, integrate, random_band_limited, second_derivative, x_norm, y_norm

SLACK_TOL = -1e-8


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst_slack: float
    count: int

    def as_json_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "worst_slack": self.worst_slack,
            "count": self.count,
        }


def _result(name: str, slacks: np.ndarray) -> CheckResult:
    worst = float(np.min(slacks))
    return CheckResult(name=name, passed=bool(worst >= SLACK_TOL), worst_slack=worst, count=int(slacks.size))


def lipschitz_bounds(rng: np.random.Generator, count: int = 10_000, box: float = 100.0) -> list[CheckResult]:
    """Global Lipschitz constants 1, 1, 3, 15 for the slope algebra.

    On random pairs (xi, eta) in [-box, box]^2:
      |sqrt(1+xi^2) - sqrt(1+eta^2)|         <= 1  * |xi - eta|
      |xi/sqrt(1+xi^2) - eta/sqrt(1+eta^2)|  <= 1  * |xi - eta|
      |(1+xi^2)^-3/2 - (1+eta^2)^-3/2|       <= 3  * |xi - eta|
      |xi*(1+xi^2)^-5/2 - eta*(1+eta^2)^-5/2| <= 15 * |xi - eta|
    """
    xi = rng.uniform(-box, box, size=count)
    eta = rng.uniform(-box, box, size=count)
    d = np.abs(xi - eta)
    vx = np.sqrt(1.0 + xi * xi)
    ve = np.sqrt(1.0 + eta * eta)
    checks = [
        ("lipschitz_area_element", 1.0, np.abs(vx - ve)),
        ("lipschitz_normalized_slope", 1.0, np.abs(xi / vx - eta / ve)),
        ("lipschitz_inverse_v3", 3.0, np.abs(1.0 / vx ** 3 - 1.0 / ve ** 3)),
        ("lipschitz_slope_v5", 15.0, np.abs(xi / vx ** 5 - eta / ve ** 5)),
    ]
    return [_result(name, c * d - lhs) for name, c, lhs in checks]


def sup_minus_mean_embedding(rng: np.random.Generator, count: int = 200, n: int = 256) -> CheckResult:
    """sup |f - mean(f)| <= L2 norm of f_x, over random band-limited f."""
    slacks = np.empty(count)
    for i in range(count):
        f = random_band_limited(rng, n, amplitude=float(rng.uniform(0.1, 2.0)))
        fx = derivative(f)
        sup = float(np.max(np.abs(f.values - f.values.mean())))
        slacks[i] = np.sqrt(integrate(fx * fx)) - sup
    return _result("embedding_sup_minus_mean", slacks)


def sup_x_embedding(rng: np.random.Generator, count: int = 200, n: int = 256) -> CheckResult:
    """sup |u| <= L2 norm of u_x for zero-mean u (the phase-space X control)."""
    slacks = np.empty(count)
    for i in range(count):
        u = random_band_limited(rng, n, amplitude=float(rng.uniform(0.1, 2.0)))
        ux = derivative(u)
        slacks[i] = np.sqrt(integrate(ux * ux)) - float(np.max(np.abs(u.values)))
    return _result("embedding_sup_x", slacks)


def gradient_sup_embedding(rng: np.random.Generator, count: int = 200, n: int = 256) -> CheckResult:
    """sup |u_x| <= ||u_xx|| + ||u_x|| <= sqrt(2) * H2 norm, both links checked."""
    slacks = np.empty(2 * count)
    for i in range(count):
        u = random_band_limited(rng, n, amplitude=float(rng.uniform(0.1, 2.0)))
        ux = derivative(u)
        uxx = second_derivative(u)
        n1 = np.sqrt(integrate(ux * ux))
        n2 = np.sqrt(integrate(uxx * uxx))
        h2 = np.sqrt(integrate(ux * ux) + integrate(uxx * uxx))
        slacks[2 * i] = (n2 + n1) - float(np.max(np.abs(ux)))
        slacks[2 * i + 1] = np.sqrt(2.0) * h2 - (n2 + n1)
    return _result("embedding_gradient_sup", slacks)


def periodic_poincare(rng: np.random.Generator, count: int = 200, n: int = 256) -> CheckResult:
    """int f_x^2 <= int f_xx^2 for smooth periodic f (lowest mode is 1)."""
    slacks = np.empty(count)
    for i in range(count):
        f = random_band_limited(rng, n, amplitude=float(rng.uniform(0.1, 2.0)))
        fx = derivative(f)
        fxx = second_derivative(f)
        slacks[i] = integrate(fxx * fxx) - integrate(fx * fx)
    return _result("poincare_periodic", slacks)


def norm_ordering(rng: np.random.Generator, count: int = 200, n: int = 256) -> CheckResult:
    """x_norm(v) <= y_norm(v) for random phase-space vectors."""
    slacks = np.empty(count)
    for i in range(count):
        h = random_band_limited(rng, n, amplitude=float(rng.uniform(0.1, 2.0)))
        v = XVector(h, float(rng.normal()))
        slacks[i] = y_norm(v) - x_norm(v)
    return _result("norm_ordering_x_le_y", slacks)


def run_all(rng: np.random.Generator, count_pairs: int = 10_000, count_funcs: int = 200, n: int = 256) -> list[CheckResult]:
    """The full battery in a deterministic order (one RNG stream)."""
    results = lipschitz_bounds(rng, count_pairs)
    results.append(sup_minus_mean_embedding(rng, count_funcs, n))
    results.append(sup_x_embedding(rng, count_funcs, n))
    results.append(gradient_sup_embedding(rng, count_funcs, n))
    results.append(periodic_poincare(rng, count_funcs, n))
    results.append(norm_ordering(rng, count_funcs, n))
    return results
