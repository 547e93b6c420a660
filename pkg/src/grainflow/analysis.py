"""Lojasiewicz-type inequality fitting and its two downstream estimates.

Near a critical point the energy gradient controls the energy gap through
||grad E||_Y >= C2 * |E - E*|^(1-theta) with theta in (0, 1/2].  This module
samples random perturbations in a Y-norm ball, fits the realized exponent by
log-log regression, and uses the fitted (theta, C2) to audit the trajectory
stability bound and the graph-length estimate.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .energy import (
    critical_manifold_check,
    energy_gap,
    frechet_derivative,
    gradient_y_norm,
    length,
)
from .flow import State, Trajectory
from .grid import GridFunction, XVector, derivative, grid_points, integrate, make_grid_function, y_norm
from .sigma import ALL_CRITICAL, SigmaModel, find_critical_points

log = logging.getLogger("grainflow.analysis")

GAP_FLOOR = 1e-14


@dataclass(frozen=True)
class LsFit:
    """Fitted gradient-inequality exponent and constant.

    slope is the raw log-log regression slope (an estimate of 1 - theta);
    theta is the clamped exponent in (0, 1/2]; c_constant is the empirical
    minimum of ||grad||_Y / gap^(1-theta) over the samples, so the inequality
    holds on every sample by construction and the meaningful assertions are
    c_constant > 0 and the regression quality.
    """

    theta: float
    c_constant: float
    r_squared: float
    n_points: int
    neighborhood_radius: float
    slope: float


def _unit_y_envelope(rng: np.random.Generator, n: int) -> np.ndarray:
    """Random-phase mix of modes 1..4 with Y-seminorm exactly 1.

    Mode m enters with weight 2^(1-m), each normalized by its own Y-seminorm
    sqrt((k^2 + k^4)/2), k = 2*pi*m, so the mix has a fixed spectral shape and
    only the phases are random.
    """
    x = grid_points(n)
    h = np.zeros(n)
    total = 0.0
    for m, amp in zip((1, 2, 3, 4), (1.0, 0.5, 0.25, 0.125)):
        k = 2.0 * np.pi * m
        mode_norm = np.sqrt((k * k + k ** 4) / 2.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        h += (amp / mode_norm) * np.cos(2.0 * np.pi * m * x + phase)
        total += amp * amp
    return h / np.sqrt(total)


def ls_samples(
    equilibrium: State,
    model: SigmaModel,
    radius: float = 0.1,
    count: int = 200,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """(gradient Y-norm, |energy gap|) pairs at random states near an equilibrium.

    Each sample sits at Y-distance delta from the equilibrium with delta
    log-uniform over [1e-4 * radius, radius], split 50/50 (in squared Y-norm)
    between the scalar component and a fixed-envelope u-perturbation with
    random phases and sign.  Pairs with |gap| < 1e-14 are discarded (they sit
    outside the log-regression domain).  Returns an array of shape (kept, 2).
    """
    if radius <= 0.0:
        raise ValueError("radius must be > 0")
    if rng is None:
        rng = np.random.default_rng(0)
    if not critical_manifold_check(equilibrium.u, equilibrium.alpha, model):
        raise ValueError("ls_samples requires a critical equilibrium state")
    n = equilibrium.u.n
    a_bar = equilibrium.alpha
    out = []
    for _ in range(count):
        delta = radius * 10.0 ** rng.uniform(-4.0, 0.0)
        d_comp = delta / np.sqrt(2.0)
        sign = 1.0 if rng.integers(0, 2) == 1 else -1.0
        h = _unit_y_envelope(rng, n)
        u = make_grid_function(d_comp * h)
        alpha = a_bar + sign * d_comp
        gap = abs(energy_gap(u, alpha, model, a_bar))
        if gap < GAP_FLOOR:
            continue
        g = frechet_derivative(u, alpha, model)
        out.append((gradient_y_norm(g), gap))
    return np.array(out, dtype=float).reshape(-1, 2)


def fit_ls_exponent(samples: np.ndarray, neighborhood_radius: float = 0.1) -> LsFit:
    """Log-log regression of gradient norm against energy gap.

    The slope estimates 1 - theta; theta is clamped to (0, 1/2].  The
    constant is the empirical minimum ratio over the samples.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != 2 or samples.shape[0] < 20:
        raise ValueError("need at least 20 (grad, gap) samples")
    if not np.all(np.isfinite(samples)) or np.any(samples <= 0.0):
        raise ValueError("samples must be finite and positive")
    gy = samples[:, 0]
    gap = samples[:, 1]
    x = np.log(gap)
    y = np.log(gy)
    a = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    slope = float(coef[0])
    fitted = a @ coef
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    theta = min(max(1.0 - slope, 1e-6), 0.5)
    c2 = float(np.min(gy / gap ** (1.0 - theta)))
    return LsFit(
        theta=theta,
        c_constant=c2,
        r_squared=r2,
        n_points=int(samples.shape[0]),
        neighborhood_radius=float(neighborhood_radius),
        slope=slope,
    )


def verify_ls_inequality(samples: np.ndarray, fit: LsFit) -> bool:
    """True iff ||grad||_Y >= c_constant * gap^(1-theta) on every sample."""
    samples = np.asarray(samples, dtype=float)
    gy = samples[:, 0]
    gap = samples[:, 1]
    bound = fit.c_constant * gap ** (1.0 - fit.theta)
    return bool(np.all(gy >= bound * (1.0 - 1e-10)))


@dataclass(frozen=True)
class StabilityReport:
    """Minimal constant C3 with |alpha(t)-alpha(s)|, ||u(t)-u(s)|| <= C3*gap(t)^theta."""

    c3: float
    theta: float
    n_pairs: int
    n_skipped: int
    degenerate: bool
    initial_distance: float
    final_distance: float


def _y_distance(state: State, alpha_bar: float) -> float:
    return y_norm(XVector(state.u, state.alpha - alpha_bar))


def stability_check(
    traj: Trajectory,
    equilibrium: State,
    theta: float,
    model: SigmaModel | None = None,
    max_states: int = 400,
) -> StabilityReport:
    """Smallest C3 making both stability inequalities hold over snapshot pairs.

    For every recorded pair t < s the report's c3 satisfies
    max(|alpha(t)-alpha(s)|, ||u(t)-u(s)||_L2) <= c3 * |E(t)-E*|^theta.
    Pairs whose earlier gap sits at the rounding floor are skipped (counted);
    a trajectory with all gaps at the floor is reported degenerate with c3=0.
    The snapshot set is thinned to max_states states to keep the pair count
    quadratic-but-small.  Requires the trajectory to approach the equilibrium
    (final Y-distance <= 0.1 * initial).
    """
    if model is None:
        model = traj.model
    a_bar = equilibrium.alpha
    d0 = _y_distance(traj.states[0], a_bar)
    d1 = _y_distance(traj.states[-1], a_bar)
    degenerate_start = d0 <= 1e-13
    if not degenerate_start and d1 > 0.1 * d0:
        raise ValueError(
            f"trajectory does not converge to the equilibrium: initial Y-distance {d0:.3e}, final {d1:.3e}"
        )
    m = len(traj.states)
    idx = np.unique(np.linspace(0, m - 1, min(max_states, m)).astype(int))
    states = [traj.states[i] for i in idx]
    uu = np.stack([s.u.values for s in states])
    aa = np.array([s.alpha for s in states])
    gaps = np.array([abs(energy_gap(s.u, s.alpha, model, a_bar)) for s in states])

    c3 = 0.0
    n_pairs = 0
    n_skipped = 0
    k = len(states)
    for i in range(k - 1):
        if gaps[i] < 1e-15:
            n_skipped += k - 1 - i
            continue
        denom = gaps[i] ** theta
        du = uu[i + 1 :] - uu[i]
        dunorm = np.sqrt((du * du).mean(axis=1))
        danorm = np.abs(aa[i + 1 :] - aa[i])
        ratio = np.maximum(dunorm, danorm) / denom
        c3 = max(c3, float(ratio.max()))
        n_pairs += k - 1 - i
    degenerate = n_pairs == 0
    return StabilityReport(
        c3=c3,
        theta=theta,
        n_pairs=n_pairs,
        n_skipped=n_skipped,
        degenerate=degenerate,
        initial_distance=float(d0),
        final_distance=float(d1),
    )


@dataclass(frozen=True)
class DecayReport:
    """Tail-decay classification of the energy gap along a trajectory."""

    kind: str  # "exponential" | "algebraic" | "undetermined"
    rate: float
    power: float
    r2_exponential: float
    r2_algebraic: float
    n_tail: int


def _linfit_r2(x: np.ndarray, y: np.ndarray):
    a = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    fitted = a @ coef
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return float(coef[0]), r2


def decay_classifier(traj: Trajectory, alpha_bar: float | None = None) -> DecayReport:
    """Classify the gap decay as exponential or algebraic by competing fits.

    Fits log(gap) against t and against log(t) on the tail (the later half of
    the snapshots whose gap is above the rounding floor 1e-13) and returns the
    better fit by r-squared; undetermined if both r2 < 0.95 or the tail is
    degenerate (zero gaps).
    """
    if len(traj.states) < 100:
        raise ValueError("decay classification needs at least 100 snapshots")
    model = traj.model
    if alpha_bar is None:
        alpha_bar = predicted_limit(model, traj.states[0].alpha)
    gaps = np.array([abs(energy_gap(s.u, s.alpha, model, alpha_bar)) for s in traj.states])
    t = traj.snapshot_times
    live = np.nonzero(gaps >= 1e-13)[0]
    if live.size < 40:
        return DecayReport("undetermined", float("nan"), float("nan"), 0.0, 0.0, 0)
    tail = live[live.size // 2 :]
    tt = t[tail]
    gg = np.log(gaps[tail])
    slope_exp, r2_exp = _linfit_r2(tt, gg)
    pos = tt > 0.0
    if np.count_nonzero(pos) >= 20:
        slope_alg, r2_alg = _linfit_r2(np.log(tt[pos]), gg[pos])
    else:
        slope_alg, r2_alg = float("nan"), 0.0
    if max(r2_exp, r2_alg) < 0.95:
        kind = "undetermined"
    elif r2_exp >= r2_alg:
        kind = "exponential"
    else:
        kind = "algebraic"
    return DecayReport(
        kind=kind,
        rate=-slope_exp,
        power=-slope_alg if np.isfinite(slope_alg) else float("nan"),
        r2_exponential=r2_exp,
        r2_algebraic=r2_alg,
        n_tail=int(tail.size),
    )


@dataclass(frozen=True)
class LengthReport:
    """Both sides of the graph-length estimate and its (cancellation-free) slack."""

    length: float
    lhs: float
    rhs: float
    holds: bool
    slack: float
    gamma_exp: float
    c5: float


def c5_from_fit(fit: LsFit):
    """Exponent gamma = 1/(2(1-theta)) and constant C5 = 2^gamma / C2^(1-theta)."""
    gamma_exp = 1.0 / (2.0 * (1.0 - fit.theta))
    c5 = 2.0 ** gamma_exp / fit.c_constant ** (1.0 - fit.theta)
    return gamma_exp, c5


def length_estimate_check(
    u: GridFunction,
    alpha: float,
    equilibrium: State,
    model: SigmaModel,
    gamma_exp: float,
    c5: float,
) -> LengthReport:
    """Check sigma(alpha)*L <= sigma(abar) + C5*(sigma^2*||w_x||^2 + sigma'^2*L^2)^gamma.

    The slack is evaluated as C5*(...)^gamma - (E - E*) with the energy gap in
    cancellation-free form, so states exponentially close to the equilibrium
    still give meaningful signs.
    """
    if not (0.5 < gamma_exp <= 1.0):
        raise ValueError(f"gamma_exp must lie in (1/2, 1], got {gamma_exp}")
    a_bar = equilibrium.alpha
    ll = length(u)
    s = model.eval(alpha, 0)
    sp = model.eval(alpha, 1)
    ux = derivative(u)
    w = ux / np.sqrt(1.0 + ux * ux)
    wx = derivative(w)
    curv_term = s * s * float(integrate(wx * wx))
    drive = curv_term + sp * sp * ll * ll
    rhs_val = model.eval(a_bar, 0) + c5 * drive ** gamma_exp
    gap = energy_gap(u, alpha, model, a_bar)
    slack = c5 * drive ** gamma_exp - gap
    return LengthReport(
        length=float(ll),
        lhs=float(s * ll),
        rhs=float(rhs_val),
        holds=bool(slack >= -1e-12),
        slack=float(slack),
        gamma_exp=float(gamma_exp),
        c5=float(c5),
    )


def predicted_limit(model: SigmaModel, alpha0: float) -> float:
    """Limit misorientation of the descent dynamics started at alpha0.

    alpha moves against the sign of sigma', so the limit is the nearest
    critical point in the descent direction (alpha0 itself if already
    critical, or for a flat model).  "Critical" uses the same 1e-10 slope
    tolerance as critical_manifold_check: a start within rounding distance of
    a critical point never leaves its neighborhood on a finite horizon.
    """
    if model.is_flat:
        return float(alpha0)
    s1 = model.eval(alpha0, 1)
    if abs(s1) <= 1e-10:
        return float(alpha0)
    for width in (0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0):
        if s1 > 0:
            pts = find_critical_points(model, (alpha0 - width, alpha0))
            if pts is not ALL_CRITICAL:
                below = [p.alpha_bar for p in pts if p.alpha_bar < alpha0]
                if below:
                    return float(max(below))
        else:
            pts = find_critical_points(model, (alpha0, alpha0 + width))
            if pts is not ALL_CRITICAL:
                above = [p.alpha_bar for p in pts if p.alpha_bar > alpha0]
                if above:
                    return float(min(above))
    raise ValueError(f"no critical point found near alpha0 = {alpha0}")
