"""Method-of-lines integration of the coupled curve-shortening system.

The state is (u, alpha): a periodic zero-mean graph height and a scalar
misorientation.  The evolution is

    du/dt     = mu * sigma(alpha) * sqrt(1+u_x^2) * d/dx [ u_x / sqrt(1+u_x^2) ]
    dalpha/dt = -gamma * sigma'(alpha) * int sqrt(1+u_x^2) dx

integrated with classical RK4 and spectral space derivatives restricted to
the band |m| <= n/4, which is exactly the band for which the explicit-scheme
bound dt <= cfl_safety * (1/n)^2 / (mu * sigma_max) certifies RK4 stability.
Every step records a structural diagnostics row (energy, both sides of the
dissipation identity, norms of the energy gradient, geometry sup-norms), so
the dissipation law can be audited after the fact from the trajectory alone.
"""

from __future__ import annotations

import functools
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .grid import GridFunction, make_grid_function
from .sigma import SigmaModel

log = logging.getLogger("grainflow.flow")

DIAG_COLUMNS = (
    "energy",
    "dissipation_lhs",
    "dissipation_rhs",
    "mean_u",
    "sup_v",
    "sup_ux_sq",
    "length",
    "sup_curvature",
    "grad_norm_x",
    "grad_norm_y",
)

CSV_HEADER = "t,energy,diss_lhs,diss_rhs,mean_u,sup_v,sup_ux_sq,length,sup_curvature,grad_x,grad_y"


class CflViolation(ValueError):
    """Time step exceeds the explicit-scheme stability bound."""


class BlowUpError(RuntimeError):
    """The integration produced a non-finite state; carries the prefix trajectory."""

    def __init__(self, message: str, trajectory: "Trajectory"):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass(frozen=True)
class FlowParams:
    """Mobilities, time step, horizon, grid size and CFL safety factor."""

    mu: float = 1.0
    gamma: float = 1.0
    dt: float = 1e-5
    t_end: float = 5.0
    n: int = 256
    cfl_safety: float = 1.0

    def __post_init__(self):
        if not (self.mu > 0.0):
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if not (self.gamma > 0.0):
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if not (self.dt > 0.0):
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not (self.t_end > 0.0):
            raise ValueError(f"t_end must be > 0, got {self.t_end}")
        if self.n < 8 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")
        if not (0.0 < self.cfl_safety <= 1.0):
            raise ValueError(f"cfl_safety must be in (0, 1], got {self.cfl_safety}")


@dataclass(frozen=True)
class State:
    """A phase-space point: graph height u and misorientation alpha."""

    u: GridFunction
    alpha: float


@dataclass(frozen=True)
class Diagnostics:
    """One recorded diagnostics row."""

    energy: float
    dissipation_lhs: float
    dissipation_rhs: float
    mean_u: float
    sup_v: float
    sup_ux_sq: float
    length: float
    sup_curvature: float
    grad_norm_x: float
    grad_norm_y: float


@dataclass
class DiagnosticsTable:
    """Column-major diagnostics for a whole trajectory (one row per record)."""

    data: np.ndarray  # shape (n_records, 10), columns as DIAG_COLUMNS

    def __len__(self) -> int:
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, DIAG_COLUMNS.index(name)]

    def __getattr__(self, name: str) -> np.ndarray:
        if name in DIAG_COLUMNS:
            return self.data[:, DIAG_COLUMNS.index(name)]
        raise AttributeError(name)

    def row(self, i: int) -> Diagnostics:
        return Diagnostics(*(float(x) for x in self.data[i]))


@dataclass
class Trajectory:
    """Recorded run: dense diagnostics plus sparse state snapshots.

    times and diagnostics have one entry per record; states are snapshotted
    every snapshot_every steps (plus the final step) with their own
    snapshot_times axis, which keeps multi-hundred-thousand-step runs at a
    sane memory footprint.
    """

    times: np.ndarray
    states: list[State]
    snapshot_times: np.ndarray
    diagnostics: DiagnosticsTable
    final_state: State
    params: FlowParams
    model: SigmaModel
    completed: bool = True

    @property
    def initial_state(self) -> State:
        return self.states[0]


def stability_band(n: int) -> int:
    """Highest spectral mode the flow operator keeps (n/4)."""
    return n // 4


def cfl_bound(params: FlowParams, sigma_max: float) -> float:
    """Largest dt the stability invariant admits for a given max density."""
    return params.cfl_safety * (1.0 / params.n) ** 2 / (params.mu * sigma_max)


def check_cfl(params: FlowParams, model: SigmaModel, alpha0: float) -> None:
    """Raise CflViolation if params.dt exceeds the stability bound."""
    sigma_max = model.max_reachable(alpha0)
    bound = cfl_bound(params, sigma_max)
    if params.dt > bound * (1.0 + 1e-12):
        raise CflViolation(
            f"dt = {params.dt} exceeds the stability bound {bound:.6e} "
            f"(n = {params.n}, mu = {params.mu}, sigma_max = {sigma_max})"
        )


def _band_derivative(vals: np.ndarray, band: int) -> np.ndarray:
    n = vals.size
    fh = np.fft.rfft(vals)
    fh *= 1j * (2.0 * np.pi * np.arange(n // 2 + 1))
    fh[band + 1 :] = 0.0
    return np.fft.irfft(fh, n)


def rhs(state: State, model: SigmaModel, params: FlowParams):
    """Right-hand side (du/dt samples, dalpha/dt) at a state.

    The curve velocity is evaluated in quasi-divergence form: w = u_x/sqrt(v)
    pointwise, then mu*sigma*sqrt(v)*w_x with a spectral (band-limited)
    derivative of w.
    """
    band = stability_band(state.u.n)
    ux = _band_derivative(state.u.values, band)
    v = np.sqrt(1.0 + ux * ux)
    w = ux / v
    wx = _band_derivative(w, band)
    s = model.eval(state.alpha, 0)
    du = params.mu * s * v * wx
    dalpha = -params.gamma * model.eval(state.alpha, 1) * float(v.mean())
    return du, dalpha


def _rk4_increment(u_vals: np.ndarray, alpha: float, model: SigmaModel, params: FlowParams, dt: float):
    band = stability_band(u_vals.size)

    def f(uv, a):
        ux = _band_derivative(uv, band)
        v = np.sqrt(1.0 + ux * ux)
        w = ux / v
        wx = _band_derivative(w, band)
        du = params.mu * model.eval(a, 0) * v * wx
        da = -params.gamma * model.eval(a, 1) * float(v.mean())
        return du, da

    k1u, k1a = f(u_vals, alpha)
    k2u, k2a = f(u_vals + 0.5 * dt * k1u, alpha + 0.5 * dt * k1a)
    k3u, k3a = f(u_vals + 0.5 * dt * k2u, alpha + 0.5 * dt * k2a)
    k4u, k4a = f(u_vals + dt * k3u, alpha + dt * k3a)
    du = (dt / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
    da = (dt / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
    return du, da


def step(state: State, model: SigmaModel, params: FlowParams, dt: float | None = None) -> State:
    """One RK4 step; u is re-projected to zero mean afterwards."""
    h = params.dt if dt is None else float(dt)
    if h == 0.0:
        return state
    du, da = _rk4_increment(state.u.values, state.alpha, model, params, h)
    u_new = state.u.values + du
    if not np.all(np.isfinite(u_new)):
        raise BlowUpError("blow-up: non-finite state after a single step", None)
    return State(make_grid_function(u_new), state.alpha + da)


def step_mean_drift(state: State, model: SigmaModel, params: FlowParams) -> float:
    """|mean| of the updated u before re-projection (conservation audit)."""
    du, _ = _rk4_increment(state.u.values, state.alpha, model, params, params.dt)
    return abs(float((state.u.values + du).mean()))


@functools.lru_cache(maxsize=32)
def _tables(n: int):
    return _kernel.fft_tables(n)


def _resolve_cadence(steps: int, t_end: float, record_every, snapshot_every):
    if record_every is None:
        record_every = 1 if t_end <= 10.0 else 10
    record_every = int(record_every)
    if record_every < 1 or steps % record_every != 0:
        raise ValueError(
            f"record_every must be >= 1 and divide the step count {steps}, got {record_every}"
        )
    if snapshot_every is None:
        snapshot_every = max(1, steps // 5000)
    snapshot_every = int(snapshot_every)
    if snapshot_every < 1:
        raise ValueError("snapshot_every must be >= 1")
    return record_every, snapshot_every


def evolve(
    state0: State,
    model: SigmaModel,
    params: FlowParams,
    record_every: int | None = None,
    snapshot_every: int | None = None,
    enforce_cfl: bool = True,
    use_kernel: bool = True,
) -> Trajectory:
    """Integrate to t_end, recording diagnostics every record_every steps.

    Snapshots of the full state are kept every snapshot_every steps plus the
    final one.  dissipation_lhs is filled by centered differences of the
    recorded energies (one-sided at the two endpoints).  A non-finite state
    aborts with BlowUpError carrying the trajectory prefix up to the last
    finite state.  With use_kernel=False a plain-numpy loop with identical
    semantics is used (slow; for cross-validation).
    """
    if state0.u.n != params.n:
        raise ValueError(f"state grid size {state0.u.n} != params.n {params.n}")
    if enforce_cfl:
        check_cfl(params, model, state0.alpha)
    steps = int(round(params.t_end / params.dt))
    if steps < 1 or abs(steps * params.dt - params.t_end) > 1e-9 * max(1.0, params.t_end):
        raise ValueError(f"t_end = {params.t_end} is not an integral number of steps of dt = {params.dt}")
    record_every, snapshot_every = _resolve_cadence(steps, params.t_end, record_every, snapshot_every)

    n = params.n
    nrec_max = steps // record_every + 1
    nsnap_max = steps // snapshot_every + 2
    diag = np.full((nrec_max, 10), np.nan)
    snaps = np.empty((nsnap_max, n))
    snap_alpha = np.empty(nsnap_max)
    snap_step = np.empty(nsnap_max, dtype=np.int64)
    u_last = np.empty(n)

    kind, p0, p1, p2 = model.kernel_params()
    band = stability_band(n)
    log.info(
        "evolve: n=%d dt=%g steps=%d record_every=%d snapshot_every=%d kernel=%s",
        n, params.dt, steps, record_every, snapshot_every, use_kernel,
    )
    if use_kernel:
        rev, wt, eps = _tables(n)
        alpha_end, status, nrec, nsnap = _kernel.evolve_kernel(
            state0.u.values.copy(), float(state0.alpha), float(params.dt), steps,
            float(params.mu), float(params.gamma), kind, p0, p1, p2, band,
            record_every, snapshot_every, rev, wt, eps,
            diag, snaps, snap_alpha, snap_step, u_last,
        )
    else:
        alpha_end, status, nrec, nsnap = _evolve_numpy(
            state0.u.values.copy(), float(state0.alpha), float(params.dt), steps,
            params, model, band, record_every, snapshot_every,
            diag, snaps, snap_alpha, snap_step, u_last,
        )

    dtr = params.dt * record_every
    times = np.arange(nrec) * dtr
    states = [State(make_grid_function(snaps[i]), float(snap_alpha[i])) for i in range(nsnap)]
    snapshot_times = snap_step[:nsnap].astype(float) * params.dt
    final = State(make_grid_function(u_last), float(alpha_end))
    traj = Trajectory(
        times=times,
        states=states,
        snapshot_times=snapshot_times,
        diagnostics=DiagnosticsTable(diag[:nrec].copy()),
        final_state=final,
        params=params,
        model=model,
        completed=(status == 0),
    )
    if status != 0:
        t_fail = (nrec - 1) * dtr if nrec > 0 else 0.0
        raise BlowUpError(f"blow-up: non-finite state shortly after t = {t_fail:.6g}", traj)
    return traj


def _evolve_numpy(u, alpha, dt, steps, params, model, band, record_every, snapshot_every,
                  diag, snaps, snap_alpha, snap_step, u_last):
    """Reference loop with the same record/snapshot semantics as the kernel."""
    n = u.size
    inv_n = 1.0 / n
    mu, gamma = params.mu, params.gamma
    alpha_ok = alpha
    nrec = 0
    nsnap = 0
    status = 0
    for kstep in range(steps + 1):
        ux = _band_derivative(u, band)
        v2 = 1.0 + ux * ux
        sv = np.sqrt(v2)
        w = ux / sv
        L = float(sv.mean())
        mw = float(w.mean())
        wx = _band_derivative(w, band)
        s = model.eval(alpha, 0)
        sp = model.eval(alpha, 1)
        k1 = mu * s * sv * wx
        da1 = -gamma * sp * L
        E = s * L
        # same guard as the compiled kernel: stop well below overflow so the
        # recorded prefix (squares, finite differences of E) stays representable
        if not (E < 1e100):
            status = 2
            break
        u_last[:] = u
        alpha_ok = alpha
        if kstep % record_every == 0:
            r = kstep // record_every
            dw = w - mw
            diag[r, 0] = E
            diag[r, 2] = -(da1 * da1) / gamma - float((k1 * k1 / sv).mean()) / mu
            diag[r, 3] = float(u.mean())
            diag[r, 4] = float(np.sqrt(v2.max()))
            diag[r, 5] = float(v2.max() - 1.0)
            diag[r, 6] = L
            diag[r, 7] = float(np.abs(wx).max())
            diag[r, 8] = float(np.sqrt(s * s * float((dw * dw).mean()) + (sp * L) ** 2))
            diag[r, 9] = float(
                np.sqrt(s * s * (float((dw * dw).mean()) + float((wx * wx).mean())) + (sp * L) ** 2)
            )
            nrec = r + 1
        if kstep % snapshot_every == 0 or kstep == steps:
            snaps[nsnap] = u
            snap_alpha[nsnap] = alpha
            snap_step[nsnap] = kstep
            nsnap += 1
        if kstep == steps:
            break
        du, da = _rk4_increment(u, alpha, model, params, dt)
        u = u + du
        u -= u.mean()
        alpha = alpha + da

    dtr = dt * record_every
    for r in range(1, nrec - 1):
        diag[r, 1] = (diag[r + 1, 0] - diag[r - 1, 0]) / (2.0 * dtr)
    if nrec >= 2:
        diag[0, 1] = (diag[1, 0] - diag[0, 0]) / dtr
        diag[nrec - 1, 1] = (diag[nrec - 1, 0] - diag[nrec - 2, 0]) / dtr
    elif nrec == 1:
        diag[0, 1] = 0.0
    return alpha_ok, status, nrec, nsnap


def dissipation_residual(traj: Trajectory) -> np.ndarray:
    """Per-record |dissipation_lhs - dissipation_rhs| (endpoints one-sided)."""
    if len(traj.diagnostics) < 3:
        raise ValueError("dissipation residual needs at least 3 records")
    d = traj.diagnostics
    return np.abs(d.dissipation_lhs - d.dissipation_rhs)


def max_interior_residual(traj: Trajectory) -> float:
    """Max dissipation residual excluding the one-sided endpoint stencils."""
    res = dissipation_residual(traj)
    return float(res[1:-1].max())


def dissipation_budget(traj: Trajectory) -> float:
    """Theoretical residual scale (dt_rec^2/6)*max|E'''| from third differences."""
    e = traj.diagnostics.energy
    if e.size < 4:
        return float("nan")
    dtr = float(traj.times[1] - traj.times[0])
    return float(np.abs(np.diff(e, 3)).max() / (6.0 * dtr))


@dataclass
class GradientBoundReport:
    """A priori bound audit: pointwise v-bound and gradient maximum principle."""

    v_bound: float
    max_sup_v: float
    v_violations: list = field(default_factory=list)
    ux_sq_bound: float = 0.0
    max_sup_ux_sq: float = 0.0
    ux_violations: list = field(default_factory=list)
    sup_v_monotone: bool = False
    passed: bool = False


def gradient_bound_check(traj: Trajectory, model: SigmaModel | None = None) -> GradientBoundReport:
    """Verify sup v(t) <= (sigma(alpha0)/c1) * sup v(0)^2 and the gradient
    maximum principle sup u_x^2(t) <= sup u_x^2(0) + 1e-8 at every record."""
    if model is None:
        model = traj.model
    d = traj.diagnostics
    alpha0 = traj.states[0].alpha
    v_bound = model.eval(alpha0, 0) / model.c1 * d.sup_v[0] ** 2
    ux_bound = d.sup_ux_sq[0] + 1e-8
    t = traj.times
    v_bad = [(float(t[i]), float(d.sup_v[i])) for i in np.nonzero(d.sup_v > v_bound)[0]]
    ux_bad = [(float(t[i]), float(d.sup_ux_sq[i])) for i in np.nonzero(d.sup_ux_sq > ux_bound)[0]]
    monotone = bool(np.all(np.diff(d.sup_v) <= 1e-13))
    return GradientBoundReport(
        v_bound=float(v_bound),
        max_sup_v=float(d.sup_v.max()),
        v_violations=v_bad,
        ux_sq_bound=float(ux_bound),
        max_sup_ux_sq=float(d.sup_ux_sq.max()),
        ux_violations=ux_bad,
        sup_v_monotone=monotone,
        passed=not v_bad and not ux_bad,
    )


def to_csv(traj: Trajectory, path) -> None:
    """Write the diagnostics time series as CSV (repr-exact %.17g floats)."""
    d = traj.diagnostics
    table = np.column_stack([traj.times, d.data])
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=CSV_HEADER, comments="")


def snapshots_to_json(traj: Trajectory) -> str:
    """Serialize the sparse state snapshots (t, alpha, u) as JSON."""
    items = [
        {"t": float(t), "alpha": s.alpha, "u": s.u.to_json_dict()}
        for t, s in zip(traj.snapshot_times, traj.states)
    ]
    return json.dumps(items, sort_keys=True)
