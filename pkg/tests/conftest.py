"""Shared fixtures: the three reference trajectories used across test modules.

All three are session-scoped because the reference run costs ~15 s and the
refined one ~60 s; every test that needs a converged trajectory shares them.
Wall times are collected in TIMINGS so the acceptance tests can check the
runtime clauses without re-running anything.
"""

import time

import numpy as np
import pytest

from grainflow import (
    FlowParams,
    State,
    TrigPeriodic,
    evolve,
    grid_points,
    ls_samples,
    make_grid_function,
)

TRIG = TrigPeriodic(1.0, 0.5, 2.0)

TIMINGS: dict[str, float] = {}

# verdict lines collected by the acceptance tests, echoed after the run
# (per-test stdout is only shown for failures under default capture)
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


def sine_state(n, amplitude=0.1, alpha=0.3):
    x = grid_points(n)
    return State(make_grid_function(amplitude * np.sin(2.0 * np.pi * x)), alpha)


def _timed(name, fn):
    t0 = time.perf_counter()
    out = fn()
    TIMINGS[name] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="session")
def trig_model():
    return TRIG


@pytest.fixture(scope="session")
def timings():
    """Wall times (seconds) of the session fixtures, keyed by fixture name."""
    return TIMINGS


@pytest.fixture(scope="session")
def standard_traj():
    """Reference run: n=256, dt=1e-5, t_end=5, records every step, ~5000 snapshots."""
    params = FlowParams(mu=1.0, gamma=1.0, dt=1e-5, t_end=5.0, n=256)
    return _timed(
        "standard_traj",
        lambda: evolve(sine_state(256), TRIG, params, record_every=1, snapshot_every=100),
    )


@pytest.fixture(scope="session")
def halved_traj():
    """Same flow with dt halved; t_end=0.5 covers the residual's global max."""
    params = FlowParams(mu=1.0, gamma=1.0, dt=5e-6, t_end=0.5, n=256)
    return _timed(
        "halved_traj", lambda: evolve(sine_state(256), TRIG, params, record_every=1)
    )


@pytest.fixture(scope="session")
def refined_traj():
    """(N, dt) -> (2N, dt/4) refinement of the reference run, to t=2."""
    params = FlowParams(mu=1.0, gamma=1.0, dt=2.5e-6, t_end=2.0, n=512)
    return _timed(
        "refined_traj", lambda: evolve(sine_state(512), TRIG, params, record_every=10)
    )


@pytest.fixture(scope="session")
def trig_min_samples():
    """Gradient/gap samples around the trig-family minimum (flat line, alpha=0)."""
    eq = State(make_grid_function(np.zeros(256)), 0.0)
    rng = np.random.default_rng(1234)
    return _timed(
        "trig_min_samples", lambda: ls_samples(eq, TRIG, radius=0.1, count=200, rng=rng)
    )
