"""Scenario configuration: JSON parsing, validation, and error codes.

A scenario file names the energy-density model, the initial state, the flow
parameters, the requested tasks and the RNG seed.  Validation is eager: the
positivity floor, CFL bound, grid size and task names are all checked at
parse time, each failure carrying a stable machine-readable code.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .flow import CflViolation, FlowParams, State, cfl_bound, check_cfl
from .grid import GridFunction, grid_points, make_grid_function
from .sigma import SigmaModel, sigma_from_json_dict

TASKS = ("simulate", "dissipation", "ls_fit", "stability", "length", "inequality_suite")


class ConfigError(ValueError):
    """Configuration rejection with a stable error code."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class Zero:
    def build(self, n: int) -> GridFunction:
        return make_grid_function(np.zeros(n))


@dataclass(frozen=True)
class Sine:
    amplitude: float
    frequency: int = 1

    def build(self, n: int) -> GridFunction:
        x = grid_points(n)
        return make_grid_function(self.amplitude * np.sin(2.0 * np.pi * self.frequency * x))


@dataclass(frozen=True)
class FourierModes:
    modes: tuple  # of (k, amplitude, phase)

    def build(self, n: int) -> GridFunction:
        x = grid_points(n)
        v = np.zeros(n)
        for k, amp, phase in self.modes:
            v += amp * np.cos(2.0 * np.pi * k * x + phase)
        return make_grid_function(v)


@dataclass(frozen=True)
class FromFile:
    path: str

    def build(self, n: int) -> GridFunction:
        with open(self.path, "r", encoding="utf-8") as fh:
            g = GridFunction.from_json_dict(json.load(fh))
        if g.n != n:
            raise ConfigError(
                "bad_grid", f"initial_u file has n = {g.n}, flow grid has n = {n}"
            )
        return g


InitialU = Zero | Sine | FourierModes | FromFile


@dataclass(frozen=True)
class ScenarioConfig:
    sigma: SigmaModel
    initial_u: InitialU
    alpha0: float
    flow: FlowParams
    tasks: tuple
    output_dir: str = "out"
    seed: int = 0
    record_every: int | None = None
    snapshot_every: int | None = None
    ls_radius: float = 0.1
    ls_count: int = 200

    def initial_state(self) -> State:
        return State(self.initial_u.build(self.flow.n), float(self.alpha0))

    def with_overrides(self, output_dir=None, seed=None) -> "ScenarioConfig":
        cfg = self
        if output_dir is not None:
            cfg = replace(cfg, output_dir=str(output_dir))
        if seed is not None:
            cfg = replace(cfg, seed=int(seed))
        return cfg


def _parse_initial_u(d) -> InitialU:
    if d is None:
        return Zero()
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError("bad_initial_u", "initial_u must be an object with a 'kind' field")
    kind = d["kind"]
    try:
        if kind == "zero":
            return Zero()
        if kind == "sine":
            return Sine(float(d["amplitude"]), int(d.get("frequency", 1)))
        if kind == "fourier_modes":
            modes = tuple((int(k), float(a), float(p)) for k, a, p in d["modes"])
            return FourierModes(modes)
        if kind == "from_file":
            # existence is checked by the caller once the path is resolved
            # against the config file's directory
            return FromFile(str(d["path"]))
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError("bad_initial_u", f"malformed initial_u: {e}")
    raise ConfigError("bad_initial_u", f"unknown initial_u kind: {kind!r}")


def config_from_dict(raw: dict, base_dir: str = ".") -> ScenarioConfig:
    """Validate a raw config dict (already JSON-parsed) into a ScenarioConfig."""
    if not isinstance(raw, dict):
        raise ConfigError("malformed_json", "top-level config must be a JSON object")

    try:
        sigma = sigma_from_json_dict(raw.get("sigma", {"kind": "constant", "c": 1.0}))
    except ValueError as e:
        msg = str(e)
        if "positivity floor" in msg:
            raise ConfigError("positivity_floor", msg)
        if "unknown sigma kind" in msg:
            raise ConfigError("unknown_sigma_kind", msg)
        raise ConfigError("bad_field", f"sigma: {msg}")

    alpha0 = raw.get("alpha0", 0.0)
    if not isinstance(alpha0, (int, float)) or not math.isfinite(float(alpha0)):
        raise ConfigError("bad_field", f"alpha0 must be a finite number, got {alpha0!r}")
    alpha0 = float(alpha0)

    fl = raw.get("flow", {})
    if not isinstance(fl, dict):
        raise ConfigError("bad_field", "flow must be an object")
    n = fl.get("n", 256)
    mu = fl.get("mu", 1.0)
    gamma = fl.get("gamma", 1.0)
    t_end = fl.get("t_end", 5.0)
    cfl_safety = fl.get("cfl_safety", 1.0)
    dt = fl.get("dt")
    try:
        if dt is None:
            # largest stable dt that divides t_end into whole steps
            probe = FlowParams(mu=mu, gamma=gamma, dt=1.0, t_end=t_end, n=n, cfl_safety=cfl_safety)
            bound = cfl_bound(probe, sigma.max_reachable(alpha0))
            steps = max(1, math.ceil(t_end / bound))
            dt = t_end / steps
        params = FlowParams(mu=mu, gamma=gamma, dt=float(dt), t_end=float(t_end), n=int(n), cfl_safety=float(cfl_safety))
    except (TypeError, ValueError) as e:
        msg = str(e)
        if "mu must be" in msg or "gamma must be" in msg:
            raise ConfigError("nonpositive_mobility", msg)
        if "n must be" in msg:
            raise ConfigError("bad_grid", msg)
        raise ConfigError("bad_field", f"flow: {msg}")

    try:
        check_cfl(params, sigma, alpha0)
    except CflViolation as e:
        raise ConfigError("cfl_violation", str(e))

    tasks_raw = raw.get("tasks")
    if not isinstance(tasks_raw, list) or not tasks_raw:
        raise ConfigError("bad_tasks", "tasks must be a non-empty list")
    for t in tasks_raw:
        if t not in TASKS:
            raise ConfigError("bad_tasks", f"unknown task {t!r}; valid tasks: {', '.join(TASKS)}")
    tasks = tuple(dict.fromkeys(tasks_raw))  # dedupe, keep order

    initial_u = _parse_initial_u(raw.get("initial_u"))
    if isinstance(initial_u, FromFile):
        path = initial_u.path
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        if not os.path.isfile(path):
            raise ConfigError("missing_file", f"initial_u file does not exist: {path}")
        initial_u = FromFile(path)

    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("bad_field", f"seed must be a non-negative integer, got {seed!r}")

    extra = {}
    for key in ("record_every", "snapshot_every"):
        val = raw.get(key)
        if val is not None:
            if not isinstance(val, int) or val < 1:
                raise ConfigError("bad_field", f"{key} must be a positive integer, got {val!r}")
            extra[key] = val
    ls_radius = raw.get("ls_radius", 0.1)
    ls_count = raw.get("ls_count", 200)
    if not (isinstance(ls_radius, (int, float)) and ls_radius > 0):
        raise ConfigError("bad_field", f"ls_radius must be > 0, got {ls_radius!r}")
    if not (isinstance(ls_count, int) and ls_count >= 20):
        raise ConfigError("bad_field", f"ls_count must be an integer >= 20, got {ls_count!r}")

    return ScenarioConfig(
        sigma=sigma,
        initial_u=initial_u,
        alpha0=alpha0,
        flow=params,
        tasks=tasks,
        output_dir=str(raw.get("output_dir", "out")),
        seed=seed,
        ls_radius=float(ls_radius),
        ls_count=int(ls_count),
        **extra,
    )


def parse_config(path: str) -> ScenarioConfig:
    """Read and validate a scenario JSON file (see config_from_dict for codes)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("missing_file", f"config file does not exist: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError("malformed_json", f"config is not valid JSON: {e}")
    return config_from_dict(raw, base_dir=os.path.dirname(os.path.abspath(path)))
