"""Gradient-inequality fitting, stability/decay/length diagnostics."""

import numpy as np
import pytest

from grainflow import (
    Constant,
    FlowParams,
    LsFit,
    QuadraticConvex,
    State,
    Trajectory,
    c5_from_fit,
    decay_classifier,
    energy_gap,
    evolve,
    find_critical_points,
    fit_ls_exponent,
    frechet_derivative,
    gradient_y_norm,
    grid_points,
    length_estimate_check,
    ls_samples,
    make_grid_function,
    predicted_limit,
    stability_check,
    verify_ls_inequality,
)
from grainflow.flow import DiagnosticsTable

from conftest import TRIG, sine_state

PI_4 = 0.7853981633974483
QUAD = QuadraticConvex(0.3, 2.0)


def _zero_state(n=256, alpha=0.0):
    return State(make_grid_function(np.zeros(n)), alpha)


@pytest.fixture(scope="module")
def quick_traj():
    """Coarse converging run used by the stability and decay tests."""
    return evolve(sine_state(64), TRIG, FlowParams(dt=1e-4, t_end=2.0, n=64), record_every=1)


def test_fit_recovers_an_exact_power_law():
    gap = np.logspace(-10, -1, 60)
    for c, power in [(3.7, 0.5), (0.02, 0.55)]:
        samples = np.column_stack([c * gap**power, gap])
        fit = fit_ls_exponent(samples)
        assert abs(fit.slope - power) <= 1e-12
        assert fit.r_squared >= 1.0 - 1e-12
        assert abs(fit.theta - min(1.0 - power, 0.5)) <= 1e-12
        assert abs(fit.c_constant - c) / c <= 1e-10
        assert fit.n_points == 60
        assert verify_ls_inequality(samples, fit)


def test_fit_input_validation():
    gap = np.logspace(-6, -1, 19)  # one short of the minimum
    with pytest.raises(ValueError, match="at least 20"):
        fit_ls_exponent(np.column_stack([np.sqrt(gap), gap]))
    bad = np.column_stack([np.sqrt(np.logspace(-6, -1, 30)), np.logspace(-6, -1, 30)])
    bad[4, 0] = 0.0
    with pytest.raises(ValueError, match="positive"):
        fit_ls_exponent(bad)
    with pytest.raises(ValueError):
        fit_ls_exponent(np.ones((30, 3)))


def test_sampler_requires_an_equilibrium_and_is_deterministic():
    with pytest.raises(ValueError, match="critical"):
        ls_samples(State(make_grid_function(np.zeros(64)), 0.3), TRIG)
    with pytest.raises(ValueError, match="radius"):
        ls_samples(_zero_state(64), TRIG, radius=0.0)
    a = ls_samples(_zero_state(64), TRIG, radius=0.1, count=50, rng=np.random.default_rng(5))
    b = ls_samples(_zero_state(64), TRIG, radius=0.1, count=50, rng=np.random.default_rng(5))
    assert np.array_equal(a, b)
    assert a.shape[1] == 2 and a.shape[0] >= 40
    assert np.all(a > 0.0) and np.all(np.isfinite(a))


def test_trig_minimum_exponent_is_one_half(trig_min_samples):
    fit = fit_ls_exponent(trig_min_samples)
    print(
        "trig minimum: slope", fit.slope, "r2", fit.r_squared,
        "C2", fit.c_constant, "points", fit.n_points,
    )
    assert fit.n_points == 200
    assert abs(fit.slope - 0.5) <= 0.01
    assert fit.r_squared >= 0.9999
    assert 2.5 <= fit.c_constant <= 3.5
    assert fit.theta == 0.5  # slope sits above 1/2 by a hair, so theta clamps
    assert verify_ls_inequality(trig_min_samples, fit)


def test_trig_maximum_exponent_is_one_half():
    amax = find_critical_points(TRIG, (0.5, 1.0))[0]
    assert not amax.degenerate and abs(amax.sigma_second + 4.0) <= 1e-8
    eq = _zero_state(256, amax.alpha_bar)
    samples = ls_samples(eq, TRIG, radius=0.1, count=200, rng=np.random.default_rng(77))
    fit = fit_ls_exponent(samples)
    print("trig maximum: slope", fit.slope, "r2", fit.r_squared, "C2", fit.c_constant)
    assert abs(fit.slope - 0.5) <= 0.01
    assert fit.r_squared >= 0.9999
    assert 2.5 <= fit.c_constant <= 3.5
    assert verify_ls_inequality(samples, fit)


def test_pure_scalar_ratio_is_constant_for_quadratic_density():
    # with u = 0 the inequality is exact algebra: ratio = 2*sqrt(curvature)
    zero = make_grid_function(np.zeros(256))
    ratios = []
    for d in np.logspace(-5, -2, 13):
        gap = abs(energy_gap(zero, d, QUAD, 0.0))
        g = gradient_y_norm(frechet_derivative(zero, d, QUAD))
        ratios.append(g / np.sqrt(gap))
    ratios = np.array(ratios)
    spread = (ratios.max() - ratios.min()) / ratios.mean()
    print("pure-scalar ratio mean", ratios.mean(), "relative spread", spread)
    assert spread <= 1e-14
    assert abs(ratios.mean() - 2.0 * np.sqrt(2.0)) <= 1e-12


def test_stability_constant_on_a_converging_run(quick_traj):
    eq = _zero_state(64)
    report = stability_check(quick_traj, eq, theta=0.5)
    print(
        "stability: c3", report.c3, "pairs", report.n_pairs,
        "distances", report.initial_distance, "->", report.final_distance,
    )
    assert not report.degenerate
    assert report.n_pairs == 79800  # 400 thinned states, all pairs kept
    assert report.n_skipped == 0
    assert 0.4 <= report.c3 <= 1.1
    assert report.final_distance <= 0.1 * report.initial_distance


def test_wrong_exponent_blows_the_constant_up(quick_traj):
    eq = _zero_state(64)
    c_right = stability_check(quick_traj, eq, theta=0.5).c3
    c_wrong = stability_check(quick_traj, eq, theta=0.9).c3
    print("c3 at theta 0.9 vs 0.5:", c_wrong, "/", c_right, "=", c_wrong / c_right)
    assert c_wrong / c_right > 100.0


def test_stability_rejects_non_converging_trajectories():
    short = evolve(sine_state(64), TRIG, FlowParams(dt=1e-4, t_end=0.01, n=64))
    with pytest.raises(ValueError, match="does not converge"):
        stability_check(short, _zero_state(64), theta=0.5)


def test_decay_is_exponential_on_the_converging_run(quick_traj):
    report = decay_classifier(quick_traj)
    print("decay:", report.kind, "rate", report.rate, "r2", report.r2_exponential)
    assert report.kind == "exponential"
    # linearization at the minimum: alpha ~ exp(-4t), gap ~ alpha^2 ~ exp(-8t)
    assert 7.5 <= report.rate <= 8.5
    assert report.r2_exponential >= 0.9999
    assert report.n_tail >= 1000


def test_decay_is_undetermined_at_the_equilibrium():
    traj = evolve(
        _zero_state(64), TRIG, FlowParams(dt=1e-4, t_end=0.02, n=64), snapshot_every=1
    )
    report = decay_classifier(traj)
    assert report.kind == "undetermined"
    assert report.n_tail == 0


def test_decay_detects_an_algebraic_tail():
    # forged trajectory: amplitude ~ 1/t gives gap ~ t^(-2) for a flat density
    x = grid_points(64)
    times = np.linspace(1.0, 10.0, 150)
    states = [
        State(make_grid_function((0.05 / t) * np.sin(2.0 * np.pi * x)), 0.0) for t in times
    ]
    fake = Trajectory(
        times=np.array([0.0]),
        states=states,
        snapshot_times=times,
        diagnostics=DiagnosticsTable(np.zeros((1, 10))),
        final_state=states[-1],
        params=FlowParams(dt=0.01, t_end=1.0, n=64),
        model=Constant(1.0),
        completed=True,
    )
    report = decay_classifier(fake)
    print("forged tail:", report.kind, "power", report.power)
    assert report.kind == "algebraic"
    assert 1.8 <= report.power <= 2.2
    assert report.r2_algebraic >= 0.999


def test_decay_needs_enough_snapshots():
    traj = evolve(sine_state(64), TRIG, FlowParams(dt=1e-4, t_end=0.005, n=64))
    assert len(traj.states) == 51
    with pytest.raises(ValueError, match="100 snapshots"):
        decay_classifier(traj)


def test_predicted_limit_cases():
    assert abs(predicted_limit(TRIG, 0.3)) <= 1e-12
    assert abs(predicted_limit(TRIG, -0.3)) <= 1e-12
    assert abs(predicted_limit(TRIG, 0.5)) <= 1e-12
    assert abs(predicted_limit(TRIG, 0.9) - np.pi / 2.0) <= 1e-12
    # a start at rounding distance from a critical point stays there
    assert predicted_limit(TRIG, PI_4) == PI_4
    assert abs(predicted_limit(QUAD, 0.7)) <= 1e-12
    assert predicted_limit(Constant(2.0), 0.37) == 0.37


def test_length_constants_from_the_fit():
    fit = LsFit(
        theta=0.5, c_constant=4.0, r_squared=1.0, n_points=50,
        neighborhood_radius=0.1, slope=0.5,
    )
    gamma_exp, c5 = c5_from_fit(fit)
    assert gamma_exp == 1.0
    assert abs(c5 - 1.0) <= 1e-15  # 2^1 / 4^(1/2)
    fit2 = LsFit(
        theta=0.25, c_constant=4.0, r_squared=1.0, n_points=50,
        neighborhood_radius=0.1, slope=0.75,
    )
    gamma_exp2, c5_2 = c5_from_fit(fit2)
    assert abs(gamma_exp2 - 2.0 / 3.0) <= 1e-15
    assert abs(c5_2 - 2.0 ** (2.0 / 3.0) / 4.0**0.75) <= 1e-15


def test_length_estimate_spot_checks(trig_min_samples):
    fit = fit_ls_exponent(trig_min_samples)
    gamma_exp, c5 = c5_from_fit(fit)
    eq = _zero_state(256)
    for eps in (1e-1, 1e-2, 1e-3):
        st = sine_state(256, amplitude=eps, alpha=0.0)
        report = length_estimate_check(st.u, 0.0, eq, TRIG, gamma_exp, c5)
        print(f"eps={eps:g}: slack {report.slack:.6e} lhs {report.lhs} rhs {report.rhs}")
        assert report.holds
        assert report.slack >= -1e-12
        assert report.lhs <= report.rhs


def test_length_estimate_rejects_bad_exponents():
    eq = _zero_state(64)
    u = sine_state(64, amplitude=0.01, alpha=0.0).u
    for bad in (0.5, 0.0, 1.2, -1.0):
        with pytest.raises(ValueError, match="gamma_exp"):
            length_estimate_check(u, 0.0, eq, TRIG, bad, 1.0)
    length_estimate_check(u, 0.0, eq, TRIG, 1.0, 1.0)
    length_estimate_check(u, 0.0, eq, TRIG, 0.500001, 1.0)
