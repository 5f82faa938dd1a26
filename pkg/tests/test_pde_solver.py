import math

import numpy as np
import pytest

from cosmowave import coefficients as co
from cosmowave import pde_solver as pde
from cosmowave.errors import DomainError, GridTooCoarse, NoBlowupSignature

BUMP_INTEGRAL_1D = 1.2069003224378765
BUMP_SQUARE_1D = 0.9833808129127184

FLAT = co.PowerSpeed(0.0)


def bump_data(amp0=1.0, amp1=1.0, R=1.0):
    return pde.InitialData(shape=pde.SmoothBump(amp0, amp1), R=R)


def make_spec(profile=FLAT, n=1, p=2.0, kind=pde.Nonlinearity.NONE, eps=1.0,
              amp0=1.0, amp1=1.0, R=1.0):
    return pde.ProblemSpec(
        n=n, p=p, F_kind=kind, epsilon=eps,
        data=bump_data(amp0, amp1, R), profile=profile,
    )


def advance(spec, grid, t_end):
    st = pde.init_state(spec, grid, t_end)
    while st.t < t_end - 1e-12:
        st = pde.step(st, spec, min(pde.propose_dt(st, spec), t_end - st.t))
    return st


# --- initialization ---------------------------------------------------------


def test_frozen_bump_constants_match_quadrature():
    # the constants asserted across the suite come from this oracle
    from scipy.integrate import quad

    f = lambda x: math.exp(1.0 - 1.0 / (1.0 - x * x)) if abs(x) < 1.0 else 0.0
    val, _ = quad(f, -1.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=400)
    assert math.isclose(val, BUMP_INTEGRAL_1D, rel_tol=1e-10)
    val2, _ = quad(lambda x: f(x) ** 2, -1.0, 1.0, epsabs=1e-13, limit=400)
    assert math.isclose(val2, BUMP_SQUARE_1D, rel_tol=1e-10)


def test_zero_data_stays_zero():
    spec = make_spec(eps=0.0)
    st = pde.init_state(spec, pde.GridConfig(dx=1 / 64), 1.0)
    assert np.all(st.u == 0.0) and np.all(st.v == 0.0)
    st = pde.step(st, spec)
    assert np.all(st.u == 0.0) and np.all(st.v == 0.0)


def test_initial_velocity_integral_matches_quadrature():
    spec = make_spec(eps=0.1)
    st = pde.init_state(spec, pde.GridConfig(dx=1 / 64), 1.0)
    assert math.isclose(pde.w_functional(st), 0.1 * BUMP_INTEGRAL_1D, rel_tol=1e-6)


def test_initial_support_within_radius():
    for n in (1, 2, 3):
        spec = make_spec(n=n, eps=0.1)
        st = pde.init_state(spec, pde.GridConfig(dx=1 / 64), 1.0)
        assert pde.support_radius(st) <= 1.0 + st.dx


def test_grid_too_coarse_rejected():
    with pytest.raises(GridTooCoarse):
        pde.init_state(make_spec(), pde.GridConfig(dx=1 / 8), 1.0)


def test_unrepresentable_domain_rejected():
    spec = make_spec(profile=co.AntiDeSitter(1.0, 1))
    with pytest.raises(DomainError):
        pde.init_state(spec, pde.GridConfig(dx=1 / 64), 100.0)


def test_sampled_initial_data_interpolated():
    xs = np.linspace(-1.0, 1.0, 201)
    shape = pde.SampledData(x=xs, u0=np.zeros(201), u1=pde.bump_profile(xs, 1.0))
    spec = pde.ProblemSpec(
        n=1, p=2.0, F_kind=pde.Nonlinearity.NONE, epsilon=0.5,
        data=pde.InitialData(shape=shape, R=1.0), profile=FLAT,
    )
    st = pde.init_state(spec, pde.GridConfig(dx=1 / 64), 1.0)
    assert math.isclose(
        pde.w_functional(st), 0.5 * BUMP_INTEGRAL_1D, rel_tol=1e-3
    )
    assert pde.support_radius(st) <= 1.0 + st.dx


def test_domain_sized_by_propagation_bound():
    grid = pde.GridConfig(dx=1 / 64, pad_cells=48)
    st = pde.init_state(make_spec(), grid, 3.0)
    assert st.x_max >= 3.0 + 1.0 + 48 / 64


def test_antidamping_needs_positive_velocity_integral():
    spec = make_spec(profile=co.AntiDeSitter(1.0, 1),
                     kind=pde.Nonlinearity.ABS_UT_P, amp1=-1.0, eps=0.1)
    with pytest.raises(DomainError):
        pde.init_state(spec, pde.GridConfig(dx=1 / 64), 1.0)


# --- linear propagation -----------------------------------------------------


def test_dalembert_solution():
    spec = make_spec(amp1=0.0)
    st = advance(spec, pde.GridConfig(dx=1 / 128), 1.0)
    exact = 0.5 * (pde.bump_profile(st.x - 1.0, 1.0) + pde.bump_profile(st.x + 1.0, 1.0))
    assert float(np.abs(st.u - exact).max()) < 1.5e-3


def test_dalembert_second_order_convergence():
    errs = []
    for dx in (1 / 128, 1 / 256, 1 / 512):
        spec = make_spec(amp1=0.0)
        st = advance(spec, pde.GridConfig(dx=dx), 1.0)
        exact = 0.5 * (
            pde.bump_profile(st.x - 1.0, 1.0) + pde.bump_profile(st.x + 1.0, 1.0)
        )
        errs.append(float(np.abs(st.u - exact).max()))
    assert 3.5 <= errs[0] / errs[1] <= 4.5
    assert 3.5 <= errs[1] / errs[2] <= 4.5


def test_even_data_stays_exactly_even():
    spec = make_spec(profile=co.FlrwExpanding(1.0, 2.0),
                     kind=pde.Nonlinearity.ABS_UT_P, eps=0.1)
    st = pde.init_state(spec, pde.GridConfig(dx=1 / 64), 0.5)
    for _ in range(40):
        st = pde.step(st, spec)
    assert np.array_equal(st.u, st.u[::-1])
    assert np.array_equal(st.v, st.v[::-1])


def test_linearity_in_epsilon():
    grid = pde.GridConfig(dx=1 / 64)
    st1 = advance(make_spec(eps=0.25), grid, 0.5)
    st2 = advance(make_spec(eps=0.5), grid, 0.5)
    assert np.allclose(2.0 * st1.u, st2.u, rtol=1e-13, atol=1e-300)
    assert np.allclose(2.0 * st1.v, st2.v, rtol=1e-13, atol=1e-300)


def test_energy_conserved_for_flat_linear_wave():
    spec = make_spec()
    grid = pde.GridConfig(dx=1 / 64)
    res = pde.run(spec, grid, pde.StopRule(t_max=10.0), stride=20)
    E = res.trace.E0
    drift = np.max(np.abs(E - E[0])) / E[0]
    assert drift <= 1e-4


# --- nonlinear dynamics -----------------------------------------------------


def test_constant_slice_follows_scalar_ode():
    # flat in space, so the Laplacian vanishes and v follows
    # v' = beta v + v^2 with beta = 2 (closed Bernoulli form)
    spec = make_spec(profile=co.AntiDeSitter(1.0, 2),
                     kind=pde.Nonlinearity.SIGNED_UT_P, p=2.0, eps=0.1)
    st = pde.init_state(spec, pde.GridConfig(dx=1 / 32), 0.5)
    st.u[:] = 0.0
    st.v[:] = 0.05
    dt, steps = 1e-3, 200
    for _ in range(steps):
        st = pde.step(st, spec, dt)
    t = dt * steps
    v0, beta = 0.05, 2.0
    exact = beta * v0 * math.exp(beta * t) / (beta + v0 - v0 * math.exp(beta * t))
    center = st.v[st.v.size // 2]
    assert math.isclose(center, exact, rel_tol=1e-8)


def test_velocity_integral_identity_per_step():
    # dW/dt = b W + int |v|^p, since the Laplacian telescopes away
    spec = make_spec(profile=co.AntiDeSitter(1.0, 1),
                     kind=pde.Nonlinearity.ABS_UT_P, p=2.0, eps=0.1)
    st = pde.init_state(spec, pde.GridConfig(dx=1 / 64), 1.0)
    for _ in range(60):
        dt = 1e-3
        W0 = pde.w_functional(st)
        rhs0 = 1.0 * W0 + float(np.dot(st.quad_w, np.abs(st.v) ** 2.0))
        st = pde.step(st, spec, dt)
        W1 = pde.w_functional(st)
        rhs1 = 1.0 * W1 + float(np.dot(st.quad_w, np.abs(st.v) ** 2.0))
        lhs = (W1 - W0) / dt
        assert math.isclose(lhs, 0.5 * (rhs0 + rhs1), rel_tol=1e-6)


def test_linear_antidamped_velocity_integral_grows_exponentially():
    spec = make_spec(profile=co.AntiDeSitter(1.0, 2), kind=pde.Nonlinearity.NONE,
                     eps=0.1)
    res = pde.run(spec, pde.GridConfig(dx=1 / 64), pde.StopRule(t_max=1.0), stride=10)
    tr = res.trace
    for t, w in zip(tr.t, tr.W):
        assert math.isclose(w, tr.W[0] * math.exp(2.0 * t), rel_tol=1e-6)


def test_blow_up_detected_for_anti_de_sitter():
    spec = make_spec(profile=co.AntiDeSitter(1.0, 1),
                     kind=pde.Nonlinearity.ABS_UT_P, p=2.0, eps=0.2)
    res = pde.run(spec, pde.GridConfig(dx=1 / 32), pde.StopRule(t_max=4.0))
    assert res.outcome is pde.Outcome.BLOW_UP
    assert res.T_est is not None and res.T_est <= 4.0
    assert res.fit_quality > 0.99
    assert res.T_lower_witness <= res.T_est + 1e-6


def test_blowup_time_decreasing_in_epsilon():
    times = []
    for eps in (0.05, 0.1, 0.2, 0.4):
        spec = make_spec(profile=co.AntiDeSitter(1.0, 1),
                         kind=pde.Nonlinearity.ABS_UT_P, p=2.0, eps=eps)
        res = pde.run(spec, pde.GridConfig(dx=1 / 32), pde.StopRule(t_max=5.0))
        assert res.outcome is pde.Outcome.BLOW_UP
        times.append(res.T_est)
    assert all(a > b for a, b in zip(times, times[1:]))


def test_unstable_reported_when_threshold_never_fires():
    spec = make_spec(profile=co.AntiDeSitter(1.0, 1),
                     kind=pde.Nonlinearity.ABS_UT_P, p=2.0, eps=0.2)
    res = pde.run(
        spec,
        pde.GridConfig(dx=1 / 32),
        pde.StopRule(t_max=4.0, blowup_threshold=1e308),
    )
    assert res.outcome in (pde.Outcome.UNSTABLE, pde.Outcome.BLOW_UP)
    # with the default threshold the same run is a clean blow-up
    res = pde.run(spec, pde.GridConfig(dx=1 / 32), pde.StopRule(t_max=4.0))
    assert res.outcome is pde.Outcome.BLOW_UP


def test_boundary_contamination_detected_with_thin_pad():
    grid = pde.GridConfig(dx=1 / 64, pad_cells=5)
    res = pde.run(make_spec(), grid, pde.StopRule(t_max=3.0), stride=10)
    assert res.outcome is pde.Outcome.BOUNDARY_CONTAMINATED
    assert res.t_end < 3.0


def test_support_bound_on_linear_run():
    grid = pde.GridConfig(dx=1 / 128, support_rel_threshold=1e-3)
    res = pde.run(make_spec(), grid, pde.StopRule(t_max=3.0), stride=5)
    for t, s in zip(res.trace.t, res.trace.support_radius):
        assert s <= t + 1.0 + 2.0 / 128 + 1e-12


def test_radial_runs_complete_and_respect_support():
    for n, profile in ((2, FLAT), (3, co.DeSitter(1.0, 3))):
        spec = make_spec(profile=profile, n=n, kind=pde.Nonlinearity.ABS_UT_P,
                         eps=0.01)
        grid = pde.GridConfig(dx=1 / 128, support_rel_threshold=1e-3)
        res = pde.run(spec, grid, pde.StopRule(t_max=2.0), stride=5)
        assert res.outcome is pde.Outcome.COMPLETED
        for t, s in zip(res.trace.t, res.trace.support_radius):
            bound = profile.big_A(t) + 1.0 + 2.0 / 128
            assert s <= bound + 1e-12


def test_radial_origin_regularity():
    # the polar-regularized stencil keeps the origin smooth: no spike
    spec = make_spec(n=3, eps=0.1, amp1=0.0)
    st = advance(spec, pde.GridConfig(dx=1 / 64), 0.5)
    assert np.all(np.isfinite(st.u))
    assert abs(st.u[0] - st.u[1]) < 0.05


# --- energies ---------------------------------------------------------------


def test_energy_zero_and_definition():
    spec = make_spec(eps=0.0)
    st = pde.init_state(spec, pde.GridConfig(dx=1 / 64), 1.0)
    assert pde.energy(st, spec, 0) == 0.0
    spec = make_spec(amp0=0.0, amp1=1.0)
    st = pde.init_state(spec, pde.GridConfig(dx=1 / 64), 1.0)
    assert math.isclose(pde.energy(st, spec, 0), math.sqrt(BUMP_SQUARE_1D), rel_tol=1e-4)
    assert pde.energy(st, spec, 1) >= pde.energy(st, spec, 0)


def test_energy_nonincreasing_linear_dissipative_run():
    # with no forcing and the dissipativity condition holding, the energy
    # must not grow beyond discretization slack at any recorded step
    spec = make_spec(profile=co.FlrwExpanding(1.0, 2.0),
                     kind=pde.Nonlinearity.NONE, eps=0.1)
    res = pde.run(spec, pde.GridConfig(dx=1 / 64), pde.StopRule(t_max=8.0), stride=3)
    E = res.trace.E0
    rises = np.diff(E)
    assert np.all(rises <= 1e-6 * E[0])
    assert E[-1] < E[0]


def test_blowup_run_velocity_integral_floor():
    # recorded W on an antidamped blow-up run stays above the
    # exponential floor W(0) exp(int b_-)
    spec = make_spec(profile=co.AntiDeSitter(1.0, 1),
                     kind=pde.Nonlinearity.ABS_UT_P, p=2.0, eps=0.1)
    res = pde.run(spec, pde.GridConfig(dx=1 / 32), pde.StopRule(t_max=4.0), stride=5)
    assert res.outcome is pde.Outcome.BLOW_UP
    tr = res.trace
    for t, w in zip(tr.t, tr.W):
        if math.isfinite(w):
            assert w >= tr.W[0] * math.exp(t) * (1.0 - 1e-5)


def test_energy_inequality_dissipative_run():
    spec = make_spec(profile=co.FlrwExpanding(1.0, 2.0),
                     kind=pde.Nonlinearity.ABS_UT_P, p=2.0, eps=0.01)
    res = pde.run(spec, pde.GridConfig(dx=1 / 64), pde.StopRule(t_max=10.0), stride=5)
    tr = res.trace
    bound = tr.E0[0] + tr.forcing_budget + 1e-3 * tr.E0[0]
    assert np.all(tr.E0 <= bound)


# --- step control -----------------------------------------------------------


def test_dt_shrinks_with_growing_speed():
    spec = make_spec(profile=co.AntiDeSitter(1.0, 1), kind=pde.Nonlinearity.NONE)
    st = pde.init_state(spec, pde.GridConfig(dx=1 / 64), 2.0)
    dt0 = pde.propose_dt(st, spec)
    st.t = 2.0
    assert pde.propose_dt(st, spec) < dt0 / 5.0


def test_dt_capped_by_damping_rate():
    # de Sitter speed decays, so raw CFL would grow without bound; the
    # reaction-rate cap must kick in
    spec = make_spec(profile=co.DeSitter(1.0, 3), kind=pde.Nonlinearity.ABS_UT_P,
                     p=2.0, eps=0.01)
    st = pde.init_state(spec, pde.GridConfig(dx=1 / 64), 40.0)
    st.t = 30.0
    assert pde.propose_dt(st, spec) <= 0.1 / 3.0 + 1e-12


def test_wall_budget_stops_early():
    spec = make_spec()
    res = pde.run(
        spec,
        pde.GridConfig(dx=1 / 64),
        pde.StopRule(t_max=200.0, wall_budget=0.05),
        stride=50,
    )
    assert res.outcome is pde.Outcome.COMPLETED
    assert res.t_end < 200.0


def test_run_deterministic():
    spec = make_spec(profile=co.FlrwExpanding(1.0, 2.0),
                     kind=pde.Nonlinearity.ABS_UT_P, p=2.0, eps=0.01)
    grid = pde.GridConfig(dx=1 / 64)
    a = pde.run(spec, grid, pde.StopRule(t_max=3.0), stride=7)
    b = pde.run(spec, grid, pde.StopRule(t_max=3.0), stride=7)
    assert np.array_equal(a.trace.t, b.trace.t)
    assert np.array_equal(a.trace.E0, b.trace.E0)
    assert np.array_equal(a.trace.W, b.trace.W)


# --- blow-up time extrapolation ----------------------------------------------


def synthetic_trace(ts, M):
    z = np.zeros_like(ts)
    return pde.Trace(t=ts, E0=z, E1=z, W=z, support_radius=z,
                     max_abs_v=M, dt=z, forcing_budget=z)


def test_estimate_blowup_exact_pole():
    ts = np.linspace(1.5, 1.9, 32)
    fit = pde.estimate_blowup_time(synthetic_trace(ts, 1.0 / (2.0 - ts)), 2.0)
    assert math.isclose(fit.T_est, 2.0, abs_tol=1e-6)
    assert fit.fit_quality > 1.0 - 1e-12


def test_estimate_blowup_exponent_matched_pole():
    ts = np.linspace(4.0, 4.9, 64)
    fit = pde.estimate_blowup_time(synthetic_trace(ts, (5.0 - ts) ** -2.0), 1.5)
    assert math.isclose(fit.T_est, 5.0, abs_tol=1e-6)


def test_estimate_blowup_rejects_bounded_trace():
    ts = np.linspace(0.0, 5.0, 64)
    with pytest.raises(NoBlowupSignature):
        pde.estimate_blowup_time(synthetic_trace(ts, np.full(64, 2.0)), 2.0)


def test_estimate_blowup_rejects_nonmonotone_tail():
    ts = np.linspace(0.0, 1.0, 32)
    M = np.linspace(1.0, 10.0, 32)
    M[-3] = M[-2] + 1.0  # break monotonicity inside the last decade
    with pytest.raises(NoBlowupSignature):
        pde.estimate_blowup_time(synthetic_trace(ts, M), 2.0)


def test_estimate_blowup_confidence_width_meaningful():
    rng = np.random.default_rng(7)
    ts = np.linspace(1.5, 1.9, 64)
    M = 1.0 / (2.0 - ts) * (1.0 + 1e-3 * rng.standard_normal(64))
    M = np.maximum.accumulate(M)  # keep the tail monotone
    fit = pde.estimate_blowup_time(synthetic_trace(ts, M), 2.0)
    assert fit.confidence_width > 0
    assert abs(fit.T_est - 2.0) < 10.0 * fit.confidence_width + 5e-3
