import math

import numpy as np
import pytest

from cosmowave import coefficients as co
from cosmowave import theory
from cosmowave.errors import DomainError, InconsistentForm, NotBlowUpRegime
from cosmowave.theory import FKind, LawForm, Verdict


UT = FKind.ABS_UT_P


def test_de_sitter_global_for_all_p():
    for p in (1.01, 1.2, 2.0, 5.0):
        rep = theory.classify(co.DeSitter(1.0, 3), 3, p, UT)
        assert rep.verdict is Verdict.GLOBAL_EXISTENCE
        assert rep.rule_fired == theory.RULE_GLOBAL
        assert rep.lifespan_upper is None


def test_flrw_global_above_integrability_threshold():
    rep = theory.classify(co.FlrwExpanding(1.0, 2.0), 3, 2.5, UT)
    assert rep.verdict is Verdict.GLOBAL_EXISTENCE


def test_flrw_blowup_with_both_laws():
    # alpha = mu = 1, p = 1.5: blow-up range with a power lower law and a
    # log-corrected power upper law
    rep = theory.classify(co.FlrwExpanding(1.0, 1.0), 3, 1.5, UT)
    assert rep.verdict is Verdict.BLOW_UP
    assert rep.rule_fired == theory.RULE_FLRW_HIGH
    assert rep.lifespan_lower.form is LawForm.POWER
    assert math.isclose(rep.lifespan_lower.exponent, 1.0)
    assert rep.lifespan_upper.form is LawForm.POWER_TIMES_LOG
    assert rep.lifespan_upper.implicit_mu == 1.0


def test_flrw_sharp_two_sided_regime():
    rep = theory.classify(co.FlrwExpanding(2.0, 2.0), 1, 1.25, UT)
    assert rep.verdict is Verdict.BLOW_UP
    assert rep.rule_fired.endswith(theory.SHARP_NOTE.strip(" "))
    lo, up = rep.lifespan_lower, rep.lifespan_upper
    assert lo.form is LawForm.POWER and up.form is LawForm.POWER
    assert math.isclose(lo.exponent, 0.5) and math.isclose(up.exponent, 0.5)


def test_flrw_open_case_at_critical_exponent():
    rep = theory.classify(co.FlrwExpanding(2.0, 2.0), 1, 1.5, UT)
    assert rep.verdict is Verdict.UNDETERMINED
    assert rep.rule_fired == theory.RULE_OPEN_CASE
    assert rep.critical_exponent == 1.5
    # at the boundary the lower law switches to the exponential form
    assert rep.lifespan_lower.form is LawForm.EXP_POWER


def test_flrw_lower_bound_only_case():
    # mu > alpha keeps dissipativity, divergent speed integral, and the
    # blow-up range 1 < p < 1 + 1/mu excludes p = 1.5
    rep = theory.classify(co.FlrwExpanding(1.0, 2.0), 3, 1.5, UT)
    assert rep.verdict is Verdict.UNDETERMINED
    assert rep.rule_fired == theory.RULE_LOWER_ONLY
    assert rep.lifespan_lower.form is LawForm.POWER


def test_flrw_low_alpha_conditions():
    # alpha = 0.5, mu = 0.5, n = 1: both overlapping ranges fire at small p
    rep = theory.classify(co.FlrwExpanding(0.5, 0.5), 1, 1.5, UT)
    assert rep.verdict is Verdict.BLOW_UP
    assert "[i,ii]" in rep.rule_fired
    # n = 3 with mu = 0 and p near the first bound: only condition [i]
    rep = theory.classify(co.FlrwExpanding(0.5, 0.0), 3, 2.3, UT)
    assert rep.verdict is Verdict.BLOW_UP
    assert "[i]" in rep.rule_fired and "[i,ii]" not in rep.rule_fired


def test_flrw_low_alpha_condition_ii_only():
    # [ii] reaches past [i] for n = 1 when mu < 3 alpha - 2: with
    # alpha = 0.9, mu = 0.1 the bounds are 3.0 and 6.0
    rep = theory.classify(co.FlrwExpanding(0.9, 0.1), 1, 4.0, UT)
    assert rep.verdict is Verdict.BLOW_UP
    assert "[ii]" in rep.rule_fired and "[i," not in rep.rule_fired


def test_flrw_not_dissipative_undetermined():
    # p outside the alpha >= 1 blow-up range (p >= 1 + 1/mu) and the
    # energy hypothesis fails, so nothing applies
    rep = theory.classify(co.FlrwExpanding(2.0, 0.2), 1, 7.0, UT)
    assert rep.verdict is Verdict.UNDETERMINED
    assert rep.rule_fired == theory.RULE_NOT_DISSIPATIVE


def test_flrw_blowup_does_not_need_dissipativity():
    # mu < alpha violates the energy hypothesis but the blow-up range for
    # alpha >= 1 still applies; no lower law is attached then
    rep = theory.classify(co.FlrwExpanding(2.0, 0.2), 1, 1.5, UT)
    assert rep.verdict is Verdict.BLOW_UP
    assert rep.rule_fired == theory.RULE_FLRW_HIGH
    assert rep.lifespan_lower is None


def test_anti_de_sitter_equal_rates():
    rep = theory.classify(co.AntiDeSitter(1.0, 2), 2, 2.0, UT, R=1.0)
    assert rep.verdict is Verdict.BLOW_UP
    assert rep.rule_fired == theory.RULE_T31_EQ
    law = rep.lifespan_upper
    assert law.form is LawForm.POWER_TIMES_LOG and law.exponent == 1.0


def test_antidamping_beta_above_alpha():
    t = np.linspace(0.0, 30.0, 601)
    profile = co.Custom(
        t_a=t,
        a_values=np.exp(t),
        t_b=t,
        b_values=np.full(t.size, 2.0),
        sign_convention=co.SignConvention.ANTIDAMPING,
        tail_a=co.TailClass.GROWING,
        tail_b=co.TailClass.CONSTANT,
    )
    rep = theory.classify(profile, 1, 2.0, UT, R=1.0)
    assert rep.verdict is Verdict.BLOW_UP
    assert rep.rule_fired == theory.RULE_T31_GT
    assert rep.lifespan_upper.form is LawForm.LOG


def test_anti_de_sitter_small_radius_undetermined():
    # HR < 1 puts the cone-opening supremum above the antidamping floor
    # and the decay integral converges: no rule fires
    rep = theory.classify(co.AntiDeSitter(1.0, 1), 1, 2.0, UT, R=0.5)
    assert rep.verdict is Verdict.UNDETERMINED
    assert rep.rule_fired == theory.RULE_NONE


@pytest.mark.parametrize(
    "alpha,n,p,form,exponent",
    [
        (0.0, 1, 1.5, LawForm.POWER, 1.0),   # n(p-1)(alpha+1) = 0.5
        (1.0, 1, 1.5, LawForm.EXP_POWER, 0.5),  # boundary case = 1
    ],
)
def test_power_speed_decay_integral_blowup(alpha, n, p, form, exponent):
    rep = theory.classify(co.PowerSpeed(alpha), n, p, UT, R=1.0)
    assert rep.verdict is Verdict.BLOW_UP
    assert rep.rule_fired == theory.RULE_COR32
    assert rep.lifespan_upper.form is form
    assert math.isclose(rep.lifespan_upper.exponent, exponent)


def test_power_speed_integrable_decay_no_rule():
    rep = theory.classify(co.PowerSpeed(1.0), 1, 2.5, UT, R=1.0)
    assert rep.verdict is Verdict.UNDETERMINED


def test_contracting_flrw_cor32():
    rep = theory.classify(co.FlrwContracting(1.0, 1.0), 1, 1.25, UT, R=1.0)
    assert rep.verdict is Verdict.BLOW_UP
    assert rep.rule_fired == theory.RULE_COR32


def test_tw7_de_sitter_fires_for_u_and_gradient():
    for kind in (FKind.ABS_U_P, FKind.ABS_GRAD_U_P):
        rep = theory.classify(co.DeSitter(1.0, 3), 3, 4.0, kind)
        assert rep.verdict is Verdict.BLOW_UP
        assert rep.rule_fired == theory.RULE_TW7


def test_tw7_flrw_damping_unbounded_below():
    rep = theory.classify(co.FlrwExpanding(2.0, 1.0), 3, 1.5, FKind.ABS_U_P)
    assert rep.verdict is Verdict.UNDETERMINED
    assert rep.rule_fired == theory.RULE_NONE


def test_tw7_rejects_antidamping_profiles():
    with pytest.raises(InconsistentForm):
        theory.classify(co.AntiDeSitter(1.0, 1), 1, 2.0, FKind.ABS_U_P)


def test_classify_verdict_independent_of_epsilon():
    rep = theory.classify(co.AntiDeSitter(1.0, 1), 1, 2.0, UT, R=1.0)
    # epsilon appears nowhere in the inputs echo or verdict
    assert "epsilon" not in rep.inputs
    for eps in (0.5, 1e-3, 1e-8):
        val = rep.lifespan_upper.evaluate(eps)
        assert val > 0


def test_classify_accepts_string_kind():
    rep = theory.classify(co.DeSitter(1.0, 1), 1, 2.0, "abs_ut_p")
    assert rep.verdict is Verdict.GLOBAL_EXISTENCE


def test_critical_exponent_values():
    assert theory.critical_exponent(co.FlrwExpanding(2.0, 2.0), 3) == 1.5
    assert theory.critical_exponent(co.FlrwExpanding(0.5, 0.5), 1) == 3.0
    assert theory.critical_exponent(co.FlrwExpanding(0.5, 0.5), 2) is None
    assert theory.critical_exponent(co.FlrwExpanding(1.0, 2.0), 2) is None
    assert theory.critical_exponent(co.DeSitter(1.0, 1), 1) is None


def test_global_blowup_split_around_critical_exponent():
    profile = co.FlrwExpanding(2.0, 2.0)
    pc = theory.critical_exponent(profile, 3)
    for p in (1.1, 1.3, 1.45):
        assert theory.classify(profile, 3, p, UT).verdict is Verdict.BLOW_UP
    for p in (1.55, 2.0, 4.0):
        assert (
            theory.classify(profile, 3, p, UT).verdict is Verdict.GLOBAL_EXISTENCE
        )
    assert theory.classify(profile, 3, pc, UT).verdict is Verdict.UNDETERMINED


# --- lifespan evaluation ----------------------------------------------------


def test_lower_lifespan_flat_speed():
    assert math.isclose(
        theory.predicted_lifespan_lower(co.PowerSpeed(0.0), 1, 2.0, 0.1), 10.0
    )


def test_lower_lifespan_log_divergence():
    got = theory.predicted_lifespan_lower(co.FlrwExpanding(1.0, 1.0), 1, 2.0, 0.1)
    assert math.isclose(got, math.expm1(10.0), rel_tol=1e-9)


def test_lower_lifespan_fractional_powers():
    got = theory.predicted_lifespan_lower(co.FlrwExpanding(0.5, 0.5), 1, 1.5, 0.01)
    expected = (1.0 + 0.75 * 0.01**-0.5) ** (4.0 / 3.0) - 1.0
    assert math.isclose(got, expected, rel_tol=1e-9)


def test_lower_lifespan_integrable_is_infinite():
    assert theory.predicted_lifespan_lower(co.DeSitter(1.0, 1), 1, 2.0, 0.1) == math.inf


def test_lower_lifespan_monotone_in_epsilon():
    profile = co.FlrwExpanding(0.5, 0.5)
    vals = [
        theory.predicted_lifespan_lower(profile, 1, 1.5, eps)
        for eps in (0.5, 0.1, 0.01, 0.001)
    ]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_upper_lifespan_values():
    _, val = theory.predicted_lifespan_upper(co.AntiDeSitter(1.0, 2), 2, 2.0, 0.01)
    assert math.isclose(val, 100.0 * math.log(100.0))
    _, val = theory.predicted_lifespan_upper(co.PowerSpeed(0.0), 1, 1.5, 0.01)
    assert math.isclose(val, 100.0)
    _, val = theory.predicted_lifespan_upper(co.PowerSpeed(1.0), 1, 1.5, 0.1)
    assert math.isclose(val, math.exp(0.1**-0.5), rel_tol=1e-12)


def test_upper_lifespan_monotone_in_epsilon():
    vals = [
        theory.predicted_lifespan_upper(co.AntiDeSitter(1.0, 1), 1, 2.0, eps)[1]
        for eps in (0.3, 0.1, 0.03, 0.01)
    ]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_upper_lifespan_requires_blowup_regime():
    with pytest.raises(NotBlowUpRegime):
        theory.predicted_lifespan_upper(co.DeSitter(1.0, 3), 3, 2.0, 0.1)


def test_invert_apm1_bisection_matches_closed_forms():
    cases = [
        (co.FlrwExpanding(0.5, 0.5), 1.5),
        (co.FlrwExpanding(1.0, 1.0), 2.0),
        (co.AntiDeSitter(1.0, 1), 2.0),
        (co.PowerSpeed(1.0), 1.5),
        (co.FlrwContracting(1.0, 0.0), 2.0),
    ]
    for profile, p in cases:
        for target in (0.5, 3.0, 40.0):
            closed = theory.invert_apm1(profile, p, target)
            bisect = theory.invert_apm1(profile, p, target, method="bisect")
            assert math.isclose(closed, bisect, rel_tol=1e-6), (profile, p, target)


def test_lower_lifespan_custom_profile_bisection():
    # tabulated constant speed a = 2: the speed-power integral is
    # 2^(p-1) T, so the inversion target eps^-(p-1) gives T explicitly
    t = np.linspace(0.0, 10.0, 11)
    profile = co.Custom(
        t_a=t, a_values=np.full(t.size, 2.0),
        t_b=t, b_values=np.zeros(t.size),
        sign_convention=co.SignConvention.ANTIDAMPING,
        tail_a=co.TailClass.CONSTANT,
    )
    got = theory.predicted_lifespan_lower(profile, 1, 2.0, 0.1)
    assert math.isclose(got, 10.0 / 2.0, rel_tol=1e-6)


def test_implicit_power_log_evaluation():
    # solve T^(1/2) (ln T)^(-3/2) = 100 and confirm the residual
    law = theory.LifespanLaw(
        theory.LawForm.POWER_TIMES_LOG,
        exponent=1.0,
        log_exponent=3.0,
        p=1.5,
        n=3,
        implicit_mu=1.0,
    )
    eps = 1.0e-4
    T = law.evaluate(eps)
    target = eps ** (-0.5)
    assert math.isclose(T**0.5 * math.log(T) ** -1.5, target, rel_tol=1e-9)


def test_law_serialization_roundtrip():
    rep = theory.classify(co.FlrwExpanding(1.0, 1.0), 3, 1.5, UT)
    doc = rep.to_dict()
    back = theory.report_from_dict(doc)
    assert back.verdict == rep.verdict
    assert back.rule_fired == rep.rule_fired
    assert back.lifespan_upper.form is rep.lifespan_upper.form
    assert back.inputs == rep.inputs


def test_classify_rejects_bad_arguments():
    with pytest.raises(DomainError):
        theory.classify(co.DeSitter(1.0, 1), 1, 0.5, UT)
    with pytest.raises(DomainError):
        theory.classify(co.DeSitter(1.0, 1), 0, 2.0, UT)
