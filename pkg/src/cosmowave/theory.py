"""Regime classification and closed-form lifespan bounds.

Maps a problem instance (coefficient profile, dimension, nonlinearity
exponent) onto the known global-existence and blow-up conditions and
attaches the matching lifespan scaling laws.  Every unknown constant in
those laws is fixed to 1; downstream comparisons therefore test shapes
and exponents, never absolute times.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from . import coefficients as coeff
from .coefficients import (
    AntiDeSitter,
    Custom,
    DeSitter,
    FlrwContracting,
    FlrwExpanding,
    Integrability,
    PowerSpeed,
    SignConvention,
    TailClass,
)
from .errors import DomainError, InconsistentForm, NotBlowUpRegime, Unconverged

EQ_TOL = 1.0e-9       # tolerance for alpha = beta comparisons
PARAM_TOL = 1.0e-12   # tolerance for parameter coincidences like mu = alpha

RULE_GLOBAL = "Thm2.2(1)"
RULE_LOWER_ONLY = "Thm2.2(2)"
RULE_FLRW_HIGH = "§2 FLRW blow-up α≥1"
RULE_FLRW_LOW_I = "§2 FLRW blow-up α<1 [i]"
RULE_FLRW_LOW_II = "§2 FLRW blow-up α<1 [ii]"
RULE_FLRW_LOW_BOTH = "§2 FLRW blow-up α<1 [i,ii]"
RULE_OPEN_CASE = "§2 FLRW p=p_c open problem"
RULE_T31_EQ = "Thm3.1 β=α"
RULE_T31_GT = "Thm3.1 β>α"
RULE_COR32 = "Cor3.2"
RULE_TW7 = "§1 TW7"
RULE_NOT_DISSIPATIVE = "(2.2) violated"
RULE_NONE = "no applicable rule"
SHARP_NOTE = " (Tep)"


class Verdict(enum.Enum):
    GLOBAL_EXISTENCE = "global_existence"
    BLOW_UP = "blow_up"
    UNDETERMINED = "undetermined"


class FKind(enum.Enum):
    ABS_UT_P = "abs_ut_p"
    ABS_U_P = "abs_u_p"
    ABS_GRAD_U_P = "abs_grad_u_p"


class LawForm(enum.Enum):
    POWER = "power"                        # T = eps^(-exponent)
    EXP_POWER = "exp_power"                # T = exp(eps^(-exponent))
    LOG = "log"                            # T = ln(1/eps)
    POWER_TIMES_LOG = "power_times_log"    # T = eps^(-exponent) ln(1/eps)^log_exponent
    IMPLICIT_APM1 = "implicit_apm1"        # A_(p-1)(T) = eps^(-(p-1))
    IMPLICIT_INTEGRAL = "implicit_integral"  # int_0^T (A+R)^(-n(p-1)) = eps^(-(p-1))


@dataclass(frozen=True)
class LifespanLaw:
    """A lifespan scaling shape with the overall constant fixed to 1.

    For POWER_TIMES_LOG laws arising from the log-corrected polynomial
    regime, `implicit_mu` is set and numeric evaluation solves
    T^(1-mu(p-1)) (ln T)^(-n(p-1)) = eps^(-(p-1)) instead of using the
    explicit product form.
    """

    form: LawForm
    exponent: float | None = None
    log_exponent: float | None = None
    p: float | None = None
    n: int | None = None
    implicit_mu: float | None = None
    note: str = ""

    def evaluate(self, epsilon, profile=None, R=None):
        if not 0.0 < epsilon < 1.0:
            raise DomainError("epsilon must lie in (0, 1)")
        L = math.log(1.0 / epsilon)
        if self.form is LawForm.POWER:
            return epsilon ** (-self.exponent)
        if self.form is LawForm.EXP_POWER:
            return math.exp(epsilon ** (-self.exponent))
        if self.form is LawForm.LOG:
            return L
        if self.form is LawForm.POWER_TIMES_LOG:
            if self.implicit_mu is not None:
                target = epsilon ** (-(self.p - 1.0))
                return _solve_power_log(
                    1.0 - self.implicit_mu * (self.p - 1.0),
                    self.n * (self.p - 1.0),
                    target,
                )
            return epsilon ** (-self.exponent) * L ** (self.log_exponent or 1.0)
        if self.form is LawForm.IMPLICIT_APM1:
            if profile is None:
                raise DomainError("implicit law needs the coefficient profile")
            return invert_apm1(profile, self.p, epsilon ** (-(self.p - 1.0)))
        if self.form is LawForm.IMPLICIT_INTEGRAL:
            if profile is None or R is None:
                raise DomainError("implicit law needs the profile and R")
            return _invert_decay_integral(
                profile, self.n, self.p, R, epsilon ** (-(self.p - 1.0))
            )
        raise DomainError(f"unhandled law form {self.form}")

    def to_dict(self):
        d = {"form": self.form.value, "constant_convention": "C=1"}
        for key in ("exponent", "log_exponent", "p", "n", "implicit_mu"):
            val = getattr(self, key)
            if val is not None:
                d[key] = val
        if self.note:
            d["note"] = self.note
        return d


def law_from_dict(d):
    return LifespanLaw(
        form=LawForm(d["form"]),
        exponent=d.get("exponent"),
        log_exponent=d.get("log_exponent"),
        p=d.get("p"),
        n=d.get("n"),
        implicit_mu=d.get("implicit_mu"),
        note=d.get("note", ""),
    )


@dataclass(frozen=True)
class RegimeReport:
    verdict: Verdict
    rule_fired: str
    lifespan_lower: LifespanLaw | None = None
    lifespan_upper: LifespanLaw | None = None
    critical_exponent: float | None = None
    inputs: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "verdict": self.verdict.value,
            "rule_fired": self.rule_fired,
            "lifespan_lower": self.lifespan_lower.to_dict()
            if self.lifespan_lower
            else None,
            "lifespan_upper": self.lifespan_upper.to_dict()
            if self.lifespan_upper
            else None,
            "critical_exponent": self.critical_exponent,
            "inputs": self.inputs,
        }


def report_from_dict(d):
    return RegimeReport(
        verdict=Verdict(d["verdict"]),
        rule_fired=d["rule_fired"],
        lifespan_lower=law_from_dict(d["lifespan_lower"])
        if d.get("lifespan_lower")
        else None,
        lifespan_upper=law_from_dict(d["lifespan_upper"])
        if d.get("lifespan_upper")
        else None,
        critical_exponent=d.get("critical_exponent"),
        inputs=d.get("inputs", {}),
    )


def critical_exponent(profile, n):
    """Exponent separating global existence from blow-up, when known.

    Defined for the expanding polynomial family with mu = alpha: equal to
    1 + 1/alpha when alpha >= 1, and also when n = 1 with alpha < 1.
    """
    if not isinstance(profile, FlrwExpanding):
        return None
    al, mu = profile.alpha_exp, profile.mu
    if abs(mu - al) > PARAM_TOL * max(1.0, al):
        return None
    if al >= 1.0 or n == 1:
        return 1.0 + 1.0 / al
    return None


def classify(profile, n, p, F_kind, R=1.0):
    """Classify a problem instance into global existence / blow-up regimes.

    The verdict never depends on epsilon; epsilon enters only when the
    attached laws are evaluated numerically.
    """
    if not p > 1.0:
        raise DomainError("p must exceed 1")
    if n < 1:
        raise DomainError("n must be a positive integer")
    if isinstance(F_kind, str):
        F_kind = FKind(F_kind)
    inputs = {
        "profile": profile.to_dict(),
        "n": n,
        "p": p,
        "F_kind": F_kind.value,
        "R": R,
    }
    if F_kind in (FKind.ABS_U_P, FKind.ABS_GRAD_U_P):
        if profile.sign_convention is not SignConvention.DAMPING:
            raise InconsistentForm(
                "the |u|^p and |grad u|^p conditions apply to the damping form"
            )
        return _classify_tw7(profile, n, p, F_kind, inputs)
    if profile.sign_convention is SignConvention.DAMPING:
        return _classify_damping(profile, n, p, inputs)
    return _classify_antidamping(profile, n, p, R, inputs)


# --- damping form, F = |u_t|^p ------------------------------------------


def _classify_damping(profile, n, p, inputs):
    diss = coeff.check_dissipative(profile)
    integ = coeff.a_pm1_integrable(profile, p)
    pc = critical_exponent(profile, n)

    if isinstance(profile, FlrwExpanding):
        al, mu = profile.alpha_exp, profile.mu
        mu_eq_al = abs(mu - al) <= PARAM_TOL * max(1.0, al)
        if (
            pc is not None
            and mu_eq_al
            and al >= 1.0
            and abs(p - pc) <= PARAM_TOL * pc
        ):
            lower = _lower_law_flrw(al, p) if diss.holds else None
            return RegimeReport(
                Verdict.UNDETERMINED, RULE_OPEN_CASE, lower, None, pc, inputs
            )
        rule, upper = _flrw_blowup_rule(al, mu, n, p)
        if rule is not None:
            lower = None
            if diss.holds and integ is Integrability.DIVERGENT:
                lower = _lower_law_flrw(al, p)
            if mu_eq_al and al > 1.0:
                rule += SHARP_NOTE
            return RegimeReport(Verdict.BLOW_UP, rule, lower, upper, pc, inputs)

    if integ is Integrability.INTEGRABLE and diss.holds:
        return RegimeReport(Verdict.GLOBAL_EXISTENCE, RULE_GLOBAL, None, None, pc, inputs)
    if integ is Integrability.DIVERGENT and diss.holds:
        lower = _lower_law_generic(profile, p)
        return RegimeReport(Verdict.UNDETERMINED, RULE_LOWER_ONLY, lower, None, pc, inputs)
    if not diss.holds:
        return RegimeReport(Verdict.UNDETERMINED, RULE_NOT_DISSIPATIVE, None, None, pc, inputs)
    return RegimeReport(Verdict.UNDETERMINED, RULE_NONE, None, None, pc, inputs)


def _flrw_blowup_rule(al, mu, n, p):
    """Blow-up ranges for the expanding polynomial pair, with upper laws."""
    if al >= 1.0:
        in_range = p < 1.0 + 1.0 / mu if mu > 0 else True
        if not in_range:
            return None, None
        if al > 1.0:
            upper = LifespanLaw(
                LawForm.POWER, exponent=(p - 1.0) / (1.0 - mu * (p - 1.0)), p=p
            )
        else:
            upper = LifespanLaw(
                LawForm.POWER_TIMES_LOG,
                exponent=(p - 1.0) / (1.0 - mu * (p - 1.0)),
                log_exponent=n * (p - 1.0) / (1.0 - mu * (p - 1.0)),
                p=p,
                n=n,
                implicit_mu=mu,
            )
        return RULE_FLRW_HIGH, upper
    # 0 < alpha < 1: two (overlapping) sufficient ranges
    bound_i = 1.0 + 2.0 / ((1.0 - al) * (n - 1) + mu + al)
    bound_ii = 1.0 + 1.0 / (n * (1.0 - al) + mu)
    fires_i = p <= bound_i + PARAM_TOL
    fires_ii = p < bound_ii
    if not (fires_i or fires_ii):
        return None, None
    if fires_i and fires_ii:
        rule = RULE_FLRW_LOW_BOTH
    elif fires_i:
        rule = RULE_FLRW_LOW_I
    else:
        rule = RULE_FLRW_LOW_II
    upper = None
    if n == 1 and abs(mu - al) <= PARAM_TOL and al * (p - 1.0) < 1.0:
        # sharp two-sided regime: upper matches the lower-bound power
        upper = LifespanLaw(
            LawForm.POWER, exponent=(p - 1.0) / (1.0 - al * (p - 1.0)), p=p
        )
        rule += SHARP_NOTE
    return rule, upper


def _lower_law_flrw(al, p):
    s = al * (p - 1.0)
    if s < 1.0:
        return LifespanLaw(LawForm.POWER, exponent=(p - 1.0) / (1.0 - s), p=p)
    if abs(s - 1.0) <= PARAM_TOL:
        return LifespanLaw(LawForm.EXP_POWER, exponent=p - 1.0, p=p)
    return None  # integrable side, no finite lower law


def _lower_law_generic(profile, p):
    if isinstance(profile, FlrwExpanding):
        return _lower_law_flrw(profile.alpha_exp, p)
    return LifespanLaw(LawForm.IMPLICIT_APM1, p=p)


# --- TW7-style conditions, F = |u|^p or |grad u|^p ------------------------


def _classify_tw7(profile, n, p, F_kind, inputs):
    pc = critical_exponent(profile, n)
    if isinstance(profile, DeSitter):
        bounded_damping = True
        beta_tw = profile.beta_tw()
    elif isinstance(profile, FlrwExpanding):
        bounded_damping = False  # mu/(t+1) is not bounded below by a constant
        beta_tw = profile.beta_tw()
    else:
        return RegimeReport(Verdict.UNDETERMINED, RULE_NONE, None, None, pc, inputs)
    if not bounded_damping:
        return RegimeReport(Verdict.UNDETERMINED, RULE_NONE, None, None, pc, inputs)
    if F_kind is FKind.ABS_U_P:
        fires = 1.0 - n * beta_tw * (p - 1.0) > 0.0
    else:
        fires = 1.0 - beta_tw * (n * (p - 1.0) + p) > 0.0
    if fires:
        return RegimeReport(Verdict.BLOW_UP, RULE_TW7, None, None, pc, inputs)
    return RegimeReport(Verdict.UNDETERMINED, RULE_NONE, None, None, pc, inputs)


# --- antidamping form, F = |u_t|^p ----------------------------------------


def _classify_antidamping(profile, n, p, R, inputs):
    alpha = coeff.alpha_sup(profile, n, R)
    beta = coeff.beta_inf(profile)
    tol = EQ_TOL * max(1.0, alpha.value)
    if beta >= alpha.value - tol:
        if abs(beta - alpha.value) <= tol:
            upper = LifespanLaw(
                LawForm.POWER_TIMES_LOG, exponent=p - 1.0, log_exponent=1.0, p=p
            )
            return RegimeReport(Verdict.BLOW_UP, RULE_T31_EQ, None, upper, None, inputs)
        upper = LifespanLaw(LawForm.LOG, p=p)
        return RegimeReport(Verdict.BLOW_UP, RULE_T31_GT, None, upper, None, inputs)
    divergent = _decay_integral_divergent(profile, n, p)
    if divergent is True:
        upper = _cor32_upper_law(profile, n, p)
        return RegimeReport(Verdict.BLOW_UP, RULE_COR32, None, upper, None, inputs)
    return RegimeReport(Verdict.UNDETERMINED, RULE_NONE, None, None, None, inputs)


def _decay_integral_divergent(profile, n, p):
    """Whether A(t)^(-n(p-1)) fails to be integrable at infinity."""
    k = n * (p - 1.0)
    if isinstance(profile, AntiDeSitter):
        return False  # A grows exponentially
    if isinstance(profile, (FlrwContracting, PowerSpeed)):
        al = profile.alpha_exp
        if al > -1.0:
            return k * (al + 1.0) <= 1.0 + PARAM_TOL
        return True  # A grows at most logarithmically or stays bounded
    if isinstance(profile, Custom):
        if profile.tail_a is TailClass.CONSTANT:
            return k <= 1.0 + PARAM_TOL
        if profile.tail_a is TailClass.GROWING:
            return 2.0 * k <= 1.0 + PARAM_TOL  # linear-tail extrapolation
        return None
    return None


def _cor32_upper_law(profile, n, p):
    if isinstance(profile, (FlrwContracting, PowerSpeed)):
        al = profile.alpha_exp
        if al > -1.0:
            k = n * (p - 1.0) * (al + 1.0)
            if abs(k - 1.0) <= PARAM_TOL:
                return LifespanLaw(LawForm.EXP_POWER, exponent=p - 1.0, p=p)
            if k < 1.0:
                return LifespanLaw(
                    LawForm.POWER, exponent=(p - 1.0) / (1.0 - k), p=p
                )
    return LifespanLaw(LawForm.IMPLICIT_INTEGRAL, p=p, n=n)


# --- numeric lifespan evaluation -------------------------------------------


def predicted_lifespan_lower(profile, n, p, epsilon):
    """Numeric lower lifespan bound from inverting the a^(p-1) integral.

    Returns +inf when a^(p-1) is integrable (no finite bound); raises
    Unconverged when integrability cannot be decided.
    """
    if not 0.0 < epsilon < 1.0:
        raise DomainError("epsilon must lie in (0, 1)")
    integ = coeff.a_pm1_integrable(profile, p)
    if integ is Integrability.INTEGRABLE:
        return math.inf
    if integ is Integrability.UNKNOWN:
        raise Unconverged("integrability of a^(p-1) is undeclared for this profile")
    return invert_apm1(profile, p, epsilon ** (-(p - 1.0)))


def predicted_lifespan_upper(profile, n, p, epsilon, R=1.0):
    """Numeric upper lifespan bound (law and value) where a blow-up rule fires."""
    report = classify(profile, n, p, FKind.ABS_UT_P, R)
    if report.verdict is not Verdict.BLOW_UP or report.lifespan_upper is None:
        raise NotBlowUpRegime(f"no blow-up upper law fired ({report.rule_fired})")
    law = report.lifespan_upper
    return law, law.evaluate(epsilon, profile=profile, R=R)


def invert_apm1(profile, p, target, method="closed", rtol=1.0e-9):
    """Solve A_(p-1)(T) = target for T.

    Closed forms cover the named families; `method="bisect"` forces the
    generic bracketed bisection (used to cross-check the closed forms).
    """
    if target <= 0:
        raise DomainError("target must be positive")
    if method == "closed":
        if isinstance(profile, (FlrwExpanding, FlrwContracting, PowerSpeed)):
            sigma = (
                -profile.alpha_exp
                if isinstance(profile, FlrwExpanding)
                else profile.alpha_exp
            )
            q = sigma * (p - 1.0) + 1.0
            if abs(q) <= PARAM_TOL:
                return math.expm1(target)
            base = 1.0 + q * target
            if base <= 0.0:
                raise DomainError("target beyond the integrable total")
            return base ** (1.0 / q) - 1.0
        if isinstance(profile, AntiDeSitter):
            q = (p - 1.0) * profile.H
            return math.log1p(q * target) / q
        if isinstance(profile, DeSitter):
            q = (p - 1.0) * profile.H
            if target >= 1.0 / q:
                raise DomainError("target beyond the integrable total")
            return -math.log1p(-q * target) / q
    # generic bracketed bisection
    hi = 1.0
    for _ in range(2200):
        if coeff.big_A_pm1(profile, hi, p) >= target:
            break
        hi *= 2.0
        if hi > 1.0e300:
            raise DomainError("could not bracket the inversion target")
    lo = 0.0
    while hi - lo > rtol * max(hi, 1.0):
        mid = 0.5 * (lo + hi)
        if coeff.big_A_pm1(profile, mid, p) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _solve_power_log(a_pow, b_log, target, rtol=1.0e-12):
    """Large root of T^a_pow (ln T)^(-b_log) = target (a_pow, b_log > 0)."""
    t_min = math.exp(b_log / a_pow)  # minimizer of the left-hand side

    def f(T):
        return a_pow * math.log(T) - b_log * math.log(math.log(T))

    goal = math.log(target)
    if f(t_min) >= goal:
        return t_min
    hi = 2.0 * t_min
    while f(hi) < goal:
        hi *= 2.0
        if hi > 1.0e300:
            return hi
    lo = t_min
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if f(mid) < goal:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _invert_decay_integral(profile, n, p, R, target, rtol=1.0e-9):
    """Solve int_0^T (A(t)+R)^(-n(p-1)) dt = target for T."""
    from scipy.integrate import quad

    k = n * (p - 1.0)

    def integral(T):
        val, _ = quad(
            lambda s: (profile.big_A(s) + R) ** (-k), 0.0, T, limit=400
        )
        return val

    hi = 1.0
    for _ in range(2200):
        if integral(hi) >= target:
            break
        hi *= 2.0
        if hi > 1.0e300:
            raise DomainError("decay integral never reaches the target")
    lo = 0.0
    while hi - lo > rtol * max(hi, 1.0):
        mid = 0.5 * (lo + hi)
        if integral(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
