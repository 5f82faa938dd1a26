"""Propagation-speed and damping coefficient families.

Each profile provides the pointwise values a(t), da/dt, b(t), the running
integral A(t) of the speed, and the integral A_{p-1}(t) of a(t)^(p-1).
Named families carry exact closed forms; tabulated profiles fall back to
interpolation plus adaptive quadrature.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import (
    DomainError,
    InconsistentForm,
    NonPositiveSpeed,
    QuadratureFailure,
    Unconverged,
)

DEFAULT_T_MAX = 1.0e4
EXTREMUM_SAMPLES = 4096
GOLDEN_TOL = 1.0e-9
QUAD_ABS_TOL = 1.0e-10


class SignConvention(enum.Enum):
    """Which side of the equation the first-order term sits on."""

    DAMPING = "damping"          # +b(t) u_t on the left (dissipative form)
    ANTIDAMPING = "antidamping"  # +b_-(t) u_t on the right (amplifying form)


class TailClass(enum.Enum):
    """Declared behaviour of a tabulated function beyond its last sample."""

    DECAYING = "decaying"
    CONSTANT = "constant"
    GROWING = "growing"


class Integrability(enum.Enum):
    INTEGRABLE = "integrable"
    DIVERGENT = "divergent"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class CoeffValues:
    a: float
    a_dot: float
    b: float


@dataclass(frozen=True)
class ExtremumResult:
    value: float
    attained_near: float
    converged: bool


@dataclass(frozen=True)
class FlrwExpanding:
    """a = (t+1)^(-alpha), b = mu/(t+1); dissipative when mu >= alpha."""

    alpha_exp: float
    mu: float = 0.0
    sign_convention: SignConvention = SignConvention.DAMPING

    def __post_init__(self):
        if not self.alpha_exp > 0:
            raise DomainError("FlrwExpanding requires alpha_exp > 0")
        if self.mu < 0:
            raise DomainError("FlrwExpanding requires mu >= 0")

    def coeffs(self, t):
        a = (t + 1.0) ** (-self.alpha_exp)
        return CoeffValues(a, -self.alpha_exp * a / (t + 1.0), self.mu / (t + 1.0))

    def big_A(self, t):
        al = self.alpha_exp
        if al == 1.0:
            return math.log1p(t)
        return ((t + 1.0) ** (1.0 - al) - 1.0) / (1.0 - al)

    def big_A_pm1(self, t, p):
        return _power_integral(-self.alpha_exp * (p - 1.0), t)

    def a_pm1_integrable(self, p):
        return (
            Integrability.INTEGRABLE
            if self.alpha_exp * (p - 1.0) > 1.0
            else Integrability.DIVERGENT
        )

    def alpha_sup_tail(self, n, R):
        return 0.0

    def beta_tw(self):
        # limsup ln A / ln t for the TW7-style conditions
        return max(0.0, 1.0 - self.alpha_exp) if self.alpha_exp <= 1.0 else 0.0

    def to_dict(self):
        return {"family": "flrw_expanding", "alpha": self.alpha_exp, "mu": self.mu}


@dataclass(frozen=True)
class DeSitter:
    """a = exp(-H t), b = n H (exponentially expanding background)."""

    H: float
    n: int = 1
    sign_convention: SignConvention = SignConvention.DAMPING

    def __post_init__(self):
        if not self.H > 0:
            raise DomainError("DeSitter requires H > 0")
        if self.n < 1 or int(self.n) != self.n:
            raise DomainError("DeSitter requires integer n >= 1")

    def coeffs(self, t):
        a = math.exp(-self.H * t)
        return CoeffValues(a, -self.H * a, self.n * self.H)

    def big_A(self, t):
        return -math.expm1(-self.H * t) / self.H

    def big_A_pm1(self, t, p):
        q = (p - 1.0) * self.H
        return -math.expm1(-q * t) / q

    def a_pm1_integrable(self, p):
        return Integrability.INTEGRABLE

    def alpha_sup_tail(self, n, R):
        return 0.0

    def beta_tw(self):
        return 0.0

    def to_dict(self):
        return {"family": "de_sitter", "H": self.H, "n": self.n}


@dataclass(frozen=True)
class AntiDeSitter:
    """a = exp(H t), b_- = n H (exponentially contracting background)."""

    H: float
    n: int = 1
    sign_convention: SignConvention = SignConvention.ANTIDAMPING

    def __post_init__(self):
        if not self.H > 0:
            raise DomainError("AntiDeSitter requires H > 0")
        if self.n < 1 or int(self.n) != self.n:
            raise DomainError("AntiDeSitter requires integer n >= 1")

    def coeffs(self, t):
        a = math.exp(self.H * t)
        return CoeffValues(a, self.H * a, self.n * self.H)

    def big_A(self, t):
        return math.expm1(self.H * t) / self.H

    def big_A_pm1(self, t, p):
        q = (p - 1.0) * self.H
        return math.expm1(q * t) / q

    def a_pm1_integrable(self, p):
        return Integrability.DIVERGENT

    def alpha_sup_tail(self, n, R):
        # n a / (A + R) = n H / (1 + (H R - 1) exp(-H t)) -> n H
        return n * self.H

    def front_ratio(self, t, n, R):
        # overflow-safe form of n a / (A + R), valid for arbitrarily large t
        return n * self.H / (1.0 + (self.H * R - 1.0) * math.exp(-self.H * t))

    def log_A_plus_R(self, t, R):
        # ln(A + R) = H t - ln H + ln(1 + (H R - 1) e^(-H t))
        return self.H * t - math.log(self.H) + math.log1p(
            (self.H * R - 1.0) * math.exp(-self.H * t)
        )

    def beta_inf_value(self):
        return self.n * self.H

    def to_dict(self):
        return {"family": "anti_de_sitter", "H": self.H, "n": self.n}


@dataclass(frozen=True)
class FlrwContracting:
    """a = (t+1)^alpha, b_- = mu/(t+1) (polynomially contracting)."""

    alpha_exp: float
    mu: float = 0.0
    sign_convention: SignConvention = SignConvention.ANTIDAMPING

    def __post_init__(self):
        if not self.alpha_exp > 0:
            raise DomainError("FlrwContracting requires alpha_exp > 0")
        if self.mu < 0:
            raise DomainError("FlrwContracting requires mu >= 0")

    def coeffs(self, t):
        a = (t + 1.0) ** self.alpha_exp
        return CoeffValues(a, self.alpha_exp * a / (t + 1.0), self.mu / (t + 1.0))

    def big_A(self, t):
        return _power_integral(self.alpha_exp, t)

    def big_A_pm1(self, t, p):
        return _power_integral(self.alpha_exp * (p - 1.0), t)

    def a_pm1_integrable(self, p):
        return Integrability.DIVERGENT

    def alpha_sup_tail(self, n, R):
        return 0.0

    def beta_inf_value(self):
        return 0.0

    def to_dict(self):
        return {"family": "flrw_contracting", "alpha": self.alpha_exp, "mu": self.mu}


@dataclass(frozen=True)
class PowerSpeed:
    """a = (t+1)^alpha with no first-order term (generalized Tricomi type)."""

    alpha_exp: float
    sign_convention: SignConvention = SignConvention.ANTIDAMPING

    def coeffs(self, t):
        a = (t + 1.0) ** self.alpha_exp
        return CoeffValues(a, self.alpha_exp * a / (t + 1.0), 0.0)

    def big_A(self, t):
        return _power_integral(self.alpha_exp, t)

    def big_A_pm1(self, t, p):
        return _power_integral(self.alpha_exp * (p - 1.0), t)

    def a_pm1_integrable(self, p):
        return (
            Integrability.INTEGRABLE
            if self.alpha_exp * (p - 1.0) < -1.0
            else Integrability.DIVERGENT
        )

    def alpha_sup_tail(self, n, R):
        return 0.0

    def beta_inf_value(self):
        return 0.0

    def to_dict(self):
        return {"family": "power_speed", "alpha": self.alpha_exp}


@dataclass(frozen=True)
class Custom:
    """Tabulated profile with linear interpolation between samples.

    Beyond the last sample the speed is extrapolated according to its
    declared tail class: CONSTANT and DECAYING hold the final value,
    GROWING continues the final linear segment.  Integrability of a
    decaying tail cannot be decided from finitely many samples, so the
    integrability verdict for it stays Unknown.
    """

    t_a: np.ndarray
    a_values: np.ndarray
    t_b: np.ndarray
    b_values: np.ndarray
    sign_convention: SignConvention
    tail_a: TailClass = TailClass.CONSTANT
    tail_b: TailClass = TailClass.CONSTANT
    cumulative_A: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        t_a = np.asarray(self.t_a, dtype=float)
        a_values = np.asarray(self.a_values, dtype=float)
        t_b = np.asarray(self.t_b, dtype=float)
        b_values = np.asarray(self.b_values, dtype=float)
        for name, tt in (("a", t_a), ("b", t_b)):
            if tt.ndim != 1 or tt.size < 2:
                raise DomainError(f"Custom {name}-table needs at least two samples")
            if tt[0] != 0.0 or np.any(np.diff(tt) <= 0):
                raise DomainError(
                    f"Custom {name}-table times must strictly increase from 0"
                )
        if np.any(a_values <= 0.0):
            raise NonPositiveSpeed("Custom speed table contains a(t) <= 0")
        if np.any(b_values < 0.0):
            raise DomainError("Custom damping table must be non-negative")
        object.__setattr__(self, "t_a", t_a)
        object.__setattr__(self, "a_values", a_values)
        object.__setattr__(self, "t_b", t_b)
        object.__setattr__(self, "b_values", b_values)
        # trapezoid is exact for the piecewise-linear interpolant
        cum = np.concatenate(
            [[0.0], np.cumsum(0.5 * (a_values[1:] + a_values[:-1]) * np.diff(t_a))]
        )
        object.__setattr__(self, "cumulative_A", cum)

    def _interp(self, t, tt, vv, tail):
        if t <= tt[-1]:
            return float(np.interp(t, tt, vv))
        if tail is TailClass.GROWING:
            slope = (vv[-1] - vv[-2]) / (tt[-1] - tt[-2])
            return float(vv[-1] + max(slope, 0.0) * (t - tt[-1]))
        return float(vv[-1])

    def speed(self, t):
        a = self._interp(t, self.t_a, self.a_values, self.tail_a)
        if a <= 0.0:
            raise NonPositiveSpeed(f"a({t}) = {a} <= 0")
        return a

    def coeffs(self, t):
        a = self.speed(t)
        h = 1.0e-6 * max(abs(t), 1.0)
        if t - h >= 0.0:
            a_dot = (self.speed(t + h) - self.speed(t - h)) / (2.0 * h)
        else:
            a_dot = (self.speed(t + h) - a) / h
        b = self._interp(t, self.t_b, self.b_values, self.tail_b)
        return CoeffValues(a, a_dot, b)

    def big_A(self, t):
        if t <= self.t_a[-1]:
            i = int(np.searchsorted(self.t_a, t, side="right") - 1)
            i = min(i, self.t_a.size - 2)
            t0, t1 = self.t_a[i], self.t_a[i + 1]
            v0, v1 = self.a_values[i], self.a_values[i + 1]
            vt = v0 + (v1 - v0) * (t - t0) / (t1 - t0) if t1 > t0 else v0
            return float(self.cumulative_A[i] + 0.5 * (v0 + vt) * (t - t0))
        base = float(self.cumulative_A[-1])
        dt = t - self.t_a[-1]
        v_end = self.a_values[-1]
        if self.tail_a is TailClass.GROWING:
            slope = max(
                (self.a_values[-1] - self.a_values[-2])
                / (self.t_a[-1] - self.t_a[-2]),
                0.0,
            )
            return base + v_end * dt + 0.5 * slope * dt * dt
        return base + v_end * dt

    def big_A_pm1(self, t, p):
        val, err = quad(
            lambda s: self.speed(s) ** (p - 1.0),
            0.0,
            t,
            points=[x for x in self.t_a if 0.0 < x < t],
            limit=200,
            epsabs=QUAD_ABS_TOL,
        )
        if err > 1.0e-8 * max(1.0, abs(val)):
            raise QuadratureFailure(
                f"a^(p-1) quadrature error {err:.2e} over [0, {t}]"
            )
        return float(val)

    def a_pm1_integrable(self, p):
        if self.tail_a in (TailClass.CONSTANT, TailClass.GROWING):
            return Integrability.DIVERGENT
        return Integrability.UNKNOWN

    def alpha_sup_tail(self, n, R):
        # under the documented extrapolation the ratio n a/(A+R) -> 0
        # for constant and linearly growing tails; a decaying tail only
        # lowers it further
        return 0.0

    def to_dict(self):
        return {
            "family": "custom",
            "t_a": self.t_a.tolist(),
            "a_values": self.a_values.tolist(),
            "t_b": self.t_b.tolist(),
            "b_values": self.b_values.tolist(),
            "sign": self.sign_convention.value,
            "tail_a": self.tail_a.value,
            "tail_b": self.tail_b.value,
        }


NAMED_FAMILIES = (FlrwExpanding, DeSitter, AntiDeSitter, FlrwContracting, PowerSpeed)


def profile_from_dict(d):
    """Inverse of the profiles' to_dict (used by config loading and reports)."""
    fam = d.get("family")
    if fam == "flrw_expanding":
        return FlrwExpanding(alpha_exp=d["alpha"], mu=d.get("mu", 0.0))
    if fam == "de_sitter":
        return DeSitter(H=d["H"], n=int(d["n"]))
    if fam == "anti_de_sitter":
        return AntiDeSitter(H=d["H"], n=int(d["n"]))
    if fam == "flrw_contracting":
        return FlrwContracting(alpha_exp=d["alpha"], mu=d.get("mu", 0.0))
    if fam == "power_speed":
        return PowerSpeed(alpha_exp=d["alpha"])
    if fam == "custom":
        return Custom(
            t_a=np.asarray(d["t_a"], dtype=float),
            a_values=np.asarray(d["a_values"], dtype=float),
            t_b=np.asarray(d["t_b"], dtype=float),
            b_values=np.asarray(d["b_values"], dtype=float),
            sign_convention=SignConvention(d["sign"]),
            tail_a=TailClass(d.get("tail_a", "constant")),
            tail_b=TailClass(d.get("tail_b", "constant")),
        )
    raise DomainError(f"unknown coefficient family {fam!r}")


def _power_integral(exponent, t):
    """Integral of (s+1)^exponent over [0, t]."""
    if exponent == -1.0:
        return math.log1p(t)
    q = exponent + 1.0
    try:
        return ((t + 1.0) ** q - 1.0) / q
    except OverflowError:
        return math.inf


def _log_power_A_plus_R(sigma, t, R):
    """ln(A(t) + R) for a = (s+1)^sigma, stable at astronomical t."""
    q = sigma + 1.0
    if q == 0.0:
        return math.log(math.log1p(t) + R)
    ln_t1 = math.log1p(t)
    if q < 0.0 or q * ln_t1 < 690.0:
        return math.log(_power_integral(sigma, t) + R)
    ln_A = q * ln_t1 - math.log(q)  # the -1 in the numerator is negligible here
    return ln_A + math.log1p(R * math.exp(-ln_A))


def _check_time(t):
    if t < 0:
        raise DomainError(f"time must be non-negative, got {t}")


def eval_coeffs(profile, t):
    """Pointwise (a, da/dt, b) at time t >= 0."""
    _check_time(t)
    return profile.coeffs(t)


def big_A(profile, t):
    """Running integral of the speed, A(t); strictly increasing, A(0) = 0."""
    _check_time(t)
    return profile.big_A(t)


def big_A_pm1(profile, t, p):
    """Integral of a(s)^(p-1) over [0, t]."""
    _check_time(t)
    if not p > 1.0:
        raise DomainError(f"exponent p must exceed 1, got {p}")
    return profile.big_A_pm1(t, p)


def a_pm1_integrable(profile, p):
    """Whether a^(p-1) has a finite integral over [0, infinity)."""
    if not p > 1.0:
        raise DomainError(f"exponent p must exceed 1, got {p}")
    return profile.a_pm1_integrable(p)


@dataclass(frozen=True)
class DissipativityResult:
    holds: bool
    first_violation: float | None


def check_dissipative(profile, t_max=DEFAULT_T_MAX, samples=EXTREMUM_SAMPLES):
    """Verify da/dt + a b >= 0 on a sample grid (dissipative-form profiles).

    Named families also get an analytic verdict; the grid locates the
    first violation time when the condition fails.
    """
    if profile.sign_convention is not SignConvention.DAMPING:
        raise InconsistentForm("dissipativity check applies to the damping form")
    if samples < 2:
        raise DomainError("need at least 2 samples")
    if isinstance(profile, FlrwExpanding) and profile.mu >= profile.alpha_exp:
        return DissipativityResult(True, None)
    if isinstance(profile, DeSitter):
        return DissipativityResult(True, None)
    grid = np.linspace(0.0, t_max, samples)
    tol = -1.0e-13
    for t in grid:
        c = profile.coeffs(float(t))
        if c.a_dot + c.a * c.b < tol:
            return DissipativityResult(False, float(t))
    return DissipativityResult(True, None)


def _golden_refine(f, lo, hi, tol=GOLDEN_TOL):
    """Golden-section maximum search on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = f(x1)
    xm = 0.5 * (lo + hi)
    return xm, f(xm)


def damping_value(profile, t):
    """The first-order coefficient alone, cheap and overflow-safe."""
    if isinstance(profile, (DeSitter, AntiDeSitter)):
        return profile.n * profile.H
    if isinstance(profile, (FlrwExpanding, FlrwContracting)):
        return profile.mu / (t + 1.0)
    if isinstance(profile, PowerSpeed):
        return 0.0
    return profile.coeffs(t).b


def log_A_plus_R(profile, t, R):
    """ln(A(t) + R) without overflow for fast-growing speeds."""
    if isinstance(profile, AntiDeSitter):
        return profile.log_A_plus_R(t, R)
    if isinstance(profile, (FlrwContracting, PowerSpeed)):
        return _log_power_A_plus_R(profile.alpha_exp, t, R)
    if isinstance(profile, FlrwExpanding):
        return _log_power_A_plus_R(-profile.alpha_exp, t, R)
    return math.log(profile.big_A(t) + R)


def front_ratio(profile, n, R, t):
    """n a(t) / (A(t) + R), the instantaneous cone-opening rate."""
    if isinstance(profile, AntiDeSitter):
        return profile.front_ratio(t, n, R)
    return n * profile.coeffs(t).a / (profile.big_A(t) + R)


def alpha_sup(profile, n, R, t_max=DEFAULT_T_MAX):
    """Supremum over t >= 0 of n a(t) / (A(t) + R).

    Dense sampling refined by golden-section search, then compared with
    the analytic t -> infinity limit of the family.
    """
    if profile.sign_convention is not SignConvention.ANTIDAMPING:
        raise InconsistentForm("alpha_sup applies to the antidamping form")
    if not R > 0:
        raise DomainError("support radius R must be positive")

    def ratio(t):
        return front_ratio(profile, n, R, t)

    grid = np.linspace(0.0, t_max, EXTREMUM_SAMPLES)
    vals = np.array([ratio(float(t)) for t in grid])
    k = int(np.argmax(vals))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid.size - 1)]
    t_best, v_best = _golden_refine(ratio, float(lo), float(hi))
    if vals[k] > v_best:
        t_best, v_best = float(grid[k]), float(vals[k])

    if isinstance(profile, Custom) and profile.tail_a is TailClass.GROWING:
        tail_window = vals[int(0.95 * vals.size):]
        if np.all(np.diff(tail_window) > 0):
            raise Unconverged(
                "sampled ratio still increasing at t_max with a growing tail"
            )
    tail = profile.alpha_sup_tail(n, R)
    converged = tail <= v_best + GOLDEN_TOL
    if tail > v_best:
        return ExtremumResult(float(tail), float(t_max), converged)
    return ExtremumResult(float(v_best), float(t_best), converged)


def beta_inf(profile, t_max=DEFAULT_T_MAX):
    """Infimum over t >= 0 of the antidamping coefficient b_-."""
    if profile.sign_convention is not SignConvention.ANTIDAMPING:
        raise InconsistentForm("beta_inf applies to the antidamping form")
    if not isinstance(profile, Custom):
        return float(profile.beta_inf_value())
    grid = np.linspace(0.0, min(t_max, DEFAULT_T_MAX), EXTREMUM_SAMPLES)
    vals = [profile.coeffs(float(t)).b for t in grid]
    return float(min(vals))


def quadrature_big_A(profile, t):
    """Adaptive-quadrature evaluation of A(t), used to cross-check closed forms.

    Tabulated profiles are integrated segment by segment so the kinks of
    the interpolant never sit inside a quadrature panel.
    """
    _check_time(t)
    f = lambda s: profile.coeffs(s).a
    if isinstance(profile, Custom):
        edges = [x for x in profile.t_a if 0.0 < x < t] + [t]
        lo, val, err = 0.0, 0.0, 0.0
        for hi in edges:
            v, e = quad(f, lo, hi, limit=50, epsabs=QUAD_ABS_TOL)
            val, err, lo = val + v, err + e, hi
    else:
        val, err = quad(f, 0.0, t, limit=200, epsabs=QUAD_ABS_TOL)
    if err > max(QUAD_ABS_TOL * 10, 1.0e-8 * abs(val)):
        raise QuadratureFailure(f"A(t) quadrature error {err:.2e}")
    return float(val)


def quadrature_big_A_pm1(profile, t, p):
    """Adaptive-quadrature evaluation of the a^(p-1) integral."""
    _check_time(t)
    val, err = quad(
        lambda s: profile.coeffs(s).a ** (p - 1.0),
        0.0,
        t,
        limit=200,
        epsabs=QUAD_ABS_TOL,
    )
    if err > max(QUAD_ABS_TOL * 10, 1.0e-8 * abs(val)):
        raise QuadratureFailure(f"A_(p-1)(t) quadrature error {err:.2e}")
    return float(val)


def load_table_csv(path):
    """Two-column `t,value` CSV with strictly increasing t starting at 0."""
    data = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    if data.shape[1] != 2:
        raise DomainError(f"{path}: expected two columns t,value")
    return data[:, 0], data[:, 1]
