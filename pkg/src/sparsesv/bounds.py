"""Closed-form constants and probability bounds.

Every evaluator first replaces the moment order ``r`` by ``r0 = min(3, r)``.
Constants that the theory leaves unnamed (the small-ball constant, the
Berry-Esseen constant and the absolute constant inside ``c3``) are inputs via
:class:`UniversalConstants`; their defaults of 1 are conventions only.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import HypothesisViolation, InvalidInputError

SQRT_2PI = math.sqrt(2 * math.pi)

GATE_TALL_DELTA = "delta >= delta0"
GATE_ALMOST_A4 = "a4 > 1 - gamma"
GATE_ALMOST_DELTA = "delta >= c~1 / ln(c~2 n)"
GATE_INCOMP = "a4 + rho^2 gamma / 2 > 1"
GATE_SQUARE_A4 = "a4 > 1 - gamma0"


@dataclass(frozen=True)
class UniversalConstants:
    c_sbp: float = 1.0
    c_be: float = 1.0
    c_abs: float = 1.0

    def __post_init__(self):
        for name, v in asdict(self).items():
            if not (math.isfinite(v) and v > 0):
                raise InvalidInputError(f"universal constant {name} must be positive, got {v!r}")


DEFAULT_CONSTANTS = UniversalConstants()


@dataclass(frozen=True)
class Gate:
    name: str
    holds: bool
    lhs: float
    rhs: float
    margin: float | None = None

    def require(self) -> None:
        if not self.holds:
            raise HypothesisViolation(self.name, f"lhs={self.lhs!r}, rhs={self.rhs!r}")

    def to_dict(self) -> dict:
        margin = self.lhs - self.rhs if self.margin is None else self.margin
        return {"gate": self.name, "holds": self.holds, "lhs": self.lhs, "rhs": self.rhs, "margin": margin}


def _exact_gate(name: str, lhs: Fraction, rhs: Fraction) -> Gate:
    # decided in rationals: a4 sits within 1e-22 of 1 - gamma at realistic parameters
    return Gate(name, lhs > rhs, float(lhs), float(rhs), float(lhs - rhs))


def r0_of(r: float) -> float:
    if not (math.isfinite(r) and r > 2):
        raise InvalidInputError(f"moment order r must exceed 2, got {r!r}")
    return min(3.0, float(r))


def _check_mu_a3(mu: float, a3: float) -> None:
    if not mu >= 1:
        raise InvalidInputError(f"mu must be at least 1, got {mu!r}")
    # a3 = mu is admitted: the reference constants are quoted at a3 = mu = 1
    if not 0 < a3 <= mu:
        raise InvalidInputError(f"a3 must lie in (0, mu], got a3={a3!r}, mu={mu!r}")


# --------------------------------------------------------------------------
# tall matrices
# --------------------------------------------------------------------------


def prop_tall_constants(r: float, mu: float, a3: float) -> tuple[float, float]:
    """(b1, b2) of the fixed-vector estimate P(|Gx| <= b1 sqrt N) <= exp(-b2 N)."""
    r0 = r0_of(r)
    _check_mu_a3(mu, a3)
    base = a3**2 / (32 * mu**2)
    power = base ** (r0 / (r0 - 2))
    return a3**4 / (32 * mu**2) * power, a3**2 / (8 * mu**2) * power


def teo_tall_delta0(b1: float, b2: float, a1: float) -> float:
    if not (b1 > 0 and b2 > 0 and a1 > 0):
        raise InvalidInputError("b1, b2 and a1 must be positive")
    return max(2 / b2 * math.log(6 * a1 / b1), 2 / b2 * math.log(3))


def tall_delta_gate(N: int, n: int, delta0: float) -> Gate:
    delta = Fraction(N - n, n)
    return Gate(GATE_TALL_DELTA, delta >= Fraction(delta0), float(delta), delta0, float(delta - Fraction(delta0)))


def tall_tail_bound(N: int, b2: float, a2: float) -> float:
    """Explicit right-hand side exp(-b2 N / 2) + exp(-a2 N) from the tall argument."""
    return math.exp(-b2 * N / 2) + math.exp(-a2 * N)


# --------------------------------------------------------------------------
# small-ball estimates for random sums
# --------------------------------------------------------------------------


def small_ball_lower(lam: float, A2: float, mu: float, r: float) -> float:
    """Lower bound on P(|sum xi_i x_i| > lam) given A2 = E sum xi_i^2 x_i^2."""
    r0 = r0_of(r)
    if lam < 0 or A2 < 0:
        raise InvalidInputError("lam and A2 must be nonnegative")
    if not mu >= 1:
        raise InvalidInputError("mu must be at least 1")
    gap = A2 - lam * lam
    if gap <= 0:
        return 0.0
    return (gap / (8 * mu * mu)) ** (r0 / (r0 - 2))


def sbp_interval_upper(a: float, b: float, A: float, x_r_norm: float, mu: float, r: float,
                       u: UniversalConstants = DEFAULT_CONSTANTS) -> float:
    """Upper bound on P(a <= sum xi_i x_i < b); ``x_r_norm`` is the l_{r0} norm of x.

    A = 0 gives the vacuous value 1.
    """
    r0 = r0_of(r)
    if b < a:
        raise InvalidInputError("need a <= b")
    if A == 0:
        return 1.0
    if A < 0:
        raise InvalidInputError("A must be nonnegative")
    return (b - a) / (SQRT_2PI * A) + u.c_sbp * (x_r_norm * mu / A) ** r0


def sbp_levy_upper(t: float, A_sigma: float, proj_r_norm: float, mu: float, r: float,
                   u: UniversalConstants = DEFAULT_CONSTANTS) -> float:
    """Upper bound on sup_v P(|sum x_i xi_i - v| < t) through the coordinates in sigma."""
    r0 = r0_of(r)
    if t < 0:
        raise InvalidInputError("t must be nonnegative")
    if A_sigma == 0:
        return 1.0
    if A_sigma < 0:
        raise InvalidInputError("A_sigma must be nonnegative")
    return 2 * t / (SQRT_2PI * A_sigma) + u.c_sbp * (proj_r_norm * mu / A_sigma) ** r0


def corollary_constant(u: UniversalConstants = DEFAULT_CONSTANTS) -> float:
    """C for the flat-coordinate corollary: max(sqrt(2/pi), c_sbp) covers both terms."""
    return max(math.sqrt(2 / math.pi), u.c_sbp)


def coro_upper(t: float, A: float, B: float, card: int, mu: float, r: float,
               u: UniversalConstants = DEFAULT_CONSTANTS, C: float | None = None) -> float:
    """C / |sigma|^{r/2-1} (t/A + mu^r (B/A)^r) when A <= |x_i| <= B on sigma."""
    r0 = r0_of(r)
    if not 0 < A <= B:
        raise InvalidInputError("need 0 < A <= B")
    if card < 1:
        raise InvalidInputError("sigma must be nonempty")
    if t < 0:
        raise InvalidInputError("t must be nonnegative")
    C = corollary_constant(u) if C is None else C
    return C / card ** (r0 / 2 - 1) * (t / A + mu**r0 * (B / A) ** r0)


def incomp_sbp_constant(gamma: float, rho: float, a4: float, r: float,
                        u: UniversalConstants = DEFAULT_CONSTANTS) -> tuple[float, float]:
    """(c0, c) for the incompressible small-ball bound.

    c0 = a4 + rho^2 gamma / 2 - 1 bounds |sigma| / n from below, and
    c = C c0^{1 - r/2} max(sqrt2 / rho, (sqrt2 / (rho sqrt gamma))^r).
    """
    r0 = r0_of(r)
    if not (0 < gamma < 1 and 0 < rho < 1):
        raise InvalidInputError("gamma and rho must lie in (0, 1)")
    if not 0 < a4 <= 1:
        raise InvalidInputError("a4 must lie in (0, 1]")
    gate = incomp_gate(gamma, rho, a4)
    if not gate.holds:
        raise HypothesisViolation(GATE_INCOMP, f"a4 + rho^2 gamma / 2 - 1 = {gate.margin!r}")
    c0 = gate.margin
    C = corollary_constant(u)
    lead = max(math.sqrt(2) / rho, (math.sqrt(2) / (rho * math.sqrt(gamma))) ** r0)
    return c0, C * c0 ** (1 - r0 / 2) * lead


def incomp_gate(gamma: float, rho: float, a4: float) -> Gate:
    """a4 + rho^2 gamma / 2 > 1, with c0 = a4 + rho^2 gamma / 2 - 1 as the margin."""
    return _exact_gate(GATE_INCOMP, Fraction(a4) + Fraction(rho) ** 2 * Fraction(gamma) / 2, Fraction(1))


def incomp_sbp_upper(t: float, n: int, mu: float, r: float, gamma: float, rho: float, a4: float,
                     u: UniversalConstants = DEFAULT_CONSTANTS) -> float:
    """c (t n^{(3-r)/2} + mu^r n^{(2-r)/2}) for incompressible directions."""
    r0 = r0_of(r)
    if t < 0 or n < 1:
        raise InvalidInputError("need t >= 0 and n >= 1")
    _, c = incomp_sbp_constant(gamma, rho, a4, r, u)
    return c * (t * n ** ((3 - r0) / 2) + mu**r0 * n ** ((2 - r0) / 2))


# --------------------------------------------------------------------------
# almost square and square matrices
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TheoremConstants:
    r: float
    r0: float
    mu: float
    a1: float
    a2: float
    a3: float
    a4: float
    b1: float
    b2: float
    delta0: float
    rho: float
    gamma: float
    c3: float
    c_tilde1: float
    c_tilde2: float
    log_c_tilde2: float
    gamma0: float
    universal: UniversalConstants = field(default=DEFAULT_CONSTANTS)
    gates: tuple = ()

    def t(self, delta: float) -> float:
        """Threshold t(delta) chosen with equality in the incompressible estimate."""
        if not delta > 0:
            raise InvalidInputError("delta must be positive")
        k = self.c3 * math.e**2
        return 1 / k * (1 / (3 * self.a1 * k)) ** (1 / delta)

    def delta_threshold(self, n: int) -> float:
        """c~1 / ln(c~2 n); infinite when c~2 n <= 1."""
        log_arg = self.log_c_tilde2 + math.log(n)
        if log_arg <= 0:
            return math.inf
        return self.c_tilde1 / log_arg

    def almost_square_gates(self, N: int, n: int) -> tuple[Gate, Gate]:
        delta = Fraction(N - n, n)
        thr = self.delta_threshold(n)
        return (self.gate(GATE_ALMOST_A4),
                Gate(GATE_ALMOST_DELTA, math.isfinite(thr) and delta >= Fraction(thr), float(delta), thr))

    def gate(self, name: str) -> Gate:
        for g in self.gates:
            if g.name == name:
                return g
        raise KeyError(name)

    def invariant_failures(self) -> list[str]:
        out = []
        for name in ("b1", "b2", "delta0", "rho", "gamma", "c3", "c_tilde1", "gamma0"):
            if not getattr(self, name) > 0:
                out.append(f"{name} > 0")
        if not self.log_c_tilde2 > -math.inf:
            out.append("c_tilde2 > 0")
        if self.rho > 0.25:
            out.append("rho <= 1/4")
        if not self.gamma < 1:
            out.append("gamma < 1")
        return out

    def to_dict(self) -> dict:
        values = {k: getattr(self, k) for k in (
            "b1", "b2", "delta0", "rho", "gamma", "c3", "c_tilde1", "c_tilde2", "log_c_tilde2", "gamma0")}
        return {
            "params": {k: getattr(self, k) for k in ("r", "r0", "mu", "a1", "a2", "a3", "a4")},
            "universal_constants": asdict(self.universal),
            "universal_constants_note": "conventional defaults, not values from the theory",
            "constants": values,
            "gamma0_note": "gamma0 is taken equal to the almost-square gamma",
            "gates": [g.to_dict() for g in self.gates],
            "invariant_failures": self.invariant_failures(),
        }


def almost_square_constants(r: float, mu: float, a1: float, a2: float, a3: float, a4: float,
                            u: UniversalConstants = DEFAULT_CONSTANTS) -> TheoremConstants:
    """All proof-level constants for one parameter set.

    An unmet ``a4 > 1 - gamma`` is reported in ``gates`` (and shows up as a
    nonpositive c~2), never clamped.
    """
    r0 = r0_of(r)
    _check_mu_a3(mu, a3)
    if not (a1 > 0 and a2 > 0):
        raise InvalidInputError("a1 and a2 must be positive")
    if not 0 < a4 <= 1:
        raise InvalidInputError("a4 must lie in (0, 1]")
    b1, b2 = prop_tall_constants(r, mu, a3)
    delta0 = teo_tall_delta0(b1, b2, a1)
    rho = min(0.25, b1 / (5 * a1))
    gamma = b2 / (4 * math.log(6 * math.e / (rho * b2)))
    c3 = u.c_abs * (math.sqrt(math.pi) / rho + mu**r0 / (rho**r0 * a1 ** (r0 - 2)))
    k = c3 * math.e**2
    c_tilde1 = 2 / (r0 - 2) * math.log(3 * a1 * k)
    # c~2 = (gamma + a4 - 1) / (a1^2 k^{2/(r0-2)}) leaves double range for r0 near 2
    excess = float(Fraction(gamma) + Fraction(a4) - 1)
    log_den = 2 * math.log(a1) + 2 / (r0 - 2) * math.log(k)
    log_c_tilde2 = math.log(excess) - log_den if excess > 0 else -math.inf
    c_tilde2 = math.copysign(math.exp(math.log(abs(excess)) - log_den), excess) if excess else 0.0
    gates = (
        _exact_gate(GATE_ALMOST_A4, Fraction(a4), 1 - Fraction(gamma)),
        _exact_gate(GATE_SQUARE_A4, Fraction(a4), 1 - Fraction(gamma)),
    )
    return TheoremConstants(r=r, r0=r0, mu=mu, a1=a1, a2=a2, a3=a3, a4=a4, b1=b1, b2=b2,
                            delta0=delta0, rho=rho, gamma=gamma, c3=c3, c_tilde1=c_tilde1,
                            c_tilde2=c_tilde2, log_c_tilde2=log_c_tilde2, gamma0=gamma, universal=u, gates=gates)


def square_bound(eps: float, n: int, r: float, C: float) -> float:
    """C (eps + n^{1 - r/2}) for P(s_n <= eps / sqrt n)."""
    r0 = r0_of(r)
    if eps < 0 or n < 1:
        raise InvalidInputError("need eps >= 0 and n >= 1")
    return C * (eps + n ** (1 - r0 / 2))


def column_distance_bound(eps: float, n: int, mu: float, r: float, c: float) -> float:
    """c (eps n^{(3-r)/2} + mu^r n^{(2-r)/2}) for P(dist(X_n, H_n) < eps, |G| <= a1 sqrt n)."""
    r0 = r0_of(r)
    return c * (eps * n ** ((3 - r0) / 2) + mu**r0 * n ** ((2 - r0) / 2))


def invert_via_distance_aggregate(dist_tail_probs: Sequence[float], gamma: float) -> tuple[float, float]:
    """(clamped, unclamped) value of (1 / (gamma n)) sum_k P(dist(X_k, H_k) < eps)."""
    p = [float(v) for v in dist_tail_probs]
    if not p:
        raise InvalidInputError("need at least one column probability")
    if any(not 0 <= v <= 1 for v in p):
        raise InvalidInputError("probabilities must lie in [0, 1]")
    if not 0 < gamma < 1:
        raise InvalidInputError("gamma must lie in (0, 1)")
    raw = math.fsum(p) / (gamma * len(p))
    return min(1.0, max(0.0, raw)), raw
