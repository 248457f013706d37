"""Monte Carlo tail estimates with exact binomial intervals, and exact oracles.

Trials are cut into fixed chunks of ``CHUNK`` consecutive indices. Trial ``t``
uses the matrix drawn under ``derive_seed(seed, t)``, and chunk results are
reassembled in index order, so every summary is a function of
``(spec, event, trials, seed)`` alone, whatever the thread count.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
import numpy as np
from scipy.special import ndtr
from scipy.stats import beta

from . import bounds, rng, spectra
from .ensemble import EnsembleParams, EnsembleSpec, Family, Gaussian, MatrixSample, Rademacher, exact, sample_batch
from .errors import CapacityError, InvalidInputError, RuntimeCapExceeded

CHUNK = 250
DEFAULT_ALPHA = 0.05
ENUM_MAX_N = 20


# --------------------------------------------------------------------------
# summaries
# --------------------------------------------------------------------------


def clopper_pearson(successes: int, trials: int, alpha: float = DEFAULT_ALPHA) -> tuple[float, float]:
    """Two-sided exact binomial interval with alpha/2 in each tail."""
    if trials < 1 or not 0 <= successes <= trials:
        raise InvalidInputError(f"bad binomial counts {successes}/{trials}")
    if not 0 < alpha < 1:
        raise InvalidInputError("alpha must lie in (0, 1)")
    lo = 0.0 if successes == 0 else float(beta.ppf(alpha / 2, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(beta.ppf(1 - alpha / 2, successes + 1, trials - successes))
    return lo, hi


@dataclass(frozen=True)
class TrialSummary:
    """Binomial tally of an event, optionally judged against a bound.

    ``bound_kind`` says whether ``bound`` is an upper or a lower bound on the
    event probability; the verdict compares upper bounds against ``ci_high``
    and lower bounds against ``ci_low``.
    """

    event: str
    trials: int
    successes: int
    alpha: float
    seed: int
    ci_low: float
    ci_high: float
    bound: float | None = None
    bound_kind: str = "upper"
    extras: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_counts(cls, event, trials, successes, alpha, seed, bound=None, bound_kind="upper", extras=None):
        lo, hi = clopper_pearson(successes, trials, alpha)
        return cls(event, int(trials), int(successes), float(alpha), int(seed), lo, hi,
                   None if bound is None else float(bound), bound_kind, dict(extras or {}))

    @property
    def estimate(self) -> float:
        return self.successes / self.trials

    @property
    def vacuous(self) -> bool:
        if self.bound is None:
            return False
        return self.bound >= 1 if self.bound_kind == "upper" else self.bound <= 0

    @property
    def verdict(self) -> str:
        """One of none, vacuous-pass, pass, inconclusive, fail."""
        if self.bound is None:
            return "none"
        if self.vacuous:
            return "vacuous-pass"
        if self.bound_kind == "upper":
            if self.ci_high <= self.bound:
                return "pass"
            return "fail" if self.ci_low > self.bound else "inconclusive"
        if self.ci_low >= self.bound:
            return "pass"
        return "fail" if self.ci_high < self.bound else "inconclusive"

    def to_dict(self) -> dict:
        out = {
            "event": self.event, "trials": self.trials, "successes": self.successes,
            "estimate": self.estimate, "ci": [self.ci_low, self.ci_high], "alpha": self.alpha,
            "seed": self.seed, "vacuous": self.vacuous, "bound": self.bound,
            "bound_kind": self.bound_kind, "verdict": self.verdict,
        }
        if self.extras:
            out["extras"] = self.extras
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# --------------------------------------------------------------------------
# Monte Carlo engine
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BatchEvent:
    """Event evaluated on a stack of matrices.

    ``fn`` maps an array of shape (B, N, n) to ``(hits, stat)``: a boolean array
    of length B and a float array of length B (or None) recorded per trial.
    """

    description: str
    fn: Callable


def predicate_event(description: str, predicate: Callable[[MatrixSample], bool]) -> BatchEvent:
    """Wrap a per-sample predicate (slow path, one matrix at a time)."""
    def fn(batch, seeds):
        hits = np.array([bool(predicate(MatrixSample(m, int(s)))) for m, s in zip(batch, seeds)])
        return hits, None
    return BatchEvent(description, _SeedAware(fn))


class _SeedAware:
    # marks event functions that also want the per-trial seeds
    def __init__(self, fn):
        self.fn = fn

    def __call__(self, batch, seeds):
        return self.fn(batch, seeds)


@dataclass(frozen=True)
class TrialRecord:
    hits: np.ndarray
    stats: np.ndarray | None


def run_trials(spec: EnsembleSpec, event: BatchEvent, trials: int, seed: int, threads: int = 1,
               deadline: float | None = None) -> TrialRecord:
    """Evaluate ``event`` on trials 0..trials-1; results are in trial order."""
    if trials < 1:
        raise InvalidInputError("trials must be at least 1")
    seed = int(seed) & rng.MASK64
    starts = range(0, trials, CHUNK)

    def work(start):
        if deadline is not None and time.monotonic() > deadline:
            raise RuntimeCapExceeded(f"runtime cap reached before trial {start}")
        seeds = rng.derive_seeds(seed, np.arange(start, min(start + CHUNK, trials)))
        batch = sample_batch(spec, seeds)
        if isinstance(event.fn, _SeedAware):
            hits, stat = event.fn(batch, seeds)
        else:
            hits, stat = event.fn(batch)
        return np.asarray(hits, dtype=bool), None if stat is None else np.asarray(stat, dtype=np.float64)

    if threads <= 1:
        parts = [work(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, starts))
    hits = np.concatenate([h for h, _ in parts])
    stats = None if parts[0][1] is None else np.concatenate([s for _, s in parts])
    return TrialRecord(hits, stats)


def _stat_extras(name: str, stats: np.ndarray | None) -> dict:
    if stats is None:
        return {}
    finite = stats[np.isfinite(stats)]
    if not finite.size:
        return {"stat": name}
    return {
        "stat": name,
        "mean": math.fsum(finite) / finite.size,
        "min": float(finite.min()),
        "max": float(finite.max()),
        "q01": float(np.quantile(finite, 0.01)),
        "q50": float(np.quantile(finite, 0.5)),
    }


def mc_event(spec: EnsembleSpec, event, trials: int, seed: int, alpha: float = DEFAULT_ALPHA,
             threads: int = 1, bound: float | None = None, bound_kind: str = "upper",
             deadline: float | None = None, stat_name: str = "stat") -> TrialSummary:
    """Monte Carlo frequency of ``event`` with a Clopper-Pearson interval.

    ``event`` is a :class:`BatchEvent` or a plain predicate on :class:`MatrixSample`.
    """
    if not isinstance(event, BatchEvent):
        event = predicate_event(getattr(event, "__name__", "predicate"), event)
    rec = run_trials(spec, event, trials, seed, threads, deadline)
    return TrialSummary.from_counts(event.description, trials, int(rec.hits.sum()), alpha, seed,
                                    bound, bound_kind, _stat_extras(stat_name, rec.stats))


def smallest_sv_event(c1: float, N: int) -> BatchEvent:
    level = c1 * math.sqrt(N)

    def fn(batch):
        s = spectra.batch_smallest_singular(batch)
        return s <= level, s
    return BatchEvent(f"s_n <= {c1!r} sqrt(N)", fn)


def mc_smallest_sv_tail(spec: EnsembleSpec, c1: float, trials: int, seed: int, alpha: float = DEFAULT_ALPHA,
                        c2: float | None = None, bound: float | None = None, threads: int = 1,
                        deadline: float | None = None) -> TrialSummary:
    """P(s_n <= c1 sqrt N); judged against exp(-c2 N) or an explicit upper ``bound``.

    The recorded statistic is s_n itself.
    """
    if c2 is not None and bound is None:
        bound = math.exp(-c2 * spec.N)
    return mc_event(spec, smallest_sv_event(c1, spec.N), trials, seed, alpha, threads, bound,
                    "upper", deadline, "s_n")


def operator_norm_event(a1: float, N: int) -> BatchEvent:
    level = a1 * math.sqrt(N)

    def fn(batch):
        s = spectra.batch_operator_norm(batch)
        return s > level, s
    return BatchEvent(f"||G|| > {a1!r} sqrt(N)", fn)


def mc_operator_norm_tail(spec: EnsembleSpec, a1: float, trials: int, seed: int, alpha: float = DEFAULT_ALPHA,
                          bound: float | None = None, threads: int = 1,
                          deadline: float | None = None) -> TrialSummary:
    """Empirical check of the operator-norm condition: P(||G|| > a1 sqrt N)."""
    return mc_event(spec, operator_norm_event(a1, spec.N), trials, seed, alpha, threads, bound,
                    "upper", deadline, "norm")


def column_distance_event(eps: float, a1: float, n: int) -> BatchEvent:
    cap = a1 * math.sqrt(n)

    def fn(batch):
        d = spectra.batch_column_distance(batch, -1)
        hits = d < eps
        # the norm is only needed where the distance event already holds
        if hits.any():
            norms = spectra.batch_operator_norm(batch[hits])
            hits[np.flatnonzero(hits)] = norms <= cap
        return hits, d
    return BatchEvent(f"dist(X_n, H_n) < {eps!r} and ||G|| <= {a1!r} sqrt(n)", fn)


def mc_column_distance_tail(spec: EnsembleSpec, eps: float, trials: int, seed: int,
                            alpha: float = DEFAULT_ALPHA, a1: float | None = None, c: float | None = None,
                            threads: int = 1, deadline: float | None = None) -> TrialSummary:
    """P(dist(X_n, H_n) < eps and ||G|| <= a1 sqrt n) for a square spec.

    With ``c`` given the estimate is judged against
    c (eps n^{(3-r)/2} + mu^r n^{(2-r)/2}).
    """
    if spec.N != spec.n:
        raise InvalidInputError("column-distance tail needs a square ensemble")
    a1 = spec.params.a1 if a1 is None else a1
    bound = None
    if c is not None:
        bound = bounds.column_distance_bound(eps, spec.n, spec.params.mu, spec.params.r, c)
    return mc_event(spec, column_distance_event(eps, a1, spec.n), trials, seed, alpha, threads,
                    bound, "upper", deadline, "dist")


@dataclass(frozen=True)
class SecondMoment:
    mean: float
    analytic: float
    z: float
    trials: int


def second_moment_check(spec: EnsembleSpec, x, trials: int, seed: int, threads: int = 1) -> SecondMoment:
    """Empirical E|Gx|^2 against the exact value sum_i (sum_j sigma_ji^2) x_i^2."""
    from .ensemble import check_conditions

    if trials < 100:
        raise InvalidInputError("second_moment_check needs at least 100 trials")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (spec.n,):
        raise InvalidInputError("x must have length n")
    cols = [Fraction(math.fsum(spec.profile[:, i])) for i in range(spec.n)]
    analytic_exact = sum((c * Fraction(float(v)) ** 2 for c, v in zip(cols, x)), Fraction(0))
    analytic = float(analytic_exact)
    if check_conditions(spec).cond_iii:
        target = exact(spec.params.a3) ** 2 * spec.N
        norm2 = sum((Fraction(float(v)) ** 2 for v in x), Fraction(0))
        # analytic >= min column sum * |x|^2 holds exactly; |x| = 1 only up to rounding
        assert analytic_exact >= target * norm2, "second-moment identity contradicts condition (iii)"

    def fn(batch):
        y = batch @ x
        return np.zeros(len(batch), dtype=bool), np.einsum("bj,bj->b", y, y)

    rec = run_trials(spec, BatchEvent("|Gx|^2", fn), trials, seed, threads)
    vals = rec.stats
    mean = math.fsum(vals) / trials
    sd = float(np.std(vals, ddof=1))
    z = 0.0 if sd == 0 else (mean - analytic) / (sd / math.sqrt(trials))
    return SecondMoment(mean, analytic, z, trials)


# --------------------------------------------------------------------------
# exact oracles
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteDistribution:
    """Finitely many (value, probability) atoms held as exact rationals.

    Probabilities must sum to 1 within 1e-12; they are then renormalised by
    their exact sum so every derived quantity is an exact rational.
    """

    atoms: tuple

    def __post_init__(self):
        vals, probs = [], []
        for v, p in self.atoms:
            if not (math.isfinite(float(v)) and math.isfinite(float(p))):
                raise InvalidInputError("atoms must be finite")
            if p < 0:
                raise InvalidInputError("probabilities must be nonnegative")
            vals.append(Fraction(v))
            probs.append(Fraction(p))
        total = sum(probs, Fraction(0))
        if not vals or abs(float(total) - 1.0) > 1e-12:
            raise InvalidInputError(f"probabilities sum to {float(total)!r}, not 1")
        object.__setattr__(self, "atoms", tuple((v, p / total) for v, p in zip(vals, probs)))

    @classmethod
    def rademacher(cls, scale=1):
        return cls(((-Fraction(scale), Fraction(1, 2)), (Fraction(scale), Fraction(1, 2))))

    def expect(self, fn) -> Fraction:
        return sum((p * fn(v) for v, p in self.atoms), Fraction(0))

    def moment(self, k: int) -> Fraction:
        return self.expect(lambda v: v**k)

    def abs_moment(self, r: float) -> float:
        return float(math.fsum(float(p) * abs(float(v)) ** r for v, p in self.atoms))

    @property
    def mean(self) -> Fraction:
        return self.moment(1)

    @property
    def variance(self) -> Fraction:
        return self.moment(2) - self.mean**2

    def prob(self, pred) -> Fraction:
        return sum((p for v, p in self.atoms if pred(v)), Fraction(0))


def exact_rademacher_small_ball(x, lam: float, mode: str = ">") -> Fraction:
    """Exact P(|sum eps_i x_i| mode lam) over all 2^n sign patterns.

    Sums are formed in floating point; any sum within a rounding band of
    ``lam`` is recomputed in exact rational arithmetic before it is compared.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or not np.all(np.isfinite(x)):
        raise InvalidInputError("x must be a finite vector")
    n = x.size
    if n > ENUM_MAX_N:
        raise CapacityError(f"sign enumeration is capped at n={ENUM_MAX_N}")
    if mode not in (">", "<", "<="):
        raise InvalidInputError(f"unknown mode {mode!r}")
    if not lam >= 0:
        raise InvalidInputError("lam must be nonnegative")
    band = 8 * (n + 2) * np.finfo(np.float64).eps * (float(np.abs(x).sum()) + lam) + 1e-300
    xf = [Fraction(float(v)) for v in x]
    lam_f = Fraction(float(lam))
    count = 0
    step = 1 << min(n, 16)
    for start in range(0, 1 << n, step):
        codes = np.arange(start, start + step, dtype=np.int64)
        signs = ((codes[:, None] >> np.arange(n)) & 1) * 2.0 - 1.0
        s = np.abs(signs @ x)
        near = np.abs(s - lam) <= band
        if mode == ">":
            count += int(np.count_nonzero((s > lam) & ~near))
        elif mode == "<":
            count += int(np.count_nonzero((s < lam) & ~near))
        else:
            count += int(np.count_nonzero((s <= lam) & ~near))
        for row in signs[near]:
            t = abs(sum((xi if e > 0 else -xi for xi, e in zip(xf, row)), Fraction(0)))
            count += (t > lam_f) if mode == ">" else (t < lam_f) if mode == "<" else (t <= lam_f)
    return Fraction(count, 1 << n)


@dataclass(frozen=True)
class SmallBallResult:
    probability: float
    exact_probability: Fraction | None
    summary: TrialSummary | None
    bound: float
    holds: bool

    @property
    def slack(self) -> float:
        return self.probability - self.bound


def _as_family(f) -> Family:
    if isinstance(f, Family):
        return f
    if isinstance(f, str):
        return {"rademacher": Rademacher(1.0), "gaussian": Gaussian(1.0)}[f]
    raise InvalidInputError(f"cannot read {f!r} as a family")


def small_ball_verify(x, families, lam: float, mu: float, r: float, trials: int = 10**4, seed: int = 0,
                   alpha: float = DEFAULT_ALPHA, threads: int = 1) -> SmallBallResult:
    """P(|sum xi_i x_i| > lam) against the small-ball lower bound.

    Exact by sign enumeration when every coordinate is Rademacher and n <= 20;
    otherwise Monte Carlo, with the bound compared to the lower CI end.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    fams = [_as_family(f) for f in families] if not isinstance(families, (Family, str)) else [_as_family(families)] * n
    if len(fams) != n:
        raise InvalidInputError("one family per coordinate is required")
    r0 = bounds.r0_of(r)
    for k, f in enumerate(fams):
        if f.moment(r0) > mu**r0 * (1 + 1e-12):
            raise InvalidInputError(f"coordinate {k} breaks the moment condition for mu={mu}, r={r0}")
    A2 = math.fsum(f.variance * v * v for f, v in zip(fams, x))
    bound = bounds.small_ball_lower(lam, A2, mu, r)
    if n <= ENUM_MAX_N and all(isinstance(f, Rademacher) for f in fams):
        scaled = np.array([f.scale * v for f, v in zip(fams, x)])
        p = exact_rademacher_small_ball(scaled, lam, ">")
        return SmallBallResult(float(p), p, None, bound, p >= Fraction(bound))
    uniq = list(dict.fromkeys(fams))
    index = np.array([[uniq.index(f)] for f in fams])
    profile = np.array([[f.variance] for f in fams])
    spec = EnsembleSpec(profile, tuple(uniq), index, EnsembleParams())

    def fn(batch):
        s = np.abs(batch[:, :, 0] @ x)
        return s > lam, s
    summary = mc_event(spec, BatchEvent(f"|sum xi_i x_i| > {lam!r}", fn), trials, seed, alpha, threads,
                       bound, "lower", stat_name="abs_sum")
    return SmallBallResult(summary.estimate, None, summary, bound, summary.ci_low >= bound)


# --------------------------------------------------------------------------
# Berry-Esseen and Paley-Zygmund
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GapResult:
    gap: float
    ratio: float
    at: float
    sigma: float
    abs_moment_sum: float


def _is_equal_rademacher(summands) -> float | None:
    first = None
    for z in summands:
        if isinstance(z, Rademacher):
            a = Fraction(z.scale)
        elif isinstance(z, FiniteDistribution) and len(z.atoms) == 2:
            (v1, p1), (v2, p2) = z.atoms
            if not (p1 == p2 == Fraction(1, 2) and v1 == -v2 and v1 != 0):
                return None
            a = abs(v1)
        else:
            return None
        if first is None:
            first = a
        elif a != first:
            return None
    return first


def _binomial_gap(n: int, grid: Sequence[float]) -> tuple[float, float]:
    # K ~ Bin(n, 1/2); normalized sum (2K - n)/sqrt(n)
    cum = []
    acc = 0
    for k in range(n + 1):
        acc += math.comb(n, k)
        cum.append(acc)
    total = 1 << n
    root = math.sqrt(n)
    atoms = np.array([(2 * k - n) / root for k in range(n + 1)])
    right = np.array([c / total for c in cum])
    left = np.concatenate([[0.0], right[:-1]])
    phi = ndtr(atoms)
    gaps = np.maximum(np.abs(right - phi), np.abs(left - phi))
    best = int(np.argmax(gaps))
    gap, at = float(gaps[best]), float(atoms[best])
    for t in grid:
        k = math.floor((t * root + n) / 2)
        while k >= 0 and (2 * k - n) / root > t:
            k -= 1
        while k + 1 <= n and (2 * (k + 1) - n) / root <= t:
            k += 1
        F = 0.0 if k < 0 else cum[min(k, n)] / total
        g = abs(F - float(ndtr(t)))
        if g > gap:
            gap, at = g, float(t)
    return gap, at


def _convolve(dists: Sequence[FiniteDistribution], cap: int = 10**6) -> dict:
    law = {Fraction(0): Fraction(1)}
    for d in dists:
        nxt: dict = {}
        for v, p in law.items():
            for w, q in d.atoms:
                nxt[v + w] = nxt.get(v + w, Fraction(0)) + p * q
        if len(nxt) > cap:
            raise CapacityError("exact convolution exceeds the atom cap")
        law = nxt
    return law


def berry_esseen_gap(summands, t_grid: Sequence[float] = (), r: float = 3.0) -> GapResult:
    """sup_t |P(S / sigma <= t) - Phi(t)| and gap sigma^r / sum E|zeta_k|^r.

    Summands are :class:`FiniteDistribution` (centred) or Gaussian families.
    Equal Rademacher summands use exact binomial masses; other finite summands
    are convolved exactly, with Gaussian parts integrated in closed form.
    For step CDFs both one-sided limits are taken at every atom.
    """
    summands = list(summands)
    if not summands:
        raise InvalidInputError("need at least one summand")
    var = 0.0
    mom = []
    for z in summands:
        if isinstance(z, FiniteDistribution):
            if z.mean != 0:
                raise InvalidInputError("summands must be centred")
            var += float(z.variance)
            mom.append(z.abs_moment(r))
        elif isinstance(z, Family):
            var += z.variance
            mom.append(z.moment(r))
        else:
            raise InvalidInputError(f"unsupported summand {z!r}")
    if var <= 0:
        raise InvalidInputError("total variance is zero")
    sigma = math.sqrt(var)
    abs_sum = math.fsum(mom)
    a = _is_equal_rademacher(summands)
    if a is not None:
        gap, at = _binomial_gap(len(summands), t_grid)
    else:
        finite = [z if isinstance(z, FiniteDistribution) else FiniteDistribution.rademacher(z.scale)
                  for z in summands if not isinstance(z, Gaussian)]
        gauss_sd = math.sqrt(math.fsum(z.variance for z in summands if isinstance(z, Gaussian)))
        law = sorted(_convolve(finite).items())
        vals = np.array([float(v) for v, _ in law]) / sigma
        probs = np.array([float(p) for _, p in law])
        if gauss_sd == 0:
            right = np.cumsum(probs)
            left = right - probs
            phi = ndtr(vals)
            gaps = np.maximum(np.abs(right - phi), np.abs(left - phi))
            pts, gvals = list(vals), list(gaps)
            for t in t_grid:
                pts.append(float(t))
                gvals.append(abs(float(probs[vals <= t].sum()) - float(ndtr(t))))
        else:
            s = gauss_sd / sigma
            pts = sorted(set(vals.tolist()) | set(float(t) for t in t_grid) | set(np.linspace(-8, 8, 4001).tolist()))
            gvals = [abs(float(np.dot(probs, ndtr((t - vals) / s))) - float(ndtr(t))) for t in pts]
        best = int(np.argmax(gvals))
        gap, at = float(gvals[best]), float(pts[best])
    return GapResult(gap, gap * sigma**r / abs_sum, at, sigma, abs_sum)


@dataclass(frozen=True)
class PZResult:
    lhs: Fraction
    rhs: float
    holds: bool
    exact: bool


def paley_zygmund_check(dist: FiniteDistribution, lam: float, p: float) -> PZResult:
    """P(f > lam) >= (E f^2 - lam^2)^q / (E f^{2p})^{q/p}, q = p / (p - 1).

    When 2p is an integer both sides are rational powers of rationals and the
    comparison is decided exactly: with p = a/b the claim is equivalent to
    lhs^(a-b) * M^b >= D^a for D = E f^2 - lam^2 and M = E f^{2p}.
    """
    P = exact(p)
    if not P > 1:
        raise InvalidInputError("p must exceed 1")
    if any(v < 0 for v, _ in dist.atoms):
        raise InvalidInputError("f must be nonnegative")
    L = Fraction(float(lam))
    Ef2 = dist.moment(2)
    if L < 0 or L * L > Ef2:
        raise InvalidInputError("lam must lie in [0, sqrt(E f^2)]")
    lhs = dist.prob(lambda v: v > L)
    D = Ef2 - L * L
    a, b = P.numerator, P.denominator
    with mpmath.workdps(60):
        return _pz_decide(dist, lhs, D, a, b, P)


def _pz_decide(dist, lhs, D, a, b, P) -> PZResult:
    if (2 * P).denominator == 1:
        M = dist.moment(int(2 * P))
        if D == 0:
            return PZResult(lhs, 0.0, True, True)
        holds = lhs ** (a - b) * M**b >= D**a
        q = mpmath.mpf(a) / (a - b)
        rhs = mpmath.power(mpmath.mpf(D.numerator) / D.denominator, q) / mpmath.power(
            mpmath.mpf(M.numerator) / M.denominator, mpmath.mpf(b) / (a - b))
        return PZResult(lhs, float(rhs), bool(holds), True)
    q = mpmath.mpf(a) / (a - b)
    M = mpmath.fsum(mpmath.mpf(pr.numerator) / pr.denominator
                    * mpmath.power(mpmath.mpf(v.numerator) / v.denominator, 2 * mpmath.mpf(a) / b)
                    for v, pr in dist.atoms)
    if D == 0:
        return PZResult(lhs, 0.0, True, False)
    rhs = mpmath.power(mpmath.mpf(D.numerator) / D.denominator, q) / mpmath.power(M, mpmath.mpf(b) / (a - b))
    return PZResult(lhs, float(rhs), bool(mpmath.mpf(lhs.numerator) / lhs.denominator >= rhs), False)


# --------------------------------------------------------------------------
# randomized exact suites
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SmallBallCase:
    x: tuple
    lam: float
    result: SmallBallResult


def small_ball_sweep(count: int, seed: int, max_n: int = 16, lam_max: float = 1.2,
                  mu: float = 1.0, r: float = 3.0) -> list[SmallBallCase]:
    """Random unit x (n <= max_n) and lam in [0, lam_max], Rademacher signs, exact probabilities."""
    if not 1 <= max_n <= ENUM_MAX_N:
        raise InvalidInputError(f"max_n must lie in [1, {ENUM_MAX_N}]")
    gen = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(gen.integers(1, max_n + 1))
        x = gen.standard_normal(n)
        if gen.random() < 0.3:
            # flat or lopsided directions stress the bound differently
            x = np.sign(x) * gen.choice([1.0, 2.0], size=n)
        x /= np.linalg.norm(x)
        lam = float(gen.uniform(0.0, lam_max))
        out.append(SmallBallCase(tuple(float(v) for v in x), lam, small_ball_verify(x, "rademacher", lam, mu, r)))
    return out


def random_finite_distribution(gen: np.random.Generator, max_atoms: int = 6) -> FiniteDistribution:
    """Nonnegative atoms on a grid of quarters with integer weights, as exact rationals."""
    k = int(gen.integers(1, max_atoms + 1))
    values = gen.choice(np.arange(0, 41), size=k, replace=False)
    weights = gen.integers(1, 10, size=k)
    total = int(weights.sum())
    return FiniteDistribution(tuple((Fraction(int(v), 4), Fraction(int(w), total)) for v, w in zip(values, weights)))


@dataclass(frozen=True)
class PZCase:
    dist: FiniteDistribution
    lam: float
    p: float
    result: PZResult


def paley_zygmund_sweep(count: int, seed: int, ps: Sequence[float] = (1.5, 2.0, 3.0),
                        lam_points: int = 6) -> list[PZCase]:
    """Every p on a grid of lam from 0 to sqrt(E f^2) for ``count`` random distributions."""
    gen = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        d = random_finite_distribution(gen)
        top = math.sqrt(float(d.moment(2)))
        grid = [top * k / (lam_points - 1) for k in range(lam_points)] if lam_points > 1 else [0.0]
        for lam in grid:
            # float rounding of the square root can land just outside the range
            while Fraction(lam) ** 2 > d.moment(2):
                lam = math.nextafter(lam, 0.0)
            for p in ps:
                out.append(PZCase(d, lam, p, paley_zygmund_check(d, lam, p)))
    return out
