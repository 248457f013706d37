"""Entry distributions, variance profiles and reproducible sampling.

An ensemble is an ``N x n`` grid of independent centred entries. Each entry
has a distribution *shape* (Gaussian, Rademacher, ...) rescaled to the
variance stored in the profile; a zero variance makes the entry the constant 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import rng
from .errors import InfeasibleProfileError, InvalidInputError, UnsupportedFamilyError

# Profile entries below this are exact zeros.
VARIANCE_FLOOR = np.finfo(np.float64).eps


def _finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise InvalidInputError(f"non-finite distribution parameter {v!r}")


def exact(value) -> Fraction:
    """Exact rational reading of a parameter, taken from its shortest decimal form.

    ``0.9`` becomes 9/10 rather than the binary double just above it, so that
    comparisons such as ``count >= a4 * n`` behave as written.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    return Fraction(repr(float(value)))


# --------------------------------------------------------------------------
# distribution families
# --------------------------------------------------------------------------


class Family:
    """Base class of the centred single-entry laws."""

    tag = "abstract"

    def moment(self, r: float) -> float:
        raise NotImplementedError

    @property
    def variance(self) -> float:
        return self.moment(2.0)

    def subgaussian(self) -> float:
        raise NotImplementedError

    def scaled(self, factor: float) -> "Family":
        raise NotImplementedError

    def with_variance(self, var: float) -> "Family":
        """The same shape rescaled to variance ``var`` (``Zero`` if ``var`` is 0)."""
        if var < VARIANCE_FLOOR:
            return Zero()
        own = self.variance
        if own <= 0:
            raise InvalidInputError(f"{self.tag} has zero variance and cannot be rescaled")
        return self.scaled(math.sqrt(var / own))

    def draw(self, u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
        """Map two uniform (0,1) arrays to samples."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Gaussian(Family):
    sd: float = 1.0
    tag = "gaussian"

    def __post_init__(self):
        _finite(self.sd)
        if self.sd < 0:
            raise InvalidInputError("Gaussian sd must be nonnegative")

    def moment(self, r):
        _finite(r)
        # E|g|^r = 2^{r/2} Gamma((r+1)/2) / sqrt(pi)
        return self.sd**r * 2.0 ** (r / 2) * math.gamma((r + 1) / 2) / math.sqrt(math.pi)

    @property
    def variance(self):
        return self.sd**2

    def subgaussian(self):
        return self.sd

    def scaled(self, factor):
        return Gaussian(self.sd * factor)

    def draw(self, u1, u2):
        # Box-Muller, cosine branch
        return self.sd * np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)

    def to_dict(self):
        return {"kind": self.tag, "sd": self.sd}


@dataclass(frozen=True)
class Rademacher(Family):
    scale: float = 1.0
    tag = "rademacher"

    def __post_init__(self):
        _finite(self.scale)
        if self.scale < 0:
            raise InvalidInputError("Rademacher scale must be nonnegative")

    def moment(self, r):
        _finite(r)
        return self.scale**r

    @property
    def variance(self):
        return self.scale**2

    def subgaussian(self):
        return self.scale

    def scaled(self, factor):
        return Rademacher(self.scale * factor)

    def draw(self, u1, u2):
        return np.where(u1 < 0.5, -self.scale, self.scale)

    def to_dict(self):
        return {"kind": self.tag, "scale": self.scale}


@dataclass(frozen=True)
class UniformSymmetric(Family):
    halfwidth: float = 1.0
    tag = "uniform"

    def __post_init__(self):
        _finite(self.halfwidth)
        if self.halfwidth < 0:
            raise InvalidInputError("uniform halfwidth must be nonnegative")

    def moment(self, r):
        _finite(r)
        return self.halfwidth**r / (r + 1.0)

    @property
    def variance(self):
        return self.halfwidth**2 / 3.0

    def subgaussian(self):
        # Hoeffding's lemma on [-h, h]
        return self.halfwidth

    def scaled(self, factor):
        return UniformSymmetric(self.halfwidth * factor)

    def draw(self, u1, u2):
        return self.halfwidth * (2.0 * u1 - 1.0)

    def to_dict(self):
        return {"kind": self.tag, "halfwidth": self.halfwidth}


@dataclass(frozen=True)
class TwoPointCentered(Family):
    """Takes ``v1`` with probability ``p`` and ``v2`` otherwise; mean zero."""

    v1: float = -1.0
    v2: float = 1.0
    p: float = 0.5
    tag = "two_point"

    def __post_init__(self):
        _finite(self.v1, self.v2, self.p)
        if not 0.0 < self.p < 1.0:
            raise InvalidInputError("two-point probability must lie in (0, 1)")
        mean = self.p * self.v1 + (1.0 - self.p) * self.v2
        if abs(mean) > 1e-12 * max(abs(self.v1), abs(self.v2), 1.0):
            raise InvalidInputError(f"two-point law is not centred (mean={mean!r})")

    def moment(self, r):
        _finite(r)
        return self.p * abs(self.v1) ** r + (1.0 - self.p) * abs(self.v2) ** r

    def subgaussian(self):
        return abs(self.v2 - self.v1) / 2.0

    def scaled(self, factor):
        return TwoPointCentered(self.v1 * factor, self.v2 * factor, self.p)

    def draw(self, u1, u2):
        return np.where(u1 < self.p, self.v1, self.v2)

    def to_dict(self):
        return {"kind": self.tag, "v1": self.v1, "v2": self.v2, "p": self.p}


@dataclass(frozen=True)
class Zero(Family):
    tag = "zero"

    def moment(self, r):
        _finite(r)
        return 0.0

    @property
    def variance(self):
        return 0.0

    def subgaussian(self):
        return 0.0

    def scaled(self, factor):
        return self

    def with_variance(self, var):
        if var >= VARIANCE_FLOOR:
            raise InvalidInputError("the zero family cannot carry positive variance")
        return self

    def draw(self, u1, u2):
        return np.zeros(np.shape(u1))

    def to_dict(self):
        return {"kind": self.tag}


FAMILY_KINDS = {
    "gaussian": Gaussian,
    "rademacher": Rademacher,
    "uniform": UniformSymmetric,
    "two_point": TwoPointCentered,
    "zero": Zero,
}


def family_from_dict(data: dict) -> Family:
    data = dict(data)
    kind = data.pop("kind", None)
    if kind not in FAMILY_KINDS:
        raise InvalidInputError(f"unknown family kind {kind!r}; expected one of {sorted(FAMILY_KINDS)}")
    try:
        return FAMILY_KINDS[kind](**data)
    except TypeError as exc:
        raise InvalidInputError(f"bad parameters for {kind}: {exc}") from None


def moment_bound(family: Family, r: float) -> float:
    """E|xi|^r in closed form."""
    if not (r > 0 and math.isfinite(r)):
        raise InvalidInputError(f"moment order must be positive and finite, got {r!r}")
    return family.moment(r)


def subgaussian_parameter(family: Family) -> float:
    """A valid subgaussian parameter b with E exp(t X) <= exp(b^2 t^2 / 2)."""
    if not isinstance(family, Family):
        raise UnsupportedFamilyError(f"no subgaussian parameter for {family!r}")
    try:
        return family.subgaussian()
    except NotImplementedError:
        raise UnsupportedFamilyError(f"{family.tag} is neither bounded nor Gaussian") from None


# --------------------------------------------------------------------------
# ensemble specification
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EnsembleParams:
    r: float = 3.0
    mu: float = 2.0
    a1: float = 4.0
    a2: float = 0.01
    a3: float = 1.0
    a4: float = 1.0

    def __post_init__(self):
        _finite(self.r, self.mu, self.a1, self.a2, self.a3, self.a4)
        if not self.r > 2:
            raise InvalidInputError(f"r must exceed 2 (got {self.r})")
        if not self.mu >= 1:
            raise InvalidInputError(f"mu must be at least 1 (got {self.mu})")
        if not (self.a1 > 0 and self.a2 > 0):
            raise InvalidInputError("a1 and a2 must be positive")
        if not 0 < self.a3 < self.mu:
            raise InvalidInputError(f"a3 must lie in (0, mu) (got a3={self.a3}, mu={self.mu})")
        if not 0 < self.a4 <= 1:
            raise InvalidInputError(f"a4 must lie in (0, 1] (got {self.a4})")

    @property
    def r0(self) -> float:
        return min(3.0, self.r)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("r", "mu", "a1", "a2", "a3", "a4")}


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EnsembleSpec:
    """Shape, variance profile, entry shapes and theorem parameters.

    ``families`` lists distribution shapes; ``family_index[j, i]`` picks the shape
    of entry ``(j, i)``, which is then rescaled to variance ``profile[j, i]``.
    The optional ``profile_source`` records how the profile was generated so that
    configs can reproduce it.
    """

    profile: np.ndarray
    families: tuple = (Gaussian(1.0),)
    family_index: np.ndarray | None = None
    params: EnsembleParams = field(default_factory=EnsembleParams)
    profile_source: dict | None = None

    def __post_init__(self):
        prof = np.asarray(self.profile, dtype=np.float64)
        if prof.ndim != 2:
            raise InvalidInputError("variance profile must be a 2-d grid")
        if not np.all(np.isfinite(prof)) or np.any(prof < 0):
            raise InvalidInputError("variance profile entries must be finite and nonnegative")
        prof = np.where(prof < VARIANCE_FLOOR, 0.0, prof)
        N, n = prof.shape
        if not N >= n >= 1:
            raise InvalidInputError(f"need N >= n >= 1, got N={N}, n={n}")
        fams = tuple(self.families)
        if not fams or not all(isinstance(f, Family) for f in fams):
            raise InvalidInputError("families must be a nonempty sequence of Family objects")
        if self.family_index is None:
            idx = np.zeros(prof.shape, dtype=np.int64)
        else:
            idx = np.asarray(self.family_index, dtype=np.int64)
            if idx.shape != prof.shape:
                raise InvalidInputError("family_index must match the profile shape")
            if idx.min() < 0 or idx.max() >= len(fams):
                raise InvalidInputError("family_index refers to a missing family")
        for k, fam in enumerate(fams):
            if fam.variance <= 0 and np.any(prof[idx == k] > 0):
                raise InvalidInputError(f"family {k} ({fam.tag}) has no variance to rescale")
        object.__setattr__(self, "profile", _frozen(prof))
        object.__setattr__(self, "families", fams)
        object.__setattr__(self, "family_index", _frozen(idx))

    @classmethod
    def dense(cls, N: int, n: int, family: Family | None = None, params: EnsembleParams | None = None,
              variance: float | None = None) -> "EnsembleSpec":
        """All entries share one family; variance defaults to that family's own."""
        family = family or Gaussian(1.0)
        var = family.variance if variance is None else variance
        return cls(np.full((N, n), float(var)), (family,), None, params or EnsembleParams())

    @property
    def N(self) -> int:
        return self.profile.shape[0]

    @property
    def n(self) -> int:
        return self.profile.shape[1]

    @property
    def delta(self) -> Fraction:
        """Aspect parameter with N = (1 + delta) n, exactly."""
        return Fraction(self.N - self.n, self.n)

    def entry_family(self, j: int, i: int) -> Family:
        fam = self.families[self.family_index[j, i]]
        return fam.with_variance(float(self.profile[j, i]))

    def replace(self, **changes) -> "EnsembleSpec":
        kwargs = dict(profile=self.profile, families=self.families, family_index=self.family_index,
                      params=self.params, profile_source=self.profile_source)
        kwargs.update(changes)
        return EnsembleSpec(**kwargs)

    def __eq__(self, other):
        if not isinstance(other, EnsembleSpec):
            return NotImplemented
        return (np.array_equal(self.profile, other.profile)
                and self.families == other.families
                and np.array_equal(self.family_index, other.family_index)
                and self.params == other.params)

    __hash__ = None


# --------------------------------------------------------------------------
# conditions (i), (iii), (iv)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionReport:
    cond_i: bool
    worst_entry: tuple
    worst_moment: float
    moment_cap: float
    cond_iii: bool
    column_sums: tuple
    min_column_sum: float
    column_target: float
    cond_iv: bool
    row_counts: tuple
    min_row_count: int
    row_target: float
    cond_ii: str = "empirical"

    @property
    def passed(self) -> bool:
        return self.cond_i and self.cond_iii and self.cond_iv

    def to_dict(self) -> dict:
        return {
            "cond_i": {"pass": self.cond_i, "worst_entry": list(self.worst_entry),
                       "worst_moment": self.worst_moment, "mu_r": self.moment_cap},
            "cond_ii": self.cond_ii,
            "cond_iii": {"pass": self.cond_iii, "column_sums": list(self.column_sums),
                         "min": self.min_column_sum, "target": self.column_target},
            "cond_iv": {"pass": self.cond_iv, "row_counts": list(self.row_counts),
                        "min": self.min_row_count, "target": self.row_target},
        }


def _entry_moments(spec: EnsembleSpec, r: float) -> np.ndarray:
    out = np.zeros(spec.profile.shape)
    for k, fam in enumerate(spec.families):
        mask = spec.family_index == k
        if not mask.any():
            continue
        own = fam.variance
        if own > 0:
            # E|c X|^r = c^r E|X|^r with c = sqrt(var / own)
            out[mask] = fam.moment(r) * (spec.profile[mask] / own) ** (r / 2)
    return out


def check_conditions(spec: EnsembleSpec) -> ConditionReport:
    """Analytic verdicts on conditions (i), (iii) and (iv); (ii) is left to Monte Carlo."""
    p = spec.params
    N, n = spec.N, spec.n
    moments = _entry_moments(spec, p.r)
    flat = int(np.argmax(moments))
    worst = divmod(flat, n)
    worst_moment = float(moments.flat[flat])
    cap = p.mu**p.r
    cond_i = worst_moment <= cap

    col = [math.fsum(spec.profile[:, i]) for i in range(n)]
    col_target = exact(p.a3) ** 2 * N
    cond_iii = min(Fraction(c) for c in col) >= col_target

    rows = (spec.profile >= 1.0).sum(axis=1)
    row_target = exact(p.a4) * n
    cond_iv = int(rows.min()) >= row_target

    return ConditionReport(
        cond_i=bool(cond_i), worst_entry=tuple(int(w) for w in worst), worst_moment=worst_moment,
        moment_cap=cap, cond_iii=bool(cond_iii), column_sums=tuple(col), min_column_sum=min(col),
        column_target=float(col_target), cond_iv=bool(cond_iv),
        row_counts=tuple(int(c) for c in rows), min_row_count=int(rows.min()),
        row_target=float(row_target),
    )


# --------------------------------------------------------------------------
# sparse profiles
# --------------------------------------------------------------------------


def row_fill_count(n: int, a4: float) -> int:
    """Smallest integer k with k >= a4 * n."""
    return math.ceil(exact(a4) * n)


def make_sparse_profile(N: int, n: int, a4: float, a3: float, seed: int = 0) -> np.ndarray:
    """0/1 variance profile with ceil(a4 n) unit entries in each row.

    Unit entries are spread cyclically so column counts differ by at most one,
    which maximises the smallest column sum; rows and columns are then shuffled
    with a seeded permutation. Raises :class:`InfeasibleProfileError` when the
    balanced arrangement (and hence any arrangement) misses ``a3^2 N``.
    """
    if not N >= n >= 1:
        raise InvalidInputError(f"need N >= n >= 1, got N={N}, n={n}")
    if not 0 < a4 <= 1:
        raise InvalidInputError("row fill a4 must lie in (0, 1]")
    if not a3 > 0:
        raise InvalidInputError("column target a3 must be positive")
    if exact(a3) > 1:
        raise InfeasibleProfileError("cond_iii", f"a3={a3} > 1 cannot be met with unit variances")
    k = row_fill_count(n, a4)
    best_min = (N * k) // n
    target = exact(a3) ** 2 * N
    if best_min < target:
        raise InfeasibleProfileError(
            "cond_iii",
            f"with {k} unit entries per row the smallest column sum is at most {best_min} < a3^2 N = {float(target):g}",
        )
    prof = np.zeros((N, n))
    for j in range(N):
        cols = (j * k + np.arange(k)) % n
        prof[j, cols] = 1.0
    keys = rng.derive_seeds(seed, np.arange(N + n), tag=rng.TAG_AUX)
    row_perm = np.argsort(keys[:N], kind="stable")
    col_perm = np.argsort(keys[N:], kind="stable")
    prof = prof[row_perm][:, col_perm]

    probe = EnsembleSpec(prof, (Rademacher(1.0),), None, EnsembleParams(r=3.0, mu=2.0, a3=a3, a4=a4))
    report = check_conditions(probe)
    if not (report.cond_iii and report.cond_iv):
        raise InfeasibleProfileError("construction", "generated profile failed its own check")
    return prof


# --------------------------------------------------------------------------
# sampling
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MatrixSample:
    matrix: np.ndarray
    seed: int


def sample_batch(spec: EnsembleSpec, seeds: Sequence[int]) -> np.ndarray:
    """Stack of matrices, one per seed; shape ``(len(seeds), N, n)``.

    Entry ``(j, i)`` of the matrix for seed ``s`` depends only on ``(s, j, i)``.
    """
    seeds = np.asarray(seeds, dtype=np.uint64).reshape(-1, 1, 1)
    N, n = spec.N, spec.n
    jj = np.arange(N, dtype=np.uint64).reshape(1, N, 1)
    ii = np.arange(n, dtype=np.uint64).reshape(1, 1, n)
    key = (seeds & np.uint64(rng.MASK32), seeds >> np.uint64(32))
    u1, u2 = rng.uniform_pair((ii, jj, np.uint64(0), np.uint64(rng.TAG_ENTRY)), key)
    out = np.zeros((seeds.shape[0], N, n))
    for k, fam in enumerate(spec.families):
        mask = (spec.family_index == k) & (spec.profile > 0)
        if not mask.any():
            continue
        own = fam.variance
        scale = np.sqrt(spec.profile / own) if own > 0 else np.zeros_like(spec.profile)
        vals = fam.draw(u1, u2) * scale
        out = np.where(mask, vals, out)
    return out


def sample(spec: EnsembleSpec, seed: int) -> MatrixSample:
    """One matrix drawn under ``seed`` (deterministic in ``(spec, seed)``)."""
    seed = int(seed) & rng.MASK64
    return MatrixSample(sample_batch(spec, [seed])[0], seed)
