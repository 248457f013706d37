"""Sphere decomposition: sparse, compressible and incompressible vectors, spread
coordinates, coordinate projections and greedy epsilon-nets.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from .errors import CapacityError, InvalidInputError, NetConstructionError

UNIT_TOL = 1e-12
# classification within this distance of rho is reported as Compressible
TIE_BAND = 1e-9
ORACLE_MAX_N = 20


class VectorClass(str, enum.Enum):
    SPARSE = "Sparse"
    COMPRESSIBLE = "Compressible"
    INCOMPRESSIBLE = "Incompressible"


@dataclass(frozen=True)
class CompressibilityParams:
    m: int
    rho: float
    gamma: float | None = None

    def __post_init__(self):
        if not (isinstance(self.m, (int, np.integer)) and self.m >= 1):
            raise InvalidInputError(f"m must be a positive integer, got {self.m!r}")
        if not 0 < self.rho < 1:
            raise InvalidInputError(f"rho must lie in (0, 1), got {self.rho!r}")

    @classmethod
    def from_gamma(cls, gamma: float, rho: float, n: int) -> "CompressibilityParams":
        """m = floor(gamma n), keeping gamma alongside."""
        return cls(max(1, math.floor(gamma * n)), rho, gamma)


def _vec(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidInputError("expected a 1-d vector")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("vector has non-finite coordinates")
    return x


def largest_support(x, m: int) -> np.ndarray:
    """Indices of the m largest |x_i|; ties go to the lower index."""
    x = _vec(x)
    order = np.argsort(-np.abs(x), kind="stable")
    return np.sort(order[:m])


def distance_to_sparse(x, m: int) -> float:
    """Euclidean distance from x to the set of m-sparse vectors."""
    x = _vec(x)
    n = x.size
    if not 0 <= m <= n:
        raise InvalidInputError(f"m={m} outside [0, {n}]")
    rest = np.ones(n, dtype=bool)
    rest[largest_support(x, m)] = False
    return float(np.linalg.norm(x[rest]))


def _check_unit(x: np.ndarray) -> None:
    if abs(np.linalg.norm(x) - 1.0) > UNIT_TOL:
        raise InvalidInputError(f"expected a unit vector, |x| = {np.linalg.norm(x)!r}")


def classify(x, params: CompressibilityParams) -> VectorClass:
    x = _vec(x)
    _check_unit(x)
    if params.m > x.size:
        raise InvalidInputError(f"m={params.m} exceeds dimension {x.size}")
    if np.count_nonzero(x) <= params.m:
        return VectorClass.SPARSE
    d = distance_to_sparse(x, params.m)
    if d - params.rho > TIE_BAND:
        return VectorClass.INCOMPRESSIBLE
    return VectorClass.COMPRESSIBLE


def complement_masks(n: int, m: int) -> np.ndarray:
    """Boolean rows, one per subset sigma with |sigma^c| <= m; True marks sigma."""
    if n > ORACLE_MAX_N:
        raise CapacityError(f"exhaustive subset enumeration is capped at n={ORACLE_MAX_N}")
    codes = np.arange(2**n, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(n)) & 1).astype(bool)  # True marks sigma^c
    keep = bits.sum(axis=1) <= m
    return ~bits[keep]


def incompressible_oracle(x, params: CompressibilityParams, masks: np.ndarray | None = None) -> bool:
    """Brute force: |P_sigma x| > rho for every sigma with |sigma^c| <= m."""
    return bool(incompressible_oracle_batch(np.atleast_2d(_vec(x)), params, masks)[0])


def incompressible_oracle_batch(X, params: CompressibilityParams, masks: np.ndarray | None = None):
    """Vectorized oracle for the rows of ``X``; returns (verdicts, min |P_sigma x|)."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[1]
    if n > ORACLE_MAX_N:
        raise CapacityError(f"exhaustive subset enumeration is capped at n={ORACLE_MAX_N}")
    if masks is None:
        masks = complement_masks(n, params.m)
    sq = (X * X) @ masks.T.astype(np.float64)
    least = np.sqrt(np.maximum(sq.min(axis=1), 0.0))
    return least > params.rho, least


@dataclass(frozen=True)
class SpreadSet:
    indices: tuple
    lower: float
    upper: float
    cardinality_bound: float
    incompressible: bool
    failures: tuple = field(default=())

    @property
    def size(self) -> int:
        return len(self.indices)

    @property
    def ok(self) -> bool:
        return not self.failures


def spread_set(x, gamma: float, rho: float) -> SpreadSet:
    """Coordinates with rho/sqrt(2n) <= |x_k| <= 1/sqrt(gamma n).

    For x incompressible at level (floor(gamma n), rho) the set has at least
    rho^2 gamma n / 2 elements; a shortfall there raises AssertionError. For
    other x the shortfall is reported in ``failures``.
    """
    x = _vec(x)
    _check_unit(x)
    if not (0 < gamma < 1 and 0 < rho < 1):
        raise InvalidInputError("gamma and rho must lie in (0, 1)")
    n = x.size
    lower = rho / math.sqrt(2 * n)
    upper = 1 / math.sqrt(gamma * n)
    ax = np.abs(x)
    idx = tuple(int(k) for k in np.flatnonzero((ax >= lower) & (ax <= upper)))
    bound = 0.5 * rho**2 * gamma * n
    incomp = distance_to_sparse(x, math.floor(gamma * n)) > rho
    failures = () if len(idx) >= bound else ("cardinality",)
    if incomp and failures:
        raise AssertionError(f"spread-set bound failed on an incompressible vector: {len(idx)} < {bound}")
    return SpreadSet(idx, lower, upper, bound, bool(incomp), failures)


def project(x, sigma) -> np.ndarray:
    """Zero out the coordinates of x outside sigma."""
    x = _vec(x)
    sigma = np.asarray(list(sigma), dtype=np.int64)
    if sigma.size and (sigma.min() < 0 or sigma.max() >= x.size):
        raise InvalidInputError(f"index set {sigma.tolist()} out of range for n={x.size}")
    out = np.zeros_like(x)
    out[sigma] = x[sigma]
    return out


# --------------------------------------------------------------------------
# epsilon-nets
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Net:
    points: np.ndarray
    n: int
    eps: float
    domain: str
    probe_size: int
    covering_radius: float
    volumetric_bound: float

    @property
    def size(self) -> int:
        return len(self.points)

    def csv_text(self) -> str:
        lines = [f"# n={self.n},eps={self.eps!r},domain={self.domain},probe={self.probe_size},"
                 f"size={self.size},covering_radius={self.covering_radius!r},"
                 f"volumetric_bound={self.volumetric_bound!r}"]
        lines += [",".join(repr(float(v)) for v in p) for p in self.points]
        return "\n".join(lines) + "\n"

    def to_csv(self, path) -> None:
        Path(path).write_text(self.csv_text())


def read_net_csv(path) -> tuple[dict, np.ndarray]:
    text = Path(path).read_text().splitlines()
    header = dict(item.split("=", 1) for item in text[0].lstrip("# ").split(","))
    pts = np.array([[float(t) for t in line.split(",")] for line in text[1:] if line.strip()])
    return header, pts


def _quasi_random(n: int, count: int, domain: str, seed: int) -> np.ndarray:
    if domain == "sphere" and n == 1:
        return np.array([[-1.0], [1.0]])
    dim = n + 1 if domain == "ball" else n
    sob = qmc.Sobol(dim, scramble=True, seed=seed)
    with warnings.catch_warnings():
        # balance-property warning for non power-of-two counts
        warnings.simplefilter("ignore", UserWarning)
        u = sob.random(count)
    u = np.clip(u, 1e-12, 1 - 1e-12)
    g = ndtri(u[:, :n])
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    if domain == "ball":
        g *= u[:, n:] ** (1.0 / n)
    return g


def _nearest(points: np.ndarray, net: np.ndarray, chunk: int = 20000) -> np.ndarray:
    out = np.empty(len(points))
    for s in range(0, len(points), chunk):
        p = points[s:s + chunk]
        d2 = (p * p).sum(1)[:, None] - 2 * p @ net.T + (net * net).sum(1)[None, :]
        out[s:s + chunk] = np.sqrt(np.maximum(d2.min(axis=1), 0.0))
    return out


def _greedy(candidates: np.ndarray, start: np.ndarray, radius: float) -> np.ndarray:
    net = [start]
    dist = np.linalg.norm(candidates - start, axis=1)
    while True:
        far = int(np.argmax(dist))
        if dist[far] <= radius:
            return np.array(net)
        net.append(candidates[far])
        dist = np.minimum(dist, np.linalg.norm(candidates - candidates[far], axis=1))


def build_net(n: int, eps: float, domain: str = "sphere", probe_size: int = 10**6,
              candidates: int = 4096, retries: int = 4, seed: int = 0) -> Net:
    """Greedy farthest-point eps-net of the sphere S^{n-1} or the ball B^n.

    Candidates and probe points are scrambled Sobol points pushed to the domain.
    The result is accepted only if every probe point lies within ``eps`` of the
    net. Failing that, the candidate set is enlarged, the greedy stopping radius
    is shrunk by 10%, and the pass repeated.
    """
    if n < 1:
        raise InvalidInputError("dimension must be positive")
    if not 0 < eps <= 2:
        raise InvalidInputError("eps must lie in (0, 2]")
    if domain not in ("sphere", "ball"):
        raise InvalidInputError(f"unknown domain {domain!r}")
    volumetric = (1 + 2 / eps) ** n
    probe = _quasi_random(n, probe_size, domain, seed + 1)
    start = np.zeros(n) if domain == "ball" else np.eye(n)[0]
    count = candidates
    for attempt in range(retries + 1):
        cand = _quasi_random(n, count, domain, seed)
        net = _greedy(cand, start, eps * (1 - 0.1 * attempt))
        radius = float(_nearest(probe, net).max())
        if radius <= eps:
            return Net(net, n, eps, domain, len(probe), radius, volumetric)
        count *= 4
    raise NetConstructionError(f"net for n={n}, eps={eps} not certified (covering radius {radius:.4g})")
