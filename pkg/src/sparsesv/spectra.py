"""Singular values, operator norm and column-to-span distances.

Singular values come from one-sided (Hestenes) Jacobi. Tall inputs are first
reduced to their ``n x n`` triangular factor by Householder QR, which leaves the
singular values unchanged and makes the Jacobi sweeps cheap. Pairs are visited
in round-robin order so that ``n/2`` disjoint rotations are applied at once,
and every routine works on a stack of matrices, shape ``(B, N, n)``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, NumericalFailureError

JACOBI_TOL = 1e-12
MAX_SWEEPS = 30
RANK_TOL = 1e-10
BIN_MAGIC = b"SSVMAT01"


@dataclass(frozen=True)
class SpectrumResult:
    values: np.ndarray
    sweeps: int
    residual: float

    @property
    def smallest(self) -> float:
        return float(self.values[-1])

    @property
    def largest(self) -> float:
        return float(self.values[0])


def _as_stack(M) -> np.ndarray:
    A = np.asarray(M, dtype=np.float64)
    if A.ndim == 2:
        A = A[None]
    if A.ndim != 3:
        raise InvalidInputError("expected a matrix or a stack of matrices")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("matrix has non-finite entries")
    return A


# --------------------------------------------------------------------------
# Householder QR
# --------------------------------------------------------------------------


def householder_qr(A: np.ndarray, rhs: np.ndarray | None = None, pivot: bool = True):
    """Batched Householder QR with optional column pivoting.

    ``A`` has shape ``(B, m, k)``. Returns ``(R, perm, rhs_t)`` where ``R`` is
    ``(B, min(m,k), k)`` upper triangular, ``A[b][:, perm[b]] = Q_b R_b`` and
    ``rhs_t = Q^T rhs`` (``None`` if no right-hand side was given).
    """
    A = np.array(A, dtype=np.float64, copy=True)
    B, m, k = A.shape
    perm = np.tile(np.arange(k), (B, 1))
    C = None if rhs is None else np.array(rhs, dtype=np.float64, copy=True)
    rows = np.arange(B)
    for s in range(min(m, k)):
        if pivot and s < k - 1:
            norms = np.einsum("bij,bij->bj", A[:, s:, s:], A[:, s:, s:])
            j = s + np.argmax(norms, axis=1)
            swap = j != s
            if swap.any():
                b = rows[swap]
                js = j[swap]
                col_s = A[b, :, s].copy()
                A[b, :, s] = A[b, :, js]
                A[b, :, js] = col_s
                p_s = perm[b, s].copy()
                perm[b, s] = perm[b, js]
                perm[b, js] = p_s
        x = A[:, s:, s]
        xnorm = np.linalg.norm(x, axis=1)
        sign = np.where(x[:, 0] >= 0, 1.0, -1.0)
        alpha = -sign * xnorm
        v = x.copy()
        v[:, 0] -= alpha
        vv = np.einsum("bi,bi->b", v, v)
        beta = np.divide(2.0, vv, out=np.zeros_like(vv), where=vv > 0)
        w = np.einsum("bi,bij->bj", v, A[:, s:, s:])
        A[:, s:, s:] -= (beta[:, None] * v)[:, :, None] * w[:, None, :]
        A[:, s + 1:, s] = 0.0
        if C is not None:
            wc = np.einsum("bi,bij->bj", v, C[:, s:, :])
            C[:, s:, :] -= (beta[:, None] * v)[:, :, None] * wc[:, None, :]
    r = min(m, k)
    return np.triu(A[:, :r, :]), perm, C


# --------------------------------------------------------------------------
# one-sided Jacobi
# --------------------------------------------------------------------------


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """n-1 rounds of n/2 disjoint pairs covering every pair once (n even)."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        p = np.array(players[:half])
        q = np.array(players[half:][::-1])
        lo, hi = np.minimum(p, q), np.maximum(p, q)
        rounds.append((lo, hi))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def jacobi_columns(A: np.ndarray, want_vectors: bool = False, tol: float = JACOBI_TOL,
                   max_sweeps: int = MAX_SWEEPS):
    """Orthogonalize the columns of each matrix in the stack ``A`` (B, m, n).

    Returns ``(W, V, sweeps, residual)`` with ``A V = W`` and mutually orthogonal
    columns of ``W`` (their norms are the singular values). ``residual`` is the
    per-matrix largest cosine between column pairs seen in the last sweep.
    """
    W = np.array(A, dtype=np.float64, copy=True)
    B, m, n = W.shape
    pad = n % 2
    if pad:
        W = np.concatenate([W, np.zeros((B, m, 1))], axis=2)
    nn = n + pad
    V = np.tile(np.eye(nn), (B, 1, 1)) if want_vectors else None
    rounds = _round_robin(nn) if nn > 1 else []
    residual = np.zeros(B)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        residual = np.zeros(B)
        for p, q in rounds:
            P = W[:, :, p]
            Q = W[:, :, q]
            alpha = np.einsum("bij,bij->bj", P, P)
            beta = np.einsum("bij,bij->bj", Q, Q)
            gamma = np.einsum("bij,bij->bj", P, Q)
            scale = np.sqrt(alpha * beta)
            cosine = np.divide(np.abs(gamma), scale, out=np.zeros_like(gamma), where=scale > 0)
            residual = np.maximum(residual, cosine.max(axis=1))
            rotate = cosine > tol
            if not rotate.any():
                continue
            g = np.where(rotate, gamma, 1.0)
            zeta = (beta - alpha) / (2.0 * g)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
            t = np.where(rotate, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            c3, s3 = c[:, None, :], s[:, None, :]
            W[:, :, p] = c3 * P - s3 * Q
            W[:, :, q] = s3 * P + c3 * Q
            if V is not None:
                VP, VQ = V[:, :, p], V[:, :, q]
                V[:, :, p] = c3 * VP - s3 * VQ
                V[:, :, q] = s3 * VP + c3 * VQ
        if residual.max(initial=0.0) <= tol:
            break
    else:
        raise NumericalFailureError(f"Jacobi SVD did not converge in {max_sweeps} sweeps",
                                    float(residual.max()))
    if pad:
        W = W[:, :, :n]
        if V is not None:
            V = V[:, :n, :n]
    return W, V, sweeps, residual


def batch_svd(M, want_vectors: bool = False):
    """Singular values (descending) of a stack, plus right singular vectors if asked.

    Returns ``(values, V, sweeps, residual)``; ``values`` has shape ``(B, n)`` and
    column ``k`` of ``V[b]`` is the right singular vector of ``values[b, k]``.
    """
    A = _as_stack(M)
    B, N, n = A.shape
    if N < n:
        raise InvalidInputError(f"need N >= n, got {N} x {n}")
    # work with entries of size at most one so squared norms neither overflow nor underflow
    scale = np.abs(A).reshape(B, -1).max(axis=1, initial=0.0)
    scale = np.where(scale > 0, scale, 1.0)
    A = A / scale[:, None, None]
    perm = None
    if N > n:
        A, perm, _ = householder_qr(A, pivot=True)
    W, V, sweeps, residual = jacobi_columns(A, want_vectors=want_vectors)
    norms = np.linalg.norm(W, axis=1) * scale[:, None]
    order = np.argsort(-norms, axis=1, kind="stable")
    values = np.take_along_axis(norms, order, axis=1)
    if V is not None:
        V = np.take_along_axis(V, order[:, None, :], axis=2)
        if perm is not None:
            # M[:, perm] = Q R, so a right vector v of R maps to x with x[perm] = v
            X = np.empty_like(V)
            np.put_along_axis(X, perm[:, :, None], V, axis=1)
            V = X
    return values, V, sweeps, residual


def singular_values(M) -> SpectrumResult:
    """All singular values of one ``N x n`` matrix (``N >= n``), descending."""
    A = _as_stack(M)
    if A.shape[0] != 1:
        raise InvalidInputError("singular_values takes a single matrix; use batch_svd for stacks")
    values, _, sweeps, residual = batch_svd(A)
    return SpectrumResult(values[0], sweeps, float(residual[0]))


def smallest_singular(M) -> float:
    return singular_values(M).smallest


def smallest_singular_witness(M) -> tuple[float, np.ndarray]:
    """``s_n`` together with a unit vector x attaining ``|Mx| = s_n``."""
    values, V, _, _ = batch_svd(M, want_vectors=True)
    return float(values[0, -1]), V[0, :, -1].copy()


def power_iteration_norm(M, iters: int = 500, tol: float = 1e-14) -> float:
    """Lower estimate of the operator norm by power iteration on M^T M."""
    A = np.asarray(M, dtype=np.float64)
    n = A.shape[1]
    x = 1.0 + np.arange(n) / (n + 1.0)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iters):
        y = A.T @ (A @ x)
        ny = np.linalg.norm(y)
        if ny == 0:
            return float(np.linalg.norm(A @ x))
        x = y / ny
        new = float(np.linalg.norm(A @ x))
        if abs(new - est) <= tol * max(new, 1.0):
            est = new
            break
        est = new
    return est


def operator_norm(M, cross_check: bool = True) -> float:
    """Largest singular value; optionally checked against power iteration."""
    s1 = singular_values(M).largest
    if cross_check:
        lower = power_iteration_norm(M)
        # power iteration can only undershoot s_1
        if lower > s1 * (1 + 1e-10) + 1e-300:
            raise NumericalFailureError("power iteration exceeded the Jacobi operator norm",
                                        lower - s1)
    return s1


def batch_operator_norm(M) -> np.ndarray:
    return batch_svd(M)[0][:, 0]


def batch_smallest_singular(M) -> np.ndarray:
    return batch_svd(M)[0][:, -1]


# --------------------------------------------------------------------------
# distance from a column to the span of the others
# --------------------------------------------------------------------------


def batch_column_distance(M, k: int) -> np.ndarray:
    """``dist(X_k, H_k)`` for each matrix of a stack; ``k`` may be negative."""
    A = _as_stack(M)
    B, rows, cols = A.shape
    if cols < 2:
        raise InvalidInputError("column_distance needs at least two columns")
    if not -cols <= k < cols:
        raise InvalidInputError(f"column index {k} out of range for {cols} columns")
    k %= cols
    target = A[:, :, k:k + 1]
    others = np.delete(A, k, axis=2)
    R, _, C = householder_qr(others, rhs=target, pivot=True)
    scale = np.linalg.norm(A.reshape(B, -1), axis=1)
    diag = np.abs(np.diagonal(R, axis1=1, axis2=2))
    rank = (diag > RANK_TOL * scale[:, None]).sum(axis=1)
    idx = np.arange(rows)[None, :]
    tail = np.where(idx >= rank[:, None], C[:, :, 0], 0.0)
    return np.linalg.norm(tail, axis=1)


def column_distance(M, k: int) -> float:
    """Euclidean distance from column ``k`` (0-based) to the span of the other columns."""
    return float(batch_column_distance(M, k)[0])


# --------------------------------------------------------------------------
# matrix files
# --------------------------------------------------------------------------


def write_csv(path, M) -> None:
    A = np.asarray(M, dtype=np.float64)
    with open(path, "w") as fh:
        for row in np.atleast_2d(A):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_csv(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                rows.append([float(tok) for tok in line.split(",")])
    if not rows or len({len(r) for r in rows}) != 1:
        raise InvalidInputError(f"{path}: ragged or empty matrix")
    return np.array(rows, dtype=np.float64)


def write_bin(path, M) -> None:
    """Binary container: 8-byte magic, rows and cols as little-endian u64, then f64 data."""
    A = np.ascontiguousarray(np.asarray(M, dtype="<f8"))
    rows, cols = A.shape
    Path(path).write_bytes(BIN_MAGIC + struct.pack("<QQ", rows, cols) + A.tobytes())


def read_bin(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:8] != BIN_MAGIC:
        raise InvalidInputError(f"{path}: bad magic")
    rows, cols = struct.unpack("<QQ", raw[8:24])
    body = raw[24:]
    if len(body) != 8 * rows * cols:
        raise InvalidInputError(f"{path}: expected {rows}x{cols} payload, got {len(body)} bytes")
    return np.frombuffer(body, dtype="<f8").reshape(rows, cols).astype(np.float64)
