"""Dense symmetric linear algebra: eigenvalues, operator norms, tensor products
and tolerance-aware multiset arithmetic on spectra.

Two eigensolver backends are available.  ``"householder"`` is a
self-contained Householder tridiagonalization followed by implicit symmetric
QR with Wilkinson shifts.  ``"lapack"`` (the default) calls
``numpy.linalg.eigh``/``eigvalsh``, which runs the same reduction in compiled
code and is what makes thousand-dimensional Monte Carlo runs practical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EigenFailure, InvalidParams

DENSE_LIMIT = 4096
SWEEPS_PER_EIGENVALUE = 50
METHODS = ("lapack", "householder")


def symmetric(M) -> np.ndarray:
    """Return ``(M + M.T) / 2`` as a float array after checking shape and finiteness."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise InvalidParams(f"expected a nonempty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidParams("matrix has non-finite entries")
    return (M + M.T) / 2


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Sorted eigenvalue multiset.

    ``match_failures`` is only nonzero on the result of :func:`multiset_diff`
    and counts elements of the subtrahend that found no partner.
    """

    values: np.ndarray
    match_failures: int = field(default=0)

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float).ravel())
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values.tolist())

    def __repr__(self):
        flag = f", match_failures={self.match_failures}" if self.match_failures else ""
        return f"Spectrum({np.array2string(self.values, precision=6)}{flag})"

    @property
    def ok(self) -> bool:
        return self.match_failures == 0

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if len(self.values) else 0.0


# -- Householder + implicit QR ------------------------------------------------

def _tridiagonalize(A: np.ndarray, want_vectors: bool):
    """Reduce symmetric ``A`` to tridiagonal ``T`` with ``A = Q T Q^T``.

    Returns the diagonal, the off-diagonal and ``Q^T`` (or None).
    """
    A = A.copy()
    n = A.shape[0]
    Qt = np.eye(n) if want_vectors else None
    for k in range(n - 2):
        x = A[k + 1:, k]
        if not np.any(x[1:]):
            continue
        # rescale first: squaring entries near 1e-155 lands in subnormals
        xs = float(np.abs(x).max())
        v = x / xs
        alpha_s = -math.copysign(float(np.linalg.norm(v)), v[0])
        alpha = alpha_s * xs
        v[0] -= alpha_s
        v /= np.linalg.norm(v)
        sub = A[k + 1:, k + 1:]
        p = sub @ v
        w = p - (v @ p) * v
        sub -= 2.0 * (np.outer(v, w) + np.outer(w, v))
        A[k + 1, k] = A[k, k + 1] = alpha
        A[k + 2:, k] = 0.0
        A[k, k + 2:] = 0.0
        if Qt is not None:
            # Q <- Q H, stored transposed so the update touches rows
            Qt[k + 1:, :] -= 2.0 * np.outer(v, v @ Qt[k + 1:, :])
    return np.diag(A).copy(), np.diag(A, 1).copy(), Qt


def _tridiagonal_qr(d: np.ndarray, e: np.ndarray, Qt: np.ndarray | None):
    """Diagonalize the tridiagonal (d, e) in place by implicit Wilkinson-shifted QR."""
    n = len(d)
    eps = np.finfo(float).eps
    # off-diagonals below eps * ||T|| are negligible; a purely local test
    # never deflates blocks that are tiny next to the rest of the matrix
    anorm = float(np.max(np.abs(d))) + 2.0 * float(np.max(np.abs(e), initial=0.0))
    thresh = eps * anorm + np.finfo(float).tiny
    cap = SWEEPS_PER_EIGENVALUE * n
    iters = 0
    m = n - 1
    d = d.tolist()
    e = e.tolist()
    while m > 0:
        if abs(e[m - 1]) <= thresh:
            e[m - 1] = 0.0
            m -= 1
            continue
        lo = m - 1
        while lo > 0:
            if abs(e[lo - 1]) <= thresh:
                e[lo - 1] = 0.0
                break
            lo -= 1
        iters += 1
        if iters > cap:
            raise EigenFailure(f"implicit QR did not converge in {cap} sweeps")

        a, c, b = d[m - 1], d[m], e[m - 1]
        delta = (a - c) / 2.0
        denom = delta + math.copysign(math.hypot(delta, b), delta)
        # b * (b / denom) rather than b * b / denom: b * b underflows for tiny b
        mu = c - b * (b / denom) if denom != 0.0 else c - abs(b)
        x = d[lo] - mu
        z = e[lo]
        for k in range(lo, m):
            r = math.hypot(x, z)
            if r == 0.0:
                cs, sn = 1.0, 0.0
            else:
                cs, sn = x / r, z / r
            if k > lo:
                e[k - 1] = r
            dk, dk1, ek = d[k], d[k + 1], e[k]
            d[k] = cs * cs * dk + 2.0 * cs * sn * ek + sn * sn * dk1
            d[k + 1] = sn * sn * dk - 2.0 * cs * sn * ek + cs * cs * dk1
            e[k] = cs * sn * (dk1 - dk) + (cs * cs - sn * sn) * ek
            if k < m - 1:
                x = e[k]
                z = sn * e[k + 1]
                e[k + 1] = cs * e[k + 1]
            if Qt is not None:
                rk = Qt[k].copy()
                Qt[k] = cs * rk + sn * Qt[k + 1]
                Qt[k + 1] = cs * Qt[k + 1] - sn * rk
    return np.asarray(d), Qt


def householder_eigh(M, want_vectors: bool = True):
    """Eigen-decomposition by Householder tridiagonalization and implicit QR.

    Returns ``(values, vectors)`` sorted ascending; ``vectors`` holds the
    eigenvectors as columns, or is None when ``want_vectors`` is false.
    """
    A = symmetric(M)
    n = A.shape[0]
    if n == 1:
        return A[0].copy(), (np.ones((1, 1)) if want_vectors else None)
    # work at unit scale so neither tiny nor huge entries under/overflow
    scale = float(np.abs(A).max())
    if scale == 0.0:
        return np.zeros(n), (np.eye(n) if want_vectors else None)
    d, e, Qt = _tridiagonalize(A / scale, want_vectors)
    vals, Qt = _tridiagonal_qr(d, e, Qt)
    vals = vals * scale
    order = np.argsort(vals, kind="stable")
    vecs = Qt[order].T.copy() if Qt is not None else None
    return vals[order], vecs


def sym_eigh(M, method: str = "lapack"):
    """Eigenvalues and orthonormal eigenvectors (columns), ascending."""
    if method == "lapack":
        return np.linalg.eigh(symmetric(M))
    if method == "householder":
        return householder_eigh(M, want_vectors=True)
    raise InvalidParams(f"unknown eigensolver {method!r}; expected one of {METHODS}")


def sym_eigenvalues(M, method: str = "lapack") -> Spectrum:
    if method == "lapack":
        A = symmetric(M)
        try:
            return Spectrum(np.linalg.eigvalsh(A))
        except np.linalg.LinAlgError as exc:
            raise EigenFailure(str(exc)) from exc
    if method == "householder":
        return Spectrum(householder_eigh(M, want_vectors=False)[0])
    raise InvalidParams(f"unknown eigensolver {method!r}; expected one of {METHODS}")


def power_norm(M, tol: float = 1e-9, max_iter: int | None = None, seed: int = 0) -> float:
    """Operator norm of symmetric ``M`` by power iteration on ``M @ M``.

    ``M`` only needs to support ``@`` with a vector, so scipy sparse
    matrices and ``LinearOperator`` objects work too.
    """
    dim = M.shape[0]
    max_iter = 10 * dim if max_iter is None else max_iter
    v = np.random.default_rng(seed).standard_normal(dim)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = M @ (M @ v)
        lam2 = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        new = math.sqrt(max(lam2, 0.0))
        if abs(new - est) <= tol * max(new, np.finfo(float).tiny):
            return new
        est = new
    raise EigenFailure(f"power iteration did not reach relative tolerance {tol} in {max_iter} steps")


def operator_norm(M, method: str = "lapack", dense_limit: int = DENSE_LIMIT) -> float:
    """Largest absolute eigenvalue of symmetric ``M``.

    Matrices up to ``dense_limit`` use the full spectrum; larger ones fall back
    to :func:`power_norm`.
    """
    A = symmetric(M)
    if A.shape[0] <= dense_limit:
        return sym_eigenvalues(A, method).max_abs()
    return power_norm(A)


def kron(A, B) -> np.ndarray:
    """Tensor product; block ``(i, j)`` is ``A[i, j] * B``, so row ``(i, l)`` sits at ``i*k + l``."""
    return symmetric(np.kron(symmetric(A), symmetric(B)))


def projector_pi(k: int) -> np.ndarray:
    """``k x k`` matrix with every entry ``1/k``: orthogonal projection onto the all-ones vector."""
    if int(k) != k or k < 1:
        raise InvalidParams(f"k must be a positive integer, got {k!r}")
    return np.full((k, k), 1.0 / k)


def multiset_diff(big, small, tol: float) -> Spectrum:
    """Remove ``small`` from ``big`` as multisets, up to ``tol``.

    Elements of ``small`` are processed in ascending order; each consumes the
    nearest still-unconsumed element of ``big`` within ``tol``, preferring the
    lower index on ties.  Elements with no partner are counted in
    ``match_failures`` rather than raised, so the caller decides severity.
    """
    if tol < 0:
        raise InvalidParams(f"tolerance must be nonnegative, got {tol}")
    b = big.values if isinstance(big, Spectrum) else np.sort(np.asarray(big, dtype=float))
    s = small.values if isinstance(small, Spectrum) else np.sort(np.asarray(small, dtype=float))
    used = np.zeros(len(b), dtype=bool)
    failures = 0
    for x in s:
        pos = int(np.searchsorted(b, x))
        lo, hi = pos - 1, pos
        while lo >= 0 and used[lo]:
            lo -= 1
        while hi < len(b) and used[hi]:
            hi += 1
        best = -1
        if lo >= 0 and abs(b[lo] - x) <= tol:
            best = lo
        if hi < len(b) and abs(b[hi] - x) <= tol:
            if best < 0 or abs(b[hi] - x) < abs(b[best] - x):
                best = hi
        if best < 0:
            failures += 1
        else:
            used[best] = True
    return Spectrum(b[~used], match_failures=failures)


def default_match_tol(big_norm: float) -> float:
    return 1e-7 * max(1.0, big_norm)
