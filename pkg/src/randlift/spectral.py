"""Old/new eigenvalue decomposition of lifts, deviation norms and tail bounds.

For a k-lift with adjacency ``A_k`` of a base graph with adjacency ``A``, the
base spectrum sits inside the lift spectrum and the leftover ("new")
eigenvalues satisfy ``max |eta| = ||A_k - A (x) Pi_k||``.  The normalized
Laplacian version reads ``max |1 - beta| = ||L_k - (I - (I - L) (x) Pi_k)||``.
This module computes both sides so they can be checked against each other,
and evaluates the closed-form high-probability bounds on them.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegreeZeroUnsupported, InvalidParams, SpectrumContainmentViolated
from .graph import Graph, adjacency, degrees, normalized_laplacian
from .lift import LiftedGraph, LiftSpec, permutation_matrix, I_TO_J
from .linalg import (
    Spectrum,
    default_match_tol,
    kron,
    multiset_diff,
    operator_norm,
    projector_pi,
    sym_eigenvalues,
)

PROP_EQUALITY_RTOL = 1e-6


# -- operator assembly ---------------------------------------------------------

def lift_adjacency(spec: LiftSpec) -> np.ndarray:
    """``sum_ij e_i e_j^T (x) V_ij + e_j e_i^T (x) V_ij^T`` as a dense ``nk x nk`` matrix."""
    n, k = spec.base.n, spec.k
    Ak = np.zeros((n * k, n * k))
    for (i, j), m in spec.matchings.items():
        V = permutation_matrix(m, I_TO_J)
        bi, bj = (i - 1) * k, (j - 1) * k
        Ak[bi:bi + k, bj:bj + k] = V
        Ak[bj:bj + k, bi:bi + k] = V.T
    return Ak


def _positive_degrees(G: Graph) -> np.ndarray:
    deg = np.asarray(degrees(G).per_vertex, dtype=float)
    if np.any(deg == 0):
        isolated = [i + 1 for i in np.flatnonzero(deg == 0)]
        raise DegreeZeroUnsupported(f"isolated vertices {isolated[:10]} have no Laplacian lift form")
    return deg


def lift_laplacian(spec: LiftSpec) -> np.ndarray:
    """Normalized Laplacian of the lift assembled blockwise from the matchings."""
    deg = _positive_degrees(spec.base)
    n, k = spec.base.n, spec.k
    Lk = np.eye(n * k)
    for (i, j), m in spec.matchings.items():
        V = permutation_matrix(m, I_TO_J) / math.sqrt(deg[i - 1] * deg[j - 1])
        bi, bj = (i - 1) * k, (j - 1) * k
        Lk[bi:bi + k, bj:bj + k] -= V
        Lk[bj:bj + k, bi:bi + k] -= V.T
    return Lk


def adjacency_deviation(G: Graph, spec: LiftSpec) -> np.ndarray:
    return lift_adjacency(spec) - kron(adjacency(G), projector_pi(spec.k))


def laplacian_deviation(G: Graph, spec: LiftSpec) -> np.ndarray:
    _positive_degrees(G)
    k = spec.k
    old_part = np.eye(G.n * k) - kron(np.eye(G.n) - normalized_laplacian(G), projector_pi(k))
    return lift_laplacian(spec) - old_part


def adjacency_deviation_norm(G: Graph, spec: LiftSpec, method: str = "lapack") -> float:
    return operator_norm(adjacency_deviation(G, spec), method)


def laplacian_deviation_norm(G: Graph, spec: LiftSpec, method: str = "lapack") -> float:
    """Raises :class:`DegreeZeroUnsupported` when ``G`` has an isolated vertex."""
    return operator_norm(laplacian_deviation(G, spec), method)


# -- new eigenvalues -------------------------------------------------------------

def new_eigenvalues(lift_spectrum: Spectrum, base_spectrum: Spectrum, what: str = "spectrum") -> Spectrum:
    """Multiset difference, raising if the base spectrum is not contained."""
    tol = default_match_tol(lift_spectrum.max_abs())
    new = multiset_diff(lift_spectrum, base_spectrum, tol)
    if not new.ok:
        raise SpectrumContainmentViolated(
            f"{new.match_failures} base {what} eigenvalue(s) not found in the lift within {tol:.3g}"
        )
    return new


def new_adjacency_eigenvalues(G: Graph, lift: LiftedGraph, method: str = "lapack") -> Spectrum:
    return new_eigenvalues(
        sym_eigenvalues(adjacency(lift.graph), method),
        sym_eigenvalues(adjacency(G), method),
        "adjacency",
    )


def new_laplacian_eigenvalues(G: Graph, lift: LiftedGraph, method: str = "lapack") -> Spectrum:
    return new_eigenvalues(
        sym_eigenvalues(normalized_laplacian(lift.graph), method),
        sym_eigenvalues(normalized_laplacian(G), method),
        "laplacian",
    )


# -- bounds ----------------------------------------------------------------------

def _check_common(n, k, delta):
    if n < 1 or k < 1:
        raise InvalidParams(f"n and k must be positive, got n={n}, k={k}")
    if not 0.0 < delta < 1.0:
        raise InvalidParams(f"delta must lie in (0, 1), got {delta}")


def adjacency_bound(d_max: float, n: int, k: int, delta: float) -> float:
    """``16 sqrt(Delta ln(2nk/delta))``."""
    _check_common(n, k, delta)
    if d_max < 0:
        raise InvalidParams(f"maximum degree must be nonnegative, got {d_max}")
    return 16.0 * math.sqrt(d_max * math.log(2 * n * k / delta))


def laplacian_bound(d_min: float, n: int, k: int, delta: float) -> float:
    """``16 sqrt(ln(2nk/delta) / d)``."""
    _check_common(n, k, delta)
    if d_min < 1:
        raise InvalidParams(f"minimum degree must be at least 1, got {d_min}")
    return 16.0 * math.sqrt(math.log(2 * n * k / delta) / d_min)


def corollary_bounds(d_min: float, d_max: float, n: int, k: int, delta: float) -> tuple[float, float]:
    """Bounds on ``||A_k - A~_k||`` and ``||L_k - L~_k||`` between a direct and an iterated lift.

    Each is twice the single-lift bound at confidence ``delta/2``.
    """
    _check_common(n, k, delta)
    if d_max < 0 or d_min < 1:
        raise InvalidParams(f"need d_min >= 1 and d_max >= 0, got {d_min}, {d_max}")
    log_term = math.log(4 * n * k / delta)
    return 32.0 * math.sqrt(d_max * log_term), 32.0 * math.sqrt(log_term / d_min)


def freedman_tail(t: float, sigma2: float, M: float, dim: int) -> float:
    """``2 dim exp(-t^2 / (8 sigma2 + 4 M t))``; not clipped to 1."""
    if t < 0:
        raise InvalidParams(f"t must be nonnegative, got {t}")
    if M <= 0:
        raise InvalidParams(f"M must be positive, got {M}")
    if sigma2 < 0 or dim < 1:
        raise InvalidParams(f"need sigma2 >= 0 and dim >= 1, got {sigma2}, {dim}")
    if t == 0:
        return 2.0 * dim
    return 2.0 * dim * math.exp(-t * t / (8.0 * sigma2 + 4.0 * M * t))


def variance_sum_adjacency(G: Graph, k: int) -> tuple[np.ndarray, float]:
    """``diag(deg) (x) (I_k - Pi_k)`` and its norm, which is ``Delta`` whenever ``k >= 2``."""
    deg = np.asarray(degrees(G).per_vertex, dtype=float)
    S = kron(np.diag(deg), np.eye(k) - projector_pi(k))
    return S, operator_norm(S)


def variance_sum_laplacian(G: Graph, k: int) -> tuple[np.ndarray, float]:
    """Variance proxy for the Laplacian sum; its norm is at most ``1/d``."""
    deg = np.asarray(_positive_degrees(G), dtype=float)
    w = np.zeros(G.n)
    for i, j in G.edges:
        c = 1.0 / (deg[i - 1] * deg[j - 1])
        w[i - 1] += c
        w[j - 1] += c
    S = kron(np.diag(w), np.eye(k) - projector_pi(k))
    return S, operator_norm(S)


# -- reports ---------------------------------------------------------------------

@dataclass
class DeviationReport:
    new_eigs_adjacency: Spectrum
    new_eigs_laplacian: Spectrum | None
    dev_norm_adjacency: float
    dev_norm_laplacian: float | None
    match_failures: dict = field(default_factory=dict)
    max_new_adjacency: float = 0.0
    max_new_laplacian_dev: float | None = None
    prop_residual_adjacency: float = 0.0
    prop_residual_laplacian: float | None = None
    prop_equality_ok: bool = True
    laplacian_skipped: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["new_eigs_adjacency"] = self.new_eigs_adjacency.values.tolist()
        d["new_eigs_laplacian"] = (
            None if self.new_eigs_laplacian is None else self.new_eigs_laplacian.values.tolist()
        )
        return d


@dataclass
class BoundReport:
    n: int
    k: int
    delta: float
    d_min: int
    d_max: int
    adjacency_bound: float
    laplacian_bound: float | None
    corollary_bound_adjacency: float
    corollary_bound_laplacian: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def bound_report(G: Graph, k: int, delta: float) -> BoundReport:
    prof = degrees(G)
    lap = laplacian_bound(prof.d_min, G.n, k, delta) if prof.d_min > 0 else None
    cor_a = 32.0 * math.sqrt(prof.d_max * math.log(4 * G.n * k / delta))
    cor_l = corollary_bounds(prof.d_min, prof.d_max, G.n, k, delta)[1] if prof.d_min > 0 else None
    return BoundReport(
        n=G.n, k=k, delta=delta, d_min=prof.d_min, d_max=prof.d_max,
        adjacency_bound=adjacency_bound(prof.d_max, G.n, k, delta),
        laplacian_bound=lap,
        corollary_bound_adjacency=cor_a,
        corollary_bound_laplacian=cor_l,
    )


class BaseSpectra:
    """Matrices and spectra of a base graph, computed once and reused across lifts."""

    def __init__(self, G: Graph, method: str = "lapack"):
        self.G = G
        self.method = method
        self.profile = degrees(G)
        self.A = adjacency(G)
        self.spec_A = sym_eigenvalues(self.A, method)
        self.has_laplacian = self.profile.d_min > 0
        if self.has_laplacian:
            self.L = normalized_laplacian(G)
            self.spec_L = sym_eigenvalues(self.L, method)


def deviation_report(G: Graph, spec: LiftSpec, base: BaseSpectra | None = None,
                     method: str = "lapack") -> DeviationReport:
    """Compute new eigenvalues and deviation norms of one lift from assembled operators.

    The two sides of each old/new norm identity are computed independently
    (one from the lift spectrum, one from the deviation operator) and their
    gap is stored as a diagnostic.  Laplacian fields stay ``None`` when the
    base graph has an isolated vertex.
    """
    if base is None:
        base = BaseSpectra(G, method)
    k = spec.k
    Pi = projector_pi(k)
    d_max = base.profile.d_max

    Ak = lift_adjacency(spec)
    spec_Ak = sym_eigenvalues(Ak, method)
    new_A = new_eigenvalues(spec_Ak, base.spec_A, "adjacency")
    dev_A = operator_norm(Ak - kron(base.A, Pi), method)
    max_new_A = new_A.max_abs()
    resid_A = abs(max_new_A - dev_A)
    ok = resid_A <= PROP_EQUALITY_RTOL * max(1.0, d_max)

    report = DeviationReport(
        new_eigs_adjacency=new_A, new_eigs_laplacian=None,
        dev_norm_adjacency=dev_A, dev_norm_laplacian=None,
        match_failures={"adjacency": new_A.match_failures},
        max_new_adjacency=max_new_A, prop_residual_adjacency=resid_A,
    )
    if base.has_laplacian:
        Lk = lift_laplacian(spec)
        spec_Lk = sym_eigenvalues(Lk, method)
        new_L = new_eigenvalues(spec_Lk, base.spec_L, "laplacian")
        old_part = np.eye(G.n * k) - kron(np.eye(G.n) - base.L, Pi)
        dev_L = operator_norm(Lk - old_part, method)
        max_new_L = float(np.max(np.abs(1.0 - new_L.values))) if len(new_L) else 0.0
        resid_L = abs(max_new_L - dev_L)
        ok = ok and resid_L <= PROP_EQUALITY_RTOL
        report.new_eigs_laplacian = new_L
        report.dev_norm_laplacian = dev_L
        report.max_new_laplacian_dev = max_new_L
        report.prop_residual_laplacian = resid_L
        report.match_failures["laplacian"] = new_L.match_failures
    else:
        report.laplacian_skipped = True
    report.prop_equality_ok = bool(ok)
    return report


def analyze(G: Graph, spec: LiftSpec, delta: float = 0.05,
            method: str = "lapack") -> tuple[DeviationReport, BoundReport]:
    if spec.base != G:
        raise InvalidParams("lift spec was not built over this base graph")
    return deviation_report(G, spec, method=method), bound_report(G, spec.k, delta)
