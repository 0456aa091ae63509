"""Random lifts of reversible Markov chains."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import InvalidParams, InvalidStationary, NotReversible, NotStochastic, ParseError
from .graph import Graph, adjacency, make_graph
from .lift import LiftSpec, get_sampler, lifted_edge_arrays
from .linalg import Spectrum, sym_eigenvalues
from .rng import stream
from .spectral import new_eigenvalues

ATOL = 1e-10


@dataclass(frozen=True, eq=False)
class ReversibleChain:
    n: int
    P: np.ndarray
    pi: np.ndarray


def make_chain(P, pi, atol: float = ATOL) -> ReversibleChain:
    """Validate a transition matrix and its reversing measure.

    Raises
    ------
    NotStochastic
        Negative entry or a row not summing to one.
    InvalidStationary
        ``pi`` has a nonpositive entry or does not sum to one.
    NotReversible
        Detailed balance ``pi_i P_ij = pi_j P_ji`` fails somewhere.
    """
    P = np.array(P, dtype=float)
    pi = np.array(pi, dtype=float).ravel()
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] != pi.shape[0] or P.shape[0] < 1:
        raise InvalidParams(f"shape mismatch: P is {P.shape}, pi has length {pi.shape[0]}")
    if np.any(P < 0):
        raise NotStochastic("transition matrix has negative entries")
    rows = P.sum(axis=1)
    bad = np.flatnonzero(np.abs(rows - 1.0) > atol)
    if bad.size:
        raise NotStochastic(f"row {bad[0] + 1} sums to {rows[bad[0]]!r}")
    if np.any(pi <= 0):
        raise InvalidStationary("stationary measure must be strictly positive")
    if abs(pi.sum() - 1.0) > atol:
        raise InvalidStationary(f"stationary measure sums to {pi.sum()!r}")
    flow = pi[:, None] * P
    gap = np.abs(flow - flow.T)
    if gap.max() > atol:
        i, j = np.unravel_index(np.argmax(gap), gap.shape)
        raise NotReversible(
            f"detailed balance fails at ({i + 1}, {j + 1}): {flow[i, j]!r} != {flow[j, i]!r}"
        )
    P.setflags(write=False)
    pi.setflags(write=False)
    return ReversibleChain(P.shape[0], P, pi)


def symmetrize(chain: ReversibleChain) -> np.ndarray:
    """``Q_ij = sqrt(pi_i / pi_j) P_ij``, similar to ``P`` and symmetric by detailed balance."""
    r = np.sqrt(chain.pi)
    Q = r[:, None] * chain.P / r[None, :]
    return (Q + Q.T) / 2


def support_graph(chain: ReversibleChain) -> Graph:
    """Graph on the states joining ``i != j`` whenever either transition is possible."""
    S = (chain.P > 0) | (chain.P.T > 0)
    np.fill_diagonal(S, False)
    i, j = np.nonzero(np.triu(S))
    return make_graph(chain.n, zip((i + 1).tolist(), (j + 1).tolist()))


def lift_chain(chain: ReversibleChain, k: int, seed: int = 0, sampler: str = "uniform",
               spec: LiftSpec | None = None) -> ReversibleChain:
    """Random ``k``-lift of a reversible chain.

    One matching is drawn per unordered state pair with a positive transition
    in either direction, and it is used for both directions.  Holding
    probabilities ``P(i, i)`` stay on the diagonal of every copy.  Pass
    ``spec`` to supply the matchings instead of sampling them.
    """
    if int(k) != k or k < 1:
        raise InvalidParams(f"lift order must be a positive integer, got {k!r}")
    G = support_graph(chain)
    n_comp, _ = connected_components(chain.P > 0, directed=False)
    if n_comp > 1:
        warnings.warn(f"chain has {n_comp} communicating classes; it is not irreducible",
                      RuntimeWarning, stacklevel=2)
    if spec is None:
        spec = get_sampler(sampler)(G, k, seed)
    elif spec.base != G or spec.k != k:
        raise InvalidParams("supplied lift spec does not match the chain's support graph and k")
    nk = chain.n * k
    Pk = np.zeros((nk, nk))
    u, v = lifted_edge_arrays(spec)
    iu, iv = u // k, v // k
    Pk[u, v] = chain.P[iu, iv]
    Pk[v, u] = chain.P[iv, iu]
    idx = np.arange(nk)
    Pk[idx, idx] = np.repeat(np.diag(chain.P), k)
    return make_chain(Pk, np.repeat(chain.pi, k) / k)


def c_param(chain: ReversibleChain) -> float:
    """``max_i sum_j pi_j P_ji^2 / pi_i``."""
    terms = chain.pi[:, None] * chain.P ** 2 / chain.pi[None, :]
    return float(terms.sum(axis=0).max())


def chain_bound(c_P: float, n: int, k: int, delta: float) -> float:
    """``16 sqrt(c_P ln(nk/delta))``."""
    if c_P < 0:
        raise InvalidParams(f"c_P must be nonnegative, got {c_P}")
    if n < 1 or k < 1:
        raise InvalidParams(f"n and k must be positive, got n={n}, k={k}")
    if not 0.0 < delta < 1.0:
        raise InvalidParams(f"delta must lie in (0, 1), got {delta}")
    return 16.0 * math.sqrt(c_P * math.log(n * k / delta))


def chain_spectrum(chain: ReversibleChain, method: str = "lapack") -> Spectrum:
    return sym_eigenvalues(symmetrize(chain), method)


def chain_new_eigenvalues(chain: ReversibleChain, lifted: ReversibleChain,
                          method: str = "lapack") -> Spectrum:
    if lifted.n % chain.n:
        raise InvalidParams(f"{lifted.n} states cannot be a lift of {chain.n}")
    return new_eigenvalues(chain_spectrum(lifted, method), chain_spectrum(chain, method), "chain")


# -- text format --------------------------------------------------------------

def format_chain(chain: ReversibleChain) -> str:
    fmt = lambda row: " ".join(format(float(x), ".17g") for x in row)  # noqa: E731
    lines = [str(chain.n)] + [fmt(r) for r in chain.P] + [fmt(chain.pi)]
    return "\n".join(lines) + "\n"


def parse_chain(text: str) -> ReversibleChain:
    """Parse ``n``, then ``n`` rows of ``P``, then one row with ``pi``."""
    rows = [(no, ln.split()) for no, ln in enumerate(text.splitlines(), 1) if ln.strip()]
    if not rows:
        raise ParseError("line 1: empty chain file")
    no, head = rows[0]
    if len(head) != 1:
        raise ParseError(f"line {no}: expected the state count alone, got {' '.join(head)!r}")
    try:
        n = int(head[0])
    except ValueError:
        raise ParseError(f"line {no}: state count {head[0]!r} is not an integer") from None
    if n < 1:
        raise ParseError(f"line {no}: state count must be positive")
    if len(rows) != n + 2:
        raise ParseError(f"expected {n + 2} nonblank lines (n, {n} rows of P, pi), found {len(rows)}")
    values = []
    for r, (no, parts) in enumerate(rows[1:], start=1):
        what = f"row {r} of P" if r <= n else "pi"
        if len(parts) != n:
            raise ParseError(f"line {no} ({what}): expected {n} values, got {len(parts)}")
        row = []
        for c, tok in enumerate(parts, start=1):
            try:
                row.append(float(tok))
            except ValueError:
                raise ParseError(f"line {no} ({what}), column {c}: {tok!r} is not a number") from None
        values.append(row)
    return make_chain(values[:n], values[n])


def read_chain(path) -> ReversibleChain:
    return parse_chain(Path(path).read_text(encoding="utf-8"))


def write_chain(chain: ReversibleChain, path) -> None:
    Path(path).write_text(format_chain(chain), encoding="utf-8", newline="\n")


# -- standard chains used as fixtures -------------------------------------------

def random_walk(G: Graph) -> ReversibleChain:
    """Simple random walk on ``G``; reversible w.r.t. the degree measure."""
    A = adjacency(G)
    deg = A.sum(axis=1)
    if np.any(deg == 0):
        raise InvalidParams("random walk needs every vertex to have a neighbour")
    return make_chain(A / deg[:, None], deg / deg.sum())


def random_reversible_chain(n: int, seed: int, density: float = 0.6,
                            laziness: float = 0.0) -> ReversibleChain:
    """Chain from a random symmetric conductance matrix ``C``: ``P = C / rowsum(C)``."""
    gen = stream(seed, 0xC4A1)
    C = gen.random((n, n)) * (gen.random((n, n)) < density)
    C = np.triu(C, 1)
    C = C + C.T
    # keep the chain irreducible with a weak cycle
    for i in range(n):
        j = (i + 1) % n
        if j != i:
            C[i, j] = C[j, i] = max(C[i, j], 0.05)
    np.fill_diagonal(C, laziness * gen.random(n))
    w = C.sum(axis=1)
    if n == 1:
        return make_chain([[1.0]], [1.0])
    return make_chain(C / w[:, None], w / w.sum())
