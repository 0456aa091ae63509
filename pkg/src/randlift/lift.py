"""Random k-lifts of graphs.

A k-lift replaces each vertex ``i`` by copies ``(i, 1) .. (i, k)`` and each
edge ``ij`` (with ``i < j``) by a perfect matching between the copies,
encoded as a permutation ``sigma`` of ``1..k``: copy ``(i, l)`` is joined to
``(j, sigma[l])``.  Lifted vertices are numbered ``(i - 1) * k + l``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import InvalidParams, ParseError
from .graph import Edge, Graph, make_graph
from .rng import derive_seed, fisher_yates, stream

I_TO_J = "i-to-j"
J_TO_I = "j-to-i"


@dataclass(frozen=True)
class Matching:
    k: int
    sigma: tuple[int, ...]

    def __post_init__(self):
        sigma = tuple(int(s) for s in self.sigma)
        object.__setattr__(self, "sigma", sigma)
        if len(sigma) != self.k or sorted(sigma) != list(range(1, self.k + 1)):
            raise InvalidParams(f"sigma {sigma} is not a permutation of 1..{self.k}")

    @classmethod
    def identity(cls, k: int) -> "Matching":
        return cls(k, tuple(range(1, k + 1)))


@dataclass(frozen=True, eq=True)
class LiftSpec:
    base: Graph
    k: int
    matchings: Mapping[Edge, Matching]

    def __post_init__(self):
        if self.k < 1:
            raise InvalidParams(f"lift order must be positive, got {self.k}")
        if set(self.matchings) != set(self.base.edges):
            raise InvalidParams("matchings must have exactly one entry per base edge")
        if any(m.k != self.k for m in self.matchings.values()):
            raise InvalidParams(f"every matching must have order {self.k}")

    __hash__ = None

    def sigma_array(self) -> np.ndarray:
        """``(m, k)`` array of 0-based images, rows in base edge order."""
        if not self.base.edges:
            return np.zeros((0, self.k), dtype=np.intp)
        return np.asarray([self.matchings[e].sigma for e in self.base.edges], dtype=np.intp) - 1


@dataclass(frozen=True)
class LiftedGraph:
    graph: Graph
    base_n: int
    k: int

    def label(self, i: int, ell: int) -> int:
        return (i - 1) * self.k + ell

    def unlabel(self, v: int) -> tuple[int, int]:
        q, r = divmod(v - 1, self.k)
        return q + 1, r + 1


def identity_lift(G: Graph, k: int) -> LiftSpec:
    """Lift whose matchings are all the identity: ``k`` disjoint copies of ``G``."""
    ident = Matching.identity(k)
    return LiftSpec(G, k, {e: ident for e in G.edges})


def _check_k(k):
    if int(k) != k or k < 1:
        raise InvalidParams(f"lift order must be a positive integer, got {k!r}")


def sample_uniform_lift(G: Graph, k: int, seed: int) -> LiftSpec:
    """Independent uniformly random matching per edge.

    Edge ``(i, j)`` draws from the substream ``(seed, i, j)``, so the result
    does not depend on the order edges are visited.
    """
    _check_k(k)
    return LiftSpec(G, k, {
        (i, j): Matching(k, tuple(fisher_yates(k, stream(seed, i, j))))
        for i, j in G.edges
    })


def sample_cyclic_lift(G: Graph, k: int, seed: int) -> LiftSpec:
    """Per edge, a uniformly random cyclic shift ``l -> ((l - 1 + s) mod k) + 1``.

    Each pair ``(l, r)`` is matched with probability exactly ``1/k`` although
    only ``k`` of the ``k!`` permutations can occur.
    """
    _check_k(k)
    return LiftSpec(G, k, {
        (i, j): cyclic_shift(k, int(stream(seed, i, j).integers(0, k))) for i, j in G.edges
    })


def cyclic_shift(k: int, s: int) -> Matching:
    return Matching(k, tuple((ell - 1 + s) % k + 1 for ell in range(1, k + 1)))


SAMPLERS: dict[str, Callable[[Graph, int, int], LiftSpec]] = {
    "uniform": sample_uniform_lift,
    "cyclic": sample_cyclic_lift,
}


def get_sampler(name: str):
    try:
        return SAMPLERS[name]
    except KeyError:
        raise InvalidParams(f"unknown sampler {name!r}; expected one of {sorted(SAMPLERS)}") from None


def lifted_edge_arrays(spec: LiftSpec) -> tuple[np.ndarray, np.ndarray]:
    """0-based endpoints of every lifted edge; the i-side copy comes first."""
    k = spec.k
    if not spec.base.edges:
        empty = np.zeros(0, dtype=np.intp)
        return empty, empty
    base = np.asarray(spec.base.edges, dtype=np.intp) - 1
    sig = spec.sigma_array()
    ell = np.arange(k)
    u = (base[:, [0]] * k + ell).ravel()
    v = (base[:, [1]] * k + sig).ravel()
    return u, v


def realize(spec: LiftSpec) -> LiftedGraph:
    u, v = lifted_edge_arrays(spec)
    n = spec.base.n * spec.k
    edges = sorted(zip((u + 1).tolist(), (v + 1).tolist()))
    # endpoints already satisfy u < v because i < j
    return LiftedGraph(Graph(n, tuple(edges)), spec.base.n, spec.k)


def permutation_matrix(m: Matching, direction: str = I_TO_J) -> np.ndarray:
    """``V_(i,j)`` with a one at ``(l, sigma[l])``; ``j-to-i`` gives its transpose."""
    V = np.zeros((m.k, m.k))
    V[np.arange(m.k), np.asarray(m.sigma) - 1] = 1.0
    if direction == I_TO_J:
        return V
    if direction == J_TO_I:
        return V.T.copy()
    raise InvalidParams(f"direction must be {I_TO_J!r} or {J_TO_I!r}, got {direction!r}")


def flatten_index(tup: Sequence[int], ks: Sequence[int]) -> int:
    """Mixed-radix label of ``(l_1, .., l_s)`` in ``1..prod(ks)``, first stage most significant."""
    if len(tup) != len(ks):
        raise InvalidParams(f"tuple {tuple(tup)} and radices {tuple(ks)} differ in length")
    idx = 0
    for ell, k in zip(tup, ks):
        if not 1 <= ell <= k:
            raise InvalidParams(f"component {ell} outside 1..{k}")
        idx = idx * k + (ell - 1)
    return idx + 1


def unflatten_index(idx: int, ks: Sequence[int]) -> tuple[int, ...]:
    k = math.prod(ks)
    if not 1 <= idx <= k:
        raise InvalidParams(f"index {idx} outside 1..{k}")
    rem = idx - 1
    out = []
    for kt in reversed(ks):
        rem, r = divmod(rem, kt)
        out.append(r + 1)
    return tuple(reversed(out))


STAGE_TAG = 0x57A6E


def stage_seed(seed: int, t: int) -> int:
    return derive_seed(seed, STAGE_TAG, t)


def iterated_lift(G: Graph, ks: Sequence[int], seed: int) -> tuple[LiftedGraph, LiftSpec]:
    """Lift ``G`` successively by ``k_1, .., k_s`` with uniform matchings.

    Stage ``t`` is a uniform ``k_t``-lift of the stage ``t-1`` graph drawn with
    :func:`stage_seed`.  Because lifted vertices are numbered ``(v-1)*k_t + l``,
    vertex ``(i, l_1, .., l_s)`` of the final graph ends up at
    ``(i-1)*k + flatten_index((l_1, .., l_s), ks)``.  The second return value
    is the equivalent single ``k``-lift of ``G``: per base edge, the
    composition of the stagewise matchings.
    """
    ks = [int(x) for x in ks]
    if not ks:
        raise InvalidParams("need at least one stage")
    if any(kt < 2 for kt in ks):
        raise InvalidParams(f"every stage order must be at least 2, got {ks}")
    # composite[e][L] = R: copy L of i is joined to copy R of j (0-based)
    composite = {e: np.zeros(1, dtype=np.intp) for e in G.edges}
    current = G
    K = 1
    for t, kt in enumerate(ks, start=1):
        spec_t = sample_uniform_lift(current, kt, stage_seed(seed, t))
        new = {}
        for (i, j), comp in composite.items():
            L = np.arange(K)
            u = (i - 1) * K + L + 1
            v = (j - 1) * K + comp + 1
            nxt = np.empty(K * kt, dtype=np.intp)
            for a in range(K):
                tau = spec_t.matchings[(int(u[a]), int(v[a]))].sigma
                nxt[a * kt:(a + 1) * kt] = comp[a] * kt + np.asarray(tau) - 1
            new[(i, j)] = nxt
        composite = new
        current = realize(spec_t).graph
        K *= kt
    induced = LiftSpec(G, K, {e: Matching(K, tuple((c + 1).tolist())) for e, c in composite.items()})
    return LiftedGraph(current, G.n, K), induced


# -- text format --------------------------------------------------------------

def format_lift_spec(spec: LiftSpec) -> str:
    lines = [f"{spec.base.n} {spec.k} {spec.base.m}"]
    for e in spec.base.edges:
        sig = " ".join(str(s) for s in spec.matchings[e].sigma)
        lines.append(f"{e[0]} {e[1]} {sig}")
    return "\n".join(lines) + "\n"


def parse_lift_spec(text: str) -> LiftSpec:
    """Parse a ``n k m`` header and ``m`` lines of ``i j sigma[1] .. sigma[k]``."""
    rows = [(no, ln.split()) for no, ln in enumerate(text.splitlines(), 1) if ln.strip()]
    if not rows:
        raise ParseError("line 1: empty lift file")
    no, head = rows[0]
    try:
        n, k, m = (int(x) for x in head)
    except ValueError:
        raise ParseError(f"line {no}: expected header 'n k m', got {' '.join(head)!r}") from None
    if len(rows) - 1 != m:
        raise ParseError(f"line {no}: header declares {m} edges, found {len(rows) - 1}")
    edges, sigmas = [], []
    for no, parts in rows[1:]:
        if len(parts) != k + 2:
            raise ParseError(f"line {no}: expected {k + 2} integers, got {len(parts)}")
        try:
            vals = [int(x) for x in parts]
        except ValueError:
            raise ParseError(f"line {no}: non-integer token") from None
        i, j = vals[:2]
        if not 1 <= i < j <= n:
            raise ParseError(f"line {no}: edge ({i}, {j}) must satisfy 1 <= i < j <= {n}")
        edges.append((i, j))
        sigmas.append(tuple(vals[2:]))
    if len(set(edges)) != len(edges):
        raise ParseError("duplicate edge in lift file")
    G = make_graph(n, edges)
    try:
        matchings = {e: Matching(k, s) for e, s in zip(edges, sigmas)}
    except InvalidParams as exc:
        raise ParseError(str(exc)) from exc
    return LiftSpec(G, k, matchings)


def read_lift_spec(path) -> LiftSpec:
    return parse_lift_spec(Path(path).read_text(encoding="utf-8"))


def write_lift_spec(spec: LiftSpec, path) -> None:
    Path(path).write_text(format_lift_spec(spec), encoding="utf-8", newline="\n")
