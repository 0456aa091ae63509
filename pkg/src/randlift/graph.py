"""Simple undirected graphs, their matrices, and fixture generators.

Vertices are ``1..n``.  Edges are stored as sorted ``(i, j)`` tuples with
``i < j`` so that two graphs with the same structure compare equal.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidEdge, InvalidParams, ParseError
from .rng import stream

Edge = tuple[int, int]


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple[Edge, ...]

    @property
    def m(self) -> int:
        return len(self.edges)

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


@dataclass(frozen=True)
class DegreeProfile:
    per_vertex: tuple[int, ...]
    d_min: int
    d_max: int


def make_graph(n: int, edge_list: Iterable[Sequence[int]]) -> Graph:
    """Build a :class:`Graph`, canonicalizing and deduplicating edges.

    Raises
    ------
    InvalidParams
        If ``n < 1``.
    InvalidEdge
        On a self-loop or an endpoint outside ``1..n``.
    """
    if int(n) != n or n < 1:
        raise InvalidParams(f"vertex count must be a positive integer, got {n!r}")
    n = int(n)
    canon = set()
    for e in edge_list:
        i, j = (int(x) for x in e)
        if i == j:
            raise InvalidEdge(f"self-loop at vertex {i}")
        if not (1 <= i <= n and 1 <= j <= n):
            raise InvalidEdge(f"edge ({i}, {j}) has an endpoint outside 1..{n}")
        canon.add((i, j) if i < j else (j, i))
    return Graph(n, tuple(sorted(canon)))


def _edge_index_arrays(G: Graph) -> tuple[np.ndarray, np.ndarray]:
    if not G.edges:
        empty = np.zeros(0, dtype=np.intp)
        return empty, empty
    arr = np.asarray(G.edges, dtype=np.intp) - 1
    return arr[:, 0], arr[:, 1]


def adjacency(G: Graph) -> np.ndarray:
    """Dense 0/1 adjacency matrix with zero diagonal."""
    A = np.zeros((G.n, G.n))
    r, c = _edge_index_arrays(G)
    A[r, c] = 1.0
    A[c, r] = 1.0
    return A


def degrees(G: Graph) -> DegreeProfile:
    deg = [0] * G.n
    for i, j in G.edges:
        deg[i - 1] += 1
        deg[j - 1] += 1
    return DegreeProfile(tuple(deg), min(deg), max(deg))


def normalized_laplacian(G: Graph) -> np.ndarray:
    """``I - T A T`` with ``T = diag(deg^-1/2)``, using 0 for isolated vertices."""
    deg = np.asarray(degrees(G).per_vertex, dtype=float)
    t = np.zeros_like(deg)
    nz = deg > 0
    t[nz] = 1.0 / np.sqrt(deg[nz])
    L = np.eye(G.n) - t[:, None] * adjacency(G) * t[None, :]
    return (L + L.T) / 2


# -- generators ---------------------------------------------------------------

GENERATORS = ("complete", "cycle", "disjoint_cliques", "erdos_renyi")


def complete_graph(n: int) -> Graph:
    _check_n(n)
    return make_graph(n, itertools.combinations(range(1, n + 1), 2))


def cycle_graph(n: int) -> Graph:
    """Cycle on ``n`` vertices; ``n=1`` is a single vertex and ``n=2`` an edge."""
    _check_n(n)
    if n == 1:
        return make_graph(1, [])
    return make_graph(n, [(i, i % n + 1) for i in range(1, n + 1)])


def disjoint_cliques(q: int, s: int) -> Graph:
    """``q`` vertex-disjoint copies of the complete graph on ``s`` vertices."""
    if q < 1:
        raise InvalidParams(f"need at least one clique, got q={q}")
    if s < 2:
        raise InvalidParams(f"clique size must be at least 2, got s={s}")
    edges = []
    for c in range(q):
        base = c * s
        edges.extend(
            (base + a, base + b) for a, b in itertools.combinations(range(1, s + 1), 2)
        )
    return make_graph(q * s, edges)


def erdos_renyi(n: int, p: float, seed: int = 0) -> Graph:
    """G(n, p) with one Bernoulli draw per vertex pair, in lexicographic order."""
    _check_n(n)
    if not 0.0 <= p <= 1.0:
        raise InvalidParams(f"edge probability must lie in [0, 1], got {p}")
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    if not pairs:
        return make_graph(n, [])
    u = stream(seed, 0x6E72).random(len(pairs))
    return make_graph(n, [e for e, x in zip(pairs, u) if x < p])


def _check_n(n):
    if int(n) != n or n < 1:
        raise InvalidParams(f"vertex count must be a positive integer, got {n!r}")


def generate(kind: str, params: Sequence = (), seed: int = 0) -> Graph:
    """Dispatch to a named generator.

    ``params`` is positional: ``complete(n)``, ``cycle(n)``,
    ``disjoint_cliques(q, s)``, ``erdos_renyi(n, p)``.  Only ``erdos_renyi``
    consumes ``seed``.
    """
    params = tuple(params)
    try:
        if kind == "complete":
            (n,) = params
            return complete_graph(_as_int(n))
        if kind == "cycle":
            (n,) = params
            return cycle_graph(_as_int(n))
        if kind == "disjoint_cliques":
            q, s = params
            return disjoint_cliques(_as_int(q), _as_int(s))
        if kind == "erdos_renyi":
            n, p = params
            return erdos_renyi(_as_int(n), float(p), seed)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidParams):
            raise
        raise InvalidParams(f"bad parameters {params!r} for generator {kind!r}") from exc
    raise InvalidParams(f"unknown generator {kind!r}; expected one of {GENERATORS}")


def _as_int(x) -> int:
    v = float(x)
    if v != int(v):
        raise InvalidParams(f"expected an integer, got {x!r}")
    return int(v)


def parse_generator_spec(text: str, seed: int = 0) -> Graph:
    """Build a graph from ``kind:p1,p2,...``, e.g. ``complete:20`` or ``erdos_renyi:10,0.4``."""
    kind, _, rest = text.strip().partition(":")
    params = [p for p in rest.split(",") if p.strip()] if rest else []
    return generate(kind.strip(), params, seed)


# -- text format --------------------------------------------------------------

def format_graph(G: Graph) -> str:
    lines = [f"{G.n} {G.m}"]
    lines.extend(f"{i} {j}" for i, j in G.edges)
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> Graph:
    """Parse the ``n m`` header followed by ``m`` lines of ``i j`` (1-based, i<j)."""
    lines = [(no, ln.strip()) for no, ln in enumerate(text.splitlines(), 1)]
    lines = [(no, ln) for no, ln in lines if ln]
    if not lines:
        raise ParseError("line 1: empty graph file")
    no, header = lines[0]
    n, m = _ints(header, 2, no)
    if n < 1 or m < 0:
        raise ParseError(f"line {no}: invalid header {header!r}")
    body = lines[1:]
    if len(body) != m:
        raise ParseError(f"line {no}: header declares {m} edges, found {len(body)}")
    edges = []
    for no, ln in body:
        i, j = _ints(ln, 2, no)
        if not i < j:
            raise ParseError(f"line {no}: edge must satisfy i < j, got {ln!r}")
        if j > n or i < 1:
            raise ParseError(f"line {no}: endpoint outside 1..{n} in {ln!r}")
        edges.append((i, j))
    if len(set(edges)) != len(edges):
        raise ParseError("duplicate edge in graph file")
    return make_graph(n, edges)


def _ints(line: str, count: int, lineno: int) -> list[int]:
    parts = line.split()
    if len(parts) != count:
        raise ParseError(f"line {lineno}: expected {count} integers, got {line!r}")
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise ParseError(f"line {lineno}: non-integer token in {line!r}") from None


def read_graph(path) -> Graph:
    return parse_graph(Path(path).read_text(encoding="utf-8"))


def write_graph(G: Graph, path) -> None:
    Path(path).write_text(format_graph(G), encoding="utf-8", newline="\n")
