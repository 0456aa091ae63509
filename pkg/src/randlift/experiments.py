"""Seeded Monte Carlo experiments over random lifts.

Every trial derives its own seed from ``(master_seed, trial)``, and every
random choice inside a trial comes from substreams of that seed.  Trials
can therefore run in any order or in worker processes; records are merged
back in trial order before anything is written.  BLAS is pinned to one
thread inside each trial so the floating-point results do not depend on how
many workers share the machine.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import ConfigError, RandLiftError
from .graph import Graph, adjacency, degrees, normalized_laplacian, parse_generator_spec, read_graph
from .lift import SAMPLERS, get_sampler, iterated_lift, sample_uniform_lift
from .linalg import operator_norm
from .markov import (
    ReversibleChain,
    c_param,
    chain_bound,
    chain_new_eigenvalues,
    lift_chain,
)
from .rng import derive_seed
from .spectral import (
    BaseSpectra,
    PROP_EQUALITY_RTOL,
    adjacency_bound,
    corollary_bounds,
    deviation_report,
    laplacian_bound,
    lift_adjacency,
    lift_laplacian,
)

MAX_LIFTED_VERTICES = 20000
TRIAL_TAG = 0x7121A1


def trial_seed(master_seed: int, trial: int) -> int:
    return derive_seed(master_seed, TRIAL_TAG, trial)


# -- configuration ----------------------------------------------------------------

@dataclass
class ExperimentConfig:
    graph: str | None = None
    graph_file: str | None = None
    graph_seed: int = 0
    k: int | None = None
    ks: list[int] | None = None
    sampler: str = "uniform"
    trials: int = 1
    delta: float = 0.05
    master_seed: int = 0
    csv: str | None = None
    json: str | None = None
    workers: int = 1
    allow_large: bool = False
    method: str = "lapack"

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        return cls.from_dict(data)

    @property
    def lift_order(self) -> int:
        if self.ks:
            return math.prod(self.ks)
        return int(self.k) if self.k is not None else 1

    def validate(self, need_ks: bool = False) -> None:
        if (self.graph is None) == (self.graph_file is None):
            raise ConfigError("give exactly one of a graph generator spec or a graph file")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError(f"trials must be a positive integer, got {self.trials!r}")
        if not 0.0 < float(self.delta) < 1.0:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta!r}")
        if self.sampler not in SAMPLERS:
            raise ConfigError(f"unknown sampler {self.sampler!r}; expected one of {sorted(SAMPLERS)}")
        if need_ks:
            if not self.ks or any(int(x) < 2 for x in self.ks):
                raise ConfigError(f"ks must be a nonempty list of integers >= 2, got {self.ks!r}")
        elif self.k is None or int(self.k) != self.k or self.k < 1:
            raise ConfigError(f"k must be a positive integer, got {self.k!r}")
        if self.workers < 1:
            raise ConfigError(f"workers must be positive, got {self.workers}")

    def load_graph(self) -> Graph:
        if (self.graph is None) == (self.graph_file is None):
            raise ConfigError("give exactly one of a graph generator spec or a graph file")
        try:
            if self.graph_file is not None:
                return read_graph(self.graph_file)
            return parse_generator_spec(self.graph, self.graph_seed)
        except OSError as exc:
            raise ConfigError(f"cannot read graph file: {exc}") from exc
        except RandLiftError as exc:
            raise ConfigError(str(exc)) from exc

    def check_size(self, G: Graph) -> None:
        nk = G.n * self.lift_order
        if nk > MAX_LIFTED_VERTICES and not self.allow_large:
            raise ConfigError(
                f"lift has {nk} vertices (> {MAX_LIFTED_VERTICES}); pass allow_large to proceed"
            )


# -- output helpers ---------------------------------------------------------------

def format_value(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def records_to_csv(records: Sequence, columns: Sequence[str]) -> str:
    lines = [",".join(columns)]
    for r in records:
        row = r if isinstance(r, dict) else asdict(r)
        lines.append(",".join(format_value(row[c]) for c in columns))
    return "\n".join(lines) + "\n"


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def dumps_json(obj) -> str:
    # Python's float repr is the shortest string that round-trips exactly
    return json.dumps(_jsonable(obj), indent=2, sort_keys=False) + "\n"


def _write_text(path, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text, encoding="utf-8", newline="\n")


@dataclass
class ExperimentResult:
    kind: str
    records: list
    summary: dict
    columns: tuple[str, ...]
    config: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        return records_to_csv(self.records, self.columns)

    def to_json(self) -> str:
        return dumps_json({"experiment": self.kind, "config": self.config,
                           "summary": self.summary,
                           "records": [r if isinstance(r, dict) else asdict(r) for r in self.records]})

    def write(self, csv_path=None, json_path=None) -> None:
        if csv_path:
            _write_text(csv_path, self.to_csv())
        if json_path:
            _write_text(json_path, self.to_json())


def _map_trials(func: Callable, jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [func(job) for job in jobs]
    chunk = max(1, len(jobs) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, jobs, chunksize=chunk))


# -- single-lift trials --------------------------------------------------------------

THEOREM1_COLUMNS = (
    "trial", "seed", "max_new_adj", "dev_norm_adj", "adjacency_bound", "exceeded_adj",
    "max_new_lap_dev", "dev_norm_lap", "laplacian_bound", "exceeded_lap",
)


@dataclass
class TrialRecord:
    trial: int
    seed: int
    max_new_adj: float
    dev_norm_adj: float
    adjacency_bound: float
    exceeded_adj: bool
    max_new_lap_dev: float | None
    dev_norm_lap: float | None
    laplacian_bound: float | None
    exceeded_lap: bool | None
    prop_residual_adj: float = 0.0
    prop_residual_lap: float | None = None

    @property
    def exceeded_adjacency(self) -> bool:
        return self.exceeded_adj

    @property
    def exceeded_laplacian(self) -> bool | None:
        return self.exceeded_lap


def _lift_trial(job) -> TrialRecord:
    G, k, sampler, trial, seed, a_bound, l_bound, method = job
    with threadpool_limits(limits=1):
        spec = get_sampler(sampler)(G, k, seed)
        rep = deviation_report(G, spec, BaseSpectra(G, method), method)
    lap = not rep.laplacian_skipped
    return TrialRecord(
        trial=trial, seed=seed,
        max_new_adj=rep.max_new_adjacency, dev_norm_adj=rep.dev_norm_adjacency,
        adjacency_bound=a_bound, exceeded_adj=bool(rep.max_new_adjacency > a_bound),
        max_new_lap_dev=rep.max_new_laplacian_dev if lap else None,
        dev_norm_lap=rep.dev_norm_laplacian if lap else None,
        laplacian_bound=l_bound if lap else None,
        exceeded_lap=bool(rep.max_new_laplacian_dev > l_bound) if lap else None,
        prop_residual_adj=rep.prop_residual_adjacency,
        prop_residual_lap=rep.prop_residual_laplacian,
    )


def _lift_trials(G: Graph, k: int, sampler: str, trials: int, delta: float, seed: int,
                 workers: int, method: str) -> list[TrialRecord]:
    prof = degrees(G)
    a_bound = adjacency_bound(prof.d_max, G.n, k, delta)
    l_bound = laplacian_bound(prof.d_min, G.n, k, delta) if prof.d_min > 0 else None
    jobs = [(G, k, sampler, t, trial_seed(seed, t), a_bound, l_bound, method) for t in range(trials)]
    return _map_trials(_lift_trial, jobs, workers)


def _fraction(count, total):
    return count / total if total else None


def run_theorem1_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Estimate how often the new eigenvalues of random lifts exceed the single-lift bounds.

    The bounds hold with probability at least ``1 - delta``, so each
    exceedance fraction should come out at most ``delta``.
    """
    config.validate()
    G = config.load_graph()
    config.check_size(G)
    k = int(config.k)
    records = _lift_trials(G, k, config.sampler, config.trials, config.delta,
                           config.master_seed, config.workers, config.method)
    prof = degrees(G)
    n_adj = sum(r.exceeded_adj for r in records)
    lap_records = [r for r in records if r.exceeded_lap is not None]
    n_lap = sum(r.exceeded_lap for r in lap_records)
    resid = max(r.prop_residual_adj for r in records)
    summary = {
        "trials": len(records),
        "n": G.n, "k": k, "m": G.m, "d_min": prof.d_min, "d_max": prof.d_max,
        "delta": config.delta,
        "adjacency_bound": records[0].adjacency_bound,
        "laplacian_bound": records[0].laplacian_bound,
        "exceed_count_adj": n_adj,
        "exceed_fraction_adj": n_adj / len(records),
        "exceed_count_lap": n_lap if lap_records else None,
        "exceed_fraction_lap": _fraction(n_lap, len(lap_records)),
        "max_new_adj_max": max(r.max_new_adj for r in records),
        "max_new_lap_dev_max": max((r.max_new_lap_dev for r in lap_records), default=None),
        "prop_residual_adj_max": resid,
        "prop_residual_lap_max": max((r.prop_residual_lap for r in lap_records), default=None),
        "prop_equality_ok": bool(
            resid <= PROP_EQUALITY_RTOL * max(1, prof.d_max)
            and all(r.prop_residual_lap <= PROP_EQUALITY_RTOL for r in lap_records)
        ),
        "laplacian_skipped": not lap_records,
    }
    return ExperimentResult("theorem1", records, summary, THEOREM1_COLUMNS, asdict(config))


# -- direct vs iterated lifts -------------------------------------------------------

COROLLARY_COLUMNS = (
    "trial", "seed", "diff_norm_adj", "corollary_bound_adj", "exceeded_adj",
    "diff_norm_lap", "corollary_bound_lap", "exceeded_lap",
)


def _corollary_trial(job) -> dict:
    G, ks, trial, seed, b_adj, b_lap, method = job
    k = math.prod(ks)
    with threadpool_limits(limits=1):
        direct = sample_uniform_lift(G, k, derive_seed(seed, 1))
        lifted, induced = iterated_lift(G, ks, derive_seed(seed, 2))
        d_adj = operator_norm(lift_adjacency(direct) - adjacency(lifted.graph), method)
        d_lap = None
        if b_lap is not None:
            d_lap = operator_norm(lift_laplacian(direct) - normalized_laplacian(lifted.graph), method)
    return {
        "trial": trial, "seed": seed,
        "diff_norm_adj": d_adj, "corollary_bound_adj": b_adj, "exceeded_adj": bool(d_adj > b_adj),
        "diff_norm_lap": d_lap, "corollary_bound_lap": b_lap,
        "exceeded_lap": None if d_lap is None else bool(d_lap > b_lap),
    }


def run_corollary_experiment(G: Graph, ks: Sequence[int], trials: int, delta: float, seed: int,
                             workers: int = 1, method: str = "lapack") -> ExperimentResult:
    """Compare a uniform ``k``-lift with an iterated ``k_1 .. k_s``-lift, trial by trial.

    Both lifts use the flattened vertex labelling, so their matrices can be
    subtracted directly.
    """
    ks = [int(x) for x in ks]
    if not ks or any(x < 2 for x in ks):
        raise ConfigError(f"ks must be a nonempty list of integers >= 2, got {ks}")
    if trials < 1 or not 0 < delta < 1:
        raise ConfigError("need trials >= 1 and delta in (0, 1)")
    k = math.prod(ks)
    prof = degrees(G)
    if prof.d_min > 0:
        b_adj, b_lap = corollary_bounds(prof.d_min, prof.d_max, G.n, k, delta)
    else:
        b_adj, b_lap = 32.0 * math.sqrt(prof.d_max * math.log(4 * G.n * k / delta)), None
    jobs = [(G, ks, t, trial_seed(seed, t), b_adj, b_lap, method) for t in range(trials)]
    records = _map_trials(_corollary_trial, jobs, workers)
    n_adj = sum(r["exceeded_adj"] for r in records)
    lap = [r for r in records if r["exceeded_lap"] is not None]
    n_lap = sum(r["exceeded_lap"] for r in lap)
    summary = {
        "trials": trials, "n": G.n, "ks": ks, "k": k, "delta": delta,
        "corollary_bound_adj": b_adj, "corollary_bound_lap": b_lap,
        "exceed_count_adj": n_adj, "exceed_fraction_adj": n_adj / trials,
        "exceed_count_lap": n_lap if lap else None,
        "exceed_fraction_lap": _fraction(n_lap, len(lap)),
        "diff_norm_adj_max": max(r["diff_norm_adj"] for r in records),
        "diff_norm_lap_max": max((r["diff_norm_lap"] for r in lap), default=None),
    }
    config = {"ks": ks, "trials": trials, "delta": delta, "master_seed": seed}
    return ExperimentResult("corollary", records, summary, COROLLARY_COLUMNS, config)


# -- matching marginals ---------------------------------------------------------------

@dataclass
class MarginalReport:
    edge: tuple[int, int]
    k: int
    trials: int
    sampler: str
    frequencies: np.ndarray
    halfwidth: float
    max_deviation: float
    passed: bool

    def rows(self) -> list[dict]:
        k = self.k
        return [
            {"ell": a + 1, "r": b + 1, "frequency": float(self.frequencies[a, b]),
             "expected": 1.0 / k,
             "within": bool(abs(self.frequencies[a, b] - 1.0 / k) <= self.halfwidth)}
            for a in range(k) for b in range(k)
        ]


MARGINAL_COLUMNS = ("ell", "r", "frequency", "expected", "within")


def run_marginal_check(G: Graph, k: int | None, sampler: str, trials: int, seed: int,
                       ks: Sequence[int] | None = None, edge: tuple[int, int] | None = None,
                       sigmas: float = 3.0) -> MarginalReport:
    """Tally how often copy ``l`` of one edge's endpoint is matched to copy ``r``.

    ``sampler`` is ``"uniform"``, ``"cyclic"`` or ``"iterated"``; the last one
    uses the composite matching of :func:`iterated_lift` with orders ``ks``.
    Each frequency passes when it lies within ``sigmas`` binomial standard
    deviations of ``1/k``.
    """
    if not G.edges:
        raise ConfigError("graph has no edges to tally")
    edge = tuple(edge) if edge is not None else G.edges[0]
    if edge not in set(G.edges):
        raise ConfigError(f"edge {edge} is not an edge of the graph (use i < j)")
    if sampler == "iterated":
        if not ks:
            raise ConfigError("iterated sampler needs ks")
        k = math.prod(ks)
        draw = lambda s: iterated_lift(G, ks, s)[1]  # noqa: E731
    else:
        fn = get_sampler(sampler)
        draw = lambda s: fn(G, k, s)  # noqa: E731
    if k is None or k < 1:
        raise ConfigError(f"k must be a positive integer, got {k!r}")
    if trials < 1000:
        warnings.warn(f"{trials} trials give wide binomial intervals; 1000 or more recommended",
                      RuntimeWarning, stacklevel=2)
    counts = np.zeros((k, k), dtype=np.int64)
    rows = np.arange(k)
    for t in range(trials):
        sigma = np.asarray(draw(trial_seed(seed, t)).matchings[edge].sigma) - 1
        counts[rows, sigma] += 1
    freq = counts / trials
    p = 1.0 / k
    half = sigmas * math.sqrt(p * (1 - p) / trials)
    dev = float(np.max(np.abs(freq - p)))
    return MarginalReport(edge, k, trials, sampler, freq, half, dev, bool(dev <= half))


# -- sharpness probe ------------------------------------------------------------------

SHARPNESS_COLUMNS = ("trial", "seed", "max_new_adj", "ratio_sqrt_delta", "ratio_bound")


def run_sharpness_probe(G: Graph, k: int, delta: float, trials: int, seed: int,
                        sampler: str = "uniform", workers: int = 1,
                        method: str = "lapack") -> ExperimentResult:
    """Record ``max |new eigenvalue| / sqrt(Delta)`` and ``/ bound`` per trial.  No verdict is drawn."""
    records = _lift_trials(G, k, sampler, trials, delta, seed, workers, method)
    d_max = degrees(G).d_max
    rows = []
    for r in records:
        rows.append({
            "trial": r.trial, "seed": r.seed, "max_new_adj": r.max_new_adj,
            "ratio_sqrt_delta": r.max_new_adj / math.sqrt(d_max) if d_max > 0 else None,
            "ratio_bound": r.max_new_adj / r.adjacency_bound if r.adjacency_bound > 0 else None,
        })

    def stats(key):
        vals = np.array([x[key] for x in rows if x[key] is not None], dtype=float)
        if not len(vals):
            return None
        return {"min": vals.min(), "median": float(np.median(vals)), "mean": vals.mean(),
                "max": vals.max()}

    summary = {"trials": trials, "n": G.n, "k": k, "d_max": d_max, "delta": delta,
               "ratio_sqrt_delta": stats("ratio_sqrt_delta"), "ratio_bound": stats("ratio_bound")}
    config = {"k": k, "trials": trials, "delta": delta, "master_seed": seed, "sampler": sampler}
    return ExperimentResult("sharpness", rows, summary, SHARPNESS_COLUMNS, config)


# -- Markov chain lifts ---------------------------------------------------------------

MARKOV_COLUMNS = ("trial", "seed", "max_new_abs", "chain_bound", "exceeded", "n_new",
                  "detailed_balance_residual")


def _markov_trial(job) -> dict:
    chain, k, sampler, trial, seed, bound, method = job
    with threadpool_limits(limits=1):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            lifted = lift_chain(chain, k, seed, sampler)
        new = chain_new_eigenvalues(chain, lifted, method)
    flow = lifted.pi[:, None] * lifted.P
    m = new.max_abs()
    return {"trial": trial, "seed": seed, "max_new_abs": m, "chain_bound": bound,
            "exceeded": bool(m > bound), "n_new": len(new),
            "detailed_balance_residual": float(np.max(np.abs(flow - flow.T)))}


def run_markov_experiment(chain: ReversibleChain, k: int, trials: int, delta: float, seed: int,
                          sampler: str = "uniform", workers: int = 1,
                          method: str = "lapack") -> ExperimentResult:
    if trials < 1 or not 0 < delta < 1 or k < 1:
        raise ConfigError("need k >= 1, trials >= 1 and delta in (0, 1)")
    cP = c_param(chain)
    bound = chain_bound(cP, chain.n, k, delta)
    jobs = [(chain, k, sampler, t, trial_seed(seed, t), bound, method) for t in range(trials)]
    records = _map_trials(_markov_trial, jobs, workers)
    n_exc = sum(r["exceeded"] for r in records)
    summary = {"trials": trials, "n": chain.n, "k": k, "delta": delta, "c_P": cP,
               "c_P_upper": float(chain.P.max()),
               "chain_bound": bound, "exceed_count": n_exc, "exceed_fraction": n_exc / trials,
               "max_new_abs_max": max(r["max_new_abs"] for r in records),
               "detailed_balance_residual_max": max(r["detailed_balance_residual"] for r in records)}
    config = {"k": k, "trials": trials, "delta": delta, "master_seed": seed, "sampler": sampler}
    return ExperimentResult("markov", records, summary, MARKOV_COLUMNS, config)
