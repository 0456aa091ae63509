"""Command-line interface.

Every subcommand takes its settings from flags, from a JSON file given with
``--config`` (keys named like :class:`~randlift.experiments.ExperimentConfig`
fields), or both, with flags taking precedence.  With ``--out PREFIX`` the
results are written to ``PREFIX.csv`` and ``PREFIX.json``.  A one-line
summary always goes to stdout.

Exit status: 0 on success, 1 on bad input or configuration, 2 when a
numerical check fails.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .errors import ConfigError, EigenFailure, RandLiftError, SpectrumContainmentViolated
from .experiments import (
    MARGINAL_COLUMNS,
    ExperimentConfig,
    _write_text,
    dumps_json,
    format_value,
    records_to_csv,
    run_corollary_experiment,
    run_marginal_check,
    run_markov_experiment,
    run_sharpness_probe,
    run_theorem1_experiment,
)
from .graph import adjacency, format_graph, normalized_laplacian
from .lift import (
    format_lift_spec,
    get_sampler,
    iterated_lift,
    lifted_edge_arrays,
    read_lift_spec,
    realize,
)
from .linalg import sym_eigenvalues
from .markov import random_walk, read_chain
from .spectral import analyze

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_common(p, *, k=True, ks=False, trials=False, sampler=True, delta=True):
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    src = p.add_argument_group("graph source")
    src.add_argument("--graph", help="generator spec, e.g. complete:20, cycle:8, "
                                     "disjoint_cliques:2,3, erdos_renyi:10,0.4")
    src.add_argument("--graph-file", dest="graph_file", help="graph in 'n m' + edge-lines format")
    src.add_argument("--graph-seed", dest="graph_seed", type=int, help="seed for random generators")
    if k:
        p.add_argument("--k", type=int, help="lift order")
    if ks:
        p.add_argument("--ks", type=_int_list, help="stage orders for an iterated lift, e.g. 2,2,2")
    if sampler:
        p.add_argument("--sampler", choices=["uniform", "cyclic"], help="matching distribution")
    if trials:
        p.add_argument("--trials", type=int)
        p.add_argument("--workers", type=int, help="worker processes for trials")
    if delta:
        p.add_argument("--delta", type=float, help="failure probability (default 0.05)")
    p.add_argument("--seed", dest="master_seed", type=int, help="master seed")
    p.add_argument("--out", help="output prefix; writes PREFIX.csv and PREFIX.json")
    p.add_argument("--allow-large", dest="allow_large", action="store_true", default=None,
                   help="permit lifts with more than 20000 vertices")
    p.add_argument("--method", choices=["lapack", "householder"], help="eigensolver backend")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="randlift", description="Random graph lifts and their new eigenvalues.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("lift", help="sample a lift and write its matchings and edge list")
    _add_common(p, ks=True, delta=False)

    p = sub.add_parser("spectrum", help="print the adjacency and Laplacian spectra of a graph")
    _add_common(p, k=False, sampler=False, delta=False)

    p = sub.add_parser("analyze", help="new eigenvalues, deviation norms and bounds for one lift")
    _add_common(p)
    p.add_argument("--lift-file", dest="lift_file", help="use the matchings in this lift file")

    p = sub.add_parser("theorem1", help="Monte Carlo exceedance of the single-lift bounds")
    _add_common(p, trials=True)

    p = sub.add_parser("corollary", help="direct versus iterated lifts")
    _add_common(p, k=False, ks=True, trials=True, sampler=False)

    p = sub.add_parser("markov", help="random lifts of a reversible Markov chain")
    _add_common(p, trials=True)
    p.add_argument("--chain-file", dest="chain_file",
                   help="chain file; without it the simple random walk on --graph is used")

    p = sub.add_parser("marginals", help="empirical matching marginals against 1/k")
    _add_common(p, ks=True, trials=True, delta=False)
    p.add_argument("--iterated", action="store_true", help="tally the composite matching of --ks stages")
    p.add_argument("--edge", type=_int_list, help="base edge to tally, as i,j (default: first edge)")

    p = sub.add_parser("sharpness", help="ratios of the largest new eigenvalue to sqrt(Delta) and the bound")
    _add_common(p, trials=True)
    return ap


_CONFIG_KEYS = {"graph", "graph_file", "graph_seed", "k", "ks", "sampler", "trials", "delta",
                "master_seed", "workers", "allow_large", "method"}


def _config(args) -> ExperimentConfig:
    data = {}
    if args.config:
        data = _read_config(args.config)
    for key in _CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    if getattr(args, "graph", None) is not None and getattr(args, "graph_file", None) is None:
        data.pop("graph_file", None)
    if getattr(args, "graph_file", None) is not None and getattr(args, "graph", None) is None:
        data.pop("graph", None)
    out = getattr(args, "out", None)
    if out:
        data["csv"], data["json"] = f"{out}.csv", f"{out}.json"
    return ExperimentConfig.from_dict(data)


def _read_config(path) -> dict:
    cfg = ExperimentConfig.from_json(path)
    defaults = asdict(ExperimentConfig())
    return {k: v for k, v in asdict(cfg).items() if v != defaults[k]}


def _emit(cfg: ExperimentConfig, csv_text: str | None, json_text: str | None):
    if cfg.csv and csv_text is not None:
        _write_text(cfg.csv, csv_text)
    if cfg.json and json_text is not None:
        _write_text(cfg.json, json_text)


# -- subcommands ------------------------------------------------------------------------

def _cmd_lift(args) -> int:
    cfg = _config(args)
    G = cfg.load_graph()
    cfg.check_size(G)
    if cfg.ks:
        if any(x < 2 for x in cfg.ks):
            raise ConfigError(f"stage orders must be >= 2, got {cfg.ks}")
        _, spec = iterated_lift(G, cfg.ks, cfg.master_seed)
    else:
        cfg.validate()
        spec = get_sampler(cfg.sampler)(G, int(cfg.k), cfg.master_seed)
    u, v = lifted_edge_arrays(spec)
    order = np.lexsort((v, u))
    rows = [{"u": int(u[i]) + 1, "v": int(v[i]) + 1} for i in order]
    lift_text = format_lift_spec(spec)
    if args.out:
        _write_text(f"{args.out}.lift", lift_text)
        _write_text(f"{args.out}.graph", format_graph(realize(spec).graph))
    else:
        sys.stdout.write(lift_text)
    _emit(cfg, records_to_csv(rows, ("u", "v")), dumps_json({
        "n": G.n, "m": G.m, "k": spec.k, "ks": cfg.ks, "sampler": "iterated" if cfg.ks else cfg.sampler,
        "master_seed": cfg.master_seed,
        "matchings": [{"edge": list(e), "sigma": list(spec.matchings[e].sigma)} for e in G.edges],
    }))
    print(f"lift: n={G.n} m={G.m} k={spec.k} -> {G.n * spec.k} vertices, {G.m * spec.k} edges")
    return EXIT_OK


def _cmd_spectrum(args) -> int:
    cfg = _config(args)
    if (cfg.graph is None) == (cfg.graph_file is None):
        raise ConfigError("give exactly one of --graph or --graph-file")
    G = cfg.load_graph()
    if G.n > 20000 and not cfg.allow_large:
        raise ConfigError(f"{G.n} vertices exceeds the dense limit; pass --allow-large")
    sa = sym_eigenvalues(adjacency(G), cfg.method).values
    sl = sym_eigenvalues(normalized_laplacian(G), cfg.method).values
    print("adjacency:", " ".join(format_value(x) for x in sa))
    print("laplacian:", " ".join(format_value(x) for x in sl))
    rows = [{"index": i + 1, "adjacency": a, "laplacian": b} for i, (a, b) in enumerate(zip(sa, sl))]
    _emit(cfg, records_to_csv(rows, ("index", "adjacency", "laplacian")),
          dumps_json({"n": G.n, "m": G.m, "adjacency": sa, "laplacian": sl}))
    return EXIT_OK


def _cmd_analyze(args) -> int:
    cfg = _config(args)
    if args.lift_file:
        spec = read_lift_spec(args.lift_file)
        G = spec.base
        if cfg.graph is not None or cfg.graph_file is not None:
            given = cfg.load_graph()
            if given != G:
                raise ConfigError("lift file base graph differs from the given graph")
    else:
        cfg.validate()
        G = cfg.load_graph()
        spec = get_sampler(cfg.sampler)(G, int(cfg.k), cfg.master_seed)
    if G.n * spec.k > 20000 and not cfg.allow_large:
        raise ConfigError(f"lift has {G.n * spec.k} vertices (> 20000); pass --allow-large")
    dev, bounds = analyze(G, spec, cfg.delta, cfg.method)
    flat = {**bounds.to_dict(), **_flatten(dev.to_dict()), "sampler": cfg.sampler,
            "master_seed": cfg.master_seed}
    text = dumps_json(flat)
    sys.stdout.write(text)
    rows = [{"kind": "adjacency", "value": x} for x in dev.new_eigs_adjacency]
    if dev.new_eigs_laplacian is not None:
        rows += [{"kind": "laplacian", "value": x} for x in dev.new_eigs_laplacian]
    _emit(cfg, records_to_csv(rows, ("kind", "value")), text)
    lap = "skipped" if dev.laplacian_skipped else format_value(dev.dev_norm_laplacian)
    print(f"analyze: dev_norm_adjacency={format_value(dev.dev_norm_adjacency)} "
          f"dev_norm_laplacian={lap} prop_equality_ok={dev.prop_equality_ok}")
    return EXIT_OK if dev.prop_equality_ok else EXIT_NUMERIC


def _flatten(d: dict) -> dict:
    out = {}
    for key, val in d.items():
        if isinstance(val, dict):
            for sub, v in val.items():
                out[f"{key}_{sub}"] = v
        else:
            out[key] = val
    return out


def _cmd_theorem1(args) -> int:
    cfg = _config(args)
    res = run_theorem1_experiment(cfg)
    _emit(cfg, res.to_csv(), res.to_json())
    s = res.summary
    lap = "n/a" if s["exceed_fraction_lap"] is None else format_value(s["exceed_fraction_lap"])
    print(f"theorem1: trials={s['trials']} exceed_adj={s['exceed_fraction_adj']} "
          f"exceed_lap={lap} delta={cfg.delta} prop_equality_ok={s['prop_equality_ok']}")
    return EXIT_OK if s["prop_equality_ok"] else EXIT_NUMERIC


def _cmd_corollary(args) -> int:
    cfg = _config(args)
    cfg.validate(need_ks=True)
    G = cfg.load_graph()
    cfg.check_size(G)
    res = run_corollary_experiment(G, cfg.ks, cfg.trials, cfg.delta, cfg.master_seed,
                                   cfg.workers, cfg.method)
    _emit(cfg, res.to_csv(), res.to_json())
    s = res.summary
    print(f"corollary: trials={s['trials']} k={s['k']} exceed_adj={s['exceed_fraction_adj']} "
          f"exceed_lap={s['exceed_fraction_lap']} delta={cfg.delta}")
    return EXIT_OK


def _cmd_markov(args) -> int:
    cfg = _config(args)
    if args.chain_file:
        try:
            chain = read_chain(args.chain_file)
        except OSError as exc:
            raise ConfigError(f"cannot read chain file: {exc}") from exc
        if cfg.graph is not None or cfg.graph_file is not None:
            raise ConfigError("give either --chain-file or a graph, not both")
    else:
        chain = random_walk(cfg.load_graph())
    if cfg.k is None or cfg.k < 1:
        raise ConfigError("k must be a positive integer")
    if chain.n * cfg.k > 20000 and not cfg.allow_large:
        raise ConfigError(f"lift has {chain.n * cfg.k} states (> 20000); pass --allow-large")
    res = run_markov_experiment(chain, int(cfg.k), cfg.trials, cfg.delta, cfg.master_seed,
                                cfg.sampler, cfg.workers, cfg.method)
    _emit(cfg, res.to_csv(), res.to_json())
    s = res.summary
    print(f"markov: trials={s['trials']} c_P={format_value(s['c_P'])} "
          f"bound={format_value(s['chain_bound'])} exceed={s['exceed_fraction']}")
    return EXIT_OK


def _cmd_marginals(args) -> int:
    cfg = _config(args)
    G = cfg.load_graph()
    edge = tuple(args.edge) if args.edge else None
    if args.iterated:
        rep = run_marginal_check(G, None, "iterated", cfg.trials, cfg.master_seed, ks=cfg.ks, edge=edge)
    else:
        rep = run_marginal_check(G, cfg.k, cfg.sampler, cfg.trials, cfg.master_seed, edge=edge)
    rows = rep.rows()
    _emit(cfg, records_to_csv(rows, MARGINAL_COLUMNS), dumps_json({
        "edge": list(rep.edge), "k": rep.k, "trials": rep.trials, "sampler": rep.sampler,
        "halfwidth": rep.halfwidth, "max_deviation": rep.max_deviation, "passed": rep.passed,
        "frequencies": rep.frequencies,
    }))
    print(f"marginals: sampler={rep.sampler} k={rep.k} trials={rep.trials} "
          f"max_dev={format_value(rep.max_deviation)} halfwidth={format_value(rep.halfwidth)} "
          f"passed={rep.passed}")
    return EXIT_OK


def _cmd_sharpness(args) -> int:
    cfg = _config(args)
    cfg.validate()
    G = cfg.load_graph()
    cfg.check_size(G)
    res = run_sharpness_probe(G, int(cfg.k), cfg.delta, cfg.trials, cfg.master_seed,
                              cfg.sampler, cfg.workers, cfg.method)
    _emit(cfg, res.to_csv(), res.to_json())
    r = res.summary["ratio_sqrt_delta"]
    med = "n/a" if r is None else format_value(r["median"])
    print(f"sharpness: trials={cfg.trials} median max_new/sqrt(Delta)={med}")
    return EXIT_OK


COMMANDS = {
    "lift": _cmd_lift, "spectrum": _cmd_spectrum, "analyze": _cmd_analyze,
    "theorem1": _cmd_theorem1, "corollary": _cmd_corollary, "markov": _cmd_markov,
    "marginals": _cmd_marginals, "sharpness": _cmd_sharpness,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (EigenFailure, SpectrumContainmentViolated) as exc:
        print(f"randlift {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except RandLiftError as exc:
        # bad graphs, lift files, chains, parameters or configuration
        print(f"randlift {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
