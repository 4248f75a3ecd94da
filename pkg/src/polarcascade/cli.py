"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 data error
(malformed or unreadable input files).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import __version__
from .agents import EnsembleConfig, init_choices, run, run_ensemble
from .config import (ConfigError, ConfigFileError, RunConfig, default_outdir,
                     load_config, resolve, write_meta)
from .graphs import (NetworkFormatError, build_network, edge_counts, homophily_estimate,
                     load_network, save_network)
from .meanfield import IntegrationConfig, find_stationary, integrate, sup_distance
from .model import (ModelParams, ParamError, PopulationState, Regime, classify_regime,
                    consensus_reachable, effective_couplings, predict_limit_symmetric)
from .seeds import derive_seed
from .svg import heatmap, trajectory_plot
from .sweeps import (Axis, SweepSpec, group_sizes, homophily_scan, list_scenarios,
                     phase_sweep, regime_transitions, scenario_suite)
from .trajectory import TrajectoryFormatError, format_float, load_trajectory, save_trajectory


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _dump(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), sort_keys=True)


# -- argument parsing -------------------------------------------------------

def _model_flags(p):
    S = argparse.SUPPRESS
    p.add_argument("--alpha", type=float, default=S, help="in-group love, [0,1]")
    p.add_argument("--beta", type=float, default=S, help="out-group hate, [0,1]")
    p.add_argument("--delta", type=float, default=S, help="inertia threshold, [0,1]")
    p.add_argument("--r", "--red-fraction", dest="red_fraction", type=float, default=S,
                   help="fraction of red nodes, (0,1)")
    p.add_argument("--rho", dest="homophily", type=float, default=S,
                   help="homophily, (0,1); implies --topology sbm unless given")
    p.add_argument("--topology", choices=["complete", "sbm"], default=S)


def _common(p, out=True):
    p.add_argument("--config", default=argparse.SUPPRESS,
                   help="JSON config or an emitted meta.json; flags override it")
    if out:
        p.add_argument("--out", default=argparse.SUPPRESS,
                       help="output directory (default $POLARCASCADE_OUTDIR/<command>)")


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = _Parser(prog="polarcascade", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="agent-based run -> trajectory CSV")
    _model_flags(p)
    _common(p)
    p.add_argument("--theta0", type=float, nargs="+", default=S, metavar="THETA")
    p.add_argument("--n", type=int, default=S, help="total nodes (split by --r)")
    p.add_argument("--n-blue", dest="n_blue", type=int, default=S)
    p.add_argument("--n-red", dest="n_red", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--graph-seed", dest="graph_seed", type=int, default=S)
    p.add_argument("--init", dest="init_mode", choices=["quota", "bernoulli"], default=S)
    p.add_argument("--horizon", dest="horizon_t", type=float, default=S)
    p.add_argument("--record-stride", dest="record_stride", type=int, default=S)
    p.add_argument("--reps", type=int, default=S, help="ensemble size (>1 writes an envelope)")
    p.add_argument("--jobs", type=int, default=S)
    p.add_argument("--edges", default=S, help="edge-list file (with --parties)")
    p.add_argument("--parties", default=S, help="party file (with --edges)")

    p = sub.add_parser("integrate", help="mean-field run -> trajectory CSV")
    _model_flags(p)
    _common(p)
    p.add_argument("--theta0", type=float, nargs="+", default=S, metavar="THETA")
    p.add_argument("--step-h", dest="step_h", type=float, default=S)
    p.add_argument("--horizon", dest="horizon_t", type=float, default=S)
    p.add_argument("--record-stride", dest="record_stride", type=int, default=S)

    for name, help_ in (("classify", "regime and predicted limit as JSON"),
                        ("consensus-check", "consensus verdict for a two-group start")):
        p = sub.add_parser(name, help=help_)
        _model_flags(p)
        _common(p)
        p.add_argument("--theta0", type=float, nargs="+", default=S, metavar="THETA")
        p.add_argument("--tol", type=float, default=S)

    p = sub.add_parser("sweep", help="phase-diagram sweeps and homophily scans")
    _model_flags(p)
    _common(p)
    p.add_argument("--kind", choices=["phase", "homophily"], default=S)
    p.add_argument("--axis", dest="axes", action="append", default=S,
                   metavar="NAME:LO:HI:STEPS")
    p.add_argument("--mode", choices=["classify", "integrate", "simulate"], default=S)
    p.add_argument("--rho-values", dest="rho_values", type=float, nargs="+", default=S)
    p.add_argument("--theta0", type=float, nargs="+", default=S, metavar="THETA")
    p.add_argument("--n", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--horizon", dest="horizon_t", type=float, default=S)
    p.add_argument("--step-h", dest="step_h", type=float, default=S)
    p.add_argument("--tol", type=float, default=S)
    p.add_argument("--jobs", type=int, default=S)

    p = sub.add_parser("scenario", help="named scenario suites")
    _common(p)
    p.add_argument("name", nargs="?", default=S)
    p.add_argument("--list", action="store_true", help="list scenario names")
    p.add_argument("--no-stochastic", dest="stochastic", action="store_false", default=S)
    p.add_argument("--n", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)

    p = sub.add_parser("compare", help="sup-distance between two trajectory CSVs")
    _common(p, out=False)
    p.add_argument("a", nargs="?", default=S)
    p.add_argument("b", nargs="?", default=S)

    p = sub.add_parser("gen-graph", help="generate a network and write it to files")
    _common(p)
    p.add_argument("--kind", choices=["complete", "sbm"], default=S)
    p.add_argument("--n-blue", dest="n_blue", type=int, default=S)
    p.add_argument("--n-red", dest="n_red", type=int, default=S)
    p.add_argument("--rho", dest="homophily", type=float, default=S)
    p.add_argument("--seed", type=int, default=S)

    p = sub.add_parser("inspect-graph", help="summary statistics of a network file pair")
    _common(p, out=False)
    p.add_argument("--edges", default=S, required=False)
    p.add_argument("--parties", default=S, required=False)
    return parser


def _resolve_args(ns: argparse.Namespace) -> tuple[RunConfig, Path | None]:
    flags = {k: v for k, v in vars(ns).items()
             if k not in ("command", "config", "out", "list")}
    file_values = {}
    if "config" in ns:
        command, file_values = load_config(ns.config)
        if command is not None and command != ns.command:
            raise ConfigError("command", f"config is for {command!r}, not {ns.command!r}")
    if "homophily" in flags and "topology" not in flags and "topology" not in file_values \
            and ns.command not in ("gen-graph",):
        flags["topology"] = "sbm"
    cfg = resolve(ns.command, file_values, flags)
    out = Path(ns.out) if "out" in ns else None
    return cfg, out


def _params(cfg: RunConfig) -> ModelParams:
    try:
        return ModelParams(cfg["alpha"], cfg["beta"], cfg["delta"], cfg["red_fraction"],
                           cfg["homophily"], cfg["topology"])
    except ParamError as exc:
        raise ConfigError(exc.field, f"{exc.value!r} outside legal range {exc.legal}")


def _outdir(cfg: RunConfig, out: Path | None) -> Path:
    d = out if out is not None else default_outdir(cfg.command)
    d.mkdir(parents=True, exist_ok=True)
    return d


# -- commands ---------------------------------------------------------------

def cmd_simulate(cfg: RunConfig, out):
    params = _params(cfg)
    theta0 = PopulationState(*cfg["theta0"])
    seed = cfg["seed"]
    if (cfg["edges"] is None) != (cfg["parties"] is None):
        raise ConfigError("edges", "--edges and --parties must be given together")
    derived = {}
    if cfg["edges"] is not None:
        net = load_network(cfg["edges"], cfg["parties"])
        params = params.replace(red_fraction=net.red_fraction)
        topology, n_blue, n_red, graph_seed = "file", net.n_blue, net.n_red, None
    else:
        if cfg["n_blue"] is not None or cfg["n_red"] is not None:
            if cfg["n_blue"] is None or cfg["n_red"] is None:
                raise ConfigError("n_blue", "give both n_blue and n_red")
            n_blue, n_red = cfg["n_blue"], cfg["n_red"]
            if n_blue + n_red < 2:
                raise ConfigError("n_blue", "n_blue + n_red must be >= 2")
        else:
            n_blue, n_red = group_sizes(cfg["n"], params.red_fraction)
        topology = params.topology.value
        graph_seed = cfg["graph_seed"]
        if graph_seed is None:
            graph_seed = derive_seed(seed, "graph")
            derived["graph_seed"] = graph_seed
        net = None
    d = _outdir(cfg, out)
    if cfg["reps"] > 1:
        if net is not None:
            raise ConfigError("reps", "ensembles need a generated topology")
        ecfg = EnsembleConfig(params, n_blue, n_red, theta0, cfg["horizon_t"],
                              cfg["record_stride"], cfg["init_mode"], topology, graph_seed)
        env = run_ensemble(ecfg, cfg["reps"], seed_base=seed, jobs=cfg["jobs"])
        with (d / "ensemble.csv").open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "mean_b", "mean_r", "std_b", "std_r"])
            for t, m, s in zip(env.t, env.mean, env.std):
                w.writerow([format_float(x) for x in (t, m[0], m[1], s[0], s[1])])
        with (d / "endpoints.csv").open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rep", "seed", "theta_b", "theta_r"])
            for i, (s, e) in enumerate(zip(env.seeds, env.endpoints)):
                w.writerow([i, s, format_float(e[0]), format_float(e[1])])
        derived["ensemble_seeds"] = env.seeds
        write_meta(d, cfg, {"derived_seeds": derived})
        return {"out": str(d), "reps": cfg["reps"],
                "final_mean": [float(x) for x in env.mean[-1]]}
    if net is None:
        net = build_network(topology, n_blue, n_red, params.homophily, graph_seed)
    sim = init_choices(net, theta0, params, cfg["init_mode"], seed)
    traj = run(sim, cfg["horizon_t"], cfg["record_stride"])
    traj.meta.update({"topology": topology, "graph_seed": graph_seed,
                      "init_mode": cfg["init_mode"], "theta0": list(cfg["theta0"])})
    save_trajectory(traj, d / "trajectory.csv")
    trajectory_plot({"stochastic": traj}, d / "trajectory.svg",
                    title=f"agent run, N={net.n}")
    write_meta(d, cfg, {"derived_seeds": derived})
    return {"out": str(d), "final": [float(x) for x in traj.theta[-1]], "n": net.n}


def cmd_integrate(cfg: RunConfig, out):
    params = _params(cfg)
    icfg = IntegrationConfig(step_h=cfg["step_h"], horizon_t=cfg["horizon_t"],
                             record_stride=cfg["record_stride"] or 10)
    traj = integrate(PopulationState(*cfg["theta0"]), params, icfg)
    rep = find_stationary(traj, icfg)
    d = _outdir(cfg, out)
    save_trajectory(traj, d / "trajectory.csv")
    trajectory_plot({"mean-field": traj}, d / "trajectory.svg", title="mean-field run")
    write_meta(d, cfg)
    return {"out": str(d), "final": [float(x) for x in traj.theta[-1]],
            "stationary_at": rep.reached_at}


def _require_zero_inertia(params):
    if params.delta != 0.0:
        raise ConfigError("delta", "classifier requires zero inertia (delta=0)")


def cmd_classify(cfg: RunConfig, out):
    params = _params(cfg)
    _require_zero_inertia(params)
    regime = classify_regime(params, cfg["tol"])
    c = effective_couplings(params)
    tb, tr = cfg["theta0"]
    limit = None
    if tb == tr and tb != 0.5 and regime is not Regime.BOUNDARY:
        lim = predict_limit_symmetric(tb, params, cfg["tol"])
        limit = [lim.theta_b, lim.theta_r]
    return {"regime": regime.value, "alpha_eff": c.alpha_eff, "beta_eff": c.beta_eff,
            "theta0": [tb, tr], "predicted_limit": limit}


def cmd_consensus(cfg: RunConfig, out):
    params = _params(cfg)
    _require_zero_inertia(params)
    theta0 = PopulationState(*cfg["theta0"])
    try:
        verdict = consensus_reachable(theta0, params, cfg["tol"])
    except ValueError as exc:
        raise ConfigError("theta0", str(exc))
    return {"consensus": verdict, "regime": classify_regime(params, cfg["tol"]).value,
            "theta0": list(cfg["theta0"])}


def cmd_sweep(cfg: RunConfig, out):
    d = _outdir(cfg, out)
    params = _params(cfg)
    if cfg["kind"] == "homophily":
        mode = cfg["mode"]
        theta0 = PopulationState(*cfg["theta0"])
        icfg = IntegrationConfig(step_h=cfg["step_h"], horizon_t=cfg["horizon_t"])
        points = homophily_scan(params, cfg["rho_values"], theta0, mode, n=cfg["n"],
                                seed=cfg["seed"], cfg=icfg)
        with (d / "scan.csv").open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rho", "regime", "endpoint_b", "endpoint_r", "error"])
            for p in points:
                e = p.endpoint or ("", "")
                w.writerow([format_float(p.rho), p.regime or "",
                            *(format_float(x) if x != "" else "" for x in e), p.error or ""])
        write_meta(d, cfg)
        return {"out": str(d), "transitions": regime_transitions(points)}
    if cfg["kind"] != "phase":
        raise ConfigError("kind", f"{cfg['kind']!r} not one of phase, homophily")
    if not cfg["axes"]:
        raise ConfigError("axes", "give one or two --axis NAME:LO:HI:STEPS")
    try:
        axes = tuple(Axis.parse(a) for a in cfg["axes"])
        fixed = {k: cfg[k] for k in ("alpha", "beta", "delta", "red_fraction",
                                     "homophily", "topology")}
        fixed["theta0_b"], fixed["theta0_r"] = cfg["theta0"]
        spec = SweepSpec(axes, fixed, cfg["mode"], n=cfg["n"], seed=cfg["seed"],
                         horizon_t=cfg["horizon_t"], step_h=cfg["step_h"], tol=cfg["tol"])
    except ValueError as exc:
        raise ConfigError("axes", str(exc))
    result = phase_sweep(spec, jobs=cfg["jobs"])
    names = [a.name for a in spec.axes]
    with (d / "sweep.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*names, "regime", "endpoint_b", "endpoint_r", "seed", "error"])
        for c in result.cells:
            e = c.endpoint or ("", "")
            w.writerow([*(format_float(c.values[n]) for n in names), c.regime or "",
                        *(format_float(x) if x != "" else "" for x in e),
                        "" if c.seed is None else c.seed, c.error or ""])
    if len(spec.axes) == 2:
        heatmap(result.regime_grid(), spec.axes[0].values, spec.axes[1].values,
                d / "heatmap.svg", title="regimes", xlabel=names[0], ylabel=names[1])
    counts = {}
    for c in result.cells:
        counts[c.regime or "failed"] = counts.get(c.regime or "failed", 0) + 1
    write_meta(d, cfg, {"grid_shape": list(spec.shape)})
    return {"out": str(d), "cells": len(result.cells), "regime_counts": counts,
            "failures": len(result.failures())}


def cmd_scenario(cfg: RunConfig, out):
    if cfg["name"] is None:
        raise ConfigError("name", "scenario name required; known: " + ", ".join(list_scenarios()))
    try:
        bundle = scenario_suite(cfg["name"], stochastic=cfg["stochastic"], n=cfg["n"],
                                seed=cfg["seed"])
    except ValueError as exc:
        raise ConfigError("name", str(exc))
    d = _outdir(cfg, out)
    summary = []
    for run_ in bundle.runs:
        save_trajectory(run_.mean_field, d / f"{run_.label}_mean_field.csv")
        trajs = {"mean-field": run_.mean_field}
        entry = {"label": run_.label, "mean_field_final": list(map(float, run_.mean_field.theta[-1]))}
        if run_.stochastic is not None:
            save_trajectory(run_.stochastic, d / f"{run_.label}_stochastic.csv")
            trajs["stochastic"] = run_.stochastic
            entry["stochastic_final"] = list(map(float, run_.stochastic.theta[-1]))
        trajectory_plot(trajs, d / f"{run_.label}.svg", title=f"{bundle.name}: {run_.label}")
        summary.append(entry)
    write_meta(d, cfg, {"scenario": bundle.definition})
    return {"out": str(d), "runs": summary}


def cmd_compare(cfg: RunConfig, out):
    if cfg["a"] is None or cfg["b"] is None:
        raise ConfigError("a", "compare needs two trajectory files")
    a, b = load_trajectory(cfg["a"]), load_trajectory(cfg["b"])
    try:
        return sup_distance(a, b)
    except ValueError as exc:
        raise DataError(str(exc))


def cmd_gen_graph(cfg: RunConfig, out):
    kind = cfg["kind"]
    if kind not in ("complete", "sbm"):
        raise ConfigError("kind", f"{kind!r} not one of complete, sbm")
    n_blue, n_red = cfg["n_blue"], cfg["n_red"]
    if n_blue is None or n_red is None or n_blue + n_red < 2:
        raise ConfigError("n_blue", "need n_blue + n_red >= 2")
    net = build_network(kind, n_blue, n_red, cfg["homophily"], cfg["seed"])
    d = _outdir(cfg, out)
    save_network(net, d / "edges.txt", d / "parties.txt")
    write_meta(d, cfg)
    return {"out": str(d), "n": net.n, "edges": net.n_edges}


def cmd_inspect(cfg: RunConfig, out):
    if cfg["edges"] is None or cfg["parties"] is None:
        raise ConfigError("edges", "--edges and --parties are required")
    net = load_network(cfg["edges"], cfg["parties"])
    same, cross = edge_counts(net)
    deg = net.degree
    try:
        rho = homophily_estimate(net)
    except ValueError:
        rho = None
    return {"n": net.n, "n_blue": net.n_blue, "n_red": net.n_red, "edges": net.n_edges,
            "same_party_edges": same, "cross_party_edges": cross, "complete": net.complete,
            "degree_min": int(deg.min()), "degree_mean": float(deg.mean()),
            "degree_max": int(deg.max()), "isolated": int((deg == 0).sum()),
            "homophily_estimate": rho}


COMMANDS = {
    "simulate": cmd_simulate, "integrate": cmd_integrate, "classify": cmd_classify,
    "consensus-check": cmd_consensus, "sweep": cmd_sweep, "scenario": cmd_scenario,
    "compare": cmd_compare, "gen-graph": cmd_gen_graph, "inspect-graph": cmd_inspect,
}


def cli_dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if ns.command == "scenario" and getattr(ns, "list", False):
        print("\n".join(list_scenarios()))
        return 0
    try:
        cfg, out = _resolve_args(ns)
        result = COMMANDS[ns.command](cfg, out)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"polarcascade {ns.command}: error: {exc}", file=sys.stderr)
        return 1
    except (ConfigFileError, NetworkFormatError, TrajectoryFormatError, DataError) as exc:
        print(f"polarcascade {ns.command}: data error: {exc}", file=sys.stderr)
        return 2
    if isinstance(result, float):
        print(repr(result))
    else:
        print(_dump(result))
    return 0


def main():
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
