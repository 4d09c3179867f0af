"""Command-line front door for the attack pipeline.

Every subcommand is a thin adapter over the library. Flag resolution order:
built-in defaults < --config file values < explicit flags. Exit codes:
0 success, 2 configuration/usage error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .embedding import EmbeddingSet, Role, Threshold, coverage
from .errors import ConfigError, MatchDodgeError
from .fitness import DEFAULT_THRESHOLD, FitnessParams
from .io_formats import (
    MetricRow,
    RunReport,
    read_embedding_set,
    read_image_tensor,
    read_pair_list,
    write_embedding_set,
    write_image_tensor,
    write_report,
)
from .lmmaes import EsConfig
from .mapper import ImageTensor, ToyMapper
from .phase1 import SearchConfig, search
from .phase2 import InversionConfig, generate_attack_face, identity_cropper
from .scenarios import (
    SCENARIO_KINDS,
    SWEEP_AXES,
    ScenarioConfig,
    SweepSpec,
    SynthSpec,
    calibrate_threshold,
    config_echo,
    run_scenario,
    run_sweep,
    synth_dataset,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

S = argparse.SUPPRESS

DEFAULTS: dict[str, dict] = {
    "synth": {"clusters": 1, "radius": 0.3, "count": 10, "dim": 64, "seed": 0,
              "role": "match", "min_center_distance": None},
    "calibrate": {"far": 0.001, "out": None},
    "search": {"dodge": "empty", "clusters": 1, "seed": 0, "generations": 1000,
               "population": 100, "sigma0": 0.3, "th1": DEFAULT_THRESHOLD,
               "th2": DEFAULT_THRESHOLD, "alpha": 0.99, "beta": 0.99,
               "gamma": 0.9, "threads": 1, "out": None, "report": None},
    "invert": {"index": 0, "epsilon": 0.1, "iterations": 1000, "lr": 0.01,
               "mapper": None, "mapper_seed": 0, "side": 16, "hidden": 256,
               "seed": 0, "out": None, "report": None},
    "evaluate": {"th": DEFAULT_THRESHOLD, "report": None},
    "scenario": {"kind": "multi_impersonation", "match_size": 10,
                 "dodge_size": 0, "dim": 64, "repetitions": 1, "seed": 0,
                 "clusters": 1, "planted_clusters": 1, "radius": 0.3,
                 "dodge_inside_match": False, "generations": 1000,
                 "population": 100, "sigma0": 0.3, "th1": DEFAULT_THRESHOLD,
                 "th2": DEFAULT_THRESHOLD, "alpha": 0.99, "beta": 0.99,
                 "gamma": 0.9, "phase2": False, "epsilon": 0.1,
                 "iterations": 1000, "match_file": None, "dodge_file": None,
                 "threads": 1, "report": None, "report_format": "json"},
    "sweep": {"axis": "gamma", "values": "0,0.5,1", "repetitions": 1},
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="matchdodge")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(p, *names, **kw):
        kw.setdefault("default", S)
        p.add_argument(*names, **kw)

    p = sub.add_parser("synth", help="generate a planted synthetic embedding set")
    add(p, "--clusters", type=int)
    add(p, "--radius", type=float)
    add(p, "--count", type=int)
    add(p, "--dim", type=int)
    add(p, "--seed", type=int)
    add(p, "--role", choices=[r.value for r in Role])
    add(p, "--min-center-distance", dest="min_center_distance", type=float)
    p.add_argument("--out", required=True)
    add(p, "--config")

    p = sub.add_parser("calibrate", help="calibrate a verification threshold from pairs")
    p.add_argument("--pairs", required=True)
    p.add_argument("--embeddings", required=True)
    add(p, "--far", type=float)
    add(p, "--out")
    add(p, "--config")

    p = sub.add_parser("search", help="phase 1: per-cluster embedding-space search")
    p.add_argument("--match", required=True)
    add(p, "--dodge")
    add(p, "--clusters", type=int)
    add(p, "--seed", type=int)
    add(p, "--generations", type=int)
    add(p, "--population", type=int)
    add(p, "--sigma0", type=float)
    add(p, "--th1", type=float)
    add(p, "--th2", type=float)
    add(p, "--alpha", type=float)
    add(p, "--beta", type=float)
    add(p, "--gamma", type=float)
    add(p, "--threads", type=int)
    add(p, "--out")
    add(p, "--report")
    add(p, "--config")

    p = sub.add_parser("invert", help="phase 2: invert a target point into an image")
    p.add_argument("--target", required=True, help="embedding set file of attack points")
    add(p, "--index", type=int)
    add(p, "--source", help="image tensor file; omitted = seeded random image")
    add(p, "--mapper", help="mapper weights file; omitted = seeded default")
    add(p, "--mapper-seed", dest="mapper_seed", type=int)
    add(p, "--side", type=int)
    add(p, "--hidden", type=int)
    add(p, "--epsilon", type=float)
    add(p, "--iterations", type=int)
    add(p, "--lr", type=float)
    add(p, "--seed", type=int)
    add(p, "--out")
    add(p, "--report")
    add(p, "--config")

    p = sub.add_parser("evaluate", help="coverage of attack embeddings over targets")
    p.add_argument("--attack", required=True)
    p.add_argument("--targets", required=True)
    add(p, "--th", type=float)
    add(p, "--report")
    add(p, "--config")

    p = sub.add_parser("scenario", help="run one taxonomy scenario end to end")
    add(p, "--kind", choices=sorted(SCENARIO_KINDS))
    add(p, "--match-size", dest="match_size", type=int)
    add(p, "--dodge-size", dest="dodge_size", type=int)
    add(p, "--dim", type=int)
    add(p, "--repetitions", type=int)
    add(p, "--seed", type=int)
    add(p, "--clusters", type=int)
    add(p, "--planted-clusters", dest="planted_clusters", type=int)
    add(p, "--radius", type=float)
    add(p, "--dodge-inside-match", dest="dodge_inside_match", action="store_true")
    add(p, "--generations", type=int)
    add(p, "--population", type=int)
    add(p, "--sigma0", type=float)
    add(p, "--th1", type=float)
    add(p, "--th2", type=float)
    add(p, "--alpha", type=float)
    add(p, "--beta", type=float)
    add(p, "--gamma", type=float)
    add(p, "--phase2", action="store_true")
    add(p, "--epsilon", type=float)
    add(p, "--iterations", type=int)
    add(p, "--match-file", dest="match_file")
    add(p, "--dodge-file", dest="dodge_file")
    add(p, "--threads", type=int)
    add(p, "--report")
    add(p, "--report-format", dest="report_format", choices=["json", "csv"])
    add(p, "--config")

    p = sub.add_parser("sweep", help="sweep one axis over a base scenario")
    add(p, "--axis", choices=list(SWEEP_AXES))
    add(p, "--values", help="comma-separated, strictly increasing")
    add(p, "--repetitions", type=int)
    # base scenario flags reuse the scenario defaults
    for flag, dest, typ in [
        ("--kind", "kind", str), ("--match-size", "match_size", int),
        ("--dodge-size", "dodge_size", int), ("--dim", "dim", int),
        ("--seed", "seed", int), ("--clusters", "clusters", int),
        ("--planted-clusters", "planted_clusters", int),
        ("--radius", "radius", float), ("--generations", "generations", int),
        ("--population", "population", int), ("--sigma0", "sigma0", float),
        ("--th1", "th1", float), ("--th2", "th2", float),
        ("--alpha", "alpha", float), ("--beta", "beta", float),
        ("--gamma", "gamma", float), ("--threads", "threads", int),
        ("--report", "report", str),
        ("--report-format", "report_format", str),
    ]:
        add(p, flag, dest=dest, type=typ)
    add(p, "--dodge-inside-match", dest="dodge_inside_match", action="store_true")
    add(p, "--config")

    return parser


def _resolve(command: str, args: argparse.Namespace) -> dict:
    opts = dict(DEFAULTS.get(command, {}))
    if command == "sweep":
        opts = {**DEFAULTS["scenario"], **opts}
    given = {k: v for k, v in vars(args).items() if k != "command"}
    config_path = given.pop("config", None)
    if config_path:
        with open(config_path) as fh:
            try:
                file_opts = json.load(fh)
            except ValueError as exc:
                raise ConfigError(f"bad config file {config_path}: {exc}") from exc
        if not isinstance(file_opts, dict):
            raise ConfigError(f"config file {config_path} must hold a JSON object")
        unknown = set(file_opts) - set(opts) - set(given)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        opts.update(file_opts)
    opts.update(given)
    return opts


def _fitness_from(opts: dict) -> FitnessParams:
    return FitnessParams(th1=Threshold(opts["th1"]), th2=Threshold(opts["th2"]),
                         alpha=opts["alpha"], beta=opts["beta"],
                         gamma=opts["gamma"])


def _cmd_synth(opts: dict) -> int:
    spec = SynthSpec(clusters=opts["clusters"], count=opts["count"],
                     radius=opts["radius"], dimension=opts["dim"],
                     seed=opts["seed"],
                     min_center_distance=opts["min_center_distance"])
    es = synth_dataset(spec, role=Role(opts["role"]))
    write_embedding_set(es, opts["out"])
    print(f"wrote {len(es)} records to {opts['out']}")
    return EXIT_OK


def _cmd_calibrate(opts: dict) -> int:
    pairs = read_pair_list(opts["pairs"])
    embeddings = read_embedding_set(opts["embeddings"])
    th = calibrate_threshold(pairs, embeddings, opts["far"])
    print(f"threshold {th.value!r} at far {opts['far']}")
    if opts.get("out"):
        with open(opts["out"], "w") as fh:
            json.dump({"threshold": th.value, "far": opts["far"]}, fh, indent=2)
            fh.write("\n")
    return EXIT_OK


def _attack_set(matrix: np.ndarray) -> EmbeddingSet:
    from .embedding import EmbeddingRecord
    records = [EmbeddingRecord(id=f"attack-{i}", identity_label=f"attack-{i}",
                               vector=v)
               for i, v in enumerate(matrix)]
    return EmbeddingSet(role=Role.POPULATION, records=records)


def _cmd_search(opts: dict) -> int:
    match = read_embedding_set(opts["match"])
    if opts["dodge"] in (None, "empty"):
        dodge = EmbeddingSet(role=Role.DODGE, records=[])
    else:
        dodge = read_embedding_set(opts["dodge"])
    p = match.dimension
    if p is None:
        raise ConfigError("match set is empty; search needs at least one record")
    es = EsConfig(dimension=p, population=opts["population"],
                  generations=opts["generations"], sigma0=opts["sigma0"],
                  seed=opts["seed"], sphere_projection=True)
    config = SearchConfig(clusters=opts["clusters"], fitness=_fitness_from(opts),
                          es=es, seed=opts["seed"])
    result = search(match, dodge, config, threads=opts["threads"])

    metrics = [MetricRow("phase1", "match", result.match_coverage.percentage,
                         result.match_coverage.matched_count, len(match), "")]
    if result.dodge_coverage is not None:
        metrics.append(MetricRow("phase1", "dodge",
                                 result.dodge_coverage.percentage,
                                 result.dodge_coverage.matched_count,
                                 len(dodge), ""))
    histories = {f"cluster{c}": t.best_fitness
                 for c, t in enumerate(result.per_cluster_trace)}
    report = RunReport(seed=opts["seed"],
                       config=config_echo({"command": "search", **{
                           k: opts[k] for k in sorted(opts) if k != "config"}}),
                       metrics=metrics, histories=histories)
    if opts.get("out"):
        write_embedding_set(_attack_set(result.best_embeddings), opts["out"])
    if opts.get("report"):
        write_report(report, opts["report"])
    print(f"phase1 match coverage {result.match_coverage.percentage:.2f}%"
          + (f", dodge coverage {result.dodge_coverage.percentage:.2f}%"
             if result.dodge_coverage else ""))
    return EXIT_OK


def _cmd_invert(opts: dict) -> int:
    targets = read_embedding_set(opts["target"])
    if not (0 <= opts["index"] < len(targets)):
        raise ConfigError(f"target index {opts['index']} out of range "
                          f"(set has {len(targets)} records)")
    target = targets.records[opts["index"]].vector
    if opts.get("mapper"):
        mapper = ToyMapper.load(opts["mapper"])
    else:
        mapper = ToyMapper(side=opts["side"], embed_dim=target.shape[0],
                           hidden=opts["hidden"], seed=opts["mapper_seed"])
    if opts.get("source"):
        source = ImageTensor(read_image_tensor(opts["source"]))
    else:
        rng = np.random.default_rng(opts["seed"])
        source = ImageTensor(rng.uniform(-0.9, 0.9,
                                         size=(3, mapper.side, mapper.side)))
    inv = InversionConfig(epsilon=opts["epsilon"], iterations=opts["iterations"],
                          learning_rate=opts["lr"], seed=opts["seed"])
    result = generate_attack_face(source, target, mapper, identity_cropper, inv)
    if opts.get("out"):
        write_image_tensor(result.image.values, opts["out"])
    if opts.get("report"):
        report = RunReport(
            seed=opts["seed"],
            config=config_echo({"command": "invert", **{
                k: opts[k] for k in sorted(opts) if k != "config"}}),
            metrics=[MetricRow("phase2", "target", 0.0, 0, 1,
                               f"final_distance={result.final_distance!r} "
                               f"max_deviation={result.max_deviation!r}")],
            histories={"loss": result.loss_trace})
        write_report(report, opts["report"])
    print(f"final distance {result.final_distance:.6f}, "
          f"max deviation {result.max_deviation:.6f}")
    return EXIT_OK


def _cmd_evaluate(opts: dict) -> int:
    attack = read_embedding_set(opts["attack"])
    targets = read_embedding_set(opts["targets"])
    cov = coverage(attack.matrix(), targets, Threshold(opts["th"]))
    if opts.get("report"):
        report = RunReport(
            seed=0,
            config=config_echo({"command": "evaluate", **{
                k: opts[k] for k in sorted(opts) if k != "config"}}),
            metrics=[MetricRow("eval", targets.role.value, cov.percentage,
                               cov.matched_count, len(targets), "")],
            histories={})
        write_report(report, opts["report"])
    print(f"coverage {cov.percentage:.2f}% "
          f"({cov.matched_count}/{len(targets)} targets)")
    return EXIT_OK


def _scenario_config(opts: dict) -> ScenarioConfig:
    es = EsConfig(dimension=opts["dim"], population=opts["population"],
                  generations=opts["generations"], sigma0=opts["sigma0"],
                  seed=opts["seed"], sphere_projection=True)
    search_cfg = SearchConfig(clusters=opts["clusters"],
                              fitness=_fitness_from(opts), es=es,
                              seed=opts["seed"])
    return ScenarioConfig(
        kind=opts["kind"], match_size=opts["match_size"],
        dodge_size=opts["dodge_size"], dimension=opts["dim"],
        repetitions=opts["repetitions"], seed=opts["seed"], search=search_cfg,
        inversion=InversionConfig(epsilon=opts["epsilon"],
                                  iterations=opts["iterations"],
                                  seed=opts["seed"]),
        run_phase2=opts["phase2"], planted_clusters=opts["planted_clusters"],
        radius=opts["radius"], dodge_inside_match=opts["dodge_inside_match"],
        match_path=opts["match_file"], dodge_path=opts["dodge_file"])


def _print_metrics(report: RunReport) -> None:
    for row in report.metrics:
        print(f"{row.phase} {row.role} coverage {row.coverage:.2f}% "
              f"({row.matched}/{row.total}) {row.detail}".rstrip())


def _cmd_scenario(opts: dict) -> int:
    config = _scenario_config(opts)
    report = run_scenario(config, threads=opts["threads"])
    if opts.get("report"):
        write_report(report, opts["report"], format=opts["report_format"])
    _print_metrics(report)
    return EXIT_OK


def _cmd_sweep(opts: dict) -> int:
    values = opts["values"]
    if isinstance(values, str):
        try:
            values = [float(v) for v in values.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad sweep values {opts['values']!r}") from exc
    spec = SweepSpec(axis=opts["axis"], values=values,
                     repetitions=opts["repetitions"])
    base = _scenario_config({**opts, "phase2": opts.get("phase2", False),
                             "epsilon": opts.get("epsilon", 0.1),
                             "iterations": opts.get("iterations", 1000),
                             "match_file": opts.get("match_file"),
                             "dodge_file": opts.get("dodge_file")})
    report = run_sweep(spec, base, threads=opts["threads"])
    if opts.get("report"):
        write_report(report, opts["report"], format=opts["report_format"])
    _print_metrics(report)
    return EXIT_OK


COMMANDS = {
    "synth": _cmd_synth,
    "calibrate": _cmd_calibrate,
    "search": _cmd_search,
    "invert": _cmd_invert,
    "evaluate": _cmd_evaluate,
    "scenario": _cmd_scenario,
    "sweep": _cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, matching our config-error code
        return int(exc.code) if exc.code else EXIT_OK
    try:
        opts = _resolve(args.command, args)
        return COMMANDS[args.command](opts)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MatchDodgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
