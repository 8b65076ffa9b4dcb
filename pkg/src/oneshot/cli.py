"""Command-line front end.

Subcommands: ``solve``, ``simulate``, ``check``, ``counterexample`` and
``net-info``.  Configuration is a JSON object; every setting actually used,
defaults included, is written into the run manifest.

Exit codes: 0 success, 2 invalid input, 3 size or iteration guard tripped,
4 a gated check failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .belief import build_net
from .errors import ImpossibleObservationError, InvalidArgumentError, IterationCapError, SizeGuardError
from .finite_mdp import build_appendix_example, counterexample_rows
from .model import UserTypeModel, assumption_b
from .planner import OPERATORS, BeliefMdp, value_iteration
from .simulator import ExperimentConfig, run_experiment, sample_scores
from .suites import DEFAULT_SUITES, SUITES, run_suite

EXIT_OK, EXIT_INVALID, EXIT_GUARD, EXIT_CHECK = 0, 2, 3, 4
log = logging.getLogger("oneshot")

SOLVE_DEFAULTS = {
    "model": "sample",  # "toy", "sample", a model dict or a path to a model JSON file
    "preset": "main",
    "num_types": 4,
    "k": 3,
    "resolution": 10,
    "gamma": 1.0,
    "operator": "greedy",
    "iterations": 6,
    "tol": None,
}
NET_DEFAULTS = {"num_types": 4, "resolution": 10, "list_points": False}
CHECK_DEFAULTS = {"suites": list(DEFAULT_SUITES), "instances": None}


def fmt(x):
    """Nine significant digits for floats, recursively; other values unchanged."""
    if isinstance(x, (float, np.floating)):
        return float(f"{float(x):.9g}")
    if isinstance(x, dict):
        return {k: fmt(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [fmt(v) for v in x]
    if isinstance(x, np.ndarray):
        return fmt(x.tolist())
    if isinstance(x, (np.integer, np.bool_)):
        return x.item()
    return x


def _cell(x):
    return f"{x:.9g}" if isinstance(x, float) else x


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidArgumentError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidArgumentError("config must be a JSON object")
    return data


def _resolve(defaults: dict, given: dict) -> dict:
    unknown = set(given) - set(defaults)
    if unknown:
        raise InvalidArgumentError(f"unknown config keys {sorted(unknown)}")
    return {**defaults, **given}


def _threads(args) -> int:
    raw = args.threads if args.threads is not None else os.environ.get("ONESHOT_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise InvalidArgumentError(f"bad thread count {raw!r}") from exc
    if n < 1:
        raise InvalidArgumentError("thread count must be >= 1")
    return n


def _load_model(spec, cfg: dict, seed: int) -> UserTypeModel:
    if isinstance(spec, dict):
        return UserTypeModel.from_dict(spec)
    if spec == "sample":
        from .simulator import PROTOCOLS

        if cfg["preset"] not in PROTOCOLS:
            raise InvalidArgumentError(f"unknown preset {cfg['preset']!r}")
        num_items, per = PROTOCOLS[cfg["preset"]]
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        return sample_scores(rng, cfg["num_types"], num_items, per)
    try:
        return UserTypeModel.loads(Path(spec).read_text())
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise InvalidArgumentError(f"cannot load model from {spec!r}: {exc}") from exc


def cmd_solve(cfg: dict, seed: int, threads: int):
    cfg = _resolve(SOLVE_DEFAULTS, cfg)
    if cfg["operator"] not in OPERATORS:
        raise InvalidArgumentError(f"operator must be one of {OPERATORS}")
    sweeps = {"iterations": cfg["iterations"], "tol": None} if cfg["tol"] is None else {"tol": cfg["tol"]}
    if cfg["model"] == "toy":
        mdp = build_appendix_example(cfg["gamma"])
        sol = value_iteration(mdp, cfg["operator"], cfg["gamma"], **sweeps)
        states = [[s + 1] for s in range(mdp.state_count)]
        policy = [[i + 1 for i in w] for w in sol.actions()]
        result = {"model": "toy", "states": states, "values": sol.values.tolist(), "policy": policy,
                  "iterations": sol.iterations}
        return cfg, result
    model = _load_model(cfg["model"], cfg, seed)
    net = build_net(model.num_types, cfg["resolution"])
    problem = BeliefMdp(model, net, cfg["k"])
    sol = value_iteration(problem, cfg["operator"], cfg["gamma"], **sweeps)
    result = {
        "model": model.to_dict(),
        "B": assumption_b(model, cfg["k"]),
        "states": net.points.tolist(),
        "values": sol.values.tolist(),
        "policy": [list(w) for w in sol.actions()],
        "iterations": sol.iterations,
    }
    return cfg, result


def cmd_simulate(cfg: dict, seed: int, threads: int):
    given = dict(cfg)
    preset = given.pop("preset", "main")
    given["seed"] = seed
    try:
        config = ExperimentConfig.preset(preset, **given)
    except TypeError as exc:
        raise InvalidArgumentError(str(exc)) from exc
    except KeyError as exc:
        raise InvalidArgumentError(f"unknown preset {preset!r}") from exc
    res = run_experiment(config, workers=threads)
    resolved = {"preset": preset, **config.to_dict()}
    return resolved, {"rows": res.rows, "summary": res.summary}


def cmd_check(cfg: dict, seed: int, threads: int):
    cfg = _resolve(CHECK_DEFAULTS, cfg)
    bad = set(cfg["suites"]) - set(SUITES)
    if bad:
        raise InvalidArgumentError(f"unknown suites {sorted(bad)}; choose from {sorted(SUITES)}")
    reports = [run_suite(name, seed, cfg["instances"]) for name in cfg["suites"]]
    passed = all(r["passed"] for r in reports if r["gated"])
    return cfg, {"passed": passed, "suites": reports}


def cmd_counterexample(cfg: dict, seed: int, threads: int):
    cfg = _resolve({"gamma": 0.5, "tol": 1e-9}, cfg)
    rows = counterexample_rows(cfg["gamma"], tol=cfg["tol"])
    return cfg, {"passed": all(r["passed"] for r in rows), "rows": rows}


def cmd_net_info(cfg: dict, seed: int, threads: int):
    cfg = _resolve(NET_DEFAULTS, cfg)
    net = build_net(cfg["num_types"], cfg["resolution"])
    result = {"points": len(net), "covering_radius": net.covering_radius}
    if cfg["list_points"]:
        result["grid"] = net.points.tolist()
    return cfg, result


COMMANDS = {
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "check": cmd_check,
    "counterexample": cmd_counterexample,
    "net-info": cmd_net_info,
}


def _csv_rows(command: str, result: dict) -> tuple[list, list[dict]]:
    if command == "simulate":
        from .simulator import CSV_COLUMNS

        return list(CSV_COLUMNS), result["rows"] + result["summary"]
    if command == "solve":
        rows = [
            {"state": " ".join(f"{x:.9g}" for x in s), "value": v, "action": " ".join(map(str, a))}
            for s, v, a in zip(result["states"], result["values"], result["policy"])
        ]
        return ["state", "value", "action"], rows
    if command == "counterexample":
        return ["quantity", "value_function", "computed", "expected", "passed"], result["rows"]
    if command == "check":
        cols = ["suite", "gated", "instances", "passed"]
        return cols, result["suites"]
    return ["points", "covering_radius"], [result]


def render(command: str, fmt_name: str, manifest: dict, result: dict) -> str:
    """Serialise a result with its manifest embedded.

    JSON output nests both; CSV output starts with one ``# manifest`` comment line.
    """
    if fmt_name == "json":
        return json.dumps(fmt({"manifest": manifest, "result": result}), indent=2) + "\n"
    cols, rows = _csv_rows(command, result)
    buf = io.StringIO()
    buf.write("# manifest " + json.dumps(fmt(manifest), sort_keys=True) + "\n")
    writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _cell(v) for k, v in row.items()})
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oneshot", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed (default: config or 0)")
        p.add_argument("--threads", type=int, default=None, help="worker threads (default: $ONESHOT_THREADS or 1)")
        p.add_argument("--out", help="output directory (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="json")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "check":
            p.add_argument("suites", nargs="*", help=f"suites to run (default: {' '.join(DEFAULT_SUITES)})")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    start = time.perf_counter()
    try:
        cfg = load_config(args.config)
        seed = args.seed if args.seed is not None else int(cfg.pop("seed", 0))
        cfg.pop("seed", None)
        if not 0 <= seed < 2**64:
            raise InvalidArgumentError("seed must be an unsigned 64-bit integer")
        if args.command == "check" and args.suites:
            cfg["suites"] = args.suites
        threads = _threads(args)
        resolved, result = COMMANDS[args.command](cfg, seed, threads)
    except (InvalidArgumentError, ImpossibleObservationError) as exc:
        print(f"oneshot {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SizeGuardError, IterationCapError) as exc:
        print(f"oneshot {args.command}: guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    manifest = {"subcommand": args.command, "config": resolved, "seed": seed, "version": __version__}
    text = render(args.command, args.format, manifest, result)
    runtime = time.perf_counter() - start
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        stem = args.command.replace("-", "_")
        (out / f"{stem}.{args.format}").write_text(text)
        # wall-clock time lives beside the result so reruns stay byte-identical
        full = {**manifest, "runtime_s": runtime}
        (out / f"{stem}.manifest.json").write_text(json.dumps(fmt(full), indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(text)
    log.info("%s finished in %.3f s", args.command, runtime)
    if "passed" in result and not result["passed"]:
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
