"""Command-line driver.

Exit codes: 0 success, 1 check failed, 2 usage or configuration error,
3 runtime abort. Every command writes ``resolved_config.json`` into the
output directory; feeding that file back through ``--config`` replays the run.

``--config builtin:NAME`` refers to an instance bundled with the package
(currently ``toy``).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .baselines import KINDS as BASELINE_KINDS, BaselineKind
from .config import ExperimentConfig, config_to_dict, load_config
from .errors import ConfigurationError, GFlowGNNError, ParseError, ShapeError, SizeError, TrainingError, \
    ValidationError
from .evaluation import evaluate_policy
from .graph import load_graph, save_graph
from .policy import init_policy, load_policy, save_policy
from .sbm import generate_sbm
from .trainer import policy_seed, proportionality_gap, train, write_curves, write_train_log

log = logging.getLogger("gflowgnn")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_ABORT = 0, 1, 2, 3

TRAIN_LOG = "train_log.jsonl"
CURVES = "curves.csv"
SUMMARY = "summary.json"
EVAL_RUNS = "eval_runs.csv"
BASELINE = "baseline.csv"
NODES = "nodes.json"
RESOLVED = "resolved_config.json"
CHECKPOINT = "policy.ckpt"
PROPORTIONALITY = "proportionality.json"

DATA_DIR = Path(__file__).parent / "data"
BUILTIN_PREFIX = "builtin:"


def bundled_config(name: str) -> Path:
    path = DATA_DIR / name / "config.json"
    if not path.is_file():
        available = sorted(p.name for p in DATA_DIR.iterdir() if (p / "config.json").is_file())
        raise ConfigurationError(f"no bundled instance {name!r}; available: {', '.join(available)}")
    return path


def _config_path(arg: str) -> Path:
    if arg.startswith(BUILTIN_PREFIX):
        return bundled_config(arg[len(BUILTIN_PREFIX):])
    return Path(arg)


def resolve(args) -> ExperimentConfig:
    cfg = load_config(_config_path(args.config))
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "jobs", None) is not None:
        cfg = replace(cfg, jobs=args.jobs)
    if getattr(args, "out", None):
        cfg = replace(cfg, out=args.out)
    if cfg.out is None:
        cfg = replace(cfg, out="out")
    cfg.validate()
    return cfg


def load_dataset(cfg: ExperimentConfig):
    if cfg.edges or cfg.features or cfg.labels:
        missing = [k for k in ("edges", "features", "labels") if getattr(cfg, k) is None]
        if missing:
            raise ConfigurationError(f"config lacks dataset paths: {', '.join(missing)}")
        for p in cfg.dataset_paths():
            if not Path(p).is_file():
                raise ConfigurationError(f"dataset file not found: {p}")
        return load_graph(cfg.edges, cfg.features, cfg.labels, cfg.splits, num_classes=cfg.num_classes)
    if cfg.sbm is not None:
        try:
            return generate_sbm(**cfg.sbm)
        except TypeError as exc:
            raise ConfigurationError(f"bad sbm parameters: {exc}") from None
    raise ConfigurationError("config names neither dataset files nor an sbm instance")


def prepare(args):
    """Resolve config, load the graph, create the output directory and
    write the resolved snapshot with the budget made explicit."""
    cfg = resolve(args)
    graph = load_dataset(cfg)
    cfg = replace(cfg, budget=cfg.resolved_budget(graph))
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    snapshot = config_to_dict(cfg)
    for key in ("edges", "features", "labels", "splits", "out"):
        if snapshot[key] is not None:
            snapshot[key] = str(Path(snapshot[key]).resolve())
    with open(out / RESOLVED, "w") as fh:
        json.dump(snapshot, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return cfg, graph, out


def _train(cfg, graph, out):
    def progress(rec):
        if rec["epoch"] % 100 == 0 or rec["epoch"] == cfg.epochs - 1:
            log.info("epoch %d loss %.4f reward %.4f", rec["epoch"], rec["mean_loss"], rec["mean_reward"])

    policy, records = train(cfg, graph, callback=progress, dump_dir=str(out))
    save_policy(out / CHECKPOINT, policy, {"epochs": cfg.epochs, "seed": cfg.seed})
    write_train_log(records, out / TRAIN_LOG)
    write_curves(records, out / CURVES)
    return policy


def cmd_train(args) -> int:
    cfg, graph, out = prepare(args)
    _train(cfg, graph, out)
    print(f"wrote {out / CHECKPOINT}, {out / TRAIN_LOG}, {out / CURVES}")
    return EXIT_OK


def _summary_line(s):
    return f"{s.mode}: mean {s.mean:.4f} std {s.std:.4f} over {s.runs} runs; best {s.best_reward:.4f}"


def cmd_evaluate(args) -> int:
    cfg, graph, out = prepare(args)
    policy = load_policy(args.checkpoint, graph)
    runs = args.runs if args.runs is not None else cfg.eval_runs
    greedy = args.greedy or cfg.greedy
    s = evaluate_policy(policy, graph, runs, cfg.budget, cfg.seed, cfg, greedy, cfg.thresholds)
    s.write_json(out / SUMMARY)
    s.write_csv(out / EVAL_RUNS)
    print(_summary_line(s))
    return EXIT_OK


def cmd_baseline(args) -> int:
    kind = BaselineKind(args.kind)  # validated before any work
    cfg, graph, out = prepare(args)
    runs = args.runs if args.runs is not None else cfg.eval_runs
    s = evaluate_policy(kind, graph, runs, cfg.budget, cfg.seed, cfg, thresholds=cfg.thresholds)
    s.write_json(out / SUMMARY)
    s.write_csv(out / BASELINE, kind=kind.tag)
    print(f"{kind.tag} " + _summary_line(s))
    return EXIT_OK


def cmd_proportionality_check(args) -> int:
    cfg, graph, out = prepare(args)
    if args.checkpoint:
        policy = load_policy(args.checkpoint, graph)
    elif args.untrained:
        policy = init_policy(cfg.policy_kind, graph, policy_seed(cfg.seed))
    else:
        policy = _train(cfg, graph, out)
    report = proportionality_gap(graph, policy, cfg)
    report["tolerance"] = args.tolerance
    report["passed"] = report["l1"] < args.tolerance
    with open(out / PROPORTIONALITY, "w") as fh:
        json.dump(report, fh, indent=2)
    verdict = "PASS" if report["passed"] else "FAIL"
    print(f"{verdict}: L1(P_F, normalized reward) = {report['l1']:.4f} (tolerance {args.tolerance})")
    return EXIT_OK if report["passed"] else EXIT_CHECK_FAILED


def cmd_export_nodes(args) -> int:
    cfg, graph, out = prepare(args)
    policy = load_policy(args.checkpoint, graph)
    runs = args.runs if args.runs is not None else 1
    s = evaluate_policy(policy, graph, runs, cfg.budget, cfg.seed, cfg, args.greedy or cfg.greedy)
    with open(out / NODES, "w") as fh:
        json.dump(s.label_sets, fh)
        fh.write("\n")
    print(f"wrote {runs} label sets to {out / NODES}")
    return EXIT_OK


def cmd_generate_sbm(args) -> int:
    params = dict(n=args.n, C=args.classes, p_in=args.p_in, p_out=args.p_out, d=args.dim, seed=args.seed)
    graph = generate_sbm(**params)
    out = Path(args.out)
    paths = save_graph(graph, out)
    cfg = {"edges": paths["edges"].name, "features": paths["features"].name, "labels": paths["labels"].name,
           "splits": paths["splits"].name, "num_classes": graph.C}
    with open(out / "config.json", "w") as fh:
        json.dump(cfg, fh, indent=2)
        fh.write("\n")
    print(f"wrote SBM instance (n={graph.n}, edges={graph.edge_list().shape[0]}) and config.json to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gflowgnn", description="Flow-matching active learning on graphs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, checkpoint=False):
        p.add_argument("--config", required=True, help="JSON config file or builtin:NAME")
        p.add_argument("--out", help="output directory (default: config 'out' or ./out)")
        p.add_argument("--seed", type=int, help="master seed; overrides GFLOW_SEED and the config")
        p.add_argument("--jobs", type=int, help="worker processes for rollouts")
        if checkpoint:
            p.add_argument("--checkpoint", required=True, help="policy checkpoint")

    p = sub.add_parser("train", help="train a flow policy")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a trained policy over many episodes")
    common(p, checkpoint=True)
    p.add_argument("--runs", type=int)
    p.add_argument("--greedy", action="store_true", help="take the highest-flow action instead of sampling")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("baseline", help="run a heuristic selection baseline")
    p.add_argument("kind", help=f"one of {', '.join(BASELINE_KINDS)}")
    common(p)
    p.add_argument("--runs", type=int)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("proportionality-check",
                       help="compare the exact terminal distribution with the normalized reward")
    common(p)
    p.add_argument("--tolerance", type=float, default=0.15)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--checkpoint", help="check this policy instead of training one")
    group.add_argument("--untrained", action="store_true", help="check a freshly initialized policy")
    p.set_defaults(func=cmd_proportionality_check)

    p = sub.add_parser("export-nodes", help="write the label sets chosen by a policy")
    common(p, checkpoint=True)
    p.add_argument("--runs", type=int, help="episodes to export (default 1)")
    p.add_argument("--greedy", action="store_true")
    p.set_defaults(func=cmd_export_nodes)

    p = sub.add_parser("generate-sbm", help="write a synthetic SBM dataset and a matching config")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=150)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--p-in", type=float, default=0.08)
    p.add_argument("--p-out", type=float, default=0.02)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_generate_sbm)
    return parser


USAGE_ERRORS = (ConfigurationError, ParseError, ValidationError, ShapeError, SizeError)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingError as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (GFlowGNNError, OSError) as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
