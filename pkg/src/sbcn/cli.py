"""Command-line pipeline: simulate, infer, stress, evaluate, sweep.

Every subcommand is deterministic given its flags: one ``--seed`` feeds a
documented sub-seed derivation (see :mod:`sbcn.seeds`), so reruns write
byte-identical output files.  Progress goes to stderr, results to files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .bootstrap import edge_confidence, prune
from .classifier import (
    DecisionTree,
    Portfolio,
    implied_up_cut,
    label_scenarios,
    learn_tree,
    risky_paths,
)
from .datagen import (
    ground_truth_dag,
    market_factor_spec,
    simulate_dataset,
    sparse_random_instance,
)
from .evaluation import SweepConfig, arc_contingency, run_sweep
from .learn import LearnOptions, learn_bn, learn_sbcn
from .model import (
    BinaryDataset,
    SbcnModel,
    dag_from_json,
    dag_to_json,
    float_repr,
    scenarios_to_csv,
)
from .sampling import ancestral_sample, stress_sample
from .seeds import derive_seed


def _write(path: str, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _read(path: str) -> str:
    with open(path) as fh:
        return fh.read()


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _fraction(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not in [0, 1]")
    return value


def _cmd_simulate(args) -> int:
    overrides = json.loads(_read(args.spec)) if args.spec else {}
    if not isinstance(overrides, dict):
        raise ValueError("--spec file must hold a JSON object")
    if args.mode == "famafrench":
        known = {"n_stocks", "positive_loadings", "lag"}
        _reject_unknown(overrides, known)
        spec = market_factor_spec(
            derive_seed(args.seed, 0),
            n_stocks=int(overrides.get("n_stocks", 10)),
            positive_loadings=bool(overrides.get("positive_loadings", False)),
            lag=int(overrides.get("lag", 1)),
        )
        data = simulate_dataset(spec, args.samples, derive_seed(args.seed, 1))
        truth = ground_truth_dag(spec)
    else:
        known = {"n_factors", "n_stocks", "p", "signed_loadings"}
        _reject_unknown(overrides, known)
        spec, truth, data = sparse_random_instance(
            n_factors=int(overrides.get("n_factors", 10)),
            n_stocks=int(overrides.get("n_stocks", 20)),
            p=float(overrides.get("p", 0.3)),
            T=args.samples,
            seed=args.seed,
            signed_loadings=bool(overrides.get("signed_loadings", False)),
        )
    _write(args.out_data, data.to_csv())
    _log(f"wrote {data.m}x{data.n} dataset to {args.out_data}")
    if args.out_truth:
        _write(args.out_truth, dag_to_json(truth, spec.names))
        _log(f"wrote ground truth ({len(truth.edges)} arcs) to {args.out_truth}")
    return 0


def _reject_unknown(overrides: dict, known: set[str]) -> None:
    unknown = sorted(set(overrides) - known)
    if unknown:
        raise ValueError(f"unknown generator parameters: {', '.join(unknown)}")


def _cmd_infer(args) -> int:
    data = BinaryDataset.from_csv(_read(args.data))
    options = LearnOptions(
        criterion=args.criterion,
        max_iterations=args.max_iterations,
        restarts=args.restarts,
        smoothing=args.smoothing,
        seed=args.seed,
        penalty=args.penalty,
    )
    learn = learn_sbcn if args.learner == "sbcn" else learn_bn
    model = learn(data, options)
    _log(f"learned {len(model.dag.edges)} arcs with {args.learner}/{args.criterion}")
    if args.bootstrap > 0:
        threads = args.threads if args.threads else (os.cpu_count() or 1)
        report = edge_confidence(
            data, options, args.bootstrap, model=model, learner=learn, threads=threads
        )
        model = prune(model, report, data, args.confidence, args.smoothing)
        _log(
            f"bootstrap B={args.bootstrap}, threshold {args.confidence}: "
            f"{len(model.dag.edges)} arcs survive"
        )
        if args.out_report:
            _write(args.out_report, report.to_json())
    elif args.out_report:
        raise ValueError("--out-report requires --bootstrap > 0")
    _write(args.out_model, model.to_json())
    return 0


def _split_nodes(model: SbcnModel) -> tuple[list[int], list[int]]:
    """Factor nodes (earliest rank) and stock nodes (all later ranks)."""
    lowest = min(model.rank)
    factors = [i for i, r in enumerate(model.rank) if r == lowest]
    stocks = [i for i, r in enumerate(model.rank) if r != lowest]
    return factors, stocks


def _parse_clamp(text: str, model: SbcnModel) -> dict[int, int]:
    index = model.name_to_index()
    assignment: dict[int, int] = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        name, _, value = item.partition("=")
        name = name.strip()
        if name not in index:
            raise ValueError(f"unknown variable {name!r} in --clamp")
        if value.strip() not in ("0", "1"):
            raise ValueError(f"clamp value for {name} must be 0 or 1")
        assignment[index[name]] = int(value)
    if not assignment:
        raise ValueError("--clamp parsed to an empty assignment")
    return assignment


def _cmd_stress(args) -> int:
    model = SbcnModel.from_json(_read(args.model))
    factors, stocks = _split_nodes(model)
    if args.clamp:
        assignment = _parse_clamp(args.clamp, model)
        _log(f"clamping {len(assignment)} variables from --clamp; classification skipped")
    else:
        if not stocks:
            raise ValueError("model has no later-ranked stock variables to build a portfolio on")
        scenarios = ancestral_sample(model, args.samples_for_tree, derive_seed(args.seed, 0))
        portfolio = Portfolio(stocks)
        labels = label_scenarios(scenarios, portfolio, args.risky_fraction)
        cut = implied_up_cut(scenarios, portfolio, args.risky_fraction)
        _log(
            f"labeled {int(labels.sum())}/{len(labels)} scenarios risky "
            f"(up-count cut {'n/a' if cut is None else float_repr(cut)})"
        )
        tree = learn_tree(scenarios[:, factors], labels)
        tree = DecisionTree(tree.root, tuple(model.names[i] for i in factors))
        _log(tree.to_text().rstrip("\n"))
        if args.out_tree:
            _write(args.out_tree, tree.to_json())
        paths = risky_paths(tree)
        if not paths:
            raise ValueError(
                "no risky leaf derivable from the classification tree; "
                "raise --risky-fraction or supply --clamp"
            )
        if not 0 <= args.path_index < len(paths):
            raise ValueError(f"--path-index {args.path_index} out of range; tree has {len(paths)} risky paths")
        chosen = paths[args.path_index]
        assignment = {factors[f]: v for f, v in chosen.items()}
        _log(
            "clamping risky path "
            + ", ".join(f"{model.names[i]}={v}" for i, v in sorted(assignment.items()))
        )
    out = stress_sample(model, assignment, args.count, derive_seed(args.seed, 1))
    _write(args.out_scenarios, scenarios_to_csv(out, model.names))
    _log(f"wrote {args.count} stressed scenarios to {args.out_scenarios}")
    return 0


def _cmd_evaluate(args) -> int:
    model = SbcnModel.from_json(_read(args.model))
    truth = dag_from_json(_read(args.truth))
    stats = arc_contingency(model.dag, truth)
    header = "tp,fp,fn,tn,fp_rate_of_inferred,fn_rate_of_true,fpr,tpr"
    row = ",".join(
        [str(stats.tp), str(stats.fp), str(stats.fn), str(stats.tn)]
        + [
            float_repr(stats.fp_rate_of_inferred),
            float_repr(stats.fn_rate_of_true),
            float_repr(stats.fpr),
            float_repr(stats.tpr),
        ]
    )
    _write(args.out, header + "\n" + row + "\n")
    _log(f"tp={stats.tp} fp={stats.fp} fn={stats.fn} tn={stats.tn}")
    return 0


def _cmd_sweep(args) -> int:
    config = SweepConfig.from_json(_read(args.config))
    threads = args.threads if args.threads else (os.cpu_count() or 1)
    report = run_sweep(config, threads=threads, log=_log)
    _write(args.out, report.to_csv())
    _log(report.to_text())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sbcn",
        description="Learn causal factor networks from binary data and generate stress scenarios.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate synthetic data with known ground truth")
    p.add_argument("--mode", choices=("famafrench", "sparse"), default="famafrench")
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spec", help="JSON file of generator parameter overrides")
    p.add_argument("--out-data", required=True, help="dataset CSV to write")
    p.add_argument("--out-truth", help="ground-truth DAG JSON to write")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("infer", help="learn a causal network from a dataset CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--learner", choices=("sbcn", "bn"), default="sbcn")
    p.add_argument("--criterion", choices=("bic", "aic"), default="bic")
    p.add_argument(
        "--penalty",
        choices=("arcs", "parameters"),
        default="arcs",
        help="complexity measure in the score: arc count or free CPT parameters",
    )
    p.add_argument("--bootstrap", type=int, default=0, metavar="B", help="replicates; 0 disables")
    p.add_argument("--confidence", type=_fraction, default=0.5, help="bootstrap pruning threshold")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iterations", type=int, default=10000)
    p.add_argument("--restarts", type=int, default=0)
    p.add_argument("--smoothing", type=float, default=1.0)
    p.add_argument("--out-model", required=True)
    p.add_argument("--out-report", help="bootstrap confidence JSON to write")
    p.add_argument("--threads", type=int, default=0,
                   help="worker processes for bootstrap replicates (0 = all cores)")
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("stress", help="sample stressed scenarios from a model")
    p.add_argument("--model", required=True)
    p.add_argument("--samples-for-tree", type=int, default=1000)
    p.add_argument("--risky-fraction", type=_fraction, default=0.1)
    picker = p.add_mutually_exclusive_group()
    picker.add_argument("--path-index", type=int, default=0,
                        help="which risky tree path to clamp")
    picker.add_argument("--clamp", help='manual scenario, e.g. "SMB=0,Km=0" (skips the tree)')
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-scenarios", required=True)
    p.add_argument("--out-tree")
    p.set_defaults(func=_cmd_stress)

    p = sub.add_parser("evaluate", help="score a model against a ground-truth DAG")
    p.add_argument("--model", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("sweep", help="run the benchmark grid from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=0, help="worker processes (0 = all cores)")
    p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        _log(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
