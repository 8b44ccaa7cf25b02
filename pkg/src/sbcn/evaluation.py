"""Arc-recovery scoring against ground truth and the benchmark sweep.

``arc_contingency`` compares an inferred structure with the generating one
arc by arc.  ``run_sweep`` crosses learners, scoring criteria, bootstrap
pruning, and sample sizes over repeated fresh simulations and reports the
averaged error rates with standard errors, as CSV and as a plain table.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bootstrap import edge_confidence, prune
from .datagen import market_factor_spec, simulate_dataset, sparse_random_instance, ground_truth_dag
from .learn import LearnOptions, learn_bn, learn_sbcn
from .model import ContingencyStats, Dag, ModelSchemaError, float_repr
from .seeds import derive_seed

LEARNERS = ("sbcn", "bn")
GENERATOR_MODES = ("famafrench", "sparse")

RATE_FIELDS = ("fp_rate_of_inferred", "fn_rate_of_true", "fpr", "tpr")


def arc_contingency(inferred: Dag, truth: Dag) -> ContingencyStats:
    """Arc-level confusion counts over all ordered pairs of distinct nodes."""
    if inferred.n != truth.n:
        raise ValueError(f"node counts differ: {inferred.n} vs {truth.n}")
    n = inferred.n
    tp = len(inferred.edges & truth.edges)
    fp = len(inferred.edges - truth.edges)
    fn = len(truth.edges - inferred.edges)
    tn = n * (n - 1) - tp - fp - fn
    return ContingencyStats(tp, fp, fn, tn)


def roc_point(stats: ContingencyStats) -> tuple[float, float]:
    """(false positive rate, true positive rate) over the arc universe."""
    return (stats.fpr, stats.tpr)


def roc_upper_envelope(points) -> list[tuple[float, float]]:
    """Monotone nondecreasing hull of ROC points, sorted by fpr."""
    ordered = sorted(points)
    out: list[tuple[float, float]] = []
    best = -np.inf
    for fpr, tpr in ordered:
        best = max(best, tpr)
        out.append((fpr, best))
    return out


@dataclass(frozen=True)
class SweepConfig:
    """Cross-product benchmark description; see ``from_json`` for the schema."""

    generator: dict
    sample_sizes: tuple[int, ...]
    criteria: tuple[str, ...]
    bootstrap: tuple[bool, ...]
    learners: tuple[str, ...]
    repetitions: int
    seed: int
    bootstrap_replicates: int = 100
    confidence_threshold: float = 0.5
    max_iterations: int = 10000
    restarts: int = 0
    smoothing: float = 1.0
    penalty: str = "arcs"

    REQUIRED = ("generator", "sample_sizes", "criteria", "bootstrap", "learners", "repetitions", "seed")

    def __post_init__(self):
        mode = self.generator.get("mode")
        if mode not in GENERATOR_MODES:
            raise ModelSchemaError(
                f"generator.mode must be one of {GENERATOR_MODES}, got {mode!r}"
            )
        for learner in self.learners:
            if learner not in LEARNERS:
                raise ModelSchemaError(f"unknown learner {learner!r}")
        for crit in self.criteria:
            if crit not in ("bic", "aic"):
                raise ModelSchemaError(f"unknown criterion {crit!r}")
        if self.repetitions < 1:
            raise ModelSchemaError("repetitions must be >= 1")
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ModelSchemaError("confidence_threshold must lie in [0, 1]")
        if self.penalty not in ("arcs", "parameters"):
            raise ModelSchemaError(f"unknown penalty {self.penalty!r}")

    @classmethod
    def from_json(cls, text: str) -> "SweepConfig":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelSchemaError(f"config is not valid JSON: {exc}") from None
        if not isinstance(obj, dict):
            raise ModelSchemaError("config must be a JSON object")
        missing = [k for k in cls.REQUIRED if k not in obj]
        if missing:
            raise ModelSchemaError(f"config is missing keys: {', '.join(missing)}")
        return cls(
            generator=dict(obj["generator"]),
            sample_sizes=tuple(int(s) for s in obj["sample_sizes"]),
            criteria=tuple(str(c) for c in obj["criteria"]),
            bootstrap=tuple(bool(b) for b in obj["bootstrap"]),
            learners=tuple(str(l) for l in obj["learners"]),
            repetitions=int(obj["repetitions"]),
            seed=int(obj["seed"]),
            bootstrap_replicates=int(obj.get("bootstrap_replicates", 100)),
            confidence_threshold=float(obj.get("confidence_threshold", 0.5)),
            max_iterations=int(obj.get("max_iterations", 10000)),
            restarts=int(obj.get("restarts", 0)),
            smoothing=float(obj.get("smoothing", 1.0)),
            penalty=str(obj.get("penalty", "arcs")),
        )


@dataclass(frozen=True)
class SweepRow:
    learner: str
    criterion: str
    bootstrap: bool
    sample_size: int
    means: dict[str, float]
    stderrs: dict[str, float]
    repetitions: int
    seed: int


@dataclass(frozen=True)
class SweepReport:
    rows: tuple[SweepRow, ...] = field(default_factory=tuple)

    def to_csv(self) -> str:
        header = (
            ["learner", "criterion", "bootstrap", "sample_size"]
            + list(RATE_FIELDS)
            + [f"{f}_stderr" for f in RATE_FIELDS]
            + ["repetitions", "seed"]
        )
        lines = [",".join(header)]
        for r in self.rows:
            cells = [r.learner, r.criterion, "1" if r.bootstrap else "0", str(r.sample_size)]
            cells += [float_repr(r.means[f]) for f in RATE_FIELDS]
            cells += [float_repr(r.stderrs[f]) for f in RATE_FIELDS]
            cells += [str(r.repetitions), str(r.seed)]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        header = f"{'learner':<6} {'crit':<5} {'boot':<4} {'N':>6}   {'FP%/inf':>8} {'FN%/true':>9} {'fpr':>6} {'tpr':>6}"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            lines.append(
                f"{r.learner:<6} {r.criterion:<5} {'yes' if r.bootstrap else 'no':<4} "
                f"{r.sample_size:>6}   "
                f"{100 * r.means['fp_rate_of_inferred']:>8.1f} "
                f"{100 * r.means['fn_rate_of_true']:>9.1f} "
                f"{r.means['fpr']:>6.3f} {r.means['tpr']:>6.3f}"
            )
        return "\n".join(lines) + "\n"


def _generate_instance(generator: dict, sample_size: int, data_seed: int):
    """Fresh (truth DAG, dataset) pair for one repetition."""
    mode = generator["mode"]
    if mode == "sparse":
        _, truth, data = sparse_random_instance(
            n_factors=int(generator.get("n_factors", 10)),
            n_stocks=int(generator.get("n_stocks", 20)),
            p=float(generator.get("p", 0.3)),
            T=sample_size,
            seed=data_seed,
            signed_loadings=bool(generator.get("signed_loadings", False)),
        )
        return truth, data
    spec = market_factor_spec(
        derive_seed(data_seed, 0),
        n_stocks=int(generator.get("n_stocks", 10)),
        positive_loadings=bool(generator.get("positive_loadings", False)),
        lag=int(generator.get("lag", 1)),
    )
    data = simulate_dataset(spec, sample_size, derive_seed(data_seed, 1))
    return ground_truth_dag(spec), data


def _sweep_rep(args) -> tuple[int, int, dict[str, float]]:
    (cell_idx, rep, generator, sample_size, learner, criterion, use_boot,
     replicates, threshold, data_seed, learn_seed, max_iterations, restarts,
     smoothing, penalty) = args
    truth, data = _generate_instance(generator, sample_size, data_seed)
    options = LearnOptions(
        criterion=criterion,
        max_iterations=max_iterations,
        restarts=restarts,
        smoothing=smoothing,
        seed=learn_seed,
        penalty=penalty,
    )
    learn = learn_sbcn if learner == "sbcn" else learn_bn
    model = learn(data, options)
    if use_boot:
        report = edge_confidence(data, options, replicates, model=model, learner=learn)
        model = prune(model, report, data, threshold, smoothing)
    stats = arc_contingency(model.dag, truth)
    return cell_idx, rep, {f: getattr(stats, f) for f in RATE_FIELDS}


def run_sweep(config: SweepConfig, threads: int | None = None, log=None) -> SweepReport:
    """Evaluate every (learner, criterion, bootstrap, sample size) cell.

    Datasets are shared across cells at the same (sample size, repetition)
    so criteria and learners are compared on identical data and search
    seeds.  Repetitions fan out over worker processes; results are reduced
    in a fixed order, so the report does not depend on ``threads``.
    """
    cells = [
        (learner, criterion, boot, size)
        for learner in config.learners
        for criterion in config.criteria
        for boot in config.bootstrap
        for size in config.sample_sizes
    ]
    tasks = []
    for cell_idx, (learner, criterion, boot, size) in enumerate(cells):
        size_idx = config.sample_sizes.index(size)
        for rep in range(config.repetitions):
            tasks.append((
                cell_idx, rep, config.generator, size, learner, criterion, boot,
                config.bootstrap_replicates, config.confidence_threshold,
                derive_seed(config.seed, 0, size_idx, rep),
                derive_seed(config.seed, 1, size_idx, rep),
                config.max_iterations, config.restarts, config.smoothing,
                config.penalty,
            ))

    results: dict[tuple[int, int], dict[str, float]] = {}
    if threads is not None and threads <= 1:
        for task in tasks:
            cell_idx, rep, rates = _sweep_rep(task)
            results[(cell_idx, rep)] = rates
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for cell_idx, rep, rates in pool.map(_sweep_rep, tasks, chunksize=1):
                results[(cell_idx, rep)] = rates

    rows = []
    for cell_idx, (learner, criterion, boot, size) in enumerate(cells):
        samples = {f: np.array([results[(cell_idx, r)][f] for r in range(config.repetitions)])
                   for f in RATE_FIELDS}
        means = {f: float(np.mean(samples[f])) for f in RATE_FIELDS}
        stderrs = {
            f: float(np.std(samples[f], ddof=1) / np.sqrt(config.repetitions))
            if config.repetitions > 1
            else 0.0
            for f in RATE_FIELDS
        }
        row = SweepRow(learner, criterion, boot, size, means, stderrs, config.repetitions, config.seed)
        rows.append(row)
        if log is not None:
            log(
                f"cell learner={learner} criterion={criterion} bootstrap={'on' if boot else 'off'} "
                f"N={size}: fp_of_inferred={means['fp_rate_of_inferred']:.3f} "
                f"fn_of_true={means['fn_rate_of_true']:.3f}"
            )
    return SweepReport(tuple(rows))
