"""Nonparametric bootstrap for arc confidence and confidence-based pruning.

Each replicate relearns the structure on rows resampled with replacement;
an arc's confidence is the fraction of replicates that retrieve it.  Arcs
below a confidence threshold are pruned from the model and the CPTs are
refit on the original data for the reduced structure.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .learn import LearnOptions, fit_cpts, learn_bn, learn_sbcn
from .model import BinaryDataset, Dag, ModelSchemaError, SbcnModel
from .seeds import derive_seed


@dataclass(frozen=True)
class BootstrapReport:
    """Arc retrieval frequencies over ``replicates`` bootstrap reruns."""

    replicates: int
    confidence: dict[tuple[int, int], float]
    threshold: float = 0.5

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        for edge, c in self.confidence.items():
            if not 0.0 <= c <= 1.0:
                raise ValueError(f"confidence for arc {edge} is {c}, outside [0, 1]")

    def to_json(self) -> str:
        obj = {
            "replicates": self.replicates,
            "threshold": self.threshold,
            "confidence": sorted([u, v, float(c)] for (u, v), c in self.confidence.items()),
        }
        return json.dumps(obj, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "BootstrapReport":
        try:
            obj = json.loads(text)
            return cls(
                int(obj["replicates"]),
                {(int(u), int(v)): float(c) for u, v, c in obj["confidence"]},
                float(obj["threshold"]),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ModelSchemaError(f"malformed bootstrap report JSON: {exc!r}") from None


def resample(dataset: BinaryDataset, seed: int) -> BinaryDataset:
    """Rows drawn i.i.d. uniformly with replacement; names and ranks kept."""
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, dataset.m, size=dataset.m)
    return BinaryDataset(dataset.values[idx], dataset.names, dataset.rank)


def _replicate_edges(args) -> frozenset[tuple[int, int]]:
    dataset, options, learner_name, b = args
    learner = learn_sbcn if learner_name == "sbcn" else learn_bn
    rep_data = resample(dataset, derive_seed(options.seed, 1, b))
    rep_model = learner(rep_data, replace(options, seed=derive_seed(options.seed, 2, b)))
    return rep_model.dag.edges


def edge_confidence(
    dataset: BinaryDataset,
    options: LearnOptions,
    replicates: int = 100,
    model: SbcnModel | None = None,
    learner=learn_sbcn,
    threads: int | None = 1,
) -> BootstrapReport:
    """Arc retrieval frequency over ``replicates`` resampled relearns.

    The report covers every arc of the model learned on the original data
    (pass ``model`` to reuse one already learned with the same options)
    plus any arc retrieved in at least one replicate.  Replicate seeds are
    derived from ``options.seed``, and aggregation is a fixed-order
    reduction, so the report is reproducible and independent of ``threads``
    (worker processes; None uses all cores).  ``learner`` must match the
    procedure that produced ``model`` (the unconstrained baseline can be
    bootstrapped by passing ``learn_bn``).
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    if learner not in (learn_sbcn, learn_bn):
        raise ValueError("learner must be learn_sbcn or learn_bn")
    if model is None:
        model = learner(dataset, options)
    learner_name = "sbcn" if learner is learn_sbcn else "bn"
    tasks = [(dataset, options, learner_name, b) for b in range(replicates)]
    if threads is not None and threads <= 1:
        edge_sets = [_replicate_edges(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            edge_sets = list(pool.map(_replicate_edges, tasks))
    counts: dict[tuple[int, int], int] = {e: 0 for e in sorted(model.dag.edges)}
    for edges in edge_sets:
        for e in sorted(edges):
            counts[e] = counts.get(e, 0) + 1
    confidence = {e: c / replicates for e, c in counts.items()}
    return BootstrapReport(replicates, confidence)


def prune(
    model: SbcnModel,
    report: BootstrapReport,
    dataset: BinaryDataset,
    threshold: float = 0.5,
    smoothing: float = 1.0,
) -> SbcnModel:
    """Drop arcs with confidence below ``threshold`` and refit the CPTs.

    Arcs missing from the report count as confidence 0.  Keeping is
    inclusive: an arc exactly at the threshold survives.  CPTs are refit on
    the original data because removing a parent changes table dimensions.
    The surviving arcs' confidences are stored on the returned model.
    """
    kept = {e for e in model.dag.edges if report.confidence.get(e, 0.0) >= threshold}
    pruned = fit_cpts(dataset, Dag(model.n, kept), smoothing)
    confidence = {e: report.confidence.get(e, 0.0) for e in kept}
    return SbcnModel(pruned.dag, pruned.cpts, model.rank, confidence, model.names)
