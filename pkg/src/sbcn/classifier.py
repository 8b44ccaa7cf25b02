"""Scenario risk labeling and decision-tree extraction of risky paths.

Scenarios are scored by how much of the portfolio moves up; the bottom
quantile is labeled risky.  A binary classification tree over the factor
variables then turns the labels into explicit factor configurations (the
root-to-leaf paths of risky leaves) that can be clamped for stress
sampling.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from .model import ModelSchemaError

RISKY = "risky"
PROFITABLE = "profitable"


@dataclass(frozen=True, eq=False)
class Portfolio:
    """Long-only holdings: a weight per stock column of the scenario matrix."""

    stock_indices: tuple[int, ...]
    weights: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, Portfolio):
            return NotImplemented
        return self.stock_indices == other.stock_indices and np.array_equal(
            self.weights, other.weights
        )

    def __init__(self, stock_indices, weights=None):
        object.__setattr__(self, "stock_indices", tuple(int(i) for i in stock_indices))
        if weights is None:
            weights = np.ones(len(self.stock_indices))
        arr = np.asarray(weights, dtype=np.float64).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "weights", arr)
        if self.weights.shape != (len(self.stock_indices),):
            raise ValueError("one weight per stock index required")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")
        if self.weights.sum() <= 0:
            raise ValueError("weights must sum to a positive amount")


def up_count(scenario: np.ndarray, portfolio: Portfolio) -> float:
    """Total weight of portfolio stocks that are up in one scenario."""
    scenario = np.asarray(scenario)
    if scenario.ndim != 1:
        raise ValueError("up_count takes a single scenario row")
    if max(portfolio.stock_indices, default=-1) >= scenario.shape[0]:
        raise ValueError("scenario does not cover all portfolio stocks")
    return float(scenario[list(portfolio.stock_indices)] @ portfolio.weights)


def up_counts(scenarios: np.ndarray, portfolio: Portfolio) -> np.ndarray:
    """Vectorized up_count over a scenario matrix."""
    scenarios = np.asarray(scenarios)
    return scenarios[:, list(portfolio.stock_indices)].astype(np.float64) @ portfolio.weights


def label_scenarios(
    scenarios: np.ndarray, portfolio: Portfolio, risky_fraction: float = 0.10
) -> np.ndarray:
    """Boolean labels, True = risky, for the bottom quantile by up measure.

    The ceil(risky_fraction * N) scenarios with the smallest up measure are
    risky; every scenario tied with the cut value is included.
    """
    if not 0.0 <= risky_fraction <= 1.0:
        raise ValueError("risky_fraction must lie in [0, 1]")
    measure = up_counts(scenarios, portfolio)
    count = measure.shape[0]
    if count < 1:
        raise ValueError("need at least one scenario to label")
    k = math.ceil(risky_fraction * count)
    if k == 0:
        return np.zeros(count, dtype=bool)
    cut = np.sort(measure)[k - 1]
    return measure <= cut


def implied_up_cut(
    scenarios: np.ndarray, portfolio: Portfolio, risky_fraction: float = 0.10
) -> float | None:
    """The up-measure value at the risky/profitable boundary (None if no
    scenario is labeled risky)."""
    if not 0.0 <= risky_fraction <= 1.0:
        raise ValueError("risky_fraction must lie in [0, 1]")
    measure = up_counts(scenarios, portfolio)
    k = math.ceil(risky_fraction * measure.shape[0])
    if k == 0:
        return None
    return float(np.sort(measure)[k - 1])


@dataclass(frozen=True)
class Leaf:
    label: str
    counts: tuple[int, int]  # (profitable, risky) training rows


@dataclass(frozen=True)
class Split:
    feature: int
    left: Union["Split", Leaf]  # feature value 0
    right: Union["Split", Leaf]  # feature value 1


@dataclass(frozen=True)
class DecisionTree:
    """Binary classification tree over factor columns.

    Feature indices refer to columns of the training feature matrix; no
    feature repeats along any root-to-leaf path.
    """

    root: Union[Split, Leaf]
    feature_names: tuple[str, ...] = ()

    def to_json(self) -> str:
        return json.dumps(
            {"feature_names": list(self.feature_names), "root": _node_to_obj(self.root)},
            indent=2,
        ) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "DecisionTree":
        try:
            obj = json.loads(text)
            return cls(_node_from_obj(obj["root"]), tuple(obj.get("feature_names", ())))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ModelSchemaError(f"malformed tree JSON: {exc!r}") from None

    def to_text(self) -> str:
        lines: list[str] = []
        self._render(self.root, 0, lines)
        return "\n".join(lines) + "\n"

    def _render(self, node, depth: int, lines: list[str]) -> None:
        pad = "  " * depth
        if isinstance(node, Leaf):
            lines.append(
                f"{pad}-> {node.label} (profitable={node.counts[0]}, risky={node.counts[1]})"
            )
            return
        name = (
            self.feature_names[node.feature]
            if node.feature < len(self.feature_names)
            else f"x{node.feature}"
        )
        lines.append(f"{pad}{name} = 0:")
        self._render(node.left, depth + 1, lines)
        lines.append(f"{pad}{name} = 1:")
        self._render(node.right, depth + 1, lines)


def _node_to_obj(node):
    if isinstance(node, Leaf):
        return {"label": node.label, "counts": list(node.counts)}
    return {
        "feature": node.feature,
        "left": _node_to_obj(node.left),
        "right": _node_to_obj(node.right),
    }


def _node_from_obj(obj):
    if "label" in obj:
        if obj["label"] not in (RISKY, PROFITABLE):
            raise ModelSchemaError(f"unknown leaf label {obj['label']!r}")
        return Leaf(obj["label"], tuple(int(c) for c in obj["counts"]))
    return Split(int(obj["feature"]), _node_from_obj(obj["left"]), _node_from_obj(obj["right"]))


def _gini(n_profitable: float, n_risky: float) -> float:
    total = n_profitable + n_risky
    if total == 0:
        return 0.0
    p = n_risky / total
    return 2.0 * p * (1.0 - p)


def _majority_leaf(labels: np.ndarray) -> Leaf:
    n_risky = int(labels.sum())
    n_prof = int(labels.shape[0] - n_risky)
    # ties go to the non-stress label
    return Leaf(RISKY if n_risky > n_prof else PROFITABLE, (n_prof, n_risky))


# On pure-noise labels the best empirical split still shows a small positive
# gain (weighted child impurity can only shrink); a sampling-noise floor of
# this many chi-square units keeps such splits out.
NOISE_FLOOR_CHI2 = 7.0


def learn_tree(
    features: np.ndarray,
    labels: np.ndarray,
    max_depth: int | None = None,
    min_leaf: int = 5,
    impurity: str = "gini",
    min_gain: float | None = None,
) -> DecisionTree:
    """Greedy binary CART on 0/1 factor features.

    At each node the split with the largest Gini impurity decrease wins
    (ties to the lowest feature index); growth stops on purity, depth,
    undersized children, or when no split clears the gain floor.  By
    default the floor scales as NOISE_FLOOR_CHI2 * node impurity / node
    rows, the magnitude a best-of-noise split reaches by chance; pass
    ``min_gain`` (0 allows any improvement) to override.  Leaves carry the
    majority label with ties resolved to profitable.
    """
    if impurity != "gini":
        raise ValueError(f"only gini impurity is supported, got {impurity!r}")
    features = np.asarray(features)
    labels = np.asarray(labels).astype(bool)
    if features.ndim != 2:
        raise ValueError("features must be a matrix, one row per scenario")
    if labels.shape != (features.shape[0],):
        raise ValueError("one label per feature row required")
    if min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    n_features = features.shape[1]
    if max_depth is None:
        max_depth = n_features
    root = _grow(
        features.astype(bool), labels, frozenset(range(n_features)), max_depth, min_leaf, min_gain
    )
    return DecisionTree(root)


def _grow(
    features: np.ndarray,
    labels: np.ndarray,
    usable: frozenset[int],
    depth_left: int,
    min_leaf: int,
    min_gain: float | None,
) -> Union[Split, Leaf]:
    total = labels.shape[0]
    n_risky = int(labels.sum())
    if n_risky in (0, total) or depth_left == 0 or not usable or total < 2 * min_leaf:
        return _majority_leaf(labels)

    parent_impurity = _gini(total - n_risky, n_risky)
    floor = min_gain if min_gain is not None else NOISE_FLOOR_CHI2 * parent_impurity / total
    best_gain = floor
    best_feature = -1
    for f in sorted(usable):
        right_mask = features[:, f]
        n_right = int(right_mask.sum())
        n_left = total - n_right
        if n_left < min_leaf or n_right < min_leaf:
            continue
        risky_right = int(labels[right_mask].sum())
        risky_left = n_risky - risky_right
        weighted = (
            n_left * _gini(n_left - risky_left, risky_left)
            + n_right * _gini(n_right - risky_right, risky_right)
        ) / total
        gain = parent_impurity - weighted
        if gain > best_gain + 1e-15:
            best_gain = gain
            best_feature = f
    if best_feature < 0:
        return _majority_leaf(labels)

    mask = features[:, best_feature]
    remaining = usable - {best_feature}
    return Split(
        best_feature,
        _grow(features[~mask], labels[~mask], remaining, depth_left - 1, min_leaf, min_gain),
        _grow(features[mask], labels[mask], remaining, depth_left - 1, min_leaf, min_gain),
    )


def predict(tree: DecisionTree, factor_assignment) -> str:
    """Label for an assignment covering every factor on the traversed path.

    Accepts a mapping from feature index to 0/1 or a full feature vector.
    """
    if isinstance(factor_assignment, Mapping):
        getter = factor_assignment
    else:
        getter = {i: v for i, v in enumerate(np.asarray(factor_assignment).ravel())}
    node = tree.root
    while isinstance(node, Split):
        if node.feature not in getter:
            name = (
                tree.feature_names[node.feature]
                if node.feature < len(tree.feature_names)
                else f"feature {node.feature}"
            )
            raise ValueError(f"assignment is missing a value for {name}")
        node = node.right if getter[node.feature] else node.left
    return node.label


def risky_paths(tree: DecisionTree) -> list[dict[int, int]]:
    """One partial factor assignment per risky leaf, in left-to-right order."""
    paths: list[dict[int, int]] = []

    def walk(node, prefix: dict[int, int]) -> None:
        if isinstance(node, Leaf):
            if node.label == RISKY:
                paths.append(dict(prefix))
            return
        walk(node.left, {**prefix, node.feature: 0})
        walk(node.right, {**prefix, node.feature: 1})

    walk(tree.root, {})
    return paths
