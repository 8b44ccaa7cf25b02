"""Structure learning for binary causal networks.

Pipeline: filter candidate arcs by temporal priority and probability
raising (a prima facie causality test), then search the filtered space by
randomized hill climbing on a regularized likelihood score, and finally fit
conditional probability tables.  A baseline learner with the candidate
filter disabled (every ordered pair allowed) is provided for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import BinaryDataset, Cpt, Dag, SbcnModel
from .seeds import derive_seed

LOG_EPS = 1e-12  # floor for log(0) so scores stay finite

CRITERIA = ("bic", "aic")
TP_MODES = ("rank", "marginal")
PENALTIES = ("arcs", "parameters")


class EmptyStratumError(ValueError):
    """A conditional probability was requested on an empty stratum."""


@dataclass(frozen=True)
class LearnOptions:
    """Knobs for the structure search.

    ``criterion`` picks the regularization: "bic" penalizes complexity by
    ln(sample size), "aic" by a constant.  The "aic" score follows the
    convention of weighting the log-likelihood by 1 rather than 2; set
    ``aic_conventional`` for the textbook 2*LL - 2k form.
    ``penalty`` measures complexity as the arc count ("arcs", the default)
    or as the number of free CPT parameters ("parameters", which charges
    an arc more the larger the child's table it doubles, and so resists
    runaway parent accumulation on small samples).
    ``smoothing`` is the pseudo-count used when fitting the exported CPTs
    (scoring always uses the unsmoothed maximum-likelihood fit).
    ``tp_mode`` selects the temporal-priority test: explicit ranks
    ("rank", the default) or strict marginal ordering ("marginal").
    """

    criterion: str = "bic"
    max_iterations: int = 10000
    restarts: int = 0
    smoothing: float = 1.0
    seed: int = 0
    aic_conventional: bool = False
    tp_mode: str = "rank"
    penalty: str = "arcs"

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}, got {self.criterion!r}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.restarts < 0:
            raise ValueError("restarts must be >= 0")
        if self.smoothing < 0:
            raise ValueError("smoothing must be >= 0")
        if self.tp_mode not in TP_MODES:
            raise ValueError(f"tp_mode must be one of {TP_MODES}, got {self.tp_mode!r}")
        if self.penalty not in PENALTIES:
            raise ValueError(f"penalty must be one of {PENALTIES}, got {self.penalty!r}")


@dataclass(frozen=True)
class EdgeSet:
    """Candidate arcs for the search: a superset, not necessarily acyclic."""

    n: int
    edges: frozenset[tuple[int, int]]

    def __init__(self, n: int, edges=()):
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "edges", frozenset((int(u), int(v)) for u, v in edges))
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={self.n}")


def empirical_marginal(dataset: BinaryDataset, i: int) -> float:
    """Unsmoothed P(variable i = 1)."""
    if not 0 <= i < dataset.n:
        raise IndexError(f"variable index {i} out of range for n={dataset.n}")
    return float(dataset.column(i).sum()) / dataset.m


def empirical_conditional(dataset: BinaryDataset, v: int, u: int, u_value: int) -> float:
    """Unsmoothed P(v = 1 | u = u_value) over the matching rows."""
    if v == u:
        raise ValueError("conditioning variable must differ from the target")
    if u_value not in (0, 1):
        raise ValueError("u_value must be 0 or 1")
    mask = dataset.column(u) == u_value
    total = int(mask.sum())
    if total == 0:
        raise EmptyStratumError(
            f"no rows with variable {u} = {u_value}; conditional undefined"
        )
    return float(dataset.column(v)[mask].sum()) / total


def prima_facie_edges(dataset: BinaryDataset, tp_mode: str = "rank") -> EdgeSet:
    """Candidate arcs passing temporal priority and strict probability raising.

    Arc (v, u) survives iff v may precede u (rank(v) <= rank(u), or in
    marginal mode P(v) > P(u)), both marginals are nondegenerate, and
    P(u=1 | v=1) > P(u=1 | v=0) strictly.  When equal-rank variables raise
    each other, only the direction with the larger raising margin is kept
    (ties go to the lower-index source), so the output never carries
    2-cycles between equally ranked variables.
    """
    if tp_mode not in TP_MODES:
        raise ValueError(f"tp_mode must be one of {TP_MODES}, got {tp_mode!r}")
    values = dataset.values.astype(np.float64)
    m, n = values.shape
    ones = values.sum(axis=0)
    nondeg = (ones > 0) & (ones < m)

    # joint counts: n11[v, u] = #rows with v=1 and u=1
    n11 = values.T @ values
    with np.errstate(divide="ignore", invalid="ignore"):
        p_given_1 = n11 / ones[:, None]
        p_given_0 = (ones[None, :] - n11) / (m - ones)[:, None]
    margin = p_given_1 - p_given_0  # margin[v, u]: how much v=1 raises u

    rank = np.asarray(dataset.rank)
    if tp_mode == "rank":
        priority = rank[:, None] <= rank[None, :]
    else:
        marg = ones / m
        priority = marg[:, None] > marg[None, :]

    ok = priority & nondeg[:, None] & nondeg[None, :] & (margin > 0)
    np.fill_diagonal(ok, False)

    edges = set()
    for v, u in zip(*np.nonzero(ok)):
        v, u = int(v), int(u)
        if ok[u, v] and rank[v] == rank[u]:
            # bidirectional conflict: keep the stronger raising direction
            if margin[v, u] < margin[u, v]:
                continue
            if margin[v, u] == margin[u, v] and v > u:
                continue
        edges.add((v, u))
    return EdgeSet(n, edges)


def _node_counts(vi: np.ndarray, col_f: np.ndarray, parents: tuple[int, ...]):
    """Per-configuration (total, ones) counts for one node given its parents."""
    if parents:
        idx = vi[:, parents] @ (1 << np.arange(len(parents), dtype=np.int64))
        size = 1 << len(parents)
        total = np.bincount(idx, minlength=size).astype(np.float64)
        ones = np.bincount(idx, weights=col_f, minlength=size)
    else:
        total = np.array([float(len(col_f))])
        ones = np.array([float(col_f.sum())])
    return total, ones


def _node_ll(vi: np.ndarray, col_f: np.ndarray, parents: tuple[int, ...]) -> float:
    total, ones = _node_counts(vi, col_f, parents)
    mask = total > 0
    t = total[mask]
    c1 = ones[mask]
    p = c1 / t
    return float(
        np.sum(c1 * np.log(np.maximum(p, LOG_EPS)) + (t - c1) * np.log(np.maximum(1.0 - p, LOG_EPS)))
    )


class _ScoreTable:
    """Caches per-node log-likelihood terms for one dataset."""

    def __init__(self, dataset: BinaryDataset):
        self.vi = dataset.values.astype(np.int64)
        self.cols = [self.vi[:, j].astype(np.float64) for j in range(dataset.n)]
        self._cache: dict[tuple[int, tuple[int, ...]], float] = {}

    def node_ll(self, v: int, parents: tuple[int, ...]) -> float:
        key = (v, parents)
        hit = self._cache.get(key)
        if hit is None:
            hit = _node_ll(self.vi, self.cols[v], parents)
            self._cache[key] = hit
        return hit


def log_likelihood(dataset: BinaryDataset, dag: Dag) -> float:
    """Maximum-likelihood log-likelihood of the data under the structure.

    Uses unsmoothed per-configuration frequencies; log(0) terms are floored
    at log(1e-12) so the result is always finite.
    """
    if dag.n != dataset.n:
        raise ValueError(f"structure has {dag.n} nodes, dataset has {dataset.n}")
    vi = dataset.values.astype(np.int64)
    return sum(
        _node_ll(vi, vi[:, v].astype(np.float64), dag.parents(v)) for v in range(dag.n)
    )


def _score_weights(criterion: str, m: int, aic_conventional: bool) -> tuple[float, float]:
    """(log-likelihood weight, per-complexity-unit penalty)."""
    if criterion == "bic":
        return 2.0, float(np.log(m))
    if aic_conventional:
        return 2.0, 2.0
    return 1.0, 2.0


def _complexity(parent_counts, penalty: str) -> float:
    """Model complexity k: arc count, or free CPT parameters (2^|parents|
    Bernoulli entries per node)."""
    if penalty == "arcs":
        return float(sum(parent_counts))
    return float(sum(2**q for q in parent_counts))


def regularized_score(
    dataset: BinaryDataset,
    dag: Dag,
    criterion: str = "bic",
    aic_conventional: bool = False,
    penalty: str = "arcs",
) -> float:
    """Penalized likelihood score; higher is better.

    bic: 2*LL - k*ln(m).  aic: LL - 2k (or 2*LL - 2k with
    ``aic_conventional``).  k is the arc count, or the free-parameter
    count with ``penalty="parameters"``.
    """
    if criterion not in CRITERIA:
        raise ValueError(f"criterion must be one of {CRITERIA}, got {criterion!r}")
    if penalty not in PENALTIES:
        raise ValueError(f"penalty must be one of {PENALTIES}, got {penalty!r}")
    w, unit = _score_weights(criterion, dataset.m, aic_conventional)
    k = _complexity([len(dag.parents(v)) for v in range(dag.n)], penalty)
    return w * log_likelihood(dataset, dag) - unit * k


def fit_cpts(dataset: BinaryDataset, dag: Dag, smoothing: float = 1.0) -> SbcnModel:
    """Estimate each node's CPT by (optionally smoothed) relative frequency.

    Entry for a configuration with t rows and c ones is
    (c + smoothing) / (t + 2*smoothing); an unobserved configuration with
    zero smoothing gets 0.5.
    """
    if dag.n != dataset.n:
        raise ValueError(f"structure has {dag.n} nodes, dataset has {dataset.n}")
    if smoothing < 0:
        raise ValueError("smoothing must be >= 0")
    vi = dataset.values.astype(np.int64)
    cpts = []
    for v in range(dag.n):
        parents = dag.parents(v)
        total, ones = _node_counts(vi, vi[:, v].astype(np.float64), parents)
        denom = total + 2.0 * smoothing
        with np.errstate(divide="ignore", invalid="ignore"):
            table = (ones + smoothing) / denom
        table[denom == 0] = 0.5
        cpts.append(Cpt(v, parents, table))
    return SbcnModel(dag, cpts, dataset.rank, names=dataset.names)


def _reaches(children: list[set[int]], src: int, dst: int) -> bool:
    """True iff dst is reachable from src along directed edges."""
    if src == dst:
        return True
    stack = [src]
    seen = {src}
    while stack:
        node = stack.pop()
        for nxt in children[node]:
            if nxt == dst:
                return True
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return False


def _climb_once(
    table: _ScoreTable,
    candidates: list[tuple[int, int]],
    options: LearnOptions,
    seed: int,
) -> tuple[frozenset[tuple[int, int]], float]:
    m, n = table.vi.shape
    w, unit = _score_weights(options.criterion, m, options.aic_conventional)

    def node_cost(q: int) -> float:
        return float(q) if options.penalty == "arcs" else float(2**q)

    parents: list[tuple[int, ...]] = [() for _ in range(n)]
    node_ll = [table.node_ll(v, ()) for v in range(n)]
    children: list[set[int]] = [set() for _ in range(n)]
    current: set[tuple[int, int]] = set()
    score = w * sum(node_ll) - unit * n * node_cost(0)
    if not candidates:
        return frozenset(), score

    rng = np.random.default_rng(seed)
    n_cand = len(candidates)
    buffer = rng.integers(0, n_cand, size=4096)
    buf_pos = 0

    proposals = 0
    rejects_in_a_row = 0
    max_proposals = 100 * options.max_iterations
    while rejects_in_a_row < options.max_iterations and proposals < max_proposals:
        # uniform pick over valid neighbors: removals are always valid,
        # additions only when acyclic; cycle-creating picks are redrawn
        for _ in range(8 * n_cand):
            if buf_pos == len(buffer):
                buffer = rng.integers(0, n_cand, size=4096)
                buf_pos = 0
            u, v = candidates[buffer[buf_pos]]
            buf_pos += 1
            adding = (u, v) not in current
            if not adding or not _reaches(children, v, u):
                break
        else:
            valid = [
                e for e in candidates if e in current or not _reaches(children, e[1], e[0])
            ]
            if not valid:
                break
            u, v = valid[rng.integers(0, len(valid))]
            adding = (u, v) not in current

        proposals += 1
        if adding:
            new_parents = tuple(sorted(parents[v] + (u,)))
        else:
            new_parents = tuple(p for p in parents[v] if p != u)
        delta = w * (table.node_ll(v, new_parents) - node_ll[v]) - unit * (
            node_cost(len(new_parents)) - node_cost(len(parents[v]))
        )
        if delta > 0:
            parents[v] = new_parents
            node_ll[v] = table.node_ll(v, new_parents)
            if adding:
                current.add((u, v))
                children[u].add(v)
            else:
                current.discard((u, v))
                children[u].discard(v)
            score += delta
            rejects_in_a_row = 0
        else:
            rejects_in_a_row += 1
    return frozenset(current), score


def hill_climb(dataset: BinaryDataset, allowed: EdgeSet, options: LearnOptions) -> Dag:
    """Randomized local search over arc additions/removals within ``allowed``.

    Starts from the empty graph; each step proposes one uniformly chosen
    valid neighbor (single arc toggled, staying inside ``allowed`` and
    acyclic) and accepts it only on strict score improvement.  A run stops
    after ``max_iterations`` consecutive rejections or 100x that many total
    proposals; with restarts, the best-scoring run wins (ties keep the
    earliest restart).
    """
    if allowed.n != dataset.n:
        raise ValueError(f"candidate set has {allowed.n} nodes, dataset has {dataset.n}")
    table = _ScoreTable(dataset)
    candidates = sorted(allowed.edges)
    best_edges: frozenset[tuple[int, int]] = frozenset()
    best_score = -np.inf
    for restart in range(options.restarts + 1):
        edges, score = _climb_once(table, candidates, options, derive_seed(options.seed, restart))
        if score > best_score:
            best_edges, best_score = edges, score
    return Dag(dataset.n, best_edges)


def learn_sbcn(dataset: BinaryDataset, options: LearnOptions = LearnOptions()) -> SbcnModel:
    """Full pipeline: prima facie filtering, hill climbing, CPT fitting."""
    allowed = prima_facie_edges(dataset, tp_mode=options.tp_mode)
    dag = hill_climb(dataset, allowed, options)
    return fit_cpts(dataset, dag, options.smoothing)


def learn_bn(dataset: BinaryDataset, options: LearnOptions = LearnOptions()) -> SbcnModel:
    """Baseline learner: same search and scoring, but every ordered pair is
    a candidate (no temporal or probability-raising constraints)."""
    n = dataset.n
    allowed = EdgeSet(n, [(u, v) for u in range(n) for v in range(n) if u != v])
    dag = hill_climb(dataset, allowed, options)
    return fit_cpts(dataset, dag, options.smoothing)
