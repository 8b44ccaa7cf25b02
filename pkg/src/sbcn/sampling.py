"""Ancestral sampling and interventional clamping.

Clamping rewrites a node's CPT so it takes a fixed value with probability
one.  It is an intervention, not an observation: descendants respond to
the forced value, ancestors keep their original distributions.
"""

from __future__ import annotations

import heapq

import numpy as np

from .model import Cpt, SbcnModel


def topological_order(dag) -> list[int]:
    """Parents-before-children order; ties broken by lowest node index."""
    indeg = [0] * dag.n
    children: list[list[int]] = [[] for _ in range(dag.n)]
    for u, v in dag.edges:
        children[u].append(v)
        indeg[v] += 1
    ready = [v for v in range(dag.n) if indeg[v] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        u = heapq.heappop(ready)
        order.append(u)
        for v in children[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(ready, v)
    if len(order) != dag.n:
        raise ValueError("graph contains a directed cycle")
    return order


def ancestral_sample(model: SbcnModel, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` scenarios, one per row, as a (count, n) 0/1 matrix.

    Nodes are visited in topological order; each node's value is Bernoulli
    with the CPT probability for its already-sampled parent configuration.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    n = model.n
    rng = np.random.default_rng(seed)
    uniforms = rng.random((count, n))
    out = np.zeros((count, n), dtype=np.uint8)
    for v in topological_order(model.dag):
        cpt = model.cpt(v)
        if cpt.parents:
            idx = out[:, list(cpt.parents)].astype(np.int64) @ (
                1 << np.arange(len(cpt.parents), dtype=np.int64)
            )
            p = cpt.table[idx]
        else:
            p = cpt.table[0]
        out[:, v] = uniforms[:, v] < p
    return out


def clamp(model: SbcnModel, assignments: dict[int, int]) -> SbcnModel:
    """Force each assigned node to its value with probability one.

    Only the assigned nodes' CPTs change (every row becomes 0 or 1); the
    structure and all other tables are untouched.
    """
    for node, value in assignments.items():
        if not 0 <= node < model.n:
            raise ValueError(f"node {node} out of range for n={model.n}")
        if value not in (0, 1):
            raise ValueError(f"clamp value for node {node} must be 0 or 1, got {value!r}")
    if not assignments:
        return model
    cpts = []
    for cpt in model.cpts:
        if cpt.node in assignments:
            forced = float(assignments[cpt.node])
            cpts.append(Cpt(cpt.node, cpt.parents, np.full_like(cpt.table, forced)))
        else:
            cpts.append(cpt)
    return SbcnModel(model.dag, cpts, model.rank, model.confidence, model.names)


def stress_sample(
    model: SbcnModel, risky_assignment: dict[int, int], count: int, seed: int
) -> np.ndarray:
    """Scenarios from the model clamped to a risky configuration."""
    return ancestral_sample(clamp(model, risky_assignment), count, seed)
