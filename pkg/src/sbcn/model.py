"""Core domain types: binary datasets, DAGs, CPTs, causal network models.

All types are immutable after construction and validate their invariants
eagerly, raising ``ValueError`` on malformed input.  Serialization helpers
round-trip exactly: CSV for datasets, JSON for models (floats are written
with full shortest-round-trip precision).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

Edge = tuple[int, int]

#: A scenario is one joint assignment of all model variables; batches of
#: scenarios are (count, n) uint8 arrays with one scenario per row.
Scenario = np.ndarray


class CsvFormatError(ValueError):
    """Malformed dataset CSV; message carries the offending row/column."""


class ModelSchemaError(ValueError):
    """Model or report JSON does not match the expected schema."""


def has_cycle(n: int, edges) -> bool:
    """Return True iff the directed graph on nodes 0..n-1 has a cycle.

    Kahn-style peeling: repeatedly remove nodes of in-degree zero; a cycle
    exists iff some node is never removed.  Self-loops count as cycles.
    """
    indeg = [0] * n
    children: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        if u == v:
            return True
        children[u].append(v)
        indeg[v] += 1
    stack = [v for v in range(n) if indeg[v] == 0]
    seen = 0
    while stack:
        u = stack.pop()
        seen += 1
        for v in children[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                stack.append(v)
    return seen != n


def _as_binary_matrix(values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        bad = np.argwhere(~np.isin(arr, (0, 1)))[0]
        raise ValueError(
            f"cell at row {bad[0]}, column {bad[1]} is {arr[bad[0], bad[1]]!r}; "
            "dataset cells must be 0 or 1"
        )
    out = arr.astype(np.uint8)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class BinaryDataset:
    """m observations of n binary variables, with a temporal rank per variable.

    ``rank`` encodes temporal priority (lower rank = earlier); it is supplied
    with the data, never inferred.
    """

    values: np.ndarray
    names: tuple[str, ...]
    rank: tuple[int, ...]

    def __eq__(self, other):
        if not isinstance(other, BinaryDataset):
            return NotImplemented
        return (
            self.names == other.names
            and self.rank == other.rank
            and np.array_equal(self.values, other.values)
        )

    def __init__(self, values, names, rank):
        object.__setattr__(self, "values", _as_binary_matrix(values))
        object.__setattr__(self, "names", tuple(str(s) for s in names))
        object.__setattr__(self, "rank", tuple(int(r) for r in rank))
        m, n = self.values.shape
        if m < 1:
            raise ValueError("dataset needs at least one observation row")
        if len(self.names) != n or len(self.rank) != n:
            raise ValueError(
                f"{n} columns but {len(self.names)} names and {len(self.rank)} ranks"
            )
        if len(set(self.names)) != n:
            raise ValueError("variable names must be unique")
        if any(r < 0 for r in self.rank):
            raise ValueError("ranks must be nonnegative")

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def column(self, i: int) -> np.ndarray:
        return self.values[:, i]

    def to_csv(self) -> str:
        lines = [",".join(self.names)]
        lines.append("#rank:" + ",".join(str(r) for r in self.rank))
        for row in self.values:
            lines.append(",".join("1" if c else "0" for c in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "BinaryDataset":
        lines = [ln for ln in text.splitlines() if ln.strip() != ""]
        if not lines:
            raise CsvFormatError("empty CSV: expected a header row of variable names")
        names = [s.strip() for s in lines[0].split(",")]
        n = len(names)
        body_start = 1
        rank = [0] * n
        if len(lines) > 1 and lines[1].startswith("#rank:"):
            fields = lines[1][len("#rank:"):].split(",")
            if len(fields) != n:
                raise CsvFormatError(
                    f"row 2: #rank line has {len(fields)} entries, expected {n}"
                )
            try:
                rank = [int(f) for f in fields]
            except ValueError as exc:
                raise CsvFormatError(f"row 2: bad rank entry ({exc})") from None
            body_start = 2
        rows = []
        for ln_no, line in enumerate(lines[body_start:], start=body_start + 1):
            cells = line.split(",")
            if len(cells) != n:
                raise CsvFormatError(
                    f"row {ln_no}: {len(cells)} cells, expected {n}"
                )
            row = []
            for col_no, cell in enumerate(cells, start=1):
                cell = cell.strip()
                if cell not in ("0", "1"):
                    raise CsvFormatError(
                        f"row {ln_no}, column {col_no}: invalid cell {cell!r} "
                        "(must be 0 or 1)"
                    )
                row.append(int(cell))
            rows.append(row)
        if not rows:
            raise CsvFormatError("CSV has a header but no observation rows")
        return cls(np.array(rows, dtype=np.uint8), names, rank)


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph over nodes 0..n-1."""

    n: int
    edges: frozenset[Edge]

    def __init__(self, n: int, edges=()):
        edges = frozenset((int(u), int(v)) for u, v in edges)
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "edges", edges)
        if self.n < 0:
            raise ValueError("node count must be nonnegative")
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={self.n}")
        if has_cycle(self.n, edges):
            raise ValueError("graph contains a directed cycle")

    def parents(self, v: int) -> tuple[int, ...]:
        """In-neighbors of v in canonical ascending order."""
        return tuple(sorted(u for u, w in self.edges if w == v))

    def children(self, u: int) -> tuple[int, ...]:
        return tuple(sorted(w for p, w in self.edges if p == u))

    def with_edge(self, u: int, v: int) -> "Dag":
        return Dag(self.n, self.edges | {(u, v)})

    def without_edge(self, u: int, v: int) -> "Dag":
        return Dag(self.n, self.edges - {(u, v)})


@dataclass(frozen=True, eq=False)
class Cpt:
    """P(node = 1 | parent configuration) for each of the 2^|parents| configs.

    Parents are kept in ascending index order.  Configuration ``c`` indexes
    the table by reading the parent value vector as a binary number with the
    first (lowest-index) parent as the least significant bit.
    """

    node: int
    parents: tuple[int, ...]
    table: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, Cpt):
            return NotImplemented
        return (
            self.node == other.node
            and self.parents == other.parents
            and np.array_equal(self.table, other.table)
        )

    def __init__(self, node: int, parents, table):
        object.__setattr__(self, "node", int(node))
        object.__setattr__(self, "parents", tuple(int(p) for p in parents))
        arr = np.asarray(table, dtype=np.float64).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "table", arr)
        if list(self.parents) != sorted(set(self.parents)):
            raise ValueError("parents must be strictly ascending and unique")
        if self.table.ndim != 1 or len(self.table) != 2 ** len(self.parents):
            raise ValueError(
                f"table has {self.table.size} entries, expected {2 ** len(self.parents)}"
            )
        if self.table.size and ((self.table < 0.0) | (self.table > 1.0)).any():
            raise ValueError("table entries must lie in [0, 1]")

    def config_index(self, parent_values) -> int:
        """Index of the configuration where parent k has value parent_values[k]."""
        idx = 0
        for k, val in enumerate(parent_values):
            idx |= (1 if val else 0) << k
        return idx


@dataclass(frozen=True, eq=False)
class SbcnModel:
    """A learned causal network: structure, CPTs, ranks, optional confidences."""

    dag: Dag
    cpts: tuple[Cpt, ...]
    rank: tuple[int, ...]
    confidence: dict[Edge, float] | None = None
    names: tuple[str, ...] = ()

    def __eq__(self, other):
        if not isinstance(other, SbcnModel):
            return NotImplemented
        return (
            self.dag == other.dag
            and self.cpts == other.cpts
            and self.rank == other.rank
            and self.confidence == other.confidence
            and self.names == other.names
        )

    def __init__(self, dag, cpts, rank, confidence=None, names=None):
        object.__setattr__(self, "dag", dag)
        object.__setattr__(self, "cpts", tuple(sorted(cpts, key=lambda c: c.node)))
        object.__setattr__(self, "rank", tuple(int(r) for r in rank))
        conf = None
        if confidence is not None:
            conf = {(int(u), int(v)): float(c) for (u, v), c in dict(confidence).items()}
        object.__setattr__(self, "confidence", conf)
        if names is None:
            names = tuple(f"v{i}" for i in range(dag.n))
        object.__setattr__(self, "names", tuple(str(s) for s in names))
        problems = validate_model(self)
        if problems:
            raise ValueError("invalid model: " + "; ".join(problems))

    @property
    def n(self) -> int:
        return self.dag.n

    def cpt(self, v: int) -> Cpt:
        return self.cpts[v]

    def name_to_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.names)}

    def to_json(self) -> str:
        obj = {
            "n": self.n,
            "names": list(self.names),
            "rank": list(self.rank),
            "edges": sorted([u, v] for u, v in self.dag.edges),
            "cpts": [
                {"node": c.node, "parents": list(c.parents), "table": [float(p) for p in c.table]}
                for c in self.cpts
            ],
            "confidence": None
            if self.confidence is None
            else sorted([u, v, float(c)] for (u, v), c in self.confidence.items()),
        }
        return json.dumps(obj, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SbcnModel":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelSchemaError(f"not valid JSON: {exc}") from None
        if not isinstance(obj, dict):
            raise ModelSchemaError("top-level JSON value must be an object")
        missing = [k for k in ("n", "names", "rank", "edges", "cpts") if k not in obj]
        if missing:
            raise ModelSchemaError(f"missing keys: {', '.join(missing)}")
        try:
            dag = Dag(obj["n"], [(e[0], e[1]) for e in obj["edges"]])
            cpts = [
                Cpt(c["node"], c["parents"], c["table"]) for c in obj["cpts"]
            ]
            conf = obj.get("confidence")
            confidence = None if conf is None else {(u, v): c for u, v, c in conf}
            return cls(dag, cpts, obj["rank"], confidence, obj["names"])
        except (KeyError, TypeError, IndexError) as exc:
            raise ModelSchemaError(f"malformed model JSON: {exc!r}") from None


def validate_model(model: SbcnModel) -> list[str]:
    """Collect invariant violations; an empty list means the model is valid.

    Violations are reported as data rather than raised so callers can audit
    a model wholesale.
    """
    problems: list[str] = []
    n = model.dag.n
    if has_cycle(n, model.dag.edges):
        problems.append("structure contains a directed cycle")
    nodes = [c.node for c in model.cpts]
    if sorted(nodes) != list(range(n)):
        problems.append(f"CPT node set {sorted(nodes)} does not cover 0..{n - 1} exactly once")
    else:
        for cpt in model.cpts:
            expected = model.dag.parents(cpt.node)
            if cpt.parents != expected:
                problems.append(
                    f"node {cpt.node}: CPT parents {list(cpt.parents)} != "
                    f"structure parents {list(expected)}"
                )
            if len(cpt.table) != 2 ** len(cpt.parents):
                problems.append(
                    f"node {cpt.node}: table size {len(cpt.table)} != 2^{len(cpt.parents)}"
                )
            if np.any((cpt.table < 0) | (cpt.table > 1)) or not np.all(np.isfinite(cpt.table)):
                problems.append(f"node {cpt.node}: table entries outside [0, 1]")
    if len(model.rank) != n:
        problems.append(f"rank has {len(model.rank)} entries, expected {n}")
    if len(model.names) != n:
        problems.append(f"names has {len(model.names)} entries, expected {n}")
    if model.confidence is not None:
        stray = set(model.confidence) - set(model.dag.edges)
        for u, v in sorted(stray):
            problems.append(f"confidence recorded for absent edge ({u}, {v})")
        for (u, v), c in sorted(model.confidence.items()):
            if not (0.0 <= c <= 1.0):
                problems.append(f"confidence for edge ({u}, {v}) is {c}, outside [0, 1]")
    return problems


@dataclass(frozen=True)
class ContingencyStats:
    """Arc-level confusion counts plus the derived error rates.

    Two rate conventions are exposed: rates normalized by the inferred /
    true arc sets (``fp_rate_of_inferred``, ``fn_rate_of_true``) and the
    ROC-space rates (``fpr``, ``tpr``) normalized over the full arc universe.
    """

    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def fp_rate_of_inferred(self) -> float:
        return self.fp / max(1, self.tp + self.fp)

    @property
    def fn_rate_of_true(self) -> float:
        return self.fn / max(1, self.tp + self.fn)

    @property
    def fpr(self) -> float:
        return self.fp / max(1, self.fp + self.tn)

    @property
    def tpr(self) -> float:
        return self.tp / max(1, self.tp + self.fn)


def dag_to_json(dag: Dag, names=None) -> str:
    obj = {
        "n": dag.n,
        "names": list(names) if names is not None else [f"v{i}" for i in range(dag.n)],
        "edges": sorted([u, v] for u, v in dag.edges),
    }
    return json.dumps(obj, indent=2) + "\n"


def dag_from_json(text: str) -> Dag:
    try:
        obj = json.loads(text)
        return Dag(obj["n"], [(e[0], e[1]) for e in obj["edges"]])
    except (json.JSONDecodeError, KeyError, TypeError, IndexError) as exc:
        raise ModelSchemaError(f"malformed DAG JSON: {exc!r}") from None


def scenarios_to_csv(scenarios: np.ndarray, names) -> str:
    """One scenario per row, headed by the variable names."""
    arr = np.asarray(scenarios)
    names = list(names)
    if arr.ndim != 2 or arr.shape[1] != len(names):
        raise ValueError(
            f"scenario matrix shape {arr.shape} does not match {len(names)} names"
        )
    lines = [",".join(names)]
    for row in arr:
        lines.append(",".join("1" if c else "0" for c in row))
    return "\n".join(lines) + "\n"


def float_repr(x: float) -> str:
    """Shortest decimal text that round-trips the float exactly."""
    if isinstance(x, float) and math.isfinite(x):
        return repr(x)
    return repr(float(x))
