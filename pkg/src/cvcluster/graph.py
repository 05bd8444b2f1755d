"""Unweighted simple graphs over 1-based qumode labels."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from cvcluster.errors import ValidationError

Edge = tuple[int, int]


@dataclass(frozen=True)
class Graph:
    """Immutable simple graph on vertices ``1..n``.

    Edges are stored as sorted pairs ``(i, j)`` with ``i < j``, in
    lexicographic order. Equality is label-sensitive.
    """

    n: int
    edges: tuple[Edge, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValidationError(f"vertex count must be a positive integer, got {self.n!r}")
        seen = set()
        for i, j in self.edges:
            if not (i < j):
                raise ValidationError(f"edge {(i, j)} is not in canonical (i < j) form")
            if i < 1 or j > self.n:
                raise ValidationError(f"edge {(i, j)} out of range 1..{self.n}")
            if (i, j) in seen:
                raise ValidationError(f"duplicate edge {(i, j)}")
            seen.add((i, j))
        if list(self.edges) != sorted(self.edges):
            raise ValidationError("edges must be sorted; use build_graph")

    @property
    def vertices(self) -> range:
        return range(1, self.n + 1)

    def neighbors(self, v: int) -> tuple[int, ...]:
        self._check_vertex(v)
        out = [j if i == v else i for i, j in self.edges if v in (i, j)]
        return tuple(sorted(out))

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for i, j in self.edges:
            deg[i - 1] += 1
            deg[j - 1] += 1
        return deg

    def max_degree(self) -> int:
        return int(self.degrees().max())

    def is_regular(self) -> bool:
        deg = self.degrees()
        return bool(np.all(deg == deg[0]))

    def adjacency_matrix(self) -> np.ndarray:
        """Symmetric 0/1 integer matrix with zero diagonal."""
        a = np.zeros((self.n, self.n), dtype=int)
        for i, j in self.edges:
            a[i - 1, j - 1] = 1
            a[j - 1, i - 1] = 1
        return a

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in set(self.edges)

    def subgraph(self, keep: Sequence[int]) -> Graph:
        """Induced subgraph on ``keep``, relabelled 1..len(keep) in the given order."""
        for v in keep:
            self._check_vertex(v)
        if len(set(keep)) != len(keep):
            raise ValidationError(f"repeated vertex in {list(keep)}")
        index = {v: k + 1 for k, v in enumerate(keep)}
        pairs = [(index[i], index[j]) for i, j in self.edges if i in index and j in index]
        return build_graph(len(keep), pairs)

    def remove_vertex(self, v: int) -> Graph:
        """Delete ``v`` and its edges; the remaining vertices keep their relative order."""
        self._check_vertex(v)
        if self.n == 1:
            raise ValidationError("cannot remove the only vertex of a graph")
        return self.subgraph([u for u in self.vertices if u != v])

    def connected_components(self) -> list[list[int]]:
        parent = list(range(self.n + 1))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for i, j in self.edges:
            parent[find(i)] = find(j)
        groups: dict[int, list[int]] = {}
        for v in self.vertices:
            groups.setdefault(find(v), []).append(v)
        return sorted(groups.values())

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def _check_vertex(self, v: int) -> None:
        if not 1 <= v <= self.n:
            raise ValidationError(f"vertex {v} out of range 1..{self.n}")


def build_graph(n: int, edges: Iterable[Sequence[int]]) -> Graph:
    """Validate and normalise an edge list into a :class:`Graph`.

    Raises :class:`ValidationError` naming the offending pair for self-loops,
    out-of-range labels and duplicates (``(1, 2)`` and ``(2, 1)`` are the same
    edge).
    """
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
        raise ValidationError(f"vertex count must be a positive integer, got {n!r}")
    seen: dict[Edge, tuple] = {}
    for pair in edges:
        pair = tuple(pair)
        if len(pair) != 2:
            raise ValidationError(f"edge {pair} is not a pair")
        i, j = pair
        if not all(isinstance(x, (int, np.integer)) and not isinstance(x, bool) for x in pair):
            raise ValidationError(f"edge {pair} has non-integer labels")
        if i == j:
            raise ValidationError(f"self-loop {pair}")
        if not (1 <= i <= n and 1 <= j <= n):
            raise ValidationError(f"edge {pair} out of range 1..{n}")
        key = (int(min(i, j)), int(max(i, j)))
        if key in seen:
            raise ValidationError(f"duplicate edge {pair} (already given as {seen[key]})")
        seen[key] = pair
    return Graph(int(n), tuple(sorted(seen)))


def linear_graph(n: int) -> Graph:
    return build_graph(n, [(i, i + 1) for i in range(1, n)])


def square_lattice(rows: int, cols: int, periodic: bool = False) -> Graph:
    """Nearest-neighbour grid, vertices numbered row-major from 1.

    With ``periodic=True`` both directions wrap around (a torus); this keeps the
    2:1 edge-to-vertex ratio of the infinite lattice at finite size and needs
    ``rows, cols >= 3``.
    """
    if rows < 1 or cols < 1:
        raise ValidationError(f"lattice dimensions must be >= 1, got {rows}x{cols}")
    if periodic and (rows < 3 or cols < 3):
        raise ValidationError("periodic lattice needs rows, cols >= 3")

    def label(r: int, c: int) -> int:
        return r * cols + c + 1

    pairs = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols or periodic:
                pairs.append((label(r, c), label(r, (c + 1) % cols)))
            if r + 1 < rows or periodic:
                pairs.append((label(r, c), label((r + 1) % rows, c)))
    return build_graph(rows * cols, pairs)


def random_graph(n: int, p: float, rng: np.random.Generator) -> Graph:
    """Erdos-Renyi G(n, p) with an explicit generator."""
    pairs = [(i, j) for i, j in itertools.combinations(range(1, n + 1), 2) if rng.random() < p]
    return build_graph(n, pairs)


def all_graphs(n: int) -> Iterator[Graph]:
    """Every labelled simple graph on ``n`` vertices (2**(n(n-1)/2) of them)."""
    slots = list(itertools.combinations(range(1, n + 1), 2))
    for mask in range(1 << len(slots)):
        yield Graph(n, tuple(e for k, e in enumerate(slots) if mask >> k & 1))


def graph_from_dict(data: dict) -> Graph:
    if not isinstance(data, dict):
        raise ValidationError("graph JSON must be an object with fields 'n' and 'edges'")
    missing = {"n", "edges"} - set(data)
    if missing:
        raise ValidationError(f"graph JSON missing field(s): {sorted(missing)}")
    if not isinstance(data["edges"], list):
        raise ValidationError("graph JSON field 'edges' must be a list of [i, j] pairs")
    return build_graph(data["n"], data["edges"])


def load_graph(path: str | Path) -> Graph:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return graph_from_dict(data)
