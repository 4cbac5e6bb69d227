"""
Generating classes of hierarchical log-linear models, viewed as hypergraphs.

Hyperedges are frozensets of 0-based variable indices.  They are kept in a
canonical order (by size, then lexicographically), the same order used for
the columns of the design matrix.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .table import check_k, default_labels, parse_vars


def subset_key(s: Iterable[int]) -> tuple[int, tuple[int, ...]]:
    t = tuple(sorted(s))
    return len(t), t


def _canonical(edges: Iterable[Iterable[int]]) -> tuple[frozenset[int], ...]:
    return tuple(sorted({frozenset(e) for e in edges}, key=subset_key))


def maximal_sets(sets: Iterable[Iterable[int]]) -> tuple[frozenset[int], ...]:
    """Drop every set strictly contained in another one."""
    uniq = _canonical(sets)
    return tuple(s for s in uniq if not any(s < t for t in uniq))


@dataclass(frozen=True)
class Hypergraph:
    """Vertex labels plus an antichain of nonempty hyperedges."""

    vertices: tuple[str, ...]
    hyperedges: tuple[frozenset[int], ...]

    def __post_init__(self):
        vertices = tuple(self.vertices)
        check_k(len(vertices))
        if len(set(vertices)) != len(vertices):
            raise ValueError(f"duplicate vertex labels {vertices}")
        edges = _canonical(self.hyperedges)
        if len(edges) != len(list(self.hyperedges)):
            raise ValueError("repeated hyperedge")
        for e in edges:
            if not e:
                raise ValueError("hyperedges must be nonempty")
            if min(e) < 0 or max(e) >= len(vertices):
                raise ValueError(f"hyperedge {sorted(e)} has vertices out of range")
        for a, b in itertools.permutations(edges, 2):
            if a < b:
                raise ValueError(
                    f"hyperedges must be incomparable: {self.label(a)} is inside {self.label(b)}"
                )
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "hyperedges", edges)

    @classmethod
    def from_labels(cls, edges: Iterable, vertices: Sequence[str] | int | str) -> "Hypergraph":
        """``Hypergraph.from_labels(["ABC", "ABD"], "ABCD")``."""
        if isinstance(vertices, int):
            vertices = default_labels(vertices)
        vertices = tuple(vertices)
        return cls(vertices, tuple(frozenset(parse_vars(e, vertices)) for e in edges))

    @classmethod
    def saturated(cls, k: int, vertices: Sequence[str] = ()) -> "Hypergraph":
        vertices = tuple(vertices) or default_labels(k)
        return cls(vertices, (frozenset(range(k)),))

    @classmethod
    def independence(cls, k: int, vertices: Sequence[str] = ()) -> "Hypergraph":
        vertices = tuple(vertices) or default_labels(k)
        return cls(vertices, tuple(frozenset([v]) for v in range(k)))

    @property
    def k(self) -> int:
        return len(self.vertices)

    def label(self, edge: Iterable[int]) -> str:
        names = [self.vertices[v] for v in sorted(edge)]
        sep = "" if all(len(n) == 1 for n in self.vertices) else ","
        return sep.join(names)

    def edge_labels(self) -> list[list[str]]:
        return [[self.vertices[v] for v in sorted(e)] for e in self.hyperedges]

    def __str__(self) -> str:
        if not self.hyperedges:
            return "[]"
        return "".join(f"[{self.label(e)}]" for e in self.hyperedges)

    def to_json(self) -> str:
        return json.dumps({"vertices": list(self.vertices), "hyperedges": self.edge_labels()})

    @classmethod
    def from_json(cls, text: str) -> "Hypergraph":
        obj = json.loads(text)
        vertices = tuple(obj["vertices"])
        edges = [frozenset(vertices.index(v) for v in e) for e in obj["hyperedges"]]
        return cls(vertices, tuple(edges))

    def orders(self) -> list[int]:
        """Interaction order h of each hyperedge (size minus one)."""
        return [len(e) - 1 for e in self.hyperedges]


def normalize_generating_class(
    sets: Iterable, vertices: Sequence[str] | int | None = None
) -> Hypergraph:
    """Remove sets contained in others and return the resulting hypergraph.

    ``sets`` may hold label strings (``"AB"``) or collections of variable
    indices.  Without ``vertices`` the labels are inferred: the default
    A, B, C, ... alphabet sized to cover every mentioned variable.
    """
    sets = list(sets)
    if not sets:
        raise ValueError("generating class must contain at least one set")
    if vertices is None:
        if all(isinstance(s, str) for s in sets):
            letters = sorted(set("".join(sets)))
            k = max(ord(c) - ord("A") for c in letters) + 1
        else:
            k = max(max(s) for s in sets if len(s)) + 1
        vertices = default_labels(k)
    elif isinstance(vertices, int):
        vertices = default_labels(vertices)
    vertices = tuple(vertices)
    parsed = [frozenset(parse_vars(s, vertices)) for s in sets]
    if any(not s for s in parsed):
        raise ValueError("generating class members must be nonempty")
    return Hypergraph(vertices, maximal_sets(parsed))


def descending_class(h: Hypergraph) -> set[frozenset[int]]:
    """All subsets of some hyperedge, the empty set included."""
    out: set[frozenset[int]] = {frozenset()}
    for e in h.hyperedges:
        items = sorted(e)
        for r in range(1, len(items) + 1):
            out.update(frozenset(c) for c in itertools.combinations(items, r))
    return out


def ascending_class(h: Hypergraph) -> set[frozenset[int]]:
    """Subsets of the vertex set not covered by any hyperedge."""
    desc = descending_class(h)
    return {s for s in power_set(h.k) if s not in desc}


def power_set(k: int) -> list[frozenset[int]]:
    return [
        frozenset(c)
        for r in range(k + 1)
        for c in itertools.combinations(range(k), r)
    ]


def gyo_order(edges: Sequence[frozenset[int]]) -> list[int] | None:
    """Graham (GYO) reduction.

    Returns positions of ``edges`` in a running-intersection order, or
    None when the reduction gets stuck (the hypergraph is cyclic).  The
    order is the reverse of the order in which the reduction deletes
    hyperedges.
    """
    current = {i: set(e) for i, e in enumerate(edges)}
    removed: list[int] = []
    changed = True
    while current and changed:
        changed = False
        counts: dict[int, int] = {}
        for e in current.values():
            for v in e:
                counts[v] = counts.get(v, 0) + 1
        for e in current.values():
            lonely = {v for v in e if counts[v] == 1}
            if lonely:
                e -= lonely
                changed = True
        for i in sorted(current, reverse=True):
            e = current[i]
            others = [j for j in current if j != i]
            if not e or any(e <= current[j] for j in others):
                removed.append(i)
                del current[i]
                changed = True
                # one deletion per pass keeps twin edges from removing each other
                break
    if current:
        return None
    return removed[::-1]


def has_running_intersection(order: Sequence[frozenset[int]]) -> bool:
    """Each set meets the union of its predecessors inside one predecessor."""
    seen: set[int] = set()
    for j, e in enumerate(order):
        shared = set(e) & seen
        if j > 0 and not any(shared <= set(order[i]) for i in range(j)):
            return False
        seen |= set(e)
    return True


class Decomposability(NamedTuple):
    decomposable: bool
    ordering: tuple[frozenset[int], ...] | None


def is_decomposable(h: Hypergraph) -> Decomposability:
    """Decide decomposability by GYO reduction.

    When decomposable, ``ordering`` lists the hyperedges in a
    running-intersection order.
    """
    if not h.hyperedges:
        return Decomposability(True, ())
    order = gyo_order(h.hyperedges)
    if order is None:
        return Decomposability(False, None)
    return Decomposability(True, tuple(h.hyperedges[i] for i in order))


class ChainDescriptor(NamedTuple):
    order: int
    length: int


def chain_descriptor(h: Hypergraph) -> ChainDescriptor | None:
    """(h, L) when ``h`` is a chain of order h and length L, else None.

    A chain covers every vertex, is decomposable, and all its hyperedges
    have the same size h + 1 with h >= 1.
    """
    if not h.hyperedges:
        return None
    sizes = {len(e) for e in h.hyperedges}
    if len(sizes) != 1 or min(sizes) < 2:
        return None
    if frozenset().union(*h.hyperedges) != frozenset(range(h.k)):
        return None
    if not is_decomposable(h).decomposable:
        return None
    return ChainDescriptor(sizes.pop() - 1, len(h.hyperedges))
