"""Turning relation graphs into ordered sentences.

Relation edges of each visual field form an undirected graph. To narrate
every relation exactly once without jumping around, the graph is decomposed
into Euler trails: a connected component with 2k odd-degree vertices splits
into max(1, k) edge-disjoint trails (Hierholzer's algorithm, plus virtual
edges pairing up surplus odd vertices that are removed again afterwards).

Tie-breaking is by lowest region index for both trail starts and next-edge
choices, so output order is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .annotations import Segment
from .geometry import Field
from .relations import FieldAdjacency, Relation, RelationKind

KIND_PHRASES: dict[RelationKind, str] = {
    RelationKind.IN_FRONT_OF: "in front of",
    RelationKind.BEHIND: "behind",
    RelationKind.ON: "on",
    RelationKind.ABOVE: "above",
    RelationKind.UNDER: "under",
    RelationKind.NEXT_TO: "next to",
}

FIELD_HEADERS: dict[Field, str] = {
    Field.LEFT: "On your left",
    Field.FRONT: "In front of you",
    Field.RIGHT: "On your right",
}


@dataclass(frozen=True)
class SceneDescription:
    """Sentences per field plus the ground and background call-outs."""

    left: tuple[str, ...]
    front: tuple[str, ...]
    right: tuple[str, ...]
    ground_sentence: str
    background_sentence: str

    @property
    def full_text(self) -> str:
        lines = list(self.left) + list(self.front) + list(self.right)
        if self.ground_sentence:
            lines.append(self.ground_sentence)
        if self.background_sentence:
            lines.append(self.background_sentence)
        if not lines:
            return ""
        return "\n".join(lines) + "\n"


def _hierholzer(
    vertices: list[int], adj: dict[int, list[tuple[int, int]]], used: list[bool], start: int
) -> list[tuple[int, int, int]]:
    """Euler trail as (u, v, edge_id) steps; assumes one exists from start."""
    ptr = {v: 0 for v in vertices}
    stack: list[tuple[int, Optional[int]]] = [(start, None)]
    walk: list[tuple[int, Optional[int]]] = []
    while stack:
        v, _ = stack[-1]
        lst = adj[v]
        i = ptr[v]
        while i < len(lst) and used[lst[i][1]]:
            i += 1
        ptr[v] = i
        if i < len(lst):
            u, eid = lst[i]
            used[eid] = True
            stack.append((u, eid))
        else:
            walk.append(stack.pop())
    walk.reverse()
    steps = []
    for k in range(1, len(walk)):
        u = walk[k - 1][0]
        v, eid = walk[k]
        steps.append((u, v, eid))
    return steps


def euler_trails(
    adjacency: FieldAdjacency, exclude: Iterable[int] = ()
) -> list[list[Relation]]:
    """Decompose a field's relation graph into ordered Euler trails.

    Every relation edge appears in exactly one trail; consecutive edges of a
    trail share a region. Components are processed lowest index first.

    Args:
        adjacency: the field's relation matrix.
        exclude: segment ids whose edges are dropped before decomposition
            (used to keep ground and background out of the narration).

    Returns:
        Trails as lists of canonical relations (lower index as stored subject).
    """
    skip = set(exclude)
    n = len(adjacency.region_ids)
    edge_pairs = [
        (i, j)
        for i, j in adjacency.edges()
        if adjacency.region_ids[i] not in skip and adjacency.region_ids[j] not in skip
    ]
    if not edge_pairs:
        return []

    # Connected components over the surviving edges.
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in edge_pairs:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    comps: dict[int, list[tuple[int, int]]] = {}
    for i, j in edge_pairs:
        comps.setdefault(find(i), []).append((i, j))

    trails: list[list[Relation]] = []
    for root in sorted(comps):
        comp_edges = comps[root]
        verts = sorted({v for e in comp_edges for v in e})
        degree = {v: 0 for v in verts}
        for i, j in comp_edges:
            degree[i] += 1
            degree[j] += 1
        odd = [v for v in verts if degree[v] % 2 == 1]

        edges: list[tuple[int, int, bool]] = [(i, j, False) for i, j in comp_edges]
        # Pair up surplus odd vertices with virtual edges, keeping the first
        # and last odd vertices as the endpoints of one long trail.
        for a in range(1, len(odd) - 1, 2):
            edges.append((odd[a], odd[a + 1], True))

        adj: dict[int, list[tuple[int, int]]] = {v: [] for v in verts}
        for eid, (i, j, _) in enumerate(edges):
            adj[i].append((j, eid))
            adj[j].append((i, eid))
        for v in adj:
            adj[v].sort()
        used = [False] * len(edges)
        start = odd[0] if odd else verts[0]
        steps = _hierholzer(verts, adj, used, start)

        current: list[Relation] = []
        for _, _, eid in steps:
            i, j, virtual = edges[eid]
            if virtual:
                trails.append(current)
                current = []
            else:
                rel = adjacency.relation_at(min(i, j), max(i, j))
                assert rel is not None
                current.append(rel)
        trails.append(current)
    return trails


def render_relation(relation: Relation, captions: Mapping[int, str]) -> str:
    """One sentence for a relation: ``<subject> is <phrase> <object>.``

    Raises:
        KeyError: a segment id has no caption.
    """
    subject = captions[relation.subject]
    obj = captions[relation.object]
    return f"{subject} is {KIND_PHRASES[relation.kind]} {obj}."


def compose_scene(
    field_segments: Mapping[Field, Sequence[Segment]],
    trails: Mapping[Field, Sequence[Sequence[Relation]]],
    ground: Optional[int],
    background: Optional[int],
) -> SceneDescription:
    """Assemble the scene description.

    Per field (left, then front, then right): a header sentence listing the
    captions, then the relation sentences in trail order. Segments without
    relations are covered by the header listing. The ground and background
    call-outs close the description; an empty scene yields an empty one.

    Raises:
        ValueError: a trail references a segment missing from its field.
    """
    captions: dict[int, str] = {}
    for segs in field_segments.values():
        for s in segs:
            captions[s.id] = s.caption

    per_field: dict[Field, tuple[str, ...]] = {}
    for field in Field:
        segs = list(field_segments.get(field, ()))
        sentences: list[str] = []
        if segs:
            listed = ", ".join(s.caption for s in segs)
            sentences.append(f"{FIELD_HEADERS[field]}: {listed}.")
        field_ids = {s.id for s in segs}
        for trail in trails.get(field, ()):
            for rel in trail:
                if rel.subject not in field_ids or rel.object not in field_ids:
                    raise ValueError(
                        f"relation {rel.subject}->{rel.object} references a segment "
                        f"outside the {field.value} field"
                    )
                sentences.append(render_relation(rel, captions))
        per_field[field] = tuple(sentences)

    ground_sentence = ""
    background_sentence = ""
    if ground is not None:
        ground_sentence = f"{captions[ground]} is the ground."
    if background is not None:
        background_sentence = f"{captions[background]} is in the background."

    return SceneDescription(
        left=per_field[Field.LEFT],
        front=per_field[Field.FRONT],
        right=per_field[Field.RIGHT],
        ground_sentence=ground_sentence,
        background_sentence=background_sentence,
    )
