import numpy as np
import pytest

from egoscene.geometry import Field
from egoscene.relations import (
    INVERSE_KIND,
    Box3D,
    RelationKind,
    RelationThresholds,
    _classify_codes,
    build_adjacency,
    detect_ground_background,
    relate,
)

from _oracles import relation_kind

T = RelationThresholds()


def box(bid, x1, y1, x2, y2, zlo, zhi, cy=None):
    return Box3D(
        id=bid, x1=x1, y1=y1, x2=x2, y2=y2,
        z_min=zlo, z_max=zhi, z_mean=(zlo + zhi) / 2,
        centroid_y=cy if cy is not None else (y1 + y2) / 2,
    )


def kinds(a, b, t=T):
    rel = relate(a, b, t)
    return None if rel is None else (rel.kind, rel.subject)


class TestRules:
    def test_depth_disjoint_overlapping_silhouettes(self):
        a = box(0, 10, 10, 60, 60, 500, 800)
        b = box(1, 20, 20, 70, 70, 900, 1200)
        assert kinds(a, b) == (RelationKind.IN_FRONT_OF, 0)
        assert kinds(b, a) == (RelationKind.BEHIND, 1)

    def test_touching_depth_ranges_are_not_disjoint(self):
        a = box(0, 10, 10, 60, 60, 500, 900)
        b = box(1, 20, 20, 70, 70, 900, 1200)
        rel = relate(a, b, T)
        assert rel is None or rel.kind is not RelationKind.IN_FRONT_OF

    def test_stacked_boxes_touching(self):
        a = box(0, 10, 10, 50, 40, 1000, 1100)   # bottom at y=40
        b = box(1, 12, 43, 48, 80, 1000, 1100)   # top at y=43, gap 3 <= 5
        assert kinds(a, b) == (RelationKind.ON, 0)
        assert kinds(b, a) == (RelationKind.UNDER, 1)

    def test_vertical_separation_beyond_touch(self):
        a = box(0, 10, 10, 50, 40, 1000, 1100)
        b = box(1, 12, 50, 48, 80, 1000, 1100)   # gap 10 > 5
        assert kinds(a, b) == (RelationKind.ABOVE, 0)
        assert kinds(b, a) == (RelationKind.UNDER, 1)

    def test_side_by_side(self):
        a = box(0, 10, 10, 40, 60, 1000, 1100)
        b = box(1, 43, 15, 70, 65, 1050, 1150)   # x gap 3 <= 5
        assert kinds(a, b) == (RelationKind.NEXT_TO, 0)
        assert kinds(b, a) == (RelationKind.NEXT_TO, 1)

    def test_far_apart_no_relation(self):
        a = box(0, 10, 10, 30, 30, 1000, 1100)
        b = box(1, 200, 200, 230, 230, 1000, 1100)
        assert relate(a, b, T) is None

    def test_containment_suppresses_relation(self):
        outer = box(0, 10, 10, 100, 100, 500, 2000)
        inner = box(1, 30, 30, 60, 60, 800, 1200)
        assert relate(outer, inner, T) is None
        assert relate(inner, outer, T) is None

    def test_depth_gap_beyond_near_threshold_blocks_contact_rules(self):
        a = box(0, 10, 10, 50, 40, 500, 600)
        b = box(1, 12, 43, 48, 80, 800, 900)  # z gap 200 > 150
        rel = relate(a, b, T)
        assert rel is None or rel.kind not in (RelationKind.ON, RelationKind.UNDER)

    def test_near_threshold_is_inclusive(self):
        a = box(0, 10, 10, 50, 40, 500, 600)
        b = box(1, 12, 43, 48, 80, 750, 900)  # z gap exactly 150
        assert kinds(a, b) == (RelationKind.ON, 0)

    def test_same_id_rejected(self):
        a = box(3, 0, 0, 10, 10, 100, 200)
        with pytest.raises(ValueError):
            relate(a, a, T)


class TestOverlapFraction:
    def test_exactly_at_threshold_counts(self):
        # Smaller width 30, overlap 9 = 0.3 * 30.
        a = box(0, 0, 10, 30, 40, 1000, 1100)
        b = box(1, 21, 43, 100, 80, 1000, 1100)
        assert kinds(a, b) == (RelationKind.ON, 0)

    def test_just_below_threshold_does_not(self):
        a = box(0, 0, 10, 30, 40, 1000, 1100)
        b = box(1, 22, 43, 100, 80, 1000, 1100)  # overlap 8 < 9
        rel = relate(a, b, T)
        assert rel is None or rel.kind is not RelationKind.ON

    def test_threshold_scales_with_smaller_box(self):
        t = RelationThresholds(overlap_min=0.5)
        a = box(0, 0, 10, 20, 40, 1000, 1100)      # width 20
        b = box(1, 10, 43, 200, 80, 1000, 1100)    # overlap 10 = 0.5 * 20
        assert kinds(a, b, t) == (RelationKind.ON, 0)


class TestPriority:
    def test_depth_disjoint_wins_over_next_to(self):
        # Silhouettes overlap in both axes and depth ranges are disjoint,
        # which also satisfies the loose lateral test.
        a = box(0, 10, 10, 60, 60, 500, 700)
        b = box(1, 30, 30, 80, 80, 900, 1100)
        assert kinds(a, b) == (RelationKind.IN_FRONT_OF, 0)

    def test_contact_wins_over_lateral(self):
        a = box(0, 10, 10, 50, 40, 1000, 1100)
        b = box(1, 12, 43, 48, 80, 1000, 1100)
        assert kinds(a, b)[0] is RelationKind.ON


def random_boxes(rng, n):
    out = []
    for i in range(n):
        x1 = float(rng.integers(0, 500)); y1 = float(rng.integers(0, 400))
        w = float(rng.integers(8, 130)); h = float(rng.integers(8, 130))
        zlo = float(rng.integers(300, 3500)); span = float(rng.integers(0, 500))
        out.append(box(i, x1, y1, x1 + w, y1 + h, zlo, zlo + span))
    return out


INVERSE_PAIRS = {
    (RelationKind.IN_FRONT_OF, RelationKind.BEHIND),
    (RelationKind.ON, RelationKind.UNDER),
    (RelationKind.ABOVE, RelationKind.UNDER),
    (RelationKind.NEXT_TO, RelationKind.NEXT_TO),
}


def test_relate_is_inverse_consistent():
    rng = np.random.default_rng(7)
    for _ in range(300):
        a, b = random_boxes(rng, 2)
        ab = relate(a, b, T)
        ba = relate(b, a, T)
        if ab is None:
            assert ba is None
            continue
        assert ba is not None
        pair = (ab.kind, ba.kind)
        assert pair in INVERSE_PAIRS or pair[::-1] in INVERSE_PAIRS
        assert (ab.subject, ab.object) == (ba.object, ba.subject) == (a.id, b.id)


def test_relate_agrees_with_rule_oracle():
    rng = np.random.default_rng(8)
    for _ in range(300):
        a, b = random_boxes(rng, 2)
        got = relate(a, b, T)
        want = relation_kind(
            ((a.x1, a.y1, a.x2, a.y2), a.z_min, a.z_max),
            ((b.x1, b.y1, b.x2, b.y2), b.z_min, b.z_max),
            T,
        )
        if want is None:
            assert got is None
        else:
            assert got is not None
            assert got.kind.name.lower() == want
            assert got.subject == a.id


def test_vectorized_codes_match_scalar_relate():
    rng = np.random.default_rng(9)
    for _ in range(120):
        boxes = random_boxes(rng, int(rng.integers(2, 9)))
        arrs = [
            np.array([getattr(b, a) for b in boxes])
            for a in ("x1", "y1", "x2", "y2", "z_min", "z_max")
        ]
        codes = _classify_codes(*arrs, T)
        for i, a in enumerate(boxes):
            for j, b in enumerate(boxes):
                if i == j:
                    assert codes[i, j] == 0
                    continue
                rel = relate(a, b, T)
                if rel is None:
                    assert codes[i, j] == 0
                elif rel.subject == a.id:
                    assert codes[i, j] == int(rel.kind)
                else:
                    assert codes[i, j] == int(INVERSE_KIND[rel.kind])


class TestAdjacency:
    def test_matrices_are_per_field(self):
        left = [box(0, 10, 10, 40, 60, 1000, 1100), box(2, 43, 15, 70, 65, 1050, 1150)]
        front = [box(1, 300, 10, 340, 60, 2000, 2100)]
        adj = build_adjacency({Field.LEFT: left, Field.FRONT: front, Field.RIGHT: []}, T)
        assert adj[Field.LEFT].region_ids == (0, 2)
        rel = adj[Field.LEFT].relation_at(0, 1)  # matrix positions, not ids
        assert rel.kind is RelationKind.NEXT_TO
        assert (rel.subject, rel.object) == (0, 2)
        assert adj[Field.FRONT].matrix.shape == (1, 1)
        assert adj[Field.RIGHT].matrix.shape == (0, 0)

    def test_relations_listing_is_canonical(self):
        a = box(0, 10, 10, 50, 40, 1000, 1100)
        b = box(4, 12, 43, 48, 80, 1000, 1100)
        adj = build_adjacency({Field.LEFT: [a, b], Field.FRONT: [], Field.RIGHT: []}, T)
        rels = adj[Field.LEFT].relations()
        assert [(r.subject, r.object, r.kind) for r in rels] == [(0, 4, RelationKind.ON)]

    def test_requires_ascending_ids(self):
        a = box(5, 0, 0, 10, 10, 100, 200)
        b = box(2, 20, 20, 30, 30, 100, 200)
        with pytest.raises(ValueError):
            build_adjacency({Field.LEFT: [a, b], Field.FRONT: [], Field.RIGHT: []}, T)

    def test_matrix_is_read_only(self):
        a = box(0, 0, 0, 10, 10, 100, 200)
        adj = build_adjacency({Field.LEFT: [a], Field.FRONT: [], Field.RIGHT: []}, T)
        with pytest.raises(ValueError):
            adj[Field.LEFT].matrix[0, 0] = 3

    def test_cross_field_pairs_never_relate(self):
        # Identical geometry split across fields must yield no relation.
        a = box(0, 10, 10, 40, 60, 1000, 1100)
        b = box(1, 43, 15, 70, 65, 1050, 1150)
        adj = build_adjacency({Field.LEFT: [a], Field.FRONT: [b], Field.RIGHT: []}, T)
        assert adj[Field.LEFT].relations() == []
        assert adj[Field.FRONT].relations() == []


class TestThresholds:
    def test_validation(self):
        with pytest.raises(ValueError):
            RelationThresholds(touch_tol_px=-1)
        with pytest.raises(ValueError):
            RelationThresholds(near_z_mm=-0.5)
        with pytest.raises(ValueError):
            RelationThresholds(overlap_min=1.5)

    def test_touch_tolerance_widens_monotonically(self):
        # Any pair related at tolerance t stays related (same kind or
        # promoted to a contact kind) at a larger tolerance.
        rng = np.random.default_rng(10)
        for _ in range(200):
            a, b = random_boxes(rng, 2)
            loose = RelationThresholds(touch_tol_px=12.0)
            r_tight = relate(a, b, T)
            r_loose = relate(a, b, loose)
            if r_tight is not None and r_tight.kind in (
                RelationKind.ON, RelationKind.NEXT_TO,
            ):
                assert r_loose is not None


class TestGroundBackground:
    def test_picks_lowest_and_farthest(self):
        boxes = [
            box(0, 0, 0, 10, 10, 500, 600, cy=100.0),
            box(1, 0, 0, 10, 10, 3000, 3300, cy=400.0),
            box(2, 0, 0, 10, 10, 900, 1000, cy=250.0),
        ]
        assert detect_ground_background(boxes) == (1, 1)

    def test_distinct_ground_and_background(self):
        boxes = [
            box(0, 0, 0, 10, 10, 3200, 3400, cy=50.0),
            box(1, 0, 0, 10, 10, 500, 600, cy=470.0),
        ]
        assert detect_ground_background(boxes) == (1, 0)

    def test_ties_resolve_to_lower_id(self):
        boxes = [
            box(2, 0, 0, 10, 10, 1000, 1000, cy=100.0),
            box(5, 0, 0, 10, 10, 1000, 1000, cy=100.0),
        ]
        assert detect_ground_background(boxes) == (2, 2)

    def test_single_box_serves_both_roles(self):
        assert detect_ground_background([box(4, 0, 0, 5, 5, 100, 200)]) == (4, 4)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            detect_ground_background([])


def test_box3d_validates_geometry():
    with pytest.raises(ValueError):
        box(0, 10, 10, 10, 20, 100, 200)  # zero width
    with pytest.raises(ValueError):
        Box3D(id=0, x1=0, y1=0, x2=5, y2=5, z_min=300, z_max=200, z_mean=250, centroid_y=2)
