import numpy as np
import pytest

from egoscene.geometry import CameraModel
from egoscene.pipeline import PipelineConfig, run_loaded
from egoscene.synthscene import (
    GenerationError,
    SceneSpec,
    SlabSpec,
    evaluate,
    generate,
    load_truth,
    write_scene,
)


def test_same_seed_same_scene():
    spec = SceneSpec(seed=13, n_regions=6, noise=0.02)
    d1, m1, s1, t1 = generate(spec)
    d2, m2, s2, t2 = generate(spec)
    assert np.array_equal(d1.values, d2.values)
    assert np.array_equal(m1.labels, m2.labels)
    assert [x.caption for x in s1] == [x.caption for x in s2]
    assert t1.to_json_dict() == t2.to_json_dict()


def test_different_seeds_differ():
    a = generate(SceneSpec(seed=1, n_regions=5))[0]
    b = generate(SceneSpec(seed=2, n_regions=5))[0]
    assert not np.array_equal(a.values, b.values)


def test_noise_does_not_move_the_truth():
    clean = generate(SceneSpec(seed=4, n_regions=7, noise=0.0))
    noisy = generate(SceneSpec(seed=4, n_regions=7, noise=0.05))
    assert clean[3].to_json_dict() == noisy[3].to_json_dict()
    zeros_clean = int((clean[0].values == 0).sum())
    zeros_noisy = int((noisy[0].values == 0).sum())
    assert zeros_noisy > zeros_clean
    frac = (zeros_noisy - zeros_clean) / clean[0].values.size
    assert 0.03 < frac < 0.07


def test_truth_fields_follow_angles():
    _, _, _, truth = generate(SceneSpec(seed=6, n_regions=12))
    for r in truth.regions:
        if r.theta_deg > 75.0 or r.theta_deg < -75.0:
            assert r.field == "front"
        elif r.theta_deg >= 0:
            assert r.field == "right"
        else:
            assert r.field == "left"


def test_placement_honours_angle_margin():
    # Regions are resampled away from the field boundaries, so no truth
    # angle may sit within a degree of the classification limits.
    for seed in range(8):
        _, _, _, truth = generate(SceneSpec(seed=seed, n_regions=10))
        for r in truth.regions:
            assert abs(abs(r.theta_deg) - 75.0) >= 1.0


def test_depth_values_stay_in_range():
    d, _, _, truth = generate(SceneSpec(seed=9, n_regions=8))
    assert d.values.max() <= 3900
    for r in truth.regions:
        assert 1200 <= r.z_mean <= 3600


def test_slab_centred_on_axis_reads_front():
    spec = SceneSpec(
        seed=0,
        n_regions=1,
        placements=(SlabSpec(x1=298, y1=100, x2=341, y2=180, z0=2000),),
    )
    _, _, _, truth = generate(spec)
    r = truth.regions[0]
    assert r.x_w == pytest.approx(0.0, abs=1e-12)
    assert r.theta_deg == 90.0
    assert r.field == "front"


def test_stacked_slabs_touch_in_truth():
    spec = SceneSpec(
        seed=0,
        n_regions=2,
        placements=(
            SlabSpec(x1=60, y1=200, x2=140, y2=260, z0=1500),
            SlabSpec(x1=70, y1=140, x2=130, y2=199, z0=1520),
        ),
    )
    _, _, segs, truth = generate(spec)
    assert truth.regions[0].field == truth.regions[1].field
    assert (0, 1, "under") in truth.relations
    cfg = PipelineConfig()
    d, m, segs, truth2 = generate(spec)
    res = run_loaded(d, segs, cfg)
    triples = {(r["subject"], r["object"], r["kind"]) for r in res.report["relations"]}
    assert (0, 1, "under") in triples


def test_explicit_overlap_rejected():
    spec = SceneSpec(
        seed=0,
        n_regions=2,
        placements=(
            SlabSpec(x1=10, y1=10, x2=60, y2=60, z0=1500),
            SlabSpec(x1=40, y1=40, x2=90, y2=90, z0=1600),
        ),
    )
    with pytest.raises(GenerationError):
        generate(spec)


def test_impossible_packing_raises():
    spec = SceneSpec(
        seed=0, n_regions=200, width=160, height=120,
        size_range=(40, 60), max_attempts=50,
        camera=CameraModel(focal_px=150.0, principal_x=79.5, principal_y=59.5),
    )
    with pytest.raises(GenerationError):
        generate(spec)


def test_spec_validation():
    with pytest.raises(ValueError):
        SceneSpec(seed=0, n_regions=0)
    with pytest.raises(ValueError):
        SceneSpec(seed=0, n_regions=3, noise=1.5)
    with pytest.raises(ValueError):
        SceneSpec(seed=0, n_regions=3, size_range=(50, 20))


def test_write_and_reload_round_trip(tmp_path):
    d, m, segs, truth = generate(SceneSpec(seed=17, n_regions=5, noise=0.02))
    paths = write_scene(tmp_path / "scene", d, m, segs, truth)
    assert sorted(p.name for p in (tmp_path / "scene").iterdir()) == [
        "annotations.json", "depth.png", "mask.png", "truth.json",
    ]
    back = load_truth(paths["truth"])
    assert back.to_json_dict() == truth.to_json_dict()


def test_pipeline_matches_truth_on_clean_scenes():
    for seed in (3, 14, 23, 37):
        d, m, segs, truth = generate(SceneSpec(seed=seed, n_regions=10, noise=0.0))
        res = run_loaded(d, segs, PipelineConfig())
        acc = evaluate(res.report, truth)
        assert acc.direction_accuracy == 1.0
        assert acc.relation_precision == 1.0
        assert acc.relation_recall == 1.0
        assert acc.ground_correct and acc.background_correct


def test_directions_survive_dropout_noise():
    # Dropped pixels skew depth statistics near region borders, so relations
    # may pick up spurious pairs, but the direction fields and the ground and
    # background picks must hold.
    d, m, segs, truth = generate(SceneSpec(seed=23, n_regions=10, noise=0.05))
    res = run_loaded(d, segs, PipelineConfig())
    acc = evaluate(res.report, truth)
    assert acc.direction_accuracy == 1.0
    assert acc.ground_correct and acc.background_correct
    assert acc.relation_recall >= 0.8


def test_evaluate_flags_id_mismatch():
    _, _, _, truth = generate(SceneSpec(seed=2, n_regions=3))
    report = {"segments": [{"id": 99, "field": "left"}], "relations": []}
    with pytest.raises(ValueError):
        evaluate(report, truth)


def test_evaluate_counts_relation_errors():
    _, _, segs, truth = generate(SceneSpec(seed=29, n_regions=8))
    report = {
        "segments": [{"id": r.id, "field": r.field} for r in truth.regions],
        "relations": [
            {"subject": s, "object": o, "kind": k}
            for s, o, k in list(truth.relations)[:-1]
        ] + [{"subject": 900, "object": 901, "kind": "on"}],
        "ground": truth.ground,
        "background": truth.background,
    }
    assert len(truth.relations) >= 2, "seed must give at least two relations"
    acc = evaluate(report, truth)
    assert acc.relation_fn == 1
    assert acc.relation_fp == 1
    assert acc.relation_tp == len(truth.relations) - 1
    assert acc.relation_recall == pytest.approx((len(truth.relations) - 1) / len(truth.relations))
    assert acc.ground_correct and acc.background_correct
