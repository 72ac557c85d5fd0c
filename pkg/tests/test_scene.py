import json
import warnings

import numpy as np
import pytest

from uxprop.errors import EmptyCropWarning, EmptySceneError, MalformedGeoJsonError
from uxprop.geometry import Rect
from uxprop.scene import (
    Building,
    crop_scene,
    load_scene,
    max_shadow_reach,
    save_scene,
    scene_from_buildings,
    validate_building,
)
from uxprop.synth import random_scene, rect_building
from uxprop.visibility import TxConfig, los_raycast_batch

from conftest import (
    ellipsoid_distance_m,
    feature_collection,
    geojson_feature,
    square_deg,
)


def _write(tmp_path, doc, name="scene.geojson"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_load_three_valid_features(tmp_path):
    feats = [geojson_feature(square_deg(0.001 * i, 0.0, 1e-4), h, fid=f"f{i}")
             for i, h in enumerate((10, 20, 30))]
    scene = load_scene(_write(tmp_path, feature_collection(feats)))
    assert len(scene.buildings) == 3
    assert scene.metadata["load_report"]["skipped"] == 0
    assert sorted(b.height_m for b in scene.buildings) == [10, 20, 30]


def test_missing_height_skipped_and_empty_scene_error(tmp_path):
    feat = geojson_feature(square_deg(0, 0, 1e-4), None)
    del feat["properties"]["height"]
    path = _write(tmp_path, feature_collection([feat]))
    with pytest.raises(EmptySceneError, match="skipped 1"):
        load_scene(path)


def test_non_positive_height_skipped(tmp_path):
    feats = [geojson_feature(square_deg(0, 0, 1e-4), -5.0),
             geojson_feature(square_deg(0.001, 0, 1e-4), 12.0)]
    scene = load_scene(_write(tmp_path, feature_collection(feats)))
    assert len(scene.buildings) == 1
    assert scene.metadata["load_report"]["skipped"] == 1


def test_malformed_and_missing_files(tmp_path):
    bad = tmp_path / "bad.geojson"
    bad.write_text("{not json")
    with pytest.raises(MalformedGeoJsonError):
        load_scene(str(bad))
    with pytest.raises(FileNotFoundError):
        load_scene(str(tmp_path / "nope.geojson"))
    notfc = tmp_path / "notfc.geojson"
    notfc.write_text(json.dumps({"type": "Feature"}))
    with pytest.raises(MalformedGeoJsonError):
        load_scene(str(notfc))


def test_equator_square_projection_scale(tmp_path):
    # equirectangular arc-length oracle at the equator: 111320 m/deg of
    # longitude, 110574 m/deg of latitude (WGS84 meridian)
    doc = feature_collection(
        [geojson_feature(square_deg(0.0, 0.0, 1e-4), 10.0)],
        properties={"uxprop:origin_lon": 0.0, "uxprop:origin_lat": 0.0},
    )
    scene = load_scene(_write(tmp_path, doc))
    fp = scene.buildings[0].footprint
    assert fp[:, 0].min() == pytest.approx(0.0, abs=1e-9)
    assert fp[:, 0].max() == pytest.approx(11.132, abs=1e-6)
    assert fp[:, 1].max() == pytest.approx(11.0574, abs=1e-6)


def test_projection_local_isometry_near_equator(tmp_path):
    rng = np.random.default_rng(5)
    lat0, lon0 = 4.0, -72.0
    doc = feature_collection(
        [geojson_feature(square_deg(lon0, lat0, 1e-4), 10.0)],
        properties={"uxprop:origin_lon": lon0, "uxprop:origin_lat": lat0},
    )
    scene = load_scene(_write(tmp_path, doc))
    # pairs of points <= 1 km apart
    from uxprop.scene import _project_ring

    for _ in range(200):
        p = np.array([lon0, lat0]) + rng.uniform(-0.004, 0.004, 2)
        q = p + rng.uniform(-0.004, 0.004, 2)
        truth = ellipsoid_distance_m(p[0], p[1], q[0], q[1])
        if truth > 1000.0 or truth < 1.0:
            continue
        pm = _project_ring(np.array([p, q]), scene.metadata["origin_lon"],
                           scene.metadata["origin_lat"])
        proj = np.hypot(*(pm[1] - pm[0]))
        assert abs(proj - truth) / truth < 1e-3


def test_multipolygon_split(tmp_path):
    feat = {
        "type": "Feature",
        "id": "mp",
        "properties": {"height": 9.0},
        "geometry": {
            "type": "MultiPolygon",
            "coordinates": [[square_deg(0, 0, 1e-4)], [square_deg(0.001, 0, 1e-4)]],
        },
    }
    scene = load_scene(_write(tmp_path, feature_collection([feat])))
    assert sorted(b.id for b in scene.buildings) == ["mp#0", "mp#1"]


def test_interior_ring_ignored_with_warning(tmp_path):
    outer = square_deg(0, 0, 1e-3)
    inner = square_deg(3e-4, 3e-4, 1e-4)
    feat = {
        "type": "Feature",
        "properties": {"height": 5.0},
        "geometry": {"type": "Polygon", "coordinates": [outer, inner]},
    }
    with pytest.warns(UserWarning, match="interior ring"):
        scene = load_scene(_write(tmp_path, feature_collection([feat])))
    assert len(scene.buildings) == 1
    assert len(scene.buildings[0].footprint) == 4


def test_winding_normalized_and_closing_vertex_dropped(tmp_path):
    cw = list(reversed(square_deg(0, 0, 1e-4)))
    scene = load_scene(_write(tmp_path, feature_collection([geojson_feature(cw, 7.0)])))
    fp = scene.buildings[0].footprint
    assert len(fp) == 4
    x, y = fp[:, 0], fp[:, 1]
    assert 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y) > 0


def test_roundtrip_within_tolerance(tmp_path):
    feats = [geojson_feature(square_deg(2.17 + 0.001 * i, 41.4, 2e-4), 10.0 + i, fid=f"b{i}")
             for i in range(4)]
    scene = load_scene(_write(tmp_path, feature_collection(feats)))
    out = tmp_path / "rt.geojson"
    save_scene(scene, out)
    again = load_scene(str(out))
    assert again.building_ids == scene.building_ids
    for b1, b2 in zip(scene.buildings, again.buildings):
        assert b1.height_m == b2.height_m
        assert np.max(np.abs(b1.footprint - b2.footprint)) < 1e-6
    assert again.bounds == scene.bounds


def test_metric_bypass(tmp_path):
    ring = [[0, 0], [50, 0], [50, 40], [0, 40], [0, 0]]
    doc = feature_collection([geojson_feature(ring, 12.0)])
    scene = load_scene(_write(tmp_path, doc), metric=True)
    assert scene.buildings[0].footprint[:, 0].max() == 50.0


def test_custom_height_attribute(tmp_path):
    feat = geojson_feature(square_deg(0, 0, 1e-4), None, props={"roof_m": 27.5})
    del feat["properties"]["height"]
    scene = load_scene(_write(tmp_path, feature_collection([feat])), height_attr="roof_m")
    assert scene.buildings[0].height_m == 27.5
    # the default attribute name is absent: nothing loads
    with pytest.raises(EmptySceneError):
        load_scene(_write(tmp_path, feature_collection([feat]), name="other.geojson"))


def test_validate_building_cases():
    ok = rect_building("ok", 0, 0, 1, 1, 5.0)
    assert validate_building(ok) == []

    two = Building(id="two", footprint=np.array([[0.0, 0.0], [1.0, 0.0]]), height_m=5.0)
    assert any(v.invariant == "TooFewVertices" for v in validate_building(two))

    bowtie = Building(id="bt", footprint=np.array(
        [[0.0, 0.0], [10.0, 10.0], [10.0, 0.0], [0.0, 10.0]]), height_m=5.0)
    bad = validate_building(bowtie)
    assert any(v.invariant == "SelfIntersection" for v in bad)

    dup = Building(id="dup", footprint=np.array(
        [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]), height_m=5.0)
    assert any(v.invariant == "DuplicateVertex" for v in validate_building(dup))

    flat = Building(id="flat", footprint=np.array(
        [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]), height_m=0.0)
    assert any(v.invariant == "NonPositiveHeight" for v in validate_building(flat))


def test_crop_retains_inside_drops_far():
    inside = rect_building("in", -5, -5, 10, 10, 20.0)
    far = rect_building("far", 990, 990, 5, 5, 3.0)
    scene = scene_from_buildings([inside, far], bounds=Rect(-1000, -1000, 1000, 1000))
    cropped = crop_scene(scene, (0, 0), 100.0)
    assert cropped.building_ids == ["in"]
    assert cropped.bounds == Rect(-100, -100, 100, 100)
    assert cropped.metadata["crop"]["radius_m"] == 100.0


def test_crop_shadow_reach_retention():
    # worst-case reach r*(h_b - h_ue)/(h_u - h_b) at the reference geometry
    r = 100.0
    tall_reach = max_shadow_reach(8.0, r, min_tx_altitude_m=10.0, ue_height_m=1.5)
    assert tall_reach == pytest.approx(r * 6.5 / 2.0)
    # building outside the disk but within sqrt(2)*r + reach: retained
    b_keep = rect_building("keep", 150.0, -2.0, 4.0, 4.0, 8.0)
    # same location but too short for its shadow to matter: dropped
    b_drop = rect_building("drop", 150.0, 30.0, 4.0, 4.0, 2.0)
    scene = scene_from_buildings([b_keep, b_drop], bounds=Rect(-1000, -1000, 1000, 1000))
    cropped = crop_scene(scene, (0, 0), r)
    assert "keep" in cropped.building_ids
    assert "drop" not in cropped.building_ids


def test_crop_empty_is_warning_not_error():
    b = rect_building("b", 900, 900, 5, 5, 2.0)
    scene = scene_from_buildings([b], bounds=Rect(-1000, -1000, 1000, 1000))
    with pytest.warns(EmptyCropWarning):
        cropped = crop_scene(scene, (0, 0), 50.0)
    assert cropped.buildings == ()


def test_crop_monotone_in_radius():
    rng = np.random.default_rng(11)
    scene = random_scene(rng, n_buildings=40, extent=600.0)
    center = (300.0, 300.0)
    prev = set()
    for r in (40.0, 80.0, 160.0, 240.0):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ids = set(crop_scene(scene, center, r).building_ids)
        assert prev <= ids
        prev = ids


def test_crop_preserves_visibility_within_disk():
    rng = np.random.default_rng(23)
    for trial in range(5):
        scene = random_scene(rng, n_buildings=35, extent=500.0)
        center = rng.uniform(180.0, 320.0, 2)
        radius = 90.0
        tx_xy = center + rng.uniform(-0.5, 0.5, 2) * radius
        alt = float(rng.uniform(25.0, 120.0))
        tx = TxConfig(position=tuple(tx_xy), altitude_m=alt, ue_height_m=1.5)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            cropped = crop_scene(scene, center, radius, min_tx_altitude_m=alt)
        ang = rng.uniform(0, 2 * np.pi, 400)
        rad = radius * np.sqrt(rng.uniform(0, 1, 400))
        pts = np.column_stack([center[0] + rad * np.cos(ang), center[1] + rad * np.sin(ang)])
        full = los_raycast_batch(scene, tx, pts)
        part = los_raycast_batch(cropped, tx, pts)
        assert np.array_equal(full, part)
