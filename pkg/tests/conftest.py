import json

import numpy as np
import pytest

from uxprop.geometry import Rect
from uxprop.scene import scene_from_buildings, scene_to_geojson
from uxprop.synth import rect_building

ACCEPTANCE_RESULTS = []


def record_criterion(name, ok, detail=""):
    ACCEPTANCE_RESULTS.append((name, bool(ok), detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] {name}" + (f" -- {detail}" if detail else ""))


@pytest.fixture
def single_building_scene():
    """20x20 m footprint, 30 m tall, centered at the origin; 200x200 m extent."""
    b = rect_building("b0", -10.0, -10.0, 20.0, 20.0, 30.0)
    return scene_from_buildings([b], bounds=Rect(-100.0, -100.0, 100.0, 100.0))


@pytest.fixture
def empty_scene():
    return scene_from_buildings([], bounds=Rect(-100.0, -100.0, 100.0, 100.0))


def write_scene_file(scene, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scene_to_geojson(scene), fh)
    return str(path)


@pytest.fixture
def scene_file(tmp_path, single_building_scene):
    return write_scene_file(single_building_scene, tmp_path / "scene.geojson")


def geojson_feature(coords_deg, height, props=None, fid=None):
    p = {"height": height}
    if props:
        p.update(props)
    feat = {
        "type": "Feature",
        "properties": p,
        "geometry": {"type": "Polygon", "coordinates": [coords_deg]},
    }
    if fid is not None:
        feat["id"] = fid
    return feat


def feature_collection(features, properties=None):
    doc = {"type": "FeatureCollection", "features": features}
    if properties:
        doc["properties"] = properties
    return doc


def square_deg(lon0, lat0, d):
    return [[lon0, lat0], [lon0 + d, lat0], [lon0 + d, lat0 + d], [lon0, lat0 + d], [lon0, lat0]]


def ellipsoid_distance_m(lon1, lat1, lon2, lat2):
    """Short-range geodesic oracle: local WGS84 ellipsoid metric at the midpoint.

    ds^2 = (M dphi)^2 + (N cos(phi) dlambda)^2 with meridian and prime
    vertical curvature radii; accurate to far better than 0.1% below a
    few km separation.
    """
    a = 6_378_137.0
    e2 = 0.00669437999014
    phi = np.radians(0.5 * (lat1 + lat2))
    s2 = np.sin(phi) ** 2
    M = a * (1 - e2) / (1 - e2 * s2) ** 1.5
    N = a / np.sqrt(1 - e2 * s2)
    dy = np.radians(lat2 - lat1) * M
    dx = np.radians(lon2 - lon1) * N * np.cos(phi)
    return np.hypot(dx, dy)
