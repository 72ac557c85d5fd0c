"""Synthetic scene generators for testing and campaign demos."""

import numpy as np

from .geometry import Rect
from .scene import Building, scene_from_buildings


def rect_building(bid, x0, y0, w, h, height_m):
    fp = np.array([[x0, y0], [x0 + w, y0], [x0 + w, y0 + h], [x0, y0 + h]], dtype=float)
    return Building(id=bid, footprint=fp, height_m=height_m)


def manhattan_city(n_cols=20, n_rows=20, block_m=50.0, street_m=14.0,
                   heights=(12.0, 18.0, 24.0), origin=(0.0, 0.0)):
    """Regular street grid: square buildings of side (block - street) repeating
    with period ``block_m``. Heights cycle deterministically over ``heights``.
    """
    side = block_m - street_m
    bx, by = origin
    buildings = []
    for r in range(n_rows):
        for c in range(n_cols):
            x0 = bx + c * block_m + street_m / 2.0
            y0 = by + r * block_m + street_m / 2.0
            h = heights[(r * n_cols + c) % len(heights)]
            buildings.append(rect_building(f"b{r}_{c}", x0, y0, side, side, h))
    bounds = Rect(bx, by, bx + n_cols * block_m, by + n_rows * block_m)
    return scene_from_buildings(buildings, bounds=bounds,
                                metadata={"source": "<manhattan>", "block_m": block_m,
                                          "street_m": street_m})


def random_convex_polygon(rng, center, mean_radius):
    """Convex polygon: hull of points on a randomly squashed, rotated circle."""
    n = int(rng.integers(3, 8))
    angles = np.sort(rng.uniform(0.0, 2.0 * np.pi, n))
    radii = mean_radius * rng.uniform(0.6, 1.4)
    aspect = rng.uniform(0.5, 1.0)
    pts = np.column_stack([radii * np.cos(angles), radii * aspect * np.sin(angles)])
    rot = rng.uniform(0.0, np.pi)
    R = np.array([[np.cos(rot), -np.sin(rot)], [np.sin(rot), np.cos(rot)]])
    return pts @ R.T + np.asarray(center, dtype=float)


def random_scene(rng, n_buildings=30, extent=300.0, height_range=(5.0, 60.0),
                 mean_radius=12.0):
    """Random scene of convex buildings inside a square extent (meters)."""
    buildings = []
    for i in range(n_buildings):
        c = rng.uniform(0.1 * extent, 0.9 * extent, 2)
        fp = random_convex_polygon(rng, c, mean_radius)
        h = rng.uniform(*height_range)
        buildings.append(Building(id=f"r{i}", footprint=fp, height_m=float(h)))
    return scene_from_buildings(buildings, bounds=Rect(0.0, 0.0, extent, extent),
                                metadata={"source": "<random>"})
