"""Deterministic LOS/NLOS computation by roof-vertex shadow projection.

Each building wall casts a shadow quadrilateral on the user-height plane,
obtained by projecting its roof vertices away from the transmitter. The
union of footprints and wall shadows, rasterized onto a ground grid,
gives the scene-wide LOS map. An exact 3D ray-cast against the extruded
prisms serves as the validation oracle.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateGeometryError,
    GridTooLargeError,
    InvalidConfigError,
    NoAccessibleAreaError,
)
from .geometry import GridSpec, Rect, clip_wedge_to_rect, points_in_polygon, rasterize_polygons

LOS = 0
NLOS = 1
BUILDING = 2

STATE_NAMES = {LOS: "LOS", NLOS: "NLOS", BUILDING: "BUILDING"}

DEFAULT_CELL_CAP = 100_000_000


@dataclass(frozen=True)
class TxConfig:
    """Aerial transmitter: horizontal position, altitude, and user height."""

    position: tuple
    altitude_m: float
    ue_height_m: float = 1.5

    def __post_init__(self):
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))
        if not self.altitude_m > 0:
            raise InvalidConfigError("altitude_m", "must be positive")
        if self.ue_height_m < 0:
            raise InvalidConfigError("ue_height_m", "must be non-negative")
        if not self.altitude_m > self.ue_height_m:
            raise InvalidConfigError("altitude_m", "must exceed ue_height_m")


@dataclass(frozen=True)
class ShadowRegion:
    """Blocked region of one building: footprint plus per-wall shadow polygons."""

    building_id: str
    polygons: tuple
    unbounded: bool


@dataclass(frozen=True)
class LosMap:
    """Per-cell LOS state raster aligned to a GridSpec."""

    grid: np.ndarray
    origin: tuple
    resolution_m: float
    tx: TxConfig
    extent: Rect = None

    def __post_init__(self):
        self.grid.setflags(write=False)

    @property
    def shape(self):
        return self.grid.shape

    def spec(self):
        return GridSpec(self.extent, self.resolution_m)


def project_roof_vertex(vertex, building_height_m, tx):
    """Horizontal shadow location of a roof vertex on the user-height plane.

    s = (h_tx - h_ue) * (v - x_tx) / (h_tx - h_b) + x_tx

    Requires h_tx > h_b; raises DegenerateGeometryError otherwise so the
    caller can switch to the clipped unbounded-shadow path.
    """
    if tx.altitude_m <= building_height_m:
        raise DegenerateGeometryError(
            f"building top {building_height_m} m at or above transmitter {tx.altitude_m} m"
        )
    v = np.asarray(vertex, dtype=float)
    xu = np.asarray(tx.position, dtype=float)
    k = (tx.altitude_m - tx.ue_height_m) / (tx.altitude_m - building_height_m)
    return k * (v - xu) + xu


def building_shadow(b, tx, clip_bounds):
    """ShadowRegion of one building for the given transmitter.

    The region is the footprint plus one quadrilateral (v_i, v_j, s_j, s_i)
    per wall. Walls of buildings reaching the transmitter altitude cast
    half-infinite wedges instead, clipped at ``clip_bounds``; the region is
    then flagged unbounded. Buildings at or below user height cast no wall
    shadow (the footprint still masks cells).
    """
    fp = b.footprint
    polys = [fp]
    unbounded = False
    if b.height_m <= tx.ue_height_m:
        return ShadowRegion(b.id, tuple(polys), False)
    xu = np.asarray(tx.position, dtype=float)
    n = len(fp)
    if b.height_m >= tx.altitude_m:
        unbounded = True
        for i in range(n):
            vi = fp[i]
            vj = fp[(i + 1) % n]
            wedge = clip_wedge_to_rect(xu, vi, vj, clip_bounds)
            if len(wedge) >= 3:
                polys.append(wedge)
    else:
        k = (tx.altitude_m - tx.ue_height_m) / (tx.altitude_m - b.height_m)
        if k > 1.0:  # k == 1 means h_b == h_ue: degenerate quads excluded
            proj = k * (fp - xu) + xu
            for i in range(n):
                j = (i + 1) % n
                polys.append(np.array([fp[i], fp[j], proj[j], proj[i]]))
    return ShadowRegion(b.id, tuple(polys), unbounded)


def compute_los_map(scene, tx, resolution_m, extent=None, cell_cap=DEFAULT_CELL_CAP):
    """Rasterize per-cell LOS state over ``extent`` (default: scene bounds).

    Cell centers inside any footprint are BUILDING; else inside any shadow
    polygon NLOS; else LOS. BUILDING takes precedence over NLOS at
    footprint edges. Deterministic for fixed inputs.
    """
    if extent is None:
        extent = scene.bounds
    grid = GridSpec(extent, resolution_m)
    if grid.num_cells > cell_cap:
        raise GridTooLargeError(f"{grid.num_cells} cells exceeds cap {cell_cap}")
    # shadow rays of too-tall buildings are clipped at 2x beyond the extent,
    # which is exact within the map
    clip_bounds = extent.inflate(2.0 * max(extent.width, extent.height))
    footprints = []
    shadow_polys = []
    for b in scene.buildings:
        region = building_shadow(b, tx, clip_bounds)
        footprints.append(region.polygons[0])
        shadow_polys.extend(region.polygons[1:])
    building_mask = rasterize_polygons(grid, footprints)
    nlos_mask = rasterize_polygons(grid, shadow_polys)
    state = np.full(grid.shape, LOS, dtype=np.uint8)
    state[nlos_mask] = NLOS
    state[building_mask] = BUILDING
    return LosMap(grid=state, origin=grid.origin, resolution_m=grid.resolution_m,
                  tx=tx, extent=extent)


def los_probability(los_map):
    """(P_LOS, P_NLOS) as fractions of accessible (non-BUILDING) cells."""
    grid = los_map.grid
    accessible = int(np.sum(grid != BUILDING))
    if accessible == 0:
        raise NoAccessibleAreaError("all cells are BUILDING")
    nlos = int(np.sum(grid == NLOS))
    p_nlos = nlos / accessible
    return 1.0 - p_nlos, p_nlos


def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def los_raycast_batch(scene, tx, points):
    """Exact 3D ray-cast state for an array of user-plane points.

    A point is BUILDING if inside (or on the boundary of) any footprint;
    else NLOS iff the sight segment from the transmitter intersects any
    extruded prism. The prism test reduces to 2D: the segment part at or
    below roof height is the sub-segment t >= t_roof, and it is blocked
    iff that sub-segment meets the footprint polygon.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n_pts = len(pts)
    xu = np.asarray(tx.position, dtype=float)
    h_u = tx.altitude_m
    h_ue = tx.ue_height_m
    building = np.zeros(n_pts, dtype=bool)
    blocked = np.zeros(n_pts, dtype=bool)
    for b in scene.buildings:
        fp = b.footprint
        building |= points_in_polygon(pts, fp)
        if b.height_m <= h_ue:
            continue
        t_roof = (h_u - b.height_m) / (h_u - h_ue)
        t_roof = min(max(t_roof, 0.0), 1.0)
        q = xu + t_roof * (pts - xu)  # sight line crosses roof plane here
        hit = points_in_polygon(q, fp) | points_in_polygon(pts, fp)
        d1 = pts - q
        todo = ~hit
        for k in range(len(fp)):
            if not np.any(todo):
                break
            a = fp[k]
            c = fp[(k + 1) % len(fp)]
            d2 = c - a
            rx = a[0] - q[todo, 0]
            ry = a[1] - q[todo, 1]
            denom = _cross(d1[todo, 0], d1[todo, 1], d2[0], d2[1])
            t_num = _cross(rx, ry, d2[0], d2[1])
            u_num = _cross(rx, ry, d1[todo, 0], d1[todo, 1])
            with np.errstate(divide="ignore", invalid="ignore"):
                t = t_num / denom
                u = u_num / denom
            ok = (np.abs(denom) > 1e-300) & (t >= -1e-12) & (t <= 1 + 1e-12) \
                & (u >= -1e-12) & (u <= 1 + 1e-12)
            idx = np.flatnonzero(todo)
            hit[idx[ok]] = True
            todo[idx[ok]] = False
        blocked |= hit
    state = np.full(n_pts, LOS, dtype=np.uint8)
    state[blocked] = NLOS
    state[building] = BUILDING
    return state


def los_raycast(scene, tx, ue):
    """Single-point exact LOS state; see :func:`los_raycast_batch`."""
    return int(los_raycast_batch(scene, tx, np.asarray(ue, dtype=float)[None, :])[0])
