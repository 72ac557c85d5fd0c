"""2D geometry primitives: rectangles, polygon predicates, scanline rasterization.

All polygons are (N, 2) float arrays of vertices without a duplicated
closing vertex. Boundary convention used throughout the package: a point
lying on a polygon edge (within ``EDGE_EPS`` perpendicular distance)
counts as inside. This makes shadow classification conservative (NLOS)
and building masking conservative (BUILDING).
"""

from dataclasses import dataclass

import numpy as np

EDGE_EPS = 1e-9


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle in meters."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    @property
    def width(self):
        return self.xmax - self.xmin

    @property
    def height(self):
        return self.ymax - self.ymin

    def contains(self, x, y, tol=0.0):
        return (self.xmin - tol <= x <= self.xmax + tol) and (
            self.ymin - tol <= y <= self.ymax + tol
        )

    def inflate(self, margin):
        return Rect(self.xmin - margin, self.ymin - margin,
                    self.xmax + margin, self.ymax + margin)

    def as_polygon(self):
        return np.array(
            [
                [self.xmin, self.ymin],
                [self.xmax, self.ymin],
                [self.xmax, self.ymax],
                [self.xmin, self.ymax],
            ],
            dtype=float,
        )

    @staticmethod
    def from_points(pts):
        pts = np.asarray(pts, dtype=float)
        return Rect(float(pts[:, 0].min()), float(pts[:, 1].min()),
                    float(pts[:, 0].max()), float(pts[:, 1].max()))


def polygon_signed_area(poly):
    """Shoelace signed area; positive for counterclockwise winding."""
    x = poly[:, 0]
    y = poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def normalize_ring(poly, tol=EDGE_EPS):
    """Drop a duplicated closing vertex and enforce counterclockwise winding."""
    poly = np.asarray(poly, dtype=float)
    if len(poly) >= 2 and np.hypot(*(poly[0] - poly[-1])) <= tol:
        poly = poly[:-1]
    if len(poly) >= 3 and polygon_signed_area(poly) < 0:
        poly = poly[::-1].copy()
    return poly


def _seg_intersection_params(p, r, q, s):
    """Solve p + t*r = q + u*s. Returns (denom, t_num, u_num)."""
    denom = r[0] * s[1] - r[1] * s[0]
    qp = (q[0] - p[0], q[1] - p[1])
    t_num = qp[0] * s[1] - qp[1] * s[0]
    u_num = qp[0] * r[1] - qp[1] * r[0]
    return denom, t_num, u_num


def segments_intersect(a0, a1, b0, b1, eps=EDGE_EPS):
    """True if closed segments [a0,a1] and [b0,b1] share at least one point.

    Handles collinear overlap. Endpoint touching counts as intersection.
    """
    a0 = np.asarray(a0, float); a1 = np.asarray(a1, float)
    b0 = np.asarray(b0, float); b1 = np.asarray(b1, float)
    r = a1 - a0
    s = b1 - b0
    denom, t_num, u_num = _seg_intersection_params(a0, r, b0, s)
    scale = max(np.hypot(*r) * np.hypot(*s), 1e-300)
    if abs(denom) > eps * scale:
        t = t_num / denom
        u = u_num / denom
        return -eps <= t <= 1 + eps and -eps <= u <= 1 + eps
    # parallel: intersect only if collinear and projections overlap
    if abs(u_num) > eps * max(np.hypot(*r), 1.0) * max(np.hypot(*(b0 - a0)), 1.0):
        return False
    rr = float(r @ r)
    if rr < eps * eps:  # a is a point
        return point_on_segment(a0, b0, b1, eps)
    t0 = float((b0 - a0) @ r) / rr
    t1 = float((b1 - a0) @ r) / rr
    lo, hi = min(t0, t1), max(t0, t1)
    return hi >= -eps and lo <= 1 + eps


def point_on_segment(p, a, b, eps=EDGE_EPS):
    p = np.asarray(p, float); a = np.asarray(a, float); b = np.asarray(b, float)
    d = b - a
    L2 = float(d @ d)
    if L2 < eps * eps:
        return bool(np.hypot(*(p - a)) <= eps)
    cross = d[0] * (p[1] - a[1]) - d[1] * (p[0] - a[0])
    if cross * cross > eps * eps * L2:
        return False
    dot = float((p - a) @ d)
    return -eps * np.sqrt(L2) <= dot <= L2 + eps * np.sqrt(L2)


def polygon_is_simple(poly, eps=EDGE_EPS):
    """Brute-force simplicity test.

    Returns (True, None) or (False, (i, j)) with the indices of the first
    offending edge pair. Adjacent edges only offend if they overlap beyond
    the shared vertex (spike).
    """
    n = len(poly)
    if n < 3:
        return False, (0, 0)
    edges = [(poly[i], poly[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            adjacent = (j == i + 1) or (i == 0 and j == n - 1)
            a0, a1 = edges[i]
            b0, b1 = edges[j]
            if not adjacent:
                if segments_intersect(a0, a1, b0, b1, eps):
                    return False, (i, j)
            else:
                # shared vertex allowed; a fold-back (spike) is not
                shared = a1 if j == i + 1 else a0
                other_a = a0 if j == i + 1 else a1
                other_b = b1 if j == i + 1 else b0
                da = other_a - shared
                db = other_b - shared
                cross = da[0] * db[1] - da[1] * db[0]
                dot = float(da @ db)
                scale = np.hypot(*da) * np.hypot(*db)
                if abs(cross) <= eps * max(scale, 1e-300) and dot > 0:
                    return False, (i, j)
    return True, None


def points_in_polygon(points, poly, eps=EDGE_EPS):
    """Even-odd point-in-polygon test, vectorized over points.

    Points within ``eps`` perpendicular distance of an edge count as inside.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x = pts[:, 0]
    y = pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    on_edge = np.zeros(len(pts), dtype=bool)
    n = len(poly)
    for k in range(n):
        x0, y0 = poly[k]
        x1, y1 = poly[(k + 1) % n]
        dy = y1 - y0
        crosses = (y0 > y) != (y1 > y)
        if np.any(crosses):
            t = (y[crosses] - y0) / dy
            xc = x0 + t * (x1 - x0)
            flip = np.zeros(len(pts), dtype=bool)
            flip[crosses] = xc > x[crosses]
            inside ^= flip
        dx = x1 - x0
        L2 = dx * dx + dy * dy
        if L2 < eps * eps:
            continue
        cross = dx * (y - y0) - dy * (x - x0)
        dot = (x - x0) * dx + (y - y0) * dy
        L = np.sqrt(L2)
        on_edge |= (np.abs(cross) <= eps * L) & (dot >= -eps * L) & (dot <= L2 + eps * L)
    return inside | on_edge


def segment_polygon_crossings(p0, p1, poly, eps=1e-12):
    """Parameters t in [0,1] where segment p0 + t*(p1-p0) crosses the polygon boundary.

    Used as an oracle for chord lengths through shadow regions.
    """
    p0 = np.asarray(p0, float)
    p1 = np.asarray(p1, float)
    d = p1 - p0
    ts = []
    n = len(poly)
    for k in range(n):
        a = poly[k]
        b = poly[(k + 1) % n]
        s = b - a
        denom, t_num, u_num = _seg_intersection_params(p0, d, a, s)
        if abs(denom) < eps:
            continue
        t = t_num / denom
        u = u_num / denom
        if -eps <= t <= 1 + eps and -eps <= u <= 1 + eps:
            ts.append(min(max(t, 0.0), 1.0))
    return sorted(ts)


def clip_wedge_to_rect(apex, v0, v1, rect):
    """Polygon of the half-infinite wedge behind segment (v0, v1) seen from apex,
    clipped to ``rect``.

    The wedge is the set swept by rays from the apex through points of the
    segment, restricted to the far side of the segment. It is the
    intersection of three half-planes, so the clip is a convex polygon
    computed by Sutherland-Hodgman. Returns an (M, 2) array, possibly empty.
    """
    apex = np.asarray(apex, float)
    v0 = np.asarray(v0, float)
    v1 = np.asarray(v1, float)

    def clip_halfplane(pts, a, b):
        # keep the side where cross(b-a, p-a) >= 0
        if len(pts) == 0:
            return pts
        out = []
        n = len(pts)
        d = b - a
        sides = [d[0] * (p[1] - a[1]) - d[1] * (p[0] - a[0]) for p in pts]
        for i in range(n):
            j = (i + 1) % n
            pi, pj = pts[i], pts[j]
            si, sj = sides[i], sides[j]
            if si >= 0:
                out.append(pi)
            if (si > 0 and sj < 0) or (si < 0 and sj > 0):
                t = si / (si - sj)
                out.append(pi + t * (pj - pi))
        return out

    d0 = v0 - apex
    d1 = v1 - apex
    turn = d0[0] * d1[1] - d0[1] * d1[0]
    if abs(turn) < 1e-300:
        return np.empty((0, 2))
    if turn < 0:  # orient so v0 -> v1 turns counterclockwise around the apex
        v0, v1 = v1, v0
    pts = list(rect.as_polygon())
    pts = clip_halfplane(pts, apex, v0)          # counterclockwise of ray apex->v0
    pts = clip_halfplane(pts, v1, apex)          # clockwise of ray apex->v1
    pts = clip_halfplane(pts, v1, v0)            # far side of the segment line
    if len(pts) < 3:
        return np.empty((0, 2))
    return np.array(pts)


class GridSpec:
    """Raster geometry: cell (ix, iy) center is origin + (ix, iy) * resolution.

    Row iy = 0 is the bottom row (lower-left origin). Arrays are indexed
    [iy, ix].
    """

    def __init__(self, extent, resolution_m):
        if resolution_m <= 0:
            raise ValueError("resolution_m must be positive")
        self.extent = extent
        self.resolution_m = float(resolution_m)
        self.nx = max(1, int(round(extent.width / resolution_m)))
        self.ny = max(1, int(round(extent.height / resolution_m)))
        self.origin = (
            extent.xmin + 0.5 * self.resolution_m,
            extent.ymin + 0.5 * self.resolution_m,
        )

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def num_cells(self):
        return self.nx * self.ny

    def cell_centers_x(self):
        return self.origin[0] + np.arange(self.nx) * self.resolution_m

    def cell_centers_y(self):
        return self.origin[1] + np.arange(self.ny) * self.resolution_m

    def cell_index(self, x, y):
        """Nearest-cell lookup by cell-partition of the extent; clamps the
        boundary-inclusive edge."""
        ix = int(np.floor((x - self.extent.xmin) / self.resolution_m))
        iy = int(np.floor((y - self.extent.ymin) / self.resolution_m))
        ix = min(max(ix, 0), self.nx - 1) if self.extent.xmin <= x <= self.extent.xmax else ix
        iy = min(max(iy, 0), self.ny - 1) if self.extent.ymin <= y <= self.extent.ymax else iy
        return ix, iy


def rasterize_polygons(grid, polys, eps=EDGE_EPS):
    """Boolean coverage mask of the union of polygons on a GridSpec.

    Scanline even-odd fill at cell centers, edge-inclusive within ``eps``:
    matches :func:`points_in_polygon` away from the eps boundary band.
    """
    ny, nx = grid.shape
    delta = np.zeros((ny, nx + 1), dtype=np.int32)
    oy = grid.origin[1]
    ox = grid.origin[0]
    res = grid.resolution_m
    ys = oy + np.arange(ny) * res
    any_fill = False
    for poly in polys:
        poly = np.asarray(poly, float)
        if len(poly) < 3:
            continue
        ymin = poly[:, 1].min()
        ymax = poly[:, 1].max()
        r0 = max(0, int(np.ceil((ymin - eps - oy) / res)))
        r1 = min(ny - 1, int(np.floor((ymax + eps - oy) / res)))
        if r0 > r1:
            continue
        yr = ys[r0:r1 + 1]
        rows = r1 - r0 + 1
        crossings = np.full((rows, len(poly)), np.inf)
        for k in range(len(poly)):
            x0, y0 = poly[k]
            x1, y1 = poly[(k + 1) % len(poly)]
            if y0 == y1:
                continue
            mask = (y0 > yr) != (y1 > yr)
            if not np.any(mask):
                continue
            t = (yr[mask] - y0) / (y1 - y0)
            crossings[mask, k] = x0 + t * (x1 - x0)
        crossings.sort(axis=1)
        counts = np.sum(np.isfinite(crossings), axis=1)
        max_pairs = int(counts.max()) // 2 if len(counts) else 0
        for pair in range(max_pairs):
            xa = crossings[:, 2 * pair]
            xb = crossings[:, 2 * pair + 1]
            valid = np.isfinite(xb)
            if not np.any(valid):
                continue
            i0 = np.ceil((xa[valid] - eps - ox) / res).astype(np.int64)
            i1 = np.floor((xb[valid] + eps - ox) / res).astype(np.int64)
            i0 = np.clip(i0, 0, nx)
            i1 = np.clip(i1, -1, nx - 1)
            rr = (np.arange(r0, r1 + 1))[valid]
            keep = i1 >= i0
            if not np.any(keep):
                continue
            np.add.at(delta, (rr[keep], i0[keep]), 1)
            np.add.at(delta, (rr[keep], i1[keep] + 1), -1)
            any_fill = True
    if not any_fill:
        return np.zeros((ny, nx), dtype=bool)
    return np.cumsum(delta, axis=1)[:, :-1] > 0
