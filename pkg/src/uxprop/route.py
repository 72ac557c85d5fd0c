"""Route sampling, LOS/NLOS run segmentation, and threshold-based outage analysis.

Run-length bookkeeping convention: each inter-sample interval is assigned
whole to the common state when both endpoint samples agree, and split at
its midpoint when they differ. Route ends close the first and last runs.
Under this convention the per-state lengths conserve the route length
exactly. BUILDING samples terminate runs and accrue to a separate
crossing bucket excluded from both LOS and NLOS statistics.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyInputError,
    MissingChannelLayerError,
    RouteOutsideMapError,
)
from .visibility import BUILDING, LOS, NLOS, STATE_NAMES, compute_los_map, los_probability
from .channel import compose_channel_map

DEFAULT_EIRP_DBM = (13.0, 23.0)
DEFAULT_SENSITIVITY_DBM = -84.7


@dataclass(frozen=True)
class Route:
    """Polyline trajectory on the user plane."""

    waypoints: np.ndarray

    def __post_init__(self):
        wp = np.asarray(self.waypoints, dtype=float)
        if wp.ndim != 2 or wp.shape[0] < 2 or wp.shape[1] != 2:
            raise ValueError("route needs at least 2 waypoints of (x, y)")
        steps = np.hypot(*(np.diff(wp, axis=0).T))
        if np.any(steps <= 0):
            raise ValueError("consecutive waypoints must be distinct")
        object.__setattr__(self, "waypoints", wp)
        object.__setattr__(self, "_cum", np.concatenate([[0.0], np.cumsum(steps)]))

    @property
    def length_m(self):
        return float(self._cum[-1])

    def position_at(self, s):
        s = np.asarray(s, dtype=float)
        x = np.interp(s, self._cum, self.waypoints[:, 0])
        y = np.interp(s, self._cum, self.waypoints[:, 1])
        return np.column_stack([x, y])


@dataclass(frozen=True)
class RouteTrace:
    """Route sampled at fixed arc-length steps with per-sample map lookups."""

    arc_s: np.ndarray
    positions: np.ndarray
    states: np.ndarray
    attenuation_db: np.ndarray  # NaN where masked or absent
    step_m: float
    has_attenuation: bool


@dataclass(frozen=True)
class RunSegment:
    state: int
    start_s: float
    end_s: float

    @property
    def length_m(self):
        return self.end_s - self.start_s


@dataclass(frozen=True)
class SegmentStats:
    """Maximal same-state runs along a trace plus traversed-distance fractions."""

    segments: tuple
    run_lengths: dict
    building_crossing_m: float
    p_state: dict
    total_length_m: float


@dataclass(frozen=True)
class OutageStats:
    """Outage runs for one EIRP / sensitivity pair."""

    eirp_dbm: float
    sensitivity_dbm: float
    threshold_db: float
    segments: tuple
    outage_m: float
    p_outage: float
    total_length_m: float


def sample_route(route, step_m, los_map, chan_map=None):
    """Sample the route at arc lengths 0, step, 2 step, ..., L (endpoint included).

    State and attenuation are read by nearest-cell lookup. Raises
    RouteOutsideMapError if any sample leaves the map extent.
    """
    if step_m <= 0:
        raise ValueError("step_m must be positive")
    L = route.length_m
    s = np.arange(0.0, L, step_m)
    if L - s[-1] > 1e-9:
        s = np.append(s, L)
    else:
        s[-1] = L
    pos = route.position_at(s)
    spec = los_map.spec()
    ext = spec.extent
    tol = 1e-9
    ok = (pos[:, 0] >= ext.xmin - tol) & (pos[:, 0] <= ext.xmax + tol) \
        & (pos[:, 1] >= ext.ymin - tol) & (pos[:, 1] <= ext.ymax + tol)
    if not np.all(ok):
        bad = int(np.flatnonzero(~ok)[0])
        raise RouteOutsideMapError(
            f"sample {bad} at s={s[bad]:.2f} m ({pos[bad, 0]:.2f}, {pos[bad, 1]:.2f}) outside extent"
        )
    ix = np.clip(np.floor((pos[:, 0] - ext.xmin) / spec.resolution_m).astype(int), 0, spec.nx - 1)
    iy = np.clip(np.floor((pos[:, 1] - ext.ymin) / spec.resolution_m).astype(int), 0, spec.ny - 1)
    states = los_map.grid[iy, ix]
    if chan_map is not None:
        atten = chan_map.total[iy, ix].astype(float)
        has_att = True
    else:
        atten = np.full(len(s), np.nan)
        has_att = False
    return RouteTrace(arc_s=s, positions=pos, states=states,
                      attenuation_db=atten, step_m=float(step_m), has_attenuation=has_att)


def _runs_from_labels(arc_s, labels):
    """Maximal runs with midpoint-split boundaries; conserves total length."""
    runs = []
    start = float(arc_s[0])
    for i in range(1, len(labels)):
        if labels[i] != labels[i - 1]:
            mid = 0.5 * (float(arc_s[i - 1]) + float(arc_s[i]))
            runs.append((int(labels[i - 1]), start, mid))
            start = mid
    runs.append((int(labels[-1]), start, float(arc_s[-1])))
    return runs


def segment_runs(trace):
    """LOS/NLOS run-length statistics of a sampled trace."""
    if len(trace.arc_s) == 0:
        raise EmptyInputError("empty trace")
    if len(trace.arc_s) == 1:
        runs = [(int(trace.states[0]), float(trace.arc_s[0]), float(trace.arc_s[0]))]
    else:
        runs = _runs_from_labels(trace.arc_s, trace.states)
    segments = tuple(RunSegment(state, a, b) for state, a, b in runs)
    run_lengths = {"LOS": [], "NLOS": []}
    crossing = 0.0
    per_state = {LOS: 0.0, NLOS: 0.0, BUILDING: 0.0}
    for seg in segments:
        per_state[seg.state] += seg.length_m
        if seg.state == BUILDING:
            crossing += seg.length_m
        else:
            run_lengths[STATE_NAMES[seg.state]].append(seg.length_m)
    total = float(trace.arc_s[-1] - trace.arc_s[0])
    denom = total if total > 0 else 1.0
    p_state = {STATE_NAMES[k]: v / denom for k, v in per_state.items()}
    return SegmentStats(segments=segments, run_lengths=run_lengths,
                        building_crossing_m=crossing, p_state=p_state,
                        total_length_m=total)


def outage_segments(trace, eirp_dbm, sensitivity_dbm=DEFAULT_SENSITIVITY_DBM):
    """Outage runs: samples whose attenuation exceeds eirp - sensitivity.

    BUILDING samples (masked attenuation) are excluded from outage runs;
    p_outage is outage distance over total route length.
    """
    if not trace.has_attenuation:
        raise MissingChannelLayerError("trace carries no attenuation layer")
    threshold = eirp_dbm - sensitivity_dbm
    att = trace.attenuation_db
    labels = np.where(np.isnan(att), 2, (att > threshold).astype(int))
    if len(trace.arc_s) == 1:
        runs = [(int(labels[0]), float(trace.arc_s[0]), float(trace.arc_s[0]))]
    else:
        runs = _runs_from_labels(trace.arc_s, labels)
    segs = tuple(RunSegment(1, a, b) for lab, a, b in runs if lab == 1)
    outage_m = float(sum(s.length_m for s in segs))
    total = float(trace.arc_s[-1] - trace.arc_s[0])
    p = outage_m / total if total > 0 else 0.0
    return OutageStats(eirp_dbm=float(eirp_dbm), sensitivity_dbm=float(sensitivity_dbm),
                       threshold_db=float(threshold), segments=segs,
                       outage_m=outage_m, p_outage=p, total_length_m=total)


def empirical_cdf(values):
    """Sorted step-function CDF: P(X <= x_k) = k / N.

    Returns (values, probs) arrays.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise EmptyInputError("empirical_cdf of no values")
    xs = np.sort(values)
    ps = np.arange(1, len(xs) + 1) / len(xs)
    return xs, ps


@dataclass
class CampaignResult:
    """Aggregated per-height statistics of a batch campaign."""

    heights_m: list
    per_height: dict  # height -> stats dict
    config: dict

    def to_dict(self):
        return {
            "heights_m": self.heights_m,
            "per_height": {str(h): stats for h, stats in self.per_height.items()},
            "config": self.config,
        }


def random_chord(rng, center, radius):
    """Uniform random chord of a disk: uniform angle and signed offset."""
    for _ in range(100):
        theta = rng.uniform(0.0, np.pi)
        offset = rng.uniform(-0.98 * radius, 0.98 * radius)
        half = math.sqrt(max(radius * radius - offset * offset, 0.0)) * 0.995
        if half > 5.0:
            break
    n = np.array([math.cos(theta), math.sin(theta)])
    d = np.array([-n[1], n[0]])
    c = np.asarray(center, dtype=float) + offset * n
    return Route(np.array([c - half * d, c + half * d]))


def random_street_chord(rng, center, radius, street_pitch_m, street_width_m, margin_m=1.0):
    """Axis-aligned chord lying inside a street corridor of a grid city.

    Streets are assumed centered on integer multiples of ``street_pitch_m``
    along both axes. Models outdoor (pedestrian/vehicle) trajectories that
    never enter footprints, which is what exposes the block-period
    structure of NLOS run lengths.
    """
    for _ in range(200):
        horiz = bool(rng.random() < 0.5)
        c_axis = center[1] if horiz else center[0]
        k_lo = int(math.floor((c_axis - radius) / street_pitch_m))
        k_hi = int(math.ceil((c_axis + radius) / street_pitch_m))
        k = int(rng.integers(k_lo, k_hi + 1))
        half_w = max(street_width_m / 2.0 - margin_m, 0.1)
        c = k * street_pitch_m + float(rng.uniform(-half_w, half_w))
        d = abs(c - c_axis)
        if d >= 0.9 * radius:
            continue
        half = math.sqrt(radius * radius - d * d) * 0.98
        if half < 0.2 * radius:
            continue
        if horiz:
            return Route(np.array([[center[0] - half, c], [center[0] + half, c]]))
        return Route(np.array([[c, center[1] - half], [c, center[1] + half]]))
    return random_chord(rng, center, radius)


def batch_campaign(scene, heights, n_tx, coverage_radius_m, routes_per_tx, params, seed,
                   resolution_m=1.0, ue_height_m=1.5, eirp_dbm=DEFAULT_EIRP_DBM,
                   sensitivity_dbm=DEFAULT_SENSITIVITY_DBM, step_m=None, cell_cap=None,
                   route_style="chord", street_pitch_m=None, street_width_m=None,
                   progress=None):
    """Monte-Carlo campaign over transmitter placements and random routes.

    For each (height, realization) a transmitter is placed uniformly at
    random in the scene, the scene is cropped to the coverage disk, LOS and
    channel maps are built, and random routes through the disk are
    analyzed. ``route_style`` is "chord" (uniform random chords, default)
    or "street" (axis-aligned chords confined to street corridors of a
    grid city; requires street pitch/width). Deterministic for a fixed
    seed: realization (height index, tx index) uses an independent child
    RNG stream.
    """
    from .scene import crop_scene  # local import to avoid cycle
    from .visibility import TxConfig

    if not heights:
        raise ValueError("heights must be non-empty")
    if n_tx < 1:
        raise ValueError("n_tx must be >= 1")
    if route_style not in ("chord", "street"):
        raise ValueError(f"unknown route_style {route_style!r}")
    if route_style == "street":
        street_pitch_m = street_pitch_m or scene.metadata.get("block_m")
        street_width_m = street_width_m or scene.metadata.get("street_m")
        if not street_pitch_m or not street_width_m:
            raise ValueError("street route style needs street_pitch_m and street_width_m")
    if step_m is None:
        step_m = resolution_m
    eirp_list = [float(e) for e in eirp_dbm]
    bounds = scene.bounds
    per_height = {}
    for hi, h in enumerate(heights):
        runs = {"LOS": [], "NLOS": []}
        dist = {"LOS": 0.0, "NLOS": 0.0, "BUILDING": 0.0}
        outage_runs = {e: [] for e in eirp_list}
        outage_dist = {e: 0.0 for e in eirp_list}
        total_dist = 0.0
        p_los_map = []
        for ti in range(n_tx):
            ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(hi, ti))
            rng = np.random.Generator(np.random.Philox(ss))
            chan_seed = int(ss.generate_state(2, np.uint64)[1])
            lo_x = bounds.xmin + coverage_radius_m
            hi_x = bounds.xmax - coverage_radius_m
            lo_y = bounds.ymin + coverage_radius_m
            hi_y = bounds.ymax - coverage_radius_m
            if lo_x >= hi_x or lo_y >= hi_y:  # scene smaller than the disk
                cx = 0.5 * (bounds.xmin + bounds.xmax)
                cy = 0.5 * (bounds.ymin + bounds.ymax)
            else:
                cx = rng.uniform(lo_x, hi_x)
                cy = rng.uniform(lo_y, hi_y)
            tx = TxConfig(position=(cx, cy), altitude_m=float(h), ue_height_m=ue_height_m)
            sub = crop_scene(scene, (cx, cy), coverage_radius_m,
                             min_tx_altitude_m=float(h), ue_height_m=ue_height_m)
            kwargs = {} if cell_cap is None else {"cell_cap": cell_cap}
            los = compute_los_map(sub, tx, resolution_m, extent=sub.bounds, **kwargs)
            chan = compose_channel_map(los, params, chan_seed)
            p_los_map.append(los_probability(los)[0])
            for _ in range(routes_per_tx):
                if route_style == "street":
                    route = random_street_chord(rng, (cx, cy), coverage_radius_m,
                                                street_pitch_m, street_width_m)
                else:
                    route = random_chord(rng, (cx, cy), coverage_radius_m)
                trace = sample_route(route, step_m, los, chan)
                stats = segment_runs(trace)
                for key in ("LOS", "NLOS"):
                    runs[key].extend(stats.run_lengths[key])
                for key, frac in stats.p_state.items():
                    dist[key] += frac * stats.total_length_m
                total_dist += stats.total_length_m
                for e in eirp_list:
                    ost = outage_segments(trace, e, sensitivity_dbm)
                    outage_runs[e].extend(s.length_m for s in ost.segments)
                    outage_dist[e] += ost.outage_m
            if progress:
                progress(h, ti)
        accessible = dist["LOS"] + dist["NLOS"]
        cdf_tables = {}
        for key in ("LOS", "NLOS"):
            if runs[key]:
                xs, ps = empirical_cdf(runs[key])
                cdf_tables[key] = {"value_m": xs.tolist(), "cum_prob": ps.tolist()}
        for e in eirp_list:
            if outage_runs[e]:
                xs, ps = empirical_cdf(outage_runs[e])
                cdf_tables[f"outage_{e:g}dBm"] = {"value_m": xs.tolist(),
                                                  "cum_prob": ps.tolist()}
        per_height[float(h)] = {
            "p_los_route": dist["LOS"] / accessible if accessible > 0 else 1.0,
            "p_nlos_route": dist["NLOS"] / accessible if accessible > 0 else 0.0,
            "p_building_route": dist["BUILDING"] / total_dist if total_dist > 0 else 0.0,
            "p_los_map_mean": float(np.mean(p_los_map)),
            "total_route_m": total_dist,
            "run_lengths": runs,
            "p_outage": {str(e): outage_dist[e] / total_dist if total_dist > 0 else 0.0
                         for e in eirp_list},
            "outage_lengths": {str(e): outage_runs[e] for e in eirp_list},
            "cdf": cdf_tables,
        }
    config = {
        "heights_m": [float(h) for h in heights],
        "n_tx": int(n_tx),
        "coverage_radius_m": float(coverage_radius_m),
        "routes_per_tx": int(routes_per_tx),
        "resolution_m": float(resolution_m),
        "step_m": float(step_m),
        "ue_height_m": float(ue_height_m),
        "eirp_dbm": eirp_list,
        "sensitivity_dbm": float(sensitivity_dbm),
        "seed": int(seed),
        "route_style": route_style,
    }
    return CampaignResult(heights_m=[float(h) for h in heights],
                          per_height=per_height, config=config)
