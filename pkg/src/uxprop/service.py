"""JSON-over-HTTP service for the interactive planner.

The scene is loaded once at startup. Map computations are cached by a
digest of the request plus the run configuration, so identical requests
return the same artifact id without recomputation. The in-memory
artifact store is LRU-bounded by total cell count.

Errors: 400 with the violated field named, 404 for unknown artifacts,
413 when the requested grid exceeds the cell cap.
"""

import hashlib
import json
import threading
from collections import OrderedDict

import numpy as np
from fastapi import Body, FastAPI
from fastapi.responses import JSONResponse, Response

from . import pipeline
from .channel import default_params
from .config import RunConfig
from .errors import (
    GridTooLargeError,
    InvalidConfigError,
    RouteOutsideMapError,
    UxpropError,
)
from .gridio import GridArtifact, STATE_LAYER, render_png
from .route import Route, outage_segments, sample_route, segment_runs
from .visibility import STATE_NAMES, TxConfig


class ArtifactStore:
    """LRU map id -> artifact entry, bounded by total stored cells."""

    def __init__(self, cell_budget=200_000_000):
        self.cell_budget = cell_budget
        self._store = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key):
        with self._lock:
            entry = self._store.get(key)
            if entry is not None:
                self._store.move_to_end(key)
                self.hits += 1
            else:
                self.misses += 1
            return entry

    def put(self, key, entry, cells):
        with self._lock:
            self._store[key] = (entry, cells)
            self._store.move_to_end(key)
            total = sum(c for _, c in self._store.values())
            while total > self.cell_budget and len(self._store) > 1:
                _, (_, c) = self._store.popitem(last=False)
                total -= c

    def __contains__(self, key):
        with self._lock:
            return key in self._store


def _digest(doc):
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


def _require_number(doc, path, field_name, positive=False):
    v = doc
    for part in path:
        if not isinstance(v, dict) or part not in v:
            raise InvalidConfigError(field_name, "missing")
        v = v[part]
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not np.isfinite(v):
        raise InvalidConfigError(field_name, "must be a finite number")
    if positive and not v > 0:
        raise InvalidConfigError(field_name, "must be positive")
    return float(v)


def create_app(scene, cfg=None, ui_dir=None):
    cfg = cfg or RunConfig()
    store = ArtifactStore()
    app = FastAPI(title="uxprop", version="0.1.0")
    config_digest = cfg.digest()

    from fastapi.middleware.cors import CORSMiddleware

    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    def error_response(exc):
        if isinstance(exc, InvalidConfigError):
            return JSONResponse(status_code=400,
                                content={"error": "invalid_field", "field": exc.field,
                                         "message": exc.message})
        if isinstance(exc, GridTooLargeError):
            return JSONResponse(status_code=413,
                                content={"error": "grid_too_large", "message": str(exc)})
        if isinstance(exc, RouteOutsideMapError):
            return JSONResponse(status_code=400,
                                content={"error": "route_outside_map", "field": "waypoints",
                                         "message": str(exc)})
        return JSONResponse(status_code=400,
                            content={"error": type(exc).__name__, "message": str(exc)})

    @app.exception_handler(UxpropError)
    async def _uxprop_handler(request, exc):
        return error_response(exc)

    def parse_tx(doc):
        x = _require_number(doc, ("tx", "x"), "tx.x")
        y = _require_number(doc, ("tx", "y"), "tx.y")
        alt = _require_number(doc, ("tx", "altitude_m"), "altitude_m")
        ue = doc.get("tx", {}).get("ue_height_m", cfg.ue_height_m)
        if not isinstance(ue, (int, float)) or ue < 0:
            raise InvalidConfigError("ue_height_m", "must be non-negative")
        if alt <= ue:
            raise InvalidConfigError("altitude_m", "must exceed ue_height_m")
        if not scene.bounds.contains(x, y, tol=1e-9):
            raise InvalidConfigError("tx.x", "transmitter outside scene bounds")
        return TxConfig(position=(x, y), altitude_m=alt, ue_height_m=float(ue))

    def request_cfg(doc):
        res = doc.get("resolution_m", cfg.resolution_m)
        if not isinstance(res, (int, float)) or not res > 0:
            raise InvalidConfigError("resolution_m", "must be positive")
        radius = doc.get("radius_m", cfg.radius_m)
        if radius is not None and (not isinstance(radius, (int, float)) or not radius > 0):
            raise InvalidConfigError("radius_m", "must be positive")
        return float(res), (float(radius) if radius else None)

    def compute_losmap(doc):
        tx = parse_tx(doc)
        res, radius = request_cfg(doc)
        key = _digest({"op": "losmap", "tx": [tx.position[0], tx.position[1],
                                              tx.altitude_m, tx.ue_height_m],
                       "res": res, "radius": radius, "config": config_digest})
        entry = store.get(key)
        if entry is not None:
            return key, entry[0]
        run = RunConfig(**{**cfg.to_dict(),
                           "resolution_m": res, "radius_m": radius,
                           "altitude_m": tx.altitude_m, "ue_height_m": tx.ue_height_m,
                           "tx_x": tx.position[0], "tx_y": tx.position[1]})
        _, los = pipeline.build_los_map(scene, tx, run)
        entry = {"kind": "losmap", "los": los, "chan": None,
                 "report": pipeline.los_report(los), "pngs": {}}
        store.put(key, entry, los.grid.size)
        return key, entry

    def compute_chanmap(doc):
        tx = parse_tx(doc)
        res, radius = request_cfg(doc)
        seed = doc.get("seed", cfg.seed)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise InvalidConfigError("seed", "must be an integer")
        overrides = doc.get("params") or {}
        if not isinstance(overrides, dict):
            raise InvalidConfigError("params", "must be an object")
        no_fading = bool(doc.get("no_fading", cfg.no_fading))
        key = _digest({"op": "chanmap", "tx": [tx.position[0], tx.position[1],
                                               tx.altitude_m, tx.ue_height_m],
                       "res": res, "radius": radius, "seed": seed,
                       "params": overrides, "no_fading": no_fading,
                       "config": config_digest})
        entry = store.get(key)
        if entry is not None:
            return key, entry[0]
        run = RunConfig(**{**cfg.to_dict(),
                           "resolution_m": res, "radius_m": radius,
                           "altitude_m": tx.altitude_m, "ue_height_m": tx.ue_height_m,
                           "tx_x": tx.position[0], "tx_y": tx.position[1],
                           "seed": seed, "no_fading": no_fading,
                           "param_overrides": {**cfg.param_overrides, **overrides}})
        _, los = pipeline.build_los_map(scene, tx, run)
        chan = pipeline.build_channel_map(los, run)
        entry = {"kind": "chanmap", "los": los, "chan": chan,
                 "report": pipeline.los_report(los), "pngs": {}}
        store.put(key, entry, los.grid.size * 5)
        return key, entry

    @app.get("/scene/summary")
    def scene_summary():
        b = scene.bounds
        return {
            "bounds": [b.xmin, b.ymin, b.xmax, b.ymax],
            "building_count": len(scene.buildings),
            "source": scene.metadata.get("source"),
            "origin_lon": scene.metadata.get("origin_lon"),
            "origin_lat": scene.metadata.get("origin_lat"),
            "config_digest": config_digest,
        }

    @app.get("/scene/footprints")
    def scene_footprints():
        feats = [{"id": b.id, "height_m": b.height_m,
                  "footprint": b.footprint.tolist()} for b in scene.buildings]
        return {"buildings": feats, "config_digest": config_digest}

    @app.post("/losmap")
    def post_losmap(doc: dict = Body(...)):
        key, entry = compute_losmap(doc)
        rep = entry["report"]
        return {"artifact_id": key, "p_los": rep["p_los"], "p_nlos": rep["p_nlos"],
                "width": rep["width"], "height": rep["height"],
                "config_digest": config_digest}

    @app.post("/chanmap")
    def post_chanmap(doc: dict = Body(...)):
        key, entry = compute_chanmap(doc)
        rep = entry["report"]
        chan = entry["chan"]
        return {"artifact_id": key, "p_los": rep["p_los"], "p_nlos": rep["p_nlos"],
                "width": rep["width"], "height": rep["height"], "seed": chan.seed,
                "config_digest": config_digest}

    def _artifact_or_404(artifact_id):
        entry = store.get(artifact_id)
        if entry is None:
            return None
        return entry[0]

    @app.get("/map/{artifact_id}.png")
    def map_png(artifact_id: str, layer: str = None, eirp_dbm: float = None,
                sensitivity_dbm: float = None):
        entry = _artifact_or_404(artifact_id)
        if entry is None:
            return JSONResponse(status_code=404, content={"error": "unknown artifact"})
        layer = layer or ("total" if entry["chan"] is not None else STATE_LAYER)
        chan = entry["chan"]
        if layer == "outage":
            if chan is None:
                return JSONResponse(status_code=400,
                                    content={"error": "invalid_field", "field": "layer",
                                             "message": "artifact has no channel layers"})
            eirp = cfg.eirp_dbm[0] if eirp_dbm is None else float(eirp_dbm)
            sens = cfg.sensitivity_dbm if sensitivity_dbm is None else float(sensitivity_dbm)
            cache_key = f"outage:{eirp}:{sens}"
        else:
            cache_key = layer
        if cache_key in entry["pngs"]:
            png = entry["pngs"][cache_key]
        else:
            if layer == STATE_LAYER:
                art = pipeline.los_artifact(entry["los"], cfg, config_digest)
                png = render_png(art)
            elif layer == "outage":
                thr = eirp - sens
                total = chan.total
                data = np.where(np.isnan(total), 2, (total > thr)).astype(np.uint8)
                art = GridArtifact(layer="outage", data=data,
                                   meta={"threshold_db": thr, "eirp_dbm": eirp})
                png = render_png(art)
            else:
                if chan is None:
                    return JSONResponse(status_code=400,
                                        content={"error": "invalid_field", "field": "layer",
                                                 "message": "artifact has no channel layers"})
                arts = pipeline.channel_artifacts(chan, cfg, config_digest)
                if layer not in arts:
                    return JSONResponse(status_code=400,
                                        content={"error": "invalid_field", "field": "layer",
                                                 "message": f"unknown layer {layer}"})
                png = render_png(arts[layer], pipeline.db_style(chan))
            entry["pngs"][cache_key] = png
        return Response(content=png, media_type="image/png",
                        headers={"x-config-digest": config_digest})

    @app.get("/map/{artifact_id}/meta")
    def map_meta(artifact_id: str):
        entry = _artifact_or_404(artifact_id)
        if entry is None:
            return JSONResponse(status_code=404, content={"error": "unknown artifact"})
        los = entry["los"]
        meta = pipeline.grid_meta(los, cfg, config_digest)
        meta["kind"] = entry["kind"]
        meta["report"] = entry["report"]
        if entry["chan"] is not None:
            meta["seed"] = entry["chan"].seed
            meta["params"] = entry["chan"].params.to_dict()
        return meta

    @app.post("/route")
    def post_route(doc: dict = Body(...)):
        artifact_id = doc.get("artifact_id")
        entry = _artifact_or_404(artifact_id) if artifact_id else None
        if entry is None:
            return JSONResponse(status_code=404, content={"error": "unknown artifact"})
        waypoints = doc.get("waypoints")
        if not isinstance(waypoints, list) or len(waypoints) < 2:
            raise InvalidConfigError("waypoints", "need at least 2 points")
        try:
            rt = Route(np.asarray(waypoints, dtype=float))
        except (ValueError, TypeError) as exc:
            raise InvalidConfigError("waypoints", str(exc))
        eirp = doc.get("eirp_dbm", cfg.eirp_dbm)
        if isinstance(eirp, (int, float)):
            eirp = [eirp]
        sens = doc.get("sensitivity_dbm", cfg.sensitivity_dbm)
        step = doc.get("step_m", entry["los"].resolution_m)
        if not isinstance(step, (int, float)) or not step > 0:
            raise InvalidConfigError("step_m", "must be positive")
        trace = sample_route(rt, float(step), entry["los"], entry["chan"])
        stats = segment_runs(trace)
        out = []
        if entry["chan"] is not None:
            for e in eirp:
                ost = outage_segments(trace, float(e), float(sens))
                out.append({
                    "eirp_dbm": ost.eirp_dbm,
                    "sensitivity_dbm": ost.sensitivity_dbm,
                    "threshold_db": ost.threshold_db,
                    "p_outage": ost.p_outage,
                    "outage_m": ost.outage_m,
                    "segments": [[s.start_s, s.end_s] for s in ost.segments],
                })
        att = trace.attenuation_db
        return {
            "trace": {
                "arc_s": trace.arc_s.tolist(),
                "states": [STATE_NAMES[int(s)] for s in trace.states],
                "attenuation_db": [None if np.isnan(a) else float(a) for a in att],
                "step_m": trace.step_m,
            },
            "runs": {
                "segments": [[STATE_NAMES[s.state], s.start_s, s.end_s] for s in stats.segments],
                "run_lengths": stats.run_lengths,
                "p_state": stats.p_state,
                "building_crossing_m": stats.building_crossing_m,
                "total_length_m": stats.total_length_m,
            },
            "outage": out,
            "config_digest": config_digest,
        }

    @app.get("/params/default")
    def params_default():
        return {"params": default_params().to_dict(), "config_digest": config_digest}

    @app.get("/store/stats")
    def store_stats():
        return {"hits": store.hits, "misses": store.misses}

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    app.state.store = store
    app.state.scene = scene
    return app
