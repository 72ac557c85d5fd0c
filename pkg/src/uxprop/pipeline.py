"""Shared orchestration between the CLI and the HTTP service.

Both front ends funnel through these helpers so that identical
configurations produce identical artifacts.
"""

import numpy as np

from .channel import compose_channel_map
from .errors import InvalidConfigError
from .gridio import GridArtifact, MapStyle, STATE_LAYER
from .scene import crop_scene, load_scene
from .visibility import TxConfig, compute_los_map, los_probability


def open_scene(cfg):
    if not cfg.scene:
        raise InvalidConfigError("scene", "scene file is required")
    return load_scene(cfg.scene, height_attr=cfg.height_attr, metric=cfg.metric)


def resolve_tx(cfg, scene):
    tx_x = cfg.tx_x
    tx_y = cfg.tx_y
    if tx_x is None:
        tx_x = 0.5 * (scene.bounds.xmin + scene.bounds.xmax)
    if tx_y is None:
        tx_y = 0.5 * (scene.bounds.ymin + scene.bounds.ymax)
    return TxConfig(position=(tx_x, tx_y), altitude_m=cfg.altitude_m,
                    ue_height_m=cfg.ue_height_m)


def build_los_map(scene, tx, cfg):
    """Crop around the transmitter and rasterize the LOS map."""
    if cfg.radius_m:
        sub = crop_scene(scene, tx.position, cfg.radius_m,
                         min_tx_altitude_m=tx.altitude_m,
                         ue_height_m=tx.ue_height_m)
    else:
        sub = scene
    los = compute_los_map(sub, tx, cfg.resolution_m, extent=sub.bounds,
                          cell_cap=cfg.cell_cap)
    return sub, los


def build_channel_map(los, cfg):
    params = cfg.channel_params()
    return compose_channel_map(los, params, cfg.seed, no_fading=cfg.no_fading)


def grid_meta(los, cfg, digest, extra=None):
    meta = {
        "origin": [los.origin[0], los.origin[1]],
        "resolution_m": los.resolution_m,
        "extent": [los.extent.xmin, los.extent.ymin, los.extent.xmax, los.extent.ymax],
        "tx": {
            "x": los.tx.position[0],
            "y": los.tx.position[1],
            "altitude_m": los.tx.altitude_m,
            "ue_height_m": los.tx.ue_height_m,
        },
        "config_digest": digest,
    }
    if extra:
        meta.update(extra)
    return meta


def los_artifact(los, cfg, digest):
    return GridArtifact(layer=STATE_LAYER, data=los.grid,
                        meta=grid_meta(los, cfg, digest, {"units": "state"}))


def channel_artifacts(chan, cfg, digest):
    import hashlib
    import json

    params_digest = hashlib.sha256(
        json.dumps(chan.params.to_dict(), sort_keys=True).encode()
    ).hexdigest()[:16]
    extra = {"units": "dB", "seed": chan.seed, "params_digest": params_digest,
             "params": chan.params.to_dict()}
    arts = {}
    for name in ("pathloss", "lsf", "ssf", "total"):
        arts[name] = GridArtifact(layer=name, data=chan.layer(name),
                                  meta=grid_meta(chan.los, cfg, digest, extra))
    return arts


def db_style(chan):
    """Clip range spanning the finite part of the total layer, rounded to 5 dB."""
    vals = chan.total[np.isfinite(chan.total)]
    if vals.size == 0:
        return MapStyle()
    lo = float(np.floor(vals.min() / 5.0) * 5.0)
    hi = float(np.ceil(vals.max() / 5.0) * 5.0)
    if hi <= lo:
        hi = lo + 5.0
    return MapStyle(vmin=lo, vmax=hi)


def los_report(los):
    p_los, p_nlos = los_probability(los)
    grid = los.grid
    return {
        "p_los": p_los,
        "p_nlos": p_nlos,
        "cells": int(grid.size),
        "building_cells": int(np.sum(grid == 2)),
        "width": int(grid.shape[1]),
        "height": int(grid.shape[0]),
    }
