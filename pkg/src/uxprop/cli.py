"""Command-line driver: losmap, chanmap, route, campaign, params, serve.

Every command reads an optional JSON config file plus flag overrides and
writes its artifacts under the output directory. Re-running a command
with the same config and seed reproduces every artifact byte-for-byte.
Errors are reported as one JSON object on stderr with a nonzero exit code.
"""

import json
import os
import sys

import click
import numpy as np

from . import pipeline, report
from .channel import default_params
from .config import load_config
from .errors import UxpropError
from .gridio import save_png, write_grid
from .route import (
    DEFAULT_SENSITIVITY_DBM,
    Route,
    batch_campaign,
    outage_segments,
    sample_route,
    segment_runs,
)
from .scene import load_scene


def _fail(exc):
    doc = {"error": type(exc).__name__, "message": str(exc)}
    field = getattr(exc, "field", None)
    if field:
        doc["field"] = field
    click.echo(json.dumps(doc, sort_keys=True), err=True)
    sys.exit(2)


def _common_options(fn):
    opts = [
        click.option("--config", "config_path", type=click.Path(exists=True), default=None,
                     help="JSON config file"),
        click.option("--scene", default=None, help="GeoJSON scene file"),
        click.option("--height-attr", "height_attr", default=None),
        click.option("--metric", is_flag=True, default=None,
                     help="scene coordinates already in meters"),
        click.option("--tx", "tx_xy", nargs=2, type=float, default=None,
                     help="transmitter x y in meters"),
        click.option("--altitude", "altitude_m", type=float, default=None),
        click.option("--ue-height", "ue_height_m", type=float, default=None),
        click.option("--resolution", "resolution_m", type=float, default=None),
        click.option("--radius", "radius_m", type=float, default=None,
                     help="coverage radius for cropping, meters"),
        click.option("--carrier", "carrier_hz", type=float, default=None),
        click.option("--param-overrides", "param_file", type=click.Path(exists=True),
                     default=None, help="JSON document of channel parameter overrides"),
        click.option("--seed", type=int, default=None),
        click.option("--out", "outdir", default=None),
        click.option("--eirp", "eirp_dbm", multiple=True, type=float,
                     help="EIRP values in dBm (repeatable)"),
        click.option("--sensitivity", "sensitivity_dbm", type=float, default=None),
        click.option("--no-fading", "no_fading", is_flag=True, default=None),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _resolve(config_path, kwargs):
    overrides = {}
    tx_xy = kwargs.pop("tx_xy", None)
    if tx_xy:
        overrides["tx_x"], overrides["tx_y"] = tx_xy
    param_file = kwargs.pop("param_file", None)
    if param_file:
        with open(param_file, encoding="utf-8") as fh:
            overrides["param_overrides"] = json.load(fh)
    eirp = kwargs.pop("eirp_dbm", ())
    if eirp:
        overrides["eirp_dbm"] = list(eirp)
    for key, value in kwargs.items():
        if value is not None:
            overrides[key] = value
    return load_config(config_path, overrides)


def _ensure_outdir(cfg):
    os.makedirs(cfg.outdir, exist_ok=True)
    return cfg.outdir


@click.group()
def main():
    """uxprop: building-shadow LOS maps and FR3 channel maps for aerial base stations."""


@main.command()
@_common_options
def losmap(config_path, **kwargs):
    """Compute the LOS/NLOS map around the transmitter."""
    try:
        cfg = _resolve(config_path, kwargs)
        scene = pipeline.open_scene(cfg)
        tx = pipeline.resolve_tx(cfg, scene)
        _, los = pipeline.build_los_map(scene, tx, cfg)
        outdir = _ensure_outdir(cfg)
        digest = cfg.digest()
        art = pipeline.los_artifact(los, cfg, digest)
        write_grid(art, os.path.join(outdir, "los_state"))
        save_png(art, os.path.join(outdir, "los_state.png"))
        doc = pipeline.los_report(los)
        doc["config_digest"] = digest
        report.write_json(os.path.join(outdir, "losmap_report.json"), doc)
        report.write_json(os.path.join(outdir, "load_report.json"),
                          scene.metadata.get("load_report", {}))
        click.echo(json.dumps({"p_los": doc["p_los"], "p_nlos": doc["p_nlos"],
                               "outdir": outdir}, sort_keys=True))
    except (UxpropError, OSError) as exc:
        _fail(exc)


@main.command()
@_common_options
def chanmap(config_path, **kwargs):
    """Compute LOS map plus all channel attenuation layers."""
    try:
        cfg = _resolve(config_path, kwargs)
        scene = pipeline.open_scene(cfg)
        tx = pipeline.resolve_tx(cfg, scene)
        _, los = pipeline.build_los_map(scene, tx, cfg)
        chan = pipeline.build_channel_map(los, cfg)
        outdir = _ensure_outdir(cfg)
        digest = cfg.digest()
        art = pipeline.los_artifact(los, cfg, digest)
        write_grid(art, os.path.join(outdir, "los_state"))
        save_png(art, os.path.join(outdir, "los_state.png"))
        style = pipeline.db_style(chan)
        for name, cart in pipeline.channel_artifacts(chan, cfg, digest).items():
            write_grid(cart, os.path.join(outdir, name))
            save_png(cart, os.path.join(outdir, f"{name}.png"), style)
        vals = chan.total[np.isfinite(chan.total)]
        report.write_cdf_csv(os.path.join(outdir, "attenuation_cdf.csv"), vals)
        report.cdf_figure(os.path.join(outdir, "attenuation_cdf.png"),
                          {"total attenuation": vals}, "attenuation [dB]")
        doc = pipeline.los_report(los)
        doc.update({"config_digest": digest, "seed": cfg.seed})
        report.write_json(os.path.join(outdir, "chanmap_report.json"), doc)
        click.echo(json.dumps({"outdir": outdir, "seed": cfg.seed}, sort_keys=True))
    except (UxpropError, OSError) as exc:
        _fail(exc)


def _load_route(path):
    """Route waypoints from GeoJSON LineString or CSV x,y rows (meters)."""
    if path.endswith(".json") or path.endswith(".geojson"):
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        geom = doc.get("geometry", doc)
        if geom.get("type") == "Feature":
            geom = geom["geometry"]
        if geom.get("type") != "LineString":
            raise UxpropError(f"{path}: expected a LineString route")
        return Route(np.asarray(geom["coordinates"], dtype=float))
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return Route(rows[:, :2])


@main.command()
@click.argument("route_file", type=click.Path(exists=True))
@click.option("--step", "step_m", type=float, default=None, help="sampling step, meters")
@_common_options
def route(route_file, step_m, config_path, **kwargs):
    """Analyze a route: LOS/NLOS runs and outage segments per EIRP."""
    try:
        cfg = _resolve(config_path, kwargs)
        scene = pipeline.open_scene(cfg)
        tx = pipeline.resolve_tx(cfg, scene)
        _, los = pipeline.build_los_map(scene, tx, cfg)
        chan = pipeline.build_channel_map(los, cfg)
        rt = _load_route(route_file)
        step = step_m if step_m else cfg.resolution_m
        trace = sample_route(rt, step, los, chan)
        stats = segment_runs(trace)
        outages = [outage_segments(trace, e, cfg.sensitivity_dbm) for e in cfg.eirp_dbm]
        outdir = _ensure_outdir(cfg)
        report.write_trace_csv(os.path.join(outdir, "trace.csv"), trace)
        report.write_runs_csv(os.path.join(outdir, "runs.csv"), stats)
        report.write_outage_csv(os.path.join(outdir, "outage.csv"), outages)
        report.route_profile_figure(os.path.join(outdir, "route_profile.png"), trace,
                                    [o.threshold_db for o in outages])
        series = {k: v for k, v in stats.run_lengths.items() if v}
        if series:
            report.cdf_figure(os.path.join(outdir, "runlength_cdf.png"), series,
                              "segment length [m]")
        doc = {
            "p_state": stats.p_state,
            "building_crossing_m": stats.building_crossing_m,
            "total_length_m": stats.total_length_m,
            "outage": [
                {"eirp_dbm": o.eirp_dbm, "threshold_db": o.threshold_db,
                 "p_outage": o.p_outage, "outage_m": o.outage_m,
                 "n_segments": len(o.segments)}
                for o in outages
            ],
            "config_digest": cfg.digest(),
        }
        report.write_json(os.path.join(outdir, "route_report.json"), doc)
        click.echo(json.dumps({"p_state": stats.p_state,
                               "p_outage": {str(o.eirp_dbm): o.p_outage for o in outages}},
                              sort_keys=True))
    except (UxpropError, OSError) as exc:
        _fail(exc)


@main.command()
@click.option("--heights", "heights_m", multiple=True, type=float)
@click.option("--n-tx", "n_tx", type=int, default=None)
@click.option("--routes-per-tx", "routes_per_tx", type=int, default=None)
@click.option("--route-style", "route_style", type=click.Choice(["chord", "street"]),
              default=None, help="random chords (default) or street-corridor routes")
@click.option("--street-pitch", "street_pitch_m", type=float, default=None)
@click.option("--street-width", "street_width_m", type=float, default=None)
@_common_options
def campaign(heights_m, config_path, **kwargs):
    """Batch campaign: random transmitter placements per height, random routes."""
    try:
        if heights_m:
            kwargs["heights_m"] = list(heights_m)
        cfg = _resolve(config_path, kwargs)
        scene = pipeline.open_scene(cfg)
        params = cfg.channel_params()
        result = batch_campaign(
            scene, cfg.heights_m, cfg.n_tx, cfg.radius_m, cfg.routes_per_tx,
            params, cfg.seed, resolution_m=cfg.resolution_m,
            ue_height_m=cfg.ue_height_m, eirp_dbm=cfg.eirp_dbm,
            sensitivity_dbm=cfg.sensitivity_dbm, cell_cap=cfg.cell_cap,
            route_style=cfg.route_style, street_pitch_m=cfg.street_pitch_m,
            street_width_m=cfg.street_width_m,
        )
        outdir = _ensure_outdir(cfg)
        doc = result.to_dict()
        doc["config_digest"] = cfg.digest()
        report.write_json(os.path.join(outdir, "campaign.json"), doc)
        for h, stats in result.per_height.items():
            for state in ("LOS", "NLOS"):
                vals = stats["run_lengths"][state]
                if vals:
                    report.write_cdf_csv(
                        os.path.join(outdir, f"cdf_{state.lower()}_h{h:g}.csv"), vals)
            for eirp, vals in stats["outage_lengths"].items():
                if vals:
                    report.write_cdf_csv(
                        os.path.join(outdir, f"cdf_outage_e{eirp}_h{h:g}.csv"), vals)
        report.campaign_figures(outdir, result)
        summary = {str(h): {"p_los": s["p_los_route"], "p_outage": s["p_outage"]}
                   for h, s in result.per_height.items()}
        click.echo(json.dumps(summary, sort_keys=True))
    except (UxpropError, OSError) as exc:
        _fail(exc)


@main.command()
def params():
    """Dump the default channel parameter table as JSON."""
    click.echo(json.dumps(default_params().to_dict(), sort_keys=True, indent=1))


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8008)
@click.option("--ui-dir", "ui_dir", type=click.Path(exists=True), default=None,
              help="serve a built planner UI from this directory at /")
@_common_options
def serve(host, port, ui_dir, config_path, **kwargs):
    """Run the HTTP service with the scene preloaded."""
    try:
        import uvicorn

        from .service import create_app

        cfg = _resolve(config_path, kwargs)
        scene = load_scene(cfg.scene, height_attr=cfg.height_attr, metric=cfg.metric)
        app = create_app(scene, cfg, ui_dir=ui_dir)
        click.echo(json.dumps({"listening": f"http://{host}:{port}",
                               "buildings": len(scene.buildings)}), err=True)
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except (UxpropError, OSError) as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
