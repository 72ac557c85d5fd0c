"""CSV / JSON report writers and matplotlib figure rendering.

Every report path emits delimited output plus a rendered figure next to
it. All writers produce deterministic bytes for identical inputs: floats
are formatted with repr-stable %.10g, JSON keys are sorted, and figures
are saved with fixed metadata.
"""

import csv
import json

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .route import empirical_cdf
from .visibility import STATE_NAMES

_PNG_META = {"Software": "uxprop"}


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
    return path


def write_trace_csv(path, trace):
    rows = []
    for i in range(len(trace.arc_s)):
        att = trace.attenuation_db[i]
        rows.append(
            (
                trace.arc_s[i],
                trace.positions[i, 0],
                trace.positions[i, 1],
                STATE_NAMES[int(trace.states[i])],
                "" if np.isnan(att) else _fmt(float(att)),
            )
        )
    return write_csv(path, ["arc_s_m", "x_m", "y_m", "state", "attenuation_db"], rows)


def write_runs_csv(path, stats):
    rows = [(STATE_NAMES[s.state], s.start_s, s.end_s, s.length_m) for s in stats.segments]
    return write_csv(path, ["state", "start_s_m", "end_s_m", "length_m"], rows)


def write_outage_csv(path, outage_list):
    rows = []
    for ost in outage_list:
        for s in ost.segments:
            rows.append((ost.eirp_dbm, ost.threshold_db, s.start_s, s.end_s, s.length_m))
    return write_csv(path, ["eirp_dbm", "threshold_db", "start_s_m", "end_s_m", "length_m"], rows)


def write_cdf_csv(path, values):
    xs, ps = empirical_cdf(values)
    return write_csv(path, ["value", "cum_prob"], zip(xs, ps))


def cdf_figure(path, series, xlabel, title=None):
    """Step-CDF plot of one or more labelled value lists."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=110)
    for label, values in series.items():
        if len(values) == 0:
            continue
        xs, ps = empirical_cdf(values)
        ax.step(np.concatenate([[xs[0]], xs]), np.concatenate([[0.0], ps]),
                where="post", label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("empirical CDF")
    ax.set_ylim(0.0, 1.02)
    ax.grid(alpha=0.3)
    if title:
        ax.set_title(title)
    if series:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)
    return path


def route_profile_figure(path, trace, thresholds=()):
    """Attenuation along the route, colored by LOS state, with outage thresholds."""
    fig, ax = plt.subplots(figsize=(7.0, 3.6), dpi=110)
    colors = {0: "tab:green", 1: "tab:red", 2: "0.5"}
    s = trace.arc_s
    att = trace.attenuation_db
    if trace.has_attenuation:
        for state, color in colors.items():
            mask = trace.states == state
            if np.any(mask):
                ax.plot(s[mask], att[mask], ".", ms=2.5, color=color,
                        label=STATE_NAMES[state])
        for thr in thresholds:
            ax.axhline(thr, ls="--", lw=1.0, color="k", alpha=0.6)
            ax.annotate(f"{thr:g} dB", (s[-1], thr), fontsize=7,
                        ha="right", va="bottom")
        ax.set_ylabel("attenuation [dB]")
    else:
        ax.plot(s, trace.states, drawstyle="steps-post")
        ax.set_ylabel("state")
    ax.set_xlabel("distance along route [m]")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8, loc="lower right")
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)
    return path


def campaign_figures(outdir, result):
    """Per-height run-length CDFs and outage CDFs for a campaign result."""
    paths = []
    runs = {}
    for h, stats in result.per_height.items():
        for state in ("LOS", "NLOS"):
            vals = stats["run_lengths"][state]
            if vals:
                runs[f"{state} @ {h:g} m"] = vals
    p = f"{outdir}/runlength_cdf.png"
    cdf_figure(p, runs, "segment length [m]", "LOS/NLOS segment lengths")
    paths.append(p)
    outs = {}
    for h, stats in result.per_height.items():
        for eirp, vals in stats["outage_lengths"].items():
            if vals:
                outs[f"EIRP {eirp} dBm @ {h:g} m"] = vals
    p = f"{outdir}/outage_cdf.png"
    cdf_figure(p, outs, "outage segment length [m]", "Outage distances")
    paths.append(p)
    return paths
