"""Grid artifact persistence and raster rendering.

Binary payloads are little-endian, row-major with the origin at the
lower-left; uint8 for state layers (``.u8``) and float32 for dB layers
(``.f32``), each paired with a JSON sidecar. Write-then-read round-trips
bit-exactly. PNG rendering is deterministic for fixed inputs and embeds
the legend as a text chunk.
"""

import hashlib
import io
import json
import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image
from PIL.PngImagePlugin import PngInfo

from .errors import SidecarMismatchError, UnsupportedLayerError

STATE_LAYER = "los_state"
DB_LAYERS = ("pathloss", "lsf", "ssf", "total")

# map palette: LOS green, NLOS red, BUILDING gray
STATE_COLORS = {
    0: (60, 170, 80),
    1: (200, 60, 50),
    2: (120, 120, 120),
}
MASK_COLOR = (120, 120, 120)


@dataclass
class GridArtifact:
    """One raster layer plus its georeferencing sidecar."""

    layer: str
    data: np.ndarray
    meta: dict = field(default_factory=dict)

    def sidecar(self):
        doc = {
            "layer": self.layer,
            "dtype": "uint8" if self.data.dtype == np.uint8 else "float32",
            "width": int(self.data.shape[1]),
            "height": int(self.data.shape[0]),
            "order": "row-major, origin lower-left, little-endian",
        }
        doc.update(self.meta)
        return doc


def _payload_path(stem, dtype):
    return f"{stem}.u8" if dtype == np.uint8 else f"{stem}.f32"


def write_grid(artifact, stem):
    """Write payload + sidecar for an artifact; returns the file paths."""
    data = artifact.data
    if data.dtype == np.uint8:
        payload = _payload_path(stem, np.uint8)
        raw = data.astype("<u1", copy=False)
    else:
        payload = _payload_path(stem, np.float32)
        raw = data.astype("<f4", copy=False)
    with open(payload, "wb") as fh:
        fh.write(raw.tobytes(order="C"))
    sidecar = f"{stem}.json"
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump(artifact.sidecar(), fh, sort_keys=True, indent=1)
    return payload, sidecar


def read_grid(stem):
    """Read an artifact written by :func:`write_grid`; validates the sidecar."""
    sidecar = f"{stem}.json"
    with open(sidecar, encoding="utf-8") as fh:
        meta = json.load(fh)
    dtype = np.uint8 if meta.get("dtype") == "uint8" else np.float32
    payload = _payload_path(stem, dtype)
    if not os.path.exists(payload):
        raise SidecarMismatchError(f"payload {payload} missing for sidecar {sidecar}")
    raw = np.fromfile(payload, dtype="<u1" if dtype == np.uint8 else "<f4")
    w = int(meta["width"])
    h = int(meta["height"])
    if raw.size != w * h:
        raise SidecarMismatchError(
            f"{payload}: payload has {raw.size} cells, sidecar says {w}x{h}={w * h}"
        )
    data = raw.reshape(h, w).astype(dtype, copy=False)
    layer = meta.pop("layer", "unknown")
    for key in ("dtype", "width", "height", "order"):
        meta.pop(key, None)
    return GridArtifact(layer=layer, data=data, meta=meta)


def grid_checksum(artifact):
    h = hashlib.sha256()
    h.update(artifact.data.astype("<u1" if artifact.data.dtype == np.uint8 else "<f4")
             .tobytes(order="C"))
    return h.hexdigest()


@dataclass(frozen=True)
class MapStyle:
    """Rendering options for dB layers: linear color ramp with clipping."""

    vmin: float = 60.0
    vmax: float = 160.0
    colormap: str = "viridis"
    mask_color: tuple = MASK_COLOR


def _colormap_lut(name):
    from matplotlib import colormaps

    cmap = colormaps[name]
    lut = (np.asarray(cmap(np.linspace(0.0, 1.0, 256)))[:, :3] * 255.0).round().astype(np.uint8)
    return lut


def color_position(value, style):
    """Linear ramp position in [0, 1]: (value - vmin) / (vmax - vmin), clipped."""
    span = style.vmax - style.vmin
    return float(np.clip((value - style.vmin) / span, 0.0, 1.0))


def render_png(artifact, style=None):
    """Render an artifact to PNG bytes.

    State layers use the fixed LOS/NLOS/BUILDING palette. dB layers map
    values through a 256-entry colormap LUT at index round(position * 255);
    masked (NaN) cells get the mask color. The legend is embedded in the
    ``uxprop:legend`` text chunk. Output bytes are deterministic.
    """
    if style is None:
        style = MapStyle()
    data = artifact.data
    if artifact.layer == STATE_LAYER or artifact.layer == "outage":
        rgb = np.zeros(data.shape + (3,), dtype=np.uint8)
        for state, color in STATE_COLORS.items():
            rgb[data == state] = color
        legend = {"layer": artifact.layer, "states": {str(k): list(v) for k, v in STATE_COLORS.items()}}
        legend.update({k: v for k, v in artifact.meta.items() if k in ("threshold_db", "eirp_dbm")})
    elif artifact.layer in DB_LAYERS:
        lut = _colormap_lut(style.colormap)
        vals = data.astype(float)
        mask = np.isnan(vals)
        span = style.vmax - style.vmin
        pos = np.clip((vals - style.vmin) / span, 0.0, 1.0)
        pos[mask] = 0.0
        idx = np.round(pos * 255.0).astype(np.uint8)
        rgb = lut[idx]
        rgb[mask] = style.mask_color
        legend = {
            "layer": artifact.layer,
            "units": "dB",
            "vmin": style.vmin,
            "vmax": style.vmax,
            "colormap": style.colormap,
            "mask_color": list(style.mask_color),
        }
    else:
        raise UnsupportedLayerError(artifact.layer)
    # row 0 is the bottom row; PNG rows go top-down
    img = Image.fromarray(np.flipud(rgb), "RGB")
    info = PngInfo()
    info.add_text("uxprop:legend", json.dumps(legend, sort_keys=True))
    buf = io.BytesIO()
    img.save(buf, format="PNG", pnginfo=info)
    return buf.getvalue()


def save_png(artifact, path, style=None):
    data = render_png(artifact, style)
    with open(path, "wb") as fh:
        fh.write(data)
    return path
