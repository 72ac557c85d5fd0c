"""Run configuration: defaults, JSON config file, override precedence, digests.

Precedence: command-line flags > UXPROP_SEED environment variable >
config file > built-in defaults.
"""

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields

from .channel import ChannelParams
from .errors import InvalidConfigError


@dataclass
class RunConfig:
    scene: str = None
    height_attr: str = "height"
    metric: bool = False
    tx_x: float = None
    tx_y: float = None
    altitude_m: float = 60.0
    ue_height_m: float = 1.5
    resolution_m: float = 1.0
    radius_m: float = 250.0
    carrier_hz: float = 16.95e9
    param_overrides: dict = field(default_factory=dict)
    seed: int = 0
    outdir: str = "out"
    eirp_dbm: list = field(default_factory=lambda: [13.0, 23.0])
    sensitivity_dbm: float = -84.7
    no_fading: bool = False
    cell_cap: int = 100_000_000
    # campaign settings
    heights_m: list = field(default_factory=lambda: [30.0, 150.0])
    n_tx: int = 20
    routes_per_tx: int = 5
    route_style: str = "chord"
    street_pitch_m: float = None
    street_width_m: float = None

    def validate(self):
        for name in ("resolution_m", "radius_m", "carrier_hz", "ue_height_m"):
            v = getattr(self, name)
            if v is not None and name != "ue_height_m" and not v > 0:
                raise InvalidConfigError(name, "must be positive")
        if self.ue_height_m < 0:
            raise InvalidConfigError("ue_height_m", "must be non-negative")
        if self.altitude_m is not None and self.altitude_m <= self.ue_height_m:
            raise InvalidConfigError("altitude_m", "must exceed ue_height_m")
        return self

    def channel_params(self):
        doc = dict(self.param_overrides or {})
        doc.setdefault("carrier_hz", self.carrier_hz)
        return ChannelParams.from_dict(doc)

    def to_dict(self):
        return asdict(self)

    def digest(self):
        """Stable hash of the content-determining config plus the scene file bytes.

        Output location does not affect artifact content, so ``outdir`` and
        the scene path string are excluded; the scene enters via its sha256.
        """
        doc = self.to_dict()
        doc.pop("outdir", None)
        doc.pop("scene", None)
        if self.scene and os.path.exists(self.scene):
            h = hashlib.sha256()
            with open(self.scene, "rb") as fh:
                h.update(fh.read())
            doc["scene_sha256"] = h.hexdigest()
        blob = json.dumps(doc, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def load_config(config_path=None, flag_overrides=None):
    """Resolve a RunConfig from defaults, file, environment, and flags."""
    cfg = RunConfig()
    known = {f.name for f in fields(RunConfig)}
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            doc = json.load(fh)
        for key, value in doc.items():
            if key not in known:
                raise InvalidConfigError(key, "unknown config field")
            setattr(cfg, key, value)
    env_seed = os.environ.get("UXPROP_SEED")
    if env_seed is not None:
        cfg.seed = int(env_seed)
    for key, value in (flag_overrides or {}).items():
        if value is None:
            continue
        if key not in known:
            raise InvalidConfigError(key, "unknown override field")
        setattr(cfg, key, value)
    return cfg.validate()
