"""uxprop: 3D building-map driven LOS/NLOS and FR3 air-to-ground channel simulator."""

from .channel import (
    ChannelMap,
    ChannelParams,
    HeightParam,
    compose_channel_map,
    default_params,
    eval_height_param,
    generate_lsf_field,
    path_loss,
    sample_ssf,
)
from .errors import UxpropError, UxpropWarning
from .geometry import Rect
from .route import (
    Route,
    RouteTrace,
    SegmentStats,
    batch_campaign,
    empirical_cdf,
    outage_segments,
    sample_route,
    segment_runs,
)
from .scene import Building, Scene, crop_scene, load_scene, save_scene, validate_building
from .visibility import (
    BUILDING,
    LOS,
    NLOS,
    LosMap,
    ShadowRegion,
    TxConfig,
    building_shadow,
    compute_los_map,
    los_probability,
    los_raycast,
    los_raycast_batch,
    project_roof_vertex,
)

__version__ = "0.1.0"
