"""State- and altitude-dependent FR3 channel synthesis.

Total attenuation per cell (dB) is composed as

    total = path_loss + large_scale_fading + small_scale_fading

with free-space-referenced log-distance path loss, a spatially correlated
Gaussian shadow-fading field scaled by a state/height-dependent sigma,
and i.i.d. log-logistic small-scale fading with unit mean SNR. Cells
inside building footprints are masked with NaN in every layer.
"""

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.ndimage import correlate1d

from .errors import GridTooSmallWarning, InvalidConfigError, InvalidDistanceError
from .visibility import BUILDING, LOS, NLOS

LIGHT_SPEED_M_S = 299_792_458.0

# Philox stream ids, one per stochastic layer
_LAYER_LSF_LOS = 1
_LAYER_LSF_NLOS = 2
_LAYER_SSF = 3


@dataclass(frozen=True)
class HeightParam:
    """Exponential transition toward an asymptote: g(h) = p1 + (p2 - p1) exp(-h / p3).

    p1 is the high-altitude asymptote, p2 the extrapolated ground-level
    value, p3 the transition rate height in meters.
    """

    p1: float
    p2: float
    p3: float

    def __post_init__(self):
        if not self.p3 > 0:
            raise InvalidConfigError("p3", "transition rate height must be positive")

    def as_list(self):
        return [self.p1, self.p2, self.p3]


def eval_height_param(p, h):
    """Evaluate the exponential height transition at altitude h (meters)."""
    return p.p1 + (p.p2 - p.p1) * math.exp(-h / p.p3)


@dataclass(frozen=True)
class ChannelParams:
    """FR3 channel parameter set (defaults: RT-calibrated values at 16.95 GHz)."""

    carrier_hz: float = 16.95e9
    los_ple: float = 2.0
    nlos_ple: HeightParam = field(default_factory=lambda: HeightParam(2.91, 4.53, 26.4))
    los_sigma_db: HeightParam = field(default_factory=lambda: HeightParam(4.34, 5.24, 30.8))
    nlos_sigma_db: HeightParam = field(default_factory=lambda: HeightParam(16.1, 20.0, 23.0))
    los_ddcr_m: HeightParam = field(default_factory=lambda: HeightParam(7.0, 14.64, 27.0))
    nlos_ddcr_m: HeightParam = field(default_factory=lambda: HeightParam(8.28, 15.43, 36.0))
    los_beta: float = 1.96
    nlos_beta: float = 1.91

    def __post_init__(self):
        if not self.carrier_hz > 0:
            raise InvalidConfigError("carrier_hz", "must be positive")
        for name in ("los_beta", "nlos_beta"):
            if not getattr(self, name) > 1:
                raise InvalidConfigError(name, "log-logistic shape must exceed 1 for a finite mean")
        for name in ("los_sigma_db", "nlos_sigma_db"):
            if getattr(self, name).p1 < 0:
                raise InvalidConfigError(name, "sigma asymptote must be non-negative")
        for name in ("los_ddcr_m", "nlos_ddcr_m"):
            if not getattr(self, name).p1 > 0:
                raise InvalidConfigError(name, "decorrelation asymptote must be positive")

    def ple(self, state, h_tx):
        return self.los_ple if state == LOS else eval_height_param(self.nlos_ple, h_tx)

    def sigma_db(self, state, h_tx):
        p = self.los_sigma_db if state == LOS else self.nlos_sigma_db
        return eval_height_param(p, h_tx)

    def ddcr_m(self, state, h_tx):
        p = self.los_ddcr_m if state == LOS else self.nlos_ddcr_m
        return eval_height_param(p, h_tx)

    def beta(self, state):
        return self.los_beta if state == LOS else self.nlos_beta

    def to_dict(self):
        return {
            "carrier_hz": self.carrier_hz,
            "los_ple": self.los_ple,
            "nlos_ple": self.nlos_ple.as_list(),
            "los_sigma_db": self.los_sigma_db.as_list(),
            "nlos_sigma_db": self.nlos_sigma_db.as_list(),
            "los_ddcr_m": self.los_ddcr_m.as_list(),
            "nlos_ddcr_m": self.nlos_ddcr_m.as_list(),
            "los_beta": self.los_beta,
            "nlos_beta": self.nlos_beta,
        }

    @classmethod
    def from_dict(cls, doc):
        base = cls()
        kwargs = {}
        for key in ("carrier_hz", "los_ple", "los_beta", "nlos_beta"):
            if key in doc:
                kwargs[key] = float(doc[key])
        for key in ("nlos_ple", "los_sigma_db", "nlos_sigma_db", "los_ddcr_m", "nlos_ddcr_m"):
            if key in doc:
                v = doc[key]
                if isinstance(v, dict):
                    v = [v["p1"], v["p2"], v["p3"]]
                kwargs[key] = HeightParam(*(float(x) for x in v))
        return replace(base, **kwargs)


def default_params():
    return ChannelParams()


def path_loss(d3d_m, state, h_tx, params):
    """Log-distance path loss in dB at 3D distance ``d3d_m``.

    20 log10(4 pi f / c) + 10 n_s(h_tx) log10(d3d); the LOS exponent is
    constant, the NLOS exponent follows the height transition model.
    """
    if np.isscalar(d3d_m) and d3d_m <= 0:
        raise InvalidDistanceError(f"d3d_m={d3d_m}")
    const = 20.0 * np.log10(4.0 * np.pi * params.carrier_hz / LIGHT_SPEED_M_S)
    n = params.ple(state, h_tx)
    return const + 10.0 * n * np.log10(d3d_m)


def _philox(seed, layer):
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(layer)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _gaussian_kernel(sigma_cells, truncate=4.0):
    radius = int(truncate * sigma_cells + 0.5)
    if radius < 1:
        return None
    x = np.arange(-radius, radius + 1, dtype=float)
    k = np.exp(-0.5 * (x / sigma_cells) ** 2)
    return k / k.sum()


def correlated_unit_field(shape, dcr_cells, seed, layer):
    """Zero-mean, unit-variance Gaussian field with isotropic Gaussian
    autocorrelation equal to 1/e at lag ``dcr_cells``.

    White noise is convolved (periodic boundaries) with a Gaussian kernel
    of standard deviation dcr/2, then divided by the exact L2 norm of the
    kernel so the variance is 1 by construction.
    """
    rng = _philox(seed, layer)
    noise = rng.standard_normal(shape)
    sigma_k = dcr_cells / 2.0
    kernel = _gaussian_kernel(sigma_k)
    if kernel is None:
        return noise
    out = correlate1d(noise, kernel, axis=0, mode="wrap")
    out = correlate1d(out, kernel, axis=1, mode="wrap")
    return out / float(np.sum(kernel ** 2))


def generate_lsf_field(los_map, h_tx, params, seed):
    """Correlated large-scale fading layer (dB) aligned to a LOS map.

    Two independent unit fields are synthesized (one per state, with
    state-specific decorrelation distance) and scaled by sigma_state(h_tx).
    Deterministic for a fixed seed. BUILDING cells are NaN.
    """
    grid = los_map.grid
    res = los_map.resolution_m
    xi = np.full(grid.shape, np.nan)
    for state, layer in ((LOS, _LAYER_LSF_LOS), (NLOS, _LAYER_LSF_NLOS)):
        dcr = params.ddcr_m(state, h_tx)
        if min(grid.shape) * res < 3.0 * dcr:
            warnings.warn(
                f"grid shorter than 3 x d_dcr={dcr:.1f} m; field statistics unreliable",
                GridTooSmallWarning,
                stacklevel=2,
            )
        sigma = params.sigma_db(state, h_tx)
        s_field = correlated_unit_field(grid.shape, dcr / res, seed, layer)
        mask = grid == state
        xi[mask] = sigma * s_field[mask]
    return xi


def ssf_gamma_from_uniform(u, beta):
    """Inverse CDF of the unit-mean log-logistic SNR: gamma = sinc(1/beta) (u/(1-u))^(1/beta)."""
    alpha = np.sinc(1.0 / beta)
    return alpha * (u / (1.0 - u)) ** (1.0 / beta)


def ssf_cdf(gamma, beta, mean_snr=1.0):
    """Log-logistic CDF with scale fixed to sinc(1/beta) so E[gamma] = mean_snr."""
    alpha = np.sinc(1.0 / beta)
    g = np.asarray(gamma, dtype=float) / mean_snr
    return g ** beta / (alpha ** beta + g ** beta)


def sample_ssf(state, params, rng):
    """One small-scale fading draw: (linear SNR gamma, dB term zeta)."""
    beta = params.beta(state)
    u = rng.random()
    u = min(max(u, 1e-15), 1.0 - 1e-15)
    gamma = float(ssf_gamma_from_uniform(u, beta))
    return gamma, 10.0 * math.log10(gamma)


def _ssf_layer(grid, params, seed):
    rng = _philox(seed, _LAYER_SSF)
    u = rng.random(grid.shape)
    u = np.clip(u, 1e-15, 1.0 - 1e-15)
    zeta = np.full(grid.shape, np.nan)
    for state in (LOS, NLOS):
        mask = grid == state
        gamma = ssf_gamma_from_uniform(u[mask], params.beta(state))
        zeta[mask] = 10.0 * np.log10(gamma)
    return zeta


@dataclass(frozen=True)
class ChannelMap:
    """Per-cell channel attenuation layers (float32, dB) aligned to a LosMap.

    total = pathloss + lsf + ssf holds exactly in float32 arithmetic at
    every non-BUILDING cell; BUILDING cells are NaN everywhere.
    """

    los: object
    pathloss: np.ndarray
    lsf: np.ndarray
    ssf: np.ndarray
    total: np.ndarray
    seed: int
    params: ChannelParams

    def layer(self, name):
        layers = {"pathloss": self.pathloss, "lsf": self.lsf,
                  "ssf": self.ssf, "total": self.total}
        return layers[name]


def compose_channel_map(los_map, params, seed, no_fading=False):
    """Synthesize all channel layers over a LOS map; reproducible from seed.

    3D distance uses cell centers and is clamped below at one resolution
    to keep the log finite directly under the transmitter. With
    ``no_fading`` the stochastic layers are zero and total equals pathloss
    bit-exactly.
    """
    grid = los_map.grid
    spec = los_map.spec()
    res = los_map.resolution_m
    tx = los_map.tx
    xs = spec.cell_centers_x()
    ys = spec.cell_centers_y()
    dx = xs[None, :] - tx.position[0]
    dy = ys[:, None] - tx.position[1]
    dz = tx.altitude_m - tx.ue_height_m
    d3d = np.sqrt(dx * dx + dy * dy + dz * dz)
    np.maximum(d3d, res, out=d3d)

    const = 20.0 * np.log10(4.0 * np.pi * params.carrier_hz / LIGHT_SPEED_M_S)
    pl = np.full(grid.shape, np.nan)
    log_d = np.log10(d3d)
    for state in (LOS, NLOS):
        mask = grid == state
        pl[mask] = const + 10.0 * params.ple(state, tx.altitude_m) * log_d[mask]

    if no_fading:
        xi = np.where(grid == BUILDING, np.nan, 0.0)
        zeta = xi.copy()
    else:
        xi = generate_lsf_field(los_map, tx.altitude_m, params, seed)
        zeta = _ssf_layer(grid, params, seed)

    pl32 = pl.astype(np.float32)
    xi32 = xi.astype(np.float32)
    zeta32 = zeta.astype(np.float32)
    total32 = pl32 + xi32 + zeta32
    return ChannelMap(los=los_map, pathloss=pl32, lsf=xi32, ssf=zeta32,
                      total=total32, seed=int(seed), params=params)
