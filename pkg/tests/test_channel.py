import math

import numpy as np
import pytest

from uxprop.channel import (
    ChannelParams,
    HeightParam,
    compose_channel_map,
    correlated_unit_field,
    default_params,
    eval_height_param,
    generate_lsf_field,
    path_loss,
    sample_ssf,
    ssf_cdf,
    ssf_gamma_from_uniform,
)
from uxprop.errors import GridTooSmallWarning, InvalidConfigError, InvalidDistanceError
from uxprop.geometry import Rect
from uxprop.visibility import BUILDING, LOS, NLOS, LosMap, TxConfig, compute_los_map

TABLE = {
    "nlos_ple": (2.91, 4.53, 26.4),
    "los_sigma_db": (4.34, 5.24, 30.8),
    "nlos_sigma_db": (16.1, 20.0, 23.0),
    "los_ddcr_m": (7.0, 14.64, 27.0),
    "nlos_ddcr_m": (8.28, 15.43, 36.0),
}


def tx_at(alt=150.0, ue=1.5):
    return TxConfig(position=(0.0, 0.0), altitude_m=alt, ue_height_m=ue)


def synthetic_los_map(shape, state, resolution=1.0, alt=150.0):
    grid = np.full(shape, state, dtype=np.uint8)
    ext = Rect(0.0, 0.0, shape[1] * resolution, shape[0] * resolution)
    return LosMap(grid=grid, origin=(ext.xmin + resolution / 2, ext.ymin + resolution / 2),
                  resolution_m=resolution, tx=tx_at(alt=alt), extent=ext)


class TestHeightParam:
    def test_table_values_at_zero_and_infinity(self):
        p = HeightParam(*TABLE["nlos_ple"])
        assert eval_height_param(p, 0.0) == 4.53  # exact: Sterbenz-safe pair
        assert abs(eval_height_param(p, 10 * p.p3) - 2.91) < 1e-3

    def test_transition_point(self):
        p = HeightParam(*TABLE["nlos_ple"])
        assert eval_height_param(p, 26.4) == pytest.approx(2.91 + 1.62 * math.exp(-1.0), abs=1e-12)
        assert eval_height_param(p, 26.4) == pytest.approx(3.506, abs=1e-3)

    def test_deviation_bound_is_exponential(self):
        for vals in TABLE.values():
            p = HeightParam(*vals)
            for h in (0.0, 3.7, 26.4, 140.0):
                lhs = abs(eval_height_param(p, h) - p.p1)
                rhs = abs(p.p2 - p.p1) * math.exp(-h / p.p3)
                assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-15)

    def test_invalid_p3(self):
        with pytest.raises(InvalidConfigError):
            HeightParam(1.0, 2.0, 0.0)


class TestChannelParams:
    def test_defaults_match_table(self):
        p = default_params()
        doc = p.to_dict()
        assert doc["carrier_hz"] == 16.95e9
        assert doc["los_ple"] == 2
        assert doc["nlos_ple"] == [2.91, 4.53, 26.4]
        assert doc["los_sigma_db"] == [4.34, 5.24, 30.8]
        assert doc["nlos_sigma_db"] == [16.1, 20, 23]
        assert doc["los_ddcr_m"] == [7, 14.64, 27]
        assert doc["nlos_ddcr_m"] == [8.28, 15.43, 36]
        assert doc["los_beta"] == 1.96
        assert doc["nlos_beta"] == 1.91

    def test_from_dict_roundtrip_and_overrides(self):
        p = ChannelParams.from_dict({"los_beta": 2.5, "nlos_ple": [3.0, 4.0, 20.0]})
        assert p.los_beta == 2.5
        assert p.nlos_ple == HeightParam(3.0, 4.0, 20.0)
        assert p.nlos_beta == 1.91  # untouched default
        assert ChannelParams.from_dict(p.to_dict()) == p

    def test_invariants(self):
        with pytest.raises(InvalidConfigError):
            ChannelParams(los_beta=1.0)
        with pytest.raises(InvalidConfigError):
            ChannelParams(carrier_hz=0.0)


class TestPathLoss:
    def test_constant_term(self):
        pl = path_loss(1.0, LOS, 150.0, default_params())
        assert pl == pytest.approx(57.03, abs=0.01)

    def test_los_100m(self):
        pl = path_loss(100.0, LOS, 150.0, default_params())
        assert pl == pytest.approx(97.03, abs=0.01)

    def test_nlos_high_altitude_asymptote(self):
        pl = path_loss(100.0, NLOS, 1e9, default_params())
        assert pl == pytest.approx(115.23, abs=0.01)

    def test_invalid_distance(self):
        with pytest.raises(InvalidDistanceError):
            path_loss(0.0, LOS, 100.0, default_params())

    def test_monotone_in_distance_and_state(self):
        p = default_params()
        d = np.linspace(1.0, 500.0, 200)
        for state in (LOS, NLOS):
            pl = path_loss(d, state, 60.0, p)
            assert np.all(np.diff(pl) > 0)
        assert np.all(path_loss(d, NLOS, 60.0, p) >= path_loss(d, LOS, 60.0, p))


class TestLsfField:
    def test_variance_matches_sigma_squared_at_ground(self):
        # NLOS sigma(0) = 20 dB exactly
        m = synthetic_los_map((1000, 1000), NLOS)
        xi = generate_lsf_field(m, 0.0, default_params(), seed=42)
        var = float(np.var(xi))
        assert abs(var - 400.0) / 400.0 < 0.05
        assert abs(float(np.mean(xi))) < 3 * 20.0 / math.sqrt(1000 * 1000 / (16 * 15.43 ** 2))

    def test_autocorrelation_at_decorrelation_distance(self):
        # LOS d_dcr(150 m) = 7.0295 m; normalized autocorrelation at that lag
        # must be 1/e within +-0.1
        dcr = eval_height_param(default_params().los_ddcr_m, 150.0)
        assert dcr == pytest.approx(7.03, abs=0.005)
        field = correlated_unit_field((1200, 1200), dcr, seed=3, layer=1)
        r = _isotropic_autocorr(field, dcr)
        assert r == pytest.approx(math.exp(-1.0), abs=0.1)

    def test_state_scaling_ratio(self):
        grid = np.full((800, 800), LOS, dtype=np.uint8)
        grid[:, 400:] = NLOS
        ext = Rect(0, 0, 800, 800)
        lm = LosMap(grid=grid, origin=(0.5, 0.5), resolution_m=1.0,
                    tx=tx_at(alt=150.0), extent=ext)
        p = default_params()
        xi = generate_lsf_field(lm, 150.0, p, seed=9)
        s_los = float(np.std(xi[grid == LOS]))
        s_nlos = float(np.std(xi[grid == NLOS]))
        expect = p.sigma_db(LOS, 150.0) / p.sigma_db(NLOS, 150.0)
        assert s_los / s_nlos == pytest.approx(expect, rel=0.05)

    def test_building_cells_masked(self, single_building_scene):
        m = compute_los_map(single_building_scene, tx_at(alt=50.0), 1.0)
        xi = generate_lsf_field(m, 50.0, default_params(), seed=1)
        assert np.all(np.isnan(xi[m.grid == BUILDING]))
        assert np.all(np.isfinite(xi[m.grid != BUILDING]))

    def test_determinism_and_seed_sensitivity(self):
        m = synthetic_los_map((64, 64), NLOS)
        a = generate_lsf_field(m, 150.0, default_params(), seed=5)
        b = generate_lsf_field(m, 150.0, default_params(), seed=5)
        c = generate_lsf_field(m, 150.0, default_params(), seed=6)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_small_grid_warns(self):
        m = synthetic_los_map((10, 10), LOS)
        with pytest.warns(GridTooSmallWarning):
            generate_lsf_field(m, 0.0, default_params(), seed=1)


def _isotropic_autocorr(field, lag_m, resolution=1.0):
    """Average normalized autocorrelation over x/y shifts bracketing the lag."""
    f = field - field.mean()
    denom = float(np.mean(f * f))

    def corr_at(k):
        cx = np.mean(f[:, :-k] * f[:, k:]) / denom
        cy = np.mean(f[:-k, :] * f[k:, :]) / denom
        return 0.5 * (cx + cy)

    lag = lag_m / resolution
    k0 = int(math.floor(lag))
    k1 = k0 + 1
    w = lag - k0
    return (1 - w) * corr_at(k0) + w * corr_at(k1)


class TestSsf:
    def test_median_is_sinc_beta(self):
        g = ssf_gamma_from_uniform(0.5, 1.96)
        assert g == pytest.approx(0.6236, abs=5e-4)
        assert 10 * math.log10(g) == pytest.approx(-2.05, abs=5e-3)

    def test_cdf_at_scale_is_half(self):
        for beta in (1.96, 1.91):
            assert ssf_cdf(np.sinc(1 / beta), beta) == pytest.approx(0.5, abs=1e-12)

    def test_unit_mean(self):
        rng = np.random.default_rng(17)
        for beta in (1.96, 1.91):
            u = rng.random(1_000_000)
            g = ssf_gamma_from_uniform(np.clip(u, 1e-15, 1 - 1e-15), beta)
            assert float(np.mean(g)) == pytest.approx(1.0, abs=0.01)

    def test_ks_against_closed_form_cdf(self):
        # two-sided KS at significance 0.01: D_crit = 1.628 / sqrt(n)
        rng = np.random.default_rng(23)
        n = 100_000
        for beta in (1.96, 1.91):
            u = np.clip(rng.random(n), 1e-15, 1 - 1e-15)
            g = np.sort(ssf_gamma_from_uniform(u, beta))
            cdf = ssf_cdf(g, beta)
            ecdf_hi = np.arange(1, n + 1) / n
            ecdf_lo = np.arange(0, n) / n
            d = max(np.max(np.abs(ecdf_hi - cdf)), np.max(np.abs(cdf - ecdf_lo)))
            assert d < 1.628 / math.sqrt(n)

    def test_sample_ssf_pair_consistent(self):
        rng = np.random.default_rng(4)
        gamma, zeta = sample_ssf(LOS, default_params(), rng)
        assert gamma > 0
        assert zeta == pytest.approx(10 * math.log10(gamma))


def _logistic_pdf(y, loc, scale):
    z = (y - loc) / scale
    sech = 1.0 / np.cosh(z / 2.0)
    return sech * sech / (4.0 * scale)


def fading_sum_cdf_oracle(ts, sigma, beta):
    """CDF of Normal(0, sigma^2) + logistic small-scale fading in dB.

    The dB fading term 10 log10(gamma) of the unit-mean log-logistic SNR
    is exactly logistic with location 10 log10(sinc(1/beta)) and scale
    10 / (beta ln 10); the sum CDF follows by numerical convolution.
    """
    from scipy.stats import norm

    loc = 10.0 * math.log10(np.sinc(1.0 / beta))
    scale = 10.0 / (beta * math.log(10.0))
    y = np.linspace(loc - 30 * scale, loc + 30 * scale, 6001)
    w = _logistic_pdf(y, loc, scale)
    w /= np.trapezoid(w, y)
    out = np.empty(len(ts))
    for i, t in enumerate(ts):
        out[i] = np.trapezoid(norm.cdf((t - y) / sigma) * w, y)
    return out


class TestComposeChannelMap:
    def test_no_fading_total_equals_pathloss(self, single_building_scene):
        m = compute_los_map(single_building_scene, tx_at(alt=50.0), 1.0)
        chan = compose_channel_map(m, default_params(), seed=0, no_fading=True)
        nb = m.grid != BUILDING
        assert np.array_equal(chan.total[nb], chan.pathloss[nb])
        assert np.all(np.isnan(chan.total[~nb]))

    def test_determinism_bit_identical(self, single_building_scene):
        m = compute_los_map(single_building_scene, tx_at(alt=50.0), 1.0)
        a = compose_channel_map(m, default_params(), seed=11)
        b = compose_channel_map(m, default_params(), seed=11)
        for layer in ("pathloss", "lsf", "ssf", "total"):
            assert np.array_equal(a.layer(layer), b.layer(layer), equal_nan=True)

    def test_seed_changes_fading_not_geometry(self, single_building_scene):
        m = compute_los_map(single_building_scene, tx_at(alt=50.0), 1.0)
        a = compose_channel_map(m, default_params(), seed=1)
        b = compose_channel_map(m, default_params(), seed=2)
        assert np.array_equal(a.pathloss, b.pathloss, equal_nan=True)
        assert not np.array_equal(a.lsf, b.lsf, equal_nan=True)
        assert not np.array_equal(a.ssf, b.ssf, equal_nan=True)

    def test_composition_identity_float32(self, single_building_scene):
        m = compute_los_map(single_building_scene, tx_at(alt=50.0), 1.0)
        chan = compose_channel_map(m, default_params(), seed=3)
        nb = m.grid != BUILDING
        recomposed = chan.pathloss + chan.lsf + chan.ssf
        assert np.array_equal(chan.total[nb], recomposed[nb])

    def test_distance_is_3d(self):
        m = synthetic_los_map((3, 3), LOS, resolution=10.0, alt=100.0)
        chan = compose_channel_map(m, default_params(), seed=0, no_fading=True)
        spec = m.spec()
        x = spec.cell_centers_x()[2]
        y = spec.cell_centers_y()[2]
        d = math.sqrt(x * x + y * y + (100.0 - 1.5) ** 2)
        expect = path_loss(d, LOS, 100.0, default_params())
        assert chan.pathloss[2, 2] == pytest.approx(expect, rel=1e-6)

    def test_total_minus_pathloss_matches_convolution_oracle(self):
        # all-LOS scene at coarse resolution (many effective samples);
        # KS of (total - pathloss) against Normal (x) logistic < 0.01
        m = synthetic_los_map((1000, 1000), LOS, resolution=5.0, alt=150.0)
        p = default_params()
        chan = compose_channel_map(m, p, seed=21)
        resid = (chan.total.astype(np.float64) - chan.pathloss.astype(np.float64)).ravel()
        resid.sort()
        sigma = p.sigma_db(LOS, 150.0)
        grid_t = np.linspace(resid[0] - 1.0, resid[-1] + 1.0, 4001)
        cdf_grid = fading_sum_cdf_oracle(grid_t, sigma, p.los_beta)
        cdf = np.interp(resid, grid_t, cdf_grid)
        n = len(resid)
        ecdf_hi = np.arange(1, n + 1) / n
        ecdf_lo = np.arange(0, n) / n
        d = max(np.max(np.abs(ecdf_hi - cdf)), np.max(np.abs(cdf - ecdf_lo)))
        assert d < 0.01
