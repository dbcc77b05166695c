import math
from dataclasses import replace

import numpy as np
import pytest

from mubtriple.errors import InvalidInputError
from mubtriple.expsim import (PLANES, CoincidenceGrid, ScanConfig, add_fluorescence_background,
                              default_scaling, expected_counts, joint_correlation,
                              joint_density, pair_rate_for_peak, simulate_scan,
                              synthesize_grid)
from mubtriple.spdc import SpdcParams

SMALL = ScanConfig(n_bins_per_axis=40, roi=6e-3)


def _weighted_variance(values, weights):
    m = np.sum(values * weights) / np.sum(weights)
    return np.sum((values - m) ** 2 * weights) / np.sum(weights)


def test_config_defaults_and_validation():
    cfg = ScanConfig()
    assert (cfg.n_bins_per_axis, cfg.roi, cfg.slit_width, cfg.dwell_time) == (150, 12e-3, 80e-6, 3.0)
    assert cfg.d == pytest.approx(189.3e-6, abs=0.1e-6)
    ax = cfg.axis()
    assert ax.size == 150 and ax[0] == -ax[-1]
    assert np.allclose(np.diff(ax), cfg.pitch, rtol=1e-12)
    for bad in [dict(roi=0), dict(slit_width=-1), dict(dwell_time=-1), dict(pair_rate=math.nan),
                dict(n_bins_per_axis=1), dict(theta1=math.inf)]:
        with pytest.raises(InvalidInputError):
            replace(cfg, **bad)
    assert ScanConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(InvalidInputError):
        ScanConfig.from_dict({"roi": 1e-3})


def test_grid_validation():
    ax = np.arange(3.0)
    with pytest.raises(InvalidInputError):
        CoincidenceGrid(np.zeros((3, 2)), ax, ax, 1.0)
    with pytest.raises(InvalidInputError):
        CoincidenceGrid(-np.ones((3, 3)), ax, ax, 1.0)
    with pytest.raises(InvalidInputError):
        CoincidenceGrid(np.full((3, 3), 0.5), ax, ax, 1.0)
    with pytest.raises(InvalidInputError):
        CoincidenceGrid(np.zeros((3, 3)), ax[::-1], ax, 1.0)
    with pytest.raises(InvalidInputError):
        CoincidenceGrid(np.zeros((3, 3)), np.array([0, 1, 3.0]), ax, 1.0)
    g = CoincidenceGrid(np.ones((3, 3)), ax, ax, 2.0)
    assert g.w1.tolist() == [0, 0.5, 1.0] and g.total == 9
    with pytest.raises(ValueError):
        g.counts[0, 0] = 5


def test_joint_density_normalised():
    p = SpdcParams(3.0, 0.8)
    for t1, t2 in [*PLANES.values(), (0.3, 1.1)]:
        w = np.linspace(-30, 30, 1201)
        dens = joint_density(p, t1, t2, w[:, None], w[None, :])
        assert dens.sum() * (w[1] - w[0]) ** 2 == pytest.approx(1.0, abs=1e-6)


def test_joint_correlation_examples():
    sp, sm = 3.0, 0.8
    p = SpdcParams(sp, sm)
    assert joint_correlation(p, 0, 0) == pytest.approx((sp**2 - sm**2) / (sp**2 + sm**2), abs=1e-14)
    assert joint_correlation(p, *PLANES["U"]) > 0.5
    assert joint_correlation(p, math.pi / 2, math.pi / 2) < -0.5
    for plane in PLANES.values():
        assert joint_correlation(SpdcParams(35, 0.7), *plane) > 0.99


def test_zero_rates_give_zero_grid():
    cfg = replace(SMALL, pair_rate=0.0, background_rate=0.0)
    assert simulate_scan(SpdcParams(2, 0.5), cfg).total == 0


def test_determinism_and_thread_independence():
    p = SpdcParams(35, 0.7)
    a = simulate_scan(p, replace(SMALL, seed=7))
    b = simulate_scan(p, replace(SMALL, seed=7), workers=4)
    c = simulate_scan(p, replace(SMALL, seed=8))
    assert np.array_equal(a.counts, b.counts)
    assert not np.array_equal(a.counts, c.counts)
    assert a.meta == b.meta


def test_minus_marginal_variance_matches_closed_form():
    p = SpdcParams(4.0, 1.0)
    cfg = replace(ScanConfig(background_rate=0.0), seed=11)
    cfg = replace(cfg, pair_rate=pair_rate_for_peak(p, cfg, 2e4))
    # an even grid has no sample at the origin, so the sampled peak sits just below
    assert 0.98 * 2e4 < expected_counts(p, cfg).max() <= 2e4
    g = simulate_scan(p, cfg)
    wm = g.w1[:, None] - g.w2[None, :]
    assert _weighted_variance(wm, g.counts) == pytest.approx(1.0, rel=0.05)


def test_positive_correlation_in_all_planes():
    p = SpdcParams(3.0, 0.5)
    base = replace(ScanConfig(n_bins_per_axis=60), background_rate=0.0)
    for name in PLANES:
        cfg = base.for_plane(name)
        g = simulate_scan(p, replace(cfg, pair_rate=pair_rate_for_peak(p, cfg, 500)))
        w1, w2 = np.meshgrid(g.w1, g.w2, indexing="ij")
        c = g.counts
        m1, m2 = np.sum(w1 * c) / c.sum(), np.sum(w2 * c) / c.sum()
        cov = np.sum((w1 - m1) * (w2 - m2) * c)
        assert cov > 0, name
        assert g.plane == name and g.d == base.d


def test_total_counts_scale_with_rate():
    p = SpdcParams(5.0, 0.5)
    cfg = replace(SMALL, background_rate=0.0)
    lo = simulate_scan(p, replace(cfg, pair_rate=5e5, seed=1)).total
    hi = simulate_scan(p, replace(cfg, pair_rate=1e6, seed=2)).total
    ratio = hi / lo
    err = ratio * math.sqrt(1 / hi + 1 / lo)
    assert abs(ratio - 2.0) < 3 * err


def test_synthesized_marginals():
    cfg = replace(ScanConfig(n_bins_per_axis=120, background_rate=0.0), pair_rate=5e5)
    g = synthesize_grid(0.5, 9.0, cfg, noiseless=True)
    wm = g.w1[:, None] - g.w2[None, :]
    wp = g.w1[:, None] + g.w2[None, :]
    assert _weighted_variance(wm, g.counts) == pytest.approx(0.5, rel=0.01)
    assert _weighted_variance(wp, g.counts) == pytest.approx(9.0, rel=0.01)
    with pytest.raises(InvalidInputError):
        synthesize_grid(0, 1, cfg)


def test_fluorescence_background():
    g = simulate_scan(SpdcParams(35, 0.7), SMALL)
    assert add_fluorescence_background(g, 5.0, 0.0, seed=1) is g
    rate = 2.0
    noisy = add_fluorescence_background(g, 5.0, rate, seed=1)
    added = noisy.total - g.total
    expect = rate * SMALL.dwell_time * SMALL.n_bins_per_axis ** 2
    assert abs(added - expect) < 5 * math.sqrt(expect)
    assert np.all(noisy.counts >= g.counts)
    assert noisy.meta["fluorescence"]["rate_hz"] == rate
    again = add_fluorescence_background(g, 5.0, rate, seed=1, workers=3)
    assert np.array_equal(again.counts, noisy.counts)
    with pytest.raises(InvalidInputError):
        add_fluorescence_background(g, 5.0, -1.0, seed=1)


def test_default_scaling():
    assert default_scaling().d == pytest.approx(189e-6, abs=1e-6)
