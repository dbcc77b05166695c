"""Synthetic slit-scan coincidence experiment.

Each arm's detection plane sees the quadrature q_theta of its photon, scaled
to metres by the optical length d. A slit scan is modelled as point sampling
of the joint density at the slit centres, multiplied by the slit area in
dimensionless units, then Poisson-noised.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidInputError
from .gaussian import LinearObservable, observable_covariance
from .spdc import OpticalScaling, SpdcParams, spdc_state

#: per-arm angles (theta1, theta2) of the three measured planes
PLANES = {
    "X": (0.0, 0.0),
    "U": (2 * math.pi / 3, 4 * math.pi / 3),
    "V": (4 * math.pi / 3, 2 * math.pi / 3),
}
_FLUORESCENCE_STREAM = 0xF1


def default_scaling() -> OpticalScaling:
    """400 mm lens, 650 nm photons, pi/3 rotation: d close to 189 um."""
    return OpticalScaling(0.4, 650e-9, math.pi / 3)


@dataclass(frozen=True)
class ScanConfig:
    n_bins_per_axis: int = 150
    roi: float = 12e-3
    slit_width: float = 80e-6
    dwell_time: float = 3.0
    # coincidences per second at unit dimensionless joint density per unit
    # dimensionless slit area; gives ~500 peak counts on the default X plane
    pair_rate: float = 7.2e4
    # weak accidental floor (counts per second per bin)
    background_rate: float = 0.02
    theta1: float = 0.0
    theta2: float = 0.0
    scaling: OpticalScaling = field(default_factory=default_scaling)
    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        if int(self.n_bins_per_axis) < 2:
            raise InvalidInputError("n_bins_per_axis must be >= 2")
        for name in ("roi", "slit_width"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive")
        for name in ("dwell_time", "pair_rate", "background_rate"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise InvalidInputError(f"{name} must be non-negative")
        for name in ("theta1", "theta2"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidInputError(f"{name} must be finite")
        if self.scaling.d <= 0:
            raise InvalidInputError("scaling length must be positive")

    @property
    def pitch(self) -> float:
        return self.roi / self.n_bins_per_axis

    @property
    def d(self) -> float:
        return self.scaling.d

    def axis(self) -> np.ndarray:
        """Slit-centre positions in metres, symmetric about zero."""
        n = self.n_bins_per_axis
        return (np.arange(n) - (n - 1) / 2.0) * self.pitch

    def for_plane(self, plane: str) -> "ScanConfig":
        t1, t2 = PLANES[plane]
        return replace(self, theta1=t1, theta2=t2)

    def to_dict(self) -> dict:
        return {
            "n_bins_per_axis": self.n_bins_per_axis,
            "roi_m": self.roi,
            "slit_width_m": self.slit_width,
            "dwell_time_s": self.dwell_time,
            "pair_rate_hz": self.pair_rate,
            "background_rate_hz": self.background_rate,
            "theta1": self.theta1,
            "theta2": self.theta2,
            "optics": self.scaling.to_dict(),
            "seed": self.seed,
            "stream": self.stream,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ScanConfig":
        """Inverse of :meth:`to_dict`; missing keys take their defaults."""
        known = {
            "n_bins_per_axis": ("n_bins_per_axis", int),
            "roi_m": ("roi", float),
            "slit_width_m": ("slit_width", float),
            "dwell_time_s": ("dwell_time", float),
            "pair_rate_hz": ("pair_rate", float),
            "background_rate_hz": ("background_rate", float),
            "theta1": ("theta1", float),
            "theta2": ("theta2", float),
            "seed": ("seed", int),
            "stream": ("stream", int),
        }
        kwargs = {}
        for key, value in doc.items():
            if key == "optics":
                kwargs["scaling"] = OpticalScaling.from_dict(value)
            elif key in known:
                name, conv = known[key]
                kwargs[name] = conv(value)
            else:
                raise InvalidInputError(f"unknown scan key {key!r}")
        return cls(**kwargs)


@dataclass(frozen=True, eq=False)
class CoincidenceGrid:
    """Coincidence counts on an n x n slit-position grid.

    ``counts[i, j]`` belongs to arm-1 position ``axis1[i]`` and arm-2
    position ``axis2[j]`` (metres).
    """

    counts: np.ndarray
    axis1: np.ndarray
    axis2: np.ndarray
    d: float
    theta1: float = 0.0
    theta2: float = 0.0
    plane: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        counts = np.array(self.counts)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise InvalidInputError(f"counts must be square, got shape {counts.shape}")
        if not np.issubdtype(counts.dtype, np.integer):
            if not np.all(counts == np.round(counts)):
                raise InvalidInputError("counts must be integers")
        counts = counts.astype(np.int64)
        if np.any(counts < 0):
            raise InvalidInputError("counts must be non-negative")
        n = counts.shape[0]
        axes = []
        for name in ("axis1", "axis2"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.shape != (n,):
                raise InvalidInputError(f"{name} must have {n} entries")
            step = np.diff(a)
            if np.any(step <= 0) or np.ptp(step) > 1e-9 * abs(step[0]):
                raise InvalidInputError(f"{name} must be strictly increasing and uniform")
            axes.append(a)
        if not self.d > 0:
            raise InvalidInputError("d must be positive")
        for arr in (counts, *axes):
            arr.flags.writeable = False
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "axis1", axes[0])
        object.__setattr__(self, "axis2", axes[1])
        object.__setattr__(self, "d", float(self.d))

    @property
    def n(self) -> int:
        return self.counts.shape[0]

    @property
    def w1(self) -> np.ndarray:
        return self.axis1 / self.d

    @property
    def w2(self) -> np.ndarray:
        return self.axis2 / self.d

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def _pair_covariance(params: SpdcParams, theta1: float, theta2: float) -> np.ndarray:
    state = spdc_state(params)
    a = LinearObservable.quadrature(theta1, 0, 2)
    b = LinearObservable.quadrature(theta2, 1, 2)
    return np.array([
        [observable_covariance(state, a, a), observable_covariance(state, a, b)],
        [observable_covariance(state, a, b), observable_covariance(state, b, b)],
    ])


def _bivariate_normal(cov: np.ndarray, w1, w2):
    det = cov[0, 0] * cov[1, 1] - cov[0, 1] ** 2
    if not det > 0:
        raise InvalidInputError("joint covariance is singular")
    inv = np.array([[cov[1, 1], -cov[0, 1]], [-cov[0, 1], cov[0, 0]]]) / det
    quad = inv[0, 0] * w1 * w1 + 2 * inv[0, 1] * w1 * w2 + inv[1, 1] * w2 * w2
    return np.exp(-0.5 * quad) / (2.0 * math.pi * math.sqrt(det))


def joint_density(params: SpdcParams, theta1: float, theta2: float, w1, w2):
    """Density of (q_theta1 of photon 1, q_theta2 of photon 2) at (w1, w2).

    Arguments broadcast like numpy arrays.
    """
    return _bivariate_normal(_pair_covariance(params, theta1, theta2),
                             np.asarray(w1, dtype=float), np.asarray(w2, dtype=float))


def joint_correlation(params: SpdcParams, theta1: float, theta2: float) -> float:
    """Pearson coefficient of the joint density."""
    c = _pair_covariance(params, theta1, theta2)
    return float(c[0, 1] / math.sqrt(c[0, 0] * c[1, 1]))


def row_rng(seed: int, stream: int, row: int) -> np.random.Generator:
    """Independent PCG64 substream for one grid row."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, stream, row])))


def _poisson_rows(mu: np.ndarray, seed: int, stream: int, workers: int) -> np.ndarray:
    def one(i):
        return row_rng(seed, stream, i).poisson(mu[i])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, range(mu.shape[0])))
    else:
        rows = [one(i) for i in range(mu.shape[0])]
    return np.vstack(rows).astype(np.int64)


def expected_counts(params: SpdcParams, config: ScanConfig) -> np.ndarray:
    w = config.axis() / config.d
    density = joint_density(params, config.theta1, config.theta2, w[:, None], w[None, :])
    slit_area = (config.slit_width / config.d) ** 2
    return (config.pair_rate * config.dwell_time * slit_area * density
            + config.background_rate * config.dwell_time)


def pair_rate_for_peak(params: SpdcParams, config: ScanConfig, peak: float) -> float:
    """pair_rate giving ``peak`` expected counts at the density maximum."""
    cov = _pair_covariance(params, config.theta1, config.theta2)
    peak_density = 1.0 / (2 * math.pi * math.sqrt(np.linalg.det(cov)))
    slit_area = (config.slit_width / config.d) ** 2
    return peak / (config.dwell_time * slit_area * peak_density)


def _make_grid(counts, config, plane, kind):
    axis = config.axis()
    meta = {"kind": kind, "config": config.to_dict()}
    return CoincidenceGrid(counts, axis, axis, config.d, config.theta1,
                           config.theta2, plane, meta)


def _plane_label(config):
    for name, (t1, t2) in PLANES.items():
        if math.isclose(t1, config.theta1) and math.isclose(t2, config.theta2):
            return name
    return ""


def simulate_scan(params: SpdcParams, config: ScanConfig, workers: int = 1,
                  plane: str | None = None) -> CoincidenceGrid:
    """Poisson-sampled coincidence grid for one pair of arm rotations.

    Row i is drawn from its own substream keyed by (seed, stream, i), so the
    output does not depend on ``workers``.
    """
    mu = expected_counts(params, config)
    counts = _poisson_rows(mu, config.seed, config.stream, int(workers))
    meta_plane = _plane_label(config) if plane is None else plane
    grid = _make_grid(counts, config, meta_plane, "spdc")
    grid.meta["spdc"] = {"sigma_plus": params.sigma_plus,
                         "sigma_minus": params.sigma_minus}
    return grid


def synthesize_grid(var_minus: float, var_plus: float, config: ScanConfig,
                    plane: str = "", noiseless: bool = False,
                    workers: int = 1) -> CoincidenceGrid:
    """Grid whose sum and difference marginals are Gaussians of the given
    variances (dimensionless units).

    With ``noiseless=True`` the expected counts are rounded instead of
    Poisson-sampled.
    """
    if not (var_minus > 0 and var_plus > 0):
        raise InvalidInputError("variances must be positive")
    w = config.axis() / config.d
    wp = w[:, None] + w[None, :]
    wm = w[:, None] - w[None, :]
    # Jacobian of (w1, w2) -> (w1 + w2, w1 - w2) is 2
    density = (2.0 * np.exp(-0.5 * wp ** 2 / var_plus - 0.5 * wm ** 2 / var_minus)
               / (2 * math.pi * math.sqrt(var_plus * var_minus)))
    slit_area = (config.slit_width / config.d) ** 2
    mu = (config.pair_rate * config.dwell_time * slit_area * density
          + config.background_rate * config.dwell_time)
    if noiseless:
        counts = np.rint(mu).astype(np.int64)
    else:
        counts = _poisson_rows(mu, config.seed, config.stream, int(workers))
    grid = _make_grid(counts, config, plane, "synthetic")
    grid.meta["synthetic"] = {"var_minus": var_minus, "var_plus": var_plus,
                              "noiseless": noiseless}
    return grid


def add_fluorescence_background(grid: CoincidenceGrid, profile_width: float,
                                rate: float, seed: int, dwell_time: float | None = None,
                                workers: int = 1) -> CoincidenceGrid:
    """Add broad, signal-independent Poisson counts.

    The envelope is an isotropic Gaussian of width ``profile_width``
    (dimensionless) normalised to unit mean over the grid, so ``rate`` is
    the average background rate per bin in counts per second.
    """
    if not rate >= 0:
        raise InvalidInputError("rate must be non-negative")
    if rate == 0:
        return grid
    if not profile_width > 0:
        raise InvalidInputError("profile_width must be positive")
    if dwell_time is None:
        dwell_time = grid.meta.get("config", {}).get("dwell_time_s", 3.0)
    w1, w2 = grid.w1, grid.w2
    env = np.exp(-0.5 * (w1[:, None] ** 2 + w2[None, :] ** 2) / profile_width ** 2)
    env *= env.size / env.sum()
    extra = _poisson_rows(rate * dwell_time * env, seed, _FLUORESCENCE_STREAM, workers)
    meta = dict(grid.meta)
    meta["fluorescence"] = {"profile_width": profile_width, "rate_hz": rate,
                            "seed": seed, "dwell_time_s": dwell_time}
    return CoincidenceGrid(grid.counts + extra, grid.axis1, grid.axis2, grid.d,
                           grid.theta1, grid.theta2, grid.plane, meta)
