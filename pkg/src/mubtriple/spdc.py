"""Double-Gaussian two-photon state and optical scaling.

The transverse state psi(x1, x2) ~ exp(-(x1+x2)^2 / 4 s+^2) exp(-(x1-x2)^2 / 4 s-^2)
is handled exactly through its covariance matrix: Var(x1 +/- x2) = s+/-^2 and
Var(p1 +/- p2) = 1 / s+/-^2, with no x-p correlations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .entangle import build_global
from .errors import InvalidInputError
from .gaussian import GaussianState, observable_variance


@dataclass(frozen=True)
class SpdcParams:
    sigma_plus: float
    sigma_minus: float

    def __post_init__(self):
        for name in ("sigma_plus", "sigma_minus"):
            v = getattr(self, name)
            try:
                v = float(v)
            except (TypeError, ValueError):
                raise InvalidInputError(f"{name} must be a number, got {v!r}") from None
            if not (math.isfinite(v) and v > 0):
                raise InvalidInputError(f"{name} must be positive and finite, got {v!r}")
            object.__setattr__(self, name, v)

    @property
    def entangled(self) -> bool:
        return self.sigma_plus != self.sigma_minus

    @property
    def schmidt_ratio(self) -> float:
        return self.sigma_plus / self.sigma_minus


def scaling_factor(focal_length: float, wavelength: float, angle: float) -> float:
    """Length d = sqrt(f sin(angle) / k), k = 2 pi / wavelength, in metres."""
    if not (focal_length > 0 and wavelength > 0):
        raise InvalidInputError("focal length and wavelength must be positive")
    s = math.sin(angle)
    if not s > 0:
        raise InvalidInputError(f"sin(angle) must be positive, got {s!r}")
    return math.sqrt(focal_length * s * wavelength / (2.0 * math.pi))


@dataclass(frozen=True)
class OpticalScaling:
    focal_length: float
    wavelength: float
    rotation_angle: float = math.pi / 3

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def d(self) -> float:
        return scaling_factor(self.focal_length, self.wavelength, self.rotation_angle)

    def to_dict(self) -> dict:
        return {
            "focal_length_m": self.focal_length,
            "wavelength_m": self.wavelength,
            "rotation_angle": self.rotation_angle,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "OpticalScaling":
        unknown = set(doc) - {"focal_length_m", "wavelength_m", "rotation_angle"}
        if unknown:
            raise InvalidInputError(f"unknown optics keys: {sorted(unknown)}")
        try:
            return cls(float(doc["focal_length_m"]), float(doc["wavelength_m"]),
                       float(doc.get("rotation_angle", math.pi / 3)))
        except KeyError as exc:
            raise InvalidInputError(f"optics block is missing {exc}") from None


def to_dimensionless(position, scaling: OpticalScaling):
    return np.asarray(position) / scaling.d if np.ndim(position) else position / scaling.d


def spdc_state(params: SpdcParams) -> GaussianState:
    sp2, sm2 = params.sigma_plus ** 2, params.sigma_minus ** 2
    vx, cx = (sp2 + sm2) / 4.0, (sp2 - sm2) / 4.0
    vp, cp = (1.0 / sp2 + 1.0 / sm2) / 4.0, (1.0 / sp2 - 1.0 / sm2) / 4.0
    cov = np.array([
        [vx, 0.0, cx, 0.0],
        [0.0, vp, 0.0, cp],
        [cx, 0.0, vx, 0.0],
        [0.0, cp, 0.0, vp],
    ])
    return GaussianState(np.zeros(4), cov)


def analytic_variances(params: SpdcParams) -> dict[str, float]:
    """Closed-form variances of the global operators, keyed like 'U-'."""
    sp2, sm2 = params.sigma_plus ** 2, params.sigma_minus ** 2
    out = {}
    for sym, near, far in (("+", sp2, sm2), ("-", sm2, sp2)):
        # W_j mixes (x1 j x2), whose variance is s_j^2, with (p1 -j p2),
        # whose variance is 1 / s_{-j}^2
        rotated = 0.25 * near + 0.75 / far
        out["X" + sym] = near
        out["P" + sym] = 1.0 / near
        out["R" + sym] = 0.25 * near + 0.75 / near
        out["S" + sym] = out["R" + sym]
        out["U" + sym] = rotated
        out["V" + sym] = rotated
    return out


def correlation_coefficient(params: SpdcParams, which: str) -> float:
    """C_W = dW+ / dW- for W in X, U, V; equals sigma_plus / sigma_minus."""
    if which not in ("X", "U", "V"):
        raise InvalidInputError(f"which must be X, U or V, got {which!r}")
    v = analytic_variances(params)
    return math.sqrt(v[which + "+"] / v[which + "-"])


def numeric_variances(params: SpdcParams) -> dict[str, float]:
    """Same table as :func:`analytic_variances`, via the covariance matrix."""
    state = spdc_state(params)
    return {
        name + sym: observable_variance(state, build_global(name, sym))
        for name in ("X", "P", "R", "S", "U", "V") for sym in "+-"
    }
