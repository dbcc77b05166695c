"""Rotated quadratures and the mutually unbiased (x, r, s) triple.

Conventions: hbar = 1, [x, p] = i, and q_theta = cos(theta) x + sin(theta) p.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from itertools import combinations

from .errors import DegenerateAxesError, InvalidInputError

TWO_PI = 2.0 * math.pi
THIRD_TURN = TWO_PI / 3.0

#: |sin(theta_d)| below this is treated as parallel/antiparallel axes.
DEGENERACY_TOL = 1e-12


def _finite(theta, name="theta"):
    theta = float(theta)
    if not math.isfinite(theta):
        raise InvalidInputError(f"{name} must be finite, got {theta!r}")
    return theta


def reduce_angle(theta: float) -> float:
    """Reduce an angle to the interval [0, 2*pi)."""
    theta = _finite(theta) % TWO_PI
    # fmod rounding can land exactly on 2*pi for tiny negative inputs
    return 0.0 if theta >= TWO_PI else theta


@dataclass(frozen=True)
class QuadratureAxis:
    """Direction of a rotated quadrature in single-mode phase space."""

    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", reduce_angle(self.theta))

    @property
    def coefficients(self) -> tuple[float, float]:
        return axis_coefficients(self.theta)


@dataclass(frozen=True)
class MubTriple:
    """Three quadrature axes spaced by 120 degrees.

    With ``offset=0`` the axes are x, r and s.
    """

    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "offset", reduce_angle(self.offset))

    @property
    def thetas(self) -> tuple[float, float, float]:
        return tuple(reduce_angle(self.offset + k * THIRD_TURN) for k in range(3))

    @property
    def axes(self) -> tuple[QuadratureAxis, QuadratureAxis, QuadratureAxis]:
        return tuple(QuadratureAxis(t) for t in self.thetas)


def axis_coefficients(theta: float) -> tuple[float, float]:
    """Return the (x, p) weights (cos theta, sin theta) of q_theta."""
    theta = _finite(theta)
    return math.cos(theta), math.sin(theta)


def commutator_magnitude(theta_a: float, theta_b: float) -> float:
    """Magnitude of [q_a, q_b], which is |sin(theta_b - theta_a)|."""
    theta_a = _finite(theta_a, "theta_a")
    theta_b = _finite(theta_b, "theta_b")
    return abs(math.sin(theta_b - theta_a))


def _sin_difference(theta_a, theta_b):
    s = math.sin(_finite(theta_b, "theta_b") - _finite(theta_a, "theta_a"))
    if abs(s) < DEGENERACY_TOL:
        raise DegenerateAxesError(
            f"axes {theta_a!r} and {theta_b!r} are parallel or antiparallel"
        )
    return s


def mub_overlap_magnitude(theta_a: float, theta_b: float) -> float:
    """Overlap |<q_b | q_a>| = (2 pi |sin(theta_b - theta_a)|)^(-1/2).

    Raises
    ------
    DegenerateAxesError
        If the axes are parallel or antiparallel.
    """
    s = _sin_difference(theta_a, theta_b)
    return 1.0 / math.sqrt(TWO_PI * abs(s))


def frft_kernel(theta_d: float, q: float, q_prime: float) -> complex:
    """Eigenstate overlap <q'_{theta + theta_d} | q_theta>.

    The prefactor is sqrt(i exp(i theta_d) / (2 pi |sin theta_d|)) taken on
    the principal branch. Its phase is a convention; only the magnitude is
    physically meaningful. Note this differs by a constant phase from the
    normalisation used by :func:`mubtriple.frft.frft`, which is chosen so
    that successive transforms compose additively.
    """
    s = _sin_difference(0.0, theta_d)
    prefactor = cmath.sqrt(1j * cmath.exp(1j * theta_d) / (TWO_PI * abs(s)))
    cot = math.cos(theta_d) / s
    phase = 0.5 * cot * (q * q + q_prime * q_prime) - q * q_prime / s
    return prefactor * cmath.exp(1j * phase)


def is_mub_triple(thetas, tol: float = 1e-12) -> bool:
    """True if all pairwise eigenstate overlaps among three axes are equal."""
    if not tol > 0:
        raise InvalidInputError("tol must be positive")
    thetas = list(thetas)
    if len(thetas) != 3:
        raise InvalidInputError("expected exactly three angles")
    try:
        overlaps = [mub_overlap_magnitude(a, b) for a, b in combinations(thetas, 2)]
    except DegenerateAxesError:
        return False
    return max(overlaps) - min(overlaps) <= tol
