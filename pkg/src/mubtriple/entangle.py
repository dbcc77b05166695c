"""Global two-mode operators and the triple-product separability test.

For each sign j the operators X_j = x1 j x2, U_j = r1 j s2 and V_j = s1 j r2
commute, and every separable state obeys (dX_j)^2 (dU_j)^2 (dV_j)^2 >= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .gaussian import GaussianState, LinearObservable, observable_variance
from .quadrature import THIRD_TURN, axis_coefficients
from .uncertainty import UrReport

GLOBAL_NAMES = ("X", "P", "R", "S", "U", "V")
CRITERION_BOUND = 1.0
SIGMA_RULE = 3.0

# (mode-1 angle, mode-2 angle) for the building blocks a1 +/- b2
_ANGLES = {
    "X": (0.0, 0.0),
    "P": (math.pi / 2, math.pi / 2),
    "R": (THIRD_TURN, THIRD_TURN),
    "S": (2 * THIRD_TURN, 2 * THIRD_TURN),
    "U": (THIRD_TURN, 2 * THIRD_TURN),
    "V": (2 * THIRD_TURN, THIRD_TURN),
}
# exact values so the commutators cancel to the last bit
_EXACT = {0.0: (1.0, 0.0), math.pi / 2: (0.0, 1.0),
          THIRD_TURN: (-0.5, math.sqrt(3) / 2),
          2 * THIRD_TURN: (-0.5, -math.sqrt(3) / 2)}


def parse_sign(sign) -> int:
    """Accept +1/-1, '+'/'-', or 'plus'/'minus'."""
    table = {1: 1, -1: -1, "+": 1, "-": -1, "plus": 1, "minus": -1}
    try:
        return table[sign]
    except (KeyError, TypeError):
        raise InvalidInputError(f"sign must be + or -, got {sign!r}") from None


def sign_symbol(sign) -> str:
    return "+" if parse_sign(sign) > 0 else "-"


def plane_angles(name: str) -> tuple[float, float]:
    """Per-arm rotation angles whose sum/difference gives global ``name``."""
    try:
        return _ANGLES[name]
    except KeyError:
        raise InvalidInputError(f"unknown global operator {name!r}") from None


def build_global(name: str, sign) -> LinearObservable:
    """Coefficient vector (x1, p1, x2, p2) of a global operator.

    R and S pair P with the same sign as X; U and V are the partially
    transposed versions, which pair X_j with P_{-j}.
    """
    j = parse_sign(sign)
    t1, t2 = plane_angles(name)
    c1 = _EXACT.get(t1) or axis_coefficients(t1)
    c2 = _EXACT.get(t2) or axis_coefficients(t2)
    coeffs = np.array([c1[0], c1[1], j * c2[0], j * c2[1]])
    return LinearObservable(coeffs, f"{name}{sign_symbol(j)}")


@dataclass(frozen=True, eq=False)
class GlobalOperatorSet:
    sign: int
    X: LinearObservable
    P: LinearObservable
    R: LinearObservable
    S: LinearObservable
    U: LinearObservable
    V: LinearObservable

    @classmethod
    def for_sign(cls, sign) -> "GlobalOperatorSet":
        j = parse_sign(sign)
        return cls(j, *(build_global(n, j) for n in GLOBAL_NAMES))

    def commuting_triple(self) -> tuple[LinearObservable, ...]:
        return self.X, self.U, self.V


def _two_mode(state):
    if state.n_modes != 2:
        raise InvalidInputError(f"expected a two-mode state, got {state.n_modes} modes")


def check_global_ur(state: GaussianState, sign) -> UrReport:
    """(dX)^2 (dR)^2 (dS)^2 >= 1, valid for every physical two-mode state."""
    _two_mode(state)
    j = parse_sign(sign)
    lhs = 1.0
    for name in ("X", "R", "S"):
        lhs *= observable_variance(state, build_global(name, j))
    return UrReport.build(f"global_triple{sign_symbol(j)}", lhs, CRITERION_BOUND)


def partial_transpose(state: GaussianState) -> GaussianState:
    """Mirror p2 -> -p2. The result may be unphysical (that is the point)."""
    _two_mode(state)
    flip = np.array([1.0, 1.0, 1.0, -1.0])
    return GaussianState(flip * state.mean, state.cov * np.outer(flip, flip))


@dataclass(frozen=True)
class CriterionReport:
    sign: str
    variances: tuple[tuple[float, float], tuple[float, float], tuple[float, float]]
    product: float
    product_uncertainty: float
    bound: float
    entangled_verdict: bool
    sigma_level: float
    rule: str

    def to_dict(self) -> dict:
        names = ("X", "U", "V")
        return {
            "sign": self.sign,
            "variances": {
                n: {"value": v, "uncertainty": e}
                for n, (v, e) in zip(names, self.variances)
            },
            "product": self.product,
            "product_uncertainty": self.product_uncertainty,
            "bound": self.bound,
            "entangled_verdict": self.entangled_verdict,
            "sigma_level": self.sigma_level,
            "rule": self.rule,
        }


def _sigma_level(product, err):
    if err > 0:
        return (CRITERION_BOUND - product) / err
    return math.copysign(math.inf, CRITERION_BOUND - product) if product != CRITERION_BOUND else 0.0


def evaluate_criterion(variances, sign) -> CriterionReport:
    """Apply the criterion to measured (value, uncertainty) pairs for X, U, V.

    Uncertainties are treated as independent and combined in quadrature on a
    relative scale. Entanglement is declared only if the product sits more
    than three standard errors below the bound.
    """
    pairs = [tuple(map(float, v)) for v in variances]
    if len(pairs) != 3:
        raise InvalidInputError("need exactly three (value, uncertainty) pairs")
    for v, e in pairs:
        if not (v > 0 and math.isfinite(v)):
            raise InvalidInputError(f"variance must be positive, got {v!r}")
        if not (e >= 0 and math.isfinite(e)):
            raise InvalidInputError(f"uncertainty must be non-negative, got {e!r}")
    product = math.prod(v for v, _ in pairs)
    rel = math.sqrt(sum((e / v) ** 2 for v, e in pairs))
    err = product * rel
    verdict = product + SIGMA_RULE * err < CRITERION_BOUND
    return CriterionReport(sign_symbol(sign), tuple(pairs), product, err,
                           CRITERION_BOUND, verdict, _sigma_level(product, err),
                           "product + 3*sigma < 1")


def evaluate_criterion_from_state(state: GaussianState, sign) -> CriterionReport:
    """Exact criterion for a known Gaussian state (no statistical error)."""
    _two_mode(state)
    j = parse_sign(sign)
    pairs = tuple(
        (observable_variance(state, build_global(n, j)), 0.0) for n in ("X", "U", "V")
    )
    product = math.prod(v for v, _ in pairs)
    verdict = product < CRITERION_BOUND - 1e-9
    return CriterionReport(sign_symbol(j), pairs, product, 0.0, CRITERION_BOUND,
                           verdict, _sigma_level(product, 0.0),
                           "product < 1 - 1e-9")
