"""Uncertainty relations for the symmetric quadrature triple.

Covers the pairwise Robertson bounds, the Schrodinger-Robertson relation,
the intermediate bound on the triple product and the minimisation showing
that (dx)^2 (dr)^2 (ds)^2 >= 1/8.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidInputError
from .gaussian import GaussianState, LinearObservable, observable_variance
from .quadrature import MubTriple

VERDICT_TOL = 1e-9
TRIPLE_BOUND = 0.125


@dataclass(frozen=True)
class UrReport:
    name: str
    lhs: float
    bound: float
    satisfied: bool
    margin: float

    @classmethod
    def build(cls, name: str, lhs: float, bound: float) -> "UrReport":
        margin = float(lhs - bound)
        return cls(name, float(lhs), float(bound), margin >= -VERDICT_TOL, margin)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class OptimizerResult:
    eta: float
    xi: float
    g_min: float
    iterations: int
    converged: bool
    second_derivative: float = float("nan")

    def to_dict(self) -> dict:
        return asdict(self)


def _single_mode(state):
    if state.n_modes != 1:
        raise InvalidInputError(
            f"expected a single-mode state, got {state.n_modes} modes"
        )


# (cos^2, sin^2, 2 sin cos) for the x, r, s axes, exact in binary floating point
_CANONICAL_WEIGHTS = {
    0.0: (1.0, 0.0, 0.0),
    MubTriple().thetas[1]: (0.25, 0.75, -math.sqrt(3) / 2),
    MubTriple().thetas[2]: (0.25, 0.75, math.sqrt(3) / 2),
}


def _variance(state, theta):
    weights = _CANONICAL_WEIGHTS.get(theta)
    if weights is None:
        return observable_variance(state, LinearObservable.quadrature(theta))
    cxx, cpp, cxp = weights
    cov = state.cov
    return cxx * cov[0, 0] + cpp * cov[1, 1] + cxp * cov[0, 1]


def pairwise_bound(theta_a: float, theta_b: float) -> float:
    """Robertson bound |<[q_a, q_b]>| / 2 = |sin(theta_b - theta_a)| / 2."""
    return 0.5 * abs(math.sin(theta_b - theta_a))


def check_pairwise(state: GaussianState, theta_a: float, theta_b: float) -> UrReport:
    """Compare the product of standard deviations of two quadratures with
    their Robertson bound."""
    _single_mode(state)
    lhs = math.sqrt(_variance(state, theta_a) * _variance(state, theta_b))
    return UrReport.build(
        f"pairwise({theta_a:.6g},{theta_b:.6g})", lhs, pairwise_bound(theta_a, theta_b)
    )


def xp_cross_term(state: GaussianState) -> float:
    """<{x, p}> - 2 <x><p>, i.e. twice the symmetrised x-p covariance."""
    _single_mode(state)
    return 2.0 * state.cov[0, 1]


def check_schrodinger_robertson(state: GaussianState) -> UrReport:
    _single_mode(state)
    lhs = state.cov[0, 0] * state.cov[1, 1]
    bound = 0.25 + 0.25 * xp_cross_term(state) ** 2
    return UrReport.build("schrodinger_robertson", lhs, bound)


def triple_product(state: GaussianState, triple: MubTriple = MubTriple()) -> float:
    """Product of the variances along the three axes of ``triple``."""
    _single_mode(state)
    out = 1.0
    for theta in triple.thetas:
        out *= _variance(state, theta)
    return out


def intermediate_bound(state: GaussianState) -> float:
    """(dx)^2 (3 + ((dx)^2 - 3 (dp)^2)^2) / 16, which lies between the
    triple product and 1/8."""
    _single_mode(state)
    return g(state.cov[0, 0], state.cov[1, 1])


def check_triple(state: GaussianState, triple: MubTriple = MubTriple()) -> UrReport:
    return UrReport.build("triple_product", triple_product(state, triple), TRIPLE_BOUND)


def check_all(state: GaussianState) -> list[UrReport]:
    """Every single-mode relation for the (x, r, s) triple."""
    x, r, s = MubTriple().thetas
    reports = [
        check_pairwise(state, x, r),
        check_pairwise(state, x, s),
        check_pairwise(state, r, s),
        check_schrodinger_robertson(state),
    ]
    tp = triple_product(state)
    ib = intermediate_bound(state)
    reports.append(UrReport.build("triple_vs_intermediate", tp, ib))
    reports.append(UrReport.build("intermediate_vs_eighth", ib, TRIPLE_BOUND))
    reports.append(UrReport.build("triple_product", tp, TRIPLE_BOUND))
    return reports


def g(eta: float, xi: float) -> float:
    """g(eta, xi) = eta (3 + (eta - 3 xi)^2) / 16 for eta, xi > 0."""
    if not (eta > 0 and xi > 0):
        raise InvalidInputError("eta and xi must be positive")
    return eta / 16.0 * (3.0 + (eta - 3.0 * xi) ** 2)


def g_sat(eta: float) -> float:
    """g restricted to the Heisenberg boundary xi = 1 / (4 eta)."""
    return g(eta, 0.25 / eta)


def g_sat_derivative(eta: float) -> float:
    return 3.0 / 256.0 * (16.0 * eta ** 2 - 3.0 / eta ** 2 + 8.0)


def g_sat_second_derivative(eta: float) -> float:
    return 9.0 / (128.0 * eta ** 3) + 3.0 * eta / 8.0


def minimize_g(eta0: float = 1.0, tol: float = 1e-14,
               max_iter: int = 100) -> OptimizerResult:
    """Minimise g subject to eta * xi >= 1/4.

    The gradient of g never vanishes for eta * xi > 1/4, so the minimum sits
    on the boundary. There we solve d g_sat / d eta = 0 by Newton's method,
    falling back to bisection whenever a step leaves the current bracket.
    """
    if not eta0 > 0:
        raise InvalidInputError("eta0 must be positive")
    # g_sat' is increasing on (0, inf): negative near 0, positive for large eta
    lo, hi = 1e-3, 1e3
    eta = min(max(eta0, lo), hi)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        f = g_sat_derivative(eta)
        if f > 0:
            hi = eta
        else:
            lo = eta
        step = f / g_sat_second_derivative(eta)
        new = eta - step
        if not lo < new < hi:
            new = 0.5 * (lo + hi)
        if abs(new - eta) <= tol * max(1.0, eta):
            eta = new
            converged = True
            break
        eta = new
    xi = 0.25 / eta
    curvature = g_sat_second_derivative(eta)
    converged = converged and curvature > 0
    return OptimizerResult(eta, xi, g(eta, xi), it, converged, curvature)


def g_sat_scan(etas) -> list[dict]:
    """Tabulate g_sat and its margin above 1/8 on a grid of eta values."""
    rows = []
    for eta in np.asarray(etas, dtype=float):
        val = g_sat(eta)
        rows.append({"eta": float(eta), "xi": 0.25 / float(eta),
                     "g_sat": val, "margin": val - TRIPLE_BOUND})
    return rows
