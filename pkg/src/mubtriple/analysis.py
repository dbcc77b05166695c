"""From coincidence grids to variances, correlation ratios and a verdict.

Pipeline per measured plane: project the grid onto w1 - w2 (or w1 + w2),
fit a Gaussian plus constant with Poisson weights, and read the variance off
the fitted width. Three planes (X, U, V) then feed the separability test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .entangle import CriterionReport, evaluate_criterion, parse_sign, sign_symbol
from .errors import FitError, InvalidInputError
from .expsim import CoincidenceGrid

MIN_BINS = 8
MAX_ITER = 200
PLANE_ORDER = ("X", "U", "V")


@dataclass(frozen=True, eq=False)
class MarginalHistogram:
    bin_centers: np.ndarray
    counts: np.ndarray
    errors: np.ndarray
    sign: str = "-"

    @classmethod
    def from_counts(cls, bin_centers, counts, sign="-") -> "MarginalHistogram":
        counts = np.asarray(counts, dtype=float)
        if np.any(counts < 0):
            raise InvalidInputError("counts must be non-negative")
        errors = np.sqrt(np.maximum(counts, 1.0))
        return cls(np.asarray(bin_centers, dtype=float), counts, errors, sign)

    @property
    def width(self) -> float:
        return float(self.bin_centers[1] - self.bin_centers[0])

    def moments(self) -> tuple[float, float]:
        """Count-weighted mean and variance of the bin centres."""
        total = self.counts.sum()
        if total <= 0:
            raise InvalidInputError("empty histogram")
        mean = float(np.sum(self.bin_centers * self.counts) / total)
        var = float(np.sum((self.bin_centers - mean) ** 2 * self.counts) / total)
        return mean, var


def marginalize(grid: CoincidenceGrid, sign) -> MarginalHistogram:
    """Accumulate counts onto w = w1 + w2 (sign +) or w1 - w2 (sign -).

    Both dimensionless axes share one pitch, so every sum or difference lands
    exactly on a lattice with that pitch and no interpolation is needed.
    """
    j = parse_sign(sign)
    w1, w2 = grid.w1, grid.w2
    pitch = w1[1] - w1[0]
    if not math.isclose(pitch, w2[1] - w2[0], rel_tol=1e-9):
        raise InvalidInputError("marginalisation needs equal pitch on both axes")
    n = grid.n
    i = np.arange(n)[:, None]
    k = np.arange(n)[None, :]
    if j > 0:
        index = i + k
        origin = w1[0] + w2[0]
    else:
        index = i - k + (n - 1)
        origin = w1[0] - w2[-1]
    counts = np.bincount(index.ravel(), weights=grid.counts.ravel().astype(float),
                         minlength=2 * n - 1)
    centers = origin + pitch * np.arange(2 * n - 1)
    return MarginalHistogram.from_counts(centers, counts, sign_symbol(j))


@dataclass(frozen=True)
class GaussianFitResult:
    amplitude: float
    mean: float
    sigma: float
    background: float
    amplitude_err: float
    mean_err: float
    sigma_err: float
    background_err: float
    chi2: float
    dof: int
    converged: bool
    iterations: int = 0

    @property
    def variance(self) -> float:
        return self.sigma ** 2

    @property
    def variance_err(self) -> float:
        return 2.0 * self.sigma * self.sigma_err

    def curve(self, w):
        w = np.asarray(w, dtype=float)
        return (self.amplitude * np.exp(-0.5 * ((w - self.mean) / self.sigma) ** 2)
                + self.background)

    def to_dict(self) -> dict:
        keys = ("amplitude", "mean", "sigma", "background", "amplitude_err",
                "mean_err", "sigma_err", "background_err", "chi2", "dof",
                "converged", "iterations")
        doc = {k: getattr(self, k) for k in keys}
        doc.update(variance=self.variance, variance_err=self.variance_err)
        return doc


def _model_and_jacobian(p, w):
    a, mu, sig, b = p
    z = (w - mu) / sig
    e = np.exp(-0.5 * z * z)
    model = a * e + b
    jac = np.empty((w.size, 4))
    jac[:, 0] = e
    jac[:, 1] = a * e * z / sig
    jac[:, 2] = a * e * z * z / sig
    jac[:, 3] = 1.0
    return model, jac


def _project(p):
    p = p.copy()
    p[2] = abs(p[2])
    p[3] = max(p[3], 0.0)
    return p


def _damped_step(jtj, grad, lam):
    a = jtj + lam * np.diag(np.diag(jtj))
    try:
        return np.linalg.solve(a, grad)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(a, grad, rcond=None)[0]


def _initial_guess(hist):
    y = hist.counts
    lo = float(y.min())
    shifted = y - lo
    total = shifted.sum()
    if total <= 0:
        raise InvalidInputError("histogram has no structure to fit")
    mu = float(np.sum(hist.bin_centers * shifted) / total)
    var = float(np.sum((hist.bin_centers - mu) ** 2 * shifted) / total)
    sigma = math.sqrt(var) if var > 0 else abs(hist.width)
    return np.array([float(y.max()) - lo, mu, sigma, lo])


def fit_gaussian(hist: MarginalHistogram, max_iter: int = MAX_ITER) -> GaussianFitResult:
    """Weighted Levenberg-Marquardt fit of A exp(-(w - mu)^2 / 2 sigma^2) + B.

    Weights are 1 / errors^2. Parameter errors come from the inverse
    curvature matrix at the optimum, inflated by sqrt(chi2 / dof) when the
    fit is worse than the error bars allow.

    Raises
    ------
    InvalidInputError
        Fewer than eight non-empty bins.
    FitError
        No convergence within ``max_iter`` iterations.
    """
    if np.count_nonzero(hist.counts) < MIN_BINS:
        raise InvalidInputError(f"need at least {MIN_BINS} non-empty bins")
    w, y, err = hist.bin_centers, hist.counts, hist.errors
    p = _initial_guess(hist)
    model, jac = _model_and_jacobian(p, w)
    r = (y - model) / err
    chi2 = float(r @ r)
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        jw = jac / err[:, None]
        jtj = jw.T @ jw
        grad = jw.T @ r
        while True:
            step = _damped_step(jtj, grad, lam)
            if p[3] <= 0.0 and step[3] < 0.0:
                # background pinned at its bound: step in the other three
                step = np.zeros(4)
                step[:3] = _damped_step(jtj[:3, :3], grad[:3], lam)
            trial = _project(p + step)
            t_model, t_jac = _model_and_jacobian(trial, w)
            t_r = (y - t_model) / err
            t_chi2 = float(t_r @ t_r)
            if np.isfinite(t_chi2) and t_chi2 <= chi2:
                lam = max(lam / 10.0, 1e-12)
                break
            lam *= 10.0
            if lam > 1e16:
                break
        if lam > 1e16:
            # no downhill step left: we are at the minimum to working precision
            converged = True
            break
        change = np.abs(trial - p) / (np.abs(trial) + 1e-12)
        small = chi2 - t_chi2 <= 1e-13 * max(chi2, 1e-300)
        p, model, jac, r, chi2 = trial, t_model, t_jac, t_r, t_chi2
        if np.max(change) < 1e-11 or small:
            converged = True
            break
    if not converged:
        raise FitError(f"fit did not converge in {max_iter} iterations", p)

    dof = max(w.size - 4, 1)
    jw = jac / err[:, None]
    try:
        cov = np.linalg.inv(jw.T @ jw)
    except np.linalg.LinAlgError:
        cov = np.full((4, 4), np.inf)
    scale = chi2 / dof
    if scale > 1.0:
        cov = cov * scale
    errs = np.sqrt(np.abs(np.diag(cov)))
    good = bool(np.all(np.isfinite(errs)) and p[2] > 0 and errs[2] < p[2])
    return GaussianFitResult(float(p[0]), float(p[1]), float(p[2]), float(p[3]),
                             *map(float, errs), chi2, dof, good, it)


def analyze_plane(grid: CoincidenceGrid, sign) -> tuple[float, float]:
    """Fitted variance of the sign-marginal and its standard error."""
    fit = fit_gaussian(marginalize(grid, sign))
    if not fit.converged:
        raise FitError("fit is unreliable (width error exceeds width)",
                       np.array([fit.amplitude, fit.mean, fit.sigma, fit.background]))
    return fit.variance, fit.variance_err


@dataclass(frozen=True)
class PlaneResult:
    plane: str
    var_minus: float
    var_minus_err: float
    var_plus: float
    var_plus_err: float

    @property
    def correlation(self) -> float:
        return math.sqrt(self.var_plus / self.var_minus)

    @property
    def correlation_err(self) -> float:
        rel = 0.5 * math.hypot(self.var_plus_err / self.var_plus,
                               self.var_minus_err / self.var_minus)
        return self.correlation * rel

    def to_dict(self) -> dict:
        return {
            "plane": self.plane,
            "var_minus": self.var_minus,
            "var_minus_err": self.var_minus_err,
            "var_plus": self.var_plus,
            "var_plus_err": self.var_plus_err,
            "C": self.correlation,
            "C_err": self.correlation_err,
        }


@dataclass(frozen=True)
class Certification:
    rows: tuple[PlaneResult, PlaneResult, PlaneResult]
    criteria: dict = field(default_factory=dict)
    sign: str = "-"

    @property
    def report(self) -> CriterionReport:
        return self.criteria[self.sign]

    @property
    def entangled(self) -> bool:
        return any(c.entangled_verdict for c in self.criteria.values())

    def correlations(self) -> dict[str, tuple[float, float]]:
        return {r.plane: (r.correlation, r.correlation_err) for r in self.rows}

    def to_dict(self) -> dict:
        return {
            "table": [r.to_dict() for r in self.rows],
            "criteria": {k: v.to_dict() for k, v in self.criteria.items()},
            "sign": self.sign,
            "verdict": "entangled" if self.entangled else "not detected",
        }


def analyze_grid(grid: CoincidenceGrid, plane: str | None = None) -> PlaneResult:
    vm, em = analyze_plane(grid, "-")
    vp, ep = analyze_plane(grid, "+")
    return PlaneResult(plane or grid.plane, vm, em, vp, ep)


def certify(grids, sign="-") -> Certification:
    """Run the three-plane analysis and the separability test.

    ``grids`` are the (x1, x2), (r1, s2) and (s1, r2) planes in that order.
    ``sign`` selects which criterion drives the verdict: '+', '-' or 'both'.
    """
    grids = list(grids)
    if len(grids) != 3:
        raise InvalidInputError("certify needs exactly three grids (X, U, V)")
    d0 = grids[0].d
    for g in grids[1:]:
        if not math.isclose(g.d, d0, rel_tol=1e-9):
            raise InvalidInputError(
                f"grids use different scaling lengths ({g.d!r} vs {d0!r})"
            )
    for expected, g in zip(PLANE_ORDER, grids):
        if g.plane and g.plane != expected:
            raise InvalidInputError(f"expected plane {expected}, got {g.plane}")
    rows = tuple(analyze_grid(g, name) for g, name in zip(grids, PLANE_ORDER))
    criteria = {}
    for sym in ("-", "+"):
        if sign in ("both", "+-", "-+") or sign_symbol(sign) == sym:
            if sym == "-":
                pairs = [(r.var_minus, r.var_minus_err) for r in rows]
            else:
                pairs = [(r.var_plus, r.var_plus_err) for r in rows]
            criteria[sym] = evaluate_criterion(pairs, sym)
    primary = "-" if "-" in criteria else "+"
    return Certification(rows, criteria, primary)
