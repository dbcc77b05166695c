"""Covariance-matrix engine for n-mode Gaussian states.

Quadratures are interleaved as (x1, p1, x2, p2, ...) with hbar = 1, so the
vacuum covariance matrix is identity / 2 and cov[i, j] = <{dz_i, dz_j}> / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .quadrature import axis_coefficients

PHYSICALITY_TOL = 1e-9
SYMMETRY_TOL = 1e-10


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal symplectic form with blocks [[0, 1], [-1, 0]]."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def rotation_matrix(theta: float) -> np.ndarray:
    """Heisenberg-picture rotation taking (x, p) to (q_theta, q_{theta + pi/2})."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


def squeeze_matrix(r: float) -> np.ndarray:
    return np.diag([math.exp(-r), math.exp(r)])


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Mean vector and covariance matrix of an n-mode Gaussian state.

    Construction checks shape, symmetry and positive diagonal. Physicality
    (the uncertainty principle) is *not* enforced here because partially
    transposed states are legitimately unphysical; query it with
    :meth:`is_physical`.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        if mean.size == 0 or mean.size % 2:
            raise InvalidInputError("mean must have even, non-zero length 2n")
        if cov.shape != (mean.size, mean.size):
            raise InvalidInputError(
                f"cov must be {mean.size}x{mean.size}, got {cov.shape}"
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise InvalidInputError("mean and cov must be finite")
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL:
            raise InvalidInputError("cov is not symmetric")
        if np.any(np.diag(cov) <= 0):
            raise InvalidInputError("cov diagonal must be strictly positive")
        cov = 0.5 * (cov + cov.T)
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return self.mean.size // 2

    @classmethod
    def vacuum(cls, n_modes: int = 1) -> "GaussianState":
        return cls(np.zeros(2 * n_modes), 0.5 * np.eye(2 * n_modes))

    @classmethod
    def coherent(cls, x: float, p: float) -> "GaussianState":
        return cls([x, p], 0.5 * np.eye(2))

    @classmethod
    def squeezed(cls, var_x: float, theta: float = 0.0) -> "GaussianState":
        """Pure single-mode squeezed vacuum with x-variance ``var_x``, then
        rotated by ``theta``."""
        state = cls([0.0, 0.0], np.diag([var_x, 0.25 / var_x]))
        return rotate_mode(state, 0, theta) if theta else state

    @classmethod
    def product(cls, *states: "GaussianState") -> "GaussianState":
        """Tensor product (direct sum of phase spaces)."""
        mean = np.concatenate([s.mean for s in states])
        dim = mean.size
        cov = np.zeros((dim, dim))
        i = 0
        for s in states:
            k = s.mean.size
            cov[i:i + k, i:i + k] = s.cov
            i += k
        return cls(mean, cov)

    def reduced(self, mode: int) -> "GaussianState":
        """Single-mode marginal of ``mode``."""
        _check_mode(self, mode)
        sl = slice(2 * mode, 2 * mode + 2)
        return GaussianState(self.mean[sl], self.cov[sl, sl])

    def symplectic_eigenvalues(self) -> np.ndarray:
        """Williamson spectrum, ascending, one value per mode."""
        omega = symplectic_form(self.n_modes)
        ev = np.abs(np.linalg.eigvals(1j * omega @ self.cov))
        return np.sort(ev)[::2]

    def is_physical(self, tol: float = PHYSICALITY_TOL) -> bool:
        """Check cov + i Omega / 2 >= 0 (Hermitian eigenvalues)."""
        h = self.cov + 0.5j * symplectic_form(self.n_modes)
        return bool(np.linalg.eigvalsh(h).min() >= -tol)

    def to_dict(self) -> dict:
        return {
            "n_modes": self.n_modes,
            "mean": self.mean.tolist(),
            "cov": self.cov.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GaussianState":
        try:
            n = int(doc["n_modes"])
            state = cls(doc["mean"], doc["cov"])
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidInputError):
                raise
            raise InvalidInputError(f"malformed state document: {exc}") from exc
        if state.n_modes != n:
            raise InvalidInputError(
                f"n_modes={n} does not match mean of length {state.mean.size}"
            )
        return state


@dataclass(frozen=True, eq=False)
class LinearObservable:
    """Real linear combination sum_i coeffs[i] * z_i of the quadratures."""

    coeffs: np.ndarray
    label: str = field(default="")

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        if not np.all(np.isfinite(c)) or not np.any(c):
            raise InvalidInputError("coefficients must be finite and not all zero")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def quadrature(cls, theta: float, mode: int = 0, n_modes: int = 1,
                   label: str = "") -> "LinearObservable":
        """q_theta acting on one mode of an ``n_modes`` system."""
        if not 0 <= mode < n_modes:
            raise InvalidInputError(f"mode {mode} out of range for {n_modes} modes")
        c = np.zeros(2 * n_modes)
        c[2 * mode:2 * mode + 2] = axis_coefficients(theta)
        return cls(c, label or f"q({theta:.6g})_{mode + 1}")

    def commutator(self, other: "LinearObservable") -> float:
        """Real number c such that [self, other] = i c."""
        n = self.coeffs.size // 2
        return float(self.coeffs @ symplectic_form(n) @ other.coeffs)


def _check_dims(state, obs):
    if obs.coeffs.size != state.mean.size:
        raise InvalidInputError(
            f"observable has {obs.coeffs.size} coefficients, "
            f"state has {state.mean.size} quadratures"
        )


def _check_mode(state, mode):
    if not 0 <= int(mode) < state.n_modes:
        raise InvalidInputError(
            f"mode {mode} out of range for a {state.n_modes}-mode state"
        )


def observable_mean(state: GaussianState, obs: LinearObservable) -> float:
    _check_dims(state, obs)
    return float(obs.coeffs @ state.mean)


def observable_variance(state: GaussianState, obs: LinearObservable) -> float:
    _check_dims(state, obs)
    c = obs.coeffs
    return float(c @ state.cov @ c)


def observable_covariance(state: GaussianState, a: LinearObservable,
                          b: LinearObservable) -> float:
    """Symmetrised covariance <{dA, dB}> / 2."""
    _check_dims(state, a)
    _check_dims(state, b)
    return float(a.coeffs @ state.cov @ b.coeffs)


def rotate_mode(state: GaussianState, mode: int, theta: float) -> GaussianState:
    """Rotate one mode's phase space so that its new x is q_theta."""
    _check_mode(state, mode)
    big = np.eye(state.mean.size)
    sl = slice(2 * mode, 2 * mode + 2)
    big[sl, sl] = rotation_matrix(theta)
    return GaussianState(big @ state.mean, big @ state.cov @ big.T)


def sample_wigner(state: GaussianState, n_samples: int, seed: int) -> np.ndarray:
    """Draw phase-space points from the state's (positive) Wigner function.

    Uses numpy's PCG64 generator seeded with ``seed``, so output is
    bit-reproducible for a fixed seed and numpy release.

    Returns
    -------
    numpy.ndarray
        Array of shape (n_samples, 2 * n_modes).
    """
    n_samples = int(n_samples)
    if n_samples < 1:
        raise InvalidInputError("n_samples must be >= 1")
    if not state.is_physical():
        raise InvalidInputError("cannot sample a non-physical state")
    w, v = np.linalg.eigh(state.cov)
    factor = v * np.sqrt(np.clip(w, 0.0, None))
    rng = np.random.Generator(np.random.PCG64(seed))
    z = rng.standard_normal((n_samples, state.mean.size))
    return state.mean + z @ factor.T


def random_symplectic(n_modes: int, rng: np.random.Generator,
                      max_squeeze: float = 1.0, layers: int = 2) -> np.ndarray:
    """Random symplectic matrix built from rotations, squeezers and
    two-mode beam splitters."""
    dim = 2 * n_modes
    s_total = np.eye(dim)
    for _ in range(layers):
        local = np.zeros((dim, dim))
        for k in range(n_modes):
            r = rng.uniform(-max_squeeze, max_squeeze)
            block = (rotation_matrix(rng.uniform(0, 2 * np.pi))
                     @ squeeze_matrix(r)
                     @ rotation_matrix(rng.uniform(0, 2 * np.pi)))
            local[2 * k:2 * k + 2, 2 * k:2 * k + 2] = block
        s_total = local @ s_total
        for a in range(n_modes):
            for b in range(a + 1, n_modes):
                t = rng.uniform(0, 2 * np.pi)
                bs = np.eye(dim)
                c, s = math.cos(t), math.sin(t)
                for off in (0, 1):
                    i, j = 2 * a + off, 2 * b + off
                    bs[i, i] = bs[j, j] = c
                    bs[i, j], bs[j, i] = s, -s
                s_total = bs @ s_total
    return s_total


def random_physical_state(n_modes: int, seed: int, max_squeeze: float = 1.0,
                          max_excess_noise: float = 1.0,
                          max_displacement: float = 1.0) -> GaussianState:
    """Random physical Gaussian state S D S^T with D >= identity / 2.

    ``max_squeeze=0`` yields a passive transformation of a thermal state,
    which for a single mode is diagonal.
    """
    if n_modes < 1:
        raise InvalidInputError("n_modes must be >= 1")
    rng = np.random.default_rng(seed)
    nu = 0.5 + max_excess_noise * rng.random(n_modes)
    d = np.diag(np.repeat(nu, 2))
    s = random_symplectic(n_modes, rng, max_squeeze)
    mean = max_displacement * rng.standard_normal(2 * n_modes)
    return GaussianState(mean, s @ d @ s.T)
