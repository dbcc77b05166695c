"""Independent reference computations used by several test modules.

None of these share code paths with the package under test.
"""

import cmath
import math

import numpy as np


def fock_moments(coeffs, theta, dim=None):
    """<q_theta> and <q_theta^2> of sum_k c_k |k> via truncated ladder matrices."""
    c = np.asarray(coeffs, dtype=complex)
    c = c / np.linalg.norm(c)
    dim = dim or c.size + 3
    vec = np.zeros(dim, dtype=complex)
    vec[:c.size] = c
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    q = (a * cmath.exp(-1j * theta) + a.conj().T * cmath.exp(1j * theta)) / math.sqrt(2)
    m1 = vec.conj() @ q @ vec
    m2 = vec.conj() @ q @ q @ vec
    return m1.real, m2.real


def fock_rotated_variance(coeffs, theta):
    m1, m2 = fock_moments(coeffs, theta)
    return m2 - m1 * m1


def dense_rotation(amplitudes, q, theta):
    """Brute-force quadrature of the standard continuous rotation kernel.

    O(n^2); only usable for angles well away from multiples of pi.
    """
    s, c = math.sin(theta), math.cos(theta)
    pref = cmath.sqrt((1 - 1j * c / s) / (2 * math.pi))
    dq = q[1] - q[0]
    u = q[:, None]
    kern = np.exp(1j * (0.5 * c / s * (u ** 2 + q[None, :] ** 2) - u * q[None, :] / s))
    return pref * dq * kern @ amplitudes


def eq10_rotated_variance(var_x, var_p, cov_xp, theta):
    """cos^2 Var(x) + sin^2 Var(p) + 2 sin cos Cov(x, p), written out by hand."""
    c, s = math.cos(theta), math.sin(theta)
    return c * c * var_x + s * s * var_p + 2 * s * c * cov_xp


def symplectic_spectrum(cov):
    """Symplectic eigenvalues from the spectrum of -(Omega V)^2, sorted."""
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0] // 2
    omega = np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    m = omega @ cov
    ev = np.sort(np.linalg.eigvals(-m @ m).real)[::2]
    return np.sqrt(np.clip(ev, 0, None))


def sampled_variance(cov, coeffs, n_samples, seed):
    """Monte-Carlo variance of coeffs . z for z ~ N(0, cov), with its standard error."""
    rng = np.random.default_rng(seed)
    z = rng.multivariate_normal(np.zeros(len(cov)), cov, size=n_samples, method="cholesky")
    w = z @ np.asarray(coeffs, dtype=float)
    var = w.var(ddof=1)
    return var, var * math.sqrt(2.0 / (n_samples - 1))


def chunked_variances(cov, coeff_rows, n_total, chunk, seed):
    """Monte-Carlo variances of several linear combinations of z ~ N(0, cov).

    Samples are drawn chunk by chunk to bound memory. Returns (variances,
    standard errors), each of length len(coeff_rows).
    """
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(np.asarray(cov, dtype=float))
    c = np.asarray(coeff_rows, dtype=float)
    s1 = np.zeros(len(c))
    s2 = np.zeros(len(c))
    done = 0
    while done < n_total:
        m = min(chunk, n_total - done)
        w = rng.standard_normal((m, chol.shape[0])) @ chol.T @ c.T
        s1 += w.sum(axis=0)
        s2 += (w * w).sum(axis=0)
        done += m
    mean = s1 / n_total
    var = (s2 - n_total * mean ** 2) / (n_total - 1)
    return var, var * math.sqrt(2.0 / (n_total - 1))


def dense_centered_dft(a):
    """Unitary DFT with indices centred at n/2, as an explicit matrix product."""
    a = np.asarray(a, dtype=complex)
    n = a.size
    k = np.arange(n) - n // 2
    return np.exp(-2j * np.pi * np.outer(k, k) / n) @ a / math.sqrt(n)
