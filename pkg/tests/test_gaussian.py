import math

import numpy as np
import pytest

from mubtriple.errors import InvalidInputError
from mubtriple.gaussian import (GaussianState, LinearObservable, observable_mean,
                                observable_variance, random_physical_state,
                                rotate_mode, sample_wigner, symplectic_form)
from oracles import eq10_rotated_variance

R = LinearObservable.quadrature(2 * math.pi / 3, label="r")
S = LinearObservable.quadrature(4 * math.pi / 3, label="s")
X = LinearObservable.quadrature(0.0, label="x")


def test_construction_validation():
    with pytest.raises(InvalidInputError):
        GaussianState([0, 0], [[1, 0.2], [0.3, 1]])
    with pytest.raises(InvalidInputError):
        GaussianState([0, 0], [[0, 0], [0, 1]])
    with pytest.raises(InvalidInputError):
        GaussianState([0, 0, 0], np.eye(3))
    with pytest.raises(InvalidInputError):
        LinearObservable([0, 0])


def test_physicality_is_a_query():
    bad = GaussianState([0, 0], np.diag([0.1, 0.1]))
    assert not bad.is_physical()
    assert GaussianState.vacuum().is_physical()
    assert GaussianState.vacuum(3).symplectic_eigenvalues() == pytest.approx([0.5] * 3, abs=1e-15)


def test_means():
    assert observable_mean(GaussianState.vacuum(), R) == 0
    assert observable_mean(GaussianState.coherent(3, 0), X) == 3
    assert observable_mean(GaussianState.coherent(1, 2), R) == pytest.approx(
        -0.5 + math.sqrt(3), abs=1e-12)
    assert observable_mean(GaussianState.coherent(1, 2), R) == pytest.approx(1.2321, abs=1e-4)


def test_variances():
    assert observable_variance(GaussianState.vacuum(), R) == pytest.approx(0.5, abs=1e-15)
    assert observable_variance(GaussianState.squeezed(2.0), X) == 2.0


def test_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        observable_variance(GaussianState.vacuum(2), R)
    with pytest.raises(InvalidInputError):
        observable_mean(GaussianState.vacuum(2), R)


def test_variance_matches_eq10_expansion():
    for seed in range(200):
        st = random_physical_state(1, seed)
        vx, vp, cxp = st.cov[0, 0], st.cov[1, 1], st.cov[0, 1]
        for th in (2 * math.pi / 3, 4 * math.pi / 3, 0.7):
            assert observable_variance(st, LinearObservable.quadrature(th)) == pytest.approx(
                eq10_rotated_variance(vx, vp, cxp, th), abs=1e-12)


def test_rs_product_identity():
    # (dr)^2 (ds)^2 = [(dx)^2 + 3(dp)^2]^2 / 16 - 3/16 (<{x,p}> - 2<x><p>)^2
    for seed in range(300):
        st = random_physical_state(1, seed)
        vx, vp = st.cov[0, 0], st.cov[1, 1]
        cross = 2 * st.cov[0, 1]
        lhs = observable_variance(st, R) * observable_variance(st, S)
        rhs = (vx + 3 * vp) ** 2 / 16 - 3 / 16 * cross ** 2
        assert lhs == pytest.approx(rhs, abs=1e-10)


def test_rotate_mode():
    vac = GaussianState.vacuum()
    assert np.allclose(rotate_mode(vac, 0, 1.234).cov, vac.cov, atol=1e-15)
    sq = GaussianState([0, 0], np.diag([2.0, 0.125]))
    assert rotate_mode(sq, 0, 2 * math.pi / 3).cov[0, 0] == pytest.approx(0.25 * 2 + 0.75 * 0.125)
    st = random_physical_state(2, 7)
    back = rotate_mode(rotate_mode(st, 1, 0.9), 1, -0.9)
    assert np.allclose(back.cov, st.cov, atol=1e-12)
    assert np.allclose(back.mean, st.mean, atol=1e-12)
    with pytest.raises(InvalidInputError):
        rotate_mode(st, 2, 0.1)


def test_rotation_preserves_symplectic_spectrum():
    for seed in range(50):
        st = random_physical_state(2, seed)
        rot = rotate_mode(st, seed % 2, 0.37 * seed)
        assert rot.symplectic_eigenvalues() == pytest.approx(st.symplectic_eigenvalues(), abs=1e-10)
        assert rot.is_physical()


def test_random_states_physical_and_obey_hur():
    for seed in range(10_000):
        st = random_physical_state(1, seed)
        assert st.cov[0, 0] * st.cov[1, 1] >= 0.25 - 1e-9
    for seed in range(500):
        st = random_physical_state(2, seed)
        assert st.is_physical()
        assert st.symplectic_eigenvalues().min() >= 0.5 - 1e-9


def test_zero_squeeze_gives_diagonal_state():
    st = random_physical_state(1, 5, max_squeeze=0.0)
    assert abs(st.cov[0, 1]) < 1e-14
    assert st.cov[0, 0] == pytest.approx(st.cov[1, 1], abs=1e-14)


def test_sampling_vacuum_and_determinism():
    pts = sample_wigner(GaussianState.vacuum(), 1_000_000, seed=11)
    assert 0.498 <= pts[:, 0].var() <= 0.502
    again = sample_wigner(GaussianState.vacuum(), 1000, seed=11)
    assert np.array_equal(again, sample_wigner(GaussianState.vacuum(), 1000, seed=11))


def test_sampling_matches_variance():
    st = random_physical_state(2, 99)
    pts = sample_wigner(st, 400_000, seed=1)
    rng = np.random.default_rng(0)
    for _ in range(5):
        obs = LinearObservable(rng.normal(size=4))
        vals = pts @ obs.coeffs
        exact = observable_variance(st, obs)
        se = exact * math.sqrt(2 / (vals.size - 1))
        assert abs(vals.var(ddof=1) - exact) < 5 * se


def test_sampling_rejects_unphysical():
    with pytest.raises(InvalidInputError):
        sample_wigner(GaussianState([0, 0], np.diag([0.1, 0.1])), 10, 0)
    with pytest.raises(InvalidInputError):
        sample_wigner(GaussianState.vacuum(), 0, 0)


def test_json_roundtrip():
    st = random_physical_state(2, 3)
    back = GaussianState.from_dict(st.to_dict())
    assert np.array_equal(back.cov, st.cov) and np.array_equal(back.mean, st.mean)
    with pytest.raises(InvalidInputError):
        GaussianState.from_dict({"n_modes": 2, "mean": [0, 0], "cov": [[1, 0], [0, 1]]})
    with pytest.raises(InvalidInputError):
        GaussianState.from_dict({"mean": [0, 0]})


def test_commutator_via_symplectic_form():
    x = LinearObservable.quadrature(0.0)
    p = LinearObservable.quadrature(math.pi / 2)
    assert x.commutator(p) == pytest.approx(1.0)
    assert symplectic_form(2).shape == (4, 4)
