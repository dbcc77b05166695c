import math

import numpy as np
import pytest

from mubtriple.entangle import (GlobalOperatorSet, build_global, check_global_ur,
                                evaluate_criterion, evaluate_criterion_from_state,
                                parse_sign, partial_transpose)
from mubtriple.errors import InvalidInputError
from mubtriple.gaussian import (GaussianState, observable_variance, random_physical_state,
                                symplectic_form)
from mubtriple.spdc import SpdcParams, spdc_state
from oracles import symplectic_spectrum

H = math.sqrt(3) / 2


def _random_two_mode(seed):
    return random_physical_state(2, seed=seed, max_squeeze=1.0)


def test_build_global_examples():
    assert build_global("X", "-").coeffs.tolist() == [1, 0, -1, 0]
    assert build_global("U", "-").coeffs == pytest.approx([-0.5, H, 0.5, H], abs=1e-15)
    assert build_global("V", "+").coeffs == pytest.approx([-0.5, -H, -0.5, H], abs=1e-15)
    assert build_global("P", "+").coeffs.tolist() == [0, 1, 0, 1]
    with pytest.raises(InvalidInputError):
        build_global("Q", "+")
    with pytest.raises(InvalidInputError):
        parse_sign(0)


@pytest.mark.parametrize("sign", ["+", "-"])
def test_triple_commutes(sign):
    ops = GlobalOperatorSet.for_sign(sign).commuting_triple()
    omega = symplectic_form(2)
    for a in ops:
        for b in ops:
            assert abs(a.coeffs @ omega @ b.coeffs) < 1e-14


def test_rs_pair_does_not_commute():
    ops = GlobalOperatorSet.for_sign("-")
    assert abs(ops.X.commutator(ops.R)) > 0.1


def test_global_ur_examples():
    for sign in "+-":
        rep = check_global_ur(GaussianState.vacuum(2), sign)
        assert rep.lhs == pytest.approx(1.0, abs=1e-12)
        assert rep.satisfied
        rep = check_global_ur(GaussianState([0] * 4, np.eye(4)), sign)
        assert rep.lhs == pytest.approx(8.0, abs=1e-12)
    with pytest.raises(InvalidInputError):
        check_global_ur(GaussianState.vacuum(), "+")


def test_global_ur_sweep():
    for seed in range(2000):
        st = _random_two_mode(seed)
        for sign in "+-":
            assert check_global_ur(st, sign).margin >= -1e-9


def test_partial_transpose_examples():
    prod = GaussianState.product(GaussianState.squeezed(2.0, 0.3), GaussianState.coherent(1, 1))
    assert partial_transpose(prod).is_physical()
    st = spdc_state(SpdcParams(5.0, 0.2))
    pt = partial_transpose(st)
    assert not pt.is_physical()
    assert symplectic_spectrum(pt.cov).min() < 0.5 - 1e-3
    twice = partial_transpose(pt)
    assert np.array_equal(twice.cov, st.cov) and np.array_equal(twice.mean, st.mean)
    with pytest.raises(InvalidInputError):
        partial_transpose(GaussianState.vacuum(3))


def test_mirror_identity():
    for seed in range(200):
        st = _random_two_mode(seed)
        pt = partial_transpose(st)
        for sign in "+-":
            u = observable_variance(st, build_global("U", sign))
            r = observable_variance(pt, build_global("R", sign))
            assert u == pytest.approx(r, abs=1e-12)


def test_ppt_consistency():
    npt = flagged = 0
    for seed in range(10_000):
        st = _random_two_mode(seed)
        verdicts = [evaluate_criterion_from_state(st, s).entangled_verdict for s in "+-"]
        flagged += any(verdicts)
        if symplectic_spectrum(partial_transpose(st).cov).min() >= 0.5 - 1e-9:
            assert not any(verdicts)
        else:
            npt += 1
    # the sweep must actually exercise entangled states
    assert npt > 1000 and flagged > 100


def test_separable_sweep():
    for seed in range(2000):
        st = GaussianState.product(random_physical_state(1, seed=2 * seed),
                                   random_physical_state(1, seed=2 * seed + 1))
        for sign in "+-":
            assert evaluate_criterion_from_state(st, sign).product >= 1 - 1e-9


def test_evaluate_criterion_examples():
    rep = evaluate_criterion([(0.74, 0.02), (0.2455, 0.0006), (0.225, 0.001)], "-")
    assert round(rep.product, 3) == 0.041
    assert round(rep.product_uncertainty, 3) == 0.001
    assert rep.entangled_verdict and rep.sign == "-"

    rep = evaluate_criterion([(1, 0), (1, 0), (1, 0)], "+")
    assert rep.product == 1.0 and not rep.entangled_verdict

    rep = evaluate_criterion([(0.9, 0.2)] * 3, "-")
    assert rep.product == pytest.approx(0.729, abs=1e-12)
    assert rep.product_uncertainty == pytest.approx(0.729 * math.sqrt(3) * 0.2 / 0.9, rel=1e-12)
    assert round(rep.product_uncertainty, 2) == 0.28
    assert not rep.entangled_verdict

    with pytest.raises(InvalidInputError):
        evaluate_criterion([(0, 0.1), (1, 0), (1, 0)], "-")
    with pytest.raises(InvalidInputError):
        evaluate_criterion([(1, -0.1), (1, 0), (1, 0)], "-")


def test_criterion_from_state_examples():
    rep = evaluate_criterion_from_state(GaussianState.vacuum(2), "-")
    assert rep.product == pytest.approx(1, abs=1e-12) and not rep.entangled_verdict
    rep = evaluate_criterion_from_state(spdc_state(SpdcParams(2.0, 0.5)), "-")
    assert [v for v, _ in rep.variances] == pytest.approx([0.25] * 3, abs=1e-12)
    assert rep.product == pytest.approx(0.015625, abs=1e-12)
    assert rep.entangled_verdict
    sep = GaussianState([0] * 4, np.diag([0.125, 2, 0.125, 2]))
    rep = evaluate_criterion_from_state(sep, "-")
    assert [v for v, _ in rep.variances] == pytest.approx([0.25, 3.0625, 3.0625], abs=1e-12)
    assert rep.product >= 1


def test_report_serializes_inputs():
    doc = evaluate_criterion([(0.5, 0.01), (0.5, 0.01), (0.5, 0.01)], "+").to_dict()
    assert doc["variances"]["U"] == {"value": 0.5, "uncertainty": 0.01}
    assert doc["sign"] == "+" and doc["bound"] == 1.0
