"""Norm pair, duality map and clipping contracts."""

import numpy as np
import pytest
from scipy.optimize import minimize

from tailopt.spaces import NormedSpace

SUPPORTED_PRIMALS = [1.2, 1.5, 2.0]  # dual exponents 6, 3, 2; C = 5, 2, 1


def test_construction_rejects_bad_exponents():
    with pytest.raises(ValueError):
        NormedSpace(dim=3, primal_exponent=4.0)  # dual l_{4/3} is not 2-smooth
    with pytest.raises(ValueError):
        NormedSpace(dim=3, primal_exponent=1.0)
    with pytest.raises(ValueError):
        NormedSpace.from_dual_exponent(3, np.inf)
    with pytest.raises(ValueError):
        NormedSpace(dim=0)


def test_conjugate_exponents_and_smooth_constant():
    for p in [2.0, 1.5, 1.2, 1.8]:
        sp = NormedSpace(dim=4, primal_exponent=p)
        assert 1.0 / sp.primal_exponent + 1.0 / sp.dual_exponent == pytest.approx(1.0, abs=1e-15)
        assert sp.smooth_power == 2.0
        assert sp.smooth_constant >= 1.0
        assert sp.smooth_constant == pytest.approx(1.0 / (sp.primal_exponent - 1.0))
    assert NormedSpace.euclidean(5).smooth_constant == 1.0
    assert NormedSpace.from_dual_exponent(5, 3.0).primal_exponent == pytest.approx(1.5)


def test_norm_examples():
    sp = NormedSpace.euclidean(2)
    assert sp.primal_norm([3.0, 4.0]) == pytest.approx(5.0)
    assert sp.dual_norm([3.0, 4.0]) == pytest.approx(5.0)
    # l_4 arithmetic (1 + 1)^(1/4), carried by the dual of the p = 4/3 space
    sp43 = NormedSpace(dim=2, primal_exponent=4.0 / 3.0)
    assert sp43.dual_norm([0.0, 0.0]) == 0.0
    assert sp43.dual_norm([1.0, 1.0]) == pytest.approx(2.0 ** 0.25, rel=1e-14)
    # l_1.5 arithmetic (1 + 8^1.5)^(2/3) on the primal side
    sp15 = NormedSpace(dim=2, primal_exponent=1.5)
    closed = (1.0 + 8.0 ** 1.5) ** (2.0 / 3.0)
    assert sp15.primal_norm([1.0, 8.0]) == pytest.approx(closed, rel=1e-14)


def test_dual_norm_sup_characterization():
    # cross-check against sup_{||x||_p <= 1} <v, x> by numeric maximization
    sp = NormedSpace(dim=2, primal_exponent=1.5)  # dual r = 3
    v = np.array([1.0, 8.0])
    got = sp.dual_norm(v)
    assert got == pytest.approx((1.0 + 8.0 ** 3) ** (1.0 / 3.0), rel=1e-14)
    assert got == pytest.approx(_sup_pairing_on_unit_ball(sp, v), rel=1e-7)


def _sup_pairing_on_unit_ball(sp, v):
    def neg(x):
        n = sp.primal_norm(x)
        if n > 0:
            x = x / n
        return -float(np.dot(v, x))

    best = -np.inf
    rng = np.random.default_rng(7)
    for _ in range(8):
        res = minimize(neg, rng.standard_normal(sp.dim), method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-12, "maxiter": 5000})
        best = max(best, -res.fun)
    return best


def test_duality_map_examples():
    sp = NormedSpace.euclidean(2)
    np.testing.assert_allclose(sp.duality_map([0.0, 5.0]), [0.0, 1.0], atol=1e-15)
    np.testing.assert_array_equal(sp.duality_map([0.0, 0.0]), [0.0, 0.0])
    sp15 = NormedSpace(dim=2, primal_exponent=1.5)  # dual r = 3
    v = np.array([1.0, 8.0])
    d = sp15.duality_map(v)
    expect = np.sign(v) * np.abs(v) ** 2.0 / sp15.dual_norm(v) ** 2.0
    np.testing.assert_allclose(d, expect, rtol=1e-14)
    # contract identities checked by independent norm / pairing evaluation
    assert sp15.primal_norm(d) == pytest.approx(1.0, rel=1e-12)
    assert sp15.pairing(v, d) == pytest.approx(sp15.dual_norm(v), rel=1e-12)


def test_duality_identities_sweep():
    # quantified invariant: unit primal norm and tight pairing, 1e-10 relative
    rng = np.random.default_rng(2024)
    for p in SUPPORTED_PRIMALS:
        sp = NormedSpace(dim=8, primal_exponent=p)
        v = rng.standard_normal((40_000, 8))
        v *= rng.choice([1e-3, 1.0, 1e3], size=(40_000, 1))
        d = sp.duality_map(v)
        pn = sp.primal_norm(d)
        dn = sp.dual_norm(v)
        pair = sp.pairing(v, d)
        assert np.all(np.abs(pn - 1.0) < 1e-10)
        assert np.all(np.abs(pair - dn) <= 1e-10 * dn)


def test_clip_examples():
    sp = NormedSpace.euclidean(2)
    np.testing.assert_allclose(sp.clip_dual([3.0, 4.0], 2.0), [1.2, 1.6], rtol=1e-15)
    v = np.array([0.3, 0.1])
    np.testing.assert_array_equal(sp.clip_dual(v, 2.0), v)  # inside ball: unchanged
    sp15 = NormedSpace(dim=2, primal_exponent=1.5)
    v = np.array([1.0, 8.0])
    dn = sp15.dual_norm(v)  # dual_norm is the oracle for the rescale factor
    np.testing.assert_allclose(sp15.clip_dual(v, 4.0), v * (4.0 / dn), rtol=1e-14)
    with pytest.raises(ValueError):
        sp.clip_dual(v, 0.0)


def test_clip_invariants_sweep():
    rng = np.random.default_rng(11)
    for p in SUPPORTED_PRIMALS:
        sp = NormedSpace(dim=6, primal_exponent=p)
        v = rng.standard_normal((20_000, 6)) * rng.lognormal(0, 3, size=(20_000, 1))
        tau = 1.7
        c = sp.clip_dual(v, tau)
        n_v = sp.dual_norm(v)
        n_c = sp.dual_norm(c)
        expect = np.minimum(tau, n_v)
        assert np.all(np.abs(n_c - expect) <= 1e-12 * np.maximum(expect, 1e-300))
        # idempotent up to one rounding of the rescale factor
        cc = sp.clip_dual(c, tau)
        assert np.all(np.abs(cc - c) <= 4.0 * np.spacing(np.abs(c)))


def test_holder_inequality_sweep():
    rng = np.random.default_rng(5)
    for p in SUPPORTED_PRIMALS:
        sp = NormedSpace(dim=7, primal_exponent=p)
        v = rng.standard_normal((30_000, 7))
        w = rng.standard_normal((30_000, 7))
        lhs = sp.pairing(v, w)
        rhs = sp.dual_norm(v) * sp.primal_norm(w)
        assert np.all(lhs <= rhs + 1e-9)


def test_smooth_norm_gap_trivial_cases():
    sp15 = NormedSpace(dim=4, primal_exponent=1.5)
    x = np.array([1.0, -2.0, 0.5, 3.0])
    assert sp15.smooth_norm_gap(x, np.zeros(4)) == pytest.approx(0.0, abs=1e-12)
    # Euclidean case is an exact parallelogram identity
    sp = NormedSpace.euclidean(4)
    rng = np.random.default_rng(3)
    for _ in range(100):
        x, y = rng.standard_normal((2, 4))
        assert sp.smooth_norm_gap(x, y) == pytest.approx(0.0, abs=1e-12)


def test_smooth_norm_gap_sweep():
    # Monte-Carlo sweep is the oracle: the inequality must never fail
    rng = np.random.default_rng(17)
    for p in SUPPORTED_PRIMALS:
        sp = NormedSpace(dim=5, primal_exponent=p)
        x = rng.standard_normal((10_000, 5))
        y = rng.standard_normal((10_000, 5)) * rng.choice([0.01, 1.0, 5.0], size=(10_000, 1))
        gap = sp.smooth_norm_gap(x, y)
        assert np.min(gap) >= -1e-9


def test_dim_mismatch_rejected():
    sp = NormedSpace.euclidean(3)
    with pytest.raises(ValueError):
        sp.primal_norm([1.0, 2.0])
    with pytest.raises(ValueError):
        sp.pairing([1.0, 2.0, 3.0], [1.0, 2.0])


def test_batched_shapes():
    sp = NormedSpace(dim=4, primal_exponent=1.5)
    batch = np.ones((6, 3, 4))
    assert np.shape(sp.dual_norm(batch)) == (6, 3)
    assert sp.duality_map(batch).shape == (6, 3, 4)
    assert isinstance(sp.dual_norm(np.ones(4)), float)
