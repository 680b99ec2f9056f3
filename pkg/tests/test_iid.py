import math

import numpy as np
import pytest

from secrecy_exponents.iid import (
    REGIME_DEGENERATE,
    REGIME_PARAMETRIC,
    REGIME_SATURATION,
    REGIME_ZERO,
    iid_exponent,
    iid_exponent_brute,
    info_density_cgf,
    info_density_cgf_derivative,
    tilted_joint,
)
from secrecy_exponents.prob import Channel, Distribution, mutual_information

BSC11 = Channel([[0.89, 0.11], [0.11, 0.89]])
UNIF2 = Distribution([0.5, 0.5])


def random_pair(rng):
    w = rng.uniform(0.05, 0.95, (2, 2))
    w /= w.sum(axis=1, keepdims=True)
    p = rng.uniform(0.2, 0.8)
    return Distribution([p, 1 - p]), Channel(w)


def test_cgf_endpoints():
    assert info_density_cgf(UNIF2, BSC11, 0.0) == pytest.approx(0.0, abs=1e-12)
    # frozen two-term closed form at lam = 1
    assert info_density_cgf(UNIF2, BSC11, 1.0) == pytest.approx(
        0.47523989604098194, abs=1e-14
    )
    with pytest.raises(ValueError):
        info_density_cgf(UNIF2, BSC11, 1.5)


def test_cgf_slope_at_zero_is_mutual_information():
    rng = np.random.default_rng(11)
    for _ in range(20):
        P, W = random_pair(rng)
        I = mutual_information(P, W)
        assert info_density_cgf_derivative(P, W, 0.0) == pytest.approx(I, abs=1e-12)
        eps = 1e-6
        secant = info_density_cgf(P, W, eps) / eps
        assert secant == pytest.approx(I, abs=1e-4)


def test_cgf_convexity_midpoint():
    rng = np.random.default_rng(12)
    for _ in range(50):
        P, W = random_pair(rng)
        l1, l2 = sorted(rng.uniform(0, 1, 2))
        lhs = info_density_cgf(P, W, (l1 + l2) / 2)
        rhs = (info_density_cgf(P, W, l1) + info_density_cgf(P, W, l2)) / 2
        assert lhs <= rhs + 1e-12


def test_tilted_joint_is_valid_and_interpolates():
    q0 = tilted_joint(UNIF2, BSC11, 0.0)
    assert np.abs(q0.masses - UNIF2.masses[:, None] * BSC11.rows).max() < 1e-14
    q1 = tilted_joint(UNIF2, BSC11, 1.0)
    assert q1.masses.sum() == pytest.approx(1.0, abs=1e-12)


def test_exponent_regimes():
    I = mutual_information(UNIF2, BSC11)
    r = iid_exponent(UNIF2, BSC11, I)
    assert r.exponent == 0.0 and r.regime == REGIME_ZERO
    assert iid_exponent(UNIF2, BSC11, 0.1).exponent == 0.0
    r = iid_exponent(UNIF2, BSC11, 2.0)
    assert r.regime == REGIME_SATURATION
    assert r.exponent == pytest.approx(1.524760103959018, abs=1e-14)
    r = iid_exponent(UNIF2, BSC11, 0.45)
    assert r.regime == REGIME_PARAMETRIC
    assert 0 < r.solution.lam < 1
    # the optimal tilt equates the tilted mean density with the rate
    assert info_density_cgf_derivative(UNIF2, BSC11, r.solution.lam) == pytest.approx(
        0.45, abs=1e-7
    )


def test_zero_capacity_returns_infinite_exponent():
    flat = Channel([[0.6, 0.4], [0.6, 0.4]])
    r = iid_exponent(UNIF2, flat, 0.5)
    assert r.exponent == math.inf and r.regime == REGIME_DEGENERATE


def test_strictly_increasing_above_I():
    I = mutual_information(UNIF2, BSC11)
    rates = I + 1e-3 * np.arange(1, 200)
    vals = [iid_exponent(UNIF2, BSC11, float(R)).exponent for R in rates]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_saturation_linearity():
    thresh = info_density_cgf_derivative(UNIF2, BSC11, 1.0)
    c = info_density_cgf(UNIF2, BSC11, 1.0)
    for R in [thresh + 0.01, 1.0, 1.5, 2.5]:
        r = iid_exponent(UNIF2, BSC11, R)
        assert r.exponent == R - c  # exact closed form in this regime
    e1 = iid_exponent(UNIF2, BSC11, 1.0).exponent
    e2 = iid_exponent(UNIF2, BSC11, 1.25).exponent
    assert abs((e2 - e1) - 0.25) < 1e-12


def test_brute_force_agrees_with_dual():
    assert iid_exponent_brute(UNIF2, BSC11, 0.0) < 1e-9
    rng = np.random.default_rng(13)
    for _ in range(3):
        P, W = random_pair(rng)
        for R in [0.1, 0.5, 0.9]:
            dual = iid_exponent(P, W, R).exponent
            brute = iid_exponent_brute(P, W, R)
            assert abs(dual - brute) < 1e-6


def test_brute_argmin_near_tilted_joint():
    R = 0.45
    res = iid_exponent(UNIF2, BSC11, R)
    _, qmin = iid_exponent_brute(UNIF2, BSC11, R, grid=64, return_argmin=True)
    l1 = np.abs(qmin.masses - res.solution.tilted.masses).sum()
    assert l1 < 4.0 / 64
