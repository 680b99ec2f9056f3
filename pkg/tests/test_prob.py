import math

import numpy as np
import pytest

from secrecy_exponents.prob import (
    AlphabetMismatchError,
    Channel,
    Distribution,
    JointDistribution,
    compose_prefix,
    conditional_divergence,
    entropy,
    expected_log_likelihood,
    kl_divergence,
    mean_information_density,
    mutual_information,
    output_marginal,
)

BSC11 = Channel([[0.89, 0.11], [0.11, 0.89]])
UNIF2 = Distribution([0.5, 0.5])


def random_pair(rng, nx=2, nz=2):
    w = rng.uniform(0.05, 0.95, (nx, nz))
    w /= w.sum(axis=1, keepdims=True)
    p = rng.dirichlet(np.ones(nx))
    return Distribution(p), Channel(w)


def test_distribution_validation():
    with pytest.raises(ValueError):
        Distribution([0.5, 0.6])
    with pytest.raises(ValueError):
        Distribution([1.1, -0.1])
    # no silent renormalization
    with pytest.raises(ValueError):
        Distribution([0.3, 0.3])
    # degenerate single-symbol alphabet is fine
    d = Distribution([1.0])
    assert entropy(d) == 0.0


def test_entropy_examples():
    assert entropy(Distribution([0.0, 1.0])) == 0.0
    assert entropy(UNIF2) == pytest.approx(math.log(2), abs=1e-15)
    # frozen from direct evaluation of -sum p log p
    assert entropy(Distribution([0.11, 0.89])) == pytest.approx(
        0.34651533691866615, abs=1e-15
    )


def test_kl_examples():
    assert kl_divergence(UNIF2, UNIF2) == 0.0
    assert kl_divergence(Distribution([1, 0]), Distribution([0, 1])) == math.inf
    # frozen from direct summation
    assert kl_divergence(UNIF2, Distribution([0.11, 0.89])) == pytest.approx(
        0.4687571841628909, abs=1e-14
    )
    with pytest.raises(AlphabetMismatchError):
        kl_divergence(UNIF2, Distribution([1.0]))


def test_kl_nonnegative_random():
    rng = np.random.default_rng(1)
    for _ in range(200):
        p = Distribution(rng.dirichlet(np.ones(3)))
        q = Distribution(rng.dirichlet(np.ones(3)))
        assert kl_divergence(p, q) >= 0.0
        assert kl_divergence(p, p) == 0.0


def test_conditional_divergence_equals_joint_kl():
    rng = np.random.default_rng(2)
    for _ in range(50):
        P, V = random_pair(rng, 3, 2)
        _, W = random_pair(rng, 3, 2)
        lhs = conditional_divergence(V, W, P)
        rhs = kl_divergence(
            Distribution(JointDistribution.from_input_and_channel(P, V).masses.reshape(-1)),
            Distribution(JointDistribution.from_input_and_channel(P, W).masses.reshape(-1)),
        )
        assert lhs == pytest.approx(rhs, abs=1e-12)
    assert conditional_divergence(V, V, P) == 0.0
    # point-mass input reduces to a single-row divergence
    pm = Distribution([1.0, 0.0, 0.0])
    assert conditional_divergence(V, W, pm) == pytest.approx(
        kl_divergence(V.row(0), W.row(0)), abs=1e-14
    )


def test_mutual_information_examples():
    flat = Channel([[0.7, 0.3], [0.7, 0.3]])
    assert mutual_information(UNIF2, flat) == 0.0
    # frozen: ln 2 - binary entropy of 0.11
    assert mutual_information(UNIF2, BSC11) == pytest.approx(
        0.3466318436412792, abs=1e-14
    )
    # definition cross-check against the joint-vs-product divergence
    rng = np.random.default_rng(3)
    for _ in range(30):
        P, V = random_pair(rng)
        joint = JointDistribution.from_input_and_channel(P, V)
        prod = np.outer(joint.x_marginal().masses, joint.z_marginal().masses)
        direct = kl_divergence(
            Distribution(joint.masses.reshape(-1)), Distribution(prod.reshape(-1))
        )
        assert mutual_information(P, V) == pytest.approx(direct, abs=1e-12)


def test_output_marginal():
    assert np.allclose(
        output_marginal(Distribution([0.3, 0.7]), BSC11).masses, [0.344, 0.656], atol=1e-15
    )
    assert np.allclose(output_marginal(UNIF2, BSC11).masses, [0.5, 0.5], atol=1e-15)
    ident = Channel.identity(3)
    p = Distribution([0.2, 0.3, 0.5])
    assert np.array_equal(output_marginal(p, ident).masses, p.masses)


def test_output_marginal_linearity():
    rng = np.random.default_rng(4)
    for _ in range(30):
        P1, V = random_pair(rng, 3, 3)
        P2, _ = random_pair(rng, 3, 3)
        a = rng.uniform()
        mix = Distribution(a * P1.masses + (1 - a) * P2.masses)
        lhs = output_marginal(mix, V).masses
        rhs = a * output_marginal(P1, V).masses + (1 - a) * output_marginal(P2, V).masses
        assert np.abs(lhs - rhs).max() < 1e-12


def test_expected_log_likelihood():
    # V = W on a BSC: minus the noise entropy, frozen value
    assert expected_log_likelihood(BSC11, BSC11, UNIF2) == pytest.approx(
        -0.34651533691866615, abs=1e-14
    )
    # mass on a zero of the reference
    V = Channel([[1.0, 0.0], [0.0, 1.0]])
    W0 = Channel([[1.0, 0.0], [1.0, 0.0]])
    assert expected_log_likelihood(V, W0, UNIF2) == -math.inf
    # point-mass input: a single-row sum
    pm = Distribution([0.0, 1.0])
    got = expected_log_likelihood(BSC11, BSC11, pm)
    assert got == pytest.approx(float((BSC11.rows[1] * np.log(BSC11.rows[1])).sum()))


def test_mean_information_density():
    joint = JointDistribution.from_input_and_channel(UNIF2, BSC11)
    # reduces to mutual information at Q = ref
    assert mean_information_density(joint, joint) == pytest.approx(
        mutual_information(UNIF2, BSC11), abs=1e-12
    )
    # product reference: identically zero
    prod = JointDistribution(np.outer([0.4, 0.6], [0.3, 0.7]))
    any_q = JointDistribution([[0.1, 0.2], [0.3, 0.4]])
    assert mean_information_density(any_q, prod) == pytest.approx(0.0, abs=1e-14)
    # frozen single-term evaluation at a point mass
    pm = JointDistribution([[1.0, 0.0], [0.0, 0.0]])
    assert mean_information_density(pm, joint) == pytest.approx(
        0.5766133643039938, abs=1e-14
    )
    # mass outside the reference support
    outside = JointDistribution([[0.0, 1.0], [0.0, 0.0]])
    flat = JointDistribution([[0.5, 0.0], [0.5, 0.0]])
    assert mean_information_density(outside, flat) == -math.inf


def test_mean_information_density_matches_mi_random():
    rng = np.random.default_rng(5)
    for _ in range(50):
        P, W = random_pair(rng, 3, 2)
        joint = JointDistribution.from_input_and_channel(P, W)
        assert mean_information_density(joint, joint) == pytest.approx(
            mutual_information(P, W), abs=1e-12
        )


def test_compose_prefix():
    ident = Channel.identity(2)
    out = compose_prefix(ident, BSC11)
    assert np.array_equal(out.rows, BSC11.rows)  # bit-for-bit
    # prefix collapsing onto one input: all rows equal that row of W
    collapse = Channel([[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
    out = compose_prefix(collapse, BSC11)
    assert out.input_size == 3
    assert all(np.array_equal(out.rows[u], BSC11.rows[0]) for u in range(3))
    with pytest.raises(AlphabetMismatchError):
        compose_prefix(Channel([[0.5, 0.3, 0.2]]), BSC11)
    # general pair agrees with a plain matrix product
    rng = np.random.default_rng(6)
    pre = rng.uniform(0.1, 1.0, (2, 3))
    pre /= pre.sum(axis=1, keepdims=True)
    w = rng.uniform(0.1, 1.0, (3, 2))
    w /= w.sum(axis=1, keepdims=True)
    got = compose_prefix(Channel(pre), Channel(w)).rows
    assert np.abs(got - pre @ w).max() < 1e-15


def test_channel_output_coverage():
    dead_col = Channel([[1.0, 0.0], [1.0, 0.0]])
    with pytest.raises(ValueError):
        dead_col.require_output_coverage()
    BSC11.require_output_coverage()
