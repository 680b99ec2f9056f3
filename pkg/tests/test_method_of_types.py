import math

import numpy as np
import pytest

from secrecy_exponents.ensembles import (
    ConstantCompositionEnsemble,
    IIDEnsemble,
    log_prob_x_type_class,
    success_probability,
)
from secrecy_exponents.method_of_types import (
    EnumerationBudgetError,
    JointNType,
    NType,
    enumerate_joint_ntypes,
    enumerate_ntypes,
    log_type_class_size,
    quantize_to_ntype,
)
from secrecy_exponents.prob import Distribution


def test_enumerate_ntypes_hand_cases():
    assert [t.counts for t in enumerate_ntypes(2, 2)] == [(0, 2), (1, 1), (2, 0)]
    assert len(list(enumerate_ntypes(2, 4))) == 5
    assert len(list(enumerate_ntypes(4, 6))) == math.comb(9, 3)  # 84


@pytest.mark.parametrize("k", [1, 2, 3, 4])
@pytest.mark.parametrize("n", [1, 2, 5, 11, 20])
def test_enumerate_ntypes_count(k, n):
    types = list(enumerate_ntypes(k, n))
    assert len(types) == math.comb(n + k - 1, k - 1)
    assert len(set(t.counts for t in types)) == len(types)
    assert all(sum(t.counts) == n for t in types)


def test_enumeration_cap():
    with pytest.raises(EnumerationBudgetError):
        list(enumerate_ntypes(6, 128))


def test_enumerate_joint_ntypes():
    # 2x2 tables with unit margins: the two permutation matrices
    both = list(
        enumerate_joint_ntypes(2, 2, 2, NType((1, 1), 2), NType((1, 1), 2))
    )
    assert sorted(j.counts for j in both) == [((0, 1), (1, 0)), ((1, 0), (0, 1))]
    # unconstrained count: stars and bars over 4 cells
    assert len(list(enumerate_joint_ntypes(2, 2, 2))) == math.comb(5, 3)
    # all mass forced into row 0: reduces to enumerating z-types
    row0 = list(enumerate_joint_ntypes(2, 2, 2, fixed_x_marginal=NType((2, 0), 2)))
    assert [j.counts for j in row0] == [((0, 2), (0, 0)), ((1, 1), (0, 0)), ((2, 0), (0, 0))]
    # marginals consistent on every yield
    for j in enumerate_joint_ntypes(2, 3, 5, fixed_x_marginal=NType((2, 3), 5)):
        assert j.x_marginal().counts == (2, 3)


def test_infeasible_marginals_warn_and_empty():
    with pytest.warns(UserWarning):
        out = list(
            enumerate_joint_ntypes(2, 2, 3, NType((1, 2), 3), NType((1, 1), 2))
        )
    assert out == []


def test_log_type_class_size():
    assert log_type_class_size(NType((2, 2), 4)) == pytest.approx(math.log(6), abs=1e-12)
    assert log_type_class_size(NType((0, 4), 4)) == 0.0
    assert log_type_class_size(NType((3, 2, 1), 6)) == pytest.approx(
        math.log(60), abs=1e-12
    )


@pytest.mark.parametrize("n", [8, 16, 33, 64])
def test_log_type_class_size_vs_exact_integers(n):
    rng = np.random.default_rng(n)
    for _ in range(20):
        cuts = np.sort(rng.integers(0, n + 1, size=2))
        counts = (int(cuts[0]), int(cuts[1] - cuts[0]), int(n - cuts[1]))
        exact = math.factorial(n)
        for c in counts:
            exact //= math.factorial(c)
        got = log_type_class_size(NType(counts, n))
        assert abs(got - math.log(exact)) <= 1e-9 * max(1.0, abs(math.log(exact)))


def test_type_class_partition_of_sequence_space():
    # sum of |T_P| over all n-types is k^n
    for k, n in [(2, 10), (3, 7), (4, 5)]:
        total = sum(math.exp(log_type_class_size(t)) for t in enumerate_ntypes(k, n))
        assert total == pytest.approx(k**n, rel=1e-9)


def test_quantize_to_ntype():
    assert quantize_to_ntype(Distribution([0.3, 0.7]), 10).counts == (3, 7)
    assert quantize_to_ntype(Distribution([1 / 3, 2 / 3]), 4).counts == (1, 3)
    # already an n-type: reproduced exactly
    assert quantize_to_ntype(Distribution([0.25, 0.75]), 4).counts == (1, 3)
    # support preservation bumps a zero-rounded symbol
    q = quantize_to_ntype(Distribution([0.01, 0.495, 0.495]), 8)
    assert q.counts[0] >= 1 and sum(q.counts) == 8
    with pytest.raises(ValueError):
        quantize_to_ntype(Distribution([0.4, 0.3, 0.3]), 2)


def test_quantize_l1_error_bound():
    rng = np.random.default_rng(7)
    for n in [4, 8, 16, 31, 64]:
        for _ in range(50):
            k = int(rng.integers(2, 5))
            if n < k:
                continue
            P = Distribution(rng.dirichlet(np.ones(k)))
            q = quantize_to_ntype(P, n)
            err = np.abs(np.asarray(q.counts) / n - P.masses).sum()
            assert err <= k / n + 1e-12


def test_success_probability_point_mass():
    ens = IIDEnsemble(Distribution([0.5, 0.5]))
    q = JointNType(((1, 0), (0, 0)), 1)
    assert success_probability(q, ens) == pytest.approx(0.5, abs=1e-15)


def test_success_probability_cc_composition_mismatch():
    ens = ConstantCompositionEnsemble(NType((2, 2), 4))
    q = JointNType(((3, 0), (1, 0)), 4)  # x-marginal (3,1) != (2,2)
    assert success_probability(q, ens) == 0.0
    assert log_prob_x_type_class(ens, NType((3, 1), 4)) == -math.inf


@pytest.mark.parametrize("kind", ["iid", "cc"])
@pytest.mark.parametrize("n", [2, 5, 8, 10])
def test_success_probability_completeness(kind, n):
    # over all joint types with the observed z-type, one codeword lands
    # somewhere with probability one
    rng = np.random.default_rng(100 + n)
    if kind == "iid":
        ens = IIDEnsemble(Distribution([0.3, 0.7]))
    else:
        ens = ConstantCompositionEnsemble(NType((n // 2, n - n // 2), n))
    zn = rng.integers(0, 2, size=n)
    z_type = NType((int((zn == 0).sum()), int((zn == 1).sum())), n)
    total = sum(
        success_probability(q, ens)
        for q in enumerate_joint_ntypes(2, 2, n, fixed_z_marginal=z_type)
    )
    assert total == pytest.approx(1.0, abs=1e-10)
