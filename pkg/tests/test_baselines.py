import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import ref_enumerate, ref_true_objective
from eeassoc.association import Association, MalformedAssociation
from eeassoc.baselines import (AllInfeasible, InstanceTooLarge, brute_force_optimum,
                               evaluate_objective, max_rate_association, max_sinr_association)
from eeassoc.link import LinkTable
from eeassoc.solver import solve


def table(sinr, rate, alpha, tau=0.0, is_macro=None):
    return LinkTable.from_arrays(sinr, rate, alpha, tau, is_macro)


def test_objective_one_bs_two_users():
    lt = table([[1.0, 1.0]], [[2.0, 4.0]], [2.0])
    rep = evaluate_objective(Association.from_choice([0, 0], 1), lt)
    np.testing.assert_allclose(rep.per_user_ee, [0.5, 1.0])
    assert rep.sum_ee == pytest.approx(1.5)
    assert rep.feasible and rep.violations == ()


def test_objective_single_user():
    lt = table([[1.0], [2.0]], [[6.0], [3.0]], [3.0, 1.5])
    assert evaluate_objective(Association.from_choice([1], 2), lt).sum_ee == pytest.approx(2.0)


def test_objective_feasibility():
    lt = table([[0.5, 2.0]], [[1.0, 1.0]], [1.0], tau=[1.0, 1.0])
    rep = evaluate_objective(Association.from_choice([0, 0], 1), lt)
    assert not rep.feasible and rep.violations == (0,)


def test_malformed_association():
    with pytest.raises(MalformedAssociation):
        Association(np.array([[1, 1], [0, 1]]))
    with pytest.raises(MalformedAssociation):
        Association(np.array([[0.5], [0.5]]))
    lt = table([[1.0, 1.0]], [[1.0, 1.0]], [1.0])
    with pytest.raises(MalformedAssociation):
        evaluate_objective(Association.from_choice([0, 1, 1], 2), lt)


def test_max_sinr():
    lt = table([[3.0, 2.0, 4.0], [5.0, 2.0, 1.0]], np.ones((2, 3)), [1.0, 1.0])
    np.testing.assert_array_equal(max_sinr_association(lt).choice, [1, 0, 0])
    one = table([[1.0, 9.0]], [[1.0, 1.0]], [1.0])
    np.testing.assert_array_equal(max_sinr_association(one).choice, [0, 0])


def test_max_rate_prefers_macro_streams():
    s = np.array([[3.0], [3.0]])
    r = 1e6 * np.array([[10.0], [1.0]]) * np.log2(1 + s)
    lt = table(s, r, [300.0, 15.0], is_macro=[True, False])
    assert max_rate_association(lt).choice[0] == 0
    # and ties resolve to the lowest index
    assert max_sinr_association(lt).choice[0] == 0


def test_max_rate_equals_max_sinr_for_picos():
    rng = np.random.default_rng(0)
    s = rng.uniform(0, 10, (4, 9))
    lt = table(s, np.log2(1 + s), np.full(4, 15.0))
    assert max_rate_association(lt) == max_sinr_association(lt)


def test_brute_force_single_bs():
    lt = table([[1.0, 1.0]], [[2.0, 4.0]], [2.0])
    assoc, rep = brute_force_optimum(lt)
    np.testing.assert_array_equal(assoc.choice, [0, 0])
    assert rep.sum_ee == pytest.approx(1.5)


def test_brute_force_two_by_two_by_hand():
    # (0,0): 2.5  (0,1): 5.5  (1,0): 2.0  (1,1): 1.25
    lt = table(np.ones((2, 2)), [[4.0, 1.0], [2.0, 3.0]], [1.0, 2.0])
    assoc, rep = brute_force_optimum(lt)
    np.testing.assert_array_equal(assoc.choice, [0, 1])
    assert rep.sum_ee == pytest.approx(5.5)


def test_brute_force_tie_is_lexicographic_first():
    lt = table(np.ones((2, 2)), np.ones((2, 2)), [1.0, 1.0])
    assoc, rep = brute_force_optimum(lt)
    np.testing.assert_array_equal(assoc.choice, [0, 1])
    assert rep.sum_ee == pytest.approx(2.0)


def test_brute_force_constraints():
    lt = table([[1.0, 1.0], [0.1, 5.0]], [[1.0, 1.0], [9.0, 1.0]], [1.0, 1.0], tau=[0.5, 0.5])
    assoc, _ = brute_force_optimum(lt, respect_constraints=True)
    assert assoc.choice[0] == 0  # BS 1 would be better for user 0 but violates its threshold
    assoc, _ = brute_force_optimum(lt, respect_constraints=False)
    assert assoc.choice[0] == 1
    huge = table([[1.0, 1.0], [0.1, 5.0]], np.ones((2, 2)), [1.0, 1.0], tau=1e9)
    with pytest.raises(AllInfeasible):
        brute_force_optimum(huge, respect_constraints=True)


def test_brute_force_guard():
    lt = table(np.ones((4, 11)), np.ones((4, 11)), np.ones(4))
    with pytest.raises(InstanceTooLarge):
        brute_force_optimum(lt)


def random_table(seed, N, K):
    rng = np.random.default_rng(seed)
    s = 10 ** rng.uniform(-1, 3, (N, K))
    macro = np.arange(N) < max(1, N // 2)
    r = 1e7 * np.where(macro, 10, 1)[:, None] * np.log2(1 + s)
    alpha = np.where(macro, 311.0, 15.6) * rng.uniform(0.8, 1.2, N)
    return table(s, r, alpha, is_macro=macro)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 5))
def test_brute_force_matches_reference_enumeration(seed, N, K):
    lt = random_table(seed, N, K)
    assoc, rep = brute_force_optimum(lt, respect_constraints=False)
    ref_choice, ref_best = ref_enumerate(lt, ref_true_objective)
    assert rep.sum_ee == pytest.approx(ref_best, rel=1e-12)
    assert tuple(assoc.choice) == ref_choice


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 4), st.integers(1, 5))
def test_oracle_dominates_every_policy(seed, N, K):
    lt = random_table(seed, N, K)
    _, best = brute_force_optimum(lt, respect_constraints=False)
    for value in (evaluate_objective(max_sinr_association(lt), lt).sum_ee,
                  evaluate_objective(max_rate_association(lt), lt).sum_ee,
                  solve(lt).sum_ee):
        assert value <= best.sum_ee * (1 + 1e-9)


@given(st.integers(0, 10**6), st.permutations(range(5)))
def test_objective_permutation_equivariant(seed, perm):
    lt = random_table(seed, 3, 5)
    choice = np.random.default_rng(seed).integers(0, 3, 5)
    perm = np.array(perm)
    a = evaluate_objective(Association.from_choice(choice, 3), lt)
    b = evaluate_objective(Association.from_choice(choice[perm], 3), lt.permute_users(perm))
    assert b.sum_ee == pytest.approx(a.sum_ee, rel=1e-12)
    np.testing.assert_allclose(b.per_user_ee, a.per_user_ee[perm], rtol=1e-12)


@given(st.integers(0, 10**6))
def test_joining_a_bs_dilutes_its_incumbents(seed):
    lt = random_table(seed, 3, 6)
    choice = np.random.default_rng(seed).integers(0, 3, 6)
    before = evaluate_objective(Association.from_choice(choice, 3), lt)
    mover = 5
    target = (choice[mover] + 1) % 3
    moved = choice.copy()
    moved[mover] = target
    after = evaluate_objective(Association.from_choice(moved, 3), lt)
    incumbents = [k for k in range(5) if choice[k] == target]
    for k in incumbents:
        assert after.effective_rate[k] <= before.effective_rate[k]
