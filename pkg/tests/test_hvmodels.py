import math

import numpy as np
import pytest

from oracles import born_probability, random_density
from quantumness import errors
from quantumness.criterion import commuting_valid_pair, evaluate_criterion, optimal_violation_state, random_valid_pair
from quantumness.hvmodels import (
    HiddenVariableModel,
    audit_valuations,
    build_pair_model,
    build_triple_model,
    joint_eigenbasis_valuation,
    model_moment,
    negative_difference_probability,
    sample,
)
from quantumness.opalg import (
    DensityMatrix,
    basis_state,
    expectation,
    make_hermitian,
    make_pure_state,
    maximally_mixed,
    op_square,
    op_sub,
)

FIXTURE = (0.391, 0.920)


@pytest.fixture
def fixture_state():
    with pytest.warns(UserWarning):
        return make_pure_state(FIXTURE)


def test_pair_model_fixture_state(pair_star, fixture_state):
    model = build_pair_model(*pair_star, fixture_state)
    alpha = model.alphabets[0]
    np.testing.assert_array_equal(alpha.values, [0.0, 1.0])
    p1 = born_probability(FIXTURE, (1, 0))
    assert alpha.probabilities[1] == pytest.approx(p1, abs=1e-15)
    assert alpha.probabilities[1] == pytest.approx(0.15297, abs=1e-4)
    assert alpha.probabilities[0] == pytest.approx(0.84703, abs=1e-4)
    assert model.factorized
    np.testing.assert_array_equal(model.joint, np.outer(alpha.probabilities, model.alphabets[1].probabilities))


def test_pair_model_identical_observables_stays_product(pair_star, fixture_state):
    a, _ = pair_star
    model = build_pair_model(a, a, fixture_state)
    np.testing.assert_array_equal(model.alphabets[0].values, model.alphabets[1].values)
    # off-diagonal cells carry weight: the product ignores that A and A coincide
    assert model.joint[0, 1] > 0.1


def test_pair_model_maximally_mixed(pair_star):
    model = build_pair_model(*pair_star, maximally_mixed(2))
    np.testing.assert_allclose(model.alphabets[0].probabilities, [0.5, 0.5], atol=1e-15)


def test_degenerate_eigenvalues_merge():
    a = make_hermitian(np.diag([1.0, 1.0, 2.0]))
    b = make_hermitian(np.diag([1.0, 2.0, 3.0]))
    model = build_pair_model(a, b, maximally_mixed(3))
    np.testing.assert_array_equal(model.alphabets[0].values, [1.0, 2.0])
    np.testing.assert_allclose(model.alphabets[0].probabilities, [2 / 3, 1 / 3], atol=1e-15)


def test_triple_model_c_alphabet(pair_star):
    rho, _ = optimal_violation_state(*pair_star)
    model = build_triple_model(*pair_star, rho)
    assert model.tags == ("A", "B", "C")
    np.testing.assert_allclose(model.alphabets[2].values, [0.0, 1.0], atol=1e-15)
    assert model.joint.shape == (2, 2, 2)


def test_triple_model_rejects_invalid():
    with pytest.raises(errors.InvalidTriple):
        build_triple_model(make_hermitian(np.eye(2)), make_hermitian(np.eye(2) / 2), maximally_mixed(2))


def test_model_moments_fixture_state(pair_star, fixture_state):
    a, b = pair_star
    model = build_pair_model(a, b, fixture_state)
    assert model_moment(model, "A", 1) == pytest.approx(expectation(fixture_state, a), abs=1e-12)
    assert model_moment(model, "A", 2) == model_moment(model, "A", 1)
    assert model_moment(model, "B", 2) == pytest.approx(expectation(fixture_state, op_square(b)), abs=1e-12)
    with pytest.raises(errors.UnknownTag):
        model_moment(model, "C", 1)


def test_moment_reproduction_random(rng):
    for s in range(60):
        dim = 1 + s % 8
        a, b = random_valid_pair(dim, s)
        rho = DensityMatrix(random_density(rng, dim, rank=int(rng.integers(1, dim + 1))))
        obs = {"A": a, "B": b, "C": op_sub(b, a)}
        for model in (build_pair_model(a, b, rho), build_triple_model(a, b, rho)):
            for tag in model.tags:
                for p in (1, 2):
                    x = obs[tag] if p == 1 else op_square(obs[tag])
                    assert abs(model_moment(model, tag, p) - expectation(rho, x)) <= 1e-12


def test_violating_pair_model_is_a_genuine_distribution(pair_star):
    a, b = pair_star
    rho, margin = optimal_violation_state(a, b)
    model = build_pair_model(a, b, rho)
    assert np.all(model.joint >= 0)
    gap = model_moment(model, "A", 2) - model_moment(model, "B", 2)
    assert gap == pytest.approx(margin, abs=1e-12)
    assert model_moment(model, "A", 1) <= model_moment(model, "B", 1)


def _support_has_a_above_b(model):
    diff = model.values_grid("A") - model.values_grid("B")
    return bool(np.any((diff > 0) & (model.joint > 0)))


def test_support_lemma(pair_star):
    rho, _ = optimal_violation_state(*pair_star)
    assert _support_has_a_above_b(build_pair_model(*pair_star, rho))
    found = 0
    for s in range(100):
        a, b = random_valid_pair(2 + s % 3, s)
        rho, _ = optimal_violation_state(a, b)
        if evaluate_criterion(a, b, rho).violated:
            found += 1
            assert _support_has_a_above_b(build_pair_model(a, b, rho))
    assert found >= 10


def _raw_moment(model, tag, k):
    return float(np.dot(model.marginal(tag), model.alphabets[model.axis(tag)].values ** k))


def test_sample_statistics(pair_star, fixture_state):
    model = build_pair_model(*pair_star, fixture_state)
    n = 100_000
    rep = sample(model, n, seed=3)
    for tag in ("A", "B"):
        for p in (1, 2):
            exact = _raw_moment(model, tag, p)
            var = _raw_moment(model, tag, 2 * p) - exact**2
            assert abs(rep.moments[tag][p] - exact) <= 5 * math.sqrt(var / n)
    assert rep.counts.sum() == n


def test_sample_deterministic_single_outcome():
    a, b = commuting_valid_pair(2, 4)
    v = np.linalg.eigh(a.matrix)[1][:, 0]
    model = build_pair_model(a, b, DensityMatrix(np.outer(v, v.conj())))
    support = np.flatnonzero(model.joint.ravel() > 1e-12)
    assert len(support) == 1
    rep = sample(model, 1, seed=0)
    assert rep.counts.sum() == 1
    assert rep.outcomes[0] == support[0]


def test_sample_reproducible_and_worker_independent(pair_star):
    rho, _ = optimal_violation_state(*pair_star)
    model = build_triple_model(*pair_star, rho)
    r1 = sample(model, 200_001, seed=9)
    r2 = sample(model, 200_001, seed=9)
    r3 = sample(model, 200_001, seed=9, workers=3)
    np.testing.assert_array_equal(r1.counts, r2.counts)
    np.testing.assert_array_equal(r1.outcomes, r3.outcomes)
    assert not np.array_equal(sample(model, 1000, seed=10).outcomes, r1.outcomes[:1000])


def test_sample_never_hits_zero_probability_cells(pair_star):
    model = build_pair_model(*pair_star, basis_state(2, 0))
    rep = sample(model, 50_000, seed=1)
    assert np.all(rep.counts[model.joint == 0] == 0)


def test_valuation_stream_matches_counts(pair_star):
    rho, _ = optimal_violation_state(*pair_star)
    model = build_triple_model(*pair_star, rho)
    rep = sample(model, 500, seed=2)
    stream = list(rep.valuation_stream(model))
    assert len(stream) == 500
    assert sum(v["A"] for v in stream) == pytest.approx(rep.moments["A"][1] * 500)


def test_audit_canonical(pair_star):
    rho, _ = optimal_violation_state(*pair_star)
    model = build_triple_model(*pair_star, rho)
    audit = audit_valuations(model, 100_000, seed=5)
    assert audit.min_vC >= 0
    assert audit.frac_negative_diff > 0
    exact = negative_difference_probability(model)
    assert abs(audit.frac_negative_diff - exact) <= 5 * math.sqrt(exact * (1 - exact) / 100_000)
    assert 0 <= audit.frac_sum_rule_holds <= 1


def test_audit_commuting_pair(rng):
    a, b = commuting_valid_pair(3, 2)
    rho = DensityMatrix(random_density(rng, 3))
    audit = audit_valuations(build_triple_model(a, b, rho), 20_000, seed=1)
    assert audit.min_vC >= 0


def test_audit_zero_difference(rng):
    a, _ = random_valid_pair(2, 3)
    rho = DensityMatrix(random_density(rng, 2))
    model = build_triple_model(a, a, rho)
    rep = sample(model, 20_000, seed=4)
    audit = audit_valuations(model, 20_000, seed=4)
    same = sum(
        c for (i, j, _), c in np.ndenumerate(rep.counts)
        if model.alphabets[0].values[i] == model.alphabets[1].values[j]
    )
    assert audit.frac_sum_rule_holds == same / 20_000
    assert audit.min_vC == pytest.approx(0.0, abs=1e-15)


def test_audit_needs_triple(pair_star):
    with pytest.raises(errors.ValidationError):
        audit_valuations(build_pair_model(*pair_star, maximally_mixed(2)), 10, 0)


def test_joint_eigenbasis_diagonal():
    vals = joint_eigenbasis_valuation(make_hermitian(np.diag([1.0, 2.0])), make_hermitian(np.diag([2.0, 3.0])))
    got = sorted((v.assignments["A"], v.assignments["B"], v.assignments["B-A"]) for v in vals)
    assert got == [(1.0, 2.0, 1.0), (2.0, 3.0, 1.0)]
    assert all(v.sum_rule_residual == 0 for v in vals)


def test_joint_eigenbasis_commuting_random():
    for s in range(10):
        a, b = commuting_valid_pair(3, s)
        vals = joint_eigenbasis_valuation(a, b)
        assert len(vals) == 3
        assert all(v.sum_rule_residual < 1e-9 for v in vals)
        eig_a = np.linalg.eigvalsh(a.matrix)
        for v in vals:
            assert np.min(np.abs(eig_a - v.assignments["A"])) < 1e-9


def test_joint_eigenbasis_degenerate_a():
    a = make_hermitian(np.diag([1.0, 1.0]))
    b = make_hermitian([[2.0, 0.5], [0.5, 2.0]])
    vals = joint_eigenbasis_valuation(a, b)
    assert sorted(round(v.assignments["B"], 12) for v in vals) == [1.5, 2.5]


def test_joint_eigenbasis_not_commuting(pair_star):
    with pytest.raises(errors.NotCommuting):
        joint_eigenbasis_valuation(*pair_star)


def test_model_json_round_trip(pair_star):
    rho, _ = optimal_violation_state(*pair_star)
    model = build_triple_model(*pair_star, rho)
    back = HiddenVariableModel.from_dict(model.to_dict())
    np.testing.assert_array_equal(back.joint, model.joint)
    assert back.tags == model.tags
    np.testing.assert_allclose(back.rho.matrix, rho.matrix, atol=1e-15)


def test_model_rejects_bad_table(pair_star):
    d = build_pair_model(*pair_star, maximally_mixed(2)).to_dict()
    d["joint"] = [[0.5, 0.5], [0.5, 0.5]]
    with pytest.raises(errors.ValidationError):
        HiddenVariableModel.from_dict(d)
