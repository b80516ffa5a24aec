"""Tests for model generation, influence sampling, and serialization."""

import math

import numpy as np
import pytest
from numpy.random import default_rng
from scipy import integrate

from eggfinder._rng import as_seed_sequence, child
from eggfinder.exceptions import TooManyEdges
from eggfinder.synth import (
    CausalModel,
    Dag,
    ExternalInfluenceSpec,
    assign_coefficients,
    generate,
    load_model,
    model_covariance,
    random_dag,
    random_model,
    sample_dataset,
    sample_external_influence,
    save_model,
    theoretical_term_std,
)

SUB_RANGE = (0.5, 0.8)
SUPER_RANGE = (1.2, 2.0)


def in_union(q: float) -> bool:
    return SUB_RANGE[0] <= q <= SUB_RANGE[1] or SUPER_RANGE[0] <= q <= SUPER_RANGE[1]


def absolute_moment(power: float) -> float:
    # E|z|^m for standard normal z
    return 2.0 ** (power / 2.0) * math.gamma((power + 1.0) / 2.0) / math.sqrt(math.pi)


class TestTermScaling:
    def test_matches_quadrature(self):
        for q in (0.5, 0.8, 1.2, 2.0):
            expected, _ = integrate.quad(
                lambda z: (abs(z) ** (2.0 * q))
                * math.exp(-0.5 * z * z)
                / math.sqrt(2.0 * math.pi),
                -16,
                16,
            )
            assert theoretical_term_std(q) ** 2 == pytest.approx(expected, abs=1e-10)

    def test_frozen_moment_values(self):
        assert theoretical_term_std(0.5) ** 2 == pytest.approx(0.7978845608028655, rel=1e-14)
        assert theoretical_term_std(0.8) ** 2 == pytest.approx(0.8815954444309455, rel=1e-14)
        assert theoretical_term_std(1.2) ** 2 == pytest.approx(1.1777478067278655, rel=1e-14)
        assert theoretical_term_std(2.0) ** 2 == pytest.approx(3.0, rel=1e-14)

    def test_identity_at_q_one(self):
        assert theoretical_term_std(1.0) == pytest.approx(1.0, rel=1e-14)


class TestInfluenceSampling:
    def test_q_one_is_gaussian_with_target_std(self):
        spec = ExternalInfluenceSpec(kind="error", exponents=(1.0,), target_std=1.3)
        s = sample_external_influence(spec, 200_000, seed=30)
        assert abs(np.std(s, ddof=1) - 1.3) < 0.01
        assert abs(np.mean(s)) < 0.02

    def test_q_two_excess_kurtosis(self):
        spec = ExternalInfluenceSpec(kind="exogenous", exponents=(2.0,), target_std=1.0)
        s = sample_external_influence(spec, 1_000_000, seed=5)
        s = s / np.std(s, ddof=1)
        excess = np.mean(s**4) - 3.0
        assert abs(excess - (105.0 / 9.0 - 3.0)) < 0.5

    def test_sum_attenuates_kurtosis(self):
        # kurtosis of an h-term unit-variance sum decays like (mean term
        # excess) / h
        rng = default_rng(99)
        exponents = []
        for _ in range(50):
            if rng.random() < 0.5:
                exponents.append(float(rng.uniform(*SUB_RANGE)))
            else:
                exponents.append(float(rng.uniform(*SUPER_RANGE)))
        spec = ExternalInfluenceSpec(kind="error", exponents=tuple(exponents), target_std=1.0)
        s = sample_external_influence(spec, 1_000_000, seed=8)
        s = s / np.std(s, ddof=1)
        observed = float(np.mean(s**4) - 3.0)
        term_excess = [
            absolute_moment(4.0 * q) / absolute_moment(2.0 * q) ** 2 - 3.0 for q in exponents
        ]
        predicted = sum(term_excess) / 50.0**2
        assert abs(observed - predicted) < 0.15

    def test_deterministic(self):
        spec = ExternalInfluenceSpec(kind="error", exponents=(1.5, 0.6), target_std=0.7)
        a = sample_external_influence(spec, 100, seed=31)
        b = sample_external_influence(spec, 100, seed=31)
        np.testing.assert_array_equal(a, b)

    def test_target_std_respected(self):
        spec = ExternalInfluenceSpec(kind="error", exponents=(0.6,) * 10, target_std=0.5)
        s = sample_external_influence(spec, 400_000, seed=32)
        assert abs(np.std(s, ddof=1) - 0.5) < 0.01


class TestSpecValidation:
    def test_exogenous_needs_single_exponent(self):
        with pytest.raises(ValueError):
            ExternalInfluenceSpec(kind="exogenous", exponents=(0.6, 0.7), target_std=1.0)

    def test_positive_target_std(self):
        with pytest.raises(ValueError):
            ExternalInfluenceSpec(kind="error", exponents=(0.6,), target_std=0.0)

    def test_positive_exponents(self):
        with pytest.raises(ValueError):
            ExternalInfluenceSpec(kind="error", exponents=(-1.0,), target_std=1.0)

    def test_h_property(self):
        spec = ExternalInfluenceSpec(kind="error", exponents=(0.6, 1.5, 2.0), target_std=1.0)
        assert spec.h == 3


class TestRandomDag:
    def test_empty_graph(self):
        dag = random_dag(3, 0, seed=40)
        assert dag.edges == frozenset()

    def test_triangle_has_one_source(self):
        dag = random_dag(3, 3, seed=41)
        children = {child_ for _, child_ in dag.edges}
        assert len(dag.edges) == 3
        assert len({0, 1, 2} - children) == 1

    def test_edges_respect_topo_order(self):
        dag = random_dag(20, 60, seed=42)
        position = {v: k for k, v in enumerate(dag.topo_order)}
        assert len(dag.edges) == 60
        for parent, child_ in dag.edges:
            assert position[parent] < position[child_]

    def test_edges_are_distinct_pairs(self):
        dag = random_dag(10, 45, seed=43)
        assert len(dag.edges) == 45  # the complete DAG on 10 nodes

    def test_too_many_edges(self):
        with pytest.raises(TooManyEdges):
            random_dag(4, 7, seed=44)

    def test_deterministic(self):
        a = random_dag(15, 30, seed=45)
        b = random_dag(15, 30, seed=45)
        assert a.topo_order == b.topo_order and a.edges == b.edges

    def test_exogenous_count_band_at_scale(self):
        # with p=1000 and 1000 uniform edges the expected source count is
        # near 430; the band is generous
        for seed in (1, 2, 3):
            dag = random_dag(1000, 1000, seed=seed)
            children = {child_ for _, child_ in dag.edges}
            sources = 1000 - len(children)
            assert 380 <= sources <= 480


class TestAssignCoefficients:
    def test_single_parent_chain_scaling(self):
        dag = Dag(p=2, topo_order=(0, 1), edges=frozenset({(0, 1)}))
        model = assign_coefficients(dag, h=1, seed=46)
        target = model.parent_std_targets[1]
        assert 0.5 <= target <= 1.5
        std_x1 = model.influences[0].target_std
        assert abs(model.b_matrix[1, 0]) * std_x1 == pytest.approx(target, rel=1e-12)

    def test_empty_graph_zero_matrix(self):
        dag = Dag(p=4, topo_order=(2, 0, 3, 1), edges=frozenset())
        model = assign_coefficients(dag, h=3, seed=47)
        np.testing.assert_array_equal(model.b_matrix, np.zeros((4, 4)))
        assert model.exogenous_set == {0, 1, 2, 3}

    def test_parent_contribution_matches_targets(self):
        model = random_model(12, 25, h=4, seed=48)
        sigma = model_covariance(model)
        for i in range(12):
            row = model.b_matrix[i]
            if not row.any():
                assert model.parent_std_targets[i] is None
                continue
            contribution = math.sqrt(float(row @ sigma @ row))
            assert contribution == pytest.approx(model.parent_std_targets[i], abs=1e-9)

    def test_magnitudes_bounded(self):
        model = random_model(15, 40, h=2, seed=49)
        nonzero = np.abs(model.b_matrix[model.b_matrix != 0.0])
        # rescaling multiplies each row by a shared positive factor, so
        # magnitude ratios within a row stay within the provisional 10x span
        for i in range(15):
            row = np.abs(model.b_matrix[i][model.b_matrix[i] != 0.0])
            if row.size > 1:
                assert row.max() / row.min() <= 10.0 + 1e-9
        assert nonzero.size == 40

    def test_h_does_not_change_structure_or_coefficients(self):
        dag = random_dag(10, 20, seed=50)
        low = assign_coefficients(dag, h=1, seed=51)
        high = assign_coefficients(dag, h=50, seed=51)
        np.testing.assert_array_equal(low.b_matrix, high.b_matrix)
        assert low.parent_std_targets == high.parent_std_targets
        assert [s.target_std for s in low.influences] == [
            s.target_std for s in high.influences
        ]
        assert all(s.h == 50 for i, s in enumerate(high.influences) if i not in high.exogenous_set)


class TestModelValidation:
    def test_diagonal_must_be_zero(self):
        b = np.eye(2)
        with pytest.raises(ValueError):
            CausalModel(
                p=2,
                b_matrix=b,
                topo_order=(0, 1),
                influences=(
                    ExternalInfluenceSpec(kind="exogenous", exponents=(0.6,), target_std=1.0),
                    ExternalInfluenceSpec(kind="error", exponents=(1.5,), target_std=1.0),
                ),
            )

    def test_acyclicity_enforced(self):
        b = np.zeros((2, 2))
        b[0, 1] = 0.5  # against the declared order
        with pytest.raises(ValueError):
            CausalModel(
                p=2,
                b_matrix=b,
                topo_order=(0, 1),
                influences=(
                    ExternalInfluenceSpec(kind="exogenous", exponents=(0.6,), target_std=1.0),
                    ExternalInfluenceSpec(kind="error", exponents=(1.5,), target_std=1.0),
                ),
            )

    def test_exogenous_set_is_zero_rows(self):
        model = random_model(8, 12, h=3, seed=52)
        zero_rows = {i for i in range(8) if not model.b_matrix[i].any()}
        assert model.exogenous_set == zero_rows
        assert model.exogenous_set
        for i in range(8):
            expected_kind = "exogenous" if i in zero_rows else "error"
            assert model.influences[i].kind == expected_kind


class TestGeneratedModels:
    def test_exponents_come_from_the_two_bands(self):
        model = random_model(30, 60, h=5, seed=53)
        sub = super_ = 0
        for spec in model.influences:
            for q in spec.exponents:
                assert in_union(q)
                if q <= SUB_RANGE[1]:
                    sub += 1
                else:
                    super_ += 1
        assert sub > 0 and super_ > 0

    def test_target_stds_in_band(self):
        model = random_model(20, 35, h=2, seed=54)
        for spec in model.influences:
            assert 0.5 <= spec.target_std <= 1.5
        for target in model.parent_std_targets:
            assert target is None or 0.5 <= target <= 1.5

    def test_deterministic_and_h_stable(self):
        a = random_model(10, 15, h=1, seed=55)
        b = random_model(10, 15, h=1, seed=55)
        high = random_model(10, 15, h=40, seed=55)
        np.testing.assert_array_equal(a.b_matrix, b.b_matrix)
        np.testing.assert_array_equal(a.b_matrix, high.b_matrix)
        assert a.topo_order == b.topo_order == high.topo_order


class TestSampling:
    def test_no_edges_passes_influences_through(self):
        model = random_model(4, 0, h=3, seed=56)
        data = sample_dataset(model, n=200, seed=57)
        root = as_seed_sequence(57)
        for i in range(4):
            direct = sample_external_influence(model.influences[i], 200, child(root, i))
            np.testing.assert_array_equal(data.values[:, i], direct)

    def test_exogenous_columns_bitwise_equal_their_draws(self):
        model = random_model(9, 14, h=4, seed=58)
        data = sample_dataset(model, n=300, seed=59)
        root = as_seed_sequence(59)
        for i in sorted(model.exogenous_set):
            direct = sample_external_influence(model.influences[i], 300, child(root, i))
            np.testing.assert_array_equal(data.values[:, i], direct)

    def test_forward_substitution_matches_dense_solve(self):
        for seed in (60, 61):
            model = random_model(10, 20, h=3, seed=seed)
            data = sample_dataset(model, n=50, seed=seed + 1000)
            eye_minus_b = np.eye(10) - model.b_matrix
            influences = data.values @ eye_minus_b.T
            solved = np.linalg.solve(eye_minus_b, influences.T).T
            np.testing.assert_allclose(solved, data.values, atol=1e-10)

    def test_deterministic(self):
        model = random_model(6, 9, h=2, seed=62)
        a = sample_dataset(model, n=100, seed=63)
        b = sample_dataset(model, n=100, seed=63)
        np.testing.assert_array_equal(a.values, b.values)

    def test_names_and_shape(self):
        model = random_model(5, 6, h=1, seed=64)
        data = sample_dataset(model, n=40, seed=65)
        assert data.values.shape == (40, 5)
        assert data.variable_names == ("x1", "x2", "x3", "x4", "x5")


class TestCovariance:
    def worked_model(self):
        # x1 = e1; x2 = 1.5 x1 + e2; x3 = 0.8 x1 - 1.3 x2 + e3, unit Gaussian e
        b = np.zeros((3, 3))
        b[1, 0] = 1.5
        b[2, 0] = 0.8
        b[2, 1] = -1.3
        specs = tuple(
            ExternalInfluenceSpec(
                kind="exogenous" if i == 0 else "error", exponents=(1.0,), target_std=1.0
            )
            for i in range(3)
        )
        return CausalModel(p=3, b_matrix=b, topo_order=(0, 1, 2), influences=specs)

    def test_three_variable_worked_example(self):
        sigma = model_covariance(self.worked_model())
        assert sigma[0, 0] == pytest.approx(1.0, rel=1e-14)
        assert sigma[1, 1] == pytest.approx(3.25, rel=1e-12)
        assert sigma[2, 2] == pytest.approx(4.0125, rel=1e-12)

    def test_matches_sample_covariance(self):
        for model_seed, data_seed in ((12, 1012), (13, 1013)):
            model = random_model(10, 15, h=3, seed=model_seed)
            sigma = model_covariance(model)
            data = sample_dataset(model, n=100_000, seed=data_seed)
            sample_sigma = np.cov(data.values, rowvar=False)
            rel = np.linalg.norm(sample_sigma - sigma) / np.linalg.norm(sigma)
            assert rel < 0.05


class TestSerialization:
    def test_round_trip_bitwise(self, tmp_path):
        model = random_model(12, 30, h=6, seed=66)
        path = tmp_path / "model.json"
        save_model(model, path)
        back = load_model(path)
        np.testing.assert_array_equal(back.b_matrix, model.b_matrix)
        assert back.topo_order == model.topo_order
        assert back.influences == model.influences
        assert back.parent_std_targets == model.parent_std_targets
        assert back.seed == model.seed

    def test_reload_samples_identically(self, tmp_path):
        model = random_model(6, 10, h=2, seed=67)
        path = tmp_path / "model.json"
        save_model(model, path)
        a = sample_dataset(model, n=50, seed=68)
        b = sample_dataset(load_model(path), n=50, seed=68)
        np.testing.assert_array_equal(a.values, b.values)


class TestGenerate:
    def test_returns_model_and_data(self):
        model, data = generate(p=7, edge_count=9, h=3, n=120, seed=69)
        assert model.p == 7
        assert data.values.shape == (120, 7)
        assert model.seed == 69

    def test_same_seed_identical(self):
        m1, d1 = generate(p=5, edge_count=6, h=2, n=80, seed=70)
        m2, d2 = generate(p=5, edge_count=6, h=2, n=80, seed=70)
        np.testing.assert_array_equal(m1.b_matrix, m2.b_matrix)
        np.testing.assert_array_equal(d1.values, d2.values)

    def test_n_does_not_change_model(self):
        m1, _ = generate(p=5, edge_count=6, h=2, n=80, seed=71)
        m2, _ = generate(p=5, edge_count=6, h=2, n=999, seed=71)
        np.testing.assert_array_equal(m1.b_matrix, m2.b_matrix)
