"""Excess-flow relatedness scores, transform, averaging, and thresholding."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skillbasin.ingest import FlowTensor
from skillbasin.relatedness import (
    compute_relatedness,
    mean_sr,
    skill_relatedness_year,
    symmetrize,
    threshold,
    transform_sr,
)


def tensor_from_matrix(matrix, year=2005, index=None) -> FlowTensor:
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    if index is None:
        index = tuple(chr(ord("A") + k) for k in range(n))
    return FlowTensor(index=tuple(index), years=(year,), matrices={year: matrix})


class TestSkillRelatednessYear:
    def test_hand_case_unit_ratio(self):
        # F_AB=2 with marginals F_A=10, F_B=20 and total 100: expected flow
        # 10*20/100 = 2, so the ratio is exactly 1
        f = np.array(
            [
                [0, 2, 0, 0],
                [0, 0, 0, 18],
                [8, 0, 0, 72],
                [0, 0, 0, 0],
            ],
            dtype=float,
        )
        flows = tensor_from_matrix(f)
        marg = flows.marginals(2005)
        assert marg[0] == 10 and marg[1] == 20 and flows.total(2005) == 100
        sr = skill_relatedness_year(flows, 2005)
        assert sr[0, 1] == pytest.approx(1.0, abs=1e-15)

    def test_hand_case_double_ratio(self):
        f = np.array(
            [
                [0, 4, 0, 0],
                [0, 0, 0, 16],
                [6, 0, 0, 74],
                [0, 0, 0, 0],
            ],
            dtype=float,
        )
        flows = tensor_from_matrix(f)
        marg = flows.marginals(2005)
        assert marg[0] == 10 and marg[1] == 20 and flows.total(2005) == 100
        sr = skill_relatedness_year(flows, 2005)
        assert sr[0, 1] == pytest.approx(2.0, abs=1e-15)

    def test_configuration_model_fixed_point(self):
        # flows exactly matching the expectation give a ratio of 1 everywhere
        # (up to the zeroed diagonal); built by iterating the expectation map
        # to its fixed point on a 3-node cycle
        f = np.array([[0, 6, 3], [6, 0, 9], [3, 9, 0]], dtype=float)
        flows = tensor_from_matrix(f)
        marg = flows.marginals(2005)
        expected = np.outer(marg, marg) / flows.total(2005)
        np.fill_diagonal(expected, 0.0)
        flows_fp = tensor_from_matrix(expected)
        sr = skill_relatedness_year(flows_fp, 2005)
        ratio = sr[~np.isnan(sr)]
        # the expectation map is not idempotent in general, so check the
        # defining identity directly instead of exact 1s
        m2 = flows_fp.marginals(2005)
        exp2 = np.outer(m2, m2) / flows_fp.total(2005)
        off = ~np.eye(3, dtype=bool)
        assert np.allclose(sr[off], (expected / exp2)[off], atol=1e-12)
        assert np.all(np.isfinite(ratio))

    def test_zero_marginal_marked_undefined(self):
        f = np.array([[0, 5, 0], [5, 0, 0], [0, 0, 0]], dtype=float)
        sr = skill_relatedness_year(tensor_from_matrix(f), 2005)
        assert np.isnan(sr[0, 2]) and np.isnan(sr[2, 0]) and np.isnan(sr[1, 2])
        assert np.isfinite(sr[0, 1])

    def test_diagonal_undefined(self):
        f = np.array([[0, 1], [1, 0]], dtype=float)
        sr = skill_relatedness_year(tensor_from_matrix(f), 2005)
        assert np.isnan(sr[0, 0]) and np.isnan(sr[1, 1])

    def test_empty_year_rejected(self):
        flows = tensor_from_matrix(np.zeros((2, 2)))
        with pytest.raises(ValueError, match="no transitions"):
            skill_relatedness_year(flows, 2005)

    def test_absent_year_rejected(self):
        flows = tensor_from_matrix(np.ones((2, 2)))
        with pytest.raises(ValueError, match="not in flow tensor"):
            skill_relatedness_year(flows, 1999)

    @given(scale=st.floats(min_value=0.1, max_value=100.0))
    @settings(max_examples=25, deadline=None)
    def test_scale_free_in_total_flow(self, scale):
        f = np.array([[0, 4, 1], [2, 0, 5], [3, 1, 0]], dtype=float)
        sr1 = skill_relatedness_year(tensor_from_matrix(f), 2005)
        sr2 = skill_relatedness_year(tensor_from_matrix(f * scale), 2005)
        off = ~np.eye(3, dtype=bool)
        assert np.allclose(sr1[off], sr2[off], rtol=1e-12)


class TestTransform:
    def test_fixed_points(self):
        assert transform_sr(np.array(1.0)) == 0.0
        assert transform_sr(np.array(0.0)) == -1.0
        assert transform_sr(np.array(3.0)) == pytest.approx(0.5, abs=1e-15)

    def test_nan_passes_through(self):
        assert np.isnan(transform_sr(np.array(np.nan)))

    @given(st.floats(min_value=0.0, max_value=1e6))
    @settings(max_examples=50, deadline=None)
    def test_range_and_monotonicity(self, x):
        y = transform_sr(np.array(x))
        assert -1.0 <= y < 1.0
        bigger = transform_sr(np.array(x * 1.5 + 1.0))
        assert bigger > y


class TestMeanSr:
    def test_idempotent_on_identical_years(self):
        m = np.array([[np.nan, 0.4], [0.4, np.nan]])
        out = mean_sr([m] * 9)
        assert np.allclose(out, m, equal_nan=True)

    def test_partial_coverage_divides_by_defined_years(self):
        a = np.array([[np.nan, 0.2]])
        b = np.array([[np.nan, 0.4]])
        undefined = np.array([[np.nan, np.nan]])
        out = mean_sr([a, b] + [undefined] * 7)
        assert out[0, 1] == pytest.approx(0.3, abs=1e-15)

    def test_fixed_divisor_counts_all_years(self):
        a = np.array([[0.2]])
        undefined = np.array([[np.nan]])
        out = mean_sr([a, undefined], fixed_divisor=True)
        assert out[0, 0] == pytest.approx(0.1, abs=1e-15)

    def test_all_undefined_stays_undefined(self):
        out = mean_sr([np.array([[np.nan]]), np.array([[np.nan]])])
        assert np.isnan(out[0, 0])

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError, match="at least one"):
            mean_sr([])


class TestSymmetrize:
    def test_symmetric_fixed_point(self):
        m = np.array([[0.0, 0.3], [0.3, 0.0]])
        assert np.array_equal(symmetrize(m), m)

    def test_averages_directions(self):
        m = np.array([[np.nan, 0.5], [0.1, np.nan]])
        out = symmetrize(m)
        assert out[0, 1] == pytest.approx(0.3, abs=1e-15)
        assert out[1, 0] == pytest.approx(0.3, abs=1e-15)

    def test_one_sided_keeps_defined_value(self):
        m = np.array([[np.nan, 0.5], [np.nan, np.nan]])
        out = symmetrize(m)
        assert out[0, 1] == 0.5 and out[1, 0] == 0.5

    def test_idempotent(self, rng):
        m = rng.normal(size=(5, 5))
        m[rng.random((5, 5)) < 0.3] = np.nan
        once = symmetrize(m)
        twice = symmetrize(once)
        assert np.allclose(once, twice, equal_nan=True)


class TestThreshold:
    def relatedness_fixture(self, values):
        from skillbasin.relatedness import RelatednessMatrix

        values = np.asarray(values, dtype=float)
        n = values.shape[0]
        return RelatednessMatrix(
            index=tuple(chr(ord("A") + k) for k in range(n)), values=values, years=(2005,)
        )

    def test_gamma_zero_keeps_only_positive(self):
        rel = self.relatedness_fixture(
            [
                [np.nan, -0.5, 0.0],
                [-0.5, np.nan, 0.2],
                [0.0, 0.2, np.nan],
            ]
        )
        net = threshold(rel, gamma=0.0)
        assert net.adjacency[1, 2] == pytest.approx(0.2)
        assert net.adjacency[0, 1] == 0.0 and net.adjacency[0, 2] == 0.0

    def test_gamma_minus_one_keeps_every_defined_pair(self):
        rel = self.relatedness_fixture([[np.nan, -0.5], [-0.5, np.nan]])
        net = threshold(rel, gamma=-1.0)
        assert net.adjacency[0, 1] == pytest.approx(-0.5)

    def test_undefined_maps_to_absent(self):
        rel = self.relatedness_fixture([[np.nan, np.nan], [np.nan, np.nan]])
        net = threshold(rel, gamma=-1.0)
        assert np.all(net.adjacency == 0.0)

    def test_gamma_below_minus_one_rejected(self):
        rel = self.relatedness_fixture([[np.nan, 0.2], [0.2, np.nan]])
        with pytest.raises(ValueError, match="gamma"):
            threshold(rel, gamma=-1.5)

    @given(g1=st.floats(min_value=-1, max_value=1), g2=st.floats(min_value=-1, max_value=1))
    @settings(max_examples=40, deadline=None)
    def test_edge_sets_shrink_as_gamma_grows(self, g1, g2):
        lo, hi = sorted((g1, g2))
        rel = self.relatedness_fixture(
            [
                [np.nan, -0.8, 0.1, 0.5],
                [-0.8, np.nan, 0.3, np.nan],
                [0.1, 0.3, np.nan, 0.9],
                [0.5, np.nan, 0.9, np.nan],
            ]
        )
        edges_lo = {(s, t) for s, t, _ in threshold(rel, lo).edges()}
        edges_hi = {(s, t) for s, t, _ in threshold(rel, hi).edges()}
        assert edges_hi <= edges_lo


class TestComputeRelatedness:
    def test_pipeline_symmetric_with_nan_diagonal(self, rng):
        f1 = rng.integers(0, 20, size=(4, 4)).astype(float)
        f2 = rng.integers(0, 20, size=(4, 4)).astype(float)
        np.fill_diagonal(f1, 0.0)
        np.fill_diagonal(f2, 0.0)
        flows = FlowTensor(
            index=("A", "B", "C", "D"), years=(2005, 2006), matrices={2005: f1, 2006: f2}
        )
        rel = compute_relatedness(flows)
        assert np.allclose(rel.values, rel.values.T, equal_nan=True)
        assert np.all(np.isnan(np.diag(rel.values)))
        defined = rel.values[~np.isnan(rel.values)]
        assert np.all(defined >= -1.0) and np.all(defined < 1.0)

    def test_intermediates_retained_on_request(self):
        f = np.array([[0, 3], [1, 0]], dtype=float)
        flows = tensor_from_matrix(f)
        rel = compute_relatedness(flows, keep_intermediates=True)
        assert set(rel.yearly_raw) == {2005}
        assert set(rel.yearly_transformed) == {2005}

    def test_deterministic(self):
        f = np.array([[0, 3, 2], [1, 0, 4], [5, 2, 0]], dtype=float)
        a = compute_relatedness(tensor_from_matrix(f)).values
        b = compute_relatedness(tensor_from_matrix(f)).values
        assert np.array_equal(a, b, equal_nan=True)
