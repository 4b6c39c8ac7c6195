"""Schedules, explicit constants and the multilevel estimator."""

import math

import numpy as np
import pytest

from mlapprox import (
    CoefficientFunction,
    RngStream,
    Schedule,
    approximate,
    approximate_weak,
    bound_constants,
    doubling_schedule,
    enumerate_basis,
    exact_l2_error,
    explicit_sigma,
    hard_instance,
    mixed_sobolev,
    multilevel_estimate,
    random_unit_ball,
    tolerance_schedule,
    write_schedule_csv,
)


class TestSchedule:
    def test_validation(self):
        Schedule((0, 2), (0, 1))
        with pytest.raises(ValueError):
            Schedule((1,), (1, 2))
        with pytest.raises(ValueError):
            Schedule((2, 2), (2, 1))  # decreasing coefficients
        with pytest.raises(ValueError):
            Schedule((2, 0), (1, 2))  # sample-free level adds coefficients
        with pytest.raises(ValueError):
            Schedule((-1,), (1,))

    def test_totals(self):
        s = Schedule((0, 2, 4), (0, 1, 2))
        assert s.total_samples == 6
        assert s.final_coeffs == 2
        assert s.levels == 3
        empty = Schedule((), ())
        assert empty.total_samples == 0
        assert empty.final_coeffs == 0

    def test_csv(self, tmp_path):
        path = tmp_path / "schedule.csv"
        write_schedule_csv(Schedule((0, 2), (0, 1)), path)
        assert path.read_text() == "j,n_j,m_j\n1,0,0\n2,2,1\n"


class TestDoublingSchedule:
    def test_order_one_budget_32(self):
        s = doubling_schedule(32, 1, 10**9)
        assert s.samples == (0, 0, 0, 8, 16)
        assert s.coeffs == (0, 0, 0, 1, 2)
        assert s.total_samples == 24

    def test_order_zero_budget_8(self):
        s = doubling_schedule(8, 0, 10**9)
        assert s.samples == (0, 2, 4)
        assert s.coeffs == (0, 1, 2)

    def test_small_budget_is_empty(self):
        for r, n in ((1, 15), (0, 3), (2, 63)):
            s = doubling_schedule(n, r, 10**9)
            assert s.total_samples == 0
            assert s.final_coeffs == 0

    def test_half_order(self):
        s = doubling_schedule(64, 0.5, 10**9)  # offset ceil(2) = 2
        assert s.samples == (0, 0, 4, 8, 16, 32)
        assert s.coeffs == (0, 0, 1, 2, 4, 8)

    def test_basis_cap(self):
        s = doubling_schedule(2**9, 1, 4)
        assert s.coeffs == (0, 0, 0, 1, 2, 4, 4, 4, 4)
        assert s.samples[-1] == 2**8

    def test_budget_inequality_sampled(self):
        for r in (0, 0.5, 1, 2):
            for n in (1, 2, 3, 17, 100, 1023, 1024, 12345):
                assert doubling_schedule(n, r, 10**9).total_samples <= n

    def test_invalid(self):
        with pytest.raises(ValueError):
            doubling_schedule(0, 1, 8)
        with pytest.raises(ValueError):
            doubling_schedule(8, -1, 8)


class TestToleranceSchedule:
    def test_geometric_table(self):
        s = tolerance_schedule(lambda j: 2.0**-j, 4)
        assert s.samples == (4, 8, 32)
        assert s.coeffs == (1, 2, 4)

    def test_constant_table(self):
        for k in range(7):
            m = 2**k
            s = tolerance_schedule(lambda j: 1.0, m)
            assert s.samples == tuple(2**j for j in range(1, k + 2))
            assert s.total_samples == 2 ** (k + 2) - 2

    def test_smallest(self):
        s = tolerance_schedule(lambda j: 2.0**-j, 1)
        assert s.samples == (4,)  # 2 * ceil(eps(0)/eps(1)) = 2 * 2
        assert s.coeffs == (1,)

    def test_mapping_and_sequence_tables(self):
        table = {0: 1.0, 1: 0.5, 2: 0.25}
        s = tolerance_schedule(table, 2)
        assert s == tolerance_schedule([1.0, 0.5, 0.25], 2)
        assert s.samples == (4, 8)

    def test_power_of_two_required(self):
        for m in (3, 5, 6, 100):
            with pytest.raises(ValueError):
                tolerance_schedule(lambda j: 1.0, m)

    def test_positive_tolerances_required(self):
        with pytest.raises(ValueError):
            tolerance_schedule(lambda j: 0.0, 2)

    def test_cost_bound_exact(self):
        for eps in (lambda j: 2.0**-j, lambda j: 1.0 / (j + 1), lambda j: 3.0):
            for k in range(0, 11):
                m = 2**k
                s = tolerance_schedule(eps, m)
                cap = 4 * m * max(
                    math.ceil(eps(2**j // 2) / eps(2**j)) for j in range(k + 1)
                )
                assert s.total_samples <= cap

    def test_huge_ratios_stay_exact_integers(self):
        s = tolerance_schedule(lambda j: 2.0**-j, 1024)
        assert s.samples[-1] == 2**11 * 2**512  # exact, far beyond int64


class TestBoundConstants:
    def test_order_one(self):
        c = bound_constants(1)
        assert c.level_offset == 3
        assert c.error_factor == 64.0
        assert c.level_factor == 32.0
        assert c.optimality_factor == pytest.approx(2**7.5, rel=1e-15)

    def test_order_zero(self):
        c = bound_constants(0)
        assert (c.level_offset, c.error_factor, c.level_factor) == (1, 2.0, 2.0)
        assert c.optimality_factor == pytest.approx(2**1.5, rel=1e-15)

    @pytest.mark.parametrize("r", [0, 0.25, 0.5, 0.97387, 1, 2, 8])
    def test_factor_identity(self, r):
        c = bound_constants(r)
        assert c.error_factor == pytest.approx(2**r * c.level_factor, rel=1e-12)
        assert c.level_offset == math.ceil(2 * r + 1)

    def test_preasymptotic_worked_constant(self):
        # with the envelope (2/n)^p the prefactor becomes
        # 2^p * error_factor = 2^(p*ceil(2p+4)+1); at d=500, r=8 that is 2^(6p+1)
        p = 8 / (2 + math.log(500))
        c = bound_constants(p)
        assert 2**p * c.error_factor == pytest.approx(2 ** (6 * p + 1), rel=1e-12)
        assert 2**p * c.error_factor == pytest.approx(114.8215, abs=1e-3)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            bound_constants(-0.5)


@pytest.fixture(scope="module")
def fourier_basis():
    return enumerate_basis(mixed_sobolev(1, 1), 64)


class TestMultilevelEstimate:
    def test_constant_recovered_exactly(self, fourier_basis):
        f = CoefficientFunction(fourier_basis, [1.0])
        for seed in (0, 1, 99):
            result = approximate(f, fourier_basis, 256, 1, RngStream(seed))
            assert exact_l2_error(f, result.value) == 0.0

    def test_empty_schedule_returns_zero(self, fourier_basis):
        f = CoefficientFunction(fourier_basis, [1.0, 2.0])
        result = multilevel_estimate(f, fourier_basis, Schedule((), ()), RngStream(0))
        assert len(result.value) == 0
        assert result.evals_used == 0

    def test_evals_equal_schedule_total(self, fourier_basis):
        f = CoefficientFunction(fourier_basis, [1.0, 0.5])
        for n in (16, 100, 1024):
            s = doubling_schedule(n, 1, fourier_basis.size)
            result = approximate(f, fourier_basis, n, 1, RngStream(3))
            assert result.evals_used == s.total_samples <= n

    def test_output_spans_final_coefficients_only(self, fourier_basis):
        f = random_unit_ball(fourier_basis, 64, RngStream(5))
        result = approximate(f, fourier_basis, 512, 1, RngStream(6))
        assert len(result.value) == doubling_schedule(512, 1, 64).final_coeffs == 32

    def test_unbiased_coefficients(self, fourier_basis):
        # mean of each estimated coefficient over many replications sits
        # within 4 standard errors of the true coefficient
        rng = np.random.default_rng(17)
        c = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        f = CoefficientFunction(fourier_basis, c)
        schedule = Schedule((8, 16), (2, 4))
        R = 10_000
        draws = np.empty((R, 4), dtype=complex)
        for i in range(R):
            out = multilevel_estimate(f, fourier_basis, schedule, RngStream(23).child(i))
            draws[i] = out.value.coeffs
        for j in range(4):
            se = draws[:, j].std(ddof=1) / math.sqrt(R)
            assert abs(draws[:, j].mean() - c[j]) <= 4 * se

    def test_black_box_matches_coefficient_path(self, fourier_basis):
        coeffs = np.array([0.3, -0.2 + 0.1j, 0.05, 0.4j])
        f = CoefficientFunction(fourier_basis, coeffs)
        blackbox = lambda pts: f.evaluate(pts)
        a = approximate(f, fourier_basis, 128, 0, RngStream(31))
        b = approximate(blackbox, fourier_basis, 128, 0, RngStream(31))
        np.testing.assert_allclose(a.value.coeffs, b.value.coeffs, atol=1e-12)
        assert a.evals_used == b.evals_used

    def test_generic_matrix_path_matches_line_path(self):
        # a 2-d basis exercises the generic matrix kernels; embed a 1-d target
        basis2 = enumerate_basis(mixed_sobolev(1, 2), 32)
        rng = np.random.default_rng(3)
        c = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        f = CoefficientFunction(basis2, c)
        schedule = Schedule((16, 64), (2, 8))
        out = multilevel_estimate(f, basis2, schedule, RngStream(7), keep_levels=True)
        assert len(out.levels) == 2
        assert len(out.levels[0]) == 2 and len(out.levels[1]) == 8
        # estimates improve on average towards f on this smooth target
        assert exact_l2_error(f, out.value) < f.l2_norm()

    def test_keep_levels_snapshots(self, fourier_basis):
        f = random_unit_ball(fourier_basis, 32, RngStream(8))
        result = approximate(f, fourier_basis, 128, 1, RngStream(9), keep_levels=True)
        schedule = doubling_schedule(128, 1, fourier_basis.size)
        assert len(result.levels) == schedule.levels
        for snap, m in zip(result.levels, schedule.coeffs):
            assert len(snap) == m
        np.testing.assert_array_equal(result.levels[-1].coeffs, result.value.coeffs)

    def test_schedule_basis_mismatch(self, fourier_basis):
        f = CoefficientFunction(fourier_basis, [1.0])
        with pytest.raises(ValueError):
            multilevel_estimate(
                f, fourier_basis, Schedule((4,), (fourier_basis.size + 1,)), RngStream(0)
            )

    def test_target_from_other_basis_rejected(self, fourier_basis):
        other = enumerate_basis(mixed_sobolev(1, 1), 8)
        f = CoefficientFunction(other, [1.0])
        with pytest.raises(ValueError):
            approximate(f, fourier_basis, 64, 1, RngStream(0))

    def test_deterministic_given_stream(self, fourier_basis):
        f = random_unit_ball(fourier_basis, 16, RngStream(10))
        a = approximate(f, fourier_basis, 256, 1, RngStream(11).child(4))
        b = approximate(f, fourier_basis, 256, 1, RngStream(11).child(4))
        np.testing.assert_array_equal(a.value.coeffs, b.value.coeffs)

    def test_importance_weighted_path_unbiased(self):
        # custom (non unit-modulus) basis functions force the u-weighted update
        fns = (
            lambda x: np.ones_like(x, dtype=complex),
            lambda x: np.sqrt(2) * np.cos(2 * np.pi * x).astype(complex),
        )
        spec = explicit_sigma(
            [1.0, 0.5], functions=fns, density_bounds=(1.0, 2.0)
        )
        basis = enumerate_basis(spec, 2)
        f = CoefficientFunction(basis, [0.8, -0.6])
        schedule = Schedule((64,), (2,))
        R = 4000
        draws = np.empty((R, 2), dtype=complex)
        for i in range(R):
            out = multilevel_estimate(f, basis, schedule, RngStream(29).child(i))
            draws[i] = out.value.coeffs
        for j in range(2):
            se = draws[:, j].std(ddof=1) / math.sqrt(R)
            assert abs(draws[:, j].mean() - f.coeffs[j]) <= 4 * se


class TestApproximateWeak:
    def test_output_dimension(self):
        basis = enumerate_basis(explicit_sigma([1.0 / j for j in range(1, 65)]), 64)
        f = random_unit_ball(basis, 64, RngStream(1))
        out = approximate_weak(f, basis, lambda j: 1.0 / (j + 1) ** 2, 8, RngStream(2))
        assert len(out.value) == 8
        assert out.evals_used == tolerance_schedule(lambda j: 1.0 / (j + 1) ** 2, 8).total_samples

    def test_power_of_two_enforced(self):
        basis = enumerate_basis(explicit_sigma([1.0, 0.5, 0.25]), 3)
        f = CoefficientFunction(basis, [1.0])
        with pytest.raises(ValueError):
            approximate_weak(f, basis, lambda j: 1.0, 3, RngStream(0))

    def test_m_within_basis(self):
        basis = enumerate_basis(explicit_sigma([1.0, 0.5]), 2)
        f = CoefficientFunction(basis, [1.0])
        with pytest.raises(ValueError):
            approximate_weak(f, basis, lambda j: 1.0, 4, RngStream(0))

    def test_member_of_first_span_recovered(self):
        basis = enumerate_basis(mixed_sobolev(1, 1), 8)
        f = CoefficientFunction(basis, [2.5])
        out = approximate_weak(f, basis, lambda j: 2.0**-j, 1, RngStream(3))
        assert exact_l2_error(f, out.value) == 0.0


class TestLemmaRecursionSmoke:
    def test_recursion_on_small_run(self):
        # error after a level is at most (m/n) * previous error + tail
        basis = enumerate_basis(mixed_sobolev(1, 1), 64)
        schedule = Schedule((8, 16, 32), (2, 4, 8))
        R = 600
        targets = [random_unit_ball(basis, 64, RngStream(40).child(t)) for t in range(3)]
        for f in targets:
            per_level = np.empty((R, 3))
            for i in range(R):
                out = multilevel_estimate(
                    f, basis, schedule, RngStream(41).child(i), keep_levels=True
                )
                per_level[i] = [exact_l2_error(f, s) ** 2 for s in out.levels]
            means = per_level.mean(axis=0)
            stderr = per_level.std(axis=0, ddof=1) / math.sqrt(R)
            prev, prev_se = f.l2_norm() ** 2, 0.0
            for lvl in range(3):
                n_l, m_l = schedule.samples[lvl], schedule.coeffs[lvl]
                tail = exact_l2_error(f, f.project(m_l)) ** 2
                slack = 4 * (stderr[lvl] + (m_l / n_l) * prev_se)
                assert means[lvl] <= (m_l / n_l) * prev + tail + slack
                prev, prev_se = means[lvl], stderr[lvl]
