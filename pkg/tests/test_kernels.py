import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from repchain.kernels import (
    binary_entropy,
    decay,
    dist_output,
    dist_success,
    fidelity_from_werner,
    positive_rate_threshold,
    secret_fraction,
    swap_output,
)

werner = st.floats(min_value=0.0, max_value=1.0)


class TestFidelity:
    def test_perfect_bell_state(self):
        assert fidelity_from_werner(1.0) == 1.0

    def test_maximally_mixed(self):
        assert fidelity_from_werner(0.0) == 0.25

    def test_scenario_a_initial_quality(self):
        assert fidelity_from_werner(0.360) == pytest.approx(0.520, abs=1e-12)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            fidelity_from_werner(1.5)
        with pytest.raises(ValueError):
            fidelity_from_werner(-0.1)


class TestDecay:
    def test_zero_wait(self):
        assert decay(0.9, 0.0, 100.0, 100.0) == 0.9

    def test_perfect_memories(self):
        assert decay(0.9, 12345.0, math.inf, math.inf) == 0.9

    def test_direct_evaluation(self):
        assert decay(1.0, 10.0, 20.0, 20.0) == pytest.approx(math.exp(-1.0), rel=1e-12)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            decay(0.5, -1.0, 10.0, 10.0)
        with pytest.raises(ValueError):
            decay(0.5, 1.0, 0.0, 10.0)

    @given(
        w=werner,
        dt1=st.floats(min_value=0.0, max_value=50.0),
        dt2=st.floats(min_value=0.0, max_value=50.0),
        tc_a=st.floats(min_value=1.0, max_value=1e6),
        tc_b=st.floats(min_value=1.0, max_value=1e6),
    )
    def test_semigroup_property(self, w, dt1, dt2, tc_a, tc_b):
        joint = decay(w, dt1 + dt2, tc_a, tc_b)
        stepwise = decay(decay(w, dt1, tc_a, tc_b), dt2, tc_a, tc_b)
        assert joint == pytest.approx(stepwise, rel=1e-12, abs=1e-12)


class TestSwap:
    def test_identity_element(self):
        assert swap_output(0.7, 1.0) == 0.7

    def test_direct_product(self):
        assert swap_output(0.9, 0.8) == pytest.approx(0.72, abs=1e-15)

    def test_absorbing_element(self):
        assert swap_output(0.0, 0.6) == 0.0

    @given(wa=werner, wb=werner)
    def test_commutative_and_contracting(self, wa, wb):
        assert swap_output(wa, wb) == swap_output(wb, wa)
        assert swap_output(wa, wb) <= min(wa, wb) + 1e-15

    @given(wa=werner, wb=werner, wc=werner)
    def test_associative(self, wa, wb, wc):
        left = swap_output(swap_output(wa, wb), wc)
        right = swap_output(wa, swap_output(wb, wc))
        assert left == pytest.approx(right, rel=1e-12, abs=1e-12)


class TestDistillation:
    def test_success_perfect_inputs(self):
        assert dist_success(1.0, 1.0) == 1.0

    def test_success_vanishing_product(self):
        assert dist_success(0.0, 0.73) == 0.5

    def test_success_direct(self):
        assert dist_success(0.6, 0.5) == pytest.approx(0.65, abs=1e-15)

    def test_output_fixed_point_at_one(self):
        assert dist_output(1.0, 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_output_fixed_point_at_one_third(self):
        w = 1.0 / 3.0
        assert dist_output(w, w) == pytest.approx(w, abs=1e-12)

    def test_output_direct(self):
        assert dist_output(0.9, 0.9) == pytest.approx(5.04 / 5.43, abs=1e-12)

    def test_improvement_region_is_exactly_open_interval(self):
        # dist_output(w, w) > w exactly on (1/3, 1), grid step 1e-3
        for w in np.arange(0.0, 1.0001, 1e-3):
            w = float(min(w, 1.0))
            improved = dist_output(w, w) > w
            assert improved == (1.0 / 3.0 < w < 1.0), f"w={w}"

    @given(alpha=werner, wa=werner, wb=werner)
    def test_success_bilinear(self, alpha, wa, wb):
        lhs = dist_success(alpha * wa, wb) - dist_success(0.0, wb)
        rhs = alpha * (dist_success(wa, wb) - dist_success(0.0, wb))
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)

    @given(alpha=werner, wa=werner, wb=werner)
    def test_success_times_output_bilinear(self, alpha, wa, wb):
        def mass(x, y):
            return dist_success(x, y) * dist_output(x, y)

        lhs = mass(alpha * wa, wb) - mass(0.0, wb)
        rhs = alpha * (mass(wa, wb) - mass(0.0, wb))
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


class TestSecretFraction:
    def test_zero_error_rate(self):
        assert secret_fraction(1.0) == 1.0

    def test_fully_mixed_clamped(self):
        assert secret_fraction(0.0) == 0.0

    def test_reference_value(self):
        # 1 - 2*h2(0.05), h2 evaluated independently above
        assert secret_fraction(0.9) == pytest.approx(0.4272060857680875, abs=1e-12)

    def test_binary_entropy_edges(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        assert binary_entropy(0.5) == 1.0

    def test_monotone_non_decreasing(self):
        grid = np.linspace(0.0, 1.0, 2001)
        values = [secret_fraction(float(w)) for w in grid]
        assert all(b >= a - 1e-15 for a, b in zip(values, values[1:]))

    def test_positive_exactly_above_threshold(self):
        w_star = positive_rate_threshold(tol=1e-9)
        assert w_star == pytest.approx(0.7799442711, abs=1e-6)
        assert secret_fraction(w_star - 1e-3) == 0.0
        assert secret_fraction(w_star + 1e-3) > 0.0
