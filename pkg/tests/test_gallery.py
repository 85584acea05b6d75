import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from galerkin_pinv.errors import DomainViolation, UnsupportedModel
from galerkin_pinv.gallery import (
    GALLERY, Classification, CoeffVector, PowerDecay, apply, constant, diagonal_model,
    harmonic, in_domain, jacobi_free, jacobi_model, jacobi_shifted, kernel_gap, linear,
    oracle_pinv_apply, truncate,
)
from galerkin_pinv.linalg import ToleranceContext, eig_sym, pinv, proj_kernel


class TestCoeffVector:
    def test_head_and_tail(self):
        x = CoeffVector((5.0,), PowerDecay(2.0, 3.0))
        np.testing.assert_array_equal(x.head(3), [5.0, 3.0 / 4, 3.0 / 9])

    def test_tail_sq_matches_series(self):
        x = CoeffVector.power(3.0)
        expected = float(mpmath.nsum(lambda k: k ** -6, [11, mpmath.inf]))
        assert x.tail_sq(10) == pytest.approx(expected, rel=1e-13)

    def test_support(self):
        assert CoeffVector.basis(4).support == 4
        assert CoeffVector((1.0, 0.0, 0.0)).support == 1
        assert CoeffVector().support == 0

    def test_not_square_summable(self):
        with pytest.raises(ValueError):
            CoeffVector.power(0.5)

    def test_finite_power_is_fine(self):
        assert CoeffVector.power(0.25, length=4).finite


class TestTruncate:
    def test_linear(self):
        np.testing.assert_array_equal(truncate(linear(), 3).entries, np.diag([1.0, 2.0, 3.0]))

    def test_free_2(self):
        np.testing.assert_array_equal(truncate(jacobi_free(), 2).entries, [[0, 1], [1, 0]])

    def test_free_5_spectrum(self):
        vals = eig_sym(truncate(jacobi_free(), 5)).values
        s3 = math.sqrt(3)
        np.testing.assert_allclose(vals, [-s3, -1, 0, 1, s3], atol=1e-14)

    @pytest.mark.parametrize("n", [1, 2, 17, 200])
    def test_free_spectrum_closed_form(self, n):
        k = np.arange(1, n + 1)
        expected = np.sort(2 * np.cos(k * np.pi / (n + 1)))
        np.testing.assert_allclose(eig_sym(truncate(jacobi_free(), n)).values, expected, atol=1e-10)

    def test_kernel_gap(self):
        np.testing.assert_array_equal(np.diag(truncate(kernel_gap(), 4).entries), [0, 2, 3, 4])

    def test_listed_jacobi(self):
        m = jacobi_model("j", (1.0, 2.0), 5.0, (0.5,), 1.0)
        expected = [[1, 0.5, 0], [0.5, 2, 1], [0, 1, 5]]
        np.testing.assert_array_equal(truncate(m, 3).entries, expected)


class TestApply:
    def test_linear_e1(self):
        assert apply(linear(), CoeffVector.basis(1)).coeffs == (1.0,)

    def test_harmonic(self):
        assert apply(harmonic(), CoeffVector((1.0, 1.0, 1.0))).coeffs == (1.0, 0.5, 1.0 / 3)

    def test_free_e2(self):
        assert apply(jacobi_free(), CoeffVector.basis(2)).coeffs == (1.0, 0.0, 1.0)

    def test_linear_decay(self):
        y = apply(linear(), CoeffVector.power(2.0))
        assert y.decay == PowerDecay(1.0, 1.0)

    def test_linear_decay_outside_domain(self):
        with pytest.raises(DomainViolation):
            apply(linear(), CoeffVector.power(1.0))

    def test_jacobi_infinite_tail(self):
        with pytest.raises(UnsupportedModel):
            apply(jacobi_free(), CoeffVector.power(2.0))


class TestOracle:
    def test_kernel_gap(self):
        ans = oracle_pinv_apply(kernel_gap(), CoeffVector((7.0, 2.0)))
        assert ans.exact and ans.value.coeffs == (0.0, 1.0)

    def test_linear_decay(self):
        ans = oracle_pinv_apply(linear(), CoeffVector.power(2.0))
        assert ans.exact and ans.value.decay == PowerDecay(3.0, 1.0)

    def test_harmonic_outside_domain(self):
        ans = oracle_pinv_apply(harmonic(), CoeffVector.power(1.0))
        assert not ans.exact and ans.value is None
        assert "DomainViolation" in ans.description

    def test_zero_tail_dropped(self):
        ans = oracle_pinv_apply(constant(0.0), CoeffVector.power(1.0))
        assert ans.exact and ans.value.norm() == 0

    def test_jacobi_unsupported(self):
        with pytest.raises(UnsupportedModel):
            oracle_pinv_apply(jacobi_free(), CoeffVector.basis(1))


class TestInDomain:
    def test_finite(self):
        assert in_domain(linear(), CoeffVector((1.0, 2.0, 3.0)))

    @pytest.mark.parametrize("p, expected", [(1.0, False), (2.0, True), (1.5, False), (1.51, True)])
    def test_linear_decay(self, p, expected):
        # sum k^2 k^(-2p) converges iff 2p - 2 > 1
        assert in_domain(linear(), CoeffVector.power(p)) is expected

    def test_bounded_model(self):
        assert in_domain(harmonic(), CoeffVector.power(0.6))

    def test_jacobi_tail(self):
        with pytest.raises(UnsupportedModel):
            in_domain(jacobi_free(), CoeffVector.power(2.0))


class TestModelMetadata:
    def test_labels(self):
        assert GALLERY["linear"].expected is Classification.STABLE
        assert GALLERY["harmonic"].expected is Classification.UNSTABLE
        assert GALLERY["kernel-gap"].expected is Classification.STABLE_WITH_KERNEL
        assert GALLERY["jacobi-free"].expected is Classification.UNSTABLE
        assert GALLERY["jacobi-shifted(3)"].expected is Classification.STABLE

    @pytest.mark.parametrize("n", [1, 2, 3, 8, 9])
    def test_kernel_dims(self, n):
        assert linear().kernel_dim(n) == 0
        assert kernel_gap().kernel_dim(n) == 1
        assert jacobi_free().kernel_dim(n) == n % 2
        assert jacobi_shifted(3.0).kernel_dim(n) == 0
        assert jacobi_shifted(1.0).kernel_dim(n) is None

    def test_boundedness(self):
        assert not linear().bounded and harmonic().bounded and jacobi_free().bounded

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            diagonal_model("bad", (math.inf,))


finite_vectors = st.lists(st.floats(-10, 10), min_size=1, max_size=12).map(CoeffVector.of)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(sorted(GALLERY)), finite_vectors, st.integers(0, 20))
def test_truncation_consistency(name, x, extra):
    model = GALLERY[name]
    n = len(x.coeffs) + model.bandwidth + extra
    lhs = truncate(model, n).entries @ x.head(n)
    rhs = apply(model, x).head(n)
    if model.kind == "diagonal":
        assert np.array_equal(lhs, rhs)
    else:
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-14 * max(1, np.abs(rhs).max()))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["linear", "harmonic", "kernel-gap", "identity", "zero"]),
       finite_vectors, st.integers(1, 64))
def test_oracle_agrees_with_pinv(name, y, n):
    model = GALLERY[name]
    ans = oracle_pinv_apply(model, y)
    tol = ToleranceContext(exact_rank=n - model.kernel_dim(n))
    x_n = pinv(truncate(model, n), tol).apply(y.head(n))
    ref = ans.value.head(n)
    np.testing.assert_allclose(x_n, ref, rtol=1e-12, atol=1e-300)


@pytest.mark.parametrize("n", [1, 2, 5, 64])
def test_kernel_gap_kernel_is_e1(n):
    a = truncate(kernel_gap(), n)
    pk = proj_kernel(a, ToleranceContext(exact_rank=n - 1)).entries
    x = np.arange(1.0, n + 1)
    expected = np.zeros(n)
    expected[0] = x[0]
    np.testing.assert_allclose(pk @ x, expected, atol=1e-12)
