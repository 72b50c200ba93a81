import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gibopt.kernels import (
    SIM,
    REAL,
    KernelSpec,
    DualKernelSpec,
    se_kernel,
    se_kernel_grad1,
    se_kernel_hess12,
    dual_kernel,
    dual_kernel_grad1,
    dual_kernel_hess12,
)


def spec1d(outputscale=1.0, lengthscale=0.3, noise=0.0):
    return KernelSpec(outputscale, np.array([lengthscale]), noise)


def fd_grad1(a, b, spec, step):
    """Central finite differences of se_kernel in its first argument."""
    d = len(a)
    g = np.zeros(d)
    for j in range(d):
        e = np.zeros(d)
        e[j] = step
        g[j] = (se_kernel(a + e, b, spec) - se_kernel(a - e, b, spec)) / (2 * step)
    return g


def fd_hess12(a, b, spec, step):
    """Nested central differences: d/db of d/da of se_kernel."""
    d = len(a)
    h = np.zeros((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = step
        h[:, j] = (fd_grad1(a, b + e, spec, step) - fd_grad1(a, b - e, spec, step)) / (2 * step)
    return h


# frozen values, computed by hand from the closed forms

def test_se_kernel_at_zero_lag_is_outputscale():
    s = KernelSpec(4.0, np.array([0.3, 1.7]), 0.0)
    a = np.array([0.2, -1.0])
    assert se_kernel(a, a, s) == 4.0


def test_se_kernel_frozen_1d_value():
    v = se_kernel(np.array([0.0]), np.array([0.3]), spec1d())
    assert v == pytest.approx(math.exp(-0.5), abs=1e-12)
    assert v == pytest.approx(0.60653, abs=1e-5)


def test_se_kernel_huge_lengthscale_is_constant():
    s = spec1d(outputscale=2.5, lengthscale=1e12)
    assert se_kernel(np.array([-3.0]), np.array([5.0]), s) == pytest.approx(2.5, rel=1e-12)


def test_grad1_zero_at_zero_lag():
    s = KernelSpec(1.0, np.array([0.4, 0.2, 1.0]), 0.0)
    a = np.array([0.1, 0.2, 0.3])
    assert np.all(se_kernel_grad1(a, a, s) == 0.0)


def test_hess12_frozen_zero_lag_1d():
    h = se_kernel_hess12(np.array([0.5]), np.array([0.5]), spec1d())
    assert h.shape == (1, 1)
    assert h[0, 0] == pytest.approx(1.0 / 0.09, rel=1e-12)
    assert h[0, 0] == pytest.approx(11.111, abs=1e-3)


def test_grad1_frozen_1d_value():
    g = se_kernel_grad1(np.array([0.0]), np.array([0.3]), spec1d())
    expected = (0.3 / 0.09) * math.exp(-0.5)
    assert g[0] == pytest.approx(expected, rel=1e-12)
    assert g[0] == pytest.approx(2.0218, abs=1e-4)
    # independent finite-difference oracle
    fd = fd_grad1(np.array([0.0]), np.array([0.3]), spec1d(), 1e-6 * 0.3)
    assert g[0] == pytest.approx(fd[0], rel=1e-6)


def test_dimension_mismatch_rejected():
    s = spec1d()
    with pytest.raises(ValueError):
        se_kernel(np.array([0.0, 1.0]), np.array([0.0, 1.0]), s)
    with pytest.raises(ValueError):
        se_kernel_grad1(np.array([0.0]), np.array([0.0, 1.0]), s)


def test_kernel_spec_invariants():
    with pytest.raises(ValueError):
        KernelSpec(0.0, np.array([0.3]), 0.0)
    with pytest.raises(ValueError):
        KernelSpec(1.0, np.array([0.3, -0.1]), 0.0)
    with pytest.raises(ValueError):
        KernelSpec(1.0, np.array([0.3]), -1e-3)


# dual information-source kernel

def dual1d(nu_f2=4.0, nu_m2=0.25):
    kf = KernelSpec(nu_f2, np.array([0.3]), 0.01)
    km = KernelSpec(nu_m2, np.array([0.35]), 0.0)
    return DualKernelSpec(kf, km)


def test_dual_kernel_mixed_sources_drops_gap_term():
    th = np.array([0.2])
    assert dual_kernel(th, SIM, th, REAL, dual1d()) == 4.0


def test_dual_kernel_real_real_adds_gap_term():
    th = np.array([0.2])
    assert dual_kernel(th, REAL, th, REAL, dual1d()) == 4.25


def test_dual_kernel_sim_sim_reduces_to_base():
    th = np.array([0.2])
    assert dual_kernel(th, SIM, th, SIM, dual1d()) == 4.0


def test_dual_kernel_bad_source_rejected():
    th = np.array([0.2])
    with pytest.raises(ValueError):
        dual_kernel(th, 2, th, REAL, dual1d())


def test_dual_kernel_dimension_agreement_enforced():
    kf = KernelSpec(1.0, np.array([0.3]), 0.0)
    km = KernelSpec(1.0, np.array([0.3, 0.3]), 0.0)
    with pytest.raises(ValueError):
        DualKernelSpec(kf, km)


def test_dual_derivatives_sum_per_term():
    # real-real derivative blocks are the sums of both kernels' blocks
    ds = dual1d()
    a = np.array([0.1])
    b = np.array([0.4])
    g = dual_kernel_grad1(a, REAL, b, REAL, ds)
    expected = se_kernel_grad1(a, b, ds.k_f) + se_kernel_grad1(a, b, ds.k_m)
    assert g == pytest.approx(expected, rel=1e-12)
    h = dual_kernel_hess12(a, REAL, b, SIM, ds)
    assert h == pytest.approx(se_kernel_hess12(a, b, ds.k_f), rel=1e-12)


finite_vec = st.integers(1, 4).flatmap(
    lambda d: st.tuples(
        st.lists(st.floats(-3, 3), min_size=d, max_size=d),
        st.lists(st.floats(-3, 3), min_size=d, max_size=d),
        st.lists(st.floats(0.05, 2.0), min_size=d, max_size=d),
    )
)


@given(finite_vec, st.floats(0.1, 5.0))
@settings(max_examples=60, deadline=None)
def test_symmetry_property(vecs, outputscale):
    a_, b_, ls = vecs
    a, b = np.array(a_), np.array(b_)
    s = KernelSpec(outputscale, np.array(ls), 0.0)
    assert se_kernel(a, b, s) == pytest.approx(se_kernel(b, a, s), rel=1e-12)


@given(finite_vec, st.sampled_from([SIM, REAL]), st.sampled_from([SIM, REAL]))
@settings(max_examples=40, deadline=None)
def test_dual_symmetry_property(vecs, s1, s2):
    a_, b_, ls = vecs
    a, b = np.array(a_), np.array(b_)
    ds = DualKernelSpec(
        KernelSpec(1.3, np.array(ls), 0.0),
        KernelSpec(0.2, np.array(ls), 0.0),
    )
    assert dual_kernel(a, s1, b, s2, ds) == pytest.approx(dual_kernel(b, s2, a, s1, ds), rel=1e-12)


@given(finite_vec)
@settings(max_examples=40, deadline=None)
def test_grad1_matches_finite_differences(vecs):
    a_, b_, ls = vecs
    a, b = np.array(a_), np.array(b_)
    s = KernelSpec(1.7, np.array(ls), 0.0)
    step = 1e-6 * float(np.min(ls))
    got = se_kernel_grad1(a, b, s)
    want = fd_grad1(a, b, s, step)
    np.testing.assert_allclose(got, want, rtol=1e-5, atol=1e-7)


@given(finite_vec)
@settings(max_examples=25, deadline=None)
def test_hess12_matches_nested_finite_differences(vecs):
    a_, b_, ls = vecs
    a, b = np.array(a_), np.array(b_)
    s = KernelSpec(1.7, np.array(ls), 0.0)
    # scale the step to the shortest axis so anisotropic lengthscales do
    # not leave truncation error above the tolerance
    step = 1e-4 * float(np.min(ls))
    got = se_kernel_hess12(a, b, s)
    want = fd_hess12(a, b, s, step)
    np.testing.assert_allclose(got, want, rtol=1e-4, atol=1e-4)
