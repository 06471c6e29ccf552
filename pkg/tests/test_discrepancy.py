import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eslab.diophantine import make_alpha
from eslab.discrepancy import (
    discrepancy,
    quadrature_error,
    rate_fit,
    sup_discrepancy,
    sup_upper_bound,
    t3_lower_bound,
    x_factor,
    y_factor,
)
from eslab.errors import DomainError, ParameterError
from eslab.fourier_fn import SparseFourierFunction, build_named_function, sobolev_norm
from eslab.weights import WeightScheme, kernel, make_weights

GOLDEN = make_alpha("golden")
ONE = SparseFourierFunction.from_dict(1, {0: 1.0}, real_flag=True)
COS = SparseFourierFunction.from_dict(1, {1: 0.5, -1: 0.5}, real_flag=True)
MONO = build_named_function("monomial", m=1)


def user_alpha(a):
    return make_alpha("user", components=[a])


def test_discrepancy_examples():
    w = make_weights("rectangular", 5)
    assert discrepancy(ONE, w, GOLDEN, [0.3]) == 0
    assert discrepancy(ONE, w, GOLDEN, [0.3], mode="space") == pytest.approx(0, abs=1e-15)
    for x in (0.0, 0.17, 0.9):
        assert abs(discrepancy(MONO, make_weights("rectangular", 2), user_alpha(0.2), [x])) <= 1e-15
    val = discrepancy(MONO, make_weights("triangular", 2), user_alpha(0.25), [0.0])
    assert val == pytest.approx(0.5, abs=1e-15)
    space = discrepancy(MONO, make_weights("triangular", 2), user_alpha(0.25), [0.0], mode="space")
    assert space == pytest.approx(0.5, abs=1e-15)


def test_discrepancy_errors():
    with pytest.raises(ParameterError):
        discrepancy(MONO, make_weights("rectangular", 2), GOLDEN, [0.1], mode="fft")
    with pytest.raises(ParameterError):
        discrepancy(MONO, make_weights("rectangular", 2), GOLDEN, [0.1, 0.2])
    f2 = build_named_function("monomial", m=(1, 1))
    with pytest.raises(ParameterError):
        discrepancy(f2, make_weights("rectangular", 2), GOLDEN, [0.1, 0.2])


_SCHEMES = [
    {"kind": "rectangular"},
    {"kind": "triangular"},
    {"kind": "binomial"},
    {"kind": "bochner_riesz", "gamma": 0.5},
    {"kind": "smooth_bump"},
    {"kind": "logarithmic"},
]


@settings(max_examples=200)
@given(
    scheme=st.sampled_from(_SCHEMES),
    N=st.integers(1, 512),
    d=st.integers(1, 2),
    R=st.integers(1, 64),
    seed=st.integers(0, 2**32),
    x=st.lists(st.floats(0, 1, exclude_max=True), min_size=2, max_size=2),
)
def test_mode_equivalence(scheme, N, d, R, seed, x):
    if d == 2:
        R = min(R, 12)
    f = build_named_function("random_sobolev", d=d, delta=1.0, R=R, seed=seed)
    alpha = make_alpha("random_sample", d=d, seed=seed)
    w = make_weights(scheme, N)
    a = discrepancy(f, w, alpha, x[:d], mode="freq")
    b = discrepancy(f, w, alpha, x[:d], mode="space")
    assert abs(a - b) <= 1e-10


def test_sup_monomial_exact():
    for kind in ("rectangular", "triangular", "binomial", "smooth_bump"):
        for N in (3, 17, 100):
            w = make_weights(kind, N)
            for m in (1, 2, 7):
                f = build_named_function("monomial", m=m)
                rep = sup_discrepancy(f, w, GOLDEN)
                K = abs(kernel(w, (m * GOLDEN.components[0]) % 1.0))
                assert rep.sup_upper == pytest.approx(K, abs=1e-10)
                assert rep.sup_lower == pytest.approx(K, abs=1e-10)


def test_sup_constant_and_report_fields():
    rep = sup_discrepancy(ONE, make_weights("triangular", 8), GOLDEN)
    assert rep.sup_lower == 0 and rep.sup_upper == 0 and rep.N == 8 and rep.elapsed >= 0
    rep = sup_discrepancy(COS, make_weights("triangular", 8), GOLDEN, grid_size=0)
    assert rep.sup_lower is None and rep.sup_upper > 0


def test_sup_t5_bracket():
    f = build_named_function("t5", d=1, theta=2, R=64)
    rep = sup_discrepancy(f, make_weights("triangular", 256), GOLDEN)
    assert rep.grid_size == 129
    assert rep.sup_lower <= rep.sup_upper + 1e-10
    assert rep.sup_upper <= 4 * rep.sup_lower


def test_sup_grid_errors():
    f = build_named_function("t5", d=1, theta=2, R=8)
    with pytest.raises(ParameterError):
        sup_discrepancy(f, make_weights("triangular", 4), GOLDEN, grid_size=10)
    f4 = build_named_function("monomial", m=(1, 0, 0, 1))
    a4 = make_alpha("algebraic_field", d=4)
    with pytest.raises(ParameterError):
        sup_discrepancy(f4, make_weights("triangular", 4), a4)
    assert sup_discrepancy(f4, make_weights("triangular", 4), a4, grid_size=0).sup_lower is None


@settings(max_examples=40)
@given(N=st.integers(1, 300), R=st.integers(1, 20), seed=st.integers(0, 2**32), d=st.integers(1, 2))
def test_bracket_invariant(N, R, seed, d):
    f = build_named_function("random_sobolev", d=d, delta=1.0, R=R if d == 1 else min(R, 6), seed=seed)
    alpha = make_alpha("random_sample", d=d, seed=seed)
    w = make_weights("triangular", N)
    rep = sup_discrepancy(f, w, alpha)
    assert 0 <= rep.sup_lower <= rep.sup_upper + 1e-10
    assert rep.sup_upper == pytest.approx(sup_upper_bound(f, w, alpha), rel=1e-15)
    # any single point is below the grid-free upper end
    assert abs(discrepancy(f, w, alpha, [0.123] * d)) <= rep.sup_upper + 1e-10


def test_x_factor_examples():
    assert x_factor(1, 2.5, 1.0, 2.0, 10**6) == 1.0
    assert x_factor(1, 2.0, 1.0, 2.0, 15) == pytest.approx(math.sqrt(math.log(16)), rel=1e-15)
    assert x_factor(1, 2.0, 1.0, 2.0, 15) == pytest.approx(1.6651, abs=1e-4)
    for N in (16, 1000):
        assert x_factor(1, 0.8, 0.4, 3.0, N) == pytest.approx(N**0.25, rel=1e-12)


def test_x_factor_remaining_branches():
    N = 99.0
    L = math.log1p(N)
    # theta < 1/2: threshold theta sigma - d(theta - 1/2) = 0.4*3 + 0.1 = 1.3
    assert x_factor(1, 1.3, 0.4, 3.0, N) == pytest.approx(math.sqrt(L))
    assert x_factor(1, 1.4, 0.4, 3.0, N) == 1.0
    # theta = 1/2: threshold sigma/2
    assert x_factor(1, 1.5, 0.5, 3.0, N) == pytest.approx(L)
    assert x_factor(1, 1.0, 0.5, 3.0, N) == pytest.approx(N ** (0.5 / 2.0) * math.sqrt(L))
    assert x_factor(1, 2.0, 0.5, 3.0, N) == 1.0
    # theta > 1/2, delta below theta sigma
    assert x_factor(1, 1.0, 2.0, 1.0, N) == pytest.approx(N ** (2.0 * 1.0 / 1.5))


def test_x_factor_domain_errors():
    with pytest.raises(DomainError):
        x_factor(1, 0.5, 1.0, 2.0, 10)
    with pytest.raises(DomainError):
        x_factor(2, 1.5, 1.0, 1.5, 10)
    with pytest.raises(DomainError):
        x_factor(1, 2.0, 0.0, 2.0, 10)
    assert x_factor(1, 3.0, 2.0, 1.0, 10) == 1.0


@given(d=st.integers(1, 3), theta=st.floats(0.01, 0.5), excess=st.floats(1e-6, 5))
def test_x_factor_sigma_equal_d_avoids_power_branches(d, theta, excess):
    # delta > d/2 already clears the thresholds below theta = 1/2 when sigma = d
    assert x_factor(d, d / 2 + excess, theta, float(d), 1e6) == 1.0


def test_y_factor_examples():
    assert y_factor(1, 2.0, 1.0, 15) == pytest.approx(math.sqrt(math.log(16)), rel=1e-15)
    assert y_factor(1, 1.0, 2.0, 50) == pytest.approx(math.log(51), rel=1e-15)
    assert y_factor(1, 0.8, 2.0, 16) == pytest.approx(16**0.1, rel=1e-12)
    assert y_factor(1, 0.8, 2.0, 16) == pytest.approx(1.3195, abs=1e-4)


def test_y_factor_domain_errors():
    with pytest.raises(DomainError):
        y_factor(1, 0.4, 2.0, 16)
    # sigma = d keeps delta/sigma above 1/2
    assert y_factor(2, 1.5, 2.0, 16) == pytest.approx(math.sqrt(math.log(17)))
    with pytest.raises(DomainError):
        y_factor(2, 1.5, 1.0, 16)


def test_t3_lower_bound_examples():
    f = build_named_function("monomial", m=1)
    zero = SparseFourierFunction.from_dict(1, {2: 1.0})
    assert t3_lower_bound(zero, "triangular", GOLDEN, 1, [10, 100]) == 0.0
    target = 1.0 / math.sin(math.pi * GOLDEN.components[0]) ** 2
    assert target == pytest.approx(1.151166, abs=1e-6)
    val = t3_lower_bound(f, "triangular", GOLDEN, 1, range(1, 10**5 + 1))
    assert 0.99 * target <= val <= target * (1 + 1e-12)
    first = t3_lower_bound(f, "rectangular", GOLDEN, 1, [1])
    assert t3_lower_bound(f, "rectangular", GOLDEN, 1, range(1, 2000)) >= first
    with pytest.raises(ParameterError):
        t3_lower_bound(f, WeightScheme("custom", sequence=(1.0, 2.0)), GOLDEN, 1, [2])


@settings(max_examples=30)
@given(
    kind=st.sampled_from(["rectangular", "triangular", "binomial", "smooth_bump"]),
    m=st.integers(1, 40),
    N=st.integers(1, 2000),
    a=st.floats(0.01, 0.99),
)
def test_t3_pincer(kind, m, N, a):
    alpha = user_alpha(a)
    f = build_named_function("monomial", m=m)
    scheme = WeightScheme.from_spec(kind)
    lower = t3_lower_bound(f, scheme, alpha, m, [N])
    rep = sup_discrepancy(f, make_weights(scheme, N), alpha)
    measured = scheme.effective_scale(N) ** scheme.nominal_theta * rep.sup_lower
    assert lower <= measured * (1 + 1e-9) + 1e-12


def test_quadrature_error_examples():
    assert quadrature_error(ONE, make_weights("triangular", 9), GOLDEN) == 0
    assert quadrature_error(MONO, make_weights("rectangular", 2), user_alpha(0.2)) <= 1e-15
    assert quadrature_error(COS, make_weights("triangular", 2), user_alpha(0.25)) == pytest.approx(0.5, abs=1e-15)


@settings(max_examples=30)
@given(N=st.integers(1, 200), R=st.integers(1, 30), seed=st.integers(0, 2**32))
def test_quadrature_is_discrepancy_at_origin(N, R, seed):
    f = build_named_function("random_sobolev", d=1, delta=1.0, R=R, seed=seed)
    w = make_weights("smooth_bump", N)
    assert quadrature_error(f, w, GOLDEN) == abs(discrepancy(f, w, GOLDEN, [0.0]))


def test_rate_fit_examples():
    fit = rate_fit([(10, 0.1), (100, 0.01), (1000, 0.001)])
    assert fit.slope == pytest.approx(-1, abs=1e-12) and fit.r2 == pytest.approx(1, abs=1e-12)
    assert fit.window == (10.0, 1000.0) and fit.n_points == 3
    fit = rate_fit([(10, 3.0), (100, 3.0), (1000, 3.0)])
    assert fit.slope == pytest.approx(0, abs=1e-12) and fit.r2 == 1.0
    assert rate_fit([(10, 1e-2), (100, 1e-4), (1000, 1e-6)]).slope == pytest.approx(-2, abs=1e-12)


def test_rate_fit_errors():
    with pytest.raises(ParameterError):
        rate_fit([(10, 1.0), (100, 0.5)])
    with pytest.raises(ParameterError):
        rate_fit([(10, 1.0), (100, 0.0), (1000, 0.1)])
    with pytest.raises(ParameterError):
        rate_fit([(10, 1.0), (100, -1.0), (1000, 0.1)])


@given(st.lists(st.tuples(st.floats(1, 1e6), st.floats(1e-8, 1e3)), min_size=3, max_size=12, unique_by=lambda p: p[0]))
def test_rate_fit_r2_in_unit_interval(points):
    fit = rate_fit(points)
    assert 0.0 <= fit.r2 <= 1.0


def _dyadic():
    return [2**k for k in range(4, 15)]


def test_deterministic_rate_ratio_has_no_trend():
    # X = 1 branch: sup_upper N^2 / ||f||_delta stays bounded, so its fitted slope is flat
    f = build_named_function("random_sobolev", d=1, delta=3.0, R=256, seed=1)
    norm = sobolev_norm(f, 3.0)
    ratios = []
    for N in _dyadic():
        up = sup_upper_bound(f, make_weights("triangular", N), GOLDEN)
        ratios.append((N, up * N**2 / norm))
    assert abs(rate_fit(ratios).slope) < 0.15
    assert max(r for _, r in ratios) < 10 * min(r for _, r in ratios)


def test_logarithmic_ratio_bounded():
    f = build_named_function("random_sobolev", d=1, delta=3.0, R=256, seed=1)
    ms, cs = f.nonzero_part()
    mass = math.fsum((np.abs(cs) * np.log1p(np.abs(ms[:, 0]))).tolist())
    ratios = [
        sup_upper_bound(f, make_weights("logarithmic", N), GOLDEN) * math.log1p(N) / mass for N in _dyadic()
    ]
    assert max(ratios) / min(ratios) <= 3.0
