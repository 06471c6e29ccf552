import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eslab.diophantine import make_alpha
from eslab.errors import ParameterError
from eslab.fourier_fn import SparseFourierFunction, build_named_function, eval_function, sobolev_norm

COS = SparseFourierFunction.from_dict(1, {1: 0.5, -1: 0.5}, real_flag=True)
ONE = SparseFourierFunction.from_dict(1, {0: 1.0}, real_flag=True)


def test_eval_examples():
    mono = build_named_function("monomial", m=1)
    assert eval_function(mono, [0.25]) == pytest.approx(1j, abs=1e-15)
    assert eval_function(ONE, [0.731]) == 1.0
    assert eval_function(COS, [1 / 3]) == pytest.approx(-0.5, abs=1e-15)
    assert isinstance(eval_function(COS, [0.1]), float)


def test_eval_many_points_and_dimensions():
    f = SparseFourierFunction.from_dict(2, {(1, 0): 1.0, (0, 2): 2.0j})
    pts = np.array([[0.0, 0.0], [0.25, 0.125]])
    want = [1 + 2j, np.exp(2j * np.pi * 0.25) + 2j * np.exp(2j * np.pi * 0.25)]
    assert np.allclose(eval_function(f, pts), want, atol=1e-15)


def test_mean_accessor():
    assert ONE.mean == 1.0
    assert COS.mean == 0.0
    f = SparseFourierFunction.from_dict(2, {(0, 0): 3.0, (1, 1): 1.0})
    assert f.mean == 3.0


def test_sobolev_examples():
    assert sobolev_norm(build_named_function("monomial", m=1), 1) == pytest.approx(math.sqrt(2), rel=1e-15)
    assert sobolev_norm(ONE, 7.5) == 1.0
    t5 = build_named_function("t5", d=1, theta=2, R=2)
    assert sobolev_norm(t5, 1) == pytest.approx(math.sqrt(2 * (2 + 5 / 16)), rel=1e-15)
    assert sobolev_norm(t5, 1) == pytest.approx(2.15058, abs=1e-5)


def test_sobolev_rejects_negative_delta():
    with pytest.raises(ParameterError):
        sobolev_norm(ONE, -0.1)


@given(st.floats(min_value=0, max_value=5), st.floats(min_value=0, max_value=5), st.integers(0, 2**32))
def test_sobolev_monotone_in_delta(a, b, seed):
    f = build_named_function("random_sobolev", d=1, delta=1.0, R=20, seed=seed)
    lo, hi = sorted((a, b))
    assert sobolev_norm(f, lo) <= sobolev_norm(f, hi) * (1 + 1e-15)


@given(st.integers(1, 2), st.integers(1, 8), st.integers(0, 2**32))
def test_parseval_on_grid(d, R, seed):
    f = build_named_function("random_sobolev", d=d, delta=1.0, R=R, seed=seed)
    G = 2 * R + 2
    axes = np.arange(G) / G
    pts = np.stack(np.meshgrid(*([axes] * d), indexing="ij"), axis=-1).reshape(-1, d)
    vals = eval_function(f, pts)
    assert abs(np.mean(np.abs(vals) ** 2) - np.sum(np.abs(f.coeffs) ** 2)) <= 1e-10


def test_t5_coefficients():
    f = build_named_function("t5", d=1, theta=2, R=2)
    coeffs = dict(zip(f.freqs[:, 0].tolist(), f.coeffs.real.tolist()))
    assert coeffs == {-2: 0.25, -1: 1.0, 1: 1.0, 2: 0.25}
    assert f.real_flag


def test_t5_log_and_t4_coefficients():
    f = build_named_function("t5_log", d=1, theta=1.5, R=3)
    for m, c in zip(f.freqs[:, 0], f.coeffs.real):
        assert c == pytest.approx(abs(m) ** -1.5 * math.log(1 + abs(m)) ** -1.5, rel=1e-14)
    g = build_named_function("t4_unbounded", d=2, R=3)
    for m, c in zip(g.freqs, g.coeffs.real):
        r = math.hypot(*m)
        assert c == pytest.approx((1 + r * r) ** -1.0 / math.log(2 + r), rel=1e-14)
    assert g.real_flag


def test_even_builders_have_equal_coefficients_at_pm_m():
    for f in (
        build_named_function("t5", d=2, theta=1.2, R=4),
        build_named_function("t5_log", d=1, theta=2, R=9),
        build_named_function("t4_unbounded", d=1, R=9),
    ):
        lookup = {tuple(m): c for m, c in zip(f.freqs.tolist(), f.coeffs.tolist())}
        for m, c in lookup.items():
            assert lookup[tuple(-v for v in m)] == c


def test_monomial():
    f = build_named_function("monomial", m=(1, 0))
    assert f.freqs.tolist() == [[1, 0]]
    assert f.coeffs.tolist() == [1.0]


def test_t6_resonant_golden():
    f = build_named_function("t6_resonant", alpha=make_alpha("golden"), delta=2, count=3)
    assert f.freqs[:, 0].tolist() == [3, 5, 8]
    assert np.allclose(f.coeffs, [1 / 10, 1 / 26, 1 / 65], rtol=1e-15)


def test_t6_resonant_skips_duplicates():
    f = build_named_function("t6_resonant", alpha=make_alpha("liouville_like", sigma=3), delta=4, count=4)
    ms = f.freqs[:, 0].tolist()
    assert len(set(ms)) == 4 and ms[:2] == [1, 8]


def test_t6_resonant_errors():
    with pytest.raises(ParameterError):
        build_named_function("t6_resonant", alpha=make_alpha("golden"), delta=2, count=0)
    with pytest.raises(ParameterError):
        build_named_function("t6_resonant", delta=2, count=3)
    with pytest.raises(ParameterError):
        build_named_function("t6_resonant", alpha=make_alpha("golden"), delta=2, count=50, max_M=1000)


@pytest.mark.parametrize("kind", ["t5", "t5_log", "t4_unbounded", "random_sobolev"])
def test_radius_below_one_rejected(kind):
    with pytest.raises(ParameterError):
        build_named_function(kind, d=1, theta=2, delta=1, R=0.5, seed=1)


def test_unknown_kind():
    with pytest.raises(ParameterError):
        build_named_function("gaussian", R=3)


def test_random_sobolev_properties():
    f = build_named_function("random_sobolev", d=1, delta=3, R=16, seed=4)
    g = build_named_function("random_sobolev", d=1, delta=3, R=16, seed=4)
    assert np.array_equal(f.coeffs, g.coeffs)
    assert f.real_flag
    amp = (1 + f.freqs[:, 0] ** 2.0) ** (-(3 + 0.5 + 0.51) / 2)
    assert np.allclose(np.abs(f.coeffs), amp, rtol=1e-14)
    lo, hi = (sobolev_norm(build_named_function("random_sobolev", d=1, delta=3, R=R, seed=4), 3) for R in (64, 512))
    # the delta-norm converges; the added shell is about 2 int_64^512 m^{-2.02} dm
    shell = 2 * (64**-1.02 - 512**-1.02) / 1.02
    assert hi**2 - lo**2 == pytest.approx(shell, rel=0.05)


def test_t5_sobolev_threshold():
    # ||f_R||^2 ~ sum m^{2 delta - 2 d theta}: finite in the limit iff delta < d theta - d/2
    d, theta = 1, 2.0
    crit = d * theta - d / 2
    radii = (64, 128, 256, 512)
    below = [sobolev_norm(build_named_function("t5", d=d, theta=theta, R=R), crit - 0.25) for R in radii]
    above = [sobolev_norm(build_named_function("t5", d=d, theta=theta, R=R), crit + 0.25) for R in radii]
    assert all(b > a * 1.05 for a, b in zip(above, above[1:]))
    assert above[-1] ** 2 - above[-2] ** 2 >= above[1] ** 2 - above[0] ** 2
    for R, lo, hi in zip(radii, below, below[1:]):
        # doubling R adds the shell sum, which matches 2 * int_R^{2R} m^{-1.5} dm
        integral = 2 * (R**-0.5 - (2 * R) ** -0.5) / 0.5
        assert hi**2 - lo**2 == pytest.approx(integral, rel=0.05)


def test_t4_peak_grows_with_truncation():
    peaks = [eval_function(build_named_function("t4_unbounded", d=1, R=R), [0.0]) for R in (16, 256, 4096, 65536)]
    assert all(b > a for a, b in zip(peaks, peaks[1:]))


def test_hermitian_enforced():
    with pytest.raises(ParameterError):
        SparseFourierFunction.from_dict(1, {1: 1.0, -1: 2.0}, real_flag=True)
    with pytest.raises(ParameterError):
        SparseFourierFunction.from_dict(1, {1: 1.0j}, real_flag=True)
    SparseFourierFunction.from_dict(1, {1: 1.0j, -1: -1.0j}, real_flag=True)


def test_construction_validation():
    with pytest.raises(ParameterError):
        SparseFourierFunction(np.array([[1], [1]]), np.array([1.0, 2.0]))
    with pytest.raises(ParameterError):
        SparseFourierFunction(np.array([[0.5]]), np.array([1.0]))
    with pytest.raises(ParameterError):
        SparseFourierFunction(np.array([[1]]), np.array([np.inf]))
    with pytest.raises(ParameterError):
        SparseFourierFunction(np.array([[1], [2]]), np.array([1.0]))


def test_json_round_trip(tmp_path):
    f = build_named_function("random_sobolev", d=2, delta=1, R=3, seed=9)
    text = f.to_json()
    data = json.loads(text)
    assert set(data) == {"d", "real_flag", "entries"}
    g = SparseFourierFunction.from_json(text)
    assert np.array_equal(g.freqs, f.freqs) and np.array_equal(g.coeffs, f.coeffs) and g.real_flag
    path = tmp_path / "f.json"
    path.write_text(text)
    h = SparseFourierFunction.from_json(str(path))
    assert np.array_equal(h.coeffs, f.coeffs)
