"""Weighted discrepancy of sparse trigonometric polynomials along x + n alpha.

For f = sum_m c(m) e^{2 pi i m.x} the discrepancy
D(x) = sum_n Phi(N, n) f(x + n alpha) - c(0) equals
sum_{m != 0} K_N(m.alpha) c(m) e^{2 pi i m.x}, which is how it is evaluated
by default. The sup over x is bracketed between a grid maximum and the
coefficient sum sum_{m != 0} |K_N(m.alpha)| |c(m)|.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ._fp import frac_lincomb, frac_mul
from .diophantine import AlphaVector, frac_dots
from .errors import DomainError, ParameterError
from .fourier_fn import SparseFourierFunction, eval_function
from .weights import WeightScheme, WeightSequence, kernel, kernel_closed_form, make_weights

MAX_GRID_DIM = 3
_CHUNK = 1 << 22


@dataclass(frozen=True)
class DiscrepancyReport:
    """Bracket sup_lower <= sup_x |D(x)| <= sup_upper at one scale N.

    ``sup_lower`` is None when the grid maximization was skipped.
    """

    N: int
    sup_lower: float | None
    sup_upper: float
    grid_size: int
    elapsed: float


@dataclass(frozen=True)
class RateFit:
    """Least-squares line through (log N, log value)."""

    slope: float
    intercept: float
    r2: float
    window: tuple[float, float]
    n_points: int


def _kernel_at_freqs(f: SparseFourierFunction, w: WeightSequence, alpha: AlphaVector):
    ms, cs = f.nonzero_part()
    if ms.shape[0] == 0:
        return ms, cs, np.zeros(0, dtype=np.complex128)
    if ms.shape[1] != alpha.d:
        raise ParameterError(f"function dimension {ms.shape[1]} does not match alpha dimension {alpha.d}")
    return ms, cs, np.asarray(kernel(w, frac_dots(ms, alpha)), dtype=np.complex128).reshape(-1)


def discrepancy(f: SparseFourierFunction, w: WeightSequence, alpha: AlphaVector, x, mode: str = "freq") -> complex:
    """D(x) = sum_n Phi(N, n) f(x + n alpha) - mean(f).

    ``mode="freq"`` sums K_N(m.alpha) c(m) e^{2 pi i m.x} over the support;
    ``mode="space"`` averages f along the orbit directly.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.size != f.d:
        raise ParameterError(f"x must have {f.d} coordinates")
    if mode == "freq":
        ms, cs, K = _kernel_at_freqs(f, w, alpha)
        if ms.shape[0] == 0:
            return 0j
        ph = frac_lincomb(ms.astype(np.float64), x[None, :])
        return complex(np.sum(K * cs * np.exp(2j * np.pi * ph)))
    if mode == "space":
        n = w.n.astype(np.float64)
        # orbit points x + n alpha reduced mod 1 coordinate-wise
        pts = (x[None, :] + frac_mul(n[:, None], alpha.components[None, :])) % 1.0
        vals = np.asarray(eval_function(f, pts), dtype=np.complex128).reshape(-1)
        return complex(np.sum(w.values * vals) - f.mean)
    raise ParameterError(f"unknown mode {mode!r}; expected 'freq' or 'space'")


def sup_upper_bound(f: SparseFourierFunction, w: WeightSequence, alpha: AlphaVector) -> float:
    """sum_{m != 0} |K_N(m.alpha)| |c(m)|."""
    _, cs, K = _kernel_at_freqs(f, w, alpha)
    return math.fsum((np.abs(K) * np.abs(cs)).tolist())


def sup_discrepancy(
    f: SparseFourierFunction, w: WeightSequence, alpha: AlphaVector, grid_size: int | None = None
) -> DiscrepancyReport:
    """Bracket the sup over x of |D(x)|.

    The lower end maximizes |D| over the uniform grid k/G, G = ``grid_size``
    per axis (default 2*bandwidth+1); phases m.k mod G are exact integers.
    ``grid_size=0`` skips the grid and reports only the upper end.
    """
    start = time.perf_counter()
    ms, cs, K = _kernel_at_freqs(f, w, alpha)
    upper = math.fsum((np.abs(K) * np.abs(cs)).tolist())
    B = f.bandwidth
    G = 2 * B + 1 if grid_size is None else int(grid_size)
    lower = None
    if G != 0:
        if G < 2 * B + 1:
            raise ParameterError(f"grid_size {G} is too coarse for bandwidth {B}; need at least {2 * B + 1}")
        if f.d > MAX_GRID_DIM:
            raise ParameterError(f"grid maximization supports d <= {MAX_GRID_DIM}")
        lower = _grid_max(ms, K * cs, G) if ms.shape[0] else 0.0
    return DiscrepancyReport(
        N=w.N, sup_lower=lower, sup_upper=upper, grid_size=G, elapsed=time.perf_counter() - start
    )


def _grid_max(ms: np.ndarray, amps: np.ndarray, G: int) -> float:
    d = ms.shape[1]
    roots = np.exp(2j * np.pi * np.arange(G) / G)
    mred = np.mod(ms, G)
    total = G**d
    step = max(1, _CHUNK // ms.shape[0])
    best = 0.0
    for lo in range(0, total, step):
        idx = np.arange(lo, min(total, lo + step), dtype=np.int64)
        ks = np.empty((idx.size, d), dtype=np.int64)
        rest = idx.copy()
        for axis in range(d - 1, -1, -1):
            ks[:, axis] = rest % G
            rest //= G
        phase = np.mod(ks @ mred.T, G)
        vals = roots[phase] @ amps
        best = max(best, float(np.max(np.abs(vals))))
    return best


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)


def _check_common(d, delta, sigma):
    if not delta > d / 2.0:
        raise DomainError(f"requires delta > d/2 (delta={delta}, d={d})")
    if sigma < d:
        raise DomainError(f"requires sigma >= d (sigma={sigma}, d={d})")


def _power_branch(N, num, sigma, d, branch):
    if _close(sigma, d):
        raise DomainError(f"branch {branch!r} divides by sigma - d, which vanishes")
    return float(N) ** (num / (sigma - d))


def x_factor(d: int, delta: float, theta: float, sigma: float, N: float) -> float:
    """Correction X(d, delta, theta, sigma, N) to the deterministic rate N^-theta."""
    _check_common(d, delta, sigma)
    if not theta > 0:
        raise DomainError("requires theta > 0")
    L = math.log1p(N)
    if theta < 0.5 and not _close(theta, 0.5):
        crit = theta * sigma - d * (theta - 0.5)
        if _close(delta, crit):
            return math.sqrt(L)
        if delta < crit:
            return _power_branch(N, -delta + theta * sigma - d * theta + d / 2.0, sigma, d, "theta<1/2, delta below threshold")
        return 1.0
    if _close(theta, 0.5):
        crit = sigma / 2.0
        if _close(delta, crit):
            return L
        if delta < crit:
            return _power_branch(N, sigma / 2.0 - delta, sigma, d, "theta=1/2, delta<sigma/2") * math.sqrt(L)
        return 1.0
    crit = theta * sigma
    if _close(delta, crit):
        return math.sqrt(L)
    if delta < crit:
        return float(N) ** (theta * (theta * sigma - delta) / (theta * sigma - d / 2.0))
    return 1.0


def y_factor(d: int, delta: float, sigma: float, N: float) -> float:
    """Correction Y(d, delta, sigma, N) to the quadrature rate N^{-delta/sigma}."""
    _check_common(d, delta, sigma)
    L = math.log1p(N)
    r = delta / sigma
    if _close(r, 0.5):
        return L
    if r < 0.5:
        return _power_branch(N, d * (0.5 - r), sigma, d, "delta/sigma<1/2")
    return math.sqrt(L)


def _scale_theta(scheme: WeightScheme, theta: float | None) -> float:
    th = scheme.nominal_theta if theta is None else theta
    if th is None:
        raise ParameterError(f"scheme {scheme.kind!r} has no nominal exponent; pass theta")
    return float(th)


def t3_lower_bound(
    f: SparseFourierFunction,
    scheme,
    alpha: AlphaVector,
    m,
    N_list: Iterable[int],
    theta: float | None = None,
) -> float:
    """max over N of s(N)^theta |K_N(m.alpha)| |c(m)|, s the scheme's effective scale.

    A finite-N lower bound for the limsup of the rescaled discrepancy.
    """
    scheme = WeightScheme.from_spec(scheme)
    th = _scale_theta(scheme, theta)
    m = np.atleast_1d(np.asarray(m, dtype=np.int64))
    hit = np.all(f.freqs == m[None, :], axis=1) if f.freqs.size else np.zeros(0, bool)
    if not hit.any() or f.coeffs[hit][0] == 0:
        return 0.0
    cm = abs(f.coeffs[hit][0])
    t = float(frac_dots(m.reshape(1, -1), alpha)[0])
    Ns = np.asarray(list(N_list), dtype=np.int64)
    s = np.array([scheme.effective_scale(int(N)) for N in Ns], dtype=np.float64)
    closed = kernel_closed_form(scheme, Ns, t)
    if closed is not None:
        K = np.abs(np.asarray(closed)).reshape(-1)
    else:
        K = np.array([abs(kernel(make_weights(scheme, int(N)), t)) for N in Ns])
    return float(np.max(s**th * K) * cm)


def quadrature_error(f: SparseFourierFunction, w: WeightSequence, alpha: AlphaVector) -> float:
    """|sum_n Phi(N, n) f(n alpha) - mean(f)|."""
    return abs(discrepancy(f, w, alpha, np.zeros(f.d), mode="freq"))


def rate_fit(points: Sequence[tuple[float, float]]) -> RateFit:
    """Fit log(value) = slope * log(N) + intercept by least squares."""
    pts = list(points)
    if len(pts) < 3:
        raise ParameterError("rate_fit needs at least 3 points")
    N = np.array([p[0] for p in pts], dtype=np.float64)
    v = np.array([p[1] for p in pts], dtype=np.float64)
    if np.any(N <= 0) or np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise ParameterError("rate_fit needs positive N and positive finite values")
    x, y = np.log(N), np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    if ss_tot <= 1e-24 * max(1.0, float(np.sum(y**2))):
        r2 = 1.0 if ss_res <= 1e-24 * max(1.0, float(np.sum(y**2))) else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return RateFit(
        slope=float(slope),
        intercept=float(intercept),
        r2=float(min(1.0, max(0.0, r2))),
        window=(float(N.min()), float(N.max())),
        n_points=len(pts),
    )
