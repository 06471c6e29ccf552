"""Error-free transformations used for accurate phase reduction.

numpy exposes no fused multiply-add, so products are split with the
Veltkamp/Dekker scheme. All helpers are vectorized and broadcast their
arguments.
"""

from __future__ import annotations

import numpy as np

_SPLITTER = 134217729.0  # 2**27 + 1


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def two_prod(a, b):
    """Return ``(p, e)`` with ``p = fl(a*b)`` and ``a*b = p + e`` exactly."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def two_sum(a, b):
    """Knuth's branch-free TwoSum: ``a + b = s + e`` exactly."""
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def frac(x):
    """Fractional part in ``[0, 1)``."""
    x = np.asarray(x, dtype=np.float64)
    r = x - np.floor(x)
    return np.where(r >= 1.0, 0.0, r)


def frac_mul(n, t):
    """``n*t mod 1`` for integer-valued ``n``, accurate to a few ulps of 1.

    The rounded product is reduced exactly (``p - floor(p)`` is exact for
    ``|p| < 2**52``) and the product error is folded back in afterwards.
    """
    p, e = two_prod(n, t)
    r = p - np.floor(p)
    return frac(r + e)


def sinpi(x):
    """``sin(pi*x)`` with the argument reduced modulo 2 before scaling."""
    x = np.asarray(x, dtype=np.float64)
    r = x - 2.0 * np.floor(0.5 * x)  # [0, 2)
    r = np.where(r > 1.0, r - 2.0, r)  # (-1, 1]
    r = np.where(r > 0.5, 1.0 - r, r)
    r = np.where(r < -0.5, -1.0 - r, r)
    return np.sin(np.pi * r)


def sinpi_mul(k, u):
    """``sin(pi*k*u)`` for integer ``k``, reducing ``k*u`` mod 2 exactly."""
    half = frac_mul(k, np.asarray(u, dtype=np.float64) * 0.5)
    return sinpi(2.0 * half)


def frac_lincomb(m, x):
    """``sum_i m[..., i] * x[..., i] mod 1`` with compensated products and sum.

    ``m`` holds integer-valued floats; the last axes of ``m`` and ``x`` are
    summed after broadcasting the leading axes.
    """
    m = np.asarray(m, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    d = m.shape[-1]
    s = np.zeros(np.broadcast_shapes(m.shape[:-1], x.shape[:-1]))
    c = np.zeros_like(s)
    for i in range(d):
        s, e = two_sum(s, frac_mul(m[..., i], x[..., i]))
        c = c + e
    return frac(frac(s) + c)
