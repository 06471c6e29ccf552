"""Sparse trigonometric polynomials on the torus T^d and named test functions."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from ._fp import frac_lincomb
from .diophantine import AlphaVector, dirichlet_search
from .errors import BudgetError, ParameterError

NAMED_KINDS = ("t5", "t5_log", "t4_unbounded", "t6_resonant", "monomial", "random_sobolev")
# random_sobolev decays like (1+|m|^2)^{-(delta + d/2 + margin)/2}
SOBOLEV_MARGIN = 0.51
_CHUNK = 1 << 22


@dataclass(frozen=True, eq=False)
class SparseFourierFunction:
    """f(x) = sum_m coeffs[m] e^{2 pi i m.x} over a finite set of frequencies.

    ``freqs`` has shape (k, d) with distinct rows. With ``real_flag`` the
    coefficients must satisfy c(-m) = conj(c(m)) exactly.
    """

    freqs: np.ndarray
    coeffs: np.ndarray
    real_flag: bool = False

    def __post_init__(self):
        freqs = np.asarray(self.freqs)
        if freqs.ndim == 1:
            freqs = freqs.reshape(-1, 1)
        if freqs.ndim != 2 or freqs.shape[1] < 1:
            raise ParameterError("freqs must have shape (k, d)")
        if freqs.size and not np.all(freqs == np.round(freqs)):
            raise ParameterError("frequencies must be integers")
        freqs = freqs.astype(np.int64)
        coeffs = np.asarray(self.coeffs, dtype=np.complex128).reshape(-1)
        if coeffs.size != freqs.shape[0]:
            raise ParameterError("one coefficient per frequency is required")
        if not np.all(np.isfinite(coeffs)):
            raise ParameterError("coefficients must be finite")
        if np.unique(freqs, axis=0).shape[0] != freqs.shape[0]:
            raise ParameterError("frequencies must be distinct")
        if self.real_flag:
            lookup = {tuple(m): c for m, c in zip(freqs.tolist(), coeffs.tolist())}
            for m, c in lookup.items():
                partner = lookup.get(tuple(-v for v in m))
                if partner is None or partner != c.conjugate():
                    raise ParameterError(f"real_flag requires c(-m) = conj(c(m)); fails at m={m}")
        freqs.flags.writeable = False
        coeffs.flags.writeable = False
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def d(self) -> int:
        return int(self.freqs.shape[1])

    @property
    def bandwidth(self) -> int:
        """Largest |m|_inf in the support (0 for an empty or constant function)."""
        return int(np.max(np.abs(self.freqs))) if self.freqs.size else 0

    @property
    def mean(self) -> complex:
        """The integral of f over T^d, i.e. its zeroth coefficient."""
        hit = np.all(self.freqs == 0, axis=1)
        return complex(self.coeffs[hit][0]) if hit.any() else 0.0j

    def nonzero_part(self):
        """(freqs, coeffs) restricted to m != 0."""
        keep = np.any(self.freqs != 0, axis=1)
        return self.freqs[keep], self.coeffs[keep]

    @classmethod
    def from_dict(cls, d: int, coeffs: dict, real_flag: bool = False) -> "SparseFourierFunction":
        if not coeffs:
            return cls(np.zeros((0, d), dtype=np.int64), np.zeros(0), real_flag)
        keys = [tuple(np.atleast_1d(k).tolist()) for k in coeffs]
        return cls(np.asarray(keys, dtype=np.int64).reshape(-1, d), np.asarray(list(coeffs.values())), real_flag)

    def to_json(self) -> str:
        entries = [
            [m, float(f"{c.real:.17g}"), float(f"{c.imag:.17g}")]
            for m, c in zip(self.freqs.tolist(), self.coeffs.tolist())
        ]
        return json.dumps({"d": self.d, "real_flag": bool(self.real_flag), "entries": entries})

    @classmethod
    def from_json(cls, text: str) -> "SparseFourierFunction":
        """Parse inline JSON, or read it from ``text`` when that names a file."""
        if not text.lstrip().startswith("{") and os.path.exists(text):
            with open(text, encoding="utf-8") as fh:
                text = fh.read()
        data = json.loads(text)
        d = int(data["d"])
        entries = data.get("entries", [])
        freqs = np.asarray([e[0] for e in entries], dtype=np.int64).reshape(-1, d)
        coeffs = np.asarray([complex(e[1], e[2]) for e in entries], dtype=np.complex128)
        return cls(freqs, coeffs, bool(data.get("real_flag", False)))


def eval_function(f: SparseFourierFunction, x):
    """f at one point (shape (d,)) or many points (shape (p, d)).

    Phases m.x are reduced mod 1 before exponentiation. Real-flagged
    functions return real values.
    """
    x_arr = np.asarray(x, dtype=np.float64)
    single = x_arr.ndim <= 1 and (x_arr.ndim == 0 or x_arr.size == f.d)
    pts = x_arr.reshape(-1, f.d)
    out = np.zeros(pts.shape[0], dtype=np.complex128)
    if f.freqs.shape[0]:
        m = f.freqs.astype(np.float64)
        step = max(1, _CHUNK // m.shape[0])
        for lo in range(0, pts.shape[0], step):
            ph = frac_lincomb(m[None, :, :], pts[lo : lo + step, None, :])
            out[lo : lo + step] = np.exp(2j * np.pi * ph) @ f.coeffs
    res = out.real if f.real_flag else out
    return res[0].item() if single else res


def sobolev_norm(f: SparseFourierFunction, delta: float) -> float:
    """(sum_m (1+|m|^2)^delta |c(m)|^2)^{1/2}."""
    if delta < 0:
        raise ParameterError("delta must be nonnegative")
    sq = np.einsum("ij,ij->i", f.freqs, f.freqs).astype(np.float64)
    terms = (1.0 + sq) ** delta * np.abs(f.coeffs) ** 2
    return math.sqrt(math.fsum(terms.tolist()))


def _ball(d: int, R: float, include_zero: bool) -> np.ndarray:
    """Integer vectors with |m| <= R (Euclidean), lexicographic order."""
    M = int(math.floor(R))
    if (2 * M + 1) ** d > 10**8:
        raise BudgetError(f"truncation radius {R} in d={d} exceeds the enumeration budget")
    axes = np.arange(-M, M + 1)
    grid = np.stack(np.meshgrid(*([axes] * d), indexing="ij"), axis=-1).reshape(-1, d)
    sq = np.einsum("ij,ij->i", grid, grid)
    keep = sq <= R * R + 1e-9
    if not include_zero:
        keep &= sq > 0
    return grid[keep].astype(np.int64)


def _fibonacci_schedule(start=(3, 5)):
    a, b = start
    while True:
        yield a
        a, b = b, a + b


def _resonant_set(alpha: AlphaVector, count: int, max_M: int):
    chosen = []
    for M in _fibonacci_schedule():
        if M > max_M:
            raise ParameterError(f"found only {len(chosen)} of {count} resonant frequencies with M <= {max_M}")
        rec = dirichlet_search(alpha, M)
        if rec.m not in chosen:
            chosen.append(rec.m)
        if len(chosen) == count:
            return chosen


def build_named_function(kind: str, **params) -> SparseFourierFunction:
    """Named test functions, truncated to |m| <= R where a radius applies.

    t5            |m|^{-d theta}, m != 0
    t5_log        |m|^{-d theta} log^{-theta}(1+|m|), m != 0
    t4_unbounded  (1+|m|^2)^{-d/2} / log(2+|m|)
    t6_resonant   (1+|m|^2)^{-delta/2} on near-resonant m from successive
                  Dirichlet searches with M = 3, 5, 8, ... (needs alpha, count)
    monomial      a single coefficient (default 1) at m
    random_sobolev (1+|m|^2)^{-(delta+d/2+0.51)/2} times seeded unit phases,
                  Hermitian so f is real
    """
    if kind not in NAMED_KINDS:
        raise ParameterError(f"unknown function kind {kind!r}; expected one of {NAMED_KINDS}")
    if kind == "monomial":
        m = np.atleast_1d(np.asarray(params.get("m", 1), dtype=np.int64))
        return SparseFourierFunction(m.reshape(1, -1), [complex(params.get("coeff", 1.0))])
    if kind == "t6_resonant":
        alpha = params.get("alpha")
        if not isinstance(alpha, AlphaVector):
            raise ParameterError("t6_resonant requires an AlphaVector 'alpha'")
        count = int(params.get("count", 0))
        if count < 1:
            raise ParameterError("t6_resonant requires count >= 1")
        delta = float(params["delta"])
        freqs = np.asarray(_resonant_set(alpha, count, int(params.get("max_M", 10**7))), dtype=np.int64)
        sq = np.einsum("ij,ij->i", freqs, freqs).astype(np.float64)
        return SparseFourierFunction(freqs, (1.0 + sq) ** (-delta / 2.0))

    d = int(params.get("d", 1))
    R = params.get("R")
    if R is None or not R >= 1:
        raise ParameterError("truncation radius R must be at least 1")
    if kind == "random_sobolev":
        seed = params.get("seed")
        if seed is None:
            raise ParameterError("random_sobolev requires a seed")
        delta = float(params["delta"])
        ms = _ball(d, R, include_zero=True)
        sq = np.einsum("ij,ij->i", ms, ms).astype(np.float64)
        amp = (1.0 + sq) ** (-(delta + d / 2.0 + SOBOLEV_MARGIN) / 2.0)
        # one phase per +-pair; the member whose first nonzero entry is positive draws it
        nz = ms != 0
        first = np.where(nz.any(axis=1), ms[np.arange(len(ms)), np.argmax(nz, axis=1)], 0)
        rng = np.random.default_rng(int(seed))
        idx = {tuple(m): i for i, m in enumerate(ms.tolist())}
        phases = np.ones(len(ms), dtype=np.complex128)
        pos = np.nonzero(first > 0)[0]
        phases[pos] = np.exp(2j * np.pi * rng.random(pos.size))
        for i in pos:
            phases[idx[tuple((-ms[i]).tolist())]] = np.conj(phases[i])
        return SparseFourierFunction(ms, amp * phases, real_flag=True)

    include_zero = kind == "t4_unbounded"
    ms = _ball(d, R, include_zero=include_zero)
    norm = np.sqrt(np.einsum("ij,ij->i", ms, ms).astype(np.float64))
    if kind == "t4_unbounded":
        c = (1.0 + norm**2) ** (-d / 2.0) / np.log(2.0 + norm)
    else:
        theta = float(params["theta"])
        c = norm ** (-d * theta)
        if kind == "t5_log":
            c = c * np.log1p(norm) ** (-theta)
    return SparseFourierFunction(ms, c, real_flag=True)
