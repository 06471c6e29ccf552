"""Weight families Phi(N, n) and their kernels K_N(t) = sum_n Phi(N, n) e^{2 pi i n t}.

Every family is normalized so that the weights sum to one, hence K_N(0) = 1.
Kernels are evaluated by direct summation; the Dirichlet, Fejer and
cos^{2N} families also have closed forms, which `kernel` prefers because
they keep full relative accuracy where the kernel is tiny.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate

from ._fp import frac_mul, sinpi_mul
from .errors import NumericError, ParameterError

KINDS = (
    "rectangular",
    "triangular",
    "bochner_riesz",
    "binomial",
    "smooth_bump",
    "logarithmic",
    "two_sided",
    "custom",
)
CLOSED_FORM_KINDS = frozenset({"rectangular", "triangular", "binomial"})
NONNEGATIVE_KINDS = frozenset(
    {"rectangular", "triangular", "bochner_riesz", "binomial", "smooth_bump", "logarithmic", "two_sided"}
)

# elements per chunk when materializing (t, n) phase matrices
_CHUNK = 1 << 22


def _bump_exp(t):
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


BUMP_PROFILES = {"exp": _bump_exp}


@dataclass(frozen=True)
class WeightScheme:
    """A named weight family.

    ``theta`` is the two-sided decay exponent for ``two_sided`` and the
    probe exponent for families that decay faster than any power
    (``binomial``, ``smooth_bump``); for ``custom`` it is optional.
    """

    kind: str
    gamma: float | None = None
    theta: float | None = None
    j: int | None = None
    profile: str = "exp"
    sequence: tuple[float, ...] | None = None
    n_min: int = 0
    quad_tol: float = 1e-12

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown weight scheme {self.kind!r}; expected one of {KINDS}")
        if self.kind == "bochner_riesz":
            if self.gamma is None or not self.gamma > 0:
                raise ParameterError("bochner_riesz requires gamma > 0")
        if self.kind == "two_sided":
            if self.theta is None or not self.theta > 0:
                raise ParameterError("two_sided requires theta > 0")
            if self.j is None or int(self.j) != self.j or self.j < 1:
                raise ParameterError("two_sided requires an integer j >= 1")
            if 2 * self.j - 1 < self.theta:
                raise ParameterError(f"two_sided requires 2j - 1 >= theta (j={self.j}, theta={self.theta})")
            if not self.quad_tol > 0:
                raise ParameterError("quad_tol must be positive")
        if self.kind == "smooth_bump" and self.profile not in BUMP_PROFILES:
            raise ParameterError(f"unknown bump profile {self.profile!r}")
        if self.kind == "custom":
            if not self.sequence:
                raise ParameterError("custom scheme requires a non-empty sequence")
            object.__setattr__(self, "sequence", tuple(float(v) for v in self.sequence))
        if self.theta is not None and not self.theta > 0:
            raise ParameterError("theta must be positive")

    @property
    def nominal_theta(self) -> float | None:
        """Decay exponent used for N^theta rescalings (None for log means)."""
        if self.kind == "rectangular":
            return 1.0
        if self.kind == "triangular":
            return 2.0
        if self.kind == "bochner_riesz":
            return self.gamma + 1.0
        if self.kind in ("binomial", "smooth_bump"):
            return 2.0 if self.theta is None else float(self.theta)
        if self.kind == "logarithmic":
            return None
        return None if self.theta is None else float(self.theta)

    def effective_scale(self, N: int) -> int:
        """The scale that plays the role of N in rate statements."""
        if self.kind == "binomial":
            return max(1, math.isqrt(int(N)))
        return int(N)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        for name in ("gamma", "theta", "j"):
            if getattr(self, name) is not None:
                out[name] = getattr(self, name)
        if self.kind == "smooth_bump":
            out["profile"] = self.profile
        if self.kind == "custom":
            out["sequence"] = list(self.sequence)
            out["n_min"] = self.n_min
        if self.kind == "two_sided":
            out["quad_tol"] = self.quad_tol
        return out

    @classmethod
    def from_spec(cls, spec) -> "WeightScheme":
        """Build from a kind name or a mapping with a ``kind`` key."""
        if isinstance(spec, WeightScheme):
            return spec
        if isinstance(spec, str):
            return cls(kind=spec)
        spec = dict(spec)
        if "sequence" in spec and spec["sequence"] is not None:
            spec["sequence"] = tuple(spec["sequence"])
        try:
            return cls(**spec)
        except TypeError as exc:
            raise ParameterError(str(exc)) from None


@dataclass(frozen=True, eq=False)
class WeightSequence:
    """Finitely supported weights Phi(N, n) for n in [n_min, n_max]."""

    N: int
    n_min: int
    values: np.ndarray
    scheme: WeightScheme | None = None

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64)
        if vals.ndim != 1 or vals.size == 0:
            raise ParameterError("weights must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(vals)):
            raise NumericError("weights contain NaN or infinity")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def n_max(self) -> int:
        return self.n_min + self.values.size - 1

    @property
    def n(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    @property
    def total(self) -> float:
        return math.fsum(self.values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "phi"])
        for n, v in zip(self.n.tolist(), self.values.tolist()):
            writer.writerow([n, f"{v:.17g}"])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "N": self.N,
                "n_min": self.n_min,
                "n_max": self.n_max,
                "scheme": None if self.scheme is None else self.scheme.to_dict(),
                "phi": [float(f"{v:.17g}") for v in self.values.tolist()],
            }
        )


@dataclass(frozen=True)
class KernelDecayEstimate:
    theta: float
    K_hat: float
    N_list: tuple[int, ...]
    grid_size: int
    per_N: tuple[float, ...] = field(default=())


def _normalized(N, n_min, raw, scheme) -> WeightSequence:
    raw = np.asarray(raw, dtype=np.float64)
    total = math.fsum(raw.tolist())
    if total == 0.0 or not math.isfinite(total):
        raise NumericError(f"weights for N={N} cannot be normalized (sum={total})")
    return WeightSequence(N=N, n_min=n_min, values=raw / total, scheme=scheme)


def _binomial_raw(N: int):
    # Phi(N, n+1) = Phi(N, n) (N - n) / (N + n + 1), started from Phi(N, 0) = 1;
    # beyond ~40 sqrt(N) every term underflows, so the recurrence stops there.
    n_hi = min(N, int(40.0 * math.sqrt(N)) + 16)
    k = np.arange(n_hi, dtype=np.float64)
    with np.errstate(under="ignore"):
        half = np.concatenate(([1.0], np.cumprod((N - k) / (N + k + 1.0))))
    return np.concatenate((half[:0:-1], half)), -(half.size - 1)


def _trim_zero_tails(w: WeightSequence) -> WeightSequence:
    nz = np.nonzero(w.values)[0]
    if nz.size == 0:
        raise NumericError(f"weights for N={w.N} underflow to zero")
    lo, hi = int(nz[0]), int(nz[-1])
    if lo == 0 and hi == w.values.size - 1:
        return w
    return WeightSequence(N=w.N, n_min=w.n_min + lo, values=w.values[lo : hi + 1], scheme=w.scheme)


def make_weights(scheme: WeightScheme | str, N: int) -> WeightSequence:
    """Normalized weights of ``scheme`` at scale ``N``.

    Families of the form Psi(n/N) keep only the n with Psi(n/N) > 0, so
    triangular weights for N = 2 live on {-1, 0, 1}.
    """
    scheme = WeightScheme.from_spec(scheme)
    if int(N) != N or N < 1:
        raise ParameterError(f"N must be a positive integer, got {N!r}")
    N = int(N)
    kind = scheme.kind
    if kind == "rectangular":
        return _normalized(N, -N, np.ones(2 * N + 1), scheme)
    if kind in ("triangular", "bochner_riesz", "smooth_bump"):
        n = np.arange(-(N - 1), N)
        t = n / N
        if kind == "triangular":
            raw = 1.0 - np.abs(t)
        elif kind == "bochner_riesz":
            raw = (1.0 - t * t) ** scheme.gamma
        else:
            raw = BUMP_PROFILES[scheme.profile](t)
        return _normalized(N, -(N - 1), raw, scheme)
    if kind == "binomial":
        raw, n_min = _binomial_raw(N)
        with np.errstate(under="ignore"):
            return _trim_zero_tails(_normalized(N, n_min, raw, scheme))
    if kind == "logarithmic":
        return _normalized(N, 1, 1.0 / np.arange(1, N + 1), scheme)
    if kind == "two_sided":
        return make_two_sided_weights(scheme.theta, scheme.j, N, scheme.quad_tol)
    return _normalized(N, scheme.n_min, np.asarray(scheme.sequence), scheme)


def kernel_direct(w: WeightSequence, t):
    """K_N(t) by direct summation over the support of ``w``.

    Phases n*t are reduced mod 1 with an error-free product, and the sum
    runs along a contiguous axis so numpy uses pairwise accumulation.
    """
    t_arr = np.asarray(t, dtype=np.float64)
    flat = t_arr.reshape(-1)
    n = w.n.astype(np.float64)
    v = w.values
    out = np.empty(flat.size, dtype=np.complex128)
    step = max(1, _CHUNK // max(1, n.size))
    for lo in range(0, flat.size, step):
        ph = frac_mul(n[None, :], flat[lo : lo + step, None])
        ang = 2.0 * np.pi * ph
        out[lo : lo + step] = (np.cos(ang) * v).sum(axis=1) + 1j * (np.sin(ang) * v).sum(axis=1)
    if t_arr.ndim == 0:
        return complex(out[0])
    return out.reshape(t_arr.shape)


def kernel_closed_form(scheme: WeightScheme | str, N: int, t):
    """Closed-form kernel, or None when the family has none.

    rectangular: sin((2N+1) pi t) / ((2N+1) sin(pi t)); triangular:
    sin^2(pi N t) / (N^2 sin^2(pi t)); binomial: cos^{2N}(pi t). Integer t
    returns the limit 1. ``N`` may be an integer array broadcasting against ``t``.
    """
    scheme = WeightScheme.from_spec(scheme)
    if scheme.kind not in CLOSED_FORM_KINDS:
        return None
    N = np.asarray(N, dtype=np.int64) if np.ndim(N) else int(N)
    t_arr = np.asarray(t, dtype=np.float64)
    u = t_arr - np.round(t_arr)  # [-1/2, 1/2]; every closed form is 1-periodic
    zero = u == 0.0
    us = np.where(zero, 0.25, u)
    den = sinpi_mul(1, us)
    if scheme.kind == "rectangular":
        k = 2 * N + 1
        val = sinpi_mul(k, us) / (k * den)
    elif scheme.kind == "triangular":
        val = (sinpi_mul(N, us) / (N * den)) ** 2
    else:
        with np.errstate(under="ignore"):
            val = np.cos(np.pi * np.abs(us)) ** (2 * N)
    val = np.where(zero, 1.0, val).astype(np.complex128)
    if val.ndim == 0:
        return complex(val)
    return val


def kernel(w: WeightSequence, t):
    """K_N(t), using the closed form when the family of ``w`` has one."""
    if w.scheme is not None and w.scheme.kind in CLOSED_FORM_KINDS:
        return kernel_closed_form(w.scheme, w.N, t)
    return kernel_direct(w, t)


def sup_t_grid(N: int, grid_size: int) -> np.ndarray:
    """Uniform grid on (0, 1/2] plus t = 0 and the kernel extrema/zero candidates."""
    if grid_size < 1:
        raise ParameterError("grid_size must be positive")
    uniform = np.arange(1, grid_size + 1) / (2.0 * grid_size)
    k = np.arange(0, N + 1, dtype=np.float64)
    special = np.concatenate((k / (2 * N + 1), k / (2 * N), (k + 0.5) / N, [0.0]))
    special = special[(special >= 0.0) & (special <= 0.5)]
    return np.unique(np.concatenate((uniform, special)))


def _near_int_dist(t):
    r = t - np.floor(t)
    return np.minimum(r, 1.0 - r)


def estimate_decay_constant(
    scheme: WeightScheme | str,
    theta: float,
    N_list: Sequence[int],
    grid_size: int = 4096,
    scale=None,
) -> KernelDecayEstimate:
    """Smallest K with |K_N(t)| <= K (1 + s ||t||)^-theta on the probe grid.

    ``s`` is the scheme's effective scale (sqrt(N) for binomial) unless
    ``scale`` (a callable N -> s) overrides it.
    """
    scheme = WeightScheme.from_spec(scheme)
    if not theta > 0:
        raise ParameterError("theta must be positive")
    per_N = []
    for N in N_list:
        w = make_weights(scheme, N)
        s = scheme.effective_scale(N) if scale is None else scale(N)
        t = sup_t_grid(N, grid_size)
        vals = np.abs(kernel(w, t)) * (1.0 + s * _near_int_dist(t)) ** theta
        per_N.append(float(np.max(vals)))
    return KernelDecayEstimate(
        theta=float(theta),
        K_hat=max(per_N),
        N_list=tuple(int(N) for N in N_list),
        grid_size=int(grid_size),
        per_N=tuple(per_N),
    )


def _fejer_power_coeffs(N: int, j: int) -> np.ndarray:
    """Coefficients of (sin(pi N t)/sin(pi t))^{2j}, degree (N-1) j, exact in floats."""
    fejer = N - np.abs(np.arange(-(N - 1), N, dtype=np.float64))
    out = fejer
    for _ in range(j - 1):
        out = np.convolve(out, fejer)
    return out


@lru_cache(maxsize=64)
def _power_decay_cosine_coeffs(theta: float, N: int, degree: int, quad_tol: float) -> np.ndarray:
    """2 * int_0^{1/2} (1 + N t)^-theta cos(2 pi n t) dt for n = 0..degree."""
    f = lambda t: (1.0 + N * t) ** (-theta)  # noqa: E731
    out = np.empty(degree + 1)
    for n in range(degree + 1):
        kw = {} if n == 0 else {"weight": "cos", "wvar": 2.0 * np.pi * n}
        res = integrate.quad(f, 0.0, 0.5, epsabs=quad_tol, epsrel=0.0, limit=400, full_output=1, **kw)
        val, err = res[0], res[1]
        # a fourth element is the warning message quad attaches on failure
        if len(res) > 3 or not err <= quad_tol:
            raise NumericError(f"quadrature did not reach tolerance {quad_tol:g} for n={n} (estimate {err:.3g})")
        out[n] = 2.0 * val
    out.flags.writeable = False
    return out


def make_two_sided_weights(theta: float, j: int, N: int, quad_tol: float = 1e-12) -> WeightSequence:
    """Positive weights whose kernel is comparable to (1 + N||t||)^-theta from both sides.

    The kernel is the normalized convolution F_N * G_N with
    F_N(t) = (1 + N||t||)^-theta and G_N(t) = N^{1-2j} (sin(pi N t)/sin(pi t))^{2j},
    so Phi(N, n) is proportional to F_N^(n) G_N^(n) on |n| <= (N-1) j.
    """
    scheme = WeightScheme(kind="two_sided", theta=float(theta), j=int(j), quad_tol=float(quad_tol))
    if int(N) != N or N < 1:
        raise ParameterError(f"N must be a positive integer, got {N!r}")
    N = int(N)
    degree = (N - 1) * scheme.j
    g_hat = _fejer_power_coeffs(N, scheme.j) * float(N) ** (1 - 2 * scheme.j)
    f_half = _power_decay_cosine_coeffs(scheme.theta, N, degree, scheme.quad_tol)
    f_hat = np.concatenate((f_half[:0:-1], f_half))
    return _normalized(N, -degree, f_hat * g_hat, scheme)


def log_kernel_bound(N: int, t, c: float):
    """min{1, c log(1 + 1/||t||) / log(1 + N)}; integer t gives 1."""
    if N < 2:
        raise ParameterError("log_kernel_bound requires N >= 2")
    if not c > 0:
        raise ParameterError("c must be positive")
    t_arr = np.asarray(t, dtype=np.float64)
    d = _near_int_dist(t_arr)
    with np.errstate(divide="ignore"):
        r = c * np.log1p(1.0 / d) / math.log1p(N)
    out = np.where(d == 0.0, 1.0, np.minimum(1.0, r))
    return float(out) if t_arr.ndim == 0 else out


@dataclass(frozen=True)
class LogKernelFit:
    c_upper: float
    c_lower: float
    per_N_upper: tuple[float, ...]
    per_N_lower: tuple[float, ...]
    N_list: tuple[int, ...]


def fit_log_kernel_constants(N_list: Sequence[int], grid_size: int = 4096, floor: float = 1.0) -> LogKernelFit:
    """Fit the constants of the two-sided logarithmic kernel bound.

    c_upper is the smallest c with |K_N(t)| <= c log(1+1/||t||)/log(1+N)
    on the grid; c_lower the largest c for the reverse inequality on
    ||t|| >= floor/N.
    """
    up, low = [], []
    for N in N_list:
        w = make_weights("logarithmic", N)
        t = sup_t_grid(N, grid_size)
        t = t[t > 0]
        ratio = np.abs(kernel_direct(w, t)) * math.log1p(N) / np.log1p(1.0 / t)
        up.append(float(ratio.max()))
        low.append(float(ratio[t >= floor / N].min()))
    return LogKernelFit(
        c_upper=max(up),
        c_lower=min(low),
        per_N_upper=tuple(up),
        per_N_lower=tuple(low),
        N_list=tuple(int(N) for N in N_list),
    )


def sandwich_constants(w: WeightSequence, theta: float, grid_size: int = 4096) -> tuple[float, float, float]:
    """(h, k, max |Im K|) with h <= K_N(t) (1 + N||t||)^theta <= k over the probe grid."""
    t = sup_t_grid(w.N, grid_size)
    K = kernel(w, t)
    scaled = K.real * (1.0 + w.N * t) ** theta
    return float(scaled.min()), float(scaled.max()), float(np.abs(K.imag).max())
