"""Nearest-integer distances, test directions alpha and small-divisor counting.

Products m*alpha are reduced mod 1 with error-free transformations, so
distances ||m.alpha|| keep their accuracy for |m|_inf up to 2**30.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._fp import frac, frac_lincomb
from .errors import BudgetError, ParameterError, RangeError, SingularInputError

PROVENANCES = ("golden", "algebraic_field", "random_sample", "liouville_like", "user")
M_CAP = 1 << 30
ENUM_BUDGET = 10**8
# distances at or below this are indistinguishable from zero for |m| within the cap
SINGULAR_DIST = 2.0**-45
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
GOLDEN_H = 0.38

_CHUNK = 1 << 20


@dataclass(frozen=True, eq=False)
class AlphaVector:
    """A direction alpha in (0,1)^d with optional Diophantine metadata (H, sigma)."""

    components: np.ndarray
    provenance: str = "user"
    H: float | None = None
    sigma: float | None = None
    seed: int | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        comps = np.atleast_1d(np.asarray(self.components, dtype=np.float64))
        if comps.ndim != 1 or comps.size == 0:
            raise ParameterError("alpha must be a non-empty vector")
        if not np.all(np.isfinite(comps)):
            raise ParameterError("alpha components must be finite")
        comps = frac(comps)
        comps.flags.writeable = False
        object.__setattr__(self, "components", comps)
        if self.provenance not in PROVENANCES:
            raise ParameterError(f"unknown provenance {self.provenance!r}")
        if self.H is not None and not self.H > 0:
            raise ParameterError("H must be positive")
        if self.sigma is not None and self.sigma < self.d:
            raise ParameterError("sigma must be at least d")
        if self.provenance in ("golden", "algebraic_field") and self.sigma is not None and self.sigma != self.d:
            raise ParameterError("algebraic directions have sigma = d")

    @property
    def d(self) -> int:
        return int(self.components.size)

    def to_json(self) -> str:
        return json.dumps(
            {
                "components": [float(f"{c:.17g}") for c in self.components.tolist()],
                "provenance": self.provenance,
                "H": self.H,
                "sigma": self.sigma,
                "seed": self.seed,
                "params": self.params,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "AlphaVector":
        data = json.loads(text)
        return cls(
            components=np.asarray(data["components"], dtype=np.float64),
            provenance=data.get("provenance", "user"),
            H=data.get("H"),
            sigma=data.get("sigma"),
            seed=data.get("seed"),
            params=data.get("params") or {},
        )


@dataclass(frozen=True)
class ResonanceRecord:
    m: tuple[int, ...]
    dist: float


def nearest_int_dist(t):
    """Distance from t to the nearest integer, in [0, 1/2]."""
    t_arr = np.asarray(t, dtype=np.float64)
    r = t_arr - np.floor(t_arr)
    out = np.minimum(r, 1.0 - r)
    return float(out) if t_arr.ndim == 0 else out


def _as_int_matrix(m, d):
    arr = np.asarray(m)
    if arr.dtype.kind not in "iu":
        if arr.size and not np.all(arr == np.round(arr)):
            raise ParameterError("frequencies must be integers")
        arr = arr.astype(np.int64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1) if d > 1 or arr.size == 1 else arr.reshape(-1, 1)
    if arr.shape[-1] != d:
        raise ParameterError(f"frequency dimension {arr.shape[-1]} does not match alpha dimension {d}")
    return arr


def frac_dots(ms, alpha: AlphaVector) -> np.ndarray:
    """m.alpha mod 1 for each row m of ``ms`` (shape (k, d))."""
    ms = np.asarray(ms)
    if ms.ndim != 2 or ms.shape[1] != alpha.d:
        raise ParameterError("expected an array of shape (k, d)")
    if ms.size and np.max(np.abs(ms)) > M_CAP:
        raise RangeError(f"|m|_inf exceeds the accuracy cap 2^30 (got {int(np.max(np.abs(ms)))})")
    return frac_lincomb(ms.astype(np.float64), alpha.components[None, :])


def frac_dot(m, alpha: AlphaVector) -> float:
    """m.alpha mod 1 in [0, 1), accurate to about 2^-45 for |m|_inf <= 2^30."""
    arr = _as_int_matrix(m, alpha.d)
    if arr.shape[0] != 1:
        raise ParameterError("frac_dot takes a single frequency; use frac_dots for batches")
    return float(frac_dots(arr, alpha)[0])


def _liouville_exponents(sigma: float, terms: int) -> list[int]:
    out = []
    for k in range(1, terms + 1):
        e = math.ceil(sigma**k)
        if e > 1100:
            break
        if not out or e > out[-1]:
            out.append(e)
    return out


def make_alpha(kind: str, d: int = 1, **params) -> AlphaVector:
    """Construct a test direction.

    Kinds: ``golden`` ((sqrt5-1)/2, d=1), ``algebraic_field``
    (frac(2^{i/(d+1)}), i=1..d), ``random_sample`` (uniform, needs ``seed``),
    ``liouville_like`` (sum_k 2^-ceil(sigma^k), d=1, sigma>1) and ``user``
    (explicit ``components``).
    """
    if int(d) != d or d < 1:
        raise ParameterError("d must be a positive integer")
    d = int(d)
    if kind == "golden":
        if d != 1:
            raise ParameterError("golden alpha exists only for d = 1")
        return AlphaVector(np.array([GOLDEN]), "golden", H=params.get("H", GOLDEN_H), sigma=1.0)
    if kind == "algebraic_field":
        comps = np.array([2.0 ** (i / (d + 1)) for i in range(1, d + 1)])
        return AlphaVector(comps, "algebraic_field", H=params.get("H"), sigma=float(d))
    if kind == "random_sample":
        seed = params.get("seed")
        if seed is None:
            raise ParameterError("random_sample requires a seed")
        rng = np.random.default_rng(int(seed))
        comps = rng.random(d)
        while np.any(comps == 0.0):
            comps = rng.random(d)
        return AlphaVector(comps, "random_sample", seed=int(seed))
    if kind == "liouville_like":
        if d != 1:
            raise ParameterError("liouville_like alpha is built only for d = 1")
        sigma = params.get("sigma")
        if sigma is None or not sigma > 1:
            raise ParameterError("liouville_like requires sigma > 1")
        terms = int(params.get("terms", 40))
        exps = _liouville_exponents(float(sigma), terms)
        val = math.fsum(2.0**-e for e in exps)
        return AlphaVector(
            np.array([val]), "liouville_like", params={"sigma": float(sigma), "terms": terms, "exponents": exps}
        )
    if kind == "user":
        comps = params.get("components")
        if comps is None:
            raise ParameterError("user alpha requires components")
        comps = np.atleast_1d(np.asarray(comps, dtype=np.float64))
        if comps.size != d:
            raise ParameterError(f"expected {d} components, got {comps.size}")
        return AlphaVector(comps, "user", H=params.get("H"), sigma=params.get("sigma"))
    raise ParameterError(f"unsupported alpha kind {kind!r} for d={d}")


def liouville_witnesses(alpha: AlphaVector) -> list[ResonanceRecord]:
    """Resonant integers q = 2^{e_k} from the partial-sum denominators of a liouville_like alpha."""
    if alpha.provenance != "liouville_like":
        raise ParameterError("witnesses exist only for liouville_like alpha")
    out = []
    for e in alpha.params["exponents"]:
        if e > 30:
            break
        q = 1 << e
        dist = nearest_int_dist(frac_dot([q], alpha))
        if dist > 0:
            out.append(ResonanceRecord((q,), dist))
    return out


def _half_space_chunks(M: int, d: int):
    """Yield integer blocks covering 0 < |m|_inf <= M, first nonzero coordinate positive, in lex order."""
    width = 2 * M + 1
    # more leading zeros sorts first lexicographically
    for lead in reversed(range(d)):
        # coordinates before `lead` are zero, m[lead] in 1..M, the rest free in [-M, M];
        # one flat index runs over all of them with the last axis fastest
        tail = width ** (d - lead - 1)
        total = M * tail
        for lo in range(0, total, _CHUNK):
            idx = np.arange(lo, min(total, lo + _CHUNK), dtype=np.int64)
            block = np.zeros((idx.size, d), dtype=np.int64)
            for axis in range(d - 1, lead, -1):
                block[:, axis] = idx % width - M
                idx //= width
            block[:, lead] = idx + 1
            yield block


def _check_budget(count: float, what: str):
    if count > ENUM_BUDGET:
        raise BudgetError(f"{what} needs {count:.3g} lattice points, over the budget of {ENUM_BUDGET:.0e}")


def dirichlet_search(alpha: AlphaVector, M: int) -> ResonanceRecord:
    """The m with 0 < |m|_inf <= M minimizing ||m.alpha|| (ties: lexicographically first)."""
    if int(M) != M or M < 1:
        raise ParameterError("M must be a positive integer")
    M, d = int(M), alpha.d
    _check_budget(float(M) ** d, "dirichlet_search")
    best_m, best = None, math.inf
    for block in _half_space_chunks(M, d):
        dist = nearest_int_dist(frac_dots(block, alpha))
        i = int(np.argmin(dist))  # first occurrence keeps lexicographic tie-breaking
        if dist[i] < best:
            best, best_m = float(dist[i]), tuple(int(v) for v in block[i])
    bound = float(M) ** (-d)
    if not best <= bound * (1.0 + 1e-12):
        raise AssertionError(f"Dirichlet bound violated: {best} > {bound}")
    return ResonanceRecord(best_m, best)


def _ball_representatives(alpha_d: int, R: float):
    """Integer vectors with 0 < |m| < R (Euclidean), one per +-pair, in lex order."""
    M = math.ceil(R) - 1
    if M < 1:
        return np.zeros((0, alpha_d), dtype=np.int64)
    blocks = []
    for block in _half_space_chunks(M, alpha_d):
        keep = np.einsum("ij,ij->i", block, block) < R * R
        if keep.any():
            blocks.append(block[keep])
    return np.concatenate(blocks) if blocks else np.zeros((0, alpha_d), dtype=np.int64)


def inverse_dist_sum(alpha: AlphaVector, R: float, theta: float) -> float:
    """sum over 0 < |m| < R of ||m.alpha||^-theta (Euclidean ball, both signs counted)."""
    if not R > 0:
        raise ParameterError("R must be positive")
    _check_budget((2.0 * R) ** alpha.d, "inverse_dist_sum")
    reps = _ball_representatives(alpha.d, R)
    if reps.shape[0] == 0:
        return 0.0
    dist = nearest_int_dist(frac_dots(reps, alpha))
    if np.any(dist <= SINGULAR_DIST):
        i = int(np.argmax(dist <= SINGULAR_DIST))
        raise SingularInputError(f"||m.alpha|| vanishes to floating accuracy at m={tuple(reps[i].tolist())}")
    return 2.0 * math.fsum((dist ** (-theta)).tolist())


def l2_majorant(d: int, sigma: float, H: float, theta: float, R: float) -> float:
    """sum_{n=1}^{ceil((2R)^d)} (n H / (2R)^sigma)^-theta."""
    if not H > 0 or sigma < d or not theta > 0 or R < 1:
        raise ParameterError("l2_majorant needs H > 0, sigma >= d, theta > 0, R >= 1")
    count = math.ceil((2.0 * R) ** d)
    _check_budget(count, "l2_majorant")
    n = np.arange(1, count + 1, dtype=np.float64)
    return math.fsum(((n * H / (2.0 * R) ** sigma) ** (-theta)).tolist())


@dataclass(frozen=True)
class OccupancyResult:
    """Outcome of the interval-occupancy check; truthy when it holds."""

    ok: bool
    kind: str | None = None
    witness: tuple[tuple[int, ...], ...] | None = None
    interval: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def interval_occupancy_check(alpha: AlphaVector, R: float, H: float, sigma: float) -> OccupancyResult:
    """Check that no ||m.alpha|| (0 < |m| < R) falls below w = H/(2R)^sigma and
    each interval [n w, (n+1) w) holds at most one such value (one m per +-pair)."""
    if not R > 0 or not H > 0:
        raise ParameterError("R and H must be positive")
    _check_budget((2.0 * R) ** alpha.d, "interval_occupancy_check")
    reps = _ball_representatives(alpha.d, R)
    if reps.shape[0] == 0:
        return OccupancyResult(True)
    dist = nearest_int_dist(frac_dots(reps, alpha))
    width = H / (2.0 * R) ** sigma
    low = dist < width
    if low.any():
        i = int(np.argmax(low))
        return OccupancyResult(False, "below_first_interval", (tuple(reps[i].tolist()),), 0)
    idx = np.floor(dist / width).astype(np.int64)
    order = np.lexsort((np.arange(idx.size), idx))
    same = np.nonzero(idx[order][1:] == idx[order][:-1])[0]
    if same.size:
        # report the collision whose second member comes first in enumeration order
        pairs = [(order[k], order[k + 1]) for k in same]
        p, q = min(pairs, key=lambda pq: (max(pq), min(pq)))
        p, q = sorted((p, q))
        return OccupancyResult(False, "collision", (tuple(reps[p].tolist()), tuple(reps[q].tolist())), int(idx[p]))
    return OccupancyResult(True)


def estimate_H(alpha: AlphaVector, R: float, sigma: float | None = None) -> float:
    """min over 0 < |m| < R of |m|^sigma ||m.alpha|| (Euclidean |m|)."""
    sigma = float(alpha.d if sigma is None else sigma)
    _check_budget((2.0 * R) ** alpha.d, "estimate_H")
    reps = _ball_representatives(alpha.d, R)
    if reps.shape[0] == 0:
        raise ParameterError("R too small: no frequencies with 0 < |m| < R")
    dist = nearest_int_dist(frac_dots(reps, alpha))
    norms = np.sqrt(np.einsum("ij,ij->i", reps, reps).astype(np.float64))
    return float(np.min(norms**sigma * dist))


def resonance_csv(records) -> str:
    records = list(records)
    d = len(records[0].m) if records else 1
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"m_{i + 1}" for i in range(d)] + ["dist"])
    for r in records:
        writer.writerow(list(r.m) + [f"{r.dist:.17g}"])
    return buf.getvalue()
