"""Experiment configs, parameter sweeps and report files.

Each experiment sweeps a strictly increasing schedule of scales and writes
``<experiment>.csv`` (one row per scale, leading columns N, measured,
predictor, ratio), ``<experiment>.summary.json`` and a gnuplot-friendly
``<experiment>.dat`` with log-log columns. Output is deterministic given
the config and seed.
"""

from __future__ import annotations

import csv
import json
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from ._fp import frac_lincomb, frac_mul, sinpi_mul
from .diophantine import (
    AlphaVector,
    interval_occupancy_check,
    inverse_dist_sum,
    l2_majorant,
    make_alpha,
    nearest_int_dist,
)
from .discrepancy import quadrature_error, rate_fit, sup_discrepancy, x_factor, y_factor
from .errors import ConfigError, EslabError, ParameterError, SingularInputError
from .fourier_fn import SparseFourierFunction, build_named_function, sobolev_norm
from .weights import (
    WeightScheme,
    estimate_decay_constant,
    fit_log_kernel_constants,
    make_weights,
    sandwich_constants,
)

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

EXPERIMENTS = ("rates", "sandwich", "l2sum", "quadrature", "petersen", "divergence", "distribution")
CONFIG_FIELDS = (
    "experiment",
    "scheme",
    "alpha",
    "function",
    "schedule",
    "delta",
    "theta",
    "sigma",
    "R",
    "grid_size",
    "seed",
    "output",
    "threads",
    "params",
)
PETERSEN_SINGULAR = 1e-12


@dataclass
class ExperimentConfig:
    """One experiment run.

    ``schedule`` lists the scales (N, R or sample counts). ``grid_size``
    None uses the smallest valid x-grid and 0 skips grid maximization.
    Experiment-specific knobs live in ``params``.
    """

    experiment: str
    schedule: list[int]
    scheme: dict = field(default_factory=lambda: {"kind": "triangular"})
    alpha: dict = field(default_factory=lambda: {"kind": "golden"})
    function: dict | None = None
    delta: float | None = None
    theta: float | None = None
    sigma: float | None = None
    R: float | None = None
    grid_size: int | None = None
    seed: int | None = None
    output: str = "."
    threads: int = 1
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}", "experiment")
        self.schedule = expand_schedule(self.schedule)
        if isinstance(self.scheme, str):
            self.scheme = {"kind": self.scheme}
        if isinstance(self.alpha, str):
            self.alpha = {"kind": self.alpha}
        if isinstance(self.function, str):
            self.function = {"kind": self.function}
        if self.threads is None or int(self.threads) < 1:
            raise ConfigError("threads must be a positive integer", "threads")
        self.threads = int(self.threads)
        if self.grid_size is not None and int(self.grid_size) < 0:
            raise ConfigError("grid_size must be nonnegative", "grid_size")
        if self.seed is None and self.uses_randomness():
            raise ConfigError("a seed is required because this experiment draws random numbers", "seed")

    def uses_randomness(self) -> bool:
        if self.experiment == "distribution":
            return True
        if self.alpha.get("kind") == "random_sample" and "seed" not in self.alpha:
            return True
        if self.function and self.function.get("kind") == "random_sobolev" and "seed" not in self.function:
            return True
        beta = self.params.get("beta")
        return isinstance(beta, dict) and beta.get("kind") == "random_sample" and "seed" not in beta

    def to_dict(self) -> dict:
        return asdict(self)


def expand_schedule(spec) -> list[int]:
    """A list of scales, or a geometric mapping {base, min_exp, max_exp}."""
    if isinstance(spec, dict):
        try:
            base = int(spec.get("base", 2))
            lo, hi = int(spec["min_exp"]), int(spec["max_exp"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("geometric schedule needs integer base, min_exp and max_exp", "schedule") from None
        sched = [base**k for k in range(lo, hi + 1)]
    elif isinstance(spec, (list, tuple)):
        sched = list(spec)
    else:
        raise ConfigError("schedule must be a list or a geometric mapping", "schedule")
    try:
        out = [int(v) for v in sched]
    except (TypeError, ValueError):
        raise ConfigError("schedule entries must be integers", "schedule") from None
    if any(o != v for o, v in zip(out, sched)):
        raise ConfigError("schedule entries must be integers", "schedule")
    if not out or any(v < 1 for v in out):
        raise ConfigError("schedule must hold positive integers", "schedule")
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ConfigError("schedule must be strictly increasing", "schedule")
    return out


def _field_line(text: str, name: str) -> int | None:
    pat = re.compile(r'^\s*"?' + re.escape(name) + r'"?\s*[=:]')
    for i, line in enumerate(text.splitlines(), start=1):
        if pat.search(line):
            return i
    return None


def load_config(path: str | os.PathLike, overrides: dict | None = None) -> ExperimentConfig:
    """Read a TOML (``.toml``) or JSON config; ConfigError names the field and line."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, fmt="toml" if path.suffix.lower() == ".toml" else "json", overrides=overrides)


def parse_config(text: str, fmt: str = "json", overrides: dict | None = None) -> ExperimentConfig:
    if fmt == "toml":
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"TOML syntax error: {exc}", line=getattr(exc, "lineno", None)) from None
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"JSON syntax error: {exc.msg}", line=exc.lineno) from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a table/object at the top level")
    for key, val in (overrides or {}).items():
        if val is not None:
            data[key] = val
    unknown = sorted(set(data) - set(CONFIG_FIELDS))
    if unknown:
        raise ConfigError("unknown config field", unknown[0], _field_line(text, unknown[0]))
    for required in ("experiment", "schedule"):
        if required not in data:
            raise ConfigError("missing required field", required)
    try:
        return ExperimentConfig(**data)
    except ConfigError as exc:
        if exc.field is not None and exc.line is None:
            raise ConfigError(str(exc).split(" (field")[0], exc.field, _field_line(text, exc.field)) from None
        raise


def build_alpha(spec: dict, seed: int | None = None) -> AlphaVector:
    spec = dict(spec)
    kind = spec.pop("kind", "golden")
    d = spec.pop("d", 1)
    if kind == "random_sample" and "seed" not in spec:
        spec["seed"] = seed
    return make_alpha(kind, d, **spec)


def build_function(cfg: ExperimentConfig, alpha: AlphaVector) -> SparseFourierFunction:
    if cfg.function is None:
        raise ConfigError("this experiment needs a function", "function")
    spec = dict(cfg.function)
    if "json" in spec:
        return SparseFourierFunction.from_json(spec["json"])
    kind = spec.pop("kind")
    defaults = {"d": alpha.d, "delta": cfg.delta, "theta": cfg.theta, "R": cfg.R, "seed": cfg.seed}
    for k, v in defaults.items():
        if v is not None:
            spec.setdefault(k, v)
    if kind == "t6_resonant":
        spec["alpha"] = alpha
        spec.pop("R", None)
        spec.pop("seed", None)
    return build_named_function(kind, **spec)


def petersen_series(alpha, beta, N: int, M: int) -> float:
    """sum_{m=1}^M ||m beta||^2 / m^2 * sin^2(pi N m alpha) / sin^2(pi m alpha)."""
    a = float(alpha.components[0]) if isinstance(alpha, AlphaVector) else float(alpha)
    b = float(beta.components[0]) if isinstance(beta, AlphaVector) else float(beta)
    if M < 0 or N < 0:
        raise ParameterError("N and M must be nonnegative")
    if M == 0:
        return 0.0
    m = np.arange(1, M + 1, dtype=np.float64)
    ua = frac_mul(m, a)
    if np.any(nearest_int_dist(ua) < PETERSEN_SINGULAR):
        bad = int(m[np.argmax(nearest_int_dist(ua) < PETERSEN_SINGULAR)])
        raise SingularInputError(f"||m alpha|| < 1e-12 at m={bad}")
    ratio = (sinpi_mul(int(N), ua) / sinpi_mul(1, ua)) ** 2
    terms = nearest_int_dist(frac_mul(m, b)) ** 2 / m**2 * ratio
    return math.fsum(terms.tolist())


# experiment drivers: each returns (column names, rows, summary dict)


def _map(cfg, fn, items):
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _scheme(cfg) -> WeightScheme:
    try:
        return WeightScheme.from_spec(cfg.scheme)
    except ParameterError as exc:
        raise ConfigError(str(exc), "scheme") from None


def _scales(cfg, scheme):
    """Weight scales N and the effective scales s(N) used in rate statements."""
    if scheme.kind == "binomial" and not cfg.params.get("raw_schedule", False):
        # the schedule lists effective scales sqrt(N)
        return [s * s for s in cfg.schedule], list(cfg.schedule)
    return list(cfg.schedule), [scheme.effective_scale(N) for N in cfg.schedule]


def _variation(vals) -> float:
    vals = [v for v in vals if v is not None and math.isfinite(v)]
    if not vals or min(vals) <= 0:
        return math.inf
    return max(vals) / min(vals)


def _safe_fit(pairs):
    pairs = [(n, v) for n, v in pairs if v is not None and v > 0 and math.isfinite(v)]
    if len(pairs) < 3:
        return None
    return asdict(rate_fit(pairs))


def _run_rates(cfg, divergence=False):
    scheme = _scheme(cfg)
    alpha = build_alpha(cfg.alpha, cfg.seed)
    f = build_function(cfg, alpha)
    Ns, scales = _scales(cfg, scheme)
    theta = scheme.nominal_theta if cfg.theta is None or scheme.kind != "two_sided" else cfg.theta
    d = f.d
    sigma = cfg.sigma if cfg.sigma is not None else alpha.sigma
    fnorm = None
    if cfg.delta is not None:
        fnorm = sobolev_norm(f, cfg.delta)
    log_mass = None
    if theta is None:
        ms, cs = f.nonzero_part()
        norms = np.sqrt(np.einsum("ij,ij->i", ms, ms).astype(np.float64))
        log_mass = math.fsum((np.abs(cs) * np.log1p(norms)).tolist())

    def predictor(s):
        if theta is None:
            return log_mass / math.log1p(s)
        base = float(s) ** (-theta)
        if divergence:
            return 1.0
        if fnorm is not None and sigma is not None and cfg.delta > d / 2.0:
            return base * x_factor(d, cfg.delta, theta, sigma, s) * fnorm
        return base

    reports = _map(cfg, lambda N: sup_discrepancy(f, make_weights(scheme, N), alpha, cfg.grid_size), Ns)
    rows = []
    for N, s, rep in zip(Ns, scales, reports):
        if divergence:
            if theta is None:
                raise ConfigError("divergence needs a scheme with a decay exponent", "scheme")
            sup = rep.sup_lower if rep.sup_lower is not None else rep.sup_upper
            measured = float(s) ** theta * sup
        else:
            measured = rep.sup_upper
        pred = predictor(s)
        rows.append([N, measured, pred, measured / pred, s, rep.sup_lower, rep.sup_upper])
    cols = ["N", "measured", "predictor", "ratio", "scale", "sup_lower", "sup_upper"]
    summary = {
        "theta": theta,
        "sobolev_norm": fnorm,
        "bandwidth": f.bandwidth,
        "support_size": int(f.freqs.shape[0]),
        "fit_upper": _safe_fit([(r[4], r[6]) for r in rows]),
        "fit_lower": _safe_fit([(r[4], r[5]) for r in rows]),
        "ratio_variation": _variation([r[3] for r in rows]),
    }
    if divergence:
        meas = [r[1] for r in rows]
        mov = [min(meas[max(0, i - 1) : i + 2]) for i in range(len(meas))]
        summary.update(
            {
                "growth": meas[-1] / meas[0] if meas[0] > 0 else math.inf,
                "moving_min": mov,
                "monotone_moving_min": all(b >= a for a, b in zip(mov, mov[1:])),
            }
        )
        summary["diverges"] = bool(summary["growth"] >= 2.0 and summary["monotone_moving_min"])
    return cols, rows, summary


def _run_sandwich(cfg):
    scheme = _scheme(cfg)
    grid = int(cfg.grid_size or cfg.params.get("t_grid", 4096))
    if scheme.kind == "logarithmic":
        fit = fit_log_kernel_constants(cfg.schedule, grid, float(cfg.params.get("floor", 1.0)))
        rows = [
            [N, up, low, up / low, up, low]
            for N, up, low in zip(fit.N_list, fit.per_N_upper, fit.per_N_lower)
        ]
        cols = ["N", "measured", "predictor", "ratio", "c_upper", "c_lower"]
        summary = {
            "c_upper": fit.c_upper,
            "c_lower": fit.c_lower,
            "c_upper_variation": _variation(fit.per_N_upper),
            "c_lower_variation": _variation(fit.per_N_lower),
        }
        return cols, rows, summary
    if scheme.kind == "two_sided":

        def one(N):
            return sandwich_constants(make_weights(scheme, N), scheme.theta, grid)

        res = _map(cfg, one, cfg.schedule)
        rows = [[N, k / h if h > 0 else math.inf, 1.0, k / h if h > 0 else math.inf, h, k, im]
                for N, (h, k, im) in zip(cfg.schedule, res)]
        h_min = min(r[4] for r in rows)
        k_max = max(r[5] for r in rows)
        cols = ["N", "measured", "predictor", "ratio", "h", "k", "max_imag"]
        summary = {
            "h": h_min,
            "k": k_max,
            "k_over_h": k_max / h_min if h_min > 0 else math.inf,
            "positive": bool(h_min > 0),
            "max_imag": max(r[6] for r in rows),
        }
        return cols, rows, summary
    theta = cfg.theta if cfg.theta is not None else scheme.nominal_theta
    if theta is None:
        raise ConfigError("decay probe needs theta", "theta")
    est = _map(cfg, lambda N: estimate_decay_constant(scheme, theta, [N], grid).K_hat, cfg.schedule)
    rows = [[N, k, 1.0, k] for N, k in zip(cfg.schedule, est)]
    summary = {"theta": theta, "K_hat": max(est), "variation": _variation(est), "fit": _safe_fit(zip(cfg.schedule, est))}
    return ["N", "measured", "predictor", "ratio"], rows, summary


def l2_exponent(d: int, sigma: float, theta: float) -> tuple[float, bool]:
    """Growth exponent of the shell sum in R and whether a log factor appears."""
    if math.isclose(theta, 1.0):
        return float(sigma), True
    if theta < 1.0:
        return theta * sigma + d * (1.0 - theta), False
    return theta * sigma, False


def _run_l2sum(cfg):
    alpha = build_alpha(cfg.alpha, cfg.seed)
    if cfg.theta is None:
        raise ConfigError("l2sum needs theta", "theta")
    H = cfg.params.get("H", alpha.H)
    sigma = cfg.sigma if cfg.sigma is not None else alpha.sigma
    if H is None or sigma is None:
        raise ConfigError("l2sum needs H and sigma (from params/sigma or alpha metadata)", "params")

    def one(R):
        s = inverse_dist_sum(alpha, R, cfg.theta)
        maj = l2_majorant(alpha.d, sigma, H, cfg.theta, R)
        occ = interval_occupancy_check(alpha, R, H, sigma)
        return s, maj, bool(occ)

    res = _map(cfg, one, cfg.schedule)
    rows = [[R, s, maj, s / maj, int(ok)] for R, (s, maj, ok) in zip(cfg.schedule, res)]
    expo, has_log = l2_exponent(alpha.d, sigma, cfg.theta)
    fit = _safe_fit([(r[0], r[1]) for r in rows])
    fit_log = _safe_fit([(r[0], r[1] / math.log1p(r[0])) for r in rows])
    summary = {
        "expected_exponent": expo,
        "log_factor": has_log,
        "fit": fit,
        "fit_log_corrected": fit_log,
        "slope": (fit_log if has_log else fit)["slope"] if fit else None,
        "all_below_majorant": all(r[1] <= r[2] for r in rows),
        "all_occupancy": all(r[4] for r in rows),
    }
    return ["R", "measured", "predictor", "ratio", "occupancy_ok"], rows, summary


def _run_quadrature(cfg):
    scheme = _scheme(cfg)
    alpha = build_alpha(cfg.alpha, cfg.seed)
    f = build_function(cfg, alpha)
    sigma = cfg.sigma if cfg.sigma is not None else alpha.sigma
    if cfg.delta is None or sigma is None:
        raise ConfigError("quadrature needs delta and sigma", "delta")
    fnorm = sobolev_norm(f, cfg.delta)
    Ns, scales = _scales(cfg, scheme)
    errs = _map(cfg, lambda N: quadrature_error(f, make_weights(scheme, N), alpha), Ns)
    rows = []
    for N, s, e in zip(Ns, scales, errs):
        pred = float(s) ** (-cfg.delta / sigma) * y_factor(f.d, cfg.delta, sigma, s) * fnorm
        rows.append([N, e, pred, e / pred])
    summary = {
        "sobolev_norm": fnorm,
        "expected_slope": -cfg.delta / sigma,
        "fit": _safe_fit([(s, r[1]) for s, r in zip(scales, rows)]),
        "ratio_variation": _variation([r[3] for r in rows]),
        "support_size": int(f.freqs.shape[0]),
    }
    return ["N", "measured", "predictor", "ratio"], rows, summary


def _run_petersen(cfg):
    alpha = build_alpha(cfg.alpha, cfg.seed)
    beta = build_alpha(cfg.params.get("beta", {"kind": "golden"}), cfg.seed)
    M = int(cfg.params.get("M", 10**4))
    vals = _map(cfg, lambda N: petersen_series(alpha, beta, N, M), cfg.schedule)
    running, rows = 0.0, []
    for N, v in zip(cfg.schedule, vals):
        running = max(running, v)
        rows.append([N, running, vals[0], running / vals[0] if vals[0] > 0 else math.inf, v])
    summary = {
        "M": M,
        "alpha": float(alpha.components[0]),
        "beta": float(beta.components[0]),
        "growth": rows[-1][1] / rows[0][1] if rows[0][1] > 0 else math.inf,
    }
    return ["N", "measured", "predictor", "ratio", "value"], rows, summary


def distribution_cdf(s):
    """CDF of ||t||^{-1/2} for t uniform on [0, 1)."""
    s = np.asarray(s, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return np.where(s < math.sqrt(2.0), 0.0, 1.0 - 2.0 / (s * s))


def _run_distribution(cfg):
    m = np.atleast_1d(np.asarray(cfg.params.get("m", [1, 1]), dtype=np.int64))
    n_max = cfg.schedule[-1]
    rng = np.random.default_rng(cfg.seed)
    comps = rng.random((n_max, m.size))
    t = frac_dots_batch(m, comps)
    dist = nearest_int_dist(t)
    dist = np.where(dist == 0.0, np.finfo(float).tiny, dist)
    g = dist ** -0.5
    rows, pvals = [], []
    for N in cfg.schedule:
        res = stats.kstest(g[:N], distribution_cdf)
        pred = 1.0 / math.sqrt(N)
        rows.append([N, float(res.statistic), pred, float(res.statistic) / pred])
        pvals.append(float(res.pvalue))
    summary = {"m": m.tolist(), "ks": rows[-1][1], "pvalue": pvals[-1], "samples": n_max}
    return ["N", "measured", "predictor", "ratio"], rows, summary


def frac_dots_batch(m: np.ndarray, comps: np.ndarray) -> np.ndarray:
    """m.alpha mod 1 for one integer vector m and many directions (rows of ``comps``)."""
    return frac_lincomb(m.astype(np.float64)[None, :], comps)


_DRIVERS = {
    "rates": _run_rates,
    "divergence": lambda cfg: _run_rates(cfg, divergence=True),
    "sandwich": _run_sandwich,
    "l2sum": _run_l2sum,
    "quadrature": _run_quadrature,
    "petersen": _run_petersen,
    "distribution": _run_distribution,
}


@dataclass
class ExperimentResult:
    columns: list[str]
    rows: list[list]
    summary: dict
    paths: dict[str, str]


def _fmt(v) -> str:
    if v is None:
        return "nan"
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentResult:
    """Run ``cfg`` and write its CSV, JSON summary and .dat files into ``cfg.output``."""
    try:
        cols, rows, summary = _DRIVERS[cfg.experiment](cfg)
    except ParameterError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    summary = {"experiment": cfg.experiment, "config": cfg.to_dict(), **summary}
    paths = {}
    if write:
        out = Path(cfg.output)
        out.mkdir(parents=True, exist_ok=True)
        base = out / cfg.experiment
        with open(f"{base}.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(cols)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
        with open(f"{base}.summary.json", "w", encoding="utf-8") as fh:
            json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(f"{base}.dat", "w", encoding="utf-8") as fh:
            fh.write(f"# log({cols[0]}) log(measured) log(predictor)\n")
            for row in rows:
                logs = [math.log(v) if v is not None and v > 0 else math.nan for v in (row[0], row[1], row[2])]
                fh.write(" ".join(f"{v:.17g}" for v in logs) + "\n")
        paths = {k: f"{base}{ext}" for k, ext in (("csv", ".csv"), ("summary", ".summary.json"), ("dat", ".dat"))}
    return ExperimentResult(cols, rows, summary, paths)


__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "ExperimentResult",
    "EslabError",
    "distribution_cdf",
    "expand_schedule",
    "l2_exponent",
    "load_config",
    "parse_config",
    "petersen_series",
    "run_experiment",
]
