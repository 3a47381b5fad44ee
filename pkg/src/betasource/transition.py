"""Regime classification, source construction and convergence scans.

A scan fixes the family, ``beta``, the number ``n`` of characteristic
polynomials and the source pattern, then for every ``N`` in a list evaluates
``K_{t/N,N}(s; f)`` exactly through the dual integral, divides by the theorem
constant and compares against the limit function.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .charpoly import CharPolyQuery, log_exact_k_gaussian, log_exact_k_laguerre, mc_charpoly_avg
from .combinatorics import DomainError
from .ensembles import EnsembleSpec, Family
from .hyperfun import DEFAULT_MAX_DEGREE, TruncationPolicy
from .scalinglimits import (
    ConstParams,
    Regime,
    crit_b,
    gauss_g,
    gaussian_sub_limit,
    hard_w,
    laguerre_sub_limit,
    log_const_phi,
    log_const_psi,
    pearcey_p,
)

SCHEMA_VERSION = "1"
CRITICAL_RTOL = 1e-12
Y_BOUND = 10.0


# --- regimes ----------------------------------------------------------------------------------


@dataclass(frozen=True)
class RegimeReport:
    family: Family
    regime: Regime
    t: float
    b: float
    saddle_points: tuple
    cubic_roots: tuple = ()
    scaling: dict = field(default_factory=dict)

    def s_values(self, y: Sequence[float], N: int) -> np.ndarray:
        """The theorem's map ``y -> s`` at size ``N``."""
        return scale_s(self.family, self.regime, self.t, self.b, np.asarray(y, dtype=float), N)


def _polish(coeffs: np.ndarray, roots: np.ndarray) -> np.ndarray:
    """A few Newton steps on each root; exact roots are left alone."""
    d = np.polyder(coeffs)
    out = []
    for z in roots:
        for _ in range(4):
            fz, dz = np.polyval(coeffs, z), np.polyval(d, z)
            if fz == 0 or dz == 0:
                break
            z = z - fz / dz
        out.append(complex(z))
    return np.array(out)


def classify_regime(family, t: float, b: float, v: float = 0.0) -> RegimeReport:
    """Sub/critical/supercritical from ``t`` against ``b^2`` (Gaussian) or ``b`` (Laguerre)."""
    family = Family(family)
    if not t > 0 or not b > 0:
        raise DomainError("t and b must be positive")
    if family is Family.GAUSSIAN:
        edge = b**2
        coeffs = np.array([1.0, -v, -(b**2 - t), v * b**2])
        xi = _polish(coeffs, np.roots(coeffs)) if np.any(coeffs[1:]) else np.zeros(3, dtype=complex)
        saddles = tuple(complex(1j * r) for r in xi)
        roots = tuple(complex(r) for r in xi)
    else:
        edge = b
        saddles = (complex(t - b),)
        roots = ()
    if abs(t - edge) <= CRITICAL_RTOL * edge:
        regime = Regime.CRITICAL
    elif t > edge:
        regime = Regime.SUBCRITICAL
    else:
        regime = Regime.SUPERCRITICAL
    return RegimeReport(family, regime, float(t), float(b), saddles, roots, _scaling(family, regime, t, b))


def _scaling(family: Family, regime: Regime, t: float, b: float) -> dict:
    if family is Family.GAUSSIAN:
        if regime is Regime.SUBCRITICAL:
            return {"v": 0.0, "rho": "sqrt(t-b^2)/t", "s": "t/sqrt(t-b^2) * y/N"}
        if regime is Regime.CRITICAL:
            return {"v": 0.0, "rho": "N^(-1/4)", "s": "N^(-3/4) * y"}
        return {"v": 0.0, "rho": "b/sqrt(N t (b^2-t))", "s": "sqrt(t(b^2-t))/b * y/sqrt(N)"}
    if regime is Regime.SUBCRITICAL:
        return {"z0": t - b, "s": "t^2/(t-b) * y/N^2"}
    if regime is Regime.CRITICAL:
        return {"z0": 0.0, "s": "b y/N^(3/2)"}
    return {"z0": t - b, "s": "t(b-t)/b * y/N"}


def scale_s(family, regime, t: float, b: float, y: np.ndarray, N: int) -> np.ndarray:
    family, regime = Family(family), Regime(regime)
    if family is Family.GAUSSIAN:
        if regime is Regime.SUBCRITICAL:
            return t / math.sqrt(t - b**2) * y / N
        if regime is Regime.CRITICAL:
            return N ** (-0.75) * y
        return math.sqrt(t * (b**2 - t)) / b * y / math.sqrt(N)
    if regime is Regime.SUBCRITICAL:
        return t**2 / (t - b) * y / N**2
    if regime is Regime.CRITICAL:
        return b * y / N**1.5
    return t * (b - t) / b * y / N


# --- configuration -------------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """One convergence experiment; loaded from a flat JSON document.

    ``regime`` may be left out when ``t`` is given (it is then classified);
    the critical regime ignores ``t`` and sets it from ``tau`` per ``N``.
    ``f_fixed`` holds the ``r - m`` source entries not tied to ``sigma``.
    """

    family: Family
    beta: float
    n: int
    b: float
    N_list: tuple
    y_grid: tuple
    r: int = 0
    m: int = 0
    t: float | None = None
    regime: Regime | None = None
    a: float | None = None
    tau: float = 0.0
    sigma: tuple = ()
    f_fixed: tuple = ()
    max_degree: int = DEFAULT_MAX_DEGREE
    tail_tol: float = 1e-10
    samples: int = 0
    seed: int = 0
    rtol: float = 1e-9
    const_form: str = "derived"
    out: str | None = None
    format: str = "csv"

    def __post_init__(self):
        family = Family(self.family)
        object.__setattr__(self, "family", family)
        grid = tuple(tuple(float(v) for v in np.atleast_1d(y)) for y in self.y_grid)
        object.__setattr__(self, "y_grid", grid)
        object.__setattr__(self, "N_list", tuple(int(v) for v in self.N_list))
        object.__setattr__(self, "sigma", tuple(float(v) for v in self.sigma))
        object.__setattr__(self, "f_fixed", tuple(float(v) for v in self.f_fixed))
        if self.regime is None:
            if self.t is None:
                raise DomainError("give either t or regime")
            object.__setattr__(self, "regime", classify_regime(family, self.t, self.b).regime)
        else:
            object.__setattr__(self, "regime", Regime(self.regime))
        if self.regime is not Regime.CRITICAL and self.t is None:
            raise DomainError("t is required outside the critical regime")
        if self.n < 1 or any(len(y) != self.n for y in grid) or not grid:
            raise DomainError("every y in y_grid must have length n")
        if any(abs(v) > Y_BOUND for y in grid for v in y):
            raise DomainError(f"y values must lie in [-{Y_BOUND}, {Y_BOUND}]")
        if len(self.sigma) != self.m:
            raise DomainError("sigma must have length m")
        if self.regime is Regime.SUBCRITICAL:
            if self.m != 0:
                raise DomainError("the subcritical regime takes no sigma (m = 0)")
            if len(self.f_fixed) != self.r:
                raise DomainError("f_fixed must hold r entries in the subcritical regime")
            if family is Family.GAUSSIAN and self.n % 2:
                raise DomainError("the subcritical Gaussian limit is only available for even n")
        elif len(self.f_fixed) != self.r - self.m:
            raise DomainError("f_fixed must hold r - m entries")
        if family is Family.LAGUERRE:
            if self.a is None or not self.a > 0:
                raise DomainError("Laguerre experiments need a > 0")
            if any(v < 0 for v in self.sigma) or any(v < 0 for v in self.f_fixed):
                raise DomainError("Laguerre sigma and fixed sources must be nonnegative")
        if family is Family.GAUSSIAN:
            for N in self.N_list:
                if (N + self.r) % 2:
                    raise DomainError(f"N + r must be even for the two-level Gaussian source (N={N}, r={self.r})")
        if self.format not in ("csv", "json"):
            raise DomainError("format must be csv or json")

    @classmethod
    def from_json(cls, text: str, **overrides) -> "ExperimentConfig":
        data = json.loads(text)
        data.update({k: v for k, v in overrides.items() if v is not None})
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise DomainError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    def time_at(self, N: int) -> float:
        if self.regime is Regime.CRITICAL:
            if self.family is Family.GAUSSIAN:
                return self.b**2 / (1 + self.tau / math.sqrt(N))
            return self.b * (1 - self.tau / math.sqrt(N))
        return float(self.t)

    @property
    def policy(self) -> TruncationPolicy:
        return TruncationPolicy(self.max_degree, self.tail_tol)


def build_source(config: ExperimentConfig, N: int, t: float | None = None) -> np.ndarray:
    """Source vector ``f`` of length ``N``: ``m`` sigma-scaled, ``r - m`` fixed, the rest at the bulk value."""
    t = config.time_at(N) if t is None else t
    beta, b, r, m = config.beta, config.b, config.r, config.m
    sigma = np.array(config.sigma)
    if r > N:
        raise DomainError("r cannot exceed N")
    if config.family is Family.GAUSSIAN:
        if (N + r) % 2:
            raise DomainError(f"N + r must be even for the two-level Gaussian source (N={N}, r={r})")
        if config.regime is Regime.CRITICAL:
            scaled = math.sqrt(beta / 2) * N ** (-0.25) * sigma
        elif config.regime is Regime.SUPERCRITICAL:
            scaled = math.sqrt(beta * t * b**2 / (2 * (b**2 - t))) * sigma / math.sqrt(N)
        else:
            scaled = sigma
        half = (N - r) // 2
        bulk = [math.sqrt(beta / 2) * b] * half + [-math.sqrt(beta / 2) * b] * half
    else:
        if config.regime is Regime.CRITICAL:
            scaled = beta * b * sigma / (2 * math.sqrt(N))
        elif config.regime is Regime.SUPERCRITICAL:
            scaled = b * t / (b - t) * sigma / N
        else:
            scaled = sigma
        bulk = [beta * b / 2] * (N - r)
    return np.concatenate([scaled, np.array(config.f_fixed), np.array(bulk)]).astype(float)


# --- scan -----------------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceRow:
    family: str
    regime: str
    N: int
    n: int
    m: int
    beta: float
    tau: float
    y: tuple
    sigma: tuple
    K_value: complex
    normalizer: complex
    ratio: complex
    limit_value: complex
    abs_error: float
    est_error: float
    seed: int
    status: str = "ok"


def _limit_value(config: ExperimentConfig, y: tuple) -> tuple[complex, float]:
    beta, a = config.beta, config.a
    if config.regime is Regime.SUBCRITICAL:
        if config.family is Family.GAUSSIAN:
            return gaussian_sub_limit(beta, y, config.policy), 0.0
        return laguerre_sub_limit(a, beta, y, config.policy), 0.0
    kw = {"max_degree": config.max_degree, "seed": config.seed}
    if config.family is Family.GAUSSIAN:
        if config.regime is Regime.CRITICAL:
            lv = pearcey_p(beta / 2, config.tau, y, config.sigma, **kw)
        else:
            lv = gauss_g(beta / 2, y, config.sigma, **kw)
    else:
        if config.regime is Regime.CRITICAL:
            lv = crit_b(2 * a / beta, beta / 2, config.tau, y, config.sigma, **kw)
        else:
            lv = hard_w(2 * a / beta, beta / 2, y, config.sigma, **kw)
    return lv.value, lv.est_error


def _theorem_factor(config: ExperimentConfig, y: np.ndarray, t: float) -> complex:
    """Log of the explicit factor the supercritical statements put on the ``K`` side."""
    if config.regime is not Regime.SUPERCRITICAL:
        return 0j
    if config.family is Family.GAUSSIAN:
        return complex(t / (2 * config.b**2) * np.sum(y**2))
    return complex(t / config.b * np.sum(y))


def _log_normalizer(config: ExperimentConfig, N: int, t: float) -> complex:
    tail = config.f_fixed
    params = ConstParams(n=config.n, N=N, beta=config.beta, t=t, b=config.b, r=config.r, m=config.m,
                         f_tail=tail, a=config.a)
    if config.family is Family.GAUSSIAN:
        return log_const_psi(config.regime, params, config.const_form)
    return log_const_phi(config.regime, params, config.const_form)


def _row(config: ExperimentConfig, N: int, y: tuple, limits: dict) -> ConvergenceRow:
    t = config.time_at(N)
    base = dict(family=config.family.value, regime=config.regime.value, N=N, n=config.n, m=config.m,
                beta=config.beta, tau=config.tau, y=y, sigma=config.sigma, seed=config.seed)
    try:
        f = build_source(config, N, t)
        yv = np.array(y)
        s = scale_s(config.family, config.regime, t, config.b, yv, N)
        spec = EnsembleSpec(config.family, config.beta, N, t / N, tuple(f), a=config.a)
        query = CharPolyQuery(tuple(s), spec)
        if config.n <= 3:
            exact = (log_exact_k_gaussian if config.family is Family.GAUSSIAN else log_exact_k_laguerre)(
                query, config.rtol, config.max_degree
            )
            log_k, k_rel = exact.log_value, exact.rel_error
        else:
            if config.samples <= 0:
                raise DomainError("n > 3 needs a Monte Carlo sample budget")
            est = mc_charpoly_avg(query, "matrix" if config.beta in (1, 2) else "sde", config.samples, config.seed)
            log_k, k_rel = complex(np.log(est.mean)), est.stderr / abs(est.mean)
        log_norm = _log_normalizer(config, N, t)
        # K_value carries the explicit supercritical factor, so ratio == K_value / normalizer
        log_k = log_k + _theorem_factor(config, yv, t)
        ratio = complex(np.exp(log_k - log_norm))
        limit, limit_err = limits[y]
        return ConvergenceRow(
            K_value=complex(np.exp(log_k)),
            normalizer=complex(np.exp(log_norm)),
            ratio=ratio,
            limit_value=complex(limit),
            abs_error=float(abs(ratio - limit)),
            est_error=float(k_rel * abs(ratio) + limit_err),
            **base,
        )
    except (DomainError, ArithmeticError, RuntimeError, ValueError) as exc:
        nan = complex(math.nan, math.nan)
        return ConvergenceRow(K_value=nan, normalizer=nan, ratio=nan, limit_value=nan,
                              abs_error=math.nan, est_error=math.nan, status=f"failed: {exc}", **base)


def run_convergence_scan(config: ExperimentConfig, workers: int = 1) -> list[ConvergenceRow]:
    """Rows in ``(N, y)`` order; the values do not depend on ``workers``."""
    limits = {}
    for y in config.y_grid:
        try:
            limits[y] = _limit_value(config, y)
        except (DomainError, ArithmeticError, RuntimeError, ValueError):
            limits[y] = (complex(math.nan, math.nan), math.nan)
    tasks = [(N, y) for N in config.N_list for y in config.y_grid]
    if workers <= 1:
        return [_row(config, N, y, limits) for N, y in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: _row(config, job[0], job[1], limits), tasks))


# --- emission -------------------------------------------------------------------------------


def _num(x: float) -> str:
    return f"{x:.17g}"


def csv_header(n: int, m: int) -> list[str]:
    return (
        ["family", "regime", "N", "n", "m", "beta", "tau"]
        + [f"y{i + 1}" for i in range(n)]
        + [f"sigma{k + 1}" for k in range(m)]
        + ["re_ratio", "im_ratio", "re_limit", "im_limit", "abs_error", "est_error", "seed", "status"]
    )


def _csv_record(row: ConvergenceRow) -> list[str]:
    return (
        [row.family, row.regime, str(row.N), str(row.n), str(row.m), _num(row.beta), _num(row.tau)]
        + [_num(v) for v in row.y]
        + [_num(v) for v in row.sigma]
        + [_num(row.ratio.real), _num(row.ratio.imag), _num(row.limit_value.real), _num(row.limit_value.imag),
           _num(row.abs_error), _num(row.est_error), str(row.seed), row.status]
    )


def _json_row(row: ConvergenceRow) -> dict:
    out = {}
    for name, value in dataclasses.asdict(row).items():
        if isinstance(value, complex):
            out[name] = [value.real, value.imag]
        elif isinstance(value, tuple):
            out[name] = list(value)
        else:
            out[name] = value
    return out


def row_from_json(data: dict) -> ConvergenceRow:
    kw = {}
    for f in dataclasses.fields(ConvergenceRow):
        value = data[f.name]
        if f.type in ("complex",):
            value = complex(value[0], value[1])
        elif f.type in ("tuple",):
            value = tuple(value)
        kw[f.name] = value
    return ConvergenceRow(**kw)


def render(rows: Sequence[ConvergenceRow], fmt: str = "csv", n: int | None = None, m: int | None = None,
           metadata: dict | None = None) -> str:
    if fmt == "csv":
        if rows:
            n, m = rows[0].n, rows[0].m
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(csv_header(n or 1, m or 0))
        for row in rows:
            writer.writerow(_csv_record(row))
        return buf.getvalue()
    if fmt == "json":
        doc = {"schema_version": SCHEMA_VERSION, "metadata": metadata or {}, "rows": [_json_row(r) for r in rows]}
        return json.dumps(doc, indent=1, allow_nan=True) + "\n"
    raise DomainError(f"unknown format {fmt!r}")


def emit(rows: Sequence[ConvergenceRow], path: str | os.PathLike, fmt: str = "csv", n: int | None = None,
         m: int | None = None, metadata: dict | None = None) -> None:
    text = render(rows, fmt, n, m, metadata)
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write results to {os.fspath(path)!r}: {exc}") from exc


def load_rows(path: str | os.PathLike) -> list[ConvergenceRow]:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise DomainError(f"unsupported schema version {doc.get('schema_version')!r}")
    return [row_from_json(r) for r in doc["rows"]]


def scan_metadata(config: ExperimentConfig) -> dict:
    return {
        "config": {k: (v.value if hasattr(v, "value") else v) for k, v in dataclasses.asdict(config).items()},
        "prefactor_placement": "supercritical exponential factors are multiplied into K_value before dividing by the constant",
        "constant_form": config.const_form,
    }
