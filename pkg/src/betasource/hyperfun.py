"""Hypergeometric series of one and two sets of variables built on Jack polynomials.

    pFq(a; b; x)      = sum_kappa [a]_kappa / ([b]_kappa h_kappa) P_kappa(x)
    pFq(a; b; x; y)   = sum_kappa [a]_kappa / ([b]_kappa h_kappa) P_kappa(x) P_kappa(y) / P_kappa(1^n)

Both are summed shell by shell in total degree ``|kappa|``.  Evaluation is
vectorised over a batch of ``x`` points, which is what the quadrature
integrands need.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import special

from .combinatorics import (
    DomainError,
    JackParams,
    _orbit,
    deformed_pochhammer,
    enumerate_partitions,
    exact_alpha,
    hook_norm,
    jack_at_ones,
    jack_polynomial,
)
from .mc import MCEstimate, estimate, run_blocks

DEFAULT_MAX_DEGREE = 40
DEFAULT_TAIL_TOL = 1e-10


@dataclass(frozen=True)
class HypergeometricSpec:
    upper: tuple = ()
    lower: tuple = ()
    alpha: float = 1.0
    nvars: int = 1

    def __post_init__(self):
        object.__setattr__(self, "upper", tuple(self.upper))
        object.__setattr__(self, "lower", tuple(self.lower))
        if not self.alpha > 0:
            raise DomainError("alpha must be positive")
        if self.nvars < 1:
            raise DomainError("nvars must be >= 1")
        for b in self.lower:
            for i in range(1, self.nvars + 1):
                v = (i - 1) / self.alpha - b
                if abs(complex(v).imag) < 1e-14 and complex(v).real > -1e-12:
                    r = complex(v).real
                    if abs(r - round(r)) < 1e-12:
                        raise DomainError(
                            f"lower parameter {b} is inadmissible: (i-1)/alpha - b = {r:g} for i={i}"
                        )

    @property
    def p(self) -> int:
        return len(self.upper)

    @property
    def q(self) -> int:
        return len(self.lower)


@dataclass(frozen=True)
class TruncationPolicy:
    max_degree: int = DEFAULT_MAX_DEGREE
    tail_tol: float = DEFAULT_TAIL_TOL

    def __post_init__(self):
        if self.max_degree < 1:
            raise DomainError("max_degree must be >= 1")
        if not self.tail_tol > 0:
            raise DomainError("tail_tol must be positive")


@dataclass(frozen=True)
class SeriesValue:
    value: complex
    last_shell: float
    degrees_used: int
    converged: bool
    tail_estimate: float = 0.0


# --- precomputed shell tables ------------------------------------------------------


@dataclass
class _Shell:
    kappas: list
    coeffs: np.ndarray  # (k, mu) monomial coefficients of P_kappa, rows kappa
    hooks: np.ndarray
    at_ones: np.ndarray
    pochs: dict = field(default_factory=dict)


class _ShellTable:
    """Jack data for all ``|kappa| <= degree`` with ``l(kappa) <= n``."""

    def __init__(self, alpha, n: int):
        self.alpha = alpha
        self.n = n
        self.shells: list[_Shell] = []
        self._lock = threading.Lock()

    def ensure(self, degree: int) -> None:
        with self._lock:
            params = JackParams(self.alpha, self.n)
            for k in range(len(self.shells), degree + 1):
                kappas = enumerate_partitions(k, self.n)
                index = {mu: i for i, mu in enumerate(kappas)}
                coeffs = np.zeros((len(kappas), len(kappas)))
                hooks = np.zeros(len(kappas))
                ones = np.zeros(len(kappas))
                for r, kappa in enumerate(kappas):
                    poly = jack_polynomial(kappa, params)
                    for mu, c in poly.coeffs.items():
                        coeffs[r, index[mu]] = float(c)
                    hooks[r] = float(hook_norm(kappa, self.alpha))
                    ones[r] = float(jack_at_ones(poly))
                    assert ones[r] > 0
                self.shells.append(_Shell(kappas, coeffs, hooks, ones))

    def pochhammer_weights(self, k: int, upper: tuple, lower: tuple) -> np.ndarray:
        shell = self.shells[k]
        key = (upper, lower)
        cached = shell.pochs.get(key)
        if cached is None:
            alpha = float(self.alpha)
            vals = []
            for kappa in shell.kappas:
                num = 1 + 0j
                for a in upper:
                    num *= deformed_pochhammer(complex(a), kappa, alpha)
                for b in lower:
                    num /= deformed_pochhammer(complex(b), kappa, alpha)
                vals.append(num)
            cached = np.array(vals, dtype=complex) / shell.hooks
            shell.pochs[key] = cached
        return cached


_tables: dict = {}
_tables_lock = threading.Lock()


def _table(alpha, n: int, degree: int) -> _ShellTable:
    frac = exact_alpha(alpha)
    key = (frac if frac is not None else float(alpha), n)
    with _tables_lock:
        table = _tables.get(key)
        if table is None:
            table = _ShellTable(frac if frac is not None else float(alpha), n)
            _tables[key] = table
    table.ensure(degree)
    return table


def _monomials(kappas: list, x: np.ndarray, powers: np.ndarray) -> np.ndarray:
    """``m_mu(x)`` for each ``mu`` in ``kappas``; ``powers[..., i, e] = x_i^e``."""
    n = x.shape[-1]
    out = np.zeros(x.shape[:-1] + (len(kappas),), dtype=powers.dtype)
    idx = np.arange(n)
    for c, mu in enumerate(kappas):
        acc = 0
        for a in _orbit(mu.padded(n)):
            acc = acc + np.prod(powers[..., idx, a], axis=-1)
        out[..., c] = acc
    return out


def _powers(x: np.ndarray, degree: int) -> np.ndarray:
    e = np.arange(degree + 1)
    return x[..., :, None] ** e


def jack_shell_values(alpha, x, degree: int) -> list[np.ndarray]:
    """``[P_kappa(x) for kappa in shell k]`` for ``k = 0..degree``."""
    x = np.asarray(x, dtype=complex)
    n = x.shape[-1]
    table = _table(alpha, n, degree)
    pw = _powers(x, degree)
    return [_monomials(table.shells[k].kappas, x, pw) @ table.shells[k].coeffs.T for k in range(degree + 1)]


class _ShellSum:
    """Neumaier-compensated accumulation of shell contributions."""

    def __init__(self, shape):
        self.total = np.zeros(shape, dtype=complex)
        self.comp = np.zeros(shape, dtype=complex)

    def add(self, term):
        t = self.total + term
        big = np.abs(self.total) >= np.abs(term)
        self.comp += np.where(big, (self.total - t) + term, (term - t) + self.total)
        self.total = t

    @property
    def value(self):
        return self.total + self.comp


def _finish(values: np.ndarray, shells: list, policy: TruncationPolicy) -> SeriesValue:
    value = complex(values)
    last = float(abs(shells[-1])) if shells else 0.0
    tail = last
    if len(shells) >= 2 and abs(shells[-2]) > 0:
        ratio = abs(shells[-1]) / abs(shells[-2])
        tail = last * ratio / (1 - ratio) if ratio < 1 else float("inf")
    scale = max(abs(value), 1e-300)
    converged = last <= policy.tail_tol * scale and tail <= policy.tail_tol * scale * 10
    return SeriesValue(value, last, len(shells) - 1, bool(converged), float(tail))


def _series(spec: HypergeometricSpec, x, y, policy: TruncationPolicy, early_stop: bool):
    x = np.asarray(x, dtype=complex)
    if x.shape[-1] != spec.nvars:
        raise DomainError(f"x must have {spec.nvars} entries")
    if y is not None:
        y = np.asarray(y, dtype=complex)
        if y.shape != (spec.nvars,):
            raise DomainError(f"y must have {spec.nvars} entries")
    degree = policy.max_degree
    table = _table(spec.alpha, spec.nvars, 0)
    pw = _powers(x, degree)
    pwy = _powers(y, degree) if y is not None else None
    acc = _ShellSum(x.shape[:-1])
    shells = []
    quiet = 0
    for k in range(degree + 1):
        table.ensure(k)
        shell = table.shells[k]
        w = table.pochhammer_weights(k, spec.upper, spec.lower)
        if y is not None:
            py = _monomials(shell.kappas, y, pwy) @ shell.coeffs.T
            w = w * py / shell.at_ones
        v = shell.coeffs.T @ w
        term = _monomials(shell.kappas, x, pw) @ v
        acc.add(term)
        mag = float(np.max(np.abs(term))) if term.size else 0.0
        shells.append(mag)
        if early_stop and k >= 2:
            # every point must be quiet, relative to its own partial sum
            small = np.abs(term) <= policy.tail_tol * 1e-3 * np.abs(acc.value)
            quiet = quiet + 1 if bool(np.all(small)) else 0
            if quiet >= 3:
                break
    return acc.value, shells


def hyperg_two_set(spec: HypergeometricSpec, x, y, policy: TruncationPolicy | None = None) -> SeriesValue:
    """Two-set series at a single pair of points."""
    policy = policy or TruncationPolicy()
    values, shells = _series(spec, np.asarray(x), y, policy, early_stop=True)
    return _finish(values, shells, policy)


def hyperg_one_set(spec: HypergeometricSpec, x, policy: TruncationPolicy | None = None) -> SeriesValue:
    policy = policy or TruncationPolicy()
    values, shells = _series(spec, np.asarray(x), None, policy, early_stop=True)
    return _finish(values, shells, policy)


def two_set_batch(spec: HypergeometricSpec, xs, y, max_degree: int = DEFAULT_MAX_DEGREE) -> np.ndarray:
    """Two-set series at many ``x`` points (shape ``(M, n)``) with a fixed ``y``.

    Summation stops early once three consecutive shells are negligible at every point.
    """
    policy = TruncationPolicy(max_degree=max_degree)
    values, _ = _series(spec, np.asarray(xs), y, policy, early_stop=True)
    return values


def one_set_batch(spec: HypergeometricSpec, xs, max_degree: int = DEFAULT_MAX_DEGREE) -> np.ndarray:
    policy = TruncationPolicy(max_degree=max_degree)
    values, _ = _series(spec, np.asarray(xs), None, policy, early_stop=True)
    return values


# --- closed forms for one variable ---------------------------------------------------


def hyp0f0_pair(x, y) -> np.ndarray:
    """Two-set 0F0 in one variable: ``exp(x y)``."""
    return np.exp(np.asarray(x, dtype=complex) * y)


def hyp0f1_pair(b, x, y) -> np.ndarray:
    """Two-set 0F1 in one variable: the classical ``0F1(; b; x y)``."""
    z = np.asarray(x, dtype=complex) * y
    if np.isrealobj(b) and np.all(np.abs(z.imag) == 0):
        return special.hyp0f1(b, z.real).astype(complex)
    return special.hyp0f1(b, z)


# --- identities ----------------------------------------------------------------------


def check_1f1_identity(beta: float, n: int, y, policy: TruncationPolicy | None = None) -> float:
    """Relative gap between both sides of
    ``0F0^(beta/2)(1^(n/2), (-1)^(n/2); i y) = exp(-i sum y) 1F1^(beta/2)(n/beta; 2n/beta; 2 i y)``.
    """
    if n % 2:
        raise DomainError("the identity needs an even number of variables")
    policy = policy or TruncationPolicy()
    y = np.asarray(y, dtype=float)
    if y.shape != (n,):
        raise DomainError(f"y must have {n} entries")
    alpha = beta / 2
    x = np.array([1.0] * (n // 2) + [-1.0] * (n // 2))
    lhs = hyperg_two_set(HypergeometricSpec((), (), alpha, n), x, 1j * y, policy).value
    rhs_series = hyperg_one_set(HypergeometricSpec((n / beta,), (2 * n / beta,), alpha, n), 2j * y, policy).value
    rhs = np.exp(-1j * y.sum()) * rhs_series
    return float(abs(lhs - rhs) / max(abs(rhs), 1e-300))


# --- Haar Monte Carlo oracle for the beta = 2 two-set 0F0 -------------------------------


def haar_unitary(rng: np.random.Generator, size: int, n: int) -> np.ndarray:
    """``size`` Haar unitaries: QR of complex Ginibre matrices with the R diagonal made positive."""
    z = (rng.standard_normal((size, n, n)) + 1j * rng.standard_normal((size, n, n))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[:, None, :]


def haar_mc_0f0(N: int, x, f, samples: int, seed: int, workers: int = 1) -> MCEstimate:
    """Monte Carlo of ``int_U(N) exp(tr(Q diag(x) Q^* diag(f))) dQ``."""
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    if x.shape != (N,) or f.shape != (N,):
        raise DomainError("x and f must both have length N")

    def draw(rng, count):
        q = haar_unitary(rng, count, N)
        w = np.abs(q) ** 2
        return np.exp(np.einsum("sij,j,i->s", w, x, f)).astype(complex)

    return estimate(run_blocks(draw, samples, seed, workers), seed)
