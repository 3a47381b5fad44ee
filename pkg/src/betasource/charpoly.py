"""Averaged products of characteristic polynomials.

``K^(G)_{t,N}(s; f) = < prod_{j,k} (s_j - sqrt(2/beta) x_k) >`` over the Gaussian
ensemble and ``K^(L)_{t,N}(s; f) = < prod_{j,k} (s_j - (2/beta) x_k) >`` over the
Laguerre ensemble.  Three routes are provided:

* Monte Carlo over the matrix model or the eigenvalue SDE;
* the duality identities, which trade the ``N``-fold average for an ``n``-fold
  average over the ensemble with ``beta -> 4/beta`` and source ``s``;
* the resulting exact ``n``-dimensional integral for ``K`` (``exact_k_*``),
  evaluated in log form so that ``N`` in the hundreds is fine.

The CUE moment formula lives here too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .combinatorics import DomainError
from .ensembles import (
    EnsembleSpec,
    Family,
    SDEConfig,
    log_gaussian_norm,
    log_laguerre_norm,
    sample_many,
    source_density_batch,
)
from .hyperfun import DEFAULT_MAX_DEGREE, HypergeometricSpec, haar_unitary, hyp0f1_pair, two_set_batch
from .mc import MCEstimate, estimate, run_blocks
from .quadrature import QuadratureError, gaussian_cutoff, integrate_line, integrate_symmetric, log_window


@dataclass(frozen=True)
class CharPolyQuery:
    s: tuple
    spec: EnsembleSpec

    def __post_init__(self):
        s = tuple(complex(v) for v in np.atleast_1d(self.s))
        if len(s) < 1:
            raise DomainError("need at least one characteristic polynomial (n >= 1)")
        object.__setattr__(self, "s", s)

    @property
    def n(self) -> int:
        return len(self.s)

    @property
    def s_array(self) -> np.ndarray:
        return np.array(self.s, dtype=complex)


def _scale(family: Family, beta: float) -> float:
    return math.sqrt(2 / beta) if family is Family.GAUSSIAN else 2 / beta


def log_products(s: np.ndarray, xs: np.ndarray, c: complex) -> np.ndarray:
    """``sum_{j,k} log(s_j - c x_k)`` per row of ``xs``; the exponential is the product."""
    diff = s[None, :, None] - c * xs[:, None, :]
    with np.errstate(divide="ignore"):
        return np.sum(np.log(diff.astype(complex)), axis=(1, 2))


def _stable_exp(logs: np.ndarray) -> tuple[np.ndarray, float]:
    shift = float(np.max(logs.real)) if logs.size else 0.0
    if not np.isfinite(shift):
        shift = 0.0
    return np.exp(logs - shift), shift


# --- Monte Carlo -----------------------------------------------------------------------------


def mc_charpoly_avg(
    query: CharPolyQuery,
    sampler: str = "matrix",
    samples: int = 10_000,
    seed: int = 0,
    workers: int = 1,
    cfg: SDEConfig | None = None,
) -> MCEstimate:
    """Monte Carlo estimate of ``K`` with products accumulated as sums of logs."""
    spec = query.spec
    xs = sample_many(spec, samples, seed, sampler=sampler, cfg=cfg, workers=workers)
    logs = log_products(query.s_array, xs, _scale(spec.family, spec.beta))
    vals, shift = _stable_exp(logs)
    est = estimate(vals, seed)
    factor = math.exp(shift)
    return MCEstimate(est.mean * factor, est.stderr * factor, est.samples, est.seed)


# --- quadrature averages over small ensembles ------------------------------------------------


def _domain(family: Family, beta: float, N: int, t: float, src: np.ndarray, a: float | None) -> tuple[float, float]:
    re = src.real
    if family is Family.GAUSSIAN:
        pad = math.sqrt(t) * (gaussian_cutoff() + 2 * math.sqrt(beta * N)) + 2 * float(np.max(np.abs(src.imag)))
        return float(np.min(re)) - pad, float(np.max(re)) + pad
    reach = math.sqrt(t * (45 + 2 * (a + beta * N))) + math.sqrt(max(float(np.max(np.abs(src))), 0.0))
    return 0.0, reach**2 + 10 * t


def ensemble_average_quad(
    family: Family,
    beta: float,
    N: int,
    t: float,
    source,
    g: Callable[[np.ndarray], np.ndarray],
    a: float | None = None,
    rtol: float = 1e-10,
    max_degree: int = DEFAULT_MAX_DEGREE,
) -> tuple[complex, float]:
    """``int g(x) P(x) dx`` over the ensemble density, by (chamber) quadrature.

    The source may be complex; the density is then its analytic continuation.
    Practical for ``N <= 2``.
    """
    family = Family(family)
    src = np.asarray(source, dtype=complex)
    lo, hi = _domain(family, beta, N, t, src, a)
    splits = sorted({float(v) for v in src.real if lo < v < hi})

    def integrand(xs):
        return source_density_batch(family, beta, N, t, src, xs, a, max_degree) * g(xs)

    return integrate_symmetric(
        integrand, N, lo, hi, rtol=rtol, splits=splits,
        sqrt_start=family is Family.LAGUERRE and a != 1,
    )


# --- duality --------------------------------------------------------------------------------


@dataclass(frozen=True)
class DualityResult:
    """Both sides of a duality identity.

    Quadrature sides are reported as an ``MCEstimate`` with ``samples == 0`` and
    the quadrature error estimate in ``stderr``.
    """

    lhs: MCEstimate
    rhs: MCEstimate
    lhs_method: str
    rhs_method: str

    @property
    def difference(self) -> complex:
        return self.lhs.mean - self.rhs.mean

    def consistent(self, nsigma: float = 3.0, quad_tol: float = 1e-6) -> bool:
        if self.lhs.samples == 0 and self.rhs.samples == 0:
            scale = max(1.0, abs(self.rhs.mean))
            return abs(self.difference) <= quad_tol * scale
        return abs(self.difference) <= nsigma * (self.lhs.stderr + self.rhs.stderr)


def _quad_estimate(value: complex, err: float, seed: int) -> MCEstimate:
    return MCEstimate(complex(value), float(err), 0, int(seed))


def _mc_side(family, beta, N, t, source, a, prod: Callable, samples, seed, workers) -> MCEstimate:
    src = np.asarray(source, dtype=complex)
    if np.any(np.abs(src.imag) > 0):
        raise DomainError("Monte Carlo needs a real source; complex sources are handled by quadrature (n <= 2)")
    spec = EnsembleSpec(family, beta, N, t, tuple(src.real), a=a)
    sampler = "matrix" if beta in (1, 2) and family is Family.GAUSSIAN else "sde"
    if family is Family.LAGUERRE and beta in (1, 2):
        p_dim = 2 * a / beta + N - 1
        if abs(p_dim - round(p_dim)) < 1e-12:
            spec = EnsembleSpec(family, beta, N, t, tuple(src.real), a=a, p_dim=int(round(p_dim)))
            sampler = "matrix"
    xs = sample_many(spec, samples, seed, sampler=sampler, workers=workers)
    logs = prod(xs)
    vals, shift = _stable_exp(logs)
    est = estimate(vals, seed)
    factor = math.exp(shift)
    return MCEstimate(est.mean * factor, est.stderr * factor, est.samples, est.seed)


def _side(method, dim, family, beta, t, source, a, prod, samples, seed, workers, rtol):
    if method == "auto":
        method = "quad" if dim <= 2 else "mc"
    if method == "quad":
        if dim > 2:
            raise DomainError("quadrature sides are limited to dimension <= 2")
        val, err = ensemble_average_quad(family, beta, dim, t, source, lambda xs: np.exp(prod(xs)), a=a, rtol=rtol)
        return _quad_estimate(val, err, seed), "quad"
    if method == "mc":
        return _mc_side(family, beta, dim, t, source, a, prod, samples, seed, workers), "mc"
    raise DomainError(f"unknown method {method!r}")


def duality_check_gaussian(
    n: int,
    N: int,
    beta: float,
    t: float,
    s: Sequence[complex],
    f: Sequence[float],
    samples: int = 100_000,
    seed: int = 0,
    workers: int = 1,
    lhs_method: str = "auto",
    rhs_method: str = "auto",
    rtol: float = 1e-10,
) -> DualityResult:
    """Both sides of the Gaussian duality.

    LHS: ``< prod_{j,k} (s_j - i sqrt(2/beta) x_k) >`` over ``GE_{beta,t,N}(x; f)``.
    RHS: ``< prod_{k,j} (x_j - i sqrt(2/beta) f_k) >`` over ``GE_{4/beta,t,n}(x; s)``.
    """
    s = np.asarray(s, dtype=complex)
    f = np.asarray(f, dtype=float)
    if s.shape != (n,) or f.shape != (N,):
        raise DomainError("s must have length n and f length N")
    if rhs_method != "quad" and n > 2 and np.any(s.imag != 0):
        raise DomainError("complex s with n > 2 is not supported (no direct sampler for the dual side)")
    c = 1j * math.sqrt(2 / beta)
    lhs, lm = _side(lhs_method, N, Family.GAUSSIAN, beta, t, f, None,
                    lambda xs: log_products(s, xs, c), samples, seed, workers, rtol)
    rhs, rm = _side(rhs_method, n, Family.GAUSSIAN, 4 / beta, t, s, None,
                    lambda xs: _dual_products(xs, f, c), samples, seed + 1, workers, rtol)
    return DualityResult(lhs, rhs, lm, rm)


def _dual_products(xs: np.ndarray, f: np.ndarray, c: complex, sign: float = -1.0) -> np.ndarray:
    """``sum_{k,j} log(x_j + sign * c f_k)`` per row."""
    diff = xs[:, :, None].astype(complex) + sign * c * f[None, None, :]
    with np.errstate(divide="ignore"):
        return np.sum(np.log(diff), axis=(1, 2))


def duality_check_laguerre(
    n: int,
    N: int,
    a: float,
    beta: float,
    t: float,
    s: Sequence[complex],
    f: Sequence[float],
    samples: int = 100_000,
    seed: int = 0,
    workers: int = 1,
    lhs_method: str = "auto",
    rhs_method: str = "auto",
    rtol: float = 1e-10,
) -> DualityResult:
    """Both sides of the Laguerre duality.

    LHS: ``< prod_{j,k} (s_j + (2/beta) x_k) >`` over ``LE_{a,beta,t,N}(x; f)``.
    RHS: ``< prod_{k,j} (x_j + (2/beta) f_k) >`` over ``LE_{2a/beta,4/beta,t,n}(x; s)``.
    """
    s = np.asarray(s, dtype=complex)
    f = np.asarray(f, dtype=float)
    if s.shape != (n,) or f.shape != (N,):
        raise DomainError("s must have length n and f length N")
    if np.any(f < 0):
        raise DomainError("Laguerre sources must be nonnegative")
    if rhs_method != "quad" and n > 2 and np.any(s.imag != 0):
        raise DomainError("complex s with n > 2 is not supported (no direct sampler for the dual side)")
    c = 2 / beta
    lhs, lm = _side(lhs_method, N, Family.LAGUERRE, beta, t, f, a,
                    lambda xs: log_products(s, xs, -c), samples, seed, workers, rtol)
    rhs, rm = _side(rhs_method, n, Family.LAGUERRE, 4 / beta, t, s, 2 * a / beta,
                    lambda xs: _dual_products(xs, f, c, sign=1.0), samples, seed + 1, workers, rtol)
    return DualityResult(lhs, rhs, lm, rm)


# --- exact K through the dual integral -------------------------------------------------------


@dataclass(frozen=True)
class ExactK:
    """``K`` stored as a complex logarithm (imaginary part is the phase)."""

    log_value: complex
    rel_error: float

    @property
    def value(self) -> complex:
        return complex(np.exp(self.log_value))


def _phase_power(base_quarter_turns: int, power: int) -> complex:
    """``log(u^power)`` for ``u = exp(i pi/2 * base_quarter_turns)``, reduced mod 2 pi."""
    q = (base_quarter_turns * power) % 4
    if q == 3:
        q = -1
    return 1j * math.pi / 2 * q


def _line_integral(log_integrand, lo, hi, rtol, extra_points=()) -> tuple[complex, float, float]:
    """``int exp(log_integrand)`` in shifted form: returns ``(value, err, shift)``."""
    win_lo, win_hi, top, peaks = log_window(log_integrand, lo, hi)
    points = sorted({*peaks, *[p for p in extra_points if win_lo < p < win_hi]})

    def f(u):
        return complex(np.exp(log_integrand(np.array([u]))[0] - top))

    val, err = integrate_line(f, win_lo, win_hi, points, rtol=rtol, limit=2000)
    return val, err, top


def _check(val: complex, err: float, rtol: float) -> None:
    if not abs(val) > 0 or err > max(100 * rtol, 1e-6) * abs(val):
        raise QuadratureError("dual integral did not reach the requested tolerance", val, err)


def _hyp_scaled(spec_h: HypergeometricSpec, X: np.ndarray, Y: np.ndarray, max_degree: int) -> np.ndarray:
    """Two-set series with arguments rebalanced (the terms only see ``P(X) P(Y)``)."""
    ymax = float(np.max(np.abs(Y)))
    if ymax == 0:
        return np.ones(X.shape[0], dtype=complex)
    return two_set_batch(spec_h, X * ymax, Y / ymax, max_degree)


def log_exact_k_gaussian(
    query: CharPolyQuery,
    rtol: float = 1e-9,
    max_degree: int = DEFAULT_MAX_DEGREE,
) -> ExactK:
    """``K^(G)`` at ensemble time ``T = query.spec.t`` via the dual ``n``-fold integral.

    ``K = (-i)^{nN} T^{-n/2 - n(n-1)/beta} e^{sum s^2/(2T)} / Gamma_{4/beta,n}
    * int e^{-sum x^2/(2T)} prod_{j,k}(x_j - i sqrt(2/beta) f_k) |Delta(x)|^{4/beta}
    0F0^{(beta/2)}(x/T; i s) dx``.
    """
    spec = query.spec
    if spec.family is not Family.GAUSSIAN:
        raise DomainError("query must be for the Gaussian ensemble")
    n, N, beta, T = query.n, spec.N, spec.beta, spec.t
    if n > 3:
        raise DomainError("exact K is limited to n <= 3 (quadrature dimension)")
    s = query.s_array
    cf = 1j * math.sqrt(2 / beta) * spec.f_array
    log_pref = (
        _phase_power(-1, n * N)
        - log_gaussian_norm(4 / beta, n)
        - (n / 2 + n * (n - 1) / beta) * math.log(T)
        + complex(np.sum(s**2)) / (2 * T)
    )

    def log_single(u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            out = -(u**2) / (2 * T) + np.sum(np.log(u[:, None] - cf[None, :]), axis=1)
        return out

    reach = float(np.max(np.abs(cf))) + 3 * math.sqrt(N * T) + 12 * math.sqrt(T) + 2 * float(np.max(np.abs(s.imag))) * n
    lo, hi = -reach, reach
    if n == 1:
        val, err, top = _line_integral(lambda u: log_single(u) + u * (1j * s[0]) / T, lo, hi, rtol)
        _check(val, err, rtol)
        return ExactK(log_pref + top + np.log(val), err / abs(val))

    shift_lo, shift_hi, top1, peaks = log_window(lambda u: log_single(u) + np.abs(s.imag).max() * np.abs(u) / T, lo, hi)
    width = shift_hi - shift_lo
    shift = n * top1 + (2 / beta) * n * (n - 1) * math.log(max(width, 1e-300))
    hspec = HypergeometricSpec((), (), beta / 2, n)

    def integrand(xs):
        with np.errstate(divide="ignore"):
            logs = np.sum(log_single(xs.ravel()).reshape(xs.shape), axis=1)
            logs = logs + (4 / beta) * _log_vdm(xs)
        hyp = _hyp_scaled(hspec, xs / T, 1j * s, max_degree)
        return np.exp(logs - shift) * hyp

    val, err = integrate_symmetric(integrand, n, shift_lo, shift_hi, rtol=rtol, splits=peaks)
    _check(val, err, rtol)
    return ExactK(log_pref + shift + np.log(val), err / abs(val))


def exact_k_gaussian(query: CharPolyQuery, rtol: float = 1e-9, max_degree: int = DEFAULT_MAX_DEGREE) -> complex:
    return log_exact_k_gaussian(query, rtol, max_degree).value


def _log_vdm(xs: np.ndarray) -> np.ndarray:
    n = xs.shape[-1]
    out = np.zeros(xs.shape[0])
    for i in range(n):
        for j in range(i + 1, n):
            out = out + np.log(np.abs(xs[:, j] - xs[:, i]))
    return out


def log_exact_k_laguerre(
    query: CharPolyQuery,
    rtol: float = 1e-9,
    max_degree: int = DEFAULT_MAX_DEGREE,
) -> ExactK:
    """``K^(L)`` at ensemble time ``T = query.spec.t`` via the dual ``n``-fold integral.

    ``K = (-1)^{nN} T^{-2n(a+n-1)/beta} e^{sum s/T} / Z_{2a/beta,4/beta,n}
    * int_{R_+^n} prod x^{2a/beta-1} e^{-x/T} prod_{j,k}(x_j + (2/beta) f_k)
    |Delta(x)|^{4/beta} 0F1^{(beta/2)}(c; x/T; -s/T) dx`` with ``c = 2(a+n-1)/beta``.
    """
    spec = query.spec
    if spec.family is not Family.LAGUERRE:
        raise DomainError("query must be for the Laguerre ensemble")
    n, N, beta, T, a = query.n, spec.N, spec.beta, spec.t, spec.a
    if n > 3:
        raise DomainError("exact K is limited to n <= 3 (quadrature dimension)")
    s = query.s_array
    cf = (2 / beta) * spec.f_array
    a_dual = 2 * a / beta
    c = 2 * (a + n - 1) / beta
    log_pref = (
        _phase_power(2, n * N)
        - log_laguerre_norm(a_dual, 4 / beta, n)
        - (2 * n * (a + n - 1) / beta) * math.log(T)
        + complex(np.sum(s)) / T
    )

    def log_single(u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (a_dual - 1) * np.log(u) - u / T + np.sum(np.log(u[:, None] + cf[None, :]), axis=1)

    hi = float(np.max(cf)) + 3 * N * T + T * (60 + 4 * (a_dual + 2 * n)) + 4 * float(np.max(np.abs(s)))
    if n == 1:
        def log_int(u):
            hyp = hyp0f1_pair(c, u / T, -s[0] / T)
            with np.errstate(divide="ignore"):
                return log_single(u) + np.log(hyp.astype(complex))

        # the window search runs on sqrt(x) so the hard edge is resolved
        w_lo, w_hi, _, _ = log_window(lambda w: log_int(w**2), 1e-300, math.sqrt(hi))
        lo, hi2 = w_lo**2 if w_lo > 1e-150 else 0.0, w_hi**2
        val, err, top = _line_integral(log_int, max(lo, 0.0), hi2, rtol)
        _check(val, err, rtol)
        return ExactK(log_pref + top + np.log(val), err / abs(val))

    w_lo, w_hi, top1, peaks = log_window(lambda w: log_single(w**2), 1e-300, math.sqrt(hi))
    lo, hi2 = (w_lo**2 if w_lo > 1e-150 else 0.0), w_hi**2
    width = hi2 - lo
    shift = n * top1 + (2 / beta) * n * (n - 1) * math.log(max(width, 1e-300))
    hspec = HypergeometricSpec((), (c,), beta / 2, n)

    def integrand(xs):
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.sum(log_single(xs.ravel()).reshape(xs.shape), axis=1)
            logs = logs + (4 / beta) * _log_vdm(xs)
        vals = np.exp(logs - shift)
        vals = np.where(np.isfinite(vals), vals, 0.0)
        return vals * _hyp_scaled(hspec, xs / T, -s / T, max_degree)

    val, err = integrate_symmetric(
        integrand, n, lo, hi2, rtol=rtol, splits=[p**2 for p in peaks], sqrt_start=a_dual != 1 and lo == 0.0
    )
    _check(val, err, rtol)
    return ExactK(log_pref + shift + np.log(val), err / abs(val))


def exact_k_laguerre(query: CharPolyQuery, rtol: float = 1e-9, max_degree: int = DEFAULT_MAX_DEGREE) -> complex:
    return log_exact_k_laguerre(query, rtol, max_degree).value


# --- CUE moments ------------------------------------------------------------------------------


def barnes_g(m: int) -> int:
    """Barnes ``G(m)`` at a positive integer: ``prod_{j<m-1} j!``."""
    if int(m) != m or m < 1:
        raise DomainError("barnes_g is implemented for integers m >= 1")
    out = 1
    for j in range(1, int(m) - 1):
        out *= math.factorial(j)
    return out


def cue_moment(N: int, k: int, exact: bool = False):
    """``< |det(I - U e^{-i theta})|^{2k} >`` over Haar ``U(N)``.

    Equals ``prod_{j=1}^N Gamma(j) Gamma(j + 2k) / Gamma(j + k)^2``; with
    ``exact=True`` (integer ``k``) the product is returned as a ``Fraction``.
    """
    if N < 1 or k < 0:
        raise DomainError("need N >= 1 and k >= 0")
    if exact:
        if int(k) != k:
            raise DomainError("exact evaluation needs integer k")
        k = int(k)
        out = Fraction(1)
        for j in range(1, N + 1):
            out *= Fraction(math.factorial(j - 1) * math.factorial(j + 2 * k - 1), math.factorial(j + k - 1) ** 2)
        return out
    j = np.arange(1, N + 1)
    return float(np.exp(np.sum(special.gammaln(j) + special.gammaln(j + 2 * k) - 2 * special.gammaln(j + k))))


def cue_asymptotic_constant(k: int) -> float:
    """``G(k+1)^2 / G(2k+1)``."""
    return barnes_g(k + 1) ** 2 / barnes_g(2 * k + 1)


def cue_mc_moment(N: int, k: float, samples: int, seed: int, theta: float = 0.0, workers: int = 1) -> MCEstimate:
    """Haar Monte Carlo of ``|det(I - U e^{-i theta})|^{2k}``."""

    def draw(rng, count):
        u = haar_unitary(rng, count, N)
        m = np.eye(N)[None] - u * np.exp(-1j * theta)
        return (np.abs(np.linalg.det(m)) ** (2 * k)).astype(complex)

    return estimate(run_blocks(draw, samples, seed, workers), seed)
