"""Limit functions of the phase transitions and their normalising constants.

The four Selberg-type functions (``alpha`` is the Jack parameter, ``n = len(y)``,
``m = len(sigma)``):

* ``P^(alpha)_{n,m}(tau; y; sigma)``: quartic weight ``exp(-u^4/4 - tau u^2/2)`` on R^n,
  factors ``(i u_j + sigma_k)``, kernel ``0F0(iu; y)``, normalised by ``Gamma_{2/alpha,n}``;
* ``G^(alpha)_{n,m}(y; sigma)``: as ``P`` with weight ``exp(-(u^2 - y^2)/2)``;
* ``B^(a,alpha)_{n,m}(tau; y; sigma)``: weight ``u^{a-1} exp(-tau u - u^2/2)`` on R_+^n,
  factors ``(u_i + sigma_j)``, kernel ``0F1(a + (n-1)/alpha; u; -y)``, normalised by
  ``Z_{a,2/alpha,n}``;
* ``W^(a,alpha)_{n,m}(y; sigma)``: weight ``u^{a-1} exp(-u + y)``, factors
  ``(u_i + sigma_j/alpha)``, same kernel and normalisation as ``B``.

All carry ``|Delta(u)|^{2/alpha}``.  Arguments may be complex where the
integrals still converge (the alpha <-> 1/alpha relations need that).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .combinatorics import DomainError
from .ensembles import log_gaussian_norm, log_laguerre_norm
from .hyperfun import (
    DEFAULT_MAX_DEGREE,
    HypergeometricSpec,
    TruncationPolicy,
    hyp0f1_pair,
    hyperg_one_set,
    two_set_batch,
)
from .mc import estimate, run_blocks
from .quadrature import integrate_line, integrate_symmetric, log_window

QUAD_MAX_N = 3


class LimitKind(str, enum.Enum):
    PEARCEY_P = "pearcey"
    GAUSS_G = "gauss"
    CRIT_B = "crit_b"
    HARD_W = "hard_w"


class Method(str, enum.Enum):
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class LimitSpec:
    kind: LimitKind
    alpha: float
    y: tuple
    sigma: tuple = ()
    a: float | None = None
    tau: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", LimitKind(self.kind))
        y = tuple(complex(v) for v in np.atleast_1d(self.y))
        sigma = tuple(complex(v) for v in np.atleast_1d(self.sigma)) if len(np.atleast_1d(self.sigma)) else ()
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "sigma", sigma)
        if not self.alpha > 0:
            raise DomainError("alpha must be positive")
        if len(y) < 1:
            raise DomainError("need n >= 1")
        if self.kind in (LimitKind.CRIT_B, LimitKind.HARD_W):
            if self.a is None or not self.a > 0:
                raise DomainError("B and W need a > 0")
        if self.kind is LimitKind.CRIT_B and any(s.imag != 0 or s.real < 0 for s in sigma):
            raise DomainError("B needs sigma >= 0")

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def m(self) -> int:
        return len(self.sigma)


@dataclass(frozen=True)
class LimitValue:
    value: complex
    est_error: float
    method: Method


# --- integrand pieces ---------------------------------------------------------------------


def _on_half_line(spec: LimitSpec) -> bool:
    return spec.kind in (LimitKind.CRIT_B, LimitKind.HARD_W)


def _log_weight(spec: LimitSpec) -> Callable[[np.ndarray], np.ndarray]:
    tau, a = spec.tau, spec.a
    if spec.kind is LimitKind.PEARCEY_P:
        return lambda u: -(u**4) / 4 - tau * u**2 / 2
    if spec.kind is LimitKind.GAUSS_G:
        return lambda u: -(u**2) / 2
    if spec.kind is LimitKind.CRIT_B:
        return lambda u: (a - 1) * np.log(u) - tau * u - u**2 / 2
    return lambda u: (a - 1) * np.log(u) - u


def _shift(spec: LimitSpec) -> np.ndarray:
    sigma = np.array(spec.sigma, dtype=complex)
    return sigma / spec.alpha if spec.kind is LimitKind.HARD_W else sigma


def _factors(spec: LimitSpec, u: np.ndarray) -> np.ndarray:
    """``prod_{j,k}`` of the linear factors, rows of ``u`` of shape ``(M, n)``."""
    if spec.m == 0:
        return np.ones(u.shape[0], dtype=complex)
    shift = _shift(spec)
    lin = 1j * u if spec.kind in (LimitKind.PEARCEY_P, LimitKind.GAUSS_G) else u.astype(complex)
    return np.prod(lin[:, :, None] + shift[None, None, :], axis=(1, 2))


def _kernel(spec: LimitSpec, u: np.ndarray, max_degree: int) -> np.ndarray:
    y = np.array(spec.y, dtype=complex)
    n = spec.n
    if spec.kind in (LimitKind.PEARCEY_P, LimitKind.GAUSS_G):
        if n == 1:
            return np.exp(1j * u[:, 0] * y[0])
        if not np.any(y):
            return np.ones(u.shape[0], dtype=complex)
        hspec = HypergeometricSpec((), (), spec.alpha, n)
        return two_set_batch(hspec, 1j * u, y, max_degree)
    lower = spec.a + (n - 1) / spec.alpha
    if n == 1:
        return hyp0f1_pair(lower, u[:, 0], -y[0])
    if not np.any(y):
        return np.ones(u.shape[0], dtype=complex)
    hspec = HypergeometricSpec((), (lower,), spec.alpha, n)
    return two_set_batch(hspec, u, -y, max_degree)


def _log_prefactor(spec: LimitSpec) -> complex:
    y = np.array(spec.y, dtype=complex)
    beta_like = 2 / spec.alpha
    if spec.kind in (LimitKind.PEARCEY_P, LimitKind.GAUSS_G):
        out = -log_gaussian_norm(beta_like, spec.n)
        if spec.kind is LimitKind.GAUSS_G:
            out = out + complex(np.sum(y**2)) / 2
        return complex(out)
    out = -log_laguerre_norm(spec.a, beta_like, spec.n)
    if spec.kind is LimitKind.HARD_W:
        out = out + complex(np.sum(y))
    return complex(out)


def _window_profile(spec: LimitSpec) -> Callable[[np.ndarray], np.ndarray]:
    """Generous 1-d envelope of the integrand's logarithm, used only to choose the window."""
    logw = _log_weight(spec)
    y = np.array(spec.y, dtype=complex)
    shift = _shift(spec)
    smax = float(np.max(np.abs(shift))) if spec.m else 0.0
    n = spec.n
    if spec.kind in (LimitKind.PEARCEY_P, LimitKind.GAUSS_G):
        grow = n * float(np.max(np.abs(y.imag)))
        return lambda u: logw(u) + spec.m * np.log1p(np.abs(u) + smax) + grow * np.abs(u)
    neg = n * float(max(0.0, np.max(-y.real)) + np.max(np.abs(y.imag)))
    return lambda u: logw(u) + spec.m * np.log1p(np.abs(u) + smax) + 2 * np.sqrt(neg * np.abs(u))


def _window(spec: LimitSpec) -> tuple[float, float, list[float]]:
    prof = _window_profile(spec)
    if _on_half_line(spec):
        with np.errstate(divide="ignore", invalid="ignore"):
            lo, hi, _, peaks = log_window(lambda w: prof(w**2), 1e-300, 60.0)
        lo = 0.0 if lo < 1e-100 else lo**2
        return lo, hi**2 * 1.2, [p**2 for p in peaks]
    lo, hi, _, peaks = log_window(prof, -60.0, 60.0)
    pad = 0.1 * (hi - lo)
    return lo - pad, hi + pad, peaks


def _integrand(spec: LimitSpec, max_degree: int, extra=None):
    logw = _log_weight(spec)
    power = 2 / spec.alpha

    def f(u):
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.sum(logw(u), axis=1)
            n = u.shape[1]
            for i in range(n):
                for j in range(i + 1, n):
                    logs = logs + power * np.log(np.abs(u[:, j] - u[:, i]))
        vals = np.exp(logs)
        vals = np.where(np.isfinite(vals), vals, 0.0)
        out = vals * _factors(spec, u) * _kernel(spec, u, max_degree)
        if extra is not None:
            out = out * extra(u)
        return out

    return f


# --- evaluation ---------------------------------------------------------------------------


def limit_function(
    spec: LimitSpec,
    rtol: float = 1e-10,
    max_degree: int = DEFAULT_MAX_DEGREE,
    samples: int = 200_000,
    seed: int = 0,
    extra: Callable[[np.ndarray], np.ndarray] | None = None,
) -> LimitValue:
    """Evaluate ``P``, ``G``, ``B`` or ``W`` by quadrature (``n <= 3``) or importance-sampled MC.

    ``extra`` multiplies the integrand (used for derivative checks).
    """
    if spec.n > QUAD_MAX_N:
        return _limit_mc(spec, samples, seed, max_degree, extra)
    lo, hi, peaks = _window(spec)
    f = _integrand(spec, max_degree, extra)
    pref = np.exp(_log_prefactor(spec))
    if spec.n == 1:
        val, err = integrate_line(lambda u: complex(f(np.array([[u]]))[0]), lo, hi, peaks, rtol=rtol, limit=1000)
    else:
        val, err = integrate_symmetric(
            f, spec.n, lo, hi, rtol=rtol, splits=peaks,
            sqrt_start=_on_half_line(spec) and spec.a != 1 and lo == 0.0,
        )
    return LimitValue(complex(pref * val), float(abs(pref) * err), Method.QUADRATURE)


def _limit_mc(spec, samples, seed, max_degree, extra) -> LimitValue:
    """Importance sampling with the one-variable weight as proposal (tabulated inverse CDF)."""
    lo, hi, peaks = _window(spec)
    logw = _log_weight(spec)
    grid = np.linspace(lo, hi, 200_001)
    with np.errstate(divide="ignore", invalid="ignore"):
        dens = np.exp(logw(grid))
    dens = np.where(np.isfinite(dens), dens, 0.0)
    cdf = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) / 2 * np.diff(grid))])
    mass = cdf[-1]
    cdf = cdf / mass
    power = 2 / spec.alpha
    n = spec.n

    def draw(rng, count):
        u = np.interp(rng.random((count, n)), cdf, grid)
        vals = np.ones(count)
        for i in range(n):
            for j in range(i + 1, n):
                vals = vals * np.abs(u[:, j] - u[:, i]) ** power
        out = vals * _factors(spec, u) * _kernel(spec, u, max_degree)
        if extra is not None:
            out = out * extra(u)
        return out

    est = estimate(run_blocks(draw, samples, seed), seed)
    scale = np.exp(_log_prefactor(spec)) * mass**n
    return LimitValue(complex(scale * est.mean), float(abs(scale) * est.stderr), Method.MONTE_CARLO)


def pearcey_p(alpha: float, tau: float, y, sigma=(), **kw) -> LimitValue:
    return limit_function(LimitSpec(LimitKind.PEARCEY_P, alpha, tuple(np.atleast_1d(y)), tuple(sigma), tau=tau), **kw)


def gauss_g(alpha: float, y, sigma=(), **kw) -> LimitValue:
    return limit_function(LimitSpec(LimitKind.GAUSS_G, alpha, tuple(np.atleast_1d(y)), tuple(sigma)), **kw)


def crit_b(a: float, alpha: float, tau: float, y, sigma=(), **kw) -> LimitValue:
    return limit_function(LimitSpec(LimitKind.CRIT_B, alpha, tuple(np.atleast_1d(y)), tuple(sigma), a=a, tau=tau), **kw)


def hard_w(a: float, alpha: float, y, sigma=(), **kw) -> LimitValue:
    return limit_function(LimitSpec(LimitKind.HARD_W, alpha, tuple(np.atleast_1d(y)), tuple(sigma), a=a), **kw)


def pearcey_p_dtau(alpha: float, tau: float, y, sigma=(), **kw) -> LimitValue:
    """``d/dtau P`` as the quadrature of the integrand times ``-sum u^2 / 2``."""
    spec = LimitSpec(LimitKind.PEARCEY_P, alpha, tuple(np.atleast_1d(y)), tuple(sigma), tau=tau)
    return limit_function(spec, extra=lambda u: -np.sum(u**2, axis=1) / 2, **kw)


# --- alpha <-> 1/alpha relations -------------------------------------------------------------


def g_duality_sides(alpha: float, y, sigma, form: str = "corrected", **kw) -> tuple[complex, complex]:
    """Both sides of ``G_{n,m}^(alpha)(y; sigma) = c^{mn} G_{m,n}^(1/alpha)(i sqrt(alpha) sigma; i sqrt(alpha) y)``.

    ``form="printed"`` uses ``c = i sqrt(alpha)``; ``"corrected"`` uses
    ``c = i / sqrt(alpha)``, which is what the Gaussian duality actually gives
    (at ``n = m = 1`` both sides then equal ``sigma - y``).
    """
    y = np.atleast_1d(np.asarray(y, dtype=complex))
    sigma = np.atleast_1d(np.asarray(sigma, dtype=complex))
    n, m = len(y), len(sigma)
    r = math.sqrt(alpha)
    c = 1j * r if form == "printed" else 1j / r
    lhs = gauss_g(alpha, y, sigma, **kw).value
    rhs = c ** (m * n) * gauss_g(1 / alpha, 1j * r * sigma, 1j * r * y, **kw).value
    return lhs, rhs


def w_duality_sides(a: float, alpha: float, y, sigma, form: str = "corrected", **kw) -> tuple[complex, complex]:
    """Both sides of ``W_{n,m}^(a,alpha)(y; sigma) = alpha^{-mn} W_{m,n}^(a', 1/alpha)(-sigma; -y)``.

    ``form="printed"`` takes ``a' = a/alpha``; ``"corrected"`` takes ``a' = a alpha``
    (the dual Laguerre ensemble has exponent ``2a/beta``; at ``n = m = 1`` both
    sides then equal ``a - y + sigma/alpha``).
    """
    y = np.atleast_1d(np.asarray(y, dtype=complex))
    sigma = np.atleast_1d(np.asarray(sigma, dtype=complex))
    n, m = len(y), len(sigma)
    a_dual = a / alpha if form == "printed" else a * alpha
    lhs = hard_w(a, alpha, y, sigma, **kw).value
    rhs = alpha ** (-m * n) * hard_w(a_dual, 1 / alpha, -sigma, -y, **kw).value
    return lhs, rhs


# --- constants ------------------------------------------------------------------------------


class Regime(str, enum.Enum):
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"


@dataclass(frozen=True)
class ConstParams:
    """Inputs of the theorem constants.

    ``f_tail`` holds the fixed source entries that enter the constant: all of
    ``f_1..f_r`` in the subcritical regime, ``f_{m+1}..f_r`` otherwise.
    """

    n: int
    N: int
    beta: float
    t: float
    b: float
    r: int = 0
    m: int = 0
    f_tail: tuple = ()
    a: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "f_tail", tuple(float(v) for v in self.f_tail))
        if self.n < 1 or self.N < 1 or not self.beta > 0 or not self.t > 0 or self.b < 0:
            raise DomainError("need n, N >= 1, beta > 0, t > 0, b >= 0")
        if not 0 <= self.m <= self.r:
            raise DomainError(f"need 0 <= m <= r, got m={self.m}, r={self.r}")


def _quarter_turns(q: int) -> complex:
    """``log(i^q)`` reduced to ``(-pi, pi]``."""
    q %= 4
    return 1j * math.pi / 2 * (q if q < 3 else -1)


def _log_pow(x: float, power: int) -> complex:
    """``log(x^power)`` for real ``x`` and integer ``power`` (sign tracked in the phase)."""
    if x == 0:
        return complex(-math.inf)
    return power * math.log(abs(x)) + (1j * math.pi if (x < 0 and power % 2) else 0)


def _tail(params: ConstParams, count: int) -> tuple:
    if len(params.f_tail) != count:
        raise DomainError(f"expected {count} fixed source entries, got {len(params.f_tail)}")
    return params.f_tail


def gamma_m(m: int, beta_p: float) -> float:
    """``C(2m, m) prod_{j=1}^m Gamma(1 + beta' j/2) / Gamma(1 + beta' (m + j)/2)``."""
    j = np.arange(1, m + 1)
    logv = float(np.sum(special.gammaln(1 + beta_p * j / 2) - special.gammaln(1 + beta_p * (m + j) / 2)))
    return math.comb(2 * m, m) * math.exp(logv)


def log_const_psi(regime: Regime, params: ConstParams, form: str = "printed") -> complex:
    """Complex log of the Gaussian constant for ``regime``.

    ``form="printed"`` is the literal closed form; ``"derived"`` is what
    the exact dual-integral identity produces (it differs for the subcritical
    and critical regimes; see the notes on ``const_psi``).
    """
    regime = Regime(regime)
    n, N, beta, t, b, r, m = params.n, params.N, params.beta, params.t, params.b, params.r, params.m
    c = math.sqrt(2 / beta)
    if regime is Regime.SUBCRITICAL:
        if n % 2:
            raise DomainError("the subcritical Gaussian limit is stated for even n only")
        if not t > b**2:
            raise DomainError("subcritical regime needs t > b^2")
        f = np.array(_tail(params, r))
        d = t - b**2
        out = (
            -0.5 * n * N * (1 - b**2 / t - math.log(t))
            + n**2 / (2 * beta) * math.log(N)
            + (-n / beta - 0.5 * (r - 1) * n) * math.log(t)
            + 0.5 * n * float(np.sum(np.log(d + 2 * f**2 / beta)))
        )
        if form == "printed":
            return out + _quarter_turns(-n * (N - r)) + (-n / 2 - n / beta * (n / 2 - 1) - n / 2) * math.log(2 * d)
        return (
            out
            + _quarter_turns(-n * (N + r))
            + (-n / 2 - n * (n - 2) / (2 * beta)) * math.log(2 * d)
            + n**2 / beta * math.log(2 * math.sqrt(d))
        )
    f = _tail(params, r - m)
    prod = sum((_log_pow(c * v, n) for v in f), 0j)
    if regime is Regime.CRITICAL:
        out = (
            _quarter_turns(-n * (r + N))
            + n * (N - r) * math.log(b)
            + ((1 - m) * n / 4 + (n - 1) * n / (2 * beta)) * math.log(N)
            + prod
        )
        if form == "derived":
            out += (-n / 2 - n * (n - 1) / beta) * math.log(t)
        return out
    if not t < b**2:
        raise DomainError("supercritical regime needs t < b^2")
    return (
        _quarter_turns(-n * (N + r))
        + n * (N - r) * math.log(b)
        + (2 / beta * (n - 1) * n + (m + 1) * n) * math.log(b / math.sqrt(b**2 - t))
        + m * n / 2 * math.log(t / N)
        + prod
    )


def const_psi(regime: Regime, params: ConstParams, form: str = "printed") -> complex:
    """Gaussian constants ``Psi_sub``, ``Psi_cri``, ``Psi_sup``.

    The derived subcritical form has ``(2(t-b^2))^{-n/2 - n(n-2)/(2 beta)}`` and the
    cross-well Vandermonde factor ``(2 sqrt(t-b^2))^{n^2/beta}``; the derived
    critical form keeps ``t^{-n/2 - n(n-1)/beta}``, which tends to 1 only for ``b = 1``.
    """
    return complex(np.exp(log_const_psi(regime, params, form)))


def log_const_phi(regime: Regime, params: ConstParams, form: str = "printed") -> complex:
    """Complex log of the Laguerre constant for ``regime``."""
    regime = Regime(regime)
    n, N, beta, t, b, r, m, a = params.n, params.N, params.beta, params.t, params.b, params.r, params.m, params.a
    if a is None or not a > 0:
        raise DomainError("Laguerre constants need a > 0")
    sign = _quarter_turns(2 * n * N)
    if regime is Regime.SUBCRITICAL:
        if not t > b:
            raise DomainError("subcritical regime needs t > b")
        f = np.array(_tail(params, r))
        q = 1 - b / t
        return (
            sign
            + log_gaussian_norm(4 / beta, n)
            - log_laguerre_norm(2 * a / beta, 4 / beta, n)
            + (2 * a / beta - 1) * n * math.log(q)
            + n * float(np.sum(np.log(q + 2 * f / (t * beta))))
            - n * N * (1 - b / t - math.log(t))
            + (n * (n - 1) / beta + (2 * a / beta - 0.5) * n) * math.log(N)
        )
    f = _tail(params, r - m)
    prod = sum((_log_pow(2 * v / beta, n) for v in f), 0j)
    if regime is Regime.CRITICAL:
        edge = t if form == "derived" else b
        return (
            sign
            + n * (N - r) * math.log(b)
            - 2 * n / beta * (a + n - 1) * math.log(edge)
            + ((a + n - 1) * n / beta - n * m / 2) * math.log(N)
            + prod
        )
    if not t < b:
        raise DomainError("supercritical regime needs t < b")
    return (
        sign
        + n * (N - r) * math.log(b)
        + (2 / beta * (a + n - 1) * n + m * n) * math.log(b / (b - t))
        + m * n * math.log(t / N)
        + prod
    )


def const_phi(regime: Regime, params: ConstParams, form: str = "printed") -> complex:
    """Laguerre constants ``Phi_sub``, ``Phi_cri``, ``Phi_sup``."""
    return complex(np.exp(log_const_phi(regime, params, form)))


# --- subcritical limit values ---------------------------------------------------------------


def gaussian_sub_limit(beta: float, y, policy: TruncationPolicy | None = None) -> complex:
    """``gamma_{n/2}(4/beta) e^{-i sum y} 1F1^(beta/2)(n/beta; 2n/beta; 2 i y)`` for even ``n``."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    n = len(y)
    if n % 2:
        raise DomainError("the subcritical Gaussian limit needs even n")
    spec = HypergeometricSpec((n / beta,), (2 * n / beta,), beta / 2, n)
    val = hyperg_one_set(spec, 2j * y, policy).value
    return gamma_m(n // 2, 4 / beta) * complex(np.exp(-1j * np.sum(y))) * val


def laguerre_sub_limit(a: float, beta: float, y, policy: TruncationPolicy | None = None) -> complex:
    """``0F1^(beta/2)(2(a+n-1)/beta; -y)``."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    n = len(y)
    spec = HypergeometricSpec((), (2 * (a + n - 1) / beta,), beta / 2, n)
    return hyperg_one_set(spec, -y, policy).value
