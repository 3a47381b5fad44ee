"""Gaussian and Laguerre beta-ensembles with an external source.

Conventions
-----------
* Gaussian: ``X(t) = H(t) + diag(f)``; ``H`` has diagonal variance ``t`` and
  off-diagonal real/imaginary parts of variance ``t/2`` each.
* Laguerre (density and matrix model): eigenvalues of ``(Z + A)^* (Z + A)``
  with ``A = diag(sqrt f)`` padded to ``p x N`` and every real component of
  ``Z`` of variance ``t/2``.  Then ``a = beta (p - N + 1) / 2``.
* The Laguerre eigenvalue SDE is integrated exactly as written,
  ``dx_i = 2 sqrt(x_i) dB_i + beta (p + sum_j (x_i + x_j)/(x_i - x_j)) dt``.
  Its law at time ``t`` is the Laguerre density at time ``2 t``;
  :func:`sde_time_for_density` converts.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import special

from .combinatorics import DomainError
from .hyperfun import (
    DEFAULT_MAX_DEGREE,
    HypergeometricSpec,
    TruncationPolicy,
    hyp0f0_pair,
    hyp0f1_pair,
    two_set_batch,
)
from .mc import run_blocks


class Family(str, enum.Enum):
    GAUSSIAN = "gaussian"
    LAGUERRE = "laguerre"


class IntegrationError(RuntimeError):
    def __init__(self, message: str, time_reached: float):
        super().__init__(f"{message} (reached t={time_reached:.6g})")
        self.time_reached = time_reached


@dataclass(frozen=True)
class EnsembleSpec:
    family: Family
    beta: float
    N: int
    t: float
    f: tuple = ()
    a: float | None = None
    p_dim: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        f = tuple(float(v) for v in (self.f if len(self.f) else (0.0,) * self.N))
        object.__setattr__(self, "f", f)
        if not self.beta > 0:
            raise DomainError("beta must be positive")
        if not self.t > 0:
            raise DomainError("t must be positive")
        if self.N < 1 or len(f) != self.N:
            raise DomainError("source vector must have length N")
        if self.family is Family.LAGUERRE:
            a = self.a
            if self.p_dim is not None:
                a_p = self.beta * (self.p_dim - self.N + 1) / 2
                if a is not None and abs(a - a_p) > 1e-12:
                    raise DomainError(f"a={a} inconsistent with p={self.p_dim}: expected {a_p}")
                a = a_p
            if a is None or not a > 0:
                raise DomainError("Laguerre ensembles need a > 0")
            if any(v < 0 for v in f):
                raise DomainError("Laguerre source entries must be nonnegative")
            object.__setattr__(self, "a", float(a))

    @property
    def f_array(self) -> np.ndarray:
        return np.array(self.f)

    @property
    def p(self) -> float:
        """Rectangular dimension implied by ``a`` (may be non-integral)."""
        return 2 * self.a / self.beta + self.N - 1


@dataclass(frozen=True)
class EigenSample:
    values: np.ndarray
    weight: float = 1.0


class Scheme(str, enum.Enum):
    EULER_MARUYAMA = "euler"
    TAMED_EULER = "tamed"


@dataclass(frozen=True)
class SDEConfig:
    scheme: Scheme = Scheme.EULER_MARUYAMA
    dt: float = 1e-3
    t_final: float | None = None
    collision_floor: float = 1e-12
    seed: int = 0
    max_halvings: int = 40
    max_move: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not self.dt > 0 or not self.collision_floor > 0:
            raise DomainError("dt and collision_floor must be positive")


# --- normalisation constants -------------------------------------------------------------


def log_gaussian_norm(beta: float, n: int) -> float:
    j = np.arange(1, n + 1)
    return n / 2 * math.log(2 * math.pi) + float(
        np.sum(special.gammaln(1 + j * beta / 2)) - n * special.gammaln(1 + beta / 2)
    )


def gaussian_norm(beta: float, n: int) -> float:
    """``(2 pi)^(n/2) prod_j Gamma(1 + j beta/2) / Gamma(1 + beta/2)``."""
    if not beta > 0 or n < 1:
        raise DomainError("need beta > 0 and n >= 1")
    val = log_gaussian_norm(beta, n)
    if val > 700:
        raise OverflowError("Gamma_{beta,n} overflows; use log_gaussian_norm")
    return math.exp(val)


def log_laguerre_norm(a: float, beta: float, N: int) -> float:
    if not a > 0:
        raise DomainError("a must be positive")
    j = np.arange(N)
    return float(
        np.sum(special.gammaln(1 + (1 + j) * beta / 2) + special.gammaln(a + j * beta / 2))
        - N * special.gammaln(1 + beta / 2)
    )


def laguerre_norm(a: float, beta: float, N: int) -> float:
    """``prod_{j<N} Gamma(1 + (1+j) beta/2) Gamma(a + j beta/2) / Gamma(1 + beta/2)``."""
    val = log_laguerre_norm(a, beta, N)
    if val > 700:
        raise OverflowError("Z_{a,beta,N} overflows; use log_laguerre_norm")
    return math.exp(val)


# --- densities -----------------------------------------------------------------------------


def _log_vandermonde(x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    out = np.zeros(x.shape[:-1])
    for i in range(n):
        for j in range(i + 1, n):
            out = out + np.log(np.abs(x[..., j] - x[..., i]))
    return out


def source_density_batch(
    family: Family,
    beta: float,
    N: int,
    t: float,
    f,
    xs,
    a: float | None = None,
    max_degree: int = DEFAULT_MAX_DEGREE,
) -> np.ndarray:
    """Density formula at rows of ``xs`` for a possibly complex source ``f``.

    For complex ``f`` this is the analytic continuation of the density in the
    source, which is what the dual side of the duality identities needs.
    """
    family = Family(family)
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    f = np.asarray(f, dtype=complex)
    if xs.shape[-1] != N or f.shape != (N,):
        raise DomainError(f"points and source must have {N} coordinates")
    with np.errstate(divide="ignore"):
        logvdm = beta * _log_vandermonde(xs)
    if family is Family.GAUSSIAN:
        logw = (
            -log_gaussian_norm(beta, N)
            - 0.25 * N * (2 + beta * (N - 1)) * math.log(t)
            - (np.sum(xs**2, axis=-1) + np.sum(f**2)) / (2 * t)
            + logvdm
        )
        if N == 1:
            hyp = hyp0f0_pair(xs[:, 0] / math.sqrt(t), f[0] / math.sqrt(t))
        elif not np.any(f):
            hyp = np.ones(xs.shape[0])
        else:
            hyp = two_set_batch(HypergeometricSpec((), (), 2 / beta, N), xs / math.sqrt(t), f / math.sqrt(t), max_degree)
    else:
        if a is None or not a > 0:
            raise DomainError("Laguerre ensembles need a > 0")
        if np.any(xs <= 0):
            raise DomainError("Laguerre density needs strictly positive eigenvalues")
        logw = (
            -log_laguerre_norm(a, beta, N)
            - (a * N + 0.5 * beta * N * (N - 1)) * math.log(t)
            + np.sum((a - 1) * np.log(xs) - xs / t, axis=-1)
            - np.sum(f) / t
            + logvdm
        )
        lower = a + beta * (N - 1) / 2
        if N == 1:
            hyp = hyp0f1_pair(lower, xs[:, 0] / t, f[0] / t)
        elif not np.any(f):
            hyp = np.ones(xs.shape[0])
        else:
            hyp = two_set_batch(HypergeometricSpec((), (lower,), 2 / beta, N), xs / t, f / t, max_degree)
    return np.exp(logw) * hyp


def density_batch(spec: EnsembleSpec, xs, max_degree: int = DEFAULT_MAX_DEGREE) -> np.ndarray:
    """Eigenvalue density at each row of ``xs`` (shape ``(M, N)``)."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if xs.shape[-1] != spec.N:
        raise DomainError(f"points must have {spec.N} coordinates")
    vals = source_density_batch(spec.family, spec.beta, spec.N, spec.t, spec.f_array, xs, spec.a, max_degree)
    return np.real(vals)


def density(spec: EnsembleSpec, x, policy: TruncationPolicy | None = None) -> float:
    policy = policy or TruncationPolicy()
    x = np.asarray(x, dtype=float)
    if spec.family is Family.LAGUERRE and np.any(x <= 0):
        raise DomainError("Laguerre density needs strictly positive eigenvalues")
    return float(max(density_batch(spec, x[None, :], policy.max_degree)[0], 0.0))


# --- matrix models ---------------------------------------------------------------------------


def _check_matrix_beta(spec: EnsembleSpec) -> None:
    if spec.beta not in (1, 2):
        raise DomainError(f"matrix models exist for beta in {{1, 2}}, got {spec.beta}; use sample_sde")


def matrix_model_batch(spec: EnsembleSpec, rng: np.random.Generator, count: int) -> np.ndarray:
    """``count`` sorted eigenvalue vectors from the matrix model."""
    _check_matrix_beta(spec)
    N, t = spec.N, spec.t
    complex_entries = spec.beta == 2
    if spec.family is Family.GAUSSIAN:
        if complex_entries:
            z = rng.standard_normal((count, N, N)) + 1j * rng.standard_normal((count, N, N))
        else:
            z = rng.standard_normal((count, N, N))
        # (z + z^*)/2 has off-diagonal real/imag variance 1/2 (complex) or 1/2 (real); fix the diagonal.
        h = (z + np.conj(np.swapaxes(z, -1, -2))) / 2
        diag = rng.standard_normal((count, N))
        idx = np.arange(N)
        h[:, idx, idx] = diag
        h = h * math.sqrt(t)
        h[:, idx, idx] += spec.f_array
        return np.linalg.eigvalsh(h)
    if spec.p_dim is None:
        raise DomainError("the Laguerre matrix model needs an integral p_dim")
    p = int(spec.p_dim)
    if p < N:
        raise DomainError("p_dim must be at least N")
    scale = math.sqrt(t / 2)
    if complex_entries:
        z = scale * (rng.standard_normal((count, p, N)) + 1j * rng.standard_normal((count, p, N)))
    else:
        z = scale * rng.standard_normal((count, p, N))
    idx = np.arange(N)
    z[:, idx, idx] += np.sqrt(spec.f_array)
    w = np.conj(np.swapaxes(z, -1, -2)) @ z
    return np.clip(np.linalg.eigvalsh(w), 0.0, None)


def sample_matrix_model(spec: EnsembleSpec, seed: int) -> EigenSample:
    return EigenSample(matrix_model_batch(spec, np.random.default_rng(seed), 1)[0])


# --- SDE samplers ----------------------------------------------------------------------------


def sde_time_for_density(spec: EnsembleSpec) -> float:
    """SDE horizon whose law is the ensemble density at ``spec.t``."""
    return spec.t / 2 if spec.family is Family.LAGUERRE else spec.t


def _initial_state(spec: EnsembleSpec, count: int, t_final: float) -> np.ndarray:
    x0 = np.sort(spec.f_array)
    eps = 1e-8 * t_final
    # split coincident starting points (and, for Laguerre, lift zeros off the hard edge)
    bumped = x0.copy()
    for i in range(1, spec.N):
        if bumped[i] - bumped[i - 1] < eps:
            bumped[i] = bumped[i - 1] + eps
    if spec.family is Family.LAGUERRE and bumped[0] <= 0:
        bumped = bumped + eps - min(bumped[0], 0)
    return np.broadcast_to(bumped, (count, spec.N)).copy()


def _drift(spec: EnsembleSpec, x: np.ndarray) -> np.ndarray:
    diff = x[:, :, None] - x[:, None, :]
    N = spec.N
    off = ~np.eye(N, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        if spec.family is Family.GAUSSIAN:
            inter = np.where(off, 1.0 / diff, 0.0).sum(axis=-1)
            return spec.beta / 2 * inter
        summ = x[:, :, None] + x[:, None, :]
        inter = np.where(off, summ / diff, 0.0).sum(axis=-1)
        return spec.beta * (spec.p + inter)


def _noise_scale(spec: EnsembleSpec, x: np.ndarray) -> np.ndarray:
    if spec.family is Family.GAUSSIAN:
        return np.ones_like(x)
    return 2 * np.sqrt(np.clip(x, 0, None))


def _step_limit(spec: EnsembleSpec, cfg: SDEConfig, x: np.ndarray) -> np.ndarray:
    """Largest step per row keeping the drift move and twice the noise size below
    ``max_move`` times the distance to the nearest neighbour."""
    near = np.full(x.shape, np.inf)
    if spec.N > 1:
        gaps = np.diff(x, axis=-1)
        pad = np.full((x.shape[0], 1), np.inf)
        near = np.minimum(np.concatenate([gaps, pad], axis=1), np.concatenate([pad, gaps], axis=1))
    drift = np.abs(_drift(spec, x))
    edge = near
    if spec.family is Family.LAGUERRE:
        edge = np.minimum(near, x)
        # the constant part of the Laguerre drift only pushes away from the edge
        drift = np.maximum(drift - 10 * spec.beta * spec.p, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h_drift = np.where(drift > 0, cfg.max_move * edge / drift, np.inf)
        # the hard edge is left to positivity rejection: near 0 the noise vanishes
        # like sqrt(x), and an x-proportional step would stall there
        h_noise = (cfg.max_move * near / (2 * _noise_scale(spec, x))) ** 2
    return np.min(np.minimum(h_drift, h_noise), axis=-1)


def _propose(spec, cfg, x, h, rng):
    drift = _drift(spec, x)
    if cfg.scheme is Scheme.TAMED_EULER:
        drift = drift / (1 + h[:, None] * np.abs(drift))
    dw = rng.standard_normal(x.shape) * np.sqrt(h)[:, None]
    return x + drift * h[:, None] + _noise_scale(spec, x) * dw


def _ordered(spec, cfg, y) -> np.ndarray:
    ok = np.all(np.diff(y, axis=-1) > cfg.collision_floor, axis=-1)
    if spec.family is Family.LAGUERRE:
        ok &= y[:, 0] > cfg.collision_floor
    return ok


def sde_batch(spec: EnsembleSpec, cfg: SDEConfig, rng: np.random.Generator, count: int) -> np.ndarray:
    """Integrate ``count`` independent paths from the source configuration to ``cfg.t_final``.

    Every row carries its own clock.  The step is ``min(dt, state limit)``; a
    proposal that breaks the ordering (or, for Laguerre, positivity) is redrawn
    with half the step, at most ``max_halvings`` times before ``IntegrationError``.
    """
    t_final = spec.t if cfg.t_final is None else cfg.t_final
    x = _initial_state(spec, count, t_final)
    clock = np.zeros(count)
    while True:
        active = np.nonzero(t_final - clock > 1e-14 * t_final)[0]
        if active.size == 0:
            return x
        xa = x[active]
        h = np.minimum(np.minimum(cfg.dt, t_final - clock[active]), _step_limit(spec, cfg, xa))
        pending = np.arange(active.size)
        y = np.empty_like(xa)
        for _ in range(cfg.max_halvings + 1):
            prop = _propose(spec, cfg, xa[pending], h[pending], rng)
            ok = _ordered(spec, cfg, prop)
            y[pending[ok]] = prop[ok]
            pending = pending[~ok]
            if pending.size == 0:
                break
            h[pending] /= 2
        else:
            raise IntegrationError("step rejected after the maximum number of halvings",
                                   float(np.min(clock[active[pending]])))
        x[active] = y
        clock[active] += h


def sample_sde(spec: EnsembleSpec, cfg: SDEConfig) -> EigenSample:
    """One path of the eigenvalue SDE, integrated to ``cfg.t_final`` (default ``spec.t``)."""
    return EigenSample(sde_batch(spec, cfg, np.random.default_rng(cfg.seed), 1)[0])


def sample_many(
    spec: EnsembleSpec,
    samples: int,
    seed: int,
    sampler: str = "matrix",
    cfg: SDEConfig | None = None,
    workers: int = 1,
) -> np.ndarray:
    """Ensemble draws at ``spec.t``; the SDE route rescales the horizon for Laguerre."""
    if sampler == "matrix":
        return run_blocks(lambda rng, c: matrix_model_batch(spec, rng, c), samples, seed, workers)
    if sampler == "sde":
        cfg = cfg or SDEConfig()
        cfg = replace(cfg, t_final=sde_time_for_density(spec))
        return run_blocks(lambda rng, c: sde_batch(spec, cfg, rng, c), samples, seed, workers)
    raise DomainError(f"unknown sampler {sampler!r}")
