"""Adaptive quadrature for complex integrands over R^n and R_+^n.

One-dimensional integrals go through QUADPACK (``scipy.integrate.quad``);
higher dimensions use tensor Gauss-Kronrod cubature (``scipy.integrate.cubature``)
on the ordered chamber ``x_1 <= ... <= x_n``, which is where symmetric
integrands carrying ``|Delta(x)|^p`` are smooth.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from scipy import integrate


class QuadratureError(RuntimeError):
    def __init__(self, message: str, estimate: complex, error: float):
        super().__init__(f"{message} (estimate {estimate}, error {error:.3g})")
        self.estimate = estimate
        self.error = error


def integrate_line(
    f: Callable[[float], complex],
    lo: float,
    hi: float,
    points: Sequence[float] | None = None,
    rtol: float = 1e-10,
    atol: float = 0.0,
    limit: int = 400,
) -> tuple[complex, float]:
    """Complex 1-d integral on ``[lo, hi]``; ``points`` are interior breakpoints."""
    pts = None
    if points:
        pts = sorted(p for p in points if lo < p < hi) or None
    with np.errstate(all="ignore"):
        val, err, *_ = integrate.quad(
            f, lo, hi, points=pts, epsrel=rtol, epsabs=atol, limit=limit, complex_func=True, full_output=1
        )
    err_total = float(abs(err[0]) + abs(err[1])) if isinstance(err, tuple) else float(abs(err))
    return complex(val), err_total


def _chamber_map(v: np.ndarray) -> np.ndarray:
    """Chamber coordinates ``(x_1, gap_2, ..., gap_n)`` to ordered points."""
    return np.cumsum(v, axis=-1)


def integrate_symmetric(
    f: Callable[[np.ndarray], np.ndarray],
    n: int,
    lo: float,
    hi: float,
    rtol: float = 1e-8,
    atol: float = 0.0,
    splits: Sequence[float] | None = None,
    max_subdivisions: int = 20000,
    sqrt_start: bool = False,
) -> tuple[complex, float]:
    """Integral of a symmetric ``f`` over ``[lo, hi]^n`` via the ordered chamber.

    ``f`` maps an ``(M, n)`` array of points to ``M`` complex values.  ``splits``
    are extra breakpoints on the first coordinate (useful near saddle points).
    ``sqrt_start`` substitutes ``x_1 = lo + w^2``, which removes square-root
    type singularities of the weight at the lower edge.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return integrate_line(lambda u: complex(f(np.array([[u]]))[0]), lo, hi, splits, rtol, atol)

    def g(v):
        if sqrt_start:
            w = v[:, :1]
            v = np.concatenate([lo + (w - lo) ** 2, v[:, 1:]], axis=1)
            jac = 2 * (w[:, 0] - lo)
        else:
            jac = 1.0
        vals = np.asarray(f(_chamber_map(v)), dtype=complex) * jac
        return np.stack([vals.real, vals.imag], axis=-1)

    edges = sorted({lo, hi, *[s for s in (splits or []) if lo < s < hi]})
    if sqrt_start:
        edges = [lo + math.sqrt(e - lo) for e in edges]
    width = hi - lo

    def run(a, b, rt, at, limit):
        return integrate.cubature(
            g, [a] + [0.0] * (n - 1), [b] + [width] * (n - 1),
            rule="gk15", rtol=rt, atol=at, max_subdivisions=limit,
        )

    if atol == 0.0:
        # cubature tests each component separately, so a vanishing imaginary part
        # would never meet a relative target; a coarse pilot fixes an absolute one
        pilot = sum(np.abs(run(a, b, 1e-3, 0.0, 200).estimate).sum() for a, b in zip(edges[:-1], edges[1:]))
        atol = rtol * max(float(pilot), 1e-300) / (len(edges) - 1)
    total = np.zeros(2)
    err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        res = run(a, b, rtol, atol, max_subdivisions)
        total += res.estimate
        err += float(np.sum(np.abs(res.error)))
        if res.status != "converged":
            est = complex(total[0], total[1]) * math.factorial(n)
            raise QuadratureError("cubature did not converge", est, err * math.factorial(n))
    scale = math.factorial(n)
    return complex(total[0], total[1]) * scale, err * scale


def vandermonde_abs(x: np.ndarray, power: float) -> np.ndarray:
    """``prod_{i<j} |x_j - x_i|^power`` along the last axis."""
    n = x.shape[-1]
    out = np.ones(x.shape[:-1])
    for i in range(n):
        for j in range(i + 1, n):
            out = out * np.abs(x[..., j] - x[..., i]) ** power
    return out


def gaussian_cutoff(scale: float = 1.0, rel: float = 1e-18) -> float:
    """Radius where ``exp(-u^2 / (2 scale^2))`` drops below ``rel`` of its peak."""
    return scale * math.sqrt(2 * math.log(1 / rel))


def log_window(
    log_f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    drop: float = 46.0,
    grid: int = 8001,
) -> tuple[float, float, float, list[float]]:
    """Locate where a 1-d log-integrand matters.

    Returns ``(lo', hi', max, peaks)``: the sub-interval where ``log_f`` stays
    within ``drop`` of its maximum on a uniform grid (padded by one cell), the
    maximum itself, and the grid positions of the local maxima.
    """
    u = np.linspace(lo, hi, grid)
    with np.errstate(all="ignore"):
        vals = np.real(log_f(u))
    vals = np.where(np.isfinite(vals), vals, -np.inf)
    top = float(np.max(vals))
    if not np.isfinite(top):
        raise QuadratureError("integrand vanishes on the search interval", 0j, float("inf"))
    keep = np.nonzero(vals >= top - drop)[0]
    step = u[1] - u[0]
    new_lo = max(lo, u[keep[0]] - step)
    new_hi = min(hi, u[keep[-1]] + step)
    inner = (vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:]) & (vals[1:-1] >= top - drop)
    peaks = [float(p) for p in u[1:-1][inner]]
    return float(new_lo), float(new_hi), top, peaks
