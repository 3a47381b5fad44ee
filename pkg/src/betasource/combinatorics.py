"""Partitions, hook products, deformed Pochhammer symbols and Jack polynomials.

Jack polynomials ``P_kappa^(alpha)`` are stored in the monomial basis.  They are
built from the Laplace-Beltrami type operator ``D2 - (2/alpha)(n-1) E1`` whose
matrix on monomial symmetric functions is upper triangular in dominance order,
so the coefficients follow from back-substitution.
"""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np

Number = Union[int, float, Fraction]


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


@dataclass(frozen=True, order=False)
class Partition:
    parts: tuple[int, ...] = ()

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        while parts and parts[-1] == 0:
            parts = parts[:-1]
        if any(p <= 0 for p in parts):
            raise DomainError(f"partition parts must be positive: {self.parts}")
        if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
            raise DomainError(f"partition parts must be weakly decreasing: {self.parts}")
        object.__setattr__(self, "parts", parts)

    @property
    def weight(self) -> int:
        return sum(self.parts)

    @property
    def length(self) -> int:
        return len(self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __getitem__(self, i):
        return self.parts[i]

    def __repr__(self) -> str:
        return f"Partition{self.parts}"

    def padded(self, n: int) -> tuple[int, ...]:
        return self.parts + (0,) * (n - len(self.parts))


def as_partition(kappa) -> Partition:
    return kappa if isinstance(kappa, Partition) else Partition(tuple(kappa))


def _partitions_rec(weight: int, max_part: int, max_length: int):
    if weight == 0:
        yield ()
        return
    if max_length == 0:
        return
    for first in range(min(weight, max_part), 0, -1):
        for rest in _partitions_rec(weight - first, first, max_length - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def _partitions_cached(weight: int, max_length: int) -> tuple[Partition, ...]:
    return tuple(Partition(p) for p in _partitions_rec(weight, weight, max_length))


def enumerate_partitions(weight: int, max_length: int) -> list[Partition]:
    """All partitions of ``weight`` with at most ``max_length`` parts.

    Order is reverse lexicographic: ``(3), (2, 1), (1, 1, 1)``.  Reverse
    lexicographic order is a linear extension of dominance, so a partition is
    always listed before every partition it dominates.
    """
    if weight < 0:
        raise DomainError("weight must be nonnegative")
    if max_length < 1:
        raise DomainError("max_length must be positive")
    return list(_partitions_cached(int(weight), int(max_length)))


def conjugate(kappa) -> Partition:
    kappa = as_partition(kappa)
    if not kappa.parts:
        return Partition(())
    return Partition(tuple(sum(1 for k in kappa.parts if k >= j) for j in range(1, kappa.parts[0] + 1)))


def dominance_leq(kappa, sigma) -> bool:
    """``kappa <= sigma`` in dominance order (partial sums comparison)."""
    kappa, sigma = as_partition(kappa), as_partition(sigma)
    if kappa.weight != sigma.weight:
        raise DomainError("dominance order compares partitions of equal weight only")
    sk = ss = 0
    for i in range(max(kappa.length, sigma.length)):
        sk += kappa.parts[i] if i < kappa.length else 0
        ss += sigma.parts[i] if i < sigma.length else 0
        if sk > ss:
            return False
    return True


def _check_alpha(alpha) -> None:
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")


def hook_norm(kappa, alpha: Number):
    """Product over boxes of ``1 + arm + leg/alpha``."""
    _check_alpha(alpha)
    kappa = as_partition(kappa)
    conj = conjugate(kappa)
    if isinstance(alpha, (int, Fraction)):
        alpha = Fraction(alpha)
    out = 1
    for i, row in enumerate(kappa.parts, start=1):
        for j in range(1, row + 1):
            arm = row - j
            leg = conj.parts[j - 1] - i
            out = out * (1 + arm + leg / alpha)
    return out


def deformed_pochhammer(x, kappa, alpha: Number):
    """``[x]_kappa = prod_i (x - (i-1)/alpha)_{kappa_i}`` with rising factorials."""
    _check_alpha(alpha)
    kappa = as_partition(kappa)
    out = 1
    for i, row in enumerate(kappa.parts, start=1):
        base = x - (i - 1) / alpha
        for j in range(row):
            out = out * (base + j)
    return out


# --- monomial symmetric functions -------------------------------------------------


@lru_cache(maxsize=None)
def _orbit(exponents: tuple[int, ...]) -> tuple[tuple[int, ...], ...]:
    return tuple(sorted(set(itertools.permutations(exponents))))


def monomial_eval(mu, x: np.ndarray) -> np.ndarray:
    """``m_mu(x)``; ``x`` has shape ``(..., n)``."""
    mu = as_partition(mu)
    x = np.asarray(x)
    n = x.shape[-1]
    if mu.length > n:
        return np.zeros(x.shape[:-1], dtype=np.result_type(x, float))
    total = 0
    for a in _orbit(mu.padded(n)):
        term = 1
        for i, e in enumerate(a):
            if e:
                term = term * x[..., i] ** e
        total = total + term
    return np.asarray(total) * np.ones(x.shape[:-1], dtype=np.result_type(x, float))


def monomial_count(mu, n: int) -> int:
    """``m_mu(1^n)``: the number of distinct permutations of ``mu`` padded to ``n``."""
    mu = as_partition(mu)
    if mu.length > n:
        return 0
    padded = mu.padded(n)
    counts = {}
    for e in padded:
        counts[e] = counts.get(e, 0) + 1
    out = math.factorial(n)
    for c in counts.values():
        out //= math.factorial(c)
    return out


# --- Jack polynomials --------------------------------------------------------------


@dataclass(frozen=True)
class JackParams:
    alpha: Number
    nvars: int

    def __post_init__(self):
        _check_alpha(self.alpha)
        if int(self.nvars) < 1:
            raise DomainError("nvars must be >= 1")


@dataclass(frozen=True)
class JackPolynomial:
    kappa: Partition
    alpha: Number
    nvars: int
    coeffs: dict = field(hash=False)
    eigenvalue: Number = 0

    def __call__(self, x):
        return jack_eval(self, x)

    def float_coeffs(self) -> dict:
        return {mu: float(c) for mu, c in self.coeffs.items()}


def exact_alpha(alpha, max_denominator: int = 1000) -> Fraction | None:
    """Return ``alpha`` as a Fraction when it is a small-denominator rational."""
    if isinstance(alpha, Fraction):
        return alpha
    if isinstance(alpha, int):
        return Fraction(alpha)
    frac = Fraction(float(alpha)).limit_denominator(max_denominator)
    if float(frac) == float(alpha):
        return frac
    return None


@lru_cache(maxsize=None)
def _operator_row(lam: tuple[int, ...], n: int) -> tuple[tuple[tuple[int, ...], int, int], ...]:
    """Action of the operator on ``m_lam`` in ``n`` variables.

    Returns triples ``(mu, c2, c_alpha)`` meaning the coefficient of ``m_mu`` is
    ``c2 + c_alpha * (2/alpha)``.  Integer data, independent of alpha.
    """
    c2: dict[tuple[int, ...], int] = {}
    ca: dict[tuple[int, ...], int] = {}
    degree = sum(lam)
    for a in _orbit(lam + (0,) * (n - len(lam))):
        # D2 part and the regular part of the pair sum
        diag2 = sum(e * (e - 1) for e in a)
        diaga = sum(a[i] * (n - 1 - i) for i in range(n)) - (n - 1) * degree
        if diag2:
            c2[a] = c2.get(a, 0) + diag2
        if diaga:
            ca[a] = ca.get(a, 0) + diaga
        # divided-difference part: pairs (i<j) with a_i > a_j, combined with the swapped monomial
        for i in range(n):
            for j in range(i + 1, n):
                p, q = a[i], a[j]
                if p <= q:
                    continue
                d = p - q
                for k in range(d):
                    b = list(a)
                    b[i], b[j] = q + k, p - k
                    b = tuple(b)
                    ca[b] = ca.get(b, 0) + d
    rows = []
    for key in set(c2) | set(ca):
        if list(key) == sorted(key, reverse=True):
            mu = tuple(e for e in key if e)
            rows.append((mu, c2.get(key, 0), ca.get(key, 0)))
    return tuple(sorted(rows, reverse=True))


_jack_cache: dict = {}
_jack_lock = threading.Lock()


def jack_polynomial(kappa, params: JackParams, exact: bool | None = None) -> JackPolynomial:
    """Monomial expansion of ``P_kappa^(alpha)`` in ``params.nvars`` variables.

    ``exact=None`` uses rational arithmetic whenever alpha is a small-denominator
    rational, floating point otherwise.
    """
    kappa = as_partition(kappa)
    n = int(params.nvars)
    if kappa.length > n:
        raise DomainError(f"length of {kappa} exceeds number of variables {n}")
    frac = exact_alpha(params.alpha)
    if exact is None:
        exact = frac is not None
    if exact and frac is None:
        raise DomainError(f"alpha={params.alpha} is not a small rational; use exact=False")
    alpha = frac if exact else float(params.alpha)
    key = (kappa.parts, alpha, n, bool(exact))
    cached = _jack_cache.get(key)
    if cached is not None:
        return cached

    two_over = 2 / alpha
    basis = enumerate_partitions(kappa.weight, n)
    start = basis.index(kappa)
    basis = [mu for mu in basis[start:] if dominance_leq(mu, kappa)]
    index = {mu.parts: i for i, mu in enumerate(basis)}

    # d[lam][mu] for lam, mu in basis
    rows = []
    for lam in basis:
        row = {}
        for mu, c2, ca in _operator_row(lam.parts, n):
            if mu in index:
                row[index[mu]] = c2 + ca * two_over
        rows.append(row)

    size = len(basis)
    coeffs = [0] * size
    coeffs[0] = Fraction(1) if exact else 1.0
    eps = rows[0].get(0, 0)
    incoming: list[list[tuple[int, object]]] = [[] for _ in range(size)]
    for li, row in enumerate(rows):
        for mi, val in row.items():
            if mi != li:
                incoming[mi].append((li, val))
    for mi in range(1, size):
        acc = 0
        for li, val in incoming[mi]:
            if li < mi and coeffs[li]:
                acc = acc + coeffs[li] * val
        gap = eps - rows[mi].get(mi, 0)
        if gap == 0:
            raise ArithmeticError(f"degenerate eigenvalue while building P_{kappa.parts}")
        coeffs[mi] = acc / gap

    poly = JackPolynomial(
        kappa=kappa,
        alpha=alpha,
        nvars=n,
        coeffs={basis[i]: c for i, c in enumerate(coeffs) if c != 0},
        eigenvalue=eps,
    )
    with _jack_lock:
        _jack_cache.setdefault(key, poly)
    return poly


def jack_eval(poly: JackPolynomial, x) -> complex | np.ndarray:
    """Evaluate ``P_kappa`` at ``x`` (shape ``(n,)`` or ``(..., n)``)."""
    x = np.asarray(x)
    if x.shape[-1] != poly.nvars:
        raise DomainError(f"expected {poly.nvars} variables, got {x.shape[-1]}")
    total = 0
    for mu, c in poly.coeffs.items():
        total = total + float(c) * monomial_eval(mu, x)
    out = np.asarray(total)
    return out[()] if out.ndim == 0 else out


def jack_at_ones(poly: JackPolynomial):
    """``P_kappa(1^n)`` from monomial counts."""
    return sum(c * monomial_count(mu, poly.nvars) for mu, c in poly.coeffs.items())


def apply_operator_pointwise(poly: JackPolynomial, x, alpha: float | None = None) -> complex:
    """Apply ``D2 - (2/alpha)(n-1)E1`` to ``poly`` at the point ``x``.

    Partial derivatives come from differentiating each monomial ``x^a`` of the
    expansion; the singular pair sum is then evaluated at ``x`` directly, so
    this does not reuse the operator's monomial action.
    """
    x = np.asarray(x, dtype=complex)
    n = x.size
    alpha = float(poly.alpha if alpha is None else alpha)
    grad = np.zeros(n, dtype=complex)
    hess = np.zeros(n, dtype=complex)
    for mu, c in poly.coeffs.items():
        c = float(c)
        for a in _orbit(mu.padded(n)):
            a = np.array(a)
            mono = np.prod(x**a)
            for i in range(n):
                if a[i] >= 1:
                    grad[i] += c * a[i] * mono / x[i]
                if a[i] >= 2:
                    hess[i] += c * a[i] * (a[i] - 1) * mono / x[i] ** 2
    out = np.sum(x**2 * hess)
    for i in range(n):
        for j in range(n):
            if i != j:
                out += (2 / alpha) * x[i] ** 2 / (x[i] - x[j]) * grad[i]
    out -= (2 / alpha) * (n - 1) * np.sum(x * grad)
    return complex(out)


def schur_eval(kappa, x: Sequence[complex]) -> complex:
    """Schur polynomial by the bialternant ``det(x_i^(kappa_j+n-j)) / det(x_i^(n-j))``."""
    kappa = as_partition(kappa)
    x = np.asarray(x, dtype=complex)
    n = x.size
    lam = np.array(kappa.padded(n))
    powers = lam + np.arange(n - 1, -1, -1)
    num = np.linalg.det(x[:, None] ** powers[None, :])
    den = np.linalg.det(x[:, None] ** np.arange(n - 1, -1, -1)[None, :])
    return complex(num / den)


def partitions_up_to(max_degree: int, max_length: int) -> Iterable[Partition]:
    for k in range(max_degree + 1):
        yield from enumerate_partitions(k, max_length)
