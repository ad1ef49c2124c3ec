"""Truncated multivariate Taylor arithmetic ("jets").

A :class:`Jet` stores the Taylor coefficients of a scalar function of ``nvars``
seed variables around a base point, truncated at total degree ``order``.
Coefficients live in a dense array indexed by a graded monomial basis, so the
basis of a lower order is always a prefix of the basis of a higher one and
truncation is a slice.

Metric code seeds ``2n`` variables ``(x^1..x^n, y^1..y^n)`` and evaluates
closed-form expressions on them; partial derivatives of any order up to the
truncation are then read off exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import CapabilityError, JetDomainError

#: Highest truncation order accepted by :func:`seed`.  Ricci tensors of metric
#: sprays need order 6; raise it with :func:`set_max_order` for deeper work.
DEFAULT_MAX_ORDER = 6
_max_order = DEFAULT_MAX_ORDER


def set_max_order(order: int) -> None:
    global _max_order
    if order < 1:
        raise ValueError("max order must be >= 1")
    _max_order = int(order)


def max_order() -> int:
    return _max_order


@dataclass(frozen=True)
class _Basis:
    nvars: int
    order: int
    exps: np.ndarray  # (N, nvars) exponent table, graded by total degree
    index: dict
    mul_i: np.ndarray
    mul_j: np.ndarray
    mul_t: np.ndarray
    factorials: np.ndarray  # prod(alpha!) per monomial

    @property
    def size(self) -> int:
        return len(self.exps)


def _monomials(nvars: int, order: int) -> list[tuple[int, ...]]:
    out = []
    for deg in range(order + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), deg):
            alpha = [0] * nvars
            for v in combo:
                alpha[v] += 1
            out.append(tuple(alpha))
    return out


@lru_cache(maxsize=None)
def _basis(nvars: int, order: int) -> _Basis:
    mons = _monomials(nvars, order)
    index = {m: k for k, m in enumerate(mons)}
    exps = np.array(mons, dtype=np.int64).reshape(len(mons), nvars)
    degs = exps.sum(axis=1)
    mi, mj, mt = [], [], []
    for i, a in enumerate(mons):
        for j in range(len(mons)):
            if degs[i] + degs[j] > order:
                # graded basis: every later j has degree >= degs[j]
                break
            mi.append(i)
            mj.append(j)
            mt.append(index[tuple(p + q for p, q in zip(a, mons[j]))])
    facts = np.array([math.prod(math.factorial(e) for e in m) for m in mons], dtype=float)
    return _Basis(
        nvars, order, exps, index,
        np.array(mi, dtype=np.int64), np.array(mj, dtype=np.int64),
        np.array(mt, dtype=np.int64), facts,
    )


@lru_cache(maxsize=None)
def _deriv_table(nvars: int, order: int, var: int) -> tuple[np.ndarray, np.ndarray]:
    """Source indices (in the order-K basis) and factors for d/dvar -> order K-1."""
    hi = _basis(nvars, order)
    lo = _basis(nvars, order - 1)
    src = np.empty(lo.size, dtype=np.int64)
    fac = np.empty(lo.size)
    for k, alpha in enumerate(map(tuple, lo.exps)):
        beta = list(alpha)
        beta[var] += 1
        src[k] = hi.index[tuple(beta)]
        fac[k] = beta[var]
    return src, fac


class Jet:
    """Truncated Taylor expansion of a scalar in ``nvars`` seed variables."""

    __slots__ = ("nvars", "order", "c")
    __array_priority__ = 1000

    def __init__(self, nvars: int, order: int, coeffs: np.ndarray):
        self.nvars = nvars
        self.order = order
        self.c = coeffs

    # construction -----------------------------------------------------------

    @classmethod
    def constant(cls, value: float, nvars: int, order: int) -> "Jet":
        c = np.zeros(_basis(nvars, order).size)
        c[0] = value
        return cls(nvars, order, c)

    @classmethod
    def variable(cls, value: float, var: int, nvars: int, order: int) -> "Jet":
        c = np.zeros(_basis(nvars, order).size)
        c[0] = value
        if order >= 1:
            c[1 + var] = 1.0
        return cls(nvars, order, c)

    # inspection -------------------------------------------------------------

    @property
    def value(self) -> float:
        return float(self.c[0])

    def coefficient(self, multi_index: Sequence[int]) -> float:
        alpha = tuple(int(a) for a in multi_index)
        if len(alpha) != self.nvars:
            raise ValueError(f"multi-index needs {self.nvars} entries")
        if sum(alpha) > self.order:
            raise CapabilityError(f"|{alpha}| exceeds jet order {self.order}")
        return float(self.c[_basis(self.nvars, self.order).index[alpha]])

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        return Jet(self.nvars, order, self.c[: _basis(self.nvars, order).size].copy())

    def __repr__(self) -> str:
        return f"Jet(value={self.value!r}, nvars={self.nvars}, order={self.order})"

    # arithmetic -------------------------------------------------------------

    def _pair(self, other):
        if isinstance(other, Jet):
            if other.nvars != self.nvars:
                raise ValueError("jets over different variable sets")
            k = min(self.order, other.order)
            return self.truncate(k), other.truncate(k)
        return self, None

    def __add__(self, other):
        a, b = self._pair(other)
        if b is None:
            c = a.c.copy()
            c[0] += other
            return Jet(a.nvars, a.order, c)
        return Jet(a.nvars, a.order, a.c + b.c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.nvars, self.order, -self.c)

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        a, b = self._pair(other)
        if b is None:
            return Jet(a.nvars, a.order, a.c * other)
        bs = _basis(a.nvars, a.order)
        c = np.bincount(bs.mul_t, weights=a.c[bs.mul_i] * b.c[bs.mul_j], minlength=bs.size)
        return Jet(a.nvars, a.order, c)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        a0 = self.value
        if a0 == 0.0 or not math.isfinite(a0):
            raise JetDomainError("division by a jet with zero constant term")
        derivs = [math.factorial(m) * (-1) ** m / a0 ** (m + 1) for m in range(self.order + 1)]
        return self._compose(derivs)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        if other == 0:
            raise JetDomainError("division by zero")
        return Jet(self.nvars, self.order, self.c / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, exponent):
        if isinstance(exponent, Jet):
            return exp(exponent * log(self))
        if float(exponent).is_integer():
            k = int(exponent)
            if k == 0:
                return Jet.constant(1.0, self.nvars, self.order)
            if k < 0:
                return self.reciprocal() ** (-k)
            result, base = None, self
            while k:
                if k & 1:
                    result = base if result is None else result * base
                k >>= 1
                if k:
                    base = base * base
            return result
        return _real_power(self, float(exponent))

    def __rpow__(self, base):
        return exp(self * math.log(base))

    # Taylor composition -----------------------------------------------------

    def _compose(self, derivs: Sequence[float]) -> "Jet":
        """f(self) given f^(m)(a0) for m = 0..order (Horner in the nilpotent part)."""
        h = self.c.copy()
        h[0] = 0.0
        hj = Jet(self.nvars, self.order, h)
        K = self.order
        result = Jet.constant(derivs[K] / math.factorial(K), self.nvars, K)
        for m in range(K - 1, -1, -1):
            result = result * hj
            result.c[0] += derivs[m] / math.factorial(m)
        return result


def _real_power(x: Jet, p: float) -> Jet:
    a0 = x.value
    if a0 <= 0.0:
        raise JetDomainError(f"non-integer power of a jet with constant term {a0}")
    derivs, coef = [], 1.0
    for m in range(x.order + 1):
        derivs.append(coef * a0 ** (p - m))
        coef *= p - m
    return x._compose(derivs)


# elementary functions (floats pass straight through to math) ---------------


def sqrt(x):
    if isinstance(x, Jet):
        if x.value <= 0.0:
            raise JetDomainError(f"sqrt of a jet with constant term {x.value}")
        return _real_power(x, 0.5)
    return math.sqrt(x)


def exp(x):
    if isinstance(x, Jet):
        e = math.exp(x.value)
        return x._compose([e] * (x.order + 1))
    return math.exp(x)


def log(x):
    if isinstance(x, Jet):
        a0 = x.value
        if a0 <= 0.0:
            raise JetDomainError(f"log of a jet with constant term {a0}")
        derivs = [math.log(a0)] + [
            (-1) ** (m - 1) * math.factorial(m - 1) / a0**m for m in range(1, x.order + 1)
        ]
        return x._compose(derivs)
    return math.log(x)


def sin(x):
    if isinstance(x, Jet):
        s, c = math.sin(x.value), math.cos(x.value)
        cycle = [s, c, -s, -c]
        return x._compose([cycle[m % 4] for m in range(x.order + 1)])
    return math.sin(x)


def cos(x):
    if isinstance(x, Jet):
        s, c = math.sin(x.value), math.cos(x.value)
        cycle = [c, -s, -c, s]
        return x._compose([cycle[m % 4] for m in range(x.order + 1)])
    return math.cos(x)


def tan(x):
    if isinstance(x, Jet):
        return sin(x) / cos(x)
    return math.tan(x)


def sinh(x):
    if isinstance(x, Jet):
        s, c = math.sinh(x.value), math.cosh(x.value)
        return x._compose([s if m % 2 == 0 else c for m in range(x.order + 1)])
    return math.sinh(x)


def cosh(x):
    if isinstance(x, Jet):
        s, c = math.sinh(x.value), math.cosh(x.value)
        return x._compose([c if m % 2 == 0 else s for m in range(x.order + 1)])
    return math.cosh(x)


def tanh(x):
    if isinstance(x, Jet):
        return sinh(x) / cosh(x)
    return math.tanh(x)


# seeding and differentiation -----------------------------------------------


def seed(point: Sequence[float], direction: Sequence[float], order: int) -> list[Jet]:
    """Seed jets for ``(x^1..x^n, y^1..y^n)`` around ``(point, direction)``."""
    if order < 1:
        raise ValueError("order must be >= 1")
    if order > _max_order:
        raise CapabilityError(f"order {order} exceeds configured maximum {_max_order}")
    point = [float(v) for v in point]
    direction = [float(v) for v in direction]
    if len(point) != len(direction):
        raise ValueError("point and direction must have the same dimension")
    values = point + direction
    nv = len(values)
    return [Jet.variable(v, k, nv, order) for k, v in enumerate(values)]


def seed_scalar(t: float, order: int) -> Jet:
    """Single-variable seed, used for derivatives of plain real functions."""
    return Jet.variable(float(t), 0, 1, order)


def derivative(f, var: int):
    """d f / d(seed variable ``var``), one order lower.  Constants give 0."""
    if not isinstance(f, Jet):
        return 0.0
    if f.order < 1:
        raise CapabilityError("cannot differentiate an order-0 jet")
    src, fac = _deriv_table(f.nvars, f.order, var)
    return Jet(f.nvars, f.order - 1, f.c[src] * fac)


def d(f, *variables: int):
    """Repeated partial derivative, e.g. ``d(E, 2, 3)``."""
    for v in variables:
        f = derivative(f, v)
    return f


def partial(f: Jet, multi_index: Sequence[int]) -> float:
    """Partial derivative of ``f`` at its base point for a full multi-index."""
    alpha = tuple(int(a) for a in multi_index)
    coeff = f.coefficient(alpha)
    return coeff * math.prod(math.factorial(a) for a in alpha)


def value(f) -> float:
    return f.value if isinstance(f, Jet) else float(f)


def solve_linear(matrix: list[list], rhs: list) -> list:
    """Gaussian elimination over jets (or floats) without pivoting.

    Only used on positive-definite fundamental tensors, where the diagonal
    pivots are bounded away from zero.
    """
    n = len(rhs)
    a = [list(row) for row in matrix]
    b = list(rhs)
    for k in range(n):
        piv = a[k][k]
        for i in range(k + 1, n):
            f = a[i][k] / piv
            for j in range(k, n):
                a[i][j] = a[i][j] - f * a[k][j]
            b[i] = b[i] - f * b[k]
    x = [None] * n
    for i in range(n - 1, -1, -1):
        acc = b[i]
        for j in range(i + 1, n):
            acc = acc - a[i][j] * x[j]
        x[i] = acc / a[i][i]
    return x
