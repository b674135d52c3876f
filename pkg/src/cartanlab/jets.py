"""Truncated multivariate Taylor ("jet") arithmetic and its finite-difference
cross-check.

A chart point carries the 2n coordinates (x^1..x^n, p_1..p_n).  A `Jet` stores
the Taylor coefficients of a smooth scalar about such a point, indexed by
multi-indices over the 2n variables up to a total order (order 5 is enough for
every consumer in this package: two base derivatives on top of three momentum
derivatives of K^2).  Ring operations are exact truncated-polynomial
operations; smooth primitives (sqrt, exp, log, real powers) are evaluated by
composing the primitive's Taylor series with the nilpotent part of the
operand.  Mixed partial derivatives of any expression built this way are read
off coefficients, with no step-size error.

`fd_derivative` provides the independent oracle: iterated central differences
at two step sizes with Richardson extrapolation and an honest error estimate
(two-step disagreement plus a roundoff floor).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Callable, Sequence

import numpy as np

from .errors import ConditioningError, EvaluationDomainError

__all__ = [
    "ChartPoint",
    "Jet",
    "jet_eval",
    "fd_derivative",
    "invert",
    "sqrt",
    "exp",
    "log",
    "power",
    "DEFAULT_FD_STEPS",
    "CONDITION_BOUND",
]

DEFAULT_FD_STEPS = (1e-3, 5e-4)
CONDITION_BOUND = 1e12
_EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# multi-index tables


class _Tables:
    """Precomputed index tables for one (nvars, order) pair.

    Multi-indices are enumerated degree by degree (graded order), so the
    table of a lower order is a prefix of the table of a higher order and
    truncation is a slice.
    """

    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.order = order
        exps: list[tuple[int, ...]] = []
        sizes = [0]
        for deg in range(order + 1):
            for combo in combinations_with_replacement(range(nvars), deg):
                e = [0] * nvars
                for v in combo:
                    e[v] += 1
                exps.append(tuple(e))
            sizes.append(len(exps))
        self.exps = exps
        self.size = len(exps)
        # cumulative size per degree: coeffs[: sizes[d + 1]] holds degree <= d
        self.sizes = sizes
        self.index = {e: i for i, e in enumerate(exps)}
        self.degree = np.array([sum(e) for e in exps], dtype=np.int64)
        self._mul = None
        self._deriv: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    @property
    def mul(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self._mul is None:
            ia, ib, iout = [], [], []
            for a, ea in enumerate(self.exps):
                da = self.degree[a]
                for b in range(self.sizes[self.order - da + 1]):
                    eb = self.exps[b]
                    iout.append(self.index[tuple(x + y for x, y in zip(ea, eb))])
                    ia.append(a)
                    ib.append(b)
            self._mul = (
                np.array(ia, dtype=np.int64),
                np.array(ib, dtype=np.int64),
                np.array(iout, dtype=np.int64),
            )
        return self._mul

    def deriv_map(self, var: int) -> tuple[np.ndarray, np.ndarray]:
        """Index map realizing d/d(var): tables of order-1 jets index into us."""
        got = self._deriv.get(var)
        if got is None:
            lower = _tables(self.nvars, self.order - 1)
            src = np.empty(lower.size, dtype=np.int64)
            mult = np.empty(lower.size, dtype=np.float64)
            for t, e in enumerate(lower.exps):
                bumped = list(e)
                bumped[var] += 1
                src[t] = self.index[tuple(bumped)]
                mult[t] = e[var] + 1
            got = (src, mult)
            self._deriv[var] = got
        return got


@lru_cache(maxsize=None)
def _tables(nvars: int, order: int) -> _Tables:
    if nvars < 1 or order < 0:
        raise ValueError("need nvars >= 1 and order >= 0")
    return _Tables(nvars, order)


def _is_number(v) -> bool:
    return isinstance(v, (int, float, np.integer, np.floating))


# ---------------------------------------------------------------------------
# jets


class Jet:
    """Taylor coefficients of a scalar about a point, truncated at `order`.

    coeffs[i] is the series coefficient c_alpha for the i-th multi-index, so
    the mixed partial for alpha is c_alpha * alpha!.
    """

    __slots__ = ("nvars", "order", "c")

    def __init__(self, nvars: int, order: int, coeffs: np.ndarray):
        self.nvars = nvars
        self.order = order
        self.c = coeffs

    # -- constructors

    @classmethod
    def constant(cls, value: float, nvars: int, order: int) -> "Jet":
        c = np.zeros(_tables(nvars, order).size)
        c[0] = value
        return cls(nvars, order, c)

    @classmethod
    def variable(cls, index: int, value: float, nvars: int, order: int) -> "Jet":
        if order < 1:
            raise ValueError("coordinate jets need order >= 1")
        c = np.zeros(_tables(nvars, order).size)
        c[0] = value
        c[1 + index] = 1.0
        return cls(nvars, order, c)

    # -- coefficient access

    @property
    def value(self) -> float:
        return float(self.c[0])

    @property
    def coeffs(self) -> np.ndarray:
        return self.c

    def coefficient(self, alpha: Sequence[int]) -> float:
        """Raw series coefficient c_alpha."""
        tab = _tables(self.nvars, self.order)
        idx = tab.index.get(tuple(alpha))
        if idx is None:
            raise ValueError(f"multi-index {tuple(alpha)} outside order {self.order}")
        return float(self.c[idx])

    def partial(self, alpha: Sequence[int]) -> float:
        """Mixed partial derivative value: c_alpha * alpha!."""
        fact = 1.0
        for a in alpha:
            fact *= math.factorial(a)
        return self.coefficient(alpha) * fact

    def deriv(self, var: int) -> "Jet":
        """Partial derivative with respect to one chart variable, one order lower."""
        if self.order < 1:
            raise ValueError("cannot differentiate an order-0 jet")
        src, mult = _tables(self.nvars, self.order).deriv_map(var)
        return Jet(self.nvars, self.order - 1, self.c[src] * mult)

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError("cannot extend a jet to higher order")
        if order == self.order:
            return self
        return Jet(self.nvars, order, self.c[: _tables(self.nvars, order).size])

    # -- ring operations

    def _pair(self, other: "Jet") -> tuple[int, np.ndarray, np.ndarray]:
        if other.nvars != self.nvars:
            raise ValueError("jets over different variable sets")
        k = min(self.order, other.order)
        t = _tables(self.nvars, k).size
        return k, self.c[:t], other.c[:t]

    def __add__(self, other):
        if isinstance(other, Jet):
            k, a, b = self._pair(other)
            return Jet(self.nvars, k, a + b)
        if _is_number(other):
            c = self.c.copy()
            c[0] += other
            return Jet(self.nvars, self.order, c)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.nvars, self.order, -self.c)

    def __sub__(self, other):
        if isinstance(other, Jet):
            k, a, b = self._pair(other)
            return Jet(self.nvars, k, a - b)
        if _is_number(other):
            c = self.c.copy()
            c[0] -= other
            return Jet(self.nvars, self.order, c)
        return NotImplemented

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if isinstance(other, Jet):
            k, a, b = self._pair(other)
            tab = _tables(self.nvars, k)
            ia, ib, iout = tab.mul
            return Jet(self.nvars, k, np.bincount(iout, a[ia] * b[ib], minlength=tab.size))
        if _is_number(other):
            return Jet(self.nvars, self.order, self.c * other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other._reciprocal()
        if _is_number(other):
            return Jet(self.nvars, self.order, self.c / other)
        return NotImplemented

    def __rtruediv__(self, other):
        if _is_number(other):
            return self._reciprocal() * other
        return NotImplemented

    def __pow__(self, expo):
        if isinstance(expo, (int, np.integer)):
            e = int(expo)
            if e < 0:
                return (self ** (-e))._reciprocal()
            out = Jet.constant(1.0, self.nvars, self.order)
            base = self
            while e:
                if e & 1:
                    out = out * base
                base = base * base if e > 1 else base
                e >>= 1
            return out
        if _is_number(expo):
            return power(self, float(expo))
        return NotImplemented

    def _analytic(self, series: Sequence[float]) -> "Jet":
        """Compose a power series sum a_k u^k with u = self - self.value (Horner)."""
        u = Jet(self.nvars, self.order, self.c.copy())
        u.c[0] = 0.0
        out = series[-1]
        for k in range(len(series) - 2, -1, -1):
            out = out * u + series[k]
        if not isinstance(out, Jet):  # order 0 operand
            out = Jet.constant(out, self.nvars, self.order)
        return out

    def _reciprocal(self) -> "Jet":
        f0 = self.value
        if f0 == 0.0:
            raise EvaluationDomainError("division by a jet with zero value")
        series = [(-1.0) ** k * f0 ** (-1 - k) for k in range(self.order + 1)]
        return self._analytic(series)

    def __repr__(self):
        return f"Jet(nvars={self.nvars}, order={self.order}, value={self.value!r})"


# ---------------------------------------------------------------------------
# smooth primitives that accept floats or jets


def sqrt(z):
    if isinstance(z, Jet):
        return power(z, 0.5)
    if z <= 0:
        raise EvaluationDomainError(f"sqrt of nonpositive value {z!r}")
    return math.sqrt(z)


def exp(z):
    if isinstance(z, Jet):
        e0 = math.exp(z.value)
        series = [e0 / math.factorial(k) for k in range(z.order + 1)]
        return z._analytic(series)
    return math.exp(z)


def log(z):
    if isinstance(z, Jet):
        f0 = z.value
        if f0 <= 0:
            raise EvaluationDomainError(f"log of nonpositive value {f0!r}")
        series = [math.log(f0)]
        series += [(-1.0) ** (k + 1) / (k * f0**k) for k in range(1, z.order + 1)]
        return z._analytic(series)
    if z <= 0:
        raise EvaluationDomainError(f"log of nonpositive value {z!r}")
    return math.log(z)


def power(z, r: float):
    """z**r for real r (z > 0 required unless r is a nonnegative integer)."""
    if not isinstance(z, Jet):
        if z <= 0 and not float(r).is_integer():
            raise EvaluationDomainError(f"power {r} of nonpositive value {z!r}")
        return z**r
    if float(r).is_integer():
        return z ** int(r)
    f0 = z.value
    if f0 <= 0:
        raise EvaluationDomainError(f"power {r} of nonpositive value {f0!r}")
    series = []
    a = f0**r
    for k in range(z.order + 1):
        series.append(a)
        a *= (r - k) / (k + 1) / f0
    return z._analytic(series)


# ---------------------------------------------------------------------------
# chart points


@dataclass(frozen=True, eq=False)
class ChartPoint:
    """A point of the slit cotangent chart: base coordinates x, momenta p != 0."""

    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if x.ndim != 1 or p.shape != x.shape:
            raise ValueError("x and p must be 1-d arrays of equal length")
        if x.size < 2:
            raise ValueError("chart dimension must be at least 2")
        if not (np.isfinite(x).all() and np.isfinite(p).all()):
            raise ValueError("non-finite chart coordinates")
        if float(np.linalg.norm(p)) == 0.0:
            raise EvaluationDomainError("momentum p = 0 is outside the slit bundle")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def coords(self) -> np.ndarray:
        return np.concatenate([self.x, self.p])

    def key(self) -> tuple:
        return (self.x.tobytes(), self.p.tobytes())

    def __repr__(self):
        return f"ChartPoint(x={self.x.tolist()}, p={self.p.tolist()})"


# ---------------------------------------------------------------------------
# jet evaluation of a scalar field


def jet_eval(f: Callable, at: ChartPoint, order: int) -> Jet:
    """Evaluate f(x, p) on coordinate jets, returning its Taylor table.

    f receives two lists of jets (x variables first, then p) and must be
    built from arithmetic and the smooth primitives of this module.
    """
    n = at.n
    nv = 2 * n
    xs = [Jet.variable(i, at.x[i], nv, order) for i in range(n)]
    ps = [Jet.variable(n + i, at.p[i], nv, order) for i in range(n)]
    out = f(xs, ps)
    if _is_number(out):
        out = Jet.constant(float(out), nv, order)
    if not isinstance(out, Jet):
        raise TypeError("field did not evaluate to a jet or number")
    if not np.isfinite(out.c).all():
        raise EvaluationDomainError("non-finite jet coefficients at " + repr(at))
    return out


# ---------------------------------------------------------------------------
# finite differences


def fd_derivative(
    f: Callable,
    at: ChartPoint,
    dirs: Sequence[int],
    steps: tuple[float, float] = DEFAULT_FD_STEPS,
) -> tuple[float, float]:
    """Iterated central-difference mixed partial with Richardson extrapolation.

    dirs lists chart-variable indices (0..n-1 base, n..2n-1 momentum), one
    entry per derivative, repeats allowed.  Steps are taken relative to the
    coordinate magnitude (absolute below magnitude 1).  Returns the
    extrapolated value and an error estimate combining the two-step
    disagreement with a roundoff floor.
    """
    base = at.coords
    nv = base.size
    h1, h2 = steps
    if not (h1 > h2 > 0):
        raise ValueError("steps must satisfy h1 > h2 > 0")
    dirs = list(dirs)
    for d in dirs:
        if not 0 <= d < nv:
            raise ValueError(f"direction {d} outside chart variables 0..{nv - 1}")

    def evaluate(step: float) -> tuple[float, float, float]:
        h = np.array([step * max(1.0, abs(base[d])) for d in range(nv)])
        stencil: dict[tuple[int, ...], float] = {tuple([0] * nv): 1.0}
        for d in dirs:
            hd = h[d]
            if base[d] + hd == base[d]:
                raise EvaluationDomainError(f"FD step underflow in direction {d}")
            nxt: dict[tuple[int, ...], float] = {}
            for off, c in stencil.items():
                for sgn in (1, -1):
                    o = list(off)
                    o[d] += sgn
                    ot = tuple(o)
                    nxt[ot] = nxt.get(ot, 0.0) + sgn * c / (2.0 * hd)
            stencil = nxt
        total, absc, fmax = 0.0, 0.0, 0.0
        for off, c in stencil.items():
            pt = base + np.array(off) * h
            val = f(pt[: at.n], pt[at.n :])
            if not np.isfinite(val):
                raise EvaluationDomainError(f"non-finite evaluation at offset {off}")
            total += c * float(val)
            absc += abs(c)
            fmax = max(fmax, abs(float(val)))
        return total, absc, fmax

    if not dirs:
        v, _, _ = evaluate(h1)
        return v, 0.0

    d1, _, _ = evaluate(h1)
    d2, absc2, fmax2 = evaluate(h2)
    ratio2 = (h1 / h2) ** 2
    extrap = d2 + (d2 - d1) / (ratio2 - 1.0)
    roundoff = absc2 * _EPS * max(fmax2, 1e-300)
    err = abs(d2 - d1) / (ratio2 - 1.0) + roundoff
    return extrap, err


# ---------------------------------------------------------------------------
# guarded dense inversion


def _worst_pivot(m: np.ndarray) -> tuple[float, int]:
    """Partial-pivot elimination, reporting the smallest pivot magnitude."""
    a = np.array(m, dtype=float)
    k = a.shape[0]
    worst = (math.inf, -1)
    for col in range(k):
        r = col + int(np.argmax(np.abs(a[col:, col])))
        if r != col:
            a[[col, r]] = a[[r, col]]
        piv = abs(a[col, col])
        if piv < worst[0]:
            worst = (piv, col)
        if piv == 0.0:
            break
        a[col + 1 :] -= np.outer(a[col + 1 :, col] / a[col, col], a[col])
    return worst


def invert(m: np.ndarray, cond_bound: float = CONDITION_BOUND) -> np.ndarray:
    """Invert a symmetric matrix with symmetry and conditioning guards."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("invert expects a square matrix")
    scale = max(float(np.max(np.abs(m))), 1.0)
    if float(np.max(np.abs(m - m.T))) > 1e-10 * scale:
        raise ValueError("matrix is not symmetric within 1e-10 relative")
    cond = float(np.linalg.cond(m))
    if not np.isfinite(cond) or cond > cond_bound:
        piv, idx = _worst_pivot(m)
        raise ConditioningError(
            f"condition estimate {cond:.3e} exceeds bound {cond_bound:.1e} "
            f"(worst pivot {piv:.3e} at elimination step {idx})"
        )
    inv = np.linalg.inv(m)
    residual = float(np.max(np.abs(m @ inv - np.eye(m.shape[0]))))
    if residual > 1e-10:
        piv, idx = _worst_pivot(m)
        raise ConditioningError(
            f"inverse residual {residual:.3e} exceeds 1e-10 "
            f"(worst pivot {piv:.3e} at elimination step {idx})"
        )
    return inv
