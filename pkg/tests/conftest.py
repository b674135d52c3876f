"""Shared helpers for the test suite."""
import numpy as np

from cartanlab.cartan import (
    conformal_structure,
    flat_structure,
    randers_dual,
)
from cartanlab.jets import ChartPoint


def pt(x, p):
    return ChartPoint(np.asarray(x, dtype=float), np.asarray(p, dtype=float))


def builtin_structures(n=2):
    return [
        flat_structure(n),
        conformal_structure(n, -1.0),
        conformal_structure(n, 1.0),
        randers_dual(n=n),
    ]


def general_randers(n=2, c=-1.0, drift=0.3):
    """Randers structure over a curved base: x-dependent fundamental tensor
    with a nonvanishing Landsberg tensor (unlike the constant built-in)."""

    def a_fn(xs):
        phi = 1.0 + (c / 4.0) * sum(q * q for q in xs)
        w = 1.0 / (phi * phi)
        return [[w if i == j else 0.0 for j in range(n)] for i in range(n)]

    b = np.zeros(n)
    b[0] = drift
    return randers_dual(a_fn, b, n=n, label=f"randers-curved-{n}d", x_box=0.9)


def christoffel_fd(a_fn, x, n=2, h=1e-4):
    """FD Christoffel symbols of a base metric a_ij(x)."""
    x = np.asarray(x, dtype=float)
    a = np.asarray(a_fn(x), dtype=float)
    ainv = np.linalg.inv(a)
    da = np.empty((n, n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        da[k] = (np.asarray(a_fn(x + e), dtype=float) - np.asarray(a_fn(x - e), dtype=float)) / (2 * h)
    gam = np.empty((n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                s = 0.0
                for m in range(n):
                    s += ainv[i, m] * (da[j, m, k] + da[k, m, j] - da[m, j, k])
                gam[i, j, k] = 0.5 * s
    return gam
