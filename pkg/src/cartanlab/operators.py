"""Divergence, gradient, and Laplace operators in the adapted frame, plus the
geodesic spray / Liouville field and the mean-Landsberg characterizations.

The divergence is the frame-trace divergence used throughout: the components
of X in the adapted frame are frozen at the evaluation point and multiplied
by the divergences of the frame fields themselves,

    div(X) = X^i div(delta_i) + Xbar_i div(pdot^i),

with div(delta_i), div(pdot^i) computed as genuine traces of the Levi-Civita
coefficient tables.  Under this definition the vertical frame divergences
vanish identically, the Liouville field is divergence-free, and the Laplacian
of a scalar reduces to the closed first-order form checked below.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EvaluationDomainError
from .geometry import FrameVector, PointGeometry, values_of
from .jets import ChartPoint, Jet, fd_derivative
from .kahler import BundleMetric, DeformationParams
from .levicivita import LCConnection, lc_closed_form

__all__ = [
    "OperatorContext",
    "operator_context",
    "divergence",
    "gradient",
    "directional_derivative",
    "LaplacianResult",
    "laplacian",
    "geodesic_spray",
    "liouville_field",
    "landsberg_characterizations",
    "fd_dln_sqrtg_h",
]

_FD_STEPS = (1e-3, 5e-4)


@dataclass(frozen=True)
class OperatorContext:
    """Cached per-point data for the section's operators."""

    structure: object
    params: DeformationParams
    at: ChartPoint
    geom: PointGeometry
    metric: BundleMetric
    conn: LCConnection
    sqrt_g: float
    #: div(delta_j) over the adapted frame (trace of the connection tables)
    div_h: np.ndarray
    #: div(pdot^j) over the adapted frame (identically zero in closed form,
    #: kept as the computed trace)
    div_v: np.ndarray
    #: mean Landsberg trace J_i = L^s_{si}
    J: np.ndarray
    #: delta_i(ln sqrt g), jet-exact route
    H_trace: np.ndarray


def operator_context(
    s,
    at: ChartPoint,
    params: DeformationParams,
    geom: PointGeometry = None,
    metric: BundleMetric = None,
) -> OperatorContext:
    if geom is None:
        geom = metric.geom if metric is not None else PointGeometry(s, at)
    if metric is None:
        metric = BundleMetric(geom, params)
    det_g = float(np.linalg.det(geom.g_down))
    if det_g <= 0.0:
        raise EvaluationDomainError(f"det(g_ij) = {det_g:g} is not positive")
    conn = lc_closed_form(s, at, params, geom, metric)
    n = geom.n
    div_h = np.array(
        [
            sum(conn.h_h.h[i, j, i] for i in range(n))
            + sum(conn.v_h.v[i, j, i] for i in range(n))
            for j in range(n)
        ]
    )
    div_v = np.array(
        [
            sum(conn.h_v.h[i, j, i] for i in range(n))
            + sum(conn.v_v.v[i, j, i] for i in range(n))
            for j in range(n)
        ]
    )
    J = np.einsum("ssi->i", geom.L_udd)
    return OperatorContext(
        structure=s,
        params=params,
        at=at,
        geom=geom,
        metric=metric,
        conn=conn,
        sqrt_g=float(np.sqrt(det_g)),
        div_h=div_h,
        div_v=div_v,
        J=J,
        H_trace=geom.dln_sqrtg_h.copy(),
    )


def _components(ctx, X):
    if isinstance(X, FrameVector):
        return X.h_values, X.v_values
    xh, xv = X
    return np.asarray(xh, dtype=float), np.asarray(xv, dtype=float)


def divergence(ctx: OperatorContext, X) -> float:
    """Frame-trace divergence of X = X^i delta_i + Xbar_i pdot^i with the
    components frozen at the evaluation point."""
    xh, xv = _components(ctx, X)
    return float(xh @ ctx.div_h + xv @ ctx.div_v)


def _scalar_partials(ctx: OperatorContext, f):
    """All 2n chart partials of a scalar; jet-exact for Jet inputs, finite
    differences for callables of a chart point."""
    n = ctx.geom.n
    if isinstance(f, Jet):
        dx = np.array([f.deriv(i).value for i in range(n)])
        dp = np.array([f.deriv(n + i).value for i in range(n)])
        return dx, dp
    def split(xs, ps):
        return f(ChartPoint(np.asarray(xs, dtype=float), np.asarray(ps, dtype=float)))

    dx = np.empty(n)
    dp = np.empty(n)
    for i in range(n):
        dx[i], _ = fd_derivative(split, ctx.at, [i], steps=_FD_STEPS)
        dp[i], _ = fd_derivative(split, ctx.at, [n + i], steps=_FD_STEPS)
    return dx, dp


def _frame_partials(ctx: OperatorContext, f):
    """(delta_i f, pdot^i f) from the chart partials."""
    dx, dp = _scalar_partials(ctx, f)
    return dx + ctx.geom.N @ dp, dp


def gradient(ctx: OperatorContext, f) -> FrameVector:
    """grad f = G^{ih} (delta_h f) delta_i + G_{ih} (pdot^h f) pdot^i.

    f may be a callable of a chart point (finite-difference partials) or a
    jet at the context point (exact partials).
    """
    df_h, df_v = _frame_partials(ctx, f)
    return FrameVector(ctx.geom, ctx.metric.G_up @ df_h, ctx.metric.G_down @ df_v)


def directional_derivative(ctx: OperatorContext, f, X) -> float:
    """X f for a frame vector X, using the same partials as gradient."""
    df_h, df_v = _frame_partials(ctx, f)
    xh, xv = _components(ctx, X)
    return float(xh @ df_h + xv @ df_v)


def fd_dln_sqrtg_h(ctx: OperatorContext, steps=_FD_STEPS) -> np.ndarray:
    """delta_i(ln sqrt det g) with the x-partials by Richardson-extrapolated
    finite differences of fresh low-order geometries and the p-partials by
    jets; independent of the connection-trace route."""
    s = ctx.structure
    at = ctx.at
    n = ctx.geom.n

    def field(pt: ChartPoint) -> float:
        g = PointGeometry(s, pt, order=2)
        return 0.5 * float(np.log(np.linalg.det(g.g_down)))

    out = np.empty(n)
    for i in range(n):
        base = at.coords
        scale = max(1.0, abs(base[i]))
        ds = []
        for h in steps:
            hh = h * scale
            plus = base.copy()
            minus = base.copy()
            plus[i] += hh
            minus[i] -= hh
            ds.append(
                (field(ChartPoint(plus[:n], plus[n:])) - field(ChartPoint(minus[:n], minus[n:])))
                / (2.0 * hh)
            )
        ratio = (steps[0] / steps[1]) ** 2
        out[i] = (ratio * ds[1] - ds[0]) / (ratio - 1.0)
    return out + ctx.geom.N @ ctx.geom.dln_sqrtg_v


@dataclass(frozen=True)
class LaplacianResult:
    """Laplacian by both routes: the frame-trace divergence of the gradient,
    and the closed first-order form G^{ih} (delta_h f)(delta_i ln sqrt g - J_i)
    with the log-volume derivative taken by finite differences."""

    direct: float
    closed: float

    @property
    def difference(self) -> float:
        return abs(self.direct - self.closed)


def laplacian(ctx: OperatorContext, f) -> LaplacianResult:
    direct = divergence(ctx, gradient(ctx, f))
    df_h, _ = _frame_partials(ctx, f)
    weight = fd_dln_sqrtg_h(ctx) - ctx.J
    closed = float(df_h @ ctx.metric.G_up @ weight)
    return LaplacianResult(direct=direct, closed=closed)


def geodesic_spray(ctx: OperatorContext) -> FrameVector:
    """S = p^i delta_i."""
    p_up = values_of(ctx.geom.p_up_jets)
    return FrameVector(ctx.geom, p_up, np.zeros(ctx.geom.n))


def liouville_field(ctx: OperatorContext) -> FrameVector:
    """C* = p_i pdot^i."""
    return FrameVector(ctx.geom, np.zeros(ctx.geom.n), ctx.at.p.copy())


def landsberg_characterizations(ctx: OperatorContext, tol: float = 1e-6) -> dict:
    """Pointwise report of the mean-Landsberg equivalences.

    Reports the mean Landsberg trace J_i, the log-volume frame derivative
    delta_i(ln sqrt g) (finite-difference route), their difference, div(S),
    and booleans: `mean_landsberg` (J = 0), `balanced` (J_i = delta_i ln
    sqrt g), `divergence_consistent` (div S equals its trace identity
    p^i delta_i ln sqrt g - p^i J_i), and `chain_consistent` (if the balanced
    condition holds then div S = 0).
    """
    dln = fd_dln_sqrtg_h(ctx)
    p_up = values_of(ctx.geom.p_up_jets)
    div_s = divergence(ctx, geodesic_spray(ctx))
    identity = float(p_up @ dln - p_up @ ctx.J)
    balanced = bool(np.abs(ctx.J - dln).max() <= tol)
    report = {
        "J": ctx.J.copy(),
        "dln_sqrtg_h": dln,
        "difference": ctx.J - dln,
        "div_S": div_s,
        "p_contracted_J": float(p_up @ ctx.J),
        "mean_landsberg": bool(np.abs(ctx.J).max() <= tol),
        "balanced": balanced,
        "divergence_consistent": bool(abs(div_s - identity) <= max(tol, 1e-5)),
        "chain_consistent": (not balanced) or abs(div_s) <= max(tol, 1e-5),
    }
    return report
