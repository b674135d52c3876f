"""Deformed bundle metric, almost complex structure, fundamental 2-form, and
the integrability (Nijenhuis) machinery on the slit cotangent bundle.

The metric couples the base fundamental tensor with a momentum deformation:

    G_ij = (1/beta) g_ij + (v(tau)/(alpha beta)) p_i p_j      (h-h block)
    G^ij = its matrix inverse                                  (v-v block)

in the adapted frame; the off-diagonal blocks vanish.  The inverse has the
closed rank-one-update form G^kl = beta g^kl - (v beta/(alpha + 2 tau v))
p^k p^l, and positivity holds exactly when alpha, beta > 0 and
alpha + 2 tau v > 0.  The constant-curvature specialization v = -c alpha
beta^2 is the one whose almost complex structure can be integrable; then

    G_ij = (1/beta) g_ij - c beta p_i p_j
    G^ij = beta g^ij + (c beta^3 / (1 - 2 c beta^2 tau)) p^i p^j.

J maps delta_i -> G_ik pdot^k and pdot^i -> -G^ik delta_k; the fundamental
form G(X, JY) is the canonical symplectic pairing of the chart regardless of
the deformation parameters.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from .errors import EvaluationDomainError
from .geometry import FrameVector, PointGeometry, values_of
from .jets import ChartPoint, Jet

__all__ = [
    "DeformationParams",
    "BundleMetric",
    "FrameVector",
    "IntegrabilityDefect",
    "bundle_metric",
    "almost_complex",
    "fundamental_form",
    "theta_matrix",
    "nijenhuis",
    "integrability_defect",
    "tube_predicate",
]


@dataclass(frozen=True, eq=False)
class DeformationParams:
    """Scaling constants alpha, beta > 0 and the deformation profile.

    Give either c (profile v = -c alpha beta^2, constant) or v (a constant,
    a callable of tau, or an expression string over 'tau').  Omitting both
    means v = 0.
    """

    alpha: float = 1.0
    beta: float = 1.0
    c: Optional[float] = None
    v: Union[None, float, str, Callable] = None

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError(
                f"scaling constants must be positive: alpha={self.alpha}, beta={self.beta}"
            )
        if self.c is not None and self.v is not None:
            raise ValueError("give either c or v, not both")
        c = self.c
        v = self.v
        if c is None and v is None:
            c = 0.0
        if c is not None:
            const = -c * self.alpha * self.beta**2
            fn = lambda tau: const
            desc = f"c={c:g}"
        elif isinstance(v, (int, float)):
            const = float(v)
            fn = lambda tau: const
            desc = f"v={const:g}"
        elif isinstance(v, str):
            from .cartan import parse_scalar_expression

            compiled = parse_scalar_expression(v, ["tau"])
            fn = lambda tau: compiled({"tau": tau})
            desc = f"v={v}"
        elif callable(v):
            fn = v
            desc = "v=<callable>"
        else:
            raise ValueError(f"unsupported deformation profile {v!r}")
        object.__setattr__(self, "_v_fn", fn)
        object.__setattr__(self, "_desc", desc)

    def v_at(self, tau):
        """Deformation profile value; accepts floats or jets."""
        return self._v_fn(tau)

    def c_at(self, tau: float) -> float:
        """Effective curvature constant -v(tau)/(alpha beta^2) at this energy."""
        out = self.v_at(tau)
        val = out.value if isinstance(out, Jet) else float(out)
        return -val / (self.alpha * self.beta**2)

    def describe(self) -> str:
        return f"alpha={self.alpha:g},beta={self.beta:g},{self._desc}"

    def __repr__(self):
        return f"DeformationParams({self.describe()})"


class BundleMetric:
    """Block-diagonal metric on the slit bundle in the adapted frame."""

    def __init__(self, geom: PointGeometry, params: DeformationParams):
        self.geom = geom
        self.at = geom.at
        self.params = params
        n = geom.n
        tau_jet = geom.k2 * 0.5
        v_jet = params.v_at(tau_jet)
        v_val = v_jet.value if isinstance(v_jet, Jet) else float(v_jet)
        gauge = params.alpha + 2.0 * geom.tau * v_val
        if gauge <= 0.0:
            raise EvaluationDomainError(
                f"deformed metric loses positivity: alpha + 2 tau v = {gauge:.6e} "
                f"<= 0 at {self.at!r} (tau={geom.tau:.6f}, v={v_val:.6f})"
            )
        self.v_value = v_val
        self.gauge = gauge

        p = geom.p_coord(3)
        pu = geom.p_up_jets
        a, b = params.alpha, params.beta
        down = np.empty((n, n), dtype=object)
        up = np.empty((n, n), dtype=object)
        v_is_zero = not isinstance(v_jet, Jet) and v_val == 0.0
        if not v_is_zero:
            vj = v_jet if isinstance(v_jet, Jet) else tau_jet * 0.0 + v_val
            gauge_jet = (tau_jet * vj) * 2.0 + a
            down_scale = vj * (1.0 / (a * b))
            up_scale = (vj * b) / gauge_jet
        for i in range(n):
            for j in range(i, n):
                d = geom.g_down_jets[i, j] * (1.0 / b)
                u = geom.g_up_jets[i, j] * b
                if not v_is_zero:
                    d = d + p[i] * p[j] * down_scale
                    u = u - pu[i] * pu[j] * up_scale
                down[i, j] = d
                down[j, i] = d
                up[i, j] = u
                up[j, i] = u
        self.G_down_jets = down
        self.G_up_jets = up
        self.G_down = values_of(down)
        self.G_up = values_of(up)

    @property
    def n(self):
        return self.geom.n

    def inner(self, x: FrameVector, y: FrameVector) -> float:
        """G(X, Y) = G_ij X^i Y^j + G^ij Xbar_i Ybar_j at the point."""
        return float(
            x.h_values @ self.G_down @ y.h_values
            + x.v_values @ self.G_up @ y.v_values
        )

    def inner_jet(self, x: FrameVector, y: FrameVector) -> Jet:
        """G(X, Y) as a jet (scalar function along the chart)."""
        n = self.n
        s = None
        for i in range(n):
            for j in range(n):
                t = x.h[i] * self.G_down_jets[i, j] * y.h[j] + x.v[i] * self.G_up_jets[i, j] * y.v[j]
                s = t if s is None else s + t
        return s


class IntegrabilityDefect(NamedTuple):
    A_res: float    # antisymmetrized frame derivative of G (h-h block)
    R_res: float    # distance of R_kij from the constant-curvature form
    A_res_g: float  # same antisymmetrization built with g instead of G


def bundle_metric(
    s, at: ChartPoint, params: DeformationParams, geom: PointGeometry = None
) -> BundleMetric:
    return BundleMetric(geom if geom is not None else PointGeometry(s, at), params)


def tube_predicate(s, params: DeformationParams):
    """Point filter keeping a safety margin inside the positivity domain:
    accepts points with alpha + 2 tau v(tau) >= 0.2 alpha (for the constant
    specialization this is 2 tau <= 0.8/(c beta^2) when c > 0, and no
    constraint when c <= 0)."""

    def accept(pt) -> bool:
        tau = 0.5 * s.k2_values(pt.x, pt.p)
        v = params.v_at(tau)
        v = v.value if isinstance(v, Jet) else float(v)
        return params.alpha + 2.0 * tau * v >= 0.2 * params.alpha

    return accept


def almost_complex(m: BundleMetric, x: FrameVector) -> FrameVector:
    """J(X): delta_i -> G_ik pdot^k, pdot^i -> -G^ik delta_k."""
    n = m.n
    h = []
    v = []
    for k in range(n):
        sh = None
        sv = None
        for i in range(n):
            th = x.v[i] * m.G_up_jets[i, k]
            tv = x.h[i] * m.G_down_jets[i, k]
            sh = th if sh is None else sh + th
            sv = tv if sv is None else sv + tv
        h.append(-sh)
        v.append(sv)
    return FrameVector(m.geom, h, v)


def fundamental_form(m: BundleMetric, x: FrameVector, y: FrameVector) -> float:
    """theta(X, Y) = G(X, JY)."""
    return m.inner(x, almost_complex(m, y))


def theta_matrix(m: BundleMetric) -> np.ndarray:
    """theta on the 2n adapted basis fields (delta_1..delta_n, pdot^1..pdot^n).

    The canonical answer is [[0, -I], [I, 0]] for any structure and any
    admissible deformation parameters.
    """
    n = m.n
    geom = m.geom
    basis = [FrameVector.delta_frame(geom, i) for i in range(n)] + [
        FrameVector.vdot_frame(geom, i) for i in range(n)
    ]
    out = np.empty((2 * n, 2 * n))
    jb = [almost_complex(m, b) for b in basis]
    for i in range(2 * n):
        for j in range(2 * n):
            out[i, j] = m.inner(basis[i], jb[j])
    return out


def _frame(geom: PointGeometry, spec) -> FrameVector:
    kind, idx = spec
    if kind == "h":
        return FrameVector.delta_frame(geom, idx)
    if kind == "v":
        return FrameVector.vdot_frame(geom, idx)
    raise ValueError(f"frame kind must be 'h' or 'v', got {kind!r}")


def nijenhuis(
    s,
    at: ChartPoint,
    params: DeformationParams,
    pair,
    geom: PointGeometry = None,
    metric: BundleMetric = None,
) -> FrameVector:
    """Nijenhuis tensor N_J(X, Y) on a pair of adapted frame fields.

    pair is two (kind, index) tuples with kind 'h' for delta_i and 'v' for
    pdot^i.  Computed from Lie brackets of the J-images; the brackets are
    evaluated on exact jet coefficients.
    """
    geom = geom if geom is not None else PointGeometry(s, at)
    m = metric if metric is not None else BundleMetric(geom, params)
    x = _frame(geom, pair[0])
    y = _frame(geom, pair[1])
    jx = almost_complex(m, x)
    jy = almost_complex(m, y)
    t1 = jx.bracket(jy)
    t2 = almost_complex(m, jx.bracket(y))
    t3 = almost_complex(m, x.bracket(jy))
    t4 = x.bracket(y)
    return t1 - t2 - t3 - t4


def integrability_defect(
    s,
    at: ChartPoint,
    params: DeformationParams,
    geom: PointGeometry = None,
) -> IntegrabilityDefect:
    """Residuals of the two closed-form integrability conditions.

    A_res antisymmetrizes the frame derivative of the h-h metric block
    against the connection correction (vanishes identically, any profile);
    R_res measures how far R_kij is from c (g_jk p_i - g_ik p_j) with the
    effective constant c = -v(tau)/(alpha beta^2); A_res_g is the same
    antisymmetrization with the undeformed g.
    """
    geom = geom if geom is not None else PointGeometry(s, at)
    m = BundleMetric(geom, params)
    n = geom.n
    bv = geom.B
    gd = geom.g_down
    Gd = m.G_down
    dG = np.empty((n, n, n))  # dG[i, j, k] = delta_i G_jk
    dg = np.empty((n, n, n))
    for j in range(n):
        for k in range(j, n):
            dj = geom.delta(m.G_down_jets[j, k])
            djg = geom.delta(geom.g_down_jets[j, k])
            for i in range(n):
                dG[i, j, k] = dj[i].value
                dG[i, k, j] = dj[i].value
                dg[i, j, k] = djg[i].value
                dg[i, k, j] = djg[i].value
    a_res = 0.0
    a_res_g = 0.0
    for k in range(n):
        for i in range(n):
            for j in range(i + 1, n):
                corr = sum(Gd[i, r] * bv[r, j, k] - Gd[j, r] * bv[r, i, k] for r in range(n))
                corr_g = sum(gd[i, r] * bv[r, j, k] - gd[j, r] * bv[r, i, k] for r in range(n))
                a_res = max(a_res, abs(dG[i, j, k] - dG[j, i, k] + corr))
                a_res_g = max(a_res_g, abs(dg[i, j, k] - dg[j, i, k] + corr_g))
    c = params.c_at(geom.tau)
    p = at.p
    r_res = 0.0
    for k in range(n):
        for i in range(n):
            for j in range(n):
                want = c * (gd[j, k] * p[i] - gd[i, k] * p[j])
                r_res = max(r_res, abs(geom.R_vv[k, i, j] - want))
    return IntegrabilityDefect(A_res=a_res, R_res=r_res, A_res_g=a_res_g)
