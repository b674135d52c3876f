"""Check registry and suite runner for the batch verification front end.

Each check is a named, anchored property evaluated per sampled chart
point.  Checks come in two scopes:

* ``structure`` -- properties of one Hamiltonian structure alone
  (fundamental tensors, Berwald calculus);
* ``pair``      -- properties of a structure together with one
  deformation-parameter set (bundle metric, connection, curvature,
  operators).

Points are rejection-sampled per scope from a deterministic seed stream
derived from the manifest seed, so two runs of the same manifest emit
identical reports.  Per-point evaluation errors are recorded as failing
records with ``residual: null``; they never abort the suite.

Applicability gating (resolved empirically; see the formula index):

* Checks marked *matching only* require the structure to carry a known
  constant ``c`` for the shape of its nonlinear-connection curvature and
  the parameter set to use the same ``c``.  These are the ones whose
  closed forms substitute that shape: Koszul agreement, torsion, the two
  horizontal-horizontal curvature blocks, the Einstein checks, the
  Nijenhuis checks, and the spray-divergence identity.
* Everything else is an identity of the coefficient field and runs on
  every structure/params pairing.

Two checks run in *detection* mode: instead of requiring a residual
below tolerance they require it **above** a floor (a deliberately broken
input must be seen to fail).  Their ``tolerance`` field records the
floor and is not rescaled by ``--tol-scale``.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import __version__
from .berwald import (
    DTensor,
    berwald_curvature_fd,
    delta_apply,
    metric_delta_identity,
    nonlinear_connection_fd,
)
from .cartan import sample_points
from .errors import CartanLabError
from .formulas import INDEX
from .geometry import FrameVector, PointGeometry, values_of
from .jets import ChartPoint, fd_derivative, jet_eval
from .kahler import (
    BundleMetric,
    DeformationParams,
    almost_complex,
    nijenhuis,
    theta_matrix,
    tube_predicate,
)
from .levicivita import (
    MetricStencil,
    connection_defects,
    curvature_closed,
    curvature_context,
    curvature_defn,
    koszul_oracle,
    lc_closed_form,
    ricci,
    vertical_ricci_obstruction,
)
from .manifest import Manifest, build_structure
from .operators import (
    directional_derivative,
    divergence,
    fd_dln_sqrtg_h,
    geodesic_spray,
    gradient,
    laplacian,
    liouville_field,
    operator_context,
)

__all__ = ["CheckRecord", "CheckSpec", "REGISTRY", "run_suite"]


class SkipPoint(Exception):
    """Raised by a runner to exclude one point without emitting a record
    (e.g. a perturbed parameter set loses positivity there)."""


@dataclass(frozen=True)
class CheckRecord:
    check_id: str
    anchor: str
    structure: str
    point: Optional[dict]
    residual: Optional[float]
    tolerance: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "check_id": self.check_id,
            "anchor": self.anchor,
            "structure": self.structure,
            "point": self.point,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class CheckSpec:
    check_id: str
    anchor: str
    category: str  # tolerance category: jet_exact | fd_single | fd_double
    scope: str  # "structure" | "pair"
    run: Callable  # (ctx, idx, pt) -> float residual
    tol_factor: float = 1.0
    cap: Optional[int] = None  # max points; None = full sample
    mode: str = "bound"  # "bound": residual <= tol; "exceeds": residual >= floor
    floor: float = 0.0  # detection threshold for "exceeds" mode
    applies: Callable = lambda ctx: True


class CheckContext:
    """Sampled points plus memoized per-point geometry for one scope."""

    def __init__(self, manifest, structure, config, s_index, params=None, param_label=None, p_index=None):
        self.manifest = manifest
        self.structure = structure
        self.config = config
        self.params = params
        self.param_label = param_label
        self._scope_key = (s_index, 0 if p_index is None else p_index + 1)
        sampling = manifest.sampling
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=sampling.seed, spawn_key=self._scope_key)
        )
        accept = tube_predicate(structure, params) if params is not None else None
        self.points = sample_points(
            structure, sampling.count, rng, sampling.p_norm, accept=accept
        )
        self.memo = {}

    @property
    def tag(self) -> str:
        if self.params is None:
            return self.structure.label
        return f"{self.structure.label}|{self.param_label}"

    def rng_for(self, check_id: str) -> np.random.Generator:
        key = self._scope_key + (zlib.crc32(check_id.encode()),)
        return np.random.default_rng(
            np.random.SeedSequence(entropy=self.manifest.sampling.seed, spawn_key=key)
        )

    def _memo(self, key, build):
        if key not in self.memo:
            self.memo[key] = build()
        return self.memo[key]

    def geometry(self, idx) -> PointGeometry:
        return self._memo(("geom", idx), lambda: PointGeometry(self.structure, self.points[idx]))

    def metric(self, idx) -> BundleMetric:
        return self._memo(("metric", idx), lambda: BundleMetric(self.geometry(idx), self.params))

    def basis(self, idx):
        def build():
            g = self.geometry(idx)
            n = g.n
            return [FrameVector.delta_frame(g, i) for i in range(n)] + [
                FrameVector.vdot_frame(g, i) for i in range(n)
            ]

        return self._memo(("basis", idx), build)

    def stencil(self) -> MetricStencil:
        return self._memo(("stencil",), lambda: MetricStencil(self.structure, self.params))

    def connection(self, idx):
        return self._memo(
            ("conn", idx),
            lambda: lc_closed_form(
                self.structure, self.points[idx], self.params,
                geom=self.geometry(idx), metric=self.metric(idx),
            ),
        )

    def defects(self, idx):
        return self._memo(
            ("defects", idx),
            lambda: connection_defects(
                self.structure, self.points[idx], self.params,
                geom=self.geometry(idx), metric=self.metric(idx),
            ),
        )

    def defn_context(self, idx):
        return self._memo(
            ("defn", idx),
            lambda: curvature_context(
                self.structure, self.points[idx], self.params,
                geom=self.geometry(idx), metric=self.metric(idx),
            ),
        )

    def ricci(self, idx):
        return self._memo(
            ("ricci", idx),
            lambda: ricci(
                self.structure, self.points[idx], self.params,
                geom=self.geometry(idx), metric=self.metric(idx),
            ),
        )

    def op_context(self, idx):
        return self._memo(
            ("opctx", idx),
            lambda: operator_context(
                self.structure, self.points[idx], self.params,
                geom=self.geometry(idx), metric=self.metric(idx),
            ),
        )


# ---------------------------------------------------------------------------
# applicability predicates


def _always(ctx) -> bool:
    return True


def _matching(ctx) -> bool:
    s, p = ctx.structure, ctx.params
    return (
        s.constant_curvature is not None
        and p.c is not None
        and abs(s.constant_curvature - p.c) < 1e-12
    )


def _matching_riemannian(ctx) -> bool:
    return _matching(ctx) and ctx.structure.is_riemannian


def _matching_nonriemannian(ctx) -> bool:
    return _matching(ctx) and not ctx.structure.is_riemannian


def _randers_family(ctx) -> bool:
    return ctx.config is not None and ctx.config.get("family") == "randers"


# ---------------------------------------------------------------------------
# structure-scope runners


def _r_jet_vs_fd(ctx, idx, pt):
    s = ctx.structure
    jet = jet_eval(s.k2, pt, 2)
    worst = 0.0
    for d in range(2 * pt.n):
        fd, _err = fd_derivative(s.k2_values, pt, [d])
        worst = max(worst, abs(jet.deriv(d).value - fd) / max(1.0, abs(fd)))
    return worst


def _r_euler(ctx, idx, pt):
    g = ctx.geometry(idx)
    n = pt.n
    lhs = sum(pt.p[i] * g.k2.deriv(n + i).value for i in range(n))
    return abs(lhs - 2.0 * g.k2.value) / max(1.0, abs(g.k2.value))


def _r_metric_reconstruction(ctx, idx, pt):
    g = ctx.geometry(idx)
    return abs(float(pt.p @ g.g_up @ pt.p) - g.k2.value) / max(1.0, abs(g.k2.value))


def _r_metric_homogeneity(ctx, idx, pt):
    g = ctx.geometry(idx)
    n = pt.n
    worst = 0.0
    for i in range(n):
        for j in range(i, n):
            acc = sum(pt.p[k] * g.g_up_jets[i, j].deriv(n + k).value for k in range(n))
            worst = max(worst, abs(acc))
    return worst


def _r_cartan_symmetry(ctx, idx, pt):
    C = ctx.geometry(idx).C_uuu
    worst = 0.0
    for perm in ((0, 2, 1), (1, 0, 2), (2, 1, 0)):
        worst = max(worst, float(np.abs(C - np.transpose(C, perm)).max()))
    return worst


def _r_cartan_transversality(ctx, idx, pt):
    C = ctx.geometry(idx).C_uuu
    return float(np.abs(np.einsum("ijk,k->ij", C, pt.p)).max())


def _r_vertical_metric_derivative(ctx, idx, pt):
    g = ctx.geometry(idx)
    n = pt.n
    C = g.C_uuu
    worst = 0.0
    for i in range(n):
        for j in range(n):
            for k in range(n):
                worst = max(worst, abs(g.g_up_jets[i, j].deriv(n + k).value + 2.0 * C[i, j, k]))
    return worst


def _r_randers_degeneration(ctx, idx, pt):
    def build():
        eps = build_structure(ctx.config, drift_scale=1e-7)
        zero = build_structure(ctx.config, drift_scale=0.0)
        return eps, zero

    eps, zero = ctx._memo(("randers-limit",), build)
    a = eps.k2_values(pt.x, pt.p)
    b = zero.k2_values(pt.x, pt.p)
    return abs(a - b) / max(1.0, abs(b))


def _r_momentum_parallel(ctx, idx, pt):
    g = ctx.geometry(idx)
    pd = DTensor(g, g.p_coord(3), "d")
    return float(np.abs(pd.h_cov().values).max())


def _r_delta_k2(ctx, idx, pt):
    g = ctx.geometry(idx)
    d = delta_apply(ctx.structure, pt, ctx.structure.k2, geom=g)
    return float(np.abs(d).max()) / max(1.0, abs(g.k2.value))


def _r_r_transversality(ctx, idx, pt):
    g = ctx.geometry(idx)
    p_up = values_of(g.p_up_jets)
    return float(np.abs(np.einsum("i,ijk->jk", p_up, g.R_vv)).max())


def _r_metric_delta(ctx, idx, pt):
    return metric_delta_identity(ctx.structure, pt, geom=ctx.geometry(idx))


def _r_landsberg_h_derivative(ctx, idx, pt):
    g = ctx.geometry(idx)
    gupt = DTensor(g, g.g_up_jets, "uu")
    return float(np.abs(gupt.h_cov().values + 2.0 * g.L_uud).max())


def _r_connection_homogeneity(ctx, idx, pt):
    g = ctx.geometry(idx)
    r1 = np.abs(np.einsum("i,ijk->jk", pt.p, g.B) - g.N).max()
    r2 = np.abs(np.einsum("h,ihjk->ijk", pt.p, g.P_curv)).max()
    return float(max(r1, r2))


def _r_n_fd_oracle(ctx, idx, pt):
    g = ctx.geometry(idx)
    fd = nonlinear_connection_fd(ctx.structure, pt)
    return float(np.abs(g.N - fd).max()) / max(1.0, float(np.abs(g.N).max()))


def _r_curvature_fd_oracle(ctx, idx, pt):
    g = ctx.geometry(idx)
    fd = berwald_curvature_fd(ctx.structure, pt)
    return float(np.abs(g.R_curv - fd).max()) / max(1.0, float(np.abs(g.R_curv).max()))


def _r_r_contraction(ctx, idx, pt):
    g = ctx.geometry(idx)
    contracted = np.einsum("h,hikj->ijk", pt.p, g.R_curv)
    return float(np.abs(contracted - g.R_vv).max())


# ---------------------------------------------------------------------------
# pair-scope runners: bundle metric algebra


def _r_j_squared(ctx, idx, pt):
    m = ctx.metric(idx)
    worst = 0.0
    for x in ctx.basis(idx):
        jjx = almost_complex(m, almost_complex(m, x))
        worst = max(
            worst,
            float(np.abs(jjx.h_values + x.h_values).max()),
            float(np.abs(jjx.v_values + x.v_values).max()),
        )
    return worst


def _r_hermitian(ctx, idx, pt):
    m = ctx.metric(idx)
    basis = ctx.basis(idx)
    jb = [almost_complex(m, b) for b in basis]
    worst = 0.0
    for i, x in enumerate(basis):
        for j in range(i, len(basis)):
            worst = max(worst, abs(m.inner(jb[i], jb[j]) - m.inner(x, basis[j])))
    return worst


def _r_theta_canonical(ctx, idx, pt):
    m = ctx.metric(idx)
    n = m.n
    eye = np.eye(n)
    zero = np.zeros((n, n))
    canonical = np.block([[zero, -eye], [eye, zero]])
    return float(np.abs(theta_matrix(m) - canonical).max())


def _r_positive_definite(ctx, idx, pt):
    m = ctx.metric(idx)
    low = min(
        float(np.linalg.eigvalsh(m.G_down).min()),
        float(np.linalg.eigvalsh(m.G_up).min()),
    )
    return max(0.0, -low)


def _nij_pairs(n):
    slots = [("h", i) for i in range(n)] + [("v", i) for i in range(n)]
    return [(a, b) for k, a in enumerate(slots) for b in slots[k + 1 :]]


def _r_nijenhuis_integrable(ctx, idx, pt):
    g = ctx.geometry(idx)
    m = ctx.metric(idx)
    worst = 0.0
    for pair in _nij_pairs(g.n):
        nj = nijenhuis(ctx.structure, pt, ctx.params, pair, geom=g, metric=m)
        worst = max(
            worst,
            float(np.abs(nj.h_values).max()),
            float(np.abs(nj.v_values).max()),
        )
    return worst


def _r_nijenhuis_detects(ctx, idx, pt):
    base = ctx.params
    tau = ctx.geometry(idx).tau
    v0 = float(base.v_at(tau))
    perturbed = DeformationParams(alpha=base.alpha, beta=base.beta, v=v0 + 0.1)
    if not tube_predicate(ctx.structure, perturbed)(pt):
        raise SkipPoint
    g = ctx.geometry(idx)
    m = BundleMetric(g, perturbed)
    worst = 0.0
    for pair in _nij_pairs(g.n):
        nj = nijenhuis(ctx.structure, pt, perturbed, pair, geom=g, metric=m)
        worst = max(
            worst,
            float(np.abs(nj.h_values).max()),
            float(np.abs(nj.v_values).max()),
        )
    return worst


# ---------------------------------------------------------------------------
# pair-scope runners: Levi-Civita connection and curvature


def _slots(n):
    return [("h", i) for i in range(n)] + [("v", i) for i in range(n)]


def _r_koszul(ctx, idx, pt):
    g = ctx.geometry(idx)
    m = ctx.metric(idx)
    conn = ctx.connection(idx)
    sten = ctx.stencil()
    worst = 0.0
    for xs in _slots(g.n):
        for ys in _slots(g.n):
            got = koszul_oracle(
                ctx.structure, pt, ctx.params, xs, ys, geom=g, metric=m, stencil=sten
            )
            blk = conn.block(xs[0], ys[0])
            worst = max(
                worst,
                float(np.abs(got.h_values - blk.h[xs[1], ys[1]]).max()),
                float(np.abs(got.v_values - blk.v[xs[1], ys[1]]).max()),
            )
    return worst


def _r_torsion(ctx, idx, pt):
    return float(ctx.defects(idx)[0])


def _r_metric_compat(ctx, idx, pt):
    return float(ctx.defects(idx)[1])


def _block_residual(ctx, idx, pt, names):
    g = ctx.geometry(idx)
    m = ctx.metric(idx)
    dctx = ctx.defn_context(idx)
    n = g.n
    worst = 0.0
    for which in names:
        blk = curvature_closed(
            ctx.structure, pt, ctx.params, which, geom=g, metric=m
        )
        a, b, z = which[0], which[1], which[3]
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    fv = curvature_defn(
                        ctx.structure, pt, ctx.params, (a, i), (b, j), (z, k), ctx=dctx
                    )
                    scale = max(
                        1.0,
                        float(np.abs(fv.h_values).max()),
                        float(np.abs(fv.v_values).max()),
                    )
                    worst = max(
                        worst,
                        float(np.abs(fv.h_values - blk.h[i, j, k]).max()) / scale,
                        float(np.abs(fv.v_values - blk.v[i, j, k]).max()) / scale,
                    )
    return worst


def _r_blocks_universal(ctx, idx, pt):
    return _block_residual(ctx, idx, pt, ("vv_v", "hv_v", "vv_h", "hv_h"))


def _r_blocks_paired(ctx, idx, pt):
    return _block_residual(ctx, idx, pt, ("hh_h", "hh_v"))


def _r_einstein_forward(ctx, idx, pt):
    rd = ctx.ricci(idx)
    g = ctx.geometry(idx)
    target = ctx.params.c_at(g.tau) * g.n * ctx.params.beta
    return max(abs(rd.lambda_hat - target), rd.defect)


def _r_einstein_defect(ctx, idx, pt):
    return float(ctx.ricci(idx).defect)


def _r_ricci_symmetry(ctx, idx, pt):
    rd = ctx.ricci(idx)
    return float(np.abs(rd.Ric_hv - rd.Ric_vh.T).max())


def _r_obstruction_identity(ctx, idx, pt):
    res, mean_cartan = vertical_ricci_obstruction(
        ctx.structure, pt, ctx.params, geom=ctx.geometry(idx), metric=ctx.metric(idx)
    )
    return float(np.abs(res - mean_cartan).max())


# ---------------------------------------------------------------------------
# pair-scope runners: operators


def _r_vertical_divergence(ctx, idx, pt):
    octx = ctx.op_context(idx)
    g = ctx.geometry(idx)
    n = g.n
    worst = 0.0
    for i in range(n):
        X = FrameVector(g, np.zeros(n), np.eye(n)[i])
        worst = max(worst, abs(divergence(octx, X)))
    return worst


def _r_liouville_divergence(ctx, idx, pt):
    octx = ctx.op_context(idx)
    return abs(divergence(octx, liouville_field(octx)))


def _r_spray_divergence(ctx, idx, pt):
    octx = ctx.op_context(idx)
    got = divergence(octx, geodesic_spray(octx))
    p_up = values_of(ctx.geometry(idx).p_up_jets)
    ref = float(p_up @ fd_dln_sqrtg_h(octx))
    return abs(got - ref)


def _r_gradient_duality(ctx, idx, pt):
    octx = ctx.op_context(idx)
    s = ctx.structure
    fields = [
        lambda q: float(q.x @ q.p),
        lambda q: math.log(s.k2_values(q.x, q.p)),
    ]
    rng = ctx.rng_for("operators.gradient_duality")
    g = ctx.geometry(idx)
    n = g.n
    worst = 0.0
    for f in fields:
        gf = gradient(octx, f)
        for _ in range(5):
            X = FrameVector(g, rng.normal(size=n), rng.normal(size=n))
            lhs = octx.metric.inner(gf, X)
            rhs = directional_derivative(octx, f, X)
            worst = max(worst, abs(lhs - rhs))
    return worst


def _field_corpus(s):
    return [
        lambda q: float(q.x[0]),
        lambda q: float(q.p[0]),
        lambda q: float(q.x @ q.p),
        lambda q: s.k2_values(q.x, q.p),
        lambda q: math.log(s.k2_values(q.x, q.p)),
    ]


def _r_laplacian_routes(ctx, idx, pt):
    octx = ctx.op_context(idx)
    worst = 0.0
    for f in _field_corpus(ctx.structure):
        res = laplacian(octx, f)
        worst = max(worst, abs(res.difference))
    return worst


def _r_k2_harmonic(ctx, idx, pt):
    octx = ctx.op_context(idx)
    s = ctx.structure
    res = laplacian(octx, lambda q: s.k2_values(q.x, q.p))
    return max(abs(res.direct), abs(res.closed))


# ---------------------------------------------------------------------------
# the registry


REGISTRY = (
    # ---- structure scope
    CheckSpec("jets.jet_vs_fd", "ad-jets", "fd_single", "structure", _r_jet_vs_fd, cap=10),
    CheckSpec("cartan.euler_homogeneity", "hamiltonian-k2", "jet_exact", "structure", _r_euler),
    CheckSpec("cartan.metric_reconstruction", "fundamental-tensor", "jet_exact", "structure", _r_metric_reconstruction),
    CheckSpec("cartan.metric_homogeneity", "fundamental-tensor", "jet_exact", "structure", _r_metric_homogeneity),
    CheckSpec("cartan.cartan_symmetry", "cartan-tensor", "jet_exact", "structure", _r_cartan_symmetry),
    CheckSpec("cartan.cartan_transversality", "cartan-tensor", "jet_exact", "structure", _r_cartan_transversality),
    CheckSpec("cartan.vertical_metric_derivative", "cartan-tensor", "jet_exact", "structure", _r_vertical_metric_derivative),
    CheckSpec("cartan.randers_degeneration", "riemannian-reduction", "fd_single", "structure", _r_randers_degeneration, cap=10, applies=_randers_family),
    CheckSpec("berwald.momentum_parallel", "metric-delta", "jet_exact", "structure", _r_momentum_parallel),
    CheckSpec("berwald.delta_k2", "metric-delta", "jet_exact", "structure", _r_delta_k2),
    CheckSpec("berwald.metric_delta", "metric-delta", "jet_exact", "structure", _r_metric_delta),
    CheckSpec("berwald.r_transversality", "vv-curvature", "jet_exact", "structure", _r_r_transversality),
    CheckSpec("berwald.landsberg_h_derivative", "landsberg", "jet_exact", "structure", _r_landsberg_h_derivative),
    CheckSpec("berwald.connection_homogeneity", "nonlinear-connection", "jet_exact", "structure", _r_connection_homogeneity),
    CheckSpec("berwald.n_fd_oracle", "fd-oracles", "fd_single", "structure", _r_n_fd_oracle, cap=8),
    CheckSpec("berwald.curvature_fd_oracle", "fd-oracles", "fd_single", "structure", _r_curvature_fd_oracle, tol_factor=10.0, cap=6),
    CheckSpec("berwald.r_contraction", "berwald-curvature", "jet_exact", "structure", _r_r_contraction),
    # ---- pair scope: bundle metric algebra
    CheckSpec("kahler.j_squared", "almost-complex", "jet_exact", "pair", _r_j_squared),
    CheckSpec("kahler.hermitian", "almost-complex", "jet_exact", "pair", _r_hermitian),
    CheckSpec("kahler.theta_canonical", "canonical-form", "jet_exact", "pair", _r_theta_canonical),
    CheckSpec("kahler.positive_definite", "bundle-metric", "jet_exact", "pair", _r_positive_definite),
    CheckSpec("kahler.nijenhuis_integrable", "nijenhuis", "fd_single", "pair", _r_nijenhuis_integrable, cap=6, applies=_matching),
    CheckSpec("kahler.nijenhuis_detects_mismatch", "nijenhuis", "fd_single", "pair", _r_nijenhuis_detects, cap=4, mode="exceeds", floor=1e-2, applies=_matching),
    # ---- pair scope: Levi-Civita
    CheckSpec("levicivita.koszul_agreement", "koszul", "fd_single", "pair", _r_koszul, tol_factor=10.0, cap=4, applies=_matching),
    CheckSpec("levicivita.torsion_free", "connection-blocks", "fd_single", "pair", _r_torsion, tol_factor=10.0, cap=8, applies=_matching),
    CheckSpec("levicivita.metric_compatible", "connection-blocks", "fd_single", "pair", _r_metric_compat, tol_factor=10.0, cap=8),
    CheckSpec("levicivita.curvature_blocks_universal", "curvature-blocks", "fd_double", "pair", _r_blocks_universal, cap=3),
    CheckSpec("levicivita.curvature_blocks_paired", "curvature-blocks", "fd_double", "pair", _r_blocks_paired, cap=3, applies=_matching),
    CheckSpec("levicivita.einstein_forward", "einstein-forward", "fd_double", "pair", _r_einstein_forward, cap=5, applies=_matching_riemannian),
    CheckSpec("levicivita.einstein_defect_nonriemannian", "einstein-obstruction", "fd_double", "pair", _r_einstein_defect, cap=4, mode="exceeds", floor=1e-2, applies=_matching_nonriemannian),
    CheckSpec("levicivita.einstein_obstruction_identity", "einstein-obstruction", "jet_exact", "pair", _r_obstruction_identity, tol_factor=10.0, cap=5),
    CheckSpec("levicivita.ricci_mixed_symmetry", "ricci-traces", "jet_exact", "pair", _r_ricci_symmetry, tol_factor=10.0, cap=5),
    # ---- pair scope: operators
    CheckSpec("operators.vertical_divergence", "frame-divergence", "jet_exact", "pair", _r_vertical_divergence, cap=6),
    CheckSpec("operators.liouville_divergence", "frame-divergence", "jet_exact", "pair", _r_liouville_divergence, cap=6),
    CheckSpec("operators.spray_divergence", "spray-divergence", "fd_single", "pair", _r_spray_divergence, cap=4, applies=_matching),
    CheckSpec("operators.gradient_duality", "gradient-duality", "jet_exact", "pair", _r_gradient_duality, tol_factor=10.0, cap=4),
    CheckSpec("operators.laplacian_routes", "laplacian-closed", "fd_single", "pair", _r_laplacian_routes, tol_factor=10.0, cap=3),
    CheckSpec("operators.k2_harmonic", "laplacian-closed", "fd_single", "pair", _r_k2_harmonic, tol_factor=0.1, cap=3),
)


def _point_payload(idx: int, pt: ChartPoint) -> dict:
    return {"index": idx, "x": [float(v) for v in pt.x], "p": [float(v) for v in pt.p]}


def _run_check(spec: CheckSpec, ctx: CheckContext) -> list:
    tolerances = ctx.manifest.tolerances
    if spec.mode == "bound":
        tol = tolerances[spec.category] * spec.tol_factor
    else:
        tol = spec.floor
    points = ctx.points if spec.cap is None else ctx.points[: spec.cap]
    records = []
    for idx, pt in enumerate(points):
        try:
            residual = float(spec.run(ctx, idx, pt))
        except SkipPoint:
            continue
        except Exception:
            records.append(
                CheckRecord(spec.check_id, spec.anchor, ctx.tag, _point_payload(idx, pt), None, tol, False)
            )
            continue
        ok = residual <= tol if spec.mode == "bound" else residual >= tol
        records.append(
            CheckRecord(spec.check_id, spec.anchor, ctx.tag, _point_payload(idx, pt), residual, tol, bool(ok))
        )
    return records


def run_suite(manifest: Manifest, only=None) -> dict:
    """Execute every applicable check of the registry over the manifest's
    structures, params, and sampling; return the report document.

    ``only`` optionally restricts the run to an iterable of check ids
    (used by targeted harnesses; the CLI always runs the full registry).
    """
    for spec in REGISTRY:
        if spec.anchor not in INDEX:
            raise CartanLabError(
                f"check {spec.check_id} uses unindexed anchor {spec.anchor!r}"
            )
    selected = REGISTRY if only is None else tuple(
        spec for spec in REGISTRY if spec.check_id in set(only)
    )
    records = []
    for si, (structure, config) in enumerate(
        zip(manifest.structures, manifest.structure_configs)
    ):
        sctx = CheckContext(manifest, structure, config, si)
        for spec in selected:
            if spec.scope == "structure" and spec.applies(sctx):
                records.extend(_run_check(spec, sctx))
        if not any(spec.scope == "pair" for spec in selected):
            continue
        for pi, (params, plabel) in enumerate(
            zip(manifest.params, manifest.param_labels)
        ):
            pctx = CheckContext(
                manifest, structure, config, si, params=params, param_label=plabel, p_index=pi
            )
            for spec in selected:
                if spec.scope == "pair" and spec.applies(pctx):
                    records.extend(_run_check(spec, pctx))
    records.sort(key=lambda r: (r.check_id, r.structure, r.point["index"]))
    passed = sum(1 for r in records if r.passed)
    report = {
        "summary": {
            "total": len(records),
            "passed": passed,
            "failed": len(records) - passed,
        },
        "checks": [r.as_dict() for r in records],
        "meta": {
            "engine_version": __version__,
            "format": "cartanlab-report-v1",
            "manifest": manifest.echo,
        },
    }
    return report
