"""Tangent vectors as derivations, chart changes, vector fields and the tangent bundle.

A tangent vector at P is stored as components in one chart; it acts on a
scalar field f by ``sum_i v^i * d_i(f ∘ φ⁻¹)(φ(P))``.  Components change
contravariantly: ``v' = J v`` with ``J = ∂x'/∂x``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from . import numdiff
from .atlas import Chart, DomainError, ManifoldSpec, DEFAULT_TOL, sample_overlap, transition_fn
from .zoo import sphere_stereo

FD_REL = 1e-5


class StencilError(DomainError):
    """The finite-difference stencil leaves the chart."""


# -- chart derivatives with finite-difference fallback ------------------------------


def _fd_batched(f: Callable, x: np.ndarray, rel: float = FD_REL) -> np.ndarray:
    lead = x.shape[:-1]
    flat = x.reshape(-1, x.shape[-1])
    J = numdiff.central_jacobian_batch(f, flat, numdiff.steps(flat, rel))
    return J.reshape(lead + J.shape[1:])


def forward_jacobian(chart: Chart, P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if chart.forward_jacobian is not None:
        return chart.forward_jacobian(P)
    return _fd_batched(chart.forward, P)


def inverse_jacobian(chart: Chart, c) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if chart.inverse_jacobian is not None:
        return chart.inverse_jacobian(c)
    return _fd_batched(chart.inverse, c)


# -- scalar fields and tangent vectors ---------------------------------------------------


@dataclass(frozen=True)
class ScalarField:
    """An ambient function ``f(P)`` returning one value per point.

    ``ambient_grad(P)`` (optional, shape ``(..., ambient_dim)``) enables
    analytic chart partials through the chart inverse Jacobian.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    ambient_grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""

    def __call__(self, P):
        return np.asarray(self.fn(np.asarray(P, dtype=float)), dtype=float)

    def __mul__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(lambda P: self(P) * other(P), name=f"({self.name})*({other.name})")


def constant(value: float) -> ScalarField:
    return ScalarField(lambda P: np.full(np.shape(P)[:-1], float(value)),
                       lambda P: np.zeros(np.shape(P)), name=str(value))


def coordinate_function(chart: Chart, i: int) -> ScalarField:
    """The coordinate function ``x^i`` of a chart as a scalar field."""
    return ScalarField(lambda P: chart.forward(P)[..., i], name=f"{chart.id}[{i}]")


@dataclass(frozen=True)
class TangentVector:
    manifold: ManifoldSpec
    point: np.ndarray
    chart_id: str
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))
        object.__setattr__(self, "components", np.asarray(self.components, dtype=float))
        chart = self.manifold.chart(self.chart_id)
        if self.components.shape != (chart.n,):
            raise ValueError(f"expected {chart.n} components, got shape {self.components.shape}")
        if not chart.contains(self.point):
            raise DomainError(f"point {self.point.tolist()} is outside chart {self.chart_id}")

    @classmethod
    def at_coords(cls, manifold: ManifoldSpec, chart_id: str, coords, components) -> "TangentVector":
        return cls(manifold, manifold.chart(chart_id).inverse(np.asarray(coords, dtype=float)), chart_id, components)

    @property
    def chart(self) -> Chart:
        return self.manifold.chart(self.chart_id)

    @property
    def coords(self) -> np.ndarray:
        return self.chart.forward(self.point)

    def _same_space(self, other: "TangentVector"):
        if self.chart_id != other.chart_id or not np.array_equal(self.point, other.point):
            raise ValueError("vectors live at different points or in different charts")

    def __add__(self, other: "TangentVector") -> "TangentVector":
        self._same_space(other)
        return TangentVector(self.manifold, self.point, self.chart_id, self.components + other.components)

    def __mul__(self, a: float) -> "TangentVector":
        return TangentVector(self.manifold, self.point, self.chart_id, a * self.components)

    __rmul__ = __mul__


def basis_vector(manifold: ManifoldSpec, point, chart_id: str, i: int) -> TangentVector:
    n = manifold.chart(chart_id).n
    return TangentVector(manifold, point, chart_id, np.eye(n)[i])


def chart_partials(chart: Chart, f: ScalarField, c, rel: float = FD_REL) -> np.ndarray:
    """Partials ``d_i(f ∘ φ⁻¹)`` at coordinates ``c``."""
    c = np.asarray(c, dtype=float)
    if f.ambient_grad is not None:
        return f.ambient_grad(chart.inverse(c)) @ inverse_jacobian(chart, c)
    h = numdiff.steps(c, rel)
    stencil = np.concatenate([c + np.diag(h), c - np.diag(h)], axis=0)
    ok = chart.coord_domain(stencil, 0.0) & chart.domain(chart.inverse(stencil), 0.0)
    if not np.all(ok):
        raise StencilError(f"stencil around {c.tolist()} leaves chart {chart.id}")
    return numdiff.gradient(lambda y: f(chart.inverse(y)), c, rel)


def apply(v: TangentVector, f: ScalarField, rel: float = FD_REL) -> float:
    """The derivation ``v(f) = sum_i v^i d_i(f ∘ φ⁻¹)``."""
    return float(chart_partials(v.chart, f, v.coords, rel) @ v.components)


def chart_change_jacobian(manifold: ManifoldSpec, source: str, target: str, c) -> np.ndarray:
    """``∂x'/∂x`` of the transition from ``source`` to ``target`` coordinates at ``c``."""
    tr = transition_fn(manifold, target, source)
    c = np.asarray(c, dtype=float)
    if tr.has_analytic_jacobian:
        return tr.analytic_jacobian(c)
    return numdiff.central_jacobian(tr, c, numdiff.steps(c, FD_REL))


def change_chart(v: TangentVector, target: str) -> TangentVector:
    """Re-express ``v`` in chart ``target``; components transform as ``J v``."""
    if target == v.chart_id:
        return v
    if not v.manifold.chart(target).contains(v.point):
        raise DomainError(f"point {v.point.tolist()} is outside chart {target}")
    J = chart_change_jacobian(v.manifold, v.chart_id, target, v.coords)
    return TangentVector(v.manifold, v.point, target, J @ v.components)


# -- Leibniz and chain rule ----------------------------------------------------------------


@dataclass(frozen=True)
class RuleReport:
    lhs: float
    rhs: float
    error: float
    passed: bool
    tol: float


def _rule(lhs: float, rhs: float, tol: float) -> RuleReport:
    err = abs(lhs - rhs)
    return RuleReport(lhs, rhs, err, err <= tol * (1.0 + abs(lhs)), tol)


def check_leibniz(v: TangentVector, f: ScalarField, g: ScalarField, tol: float = 1e-5) -> RuleReport:
    lhs = apply(v, f * g)
    rhs = apply(v, f) * float(g(v.point)) + apply(v, g) * float(f(v.point))
    return _rule(lhs, rhs, tol)


def check_chain_rule(v: TangentVector, outer: Callable, gs: Sequence[ScalarField], tol: float = 1e-5,
                     outer_grad: Optional[Callable] = None) -> RuleReport:
    """``v(F(g_1..g_k)) = sum_i dF/dg_i * v(g_i)``; ``outer`` acts on the last axis."""
    composite = ScalarField(lambda P: outer(np.stack([g(P) for g in gs], axis=-1)))
    lhs = apply(v, composite)
    y = np.array([float(g(v.point)) for g in gs])
    dF = outer_grad(y) if outer_grad is not None else numdiff.gradient(outer, y, FD_REL)
    rhs = float(sum(dF[i] * apply(v, g) for i, g in enumerate(gs)))
    return _rule(lhs, rhs, tol)


# -- tangent bundle -------------------------------------------------------------------------


def bundle_chart(manifold: ManifoldSpec, chart: Chart) -> Chart:
    """Induced chart ``(P, V) -> (φ(P), Dφ(P) V)`` on ambient pairs in R^(2N)."""
    if chart.id not in manifold.chart_ids:
        raise DomainError(f"chart {chart.id} is not in the atlas of {manifold.name}")
    N, n = manifold.ambient_dim, chart.n

    def forward(Q):
        Q = np.asarray(Q, dtype=float)
        P, V = Q[..., :N], Q[..., N:]
        w = np.einsum("...ij,...j->...i", forward_jacobian(chart, P), V)
        return np.concatenate([chart.forward(P), w], axis=-1)

    def inverse(cw):
        cw = np.asarray(cw, dtype=float)
        c, w = cw[..., :n], cw[..., n:]
        V = np.einsum("...ij,...j->...i", inverse_jacobian(chart, c), w)
        return np.concatenate([chart.inverse(c), V], axis=-1)

    def domain(Q, margin=0.0):
        return chart.domain(np.asarray(Q, dtype=float)[..., :N], margin)

    def coord_domain(cw, margin=0.0):
        return chart.coord_domain(np.asarray(cw, dtype=float)[..., :n], margin)

    return Chart(f"T{chart.id}", 2 * n, forward, inverse, domain, coord_domain)


def tangent_bundle(manifold: ManifoldSpec, margin: float = DEFAULT_TOL.margin) -> ManifoldSpec:
    """The tangent bundle with one induced chart per base chart.

    Samples attach a Gaussian fiber vector, expressed in the first base
    chart containing the point, to each base sample.
    """
    charts = tuple(bundle_chart(manifold, ch) for ch in manifold.atlas)
    N = manifold.ambient_dim

    def sampler(rng, k):
        P = np.asarray(manifold.sampler(rng, k), dtype=float)
        w = rng.standard_normal((k, manifold.n))
        V = np.full((k, N), np.nan)
        todo = np.ones(k, dtype=bool)
        for m in (margin, 0.0):
            for ch in manifold.atlas:
                sel = todo & ch.domain(P, m)
                if sel.any():
                    V[sel] = np.einsum("kij,kj->ki", inverse_jacobian(ch, ch.forward(P[sel])), w[sel])
                    todo &= ~sel
        return np.concatenate([P, V], axis=-1)

    return ManifoldSpec(f"T({manifold.name})", 2 * manifold.n, 2 * N, charts, sampler,
                        manifold.is_connected_claim, notes=f"tangent bundle of {manifold.name}")


# -- vector fields -----------------------------------------------------------------------------


@dataclass(frozen=True)
class VectorField:
    """Per-chart component functions ``X_i(c)`` of shape ``(..., n)``."""

    manifold: ManifoldSpec
    components: Mapping[str, Callable[[np.ndarray], np.ndarray]]
    name: str = ""


def field_eval(X: VectorField, P) -> TangentVector:
    """The vector of ``X`` at ``P`` in the first atlas chart that has components there."""
    P = np.asarray(P, dtype=float)
    for ch in X.manifold.atlas:
        if ch.id in X.components and ch.contains(P):
            return TangentVector(X.manifold, P, ch.id, X.components[ch.id](ch.forward(P)))
    raise DomainError(f"no chart with components of {X.name or 'the field'} covers {P.tolist()}")


def lie_derivative(X: VectorField, f: ScalarField) -> ScalarField:
    """The scalar field ``P -> X_P(f)``."""

    def fn(P):
        P = np.asarray(P, dtype=float)
        flat = P.reshape(-1, P.shape[-1])
        out = np.array([apply(field_eval(X, p), f) for p in flat])
        return out.reshape(P.shape[:-1])

    return ScalarField(fn, name=f"L_{X.name}({f.name})")


@dataclass(frozen=True)
class FieldConsistencyReport:
    pairs: dict
    max_error: float
    passed: bool
    tol: float
    samples: int
    seed: int


def check_field_consistency(X: VectorField, samples: int = 1000, seed: int = 0, tol: float = 1e-6,
                            margin: float = DEFAULT_TOL.margin) -> FieldConsistencyReport:
    """On overlap samples, chart-i components pushed by ``J`` must match chart-j components."""
    m = X.manifold
    ids = [c for c in m.chart_ids if c in X.components]
    pairs, worst = {}, 0.0
    for i in ids:
        for j in ids:
            if i == j:
                continue
            ci_chart, cj_chart = m.chart(i), m.chart(j)
            P = sample_overlap(m, (ci_chart, cj_chart), samples, seed, margin)
            if not len(P):
                pairs[f"{i}->{j}"] = {"samples": 0, "max_error": 0.0}
                continue
            ci, cj = ci_chart.forward(P), cj_chart.forward(P)
            J = chart_change_jacobian(m, i, j, ci) if transition_fn(m, j, i).has_analytic_jacobian else \
                np.stack([chart_change_jacobian(m, i, j, c) for c in ci])
            pushed = np.einsum("kab,kb->ka", J, X.components[i](ci))
            want = X.components[j](cj)
            err = np.max(np.abs(pushed - want), axis=-1) / (1.0 + np.max(np.abs(want), axis=-1))
            e = float(np.max(err))
            pairs[f"{i}->{j}"] = {"samples": len(P), "max_error": e}
            worst = max(worst, e)
    return FieldConsistencyReport(pairs, worst, worst <= tol, tol, samples, seed)


def _rotation(c):
    c = np.asarray(c, dtype=float)
    return np.stack([-c[..., 1], c[..., 0]], axis=-1)


def sphere_rotation_field(manifold: Optional[ManifoldSpec] = None) -> VectorField:
    """Rotation about the x³-axis: ``(-η, ζ)`` in both stereographic charts."""
    return VectorField(manifold or sphere_stereo(), {"north": _rotation, "south": _rotation}, "rotation")
