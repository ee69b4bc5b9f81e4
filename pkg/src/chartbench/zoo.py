"""Builtin manifolds with explicit atlases.

Margins: hemisphere charts bound ``1 - |c|`` from below, stereographic
charts bound the distance ``1 ∓ x³`` from the excluded pole, projective
charts bound ``|x^a|`` of the unit representative, circle charts bound the
angular distance from the cut.
"""
from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from .atlas import Chart, ManifoldSpec, everywhere


class UnknownManifoldError(KeyError):
    pass


def _sphere(rng, k, dim=3):
    v = rng.standard_normal((k, dim))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


# -- Euclidean space and graphs ------------------------------------------------------


def _identity_chart(n: int, chart_id: str = "id") -> Chart:
    def jac(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.eye(n), x.shape[:-1] + (n, n)).copy()

    return Chart(chart_id, n, lambda P: np.asarray(P, dtype=float), lambda c: np.asarray(c, dtype=float),
                 everywhere, everywhere, jac, jac)


def euclidean(n: int = 2) -> ManifoldSpec:
    return ManifoldSpec(
        name=f"euclidean:{n}",
        n=n,
        ambient_dim=n,
        atlas=(_identity_chart(n),),
        sampler=lambda rng, k: rng.uniform(-2.0, 2.0, (k, n)),
        notes="R^n with the identity chart; samples uniform on [-2, 2]^n",
    )


def graph_manifold(f: Optional[Callable] = None, n: int = 2, grad: Optional[Callable] = None,
                   name: Optional[str] = None) -> ManifoldSpec:
    """The graph of ``f: R^n -> R`` in R^(n+1), charted by projection.

    Without ``f`` the paraboloid ``|x|^2`` is used.
    """
    if f is None:
        f = lambda x: np.sum(x * x, axis=-1)
        grad = lambda x: 2.0 * x
    N = n + 1

    def forward(P):
        return np.asarray(P, dtype=float)[..., :n]

    def inverse(c):
        c = np.asarray(c, dtype=float)
        return np.concatenate([c, np.asarray(f(c))[..., None]], axis=-1)

    def fjac(P):
        P = np.asarray(P, dtype=float)
        return np.broadcast_to(np.eye(n, N), P.shape[:-1] + (n, N)).copy()

    ijac = None
    if grad is not None:
        def ijac(c):
            c = np.asarray(c, dtype=float)
            top = np.broadcast_to(np.eye(n), c.shape[:-1] + (n, n))
            return np.concatenate([top, np.asarray(grad(c))[..., None, :]], axis=-2)

    def sampler(rng, k):
        return inverse(rng.uniform(-2.0, 2.0, (k, n)))

    chart = Chart("graph", n, forward, inverse, everywhere, everywhere, fjac, ijac)
    return ManifoldSpec(name or f"graph:{n}", n, N, (chart,), sampler,
                        notes="graph of a smooth function, charted by dropping the last coordinate")


# -- the 2-sphere --------------------------------------------------------------------

_HEMI = (("phi1", 2, 1.0), ("phi2", 2, -1.0), ("phi3", 1, 1.0),
         ("phi4", 1, -1.0), ("phi5", 0, 1.0), ("phi6", 0, -1.0))


def hemisphere_chart(chart_id: str, axis: int, sign: float) -> Chart:
    """Orthogonal projection of the open hemisphere ``sign * x[axis] > 0``."""
    keep = [k for k in range(3) if k != axis]
    sel = np.eye(3)[keep]

    def forward(P):
        return np.asarray(P, dtype=float)[..., keep]

    def inverse(c):
        c = np.asarray(c, dtype=float)
        h = sign * np.sqrt(np.clip(1.0 - np.sum(c * c, axis=-1), 0.0, None))
        return np.insert(c, axis, h, axis=-1)

    def domain(P, margin=0.0):
        P = np.asarray(P, dtype=float)
        return (sign * P[..., axis] > 0) & coord_domain(forward(P), margin)

    def coord_domain(c, margin=0.0):
        r = np.sqrt(np.sum(np.asarray(c, dtype=float) ** 2, axis=-1))
        return r < 1.0 - margin if margin <= 0 else r <= 1.0 - margin

    def fjac(P):
        P = np.asarray(P, dtype=float)
        return np.broadcast_to(sel, P.shape[:-1] + (2, 3)).copy()

    def ijac(c):
        c = np.asarray(c, dtype=float)
        h = sign * np.sqrt(1.0 - np.sum(c * c, axis=-1))
        J = np.zeros(c.shape[:-1] + (3, 2))
        for col, row in enumerate(keep):
            J[..., row, col] = 1.0
        J[..., axis, :] = -c / h[..., None]
        return J

    return Chart(chart_id, 2, forward, inverse, domain, coord_domain, fjac, ijac)


def _stereo_chart(chart_id: str, s: float) -> Chart:
    # s = +1 projects from the north pole, s = -1 from the south pole
    def forward(P):
        P = np.asarray(P, dtype=float)
        return P[..., :2] / (1.0 - s * P[..., 2:3])

    def inverse(c):
        c = np.asarray(c, dtype=float)
        r2 = np.sum(c * c, axis=-1, keepdims=True)
        return np.concatenate([2.0 * c, s * (r2 - 1.0)], axis=-1) / (1.0 + r2)

    def domain(P, margin=0.0):
        d = 1.0 - s * np.asarray(P, dtype=float)[..., 2]
        return d > 0 if margin <= 0 else d >= margin

    def coord_domain(c, margin=0.0):
        return np.all(np.isfinite(np.asarray(c, dtype=float)), axis=-1)

    def fjac(P):
        P = np.asarray(P, dtype=float)
        d = 1.0 - s * P[..., 2]
        J = np.zeros(P.shape[:-1] + (2, 3))
        J[..., 0, 0] = J[..., 1, 1] = 1.0 / d
        J[..., :, 2] = s * P[..., :2] / (d * d)[..., None]
        return J

    def ijac(c):
        c = np.asarray(c, dtype=float)
        D = 1.0 + np.sum(c * c, axis=-1)
        outer = c[..., :, None] * c[..., None, :]
        top = 2.0 * np.eye(2) / D[..., None, None] - 4.0 * outer / (D * D)[..., None, None]
        bottom = s * 4.0 * c / (D * D)[..., None]
        return np.concatenate([top, bottom[..., None, :]], axis=-2)

    return Chart(chart_id, 2, forward, inverse, domain, coord_domain, fjac, ijac)


def _stereo_swap(c):
    c = np.asarray(c, dtype=float)
    return c / np.sum(c * c, axis=-1, keepdims=True)


def _hemi_31(c):
    # phi1 ∘ phi3⁻¹ : (x1, x3) -> (x1, x2) with x2 > 0
    c = np.asarray(c, dtype=float)
    return np.stack([c[..., 0], np.sqrt(1.0 - np.sum(c * c, axis=-1))], axis=-1)


def _stereo_to_phi3(c):
    # phi3 ∘ sigma_north⁻¹ : (zeta, eta) -> (x1, x3)
    c = np.asarray(c, dtype=float)
    r2 = np.sum(c * c, axis=-1)
    return np.stack([2.0 * c[..., 0] / (1.0 + r2), -(1.0 - r2) / (1.0 + r2)], axis=-1)


SPHERE_CLOSED_FORMS = {
    ("north", "south"): _stereo_swap,
    ("south", "north"): _stereo_swap,
    ("phi1", "phi3"): _hemi_31,
    ("phi3", "north"): _stereo_to_phi3,
}


def sphere_charts() -> dict[str, Chart]:
    charts = {cid: hemisphere_chart(cid, axis, sign) for cid, axis, sign in _HEMI}
    charts["north"] = _stereo_chart("north", 1.0)
    charts["south"] = _stereo_chart("south", -1.0)
    return charts


def sphere_hemispheres() -> ManifoldSpec:
    ch = sphere_charts()
    return ManifoldSpec("sphere_hemispheres", 2, 3, tuple(ch[c] for c, _, _ in _HEMI), _sphere,
                        closed_forms=SPHERE_CLOSED_FORMS,
                        notes="unit 2-sphere with six hemisphere projections")


def sphere_stereo() -> ManifoldSpec:
    ch = sphere_charts()
    return ManifoldSpec("sphere_stereo", 2, 3, (ch["north"], ch["south"]), _sphere,
                        closed_forms=SPHERE_CLOSED_FORMS,
                        notes="unit 2-sphere with the two stereographic projections")


def sphere_all() -> ManifoldSpec:
    ch = sphere_charts()
    return ManifoldSpec("sphere", 2, 3, tuple(ch.values()), _sphere, closed_forms=SPHERE_CLOSED_FORMS,
                        notes="unit 2-sphere with hemisphere and stereographic charts together")


def antipodal(P):
    return -np.asarray(P, dtype=float)


def height(P):
    return np.asarray(P, dtype=float)[..., 2]


# -- the real projective plane ------------------------------------------------------


def rp2_normalize(v) -> np.ndarray:
    """Unit representative of a line whose first nonzero coordinate is positive."""
    v = np.asarray(v, dtype=float)
    u = v / np.linalg.norm(v, axis=-1, keepdims=True)
    first = np.argmax(u != 0, axis=-1)
    lead = np.take_along_axis(u, first[..., None], axis=-1)
    return u * np.sign(lead)


def rp2_chart(a: int) -> Chart:
    """Affine chart ``x^a != 0`` sending ``[x]`` to the other coordinates over ``x^a``."""
    keep = [k for k in range(3) if k != a]

    def forward(P):
        P = np.asarray(P, dtype=float)
        return P[..., keep] / P[..., a:a + 1]

    def inverse(c):
        c = np.asarray(c, dtype=float)
        return rp2_normalize(np.insert(c, a, 1.0, axis=-1))

    def domain(P, margin=0.0):
        P = np.asarray(P, dtype=float)
        x = np.abs(P[..., a]) / np.linalg.norm(P, axis=-1)
        return x > 0 if margin <= 0 else x >= margin

    def coord_domain(c, margin=0.0):
        c = np.asarray(c, dtype=float)
        ok = np.all(np.isfinite(c), axis=-1)
        if margin > 0:
            ok &= 1.0 / np.sqrt(1.0 + np.sum(c * c, axis=-1)) >= margin
        return ok

    def fjac(P):
        P = np.asarray(P, dtype=float)
        pa = P[..., a]
        J = np.zeros(P.shape[:-1] + (2, 3))
        for row, k in enumerate(keep):
            J[..., row, k] = 1.0 / pa
            J[..., row, a] = -P[..., k] / (pa * pa)
        return J

    def ijac(c):
        c = np.asarray(c, dtype=float)
        w = np.insert(c, a, 1.0, axis=-1)
        nw = np.linalg.norm(w, axis=-1)
        u = w / nw[..., None]
        sign = np.sign(np.take_along_axis(u, np.argmax(u != 0, axis=-1)[..., None], axis=-1))
        proj = np.eye(3) - u[..., :, None] * u[..., None, :]
        E = np.eye(3)[:, keep]
        return sign[..., None] * (proj @ E) / nw[..., None, None]

    return Chart(f"phi{a + 1}", 2, forward, inverse, domain, coord_domain, fjac, ijac)


def _rp2_13(c):
    # phi1 ∘ phi3⁻¹ : (u, v) = (x1/x3, x2/x3) -> (x2/x1, x3/x1) = (v/u, 1/u)
    c = np.asarray(c, dtype=float)
    u, v = c[..., 0], c[..., 1]
    return np.stack([v / u, 1.0 / u], axis=-1)


def projective_plane() -> ManifoldSpec:
    return ManifoldSpec(
        "projective_plane", 2, 3, tuple(rp2_chart(a) for a in range(3)),
        lambda rng, k: rp2_normalize(_sphere(rng, k)),
        closed_forms={("phi1", "phi3"): _rp2_13},
        notes="RP^2 as unit vectors with positive first nonzero coordinate",
    )


# -- the real line with two incompatible charts ---------------------------------------


def real_line_cubic() -> ManifoldSpec:
    def cube_jac(P):
        P = np.asarray(P, dtype=float)
        return (3.0 * P * P)[..., None]

    def cbrt_jac(c):
        c = np.asarray(c, dtype=float)
        with np.errstate(divide="ignore"):
            return (1.0 / (3.0 * np.cbrt(c * c)))[..., None]

    cubic = Chart("cubic", 1, lambda P: np.asarray(P, dtype=float) ** 3, lambda c: np.cbrt(np.asarray(c, dtype=float)),
                  everywhere, everywhere, cube_jac, cbrt_jac)
    return ManifoldSpec(
        "real_line_cubic", 1, 1, (_identity_chart(1), cubic),
        lambda rng, k: rng.uniform(-2.0, 2.0, (k, 1)),
        closed_forms={("cubic", "id"): lambda c: np.asarray(c, dtype=float) ** 3,
                      ("id", "cubic"): lambda c: np.cbrt(np.asarray(c, dtype=float))},
        notes="R with the identity chart and x -> x^3; each is an atlas, their union is not",
    )


# -- circles, products, tori ------------------------------------------------------------


def _angle_chart(chart_id: str, lo: float) -> Chart:
    # angle in (lo, lo + 2pi); the cut sits at angle lo
    def angle(P):
        P = np.asarray(P, dtype=float)
        t = np.arctan2(P[..., 1], P[..., 0])
        return np.where(t <= lo, t + 2.0 * np.pi, t) if lo == 0.0 else t

    def forward(P):
        return angle(P)[..., None]

    def inverse(c):
        t = np.asarray(c, dtype=float)[..., 0]
        return np.stack([np.cos(t), np.sin(t)], axis=-1)

    def coord_domain(c, margin=0.0):
        t = np.asarray(c, dtype=float)[..., 0]
        if margin <= 0:
            return (t > lo) & (t < lo + 2.0 * np.pi)
        return (t >= lo + margin) & (t <= lo + 2.0 * np.pi - margin)

    def domain(P, margin=0.0):
        return coord_domain(forward(P), margin)

    def fjac(P):
        P = np.asarray(P, dtype=float)
        r2 = np.sum(P * P, axis=-1)
        return np.stack([-P[..., 1] / r2, P[..., 0] / r2], axis=-1)[..., None, :]

    def ijac(c):
        t = np.asarray(c, dtype=float)[..., 0]
        return np.stack([-np.sin(t), np.cos(t)], axis=-1)[..., :, None]

    return Chart(chart_id, 1, forward, inverse, domain, coord_domain, fjac, ijac)


def circle() -> ManifoldSpec:
    def sampler(rng, k):
        t = rng.uniform(-np.pi, np.pi, k)
        return np.stack([np.cos(t), np.sin(t)], axis=-1)

    def b_from_a(c):
        c = np.asarray(c, dtype=float)
        return np.where(c > 0, c, c + 2.0 * np.pi)

    def a_from_b(c):
        c = np.asarray(c, dtype=float)
        return np.where(c < np.pi, c, c - 2.0 * np.pi)

    return ManifoldSpec("circle", 1, 2, (_angle_chart("A", -np.pi), _angle_chart("B", 0.0)), sampler,
                        closed_forms={("B", "A"): b_from_a, ("A", "B"): a_from_b},
                        notes="unit circle with angle charts cut at (-1, 0) and at (1, 0)")


def _block_diag(A, B):
    shape = np.broadcast_shapes(A.shape[:-2], B.shape[:-2])
    out = np.zeros(shape + (A.shape[-2] + B.shape[-2], A.shape[-1] + B.shape[-1]))
    out[..., :A.shape[-2], :A.shape[-1]] = A
    out[..., A.shape[-2]:, A.shape[-1]:] = B
    return out


def product_chart(a: Chart, b: Chart, split: int) -> Chart:
    """Chart ``a × b`` on ambient points whose first ``split`` entries belong to ``a``."""
    def forward(P):
        P = np.asarray(P, dtype=float)
        return np.concatenate([a.forward(P[..., :split]), b.forward(P[..., split:])], axis=-1)

    def inverse(c):
        c = np.asarray(c, dtype=float)
        return np.concatenate([a.inverse(c[..., :a.n]), b.inverse(c[..., a.n:])], axis=-1)

    def domain(P, margin=0.0):
        P = np.asarray(P, dtype=float)
        return a.domain(P[..., :split], margin) & b.domain(P[..., split:], margin)

    def coord_domain(c, margin=0.0):
        c = np.asarray(c, dtype=float)
        return a.coord_domain(c[..., :a.n], margin) & b.coord_domain(c[..., a.n:], margin)

    fjac = ijac = None
    if a.forward_jacobian and b.forward_jacobian:
        def fjac(P):
            P = np.asarray(P, dtype=float)
            return _block_diag(a.forward_jacobian(P[..., :split]), b.forward_jacobian(P[..., split:]))
    if a.inverse_jacobian and b.inverse_jacobian:
        def ijac(c):
            c = np.asarray(c, dtype=float)
            return _block_diag(a.inverse_jacobian(c[..., :a.n]), b.inverse_jacobian(c[..., a.n:]))

    return Chart(f"{a.id}*{b.id}", a.n + b.n, forward, inverse, domain, coord_domain, fjac, ijac)


def product(m1: ManifoldSpec, m2: ManifoldSpec, name: Optional[str] = None) -> ManifoldSpec:
    """Product manifold with ambient coordinates concatenated and product charts."""
    charts = tuple(product_chart(a, b, m1.ambient_dim) for a in m1.atlas for b in m2.atlas)

    def sampler(rng, k):
        return np.concatenate([m1.sampler(rng, k), m2.sampler(rng, k)], axis=-1)

    return ManifoldSpec(name or f"{m1.name}*{m2.name}", m1.n + m2.n, m1.ambient_dim + m2.ambient_dim,
                        charts, sampler, m1.is_connected_claim and m2.is_connected_claim,
                        notes=f"product of {m1.name} and {m2.name}")


def cylinder() -> ManifoldSpec:
    return product(circle(), euclidean(1), name="cylinder")


def torus(k: int = 2) -> ManifoldSpec:
    if k < 1:
        raise ValueError("torus needs at least one factor")
    m = circle()
    for _ in range(k - 1):
        m = product(m, circle())
    return ManifoldSpec(f"torus:{k}", m.n, m.ambient_dim, m.atlas, m.sampler, notes=f"product of {k} circles")


# -- GL(n) components -------------------------------------------------------------------


def _gl(n: int, sign: float) -> ManifoldSpec:
    N = n * n

    def det(P):
        P = np.asarray(P, dtype=float)
        return np.linalg.det(P.reshape(P.shape[:-1] + (n, n)))

    def domain(P, margin=0.0):
        # the chart is the whole component, so it has no edge for a margin to keep away from
        return sign * det(P) > 0

    def sampler(rng, k):
        M = rng.standard_normal((k, n, n))
        flip = np.sign(np.linalg.det(M)) != sign
        M[flip, 0, :] *= -1.0
        return M.reshape(k, N)

    chart = _identity_chart(N, "flat")
    chart = Chart("flat", N, chart.forward, chart.inverse, domain, domain,
                  chart.forward_jacobian, chart.inverse_jacobian)
    tag = "plus" if sign > 0 else "minus"
    return ManifoldSpec(f"gl_{tag}:{n}", N, N, (chart,), sampler,
                        notes=f"n x n matrices with {'positive' if sign > 0 else 'negative'} determinant")


def gl_plus(n: int = 2) -> ManifoldSpec:
    return _gl(n, 1.0)


def gl_minus(n: int = 2) -> ManifoldSpec:
    return _gl(n, -1.0)


# -- registry ---------------------------------------------------------------------------

BUILTINS: dict[str, Callable[..., ManifoldSpec]] = {
    "euclidean": euclidean,
    "graph": lambda n=1: graph_manifold(n=n),
    "sphere_hemispheres": sphere_hemispheres,
    "sphere_stereo": sphere_stereo,
    "sphere": sphere_all,
    "projective_plane": projective_plane,
    "real_line_cubic": real_line_cubic,
    "circle": circle,
    "cylinder": cylinder,
    "torus": torus,
    "gl_plus": gl_plus,
    "gl_minus": gl_minus,
}


def builtin_names() -> list[str]:
    return sorted(BUILTINS)


def builtin(name: str) -> ManifoldSpec:
    """Look up a builtin by ``name`` or ``name:k``; hyphens count as underscores."""
    base, _, param = name.strip().replace("-", "_").partition(":")
    if base not in BUILTINS:
        raise UnknownManifoldError(f"unknown manifold {name!r}; builtins: {', '.join(builtin_names())}")
    if param:
        try:
            return BUILTINS[base](int(param))
        except TypeError:
            raise UnknownManifoldError(f"{base} takes no parameter") from None
    return BUILTINS[base]()
