"""Charts, atlases, transition functions and sampled compatibility checks.

A chart maps ambient points (arrays whose last axis has ``ambient_dim``
entries) to ``n`` coordinates and back.  All chart callables broadcast over
leading axes.  Smoothness can only be certified at sample resolution, so a
passing report means "no violation found", never "proven smooth".
"""
from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from . import numdiff
from .euclid_maps import rng_for


class AtlasError(ValueError):
    pass


class UnknownChartError(AtlasError, LookupError):
    pass


class DomainError(AtlasError):
    pass


@dataclass(frozen=True)
class Chart:
    """A coordinate homeomorphism from part of a manifold onto an open set of R^n.

    ``domain(P, margin)`` and ``coord_domain(c, margin)`` return boolean
    arrays.  ``margin > 0`` keeps points that far inside the chart; each
    chart constructor documents which quantity the margin bounds.
    ``forward_jacobian(P)`` has shape ``(..., n, ambient_dim)`` and
    ``inverse_jacobian(c)`` has shape ``(..., ambient_dim, n)``.
    """

    id: str
    n: int
    forward: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]
    domain: Callable[[np.ndarray, float], np.ndarray]
    coord_domain: Callable[[np.ndarray, float], np.ndarray]
    forward_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    inverse_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def contains(self, P, margin: float = 0.0) -> bool:
        return bool(self.domain(np.asarray(P, dtype=float), margin))


def everywhere(x, margin=0.0):
    return np.ones(np.shape(x)[:-1], dtype=bool)


@dataclass(frozen=True)
class ManifoldSpec:
    """A named manifold: an atlas, an ambient representation and a sampler.

    ``closed_forms`` maps ``(i, j)`` to a hand-derived formula for the
    transition from chart ``j`` coordinates to chart ``i`` coordinates.
    """

    name: str
    n: int
    ambient_dim: int
    atlas: tuple[Chart, ...]
    sampler: Callable[[np.random.Generator, int], np.ndarray]
    is_connected_claim: bool = True
    closed_forms: Mapping[tuple[str, str], Callable] = field(default_factory=dict)
    notes: str = ""

    def chart(self, chart_id: str) -> Chart:
        for c in self.atlas:
            if c.id == chart_id:
                return c
        raise UnknownChartError(
            f"{self.name} has no chart {chart_id!r}; charts: {', '.join(self.chart_ids)}"
        )

    @property
    def chart_ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.atlas)

    def with_atlas(self, charts: Sequence, name: Optional[str] = None) -> "ManifoldSpec":
        resolved = tuple(self.chart(c) if isinstance(c, str) else c for c in charts)
        ids = [c.id for c in resolved]
        if len(set(ids)) != len(ids):
            raise AtlasError(f"duplicate chart ids in {ids}")
        return replace(self, atlas=resolved, name=name or self.name)

    def sample(self, n_samples: int, seed: int = 0) -> np.ndarray:
        return np.asarray(self.sampler(rng_for(seed), n_samples), dtype=float)


@dataclass(frozen=True)
class Tolerances:
    roundtrip: float = 1e-10
    transition: float = 1e-9
    det_floor: float = 1e-8
    fd_tol: float = 1e-4
    fd_step: float = 1e-4
    margin: float = 0.02
    cover_margin: float = 1e-3
    min_overlap: int = 200

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT_TOL = Tolerances()

# step used when comparing analytic Jacobians against central differences
JACOBIAN_CHECK_STEP = 1e-5


# -- overlap sampling and transitions ---------------------------------------


def sample_overlap(manifold: ManifoldSpec, charts: Sequence[Chart], samples: int, seed: int = 0,
                   margin: float = DEFAULT_TOL.margin, coord_floor: Optional[float] = None,
                   max_batches: int = 20) -> np.ndarray:
    """Ambient samples lying (with margin) in every chart of ``charts``.

    Draws batches from the manifold sampler until ``samples`` points are
    accepted or ``max_batches`` batches are spent.  ``coord_floor`` keeps
    only points whose coordinates in every listed chart satisfy
    ``|c_k| >= coord_floor``.
    """
    rng = rng_for(seed)
    kept, total = [], 0
    for _ in range(max_batches):
        P = np.asarray(manifold.sampler(rng, samples), dtype=float)
        ok = np.ones(len(P), dtype=bool)
        for ch in charts:
            ok &= ch.domain(P, margin)
        if coord_floor is not None:
            for ch in charts:
                c = ch.forward(P[ok])
                sub = np.all(np.abs(c) >= coord_floor, axis=-1)
                ok[np.flatnonzero(ok)[~sub]] = False
        kept.append(P[ok])
        total += int(ok.sum())
        if total >= samples:
            break
    return np.concatenate(kept, axis=0)[:samples]


@dataclass(frozen=True)
class TransitionFn:
    """The coordinate change ``to_chart ∘ from_chart⁻¹`` on the chart overlap.

    ``overlap`` holds sampled overlap points in ``from_chart`` coordinates;
    an empty array marks an overlap in which no sample landed.
    """

    from_chart: str
    to_chart: str
    source: Chart
    target: Chart
    overlap: np.ndarray
    analytic: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, c):
        return self.target.forward(self.source.inverse(np.asarray(c, dtype=float)))

    map = __call__

    @property
    def empty(self) -> bool:
        return len(self.overlap) == 0

    @property
    def has_analytic_jacobian(self) -> bool:
        return self.target.forward_jacobian is not None and self.source.inverse_jacobian is not None

    def analytic_jacobian(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        if not self.has_analytic_jacobian:
            raise AtlasError(f"no analytic Jacobian for {self.to_chart} <- {self.from_chart}")
        P = self.source.inverse(c)
        return self.target.forward_jacobian(P) @ self.source.inverse_jacobian(c)

    def contains(self, c, margin: float = 0.0) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        P = self.source.inverse(c)
        return self.source.coord_domain(c, margin) & self.target.domain(P, margin) & self.source.domain(P, margin)


def transition_fn(manifold: ManifoldSpec, i: str, j: str, overlap: Optional[np.ndarray] = None) -> TransitionFn:
    """Transition from chart ``j`` coordinates to chart ``i`` coordinates (no sampling)."""
    target, source = manifold.chart(i), manifold.chart(j)
    if overlap is None:
        overlap = np.empty((0, source.n))
    return TransitionFn(j, i, source, target, overlap, manifold.closed_forms.get((i, j)))


def transition(manifold: ManifoldSpec, i: str, j: str, samples: int = 1000, seed: int = 0,
               margin: float = DEFAULT_TOL.margin, coord_floor: Optional[float] = None) -> TransitionFn:
    """The transition ``φ_i ∘ φ_j⁻¹`` together with sampled overlap coordinates."""
    target, source = manifold.chart(i), manifold.chart(j)
    P = sample_overlap(manifold, (source, target), samples, seed, margin, coord_floor)
    return transition_fn(manifold, i, j, source.forward(P) if len(P) else None)


class JacobianResult(NamedTuple):
    matrix: np.ndarray
    discrepancy: float
    mode: str


def jacobian(tr: TransitionFn, point, mode: str = "auto", fd_step: float = DEFAULT_TOL.fd_step) -> JacobianResult:
    """Jacobian of a transition at one point in source coordinates.

    ``mode`` is ``"analytic"``, ``"fd"`` or ``"auto"`` (analytic when
    available).  The finite-difference estimate uses central differences at
    steps h and h/2 and returns the h/2 matrix; ``discrepancy`` is their
    relative gap whatever the mode.
    """
    c = np.asarray(point, dtype=float)
    if not bool(tr.contains(c)):
        raise DomainError(f"point {c.tolist()} is outside the overlap of {tr.from_chart} and {tr.to_chart}")
    pair = numdiff.jacobian_pair(tr, c[None, :], fd_step)
    disc = float(pair.discrepancy[0])
    if mode == "auto":
        mode = "analytic" if tr.has_analytic_jacobian else "fd"
    if mode == "analytic":
        return JacobianResult(tr.analytic_jacobian(c), disc, mode)
    if mode == "fd":
        return JacobianResult(pair.fine[0], disc, mode)
    raise ValueError(f"unknown Jacobian mode {mode!r}")


def jacobian_gap(tr: TransitionFn, cs, rel: float = JACOBIAN_CHECK_STEP) -> np.ndarray:
    """Relative gap between analytic and central-difference Jacobians at rows of ``cs``."""
    cs = np.atleast_2d(np.asarray(cs, dtype=float))
    fd = numdiff.central_jacobian_batch(tr, cs, numdiff.steps(cs, rel))
    return numdiff.richardson_discrepancy(tr.analytic_jacobian(cs), fd)


def _batch_jacobian(tr: TransitionFn, cs: np.ndarray, fine: np.ndarray) -> np.ndarray:
    return tr.analytic_jacobian(cs) if tr.has_analytic_jacobian else fine


# -- compatibility -----------------------------------------------------------


@dataclass(frozen=True)
class Witness:
    kind: str
    direction: str
    coords: tuple[float, ...]
    value: float


@dataclass(frozen=True)
class CompatibilityReport:
    pair: tuple[str, str]
    overlap_samples: int
    roundtrip_max_error: float
    min_abs_det: float
    max_fd_discrepancy: float
    smoothness_flag: bool
    passed: bool
    witness: Optional[Witness]
    thin_overlap: bool
    max_analytic_fd_gap: Optional[float]
    tolerances: dict

    def to_dict(self) -> dict:
        return asdict(self)


def _direction_checks(tr: TransitionFn, back: TransitionFn, cs: np.ndarray, tol: Tolerances):
    label = f"{tr.to_chart}<-{tr.from_chart}"
    rt = back(tr(cs))
    rt_err = np.max(np.abs(rt - cs), axis=-1) / (1.0 + np.max(np.abs(cs), axis=-1))
    pair = numdiff.jacobian_pair(tr, cs, tol.fd_step)
    J = _batch_jacobian(tr, cs, pair.fine)
    dets = np.abs(np.linalg.det(J))
    gap = None
    if tr.has_analytic_jacobian:
        gap = float(np.max(jacobian_gap(tr, cs)))
    return label, rt_err, dets, pair.discrepancy, gap


def _worst(label, kind, cs, values, bad_mask, pick=np.argmax):
    idx = np.flatnonzero(bad_mask)
    k = idx[pick(values[idx])]
    return Witness(kind, label, tuple(float(v) for v in cs[k]), float(values[k]))


def check_compatibility(manifold: ManifoldSpec, i: str, j: str, samples: int = 1000, seed: int = 0,
                        tol: Tolerances = DEFAULT_TOL, coord_floor: Optional[float] = None) -> CompatibilityReport:
    """Sampled test that charts ``i`` and ``j`` are smoothly compatible.

    Checks both transition directions on overlap samples: (a) the two
    transitions compose to the identity, (b) Jacobian determinants stay
    above ``det_floor``, (c) Jacobians at steps h and h/2 agree within
    ``fd_tol`` (the smoothness proxy).  An empty overlap passes vacuously.
    """
    ci_chart, cj_chart = manifold.chart(i), manifold.chart(j)
    P = sample_overlap(manifold, (ci_chart, cj_chart), samples, seed, tol.margin, coord_floor)
    k = len(P)
    if k == 0:
        return CompatibilityReport((i, j), 0, 0.0, float("inf"), 0.0, True, True, None, False, None,
                                   tol.to_dict())
    t_ij, t_ji = transition_fn(manifold, i, j), transition_fn(manifold, j, i)
    rt_max, det_min, disc_max = 0.0, float("inf"), 0.0
    gaps = []
    witnesses = []
    for tr, back, cs in ((t_ij, t_ji, cj_chart.forward(P)), (t_ji, t_ij, ci_chart.forward(P))):
        label, rt_err, dets, disc, gap = _direction_checks(tr, back, cs, tol)
        rt_max = max(rt_max, float(np.max(rt_err)))
        det_min = min(det_min, float(np.min(dets)))
        disc_max = max(disc_max, float(np.nanmax(disc)) if np.any(np.isfinite(disc)) else float("inf"))
        if gap is not None:
            gaps.append(gap)
        bad_disc = ~(disc <= tol.fd_tol)
        if bad_disc.any():
            witnesses.append(_worst(label, "smoothness", cs, np.nan_to_num(disc, nan=np.inf), bad_disc))
        if (rt_err > tol.transition).any():
            witnesses.append(_worst(label, "roundtrip", cs, rt_err, rt_err > tol.transition))
        bad_det = ~(dets >= tol.det_floor)
        if bad_det.any():
            witnesses.append(_worst(label, "det", cs, np.nan_to_num(dets, nan=0.0), bad_det, np.argmin))
    smooth = not any(w.kind == "smoothness" for w in witnesses)
    order = {"smoothness": 0, "det": 1, "roundtrip": 2}
    witnesses.sort(key=lambda w: order[w.kind])
    return CompatibilityReport(
        pair=(i, j),
        overlap_samples=k,
        roundtrip_max_error=rt_max,
        min_abs_det=det_min,
        max_fd_discrepancy=disc_max,
        smoothness_flag=smooth,
        passed=not witnesses,
        witness=witnesses[0] if witnesses else None,
        thin_overlap=k < tol.min_overlap,
        max_analytic_fd_gap=max(gaps) if gaps else None,
        tolerances=tol.to_dict(),
    )


@dataclass(frozen=True)
class AtlasReport:
    manifold: str
    charts: tuple[str, ...]
    samples: int
    covered: bool
    uncovered_count: int
    cover_witness: Optional[tuple[float, ...]]
    chart_roundtrip: dict
    pairs: tuple[CompatibilityReport, ...]
    passed: bool
    seed: int
    tolerances: dict

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def failures(self) -> list[CompatibilityReport]:
        return [p for p in self.pairs if not p.passed]


def chart_roundtrip_error(manifold: ManifoldSpec, chart: Chart, samples: int = 1000, seed: int = 0,
                          margin: float = DEFAULT_TOL.margin) -> tuple[int, float]:
    P = sample_overlap(manifold, (chart,), samples, seed, margin)
    if len(P) == 0:
        return 0, 0.0
    err = np.max(np.abs(chart.inverse(chart.forward(P)) - P), axis=-1)
    return len(P), float(np.max(err))


def verify_atlas(manifold: ManifoldSpec, samples: int = 1000, seed: int = 0, tol: Tolerances = DEFAULT_TOL,
                 coord_floor: Optional[float] = None) -> AtlasReport:
    """Covering check, per-chart round trips, and compatibility of every chart pair."""
    P = manifold.sample(samples, seed)
    covered = np.zeros(len(P), dtype=bool)
    for ch in manifold.atlas:
        covered |= ch.domain(P, tol.cover_margin)
    missing = np.flatnonzero(~covered)
    witness = tuple(float(v) for v in P[missing[0]]) if len(missing) else None
    rts = {}
    rt_ok = True
    for ch in manifold.atlas:
        cnt, err = chart_roundtrip_error(manifold, ch, samples, seed, tol.margin)
        rts[ch.id] = err
        rt_ok &= err <= tol.roundtrip
    pairs = tuple(
        check_compatibility(manifold, a.id, b.id, samples, seed, tol, coord_floor)
        for a, b in itertools.combinations(manifold.atlas, 2)
    )
    passed = not len(missing) and rt_ok and all(p.passed for p in pairs)
    return AtlasReport(manifold.name, manifold.chart_ids, len(P), not len(missing), len(missing), witness,
                       rts, pairs, bool(passed), seed, tol.to_dict())


@dataclass(frozen=True)
class EquivalenceReport:
    atlas_a: tuple[str, ...]
    atlas_b: tuple[str, ...]
    union: AtlasReport
    cross_failures: tuple[CompatibilityReport, ...]
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def atlases_equivalent(manifold: ManifoldSpec, atlas_a: Sequence, atlas_b: Sequence, samples: int = 1000,
                       seed: int = 0, tol: Tolerances = DEFAULT_TOL,
                       coord_floor: Optional[float] = None) -> EquivalenceReport:
    """Two atlases are equivalent iff their union is again an atlas.

    Charts may be given as :class:`Chart` objects or as ids of charts of
    ``manifold``.  Identical charts appearing in both atlases are merged.
    """
    a = [manifold.chart(c) if isinstance(c, str) else c for c in atlas_a]
    b = [manifold.chart(c) if isinstance(c, str) else c for c in atlas_b]
    a_ids = tuple(c.id for c in a)
    union = list(a) + [c for c in b if c.id not in a_ids]
    joint = manifold.with_atlas(union, name=manifold.name)
    report = verify_atlas(joint, samples, seed, tol, coord_floor)
    cross = tuple(
        p for p in report.pairs
        if not p.passed and (p.pair[0] in a_ids) != (p.pair[1] in a_ids)
    )
    return EquivalenceReport(a_ids, tuple(c.id for c in b), report, cross, report.passed)


# -- GL(n) components -----------------------------------------------------------


def classify_gl_component(matrix, singular_floor: float = 1e-12) -> str:
    """``"plus"`` or ``"minus"`` by the sign of the determinant."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError("matrix must be square")
    d = float(np.linalg.det(m))
    if abs(d) <= singular_floor:
        raise DomainError(f"determinant {d:g} is within {singular_floor:g} of zero: not in GL(n)")
    return "plus" if d > 0 else "minus"


# -- maps between manifolds -------------------------------------------------------


def coord_expression(f: Callable, chart_src: Chart, chart_dst: Chart) -> Callable:
    """The coordinate expression ``ψ ∘ f ∘ φ⁻¹`` of an ambient map ``f``."""

    def expr(c):
        return chart_dst.forward(f(chart_src.inverse(np.asarray(c, dtype=float))))

    return expr


@dataclass(frozen=True)
class SmoothMapReport:
    pairs: dict
    max_fd_discrepancy: float
    smoothness_flag: bool
    max_independence_error: float
    independent: bool
    passed: bool
    samples: int
    tolerances: dict

    def to_dict(self) -> dict:
        return asdict(self)


def _map_samples(src: ManifoldSpec, f: Callable, dst: ManifoldSpec, src_charts, dst_charts, samples, seed, margin):
    rng = rng_for(seed)
    P = np.asarray(src.sampler(rng, samples), dtype=float)
    Q = f(P)
    ok = np.ones(len(P), dtype=bool)
    for ch in src_charts:
        ok &= ch.domain(P, margin)
    for ch in dst_charts:
        ok &= ch.domain(Q, margin)
    return P[ok]


def check_smooth_map(f: Callable, src: ManifoldSpec, dst: ManifoldSpec, samples: int = 500, seed: int = 0,
                     tol: Tolerances = DEFAULT_TOL) -> SmoothMapReport:
    """Sampled smoothness and chart independence of an ambient map ``src -> dst``.

    For every chart pair the coordinate expression is probed with the
    step-halving proxy.  For every two chart pairs sharing samples the
    direct expression is compared with the one conjugated by transitions.
    """
    pairs = {}
    disc_max = 0.0
    exprs = []
    for a in src.atlas:
        for b in dst.atlas:
            P = _map_samples(src, f, dst, (a,), (b,), samples, seed, tol.margin)
            if not len(P):
                continue
            expr = coord_expression(f, a, b)
            cs = a.forward(P)
            disc = float(np.max(numdiff.jacobian_pair(expr, cs, tol.fd_step).discrepancy))
            pairs[f"{a.id}->{b.id}"] = {"samples": len(P), "max_fd_discrepancy": disc}
            disc_max = max(disc_max, disc)
            exprs.append((a, b, expr))
    if not exprs:
        raise DomainError("no sample lies in the effective domain of any coordinate expression")
    ind_max = 0.0
    for (a, b, e), (a2, b2, e2) in itertools.combinations(exprs, 2):
        P = _map_samples(src, f, dst, (a, a2), (b, b2), samples, seed, tol.margin)
        if not len(P):
            continue
        c2 = a2.forward(P)
        direct = e2(c2)
        conj = b2.forward(b.inverse(e(a.forward(a2.inverse(c2)))))
        err = np.max(np.abs(direct - conj), axis=-1) / (1.0 + np.max(np.abs(direct), axis=-1))
        ind_max = max(ind_max, float(np.max(err)))
    smooth = disc_max <= tol.fd_tol
    indep = ind_max <= tol.transition
    return SmoothMapReport(pairs, disc_max, smooth, ind_max, indep, smooth and indep, samples, tol.to_dict())
