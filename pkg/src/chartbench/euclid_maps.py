"""Explicit homeomorphisms (and one non-homeomorphism) between Euclidean subsets.

Every map acts on arrays whose last axis holds the coordinates, so a batch
of points is evaluated in one call.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

DEFAULT_MARGIN = 1e-6
ON_SURFACE_TOL = 1e-12


class UnsupportedError(ValueError):
    pass


class SamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class MapSpec:
    """A coordinate map with optional inverse and a sampling recipe.

    ``domain(x, eps)`` accepts points at least ``eps`` inside the open
    domain.  ``proposal(rng, k)`` draws ``k`` candidate points that are then
    filtered through ``domain``.  ``codomain_residual`` measures how far an
    image point is from the stated codomain.  ``loop`` is a periodic
    parametrization of a one-dimensional codomain (with period
    ``loop_period``) used by :func:`detect_inverse_jump`.
    """

    name: str
    dim_in: int
    dim_out: int
    forward: Callable[[np.ndarray], np.ndarray]
    domain: Callable[[np.ndarray, float], np.ndarray]
    proposal: Callable[[np.random.Generator, int], np.ndarray]
    inverse: Optional[Callable[[np.ndarray], np.ndarray]] = None
    codomain_residual: Optional[Callable[[np.ndarray], np.ndarray]] = None
    loop: Optional[Callable[[np.ndarray], np.ndarray]] = None
    loop_period: float = 1.0
    note: str = ""


@dataclass(frozen=True)
class RoundTripReport:
    map_name: str
    samples: int
    max_error: float
    worst_point: tuple[float, ...]
    passed: bool
    tolerance: float
    max_image_error: float
    worst_image_point: tuple[float, ...]
    max_codomain_residual: Optional[float]
    seed: int
    margin: float


def _norm(x: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(x * x, axis=-1))


def _maxnorm(x: np.ndarray) -> np.ndarray:
    return np.max(np.abs(x), axis=-1)


def _ball_forward(x):
    r2 = np.sum(x * x, axis=-1, keepdims=True)
    return x / (1.0 - r2)


def _ball_inverse(y):
    r2 = np.sum(y * y, axis=-1, keepdims=True)
    return 2.0 * y / (1.0 + np.sqrt(1.0 + 4.0 * r2))


def _uniform_cube(dim, lo=-1.0, hi=1.0):
    return lambda rng, k: rng.uniform(lo, hi, size=(k, dim))


def _sphere_points(rng, k, dim):
    g = rng.standard_normal((k, dim))
    return g / _norm(g)[:, None]


def interval_line() -> MapSpec:
    """x / (1 - x^2) from (-1, 1) onto the real line."""
    return MapSpec(
        name="interval_line",
        dim_in=1,
        dim_out=1,
        forward=_ball_forward,
        inverse=_ball_inverse,
        domain=lambda x, eps: np.abs(x[..., 0]) < 1.0 - eps,
        proposal=_uniform_cube(1),
    )


def _unit_interval_forward(x):
    return (2.0 * x - 1.0) / (x * (x - 1.0))


def _unit_interval_inverse(y):
    # root of y t^2 - (y + 2) t + 1 = 0 lying in (0, 1), written without
    # the division by y so that y = 0 maps to 1/2; for y < 0 the same root
    # is rewritten to avoid cancellation in y + sqrt(y^2 + 4)
    s = np.sqrt(y * y + 4.0)
    neg = np.minimum(y, 0.0)
    return np.where(y >= 0.0, 2.0 / (np.maximum(y, 0.0) + 2.0 + s), (s - neg) / (s - neg + 2.0))


def unit_interval_line() -> MapSpec:
    """(2x - 1) / (x (x - 1)) from (0, 1) onto the real line."""
    return MapSpec(
        name="unit_interval_line",
        dim_in=1,
        dim_out=1,
        forward=_unit_interval_forward,
        inverse=_unit_interval_inverse,
        domain=lambda x, eps: (x[..., 0] > eps) & (x[..., 0] < 1.0 - eps),
        proposal=_uniform_cube(1, 0.0, 1.0),
        note="inverse is the root of y t^2 - (y + 2) t + 1 = 0 in (0, 1)",
    )


def ball_space(n: int) -> MapSpec:
    """x / (1 - |x|^2) from the open unit ball of R^n onto R^n."""
    if n < 1:
        raise ValueError("ball dimension must be positive")
    return MapSpec(
        name=f"ball_space:{n}",
        dim_in=n,
        dim_out=n,
        forward=_ball_forward,
        inverse=_ball_inverse,
        domain=lambda x, eps: _norm(x) < 1.0 - eps,
        proposal=_uniform_cube(n),
    )


def _cube_surface(rng, k):
    pts = rng.uniform(-1.0, 1.0, size=(k, 3))
    axis = rng.integers(0, 3, size=k)
    sign = rng.choice([-1.0, 1.0], size=k)
    pts[np.arange(k), axis] = sign
    return pts


def cube_sphere() -> MapSpec:
    """Radial projection of the cube surface max|x_i| = 1 onto the unit sphere."""
    return MapSpec(
        name="cube_sphere",
        dim_in=3,
        dim_out=3,
        forward=lambda x: x / _norm(x)[..., None],
        inverse=lambda y: y / _maxnorm(y)[..., None],
        domain=lambda x, eps: np.abs(_maxnorm(x) - 1.0) <= ON_SURFACE_TOL,
        proposal=_cube_surface,
        codomain_residual=lambda y: np.abs(_norm(y) - 1.0),
    )


def _square_perimeter(s):
    # unit-speed loop around the square of side 2, starting at (1, 0)
    s = np.mod(np.asarray(s, dtype=float), 8.0)
    t = np.mod(s + 1.0, 8.0)
    side = np.floor(t / 2.0)
    u = t - 2.0 * side - 1.0
    x = np.select([side == 0, side == 1, side == 2, side == 3], [1.0, -u, -1.0, u])
    y = np.select([side == 0, side == 1, side == 2, side == 3], [u, 1.0, -u, -1.0])
    return np.stack([x, y], axis=-1)


def circle_square() -> MapSpec:
    """Outward radial projection of the unit circle onto the square of side 2."""

    def proposal(rng, k):
        th = rng.uniform(0.0, 2.0 * np.pi, size=k)
        return np.stack([np.cos(th), np.sin(th)], axis=-1)

    return MapSpec(
        name="circle_square",
        dim_in=2,
        dim_out=2,
        forward=lambda x: x / _maxnorm(x)[..., None],
        inverse=lambda y: y / _norm(y)[..., None],
        domain=lambda x, eps: np.abs(_norm(x) - 1.0) <= ON_SURFACE_TOL,
        proposal=proposal,
        codomain_residual=lambda y: np.abs(_maxnorm(y) - 1.0),
        loop=_square_perimeter,
        loop_period=8.0,
    )


def hemisphere_disc(n: int) -> MapSpec:
    """Vertical projection of the open upper hemisphere of S^(n-1) onto the disc B^(n-1)."""
    if n < 2:
        raise ValueError("hemisphere_disc needs n >= 2")

    def inverse(y):
        last = np.sqrt(1.0 - np.sum(y * y, axis=-1))
        return np.concatenate([y, last[..., None]], axis=-1)

    def proposal(rng, k):
        # uniform on the sphere, then the height is recomputed from the disc
        # coordinates so samples lie on the hemisphere to rounding
        p = _sphere_points(rng, k, n)
        return inverse(p[:, :-1])

    return MapSpec(
        name=f"hemisphere_disc:{n}",
        dim_in=n,
        dim_out=n - 1,
        forward=lambda x: x[..., :-1],
        inverse=inverse,
        domain=lambda x, eps: (np.abs(_norm(x) - 1.0) <= ON_SURFACE_TOL) & (x[..., -1] > eps),
        proposal=proposal,
        codomain_residual=lambda y: np.maximum(_norm(y) - 1.0, 0.0),
    )


def _circle(t):
    t = np.asarray(t, dtype=float)
    return np.stack([np.cos(2.0 * np.pi * t), np.sin(2.0 * np.pi * t)], axis=-1)


def _circle_param_inverse(y):
    t = np.arctan2(y[..., 1], y[..., 0]) / (2.0 * np.pi)
    t = np.where(t < 0.0, t + 1.0, t)
    # arctan2 of a point just below the seam can round up to exactly 1
    return np.where(t >= 1.0, 0.0, t)[..., None]


def circle_param() -> MapSpec:
    """t -> (cos 2 pi t, sin 2 pi t) on [0, 1): a continuous bijection onto S^1
    whose inverse jumps at (1, 0)."""
    return MapSpec(
        name="circle_param",
        dim_in=1,
        dim_out=2,
        forward=lambda t: _circle(t[..., 0]),
        inverse=_circle_param_inverse,
        domain=lambda t, eps: (t[..., 0] >= 0.0) & (t[..., 0] < 1.0 - eps),
        proposal=_uniform_cube(1, 0.0, 1.0),
        codomain_residual=lambda y: np.abs(_norm(y) - 1.0),
        loop=_circle,
        loop_period=1.0,
        note="not a homeomorphism: the inverse is discontinuous at (1, 0)",
    )


def identity(n: int) -> MapSpec:
    return MapSpec(
        name=f"identity:{n}",
        dim_in=n,
        dim_out=n,
        forward=lambda x: np.array(x, dtype=float, copy=True),
        inverse=lambda y: np.array(y, dtype=float, copy=True),
        domain=lambda x, eps: np.ones(x.shape[:-1], dtype=bool),
        proposal=lambda rng, k: rng.standard_normal((k, n)),
    )


def catalog() -> list[MapSpec]:
    return [
        interval_line(),
        unit_interval_line(),
        *(ball_space(n) for n in (1, 2, 3)),
        cube_sphere(),
        circle_square(),
        *(hemisphere_disc(n) for n in (2, 3)),
        circle_param(),
    ]


_FACTORIES = {
    "interval_line": interval_line,
    "unit_interval_line": unit_interval_line,
    "ball_space": ball_space,
    "cube_sphere": cube_sphere,
    "circle_square": circle_square,
    "hemisphere_disc": hemisphere_disc,
    "circle_param": circle_param,
    "identity": identity,
}


def names() -> list[str]:
    return sorted(_FACTORIES)


def get(name: str) -> MapSpec:
    """Look up a map by name; parametrized maps take ``name:n``, e.g. ``ball_space:3``."""
    base, _, arg = name.replace("-", "_").partition(":")
    try:
        factory = _FACTORIES[base]
    except KeyError:
        raise KeyError(f"unknown map {name!r}; known: {', '.join(names())}") from None
    if base in ("ball_space", "hemisphere_disc", "identity"):
        return factory(int(arg) if arg else (3 if base == "hemisphere_disc" else 2))
    if arg:
        raise KeyError(f"map {base!r} takes no parameter")
    return factory()


def rng_for(seed: int) -> np.random.Generator:
    """The package's named 64-bit generator (PCG64) seeded explicitly."""
    return np.random.Generator(np.random.PCG64(seed))


def sample_domain(spec: MapSpec, n_samples: int, seed: int = 0, eps: float = DEFAULT_MARGIN,
                  max_batches: int = 100) -> np.ndarray:
    rng = rng_for(seed)
    got = []
    count = 0
    for _ in range(max_batches):
        cand = spec.proposal(rng, n_samples)
        keep = cand[spec.domain(cand, eps)]
        got.append(keep)
        count += len(keep)
        if count >= n_samples:
            break
    pts = np.concatenate(got, axis=0)[:n_samples] if got else np.empty((0, spec.dim_in))
    if len(pts) == 0:
        raise SamplingError(f"no in-domain samples for {spec.name}")
    return pts


def check_round_trip(spec: MapSpec, n_samples: int = 10_000, seed: int = 0, tol: float = 1e-12,
                     eps: float = DEFAULT_MARGIN) -> RoundTripReport:
    """Measure how far ``inverse(forward(x))`` strays from ``x`` on seeded samples.

    ``max_error`` (which decides ``passed``) is the domain-side sup-norm
    error.  The image-side error ``forward(inverse(y)) - y`` is reported
    relative to ``max(1, |y|)`` because these maps are unbounded near the
    domain boundary.
    """
    if spec.inverse is None:
        raise UnsupportedError(f"{spec.name} has no inverse")
    x = sample_domain(spec, n_samples, seed, eps)
    y = spec.forward(x)
    back = spec.inverse(y)
    err = _maxnorm(back - x)
    i = int(np.argmax(err))
    again = spec.forward(spec.inverse(y))
    img_err = _maxnorm(again - y) / np.maximum(1.0, _maxnorm(y))
    j = int(np.argmax(img_err))
    resid = None
    if spec.codomain_residual is not None:
        resid = float(np.max(spec.codomain_residual(y)))
    max_error = float(err[i])
    return RoundTripReport(
        map_name=spec.name,
        samples=len(x),
        max_error=max_error,
        worst_point=tuple(float(v) for v in x[i]),
        passed=bool(max_error <= tol),
        tolerance=tol,
        max_image_error=float(img_err[j]),
        worst_image_point=tuple(float(v) for v in y[j]),
        max_codomain_residual=resid,
        seed=seed,
        margin=eps,
    )


def detect_inverse_jump(spec: MapSpec, approach_eps: float, at: float = 0.0) -> float:
    """Sup-norm gap between inverse images of two codomain points straddling ``spec.loop(at)``.

    The points are ``loop(at + eps)`` and ``loop(at - eps)`` (the latter
    wrapped into one period).  A gap that stays near a positive constant as
    ``eps`` shrinks exhibits a discontinuity of the inverse.
    """
    if not 0.0 < approach_eps < 0.1:
        raise ValueError("approach_eps must lie in (0, 0.1)")
    if spec.loop is None or spec.inverse is None:
        raise UnsupportedError(f"{spec.name} has no codomain loop or no inverse")
    p = spec.loop(np.array([at + approach_eps, np.mod(at - approach_eps, spec.loop_period)]))
    inv = spec.inverse(p)
    return float(np.max(np.abs(inv[0] - inv[1])))


def injectivity_violations(spec: MapSpec, x: np.ndarray, sep: float = 1e-6, close: float = 1e-9) -> int:
    """Count sample pairs farther apart than ``sep`` whose images lie within ``close``."""
    y = spec.forward(x)
    dx = np.max(np.abs(x[:, None, :] - x[None, :, :]), axis=-1)
    dy = np.max(np.abs(y[:, None, :] - y[None, :, :]), axis=-1)
    bad = (dx > sep) & (dy <= close)
    return int(np.count_nonzero(np.triu(bad, 1)))
