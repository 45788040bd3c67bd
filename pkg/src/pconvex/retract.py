"""Radial retraction onto a p-convex body, p-seminorm distances, and
inward/outward set membership."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from pconvex.errors import DomainError, ValidationError
from pconvex.gauge import DEFAULT_TOL, GaugeValue, PBody, eval_gauge_many
from pconvex.pcore import PointSet, as_p

ADMISSIBLE_TOL = 1e-10
DEDUP_TOL = 1e-8


@dataclass(frozen=True)
class RetractionResult:
    point: np.ndarray
    was_inside: bool
    gauge: GaugeValue
    input_gauge: GaugeValue


def _gauges(body: PBody, X: np.ndarray, tol: float) -> np.ndarray:
    if body.gauge_fn is not None:
        return np.asarray(body.gauge_fn(X), dtype=float)
    return eval_gauge_many(body, X, tol)


def retract_many(body: PBody, X, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched ``r(x) = x / max(1, P(x)**(1/p))``.

    Returns ``(points, was_inside, input_gauges)``.  Outside points are
    scaled by the gauge, then nudged inward by whole ulps of the gauge until
    the oracle accepts them, so every output is a member and ``r(r(x))``
    equals ``r(x)`` bit for bit.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != body.dim:
        raise DomainError(f"expected points of dimension {body.dim}")
    inside = body.contains(X)
    g = _gauges(body, X, tol)
    out = X.copy()
    idx = np.flatnonzero(~inside)
    if idx.size:
        gi = np.maximum(g[idx], 1.0)
        Y = X[idx] * gi[:, None] ** (-1.0 / body.p)
        for _ in range(64):
            bad = ~body.contains(Y)
            if not np.any(bad):
                break
            gi[bad] = np.nextafter(gi[bad], np.inf)
            Y[bad] = X[idx[bad]] * gi[bad, None] ** (-1.0 / body.p)
        else:
            raise ValidationError("retraction could not land inside the body")
        out[idx] = Y
    return out, inside, g


def radial_retract(body: PBody, x, tol: float = DEFAULT_TOL) -> RetractionResult:
    x = np.asarray(x, dtype=float).reshape(1, -1)
    pts, inside, g = retract_many(body, x, tol)
    g_out = float(_gauges(body, pts, tol)[0])
    return RetractionResult(pts[0], bool(inside[0]), GaugeValue(g_out, tol), GaugeValue(float(g[0]), tol))


def continuity_constant(body: PBody, samples: int = 500, seed: int = 0,
                        step: float = 1e-6, tol: float = DEFAULT_TOL) -> float:
    """Largest observed ``|r(x+h) - r(x)| / |h|`` over seeded samples.

    Samples are spread around the boundary, where a discontinuity would show.
    """
    rng = np.random.default_rng(seed)
    X = body.boundary_points(rng, samples) * rng.uniform(0.5, 2.0, size=(samples, 1))
    H = rng.normal(size=X.shape)
    H *= step / np.linalg.norm(H, axis=1, keepdims=True)
    a, _, _ = retract_many(body, X, tol)
    b, _, _ = retract_many(body, X + H, tol)
    return float(np.max(np.linalg.norm(b - a, axis=1) / step))


@dataclass(frozen=True)
class DistanceEstimate:
    """Best-found value of ``inf P(x - y)``; an upper bound on the infimum."""

    value: float
    nearest: np.ndarray
    evaluations: int
    upper_bound: bool = True


def _seminorm_fn(seminorm) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(seminorm, PBody):
        return lambda X: _gauges(seminorm, np.atleast_2d(X), DEFAULT_TOL)
    if callable(seminorm):
        return lambda X: np.asarray(seminorm(np.atleast_2d(X)), dtype=float)
    raise ValidationError("seminorm must be a PBody or a callable on point arrays")


def p_distance(seminorm, x, target, budget: int = 2000, seed: int = 0,
               tol: float = DEFAULT_TOL) -> DistanceEstimate:
    """Estimate ``d(x, C) = inf {P(x - y) : y in C}``.

    ``target`` is either a :class:`PBody` or a finite sample of points.  For
    a body, candidates are the radial retraction of ``x``, boundary and
    interior samples, followed by a compass search whose moves are retracted
    back onto the body.
    """
    P = _seminorm_fn(seminorm)
    x = np.asarray(x, dtype=float).reshape(-1)
    if isinstance(target, PBody):
        if target.contains(x[None, :])[0]:
            return DistanceEstimate(0.0, x.copy(), 1)
        rng = np.random.default_rng(seed)
        n = max(budget // 2, 1)
        r_x, _, _ = retract_many(target, x[None, :], tol)
        axes = np.concatenate([np.eye(target.dim), -np.eye(target.dim)])
        axes, _, _ = retract_many(target, axes * target.bound_radius, tol)
        cand = np.concatenate([
            r_x, axes,
            target.boundary_points(rng, n),
            target.member_points(rng, n),
        ])
        vals = P(x - cand)
        evals = len(cand)
        order = np.argsort(vals, kind="stable")[:4]
        best_y, best_v = cand[order[0]].copy(), float(vals[order[0]])
        dirs = np.concatenate([np.eye(target.dim), -np.eye(target.dim)])
        for k in order:
            y, v = cand[k].copy(), float(vals[k])
            step = 0.25 * target.bound_radius
            while step > 1e-13:
                trial, _, _ = retract_many(target, y + step * dirs, tol)
                tv = P(x - trial)
                evals += len(trial)
                j = int(np.argmin(tv))
                if tv[j] < v:
                    y, v = trial[j], float(tv[j])
                else:
                    step *= 0.5
            if v < best_v:
                best_y, best_v = y, v
        return DistanceEstimate(best_v, best_y, evals)
    pts = PointSet(target).points if not isinstance(target, PointSet) else target.points
    if pts.shape[1] != x.size:
        raise DomainError("target points do not match the dimension of x")
    vals = P(x - pts)
    k = int(np.argmin(vals))
    return DistanceEstimate(float(vals[k]), pts[k].copy(), len(pts))


def admissible_residual(p, r: float) -> float:
    """Residual of the weight equation an inward step length must solve."""
    p = as_p(p)
    r = float(r)
    if r < 0:
        raise DomainError("r must be non-negative")
    if r <= 1.0:
        return (1.0 - r) ** p + r**p - 1.0
    return (1.0 / r) ** p + (1.0 - 1.0 / r) ** p - 1.0


def admissible_r_scan(p, r_max: float = 10.0, resolution: float = 1e-4) -> np.ndarray:
    """All grid values of ``r`` in ``[0, r_max]`` solving the weight equation.

    The grid is built from integers so that 0 and 1 are hit exactly.
    """
    p = as_p(p)
    if not resolution > 0 or not r_max > 0:
        raise DomainError("resolution and r_max must be positive")
    m = int(round(1.0 / resolution))
    if m < 1 or abs(m * resolution - 1.0) > 1e-9:
        raise DomainError("resolution must be 1/m for an integer m")
    r = np.arange(int(round(r_max * m)) + 1) / m
    low = r <= 1.0
    res = np.empty_like(r)
    res[low] = (1.0 - r[low]) ** p + r[low] ** p - 1.0
    inv = 1.0 / r[~low]
    res[~low] = inv**p + (1.0 - inv) ** p - 1.0
    hits = r[np.abs(res) <= ADMISSIBLE_TOL]
    if hits.size == 0:
        return hits
    keep = np.concatenate([[True], np.diff(hits) > DEDUP_TOL])
    return hits[keep]


@dataclass(frozen=True)
class InwardWitness:
    r: float
    endpoint: np.ndarray
    admissible: bool


def _member(C, z: np.ndarray, tol: float) -> bool:
    if isinstance(C, PBody):
        return bool(C.contains(z[None, :])[0])
    return bool(np.any(np.linalg.norm(C.points - z, axis=1) <= tol))


def _some_member(C) -> np.ndarray:
    if isinstance(C, PBody):
        return np.zeros(C.dim)
    return C.points[0].copy()


def _check_set(C):
    if isinstance(C, PBody):
        return C
    return C if isinstance(C, PointSet) else PointSet(C)


def inward_membership(C, x, z, p, r_grid: float = 1e-3, r_max: float = 1e3,
                      tol: float = 1e-12) -> tuple[bool, InwardWitness | None]:
    """Is ``z = x + r (y - x)`` for some admissible ``r >= 0`` and ``y in C``?

    For p < 1 only ``r`` in {0, 1} solves the weight equation, so the test
    reduces to ``z in {x} union C``.  For p = 1 every ``r >= 0`` is admissible
    and a ray search over ``r`` is run.
    """
    p = as_p(p)
    if not r_grid > 0:
        raise DomainError("r_grid must be positive")
    C = _check_set(C)
    x = np.asarray(x, dtype=float).reshape(-1)
    z = np.asarray(z, dtype=float).reshape(-1)
    if x.shape != z.shape:
        raise DomainError("x and z must have the same dimension")
    if np.linalg.norm(z - x) <= tol:
        return True, InwardWitness(0.0, _some_member(C), True)
    if p < 1.0:
        if _member(C, z, tol):
            return True, InwardWitness(1.0, z.copy(), True)
        return False, None
    d = z - x
    if isinstance(C, PointSet):
        for y in C.points:
            v = y - x
            vv = float(v @ v)
            if vv == 0.0:
                continue
            r = float(d @ v) / vv
            if r >= 0 and np.linalg.norm(d - r * v) <= tol * max(1.0, np.linalg.norm(d)):
                return True, InwardWitness(r, y.copy(), True)
        return False, None
    # y = x + d / r; scan r on a linear grid near zero and a geometric grid beyond
    rs = np.unique(np.concatenate([
        np.arange(1, int(np.ceil(1.0 / r_grid)) + 1) * r_grid,
        np.geomspace(1.0, r_max, 2000),
    ]))
    Y = x + d[None, :] / rs[:, None]
    ok = C.contains(Y)
    if np.any(ok):
        k = int(np.flatnonzero(ok)[0])
        return True, InwardWitness(float(rs[k]), Y[k].copy(), True)
    return False, None


def outward_membership(C, x, z, p, literal: bool = True, r_grid: float = 1e-3,
                       r_max: float = 1e3, tol: float = 1e-12) -> tuple[bool, InwardWitness | None]:
    """Mirror of :func:`inward_membership` for non-positive step lengths.

    For p < 1 the admissible steps are ``r`` in {0, -1}, which gives
    ``{x} union (2x - C)``.  The ``literal=True`` default instead tests the
    commonly quoted form ``{x} union {2x} union (-C)``; the two differ, see
    the README.  For p = 1 the search runs over ``r <= 0``.
    """
    p = as_p(p)
    C = _check_set(C)
    x = np.asarray(x, dtype=float).reshape(-1)
    z = np.asarray(z, dtype=float).reshape(-1)
    if np.linalg.norm(z - x) <= tol:
        return True, InwardWitness(0.0, _some_member(C), True)
    if p < 1.0:
        if literal:
            if np.linalg.norm(z - 2 * x) <= tol:
                return True, InwardWitness(-1.0, x.copy(), False)
            if _member(C, -z, tol):
                return True, InwardWitness(-1.0, -z, False)
            return False, None
        y = 2 * x - z
        if _member(C, y, tol):
            return True, InwardWitness(-1.0, y, True)
        return False, None
    # z = x + r (y - x) with r <= 0 is the inward test for the reflected point
    ok, w = inward_membership(C, x, 2 * x - z, p, r_grid, r_max, tol)
    if not ok:
        return False, None
    return True, InwardWitness(-w.r, w.endpoint, True)
