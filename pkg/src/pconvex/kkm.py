"""Grid verification of KKM covering and intersection properties.

A simplex point ``t`` is sent to ``phi(t) = sum t_i**(1/p) x_i``; the
weights ``t_i**(1/p)`` have p-powers summing to one, so every image is a
p-convex combination of the generators.  A family ``G_0..G_n`` of closed
sets is KKM when every face image ``phi(Delta_J)`` lies in the union of the
``G_i`` with ``i`` in ``J``.  Both properties are checked on a barycentric
grid; an intersection found is "realized at resolution R", and an empty
intersection at one resolution refutes nothing.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from pconvex.errors import DomainError, ValidationError
from pconvex.pcore import PointSet, as_p
from pconvex.registry import Registry

BAND = 1e-12
SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class SimplexGrid:
    """All points of the n-simplex whose coordinates are multiples of 1/R."""

    n: int
    resolution: int
    counts: np.ndarray = field(init=False, repr=False)
    points: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 0:
            raise DomainError("simplex dimension must be >= 0")
        if self.resolution < 1:
            raise DomainError("resolution must be >= 1")
        R, n = int(self.resolution), int(self.n)
        # stars and bars: choose n bar positions among R + n slots
        rows = []
        for bars in itertools.combinations(range(R + n), n):
            edges = (-1,) + bars + (R + n,)
            rows.append([edges[k + 1] - edges[k] - 1 for k in range(n + 1)])
        counts = np.asarray(rows, dtype=np.int64).reshape(-1, n + 1)
        counts.setflags(write=False)
        pts = counts / float(R)
        pts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.counts)

    @property
    def support(self) -> np.ndarray:
        """Bitmask of the non-zero coordinates of each grid point."""
        weights = 1 << np.arange(self.n + 1, dtype=np.int64)
        return (self.counts > 0).astype(np.int64) @ weights


def _check_barycentric(T: np.ndarray):
    if np.any(T < 0):
        raise DomainError("barycentric coordinates must be non-negative")
    if np.any(np.abs(T.sum(axis=-1) - 1.0) > SIMPLEX_TOL):
        raise DomainError("barycentric coordinates must sum to 1")


def phi_many(generators, T, p) -> np.ndarray:
    p = as_p(p)
    X = generators.points if isinstance(generators, PointSet) else PointSet(generators).points
    T = np.atleast_2d(np.asarray(T, dtype=float))
    if T.shape[1] != len(X):
        raise DomainError(f"{T.shape[1]} coordinates for {len(X)} generators")
    _check_barycentric(T)
    return (T ** (1.0 / p)) @ X


def phi_simplex(generators, t, p) -> np.ndarray:
    """Image ``sum t_i**(1/p) x_i`` of one barycentric point."""
    return phi_many(generators, np.asarray(t, dtype=float)[None, :], p)[0]


@dataclass(frozen=True)
class Predicate:
    """A closed set given by a primitive or a boolean combination."""

    kind: str
    args: tuple = ()
    children: tuple["Predicate", ...] = ()

    def __call__(self, Y: np.ndarray) -> np.ndarray:
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if self.kind == "true":
            return np.ones(len(Y), dtype=bool)
        if self.kind == "coord_ge":
            i, c = self.args
            if not 0 <= i < Y.shape[1]:
                raise DomainError(f"coordinate {i} out of range")
            return Y[:, i] >= c - BAND
        if self.kind == "ball":
            center, r = self.args
            return np.linalg.norm(Y - np.asarray(center), axis=1) <= r + BAND
        if self.kind == "halfspace":
            a, b = self.args
            return Y @ np.asarray(a) <= b + BAND
        if self.kind == "and":
            out = np.ones(len(Y), dtype=bool)
            for c in self.children:
                out &= c(Y)
            return out
        if self.kind == "or":
            out = np.zeros(len(Y), dtype=bool)
            for c in self.children:
                out |= c(Y)
            return out
        raise ValidationError(f"unknown predicate kind {self.kind!r}")

    def to_spec(self):
        if self.kind == "true":
            return {"true": []}
        if self.kind in ("and", "or"):
            return {self.kind: [c.to_spec() for c in self.children]}
        if self.kind == "coord_ge":
            return {"coord_ge": list(self.args)}
        a0, a1 = self.args
        return {self.kind: [list(a0), a1]}


PREDICATES = Registry("predicate")


@PREDICATES.register("coord_ge", "coord_ge(i, c)", "y_i >= c")
def coord_ge(i, c) -> Predicate:
    return Predicate("coord_ge", (int(i), float(c)))


@PREDICATES.register("ball", "ball(center, r)", "|y - center| <= r")
def ball(center, r) -> Predicate:
    return Predicate("ball", (tuple(float(v) for v in center), float(r)))


@PREDICATES.register("halfspace", "halfspace(a, b)", "a . y <= b")
def halfspace(a, b) -> Predicate:
    return Predicate("halfspace", (tuple(float(v) for v in a), float(b)))


@PREDICATES.register("and", "and(p1, p2, ...)", "intersection")
def all_of(*children) -> Predicate:
    return Predicate("and", (), tuple(children))


@PREDICATES.register("or", "or(p1, p2, ...)", "union")
def any_of(*children) -> Predicate:
    return Predicate("or", (), tuple(children))


@PREDICATES.register("true", "true()", "the whole space")
def true_set() -> Predicate:
    return Predicate("true")


def parse_predicate(spec) -> Predicate:
    """Build a predicate from its config form, e.g. ``{"coord_ge": [0, 0.5]}``."""
    if isinstance(spec, Predicate):
        return spec
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ValidationError(f"predicate must be a single-key object, got {spec!r}")
    (key, val), = spec.items()
    if key in ("and", "or"):
        return PREDICATES.build(key, [parse_predicate(s) for s in val])
    return PREDICATES.build(key, val)


@dataclass(frozen=True)
class KkmFamily:
    generators: PointSet
    predicates: tuple[Predicate | Callable, ...]

    def __post_init__(self):
        gens = self.generators if isinstance(self.generators, PointSet) else PointSet(self.generators)
        object.__setattr__(self, "generators", gens)
        preds = tuple(parse_predicate(p) if isinstance(p, dict) else p for p in self.predicates)
        if len(preds) != len(gens):
            raise ValidationError(f"{len(gens)} generators but {len(preds)} sets")
        object.__setattr__(self, "predicates", preds)

    @property
    def n(self) -> int:
        return len(self.generators) - 1

    def restrict(self, face) -> "KkmFamily":
        face = list(face)
        return KkmFamily(PointSet(self.generators.points[face]),
                         tuple(self.predicates[i] for i in face))


@dataclass(frozen=True)
class KkmReport:
    is_kkm: bool
    resolution: int
    face_ok: dict
    violation: dict | None
    intersection_witnesses: np.ndarray

    def covering_on(self, face) -> bool:
        """Covering restricted to ``face`` and all of its sub-faces."""
        J = set(face)
        return all(ok for f, ok in self.face_ok.items() if set(f) <= J)

    def as_dict(self):
        return {
            "is_kkm": self.is_kkm,
            "resolution": self.resolution,
            "failing_faces": [list(f) for f, ok in sorted(self.face_ok.items()) if not ok],
            "violation": self.violation,
            "intersection_witnesses": self.intersection_witnesses.tolist(),
            "intersection_note": f"realized at resolution {self.resolution}",
        }


def kkm_verify(family: KkmFamily, grid: SimplexGrid, p) -> KkmReport:
    """Check the covering condition on every face, then look for common points."""
    p = as_p(p)
    if grid.resolution < 2:
        raise DomainError("grid resolution must be >= 2")
    if grid.n != family.n:
        raise DomainError(f"grid is for the {grid.n}-simplex, family has {family.n + 1} sets")
    Y = phi_many(family.generators, grid.points, p)
    M = np.column_stack([np.asarray(g(Y), dtype=bool) for g in family.predicates])
    support = grid.support
    face_ok = {}
    worst = None
    for mask in range(1, 1 << (grid.n + 1)):
        face = tuple(i for i in range(grid.n + 1) if mask >> i & 1)
        on_face = (support & ~mask) == 0
        covered = M[:, list(face)].any(axis=1)
        bad = np.flatnonzero(on_face & ~covered)
        face_ok[face] = bad.size == 0
        if bad.size and (worst is None or len(face) > len(worst[0])):
            # report the failure nearest the face barycenter
            centre = np.zeros(grid.n + 1)
            centre[list(face)] = 1.0 / len(face)
            k = bad[np.argmin(np.linalg.norm(grid.points[bad] - centre, axis=1))]
            worst = (face, int(k))
    is_kkm = all(face_ok.values())
    violation = None
    if worst is not None:
        face, k = worst
        violation = {"face": list(face), "t": grid.points[k].tolist(), "image": Y[k].tolist()}
    if is_kkm:
        witnesses = grid.points[M.all(axis=1)]
    else:
        witnesses = np.empty((0, grid.n + 1))
    return KkmReport(is_kkm, int(grid.resolution), face_ok, violation, witnesses)


def coordinate_family(n: int, c: float) -> KkmFamily:
    """Standard-simplex family ``G_i = {t_i >= c}`` (images equal t at p = 1)."""
    return KkmFamily(PointSet(np.eye(n + 1)), tuple(coord_ge(i, c) for i in range(n + 1)))
