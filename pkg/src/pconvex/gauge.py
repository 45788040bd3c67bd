"""Minkowski p-gauges of bounded p-convex bodies.

For a body A containing a neighbourhood of the origin the p-gauge is
``P_A(x) = inf{a > 0 : x in a**(1/p) * A}``.  It is evaluated here by
bisection on the membership oracle alone.  Built-in bodies also carry a
closed-form gauge that other modules use as a fast path; the bisection
routine never consults it, so the two can be compared against each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from pconvex.errors import DomainError, UnboundedBodyError, ValidationError
from pconvex.pcore import Oracle, as_p, check_p_convex
from pconvex.registry import Registry

BRACKET_CAP = 2.0**60
DEFAULT_TOL = 1e-9

GaugeFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PBody:
    """A bounded p-convex body with the origin in its interior.

    ``membership`` follows the batched oracle convention of
    :mod:`pconvex.pcore`.  ``gauge_fn``, when given, must be an exact
    closed form of the p-gauge; it is trusted, not checked, at construction.
    """

    membership: Oracle
    p: float
    bound_radius: float
    dim: int
    name: str = "custom"
    params: dict = field(default_factory=dict)
    gauge_fn: GaugeFn | None = None
    symmetric: bool = False
    validate: bool = True
    interior_radius: float = field(init=False, default=0.0)

    def __post_init__(self):
        object.__setattr__(self, "p", as_p(self.p))
        if self.dim < 1:
            raise ValidationError("dim must be >= 1")
        if not (np.isfinite(self.bound_radius) and self.bound_radius > 0):
            raise ValidationError("bound_radius must be a positive finite number")
        object.__setattr__(self, "interior_radius", self._probe_interior())
        if self.validate:
            self._probe_bounded()
            self._probe_convex()

    def contains(self, X) -> np.ndarray:
        return np.asarray(self.membership(np.asarray(X, dtype=float)), dtype=bool)

    def gauge(self, X) -> np.ndarray:
        """Gauge values, using the closed form when one is attached."""
        X = np.asarray(X, dtype=float)
        if self.gauge_fn is not None:
            return np.asarray(self.gauge_fn(X), dtype=float)
        return eval_gauge_many(self, X.reshape(-1, self.dim)).reshape(X.shape[:-1])

    def boundary_points(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Gauge-normalised random directions, ``x * P(x)**(-1/p)``.

        Points the oracle rejects after rounding are pulled inward by single
        ulps, so every sample is a member.
        """
        d = rng.normal(size=(n, self.dim))
        g = self.gauge(d)
        B = d * g[:, None] ** (-1.0 / self.p)
        for _ in range(16):
            out = ~self.contains(B)
            if not np.any(out):
                break
            B[out] *= 1.0 - 2.0**-52
        return B

    def member_points(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Boundary points pulled inward by a uniform factor in (0, 1]."""
        b = self.boundary_points(rng, n)
        rho = 1.0 - rng.uniform(0.0, 1.0, size=n)
        return b * rho[:, None]

    def _probe_interior(self) -> float:
        # axis probes suffice: a p-convex body holding +-delta*e_i holds the
        # delta-scaled l_p ball spanned by them
        probes = np.concatenate([np.eye(self.dim), -np.eye(self.dim)])
        if not self.contains(np.zeros((1, self.dim)))[0]:
            raise ValidationError("the origin is not a member of the body")
        delta = self.bound_radius
        for _ in range(200):
            if np.all(self.contains(delta * probes)):
                return float(delta)
            delta *= 0.5
        raise ValidationError("the origin is not an interior point of the body")

    def _probe_bounded(self, n: int = 256):
        rng = np.random.default_rng(12345)
        d = rng.normal(size=(n, self.dim))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        d = np.concatenate([d, np.eye(self.dim), -np.eye(self.dim)])
        outside = d * self.bound_radius * (1.0 + 1e-9)
        if np.any(self.contains(outside)):
            raise ValidationError("body has members beyond bound_radius")

    def _probe_convex(self, trials: int = 200):
        report = check_p_convex(self.membership, self.p, self.member_points, trials=trials, seed=7)
        if not report.passed:
            raise ValidationError(f"body fails the p-convexity probe: {report.witness}")

    def describe(self) -> dict:
        return {"name": self.name, "params": self.params, "p": self.p, "dim": self.dim}


@dataclass(frozen=True)
class GaugeValue:
    value: float
    tol: float

    def __float__(self):
        return self.value


def _check_tol(tol):
    if not tol > 0:
        raise DomainError("tol must be positive")


def eval_gauge_many(body: PBody, X, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Bisection gauge for a batch of points, shape ``(n, dim)``.

    Each returned value ``a`` satisfies ``a**(-1/p) * x in body`` and lies
    within ``tol`` of the true gauge.  Boundary points of a closed body come
    back as exactly 1.0.
    """
    _check_tol(tol)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != body.dim:
        raise DomainError(f"expected points of dimension {body.dim}")
    p = body.p
    n = len(X)
    out = np.zeros(n)
    nz = np.any(X != 0.0, axis=1)
    Y = X[nz]
    if len(Y) == 0:
        return out

    def member(alpha, rows):
        return body.contains(rows * alpha[:, None] ** (-1.0 / p))

    lo = np.zeros(len(Y))
    hi = np.ones(len(Y))
    grow = ~member(hi, Y)
    while np.any(grow):
        if np.any(hi[grow] >= BRACKET_CAP):
            raise UnboundedBodyError("gauge bracket exceeded 2**60; body looks unbounded")
        lo[grow] = hi[grow]
        hi[grow] *= 2.0
        idx = np.flatnonzero(grow)
        grow[idx] = ~member(hi[idx], Y[idx])
    active = hi - lo > tol
    while np.any(active):
        idx = np.flatnonzero(active)
        mid = 0.5 * (lo[idx] + hi[idx])
        # stop once the midpoint no longer moves in floating point
        stuck = (mid == lo[idx]) | (mid == hi[idx])
        inside = member(mid, Y[idx])
        hi[idx[inside]] = mid[inside]
        lo[idx[~inside]] = mid[~inside]
        active[idx] = (hi[idx] - lo[idx] > tol) & ~stuck
    out[nz] = hi
    return out


def eval_gauge(body: PBody, x, tol: float = DEFAULT_TOL) -> GaugeValue:
    """Gauge of a single point by bisection on the membership oracle."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return GaugeValue(float(eval_gauge_many(body, x, tol)[0]), tol)


@dataclass(frozen=True)
class AxiomCheck:
    name: str
    trials: int
    violations: int
    max_excess: float
    witness: dict | None = None

    @property
    def passed(self) -> bool:
        return self.violations == 0


@dataclass(frozen=True)
class AxiomReport:
    checks: tuple[AxiomCheck, ...]
    notes: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name) -> AxiomCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self):
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "trials": c.trials, "violations": c.violations,
                 "max_excess": c.max_excess, "witness": c.witness}
                for c in self.checks
            ],
            "notes": list(self.notes),
        }


def _axiom_check(name, excess, witness_of) -> AxiomCheck:
    bad = np.flatnonzero(excess > 0)
    witness = witness_of(int(bad[0])) if bad.size else None
    return AxiomCheck(name, int(excess.size), int(bad.size), float(max(excess.max(), 0.0)), witness)


def verify_gauge_axioms(body: PBody, samples: int = 1000, seed: int = 0,
                        tol: float = DEFAULT_TOL) -> AxiomReport:
    """Sample-check the p-seminorm axioms of the bisection gauge.

    Homogeneity for negative scalars is only tested on symmetric bodies.
    """
    if samples < 1:
        raise DomainError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    p = body.p
    checks = []
    notes = []

    zero = eval_gauge(body, np.zeros(body.dim), tol).value
    checks.append(AxiomCheck("zero", 1, int(zero != 0.0), float(zero),
                             None if zero == 0.0 else {"value": zero}))

    X = body.member_points(rng, samples) * rng.uniform(0.2, 2.0, size=(samples, 1))
    lam = rng.uniform(0.0, 4.0, size=samples)
    gx = eval_gauge_many(body, X, tol)
    glx = eval_gauge_many(body, X * lam[:, None], tol)
    excess = np.abs(glx - lam**p * gx) - 3.0 * tol * (1.0 + lam**p)
    checks.append(_axiom_check(
        "homogeneity", excess,
        lambda k: {"x": X[k].tolist(), "lambda": float(lam[k]), "P(lambda x)": float(glx[k]),
                   "lambda^p P(x)": float(lam[k] ** p * gx[k])}))

    if body.symmetric:
        nlam = -lam
        gnx = eval_gauge_many(body, X * nlam[:, None], tol)
        excess = np.abs(gnx - lam**p * gx) - 3.0 * tol * (1.0 + lam**p)
        checks.append(_axiom_check(
            "homogeneity_negative", excess,
            lambda k: {"x": X[k].tolist(), "lambda": float(nlam[k]), "P(lambda x)": float(gnx[k])}))
    else:
        notes.append("body not declared symmetric: homogeneity checked for lambda >= 0 only")

    Y = body.member_points(rng, samples) * rng.uniform(0.2, 2.0, size=(samples, 1))
    gy = eval_gauge_many(body, Y, tol)
    gxy = eval_gauge_many(body, X + Y, tol)
    excess = gxy - (gx + gy) - 3.0 * tol
    checks.append(_axiom_check(
        "subadditivity", excess,
        lambda k: {"x": X[k].tolist(), "y": Y[k].tolist(), "P(x+y)": float(gxy[k]),
                   "P(x)+P(y)": float(gx[k] + gy[k])}))
    return AxiomReport(tuple(checks), tuple(notes))


@dataclass(frozen=True)
class SandwichReport:
    trials: int
    n_open: int
    n_boundary: int
    n_outside: int
    violations: int
    witness: dict | None = None

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def as_dict(self):
        return {"trials": self.trials, "n_open": self.n_open, "n_boundary": self.n_boundary,
                "n_outside": self.n_outside, "violations": self.violations,
                "passed": self.passed, "witness": self.witness}


def classify_point(body: PBody, x, tol: float = DEFAULT_TOL) -> tuple[bool, bool]:
    """Return ``(member of body, member of the open unit gauge ball)``."""
    x = np.asarray(x, dtype=float)
    g = eval_gauge(body, x, tol).value
    return bool(body.contains(x[None, :])[0]), g < 1.0


def ball_sandwich_check(body: PBody, samples: int = 1000, seed: int = 0,
                        tol: float = DEFAULT_TOL) -> SandwichReport:
    """Check ``{P < 1} within A within {P <= 1}`` on radially spread samples.

    A third of the samples sit exactly on the gauge-normalised boundary.
    """
    if samples < 1:
        raise DomainError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    B = body.boundary_points(rng, samples)
    scale = rng.uniform(0.5, 1.5, size=samples)
    scale[: samples // 3] = 1.0
    X = B * scale[:, None]
    g = eval_gauge_many(body, X, tol)
    member = body.contains(X)
    open_ball = g < 1.0
    bad = (open_ball & ~member) | (member & (g > 1.0))
    idx = np.flatnonzero(bad)
    witness = None
    if idx.size:
        k = int(idx[0])
        witness = {"x": X[k].tolist(), "gauge": float(g[k]), "member": bool(member[k])}
    return SandwichReport(
        trials=samples,
        n_open=int(np.sum(open_ball)),
        n_boundary=int(np.sum(member & ~open_ball)),
        n_outside=int(np.sum(~member)),
        violations=int(idx.size),
        witness=witness,
    )


BODIES = Registry("body")


@BODIES.register("pball", "pball(weights, p)", "weighted unit p-ball sum w_i|x_i|^p <= 1")
def pball(weights, p, validate: bool = True) -> PBody:
    p = as_p(p)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.size == 0 or np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise ValidationError("weights must be positive and finite")
    w.setflags(write=False)

    def gauge_fn(X):
        return np.sum(w * np.abs(X) ** p, axis=-1)

    def membership(X):
        return gauge_fn(X) <= 1.0

    bound = float(np.sqrt(np.sum(w ** (-2.0 / p))))
    return PBody(membership, p, bound, int(w.size), name="pball",
                 params={"weights": w.tolist(), "p": p}, gauge_fn=gauge_fn,
                 symmetric=True, validate=validate)


@BODIES.register("euclidean_disk", "euclidean_disk(r, p=1, dim=2)",
                 "Euclidean ball of radius r about the origin")
def euclidean_disk(r, p=1.0, dim: int = 2, validate: bool = True) -> PBody:
    p = as_p(p)
    r = float(r)
    if not (np.isfinite(r) and r > 0):
        raise ValidationError("radius must be positive")

    def gauge_fn(X):
        return (np.linalg.norm(X, axis=-1) / r) ** p

    def membership(X):
        return np.linalg.norm(X, axis=-1) <= r

    return PBody(membership, p, r, int(dim), name="euclidean_disk",
                 params={"r": r, "p": p, "dim": int(dim)}, gauge_fn=gauge_fn,
                 symmetric=True, validate=validate)


@BODIES.register("box", "box(half_widths, p=1)", "axis-aligned box |x_i| <= h_i")
def box(half_widths, p=1.0, validate: bool = True) -> PBody:
    p = as_p(p)
    h = np.asarray(half_widths, dtype=float).reshape(-1)
    if h.size == 0 or np.any(~np.isfinite(h)) or np.any(h <= 0):
        raise ValidationError("half widths must be positive and finite")
    h.setflags(write=False)

    def gauge_fn(X):
        return np.max(np.abs(X) / h, axis=-1) ** p

    def membership(X):
        return np.all(np.abs(X) <= h, axis=-1)

    return PBody(membership, p, float(np.linalg.norm(h)), int(h.size), name="box",
                 params={"half_widths": h.tolist(), "p": p}, gauge_fn=gauge_fn,
                 symmetric=True, validate=validate)
