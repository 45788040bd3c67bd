"""Foundational p-convex arithmetic.

Weight pairs and weight vectors obey the power constraint ``sum t_i**p == 1``.
A set A is p-convex when ``s*x + t*y`` stays in A for all members x, y and
all admissible pairs (s, t).  Membership oracles throughout the package are
*vectorized*: they take an array of shape ``(..., d)`` and return a boolean
array of shape ``(...)``.  Use :func:`vectorize_oracle` to lift a scalar
predicate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from pconvex.errors import DomainError, UnsupportedRegimeError, ValidationError

WEIGHT_TOL = 1e-12
COLLINEAR_TOL = 1e-10

Oracle = Callable[[np.ndarray], np.ndarray]
Sampler = Callable[[np.random.Generator, int], np.ndarray]


@dataclass(frozen=True)
class PExponent:
    """The exponent p in (0, 1]."""

    p: float

    def __post_init__(self):
        p = float(self.p)
        if not (np.isfinite(p) and 0.0 < p <= 1.0):
            raise DomainError(f"p must lie in (0,1], got {self.p!r}")
        object.__setattr__(self, "p", p)

    def __float__(self):
        return self.p


def as_p(p) -> float:
    """Validate ``p`` (float or PExponent) and return it as a float."""
    if isinstance(p, PExponent):
        return p.p
    return PExponent(p).p


@dataclass(frozen=True)
class WeightVector:
    """Non-negative weights with ``sum t_i**p == 1`` to within 1e-12."""

    t: np.ndarray
    p: float

    def __post_init__(self):
        p = as_p(self.p)
        t = np.asarray(self.t, dtype=float).reshape(-1)
        if t.size == 0:
            raise ValidationError("weight vector is empty")
        if np.any(t < 0) or not np.all(np.isfinite(t)):
            raise ValidationError("weights must be finite and non-negative")
        total = float(np.sum(t**p))
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValidationError(
                f"sum of t_i^p must equal 1 (got {total!r} for p={p})"
            )
        t.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "p", p)

    def __len__(self):
        return self.t.size


@dataclass(frozen=True)
class PointSet:
    """A non-empty finite set of equal-dimension points, stored row-wise."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(1, -1)
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise ValidationError("point set must be a non-empty list of vectors")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("point coordinates must be finite")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]


def vectorize_oracle(predicate: Callable[[np.ndarray], bool]) -> Oracle:
    """Lift a predicate on single vectors to the batched oracle convention."""

    def oracle(X):
        X = np.asarray(X, dtype=float)
        flat = X.reshape(-1, X.shape[-1])
        out = np.fromiter((bool(predicate(row)) for row in flat), dtype=bool, count=len(flat))
        return out.reshape(X.shape[:-1])

    return oracle


def admissible_pair(p, u: float) -> tuple[float, float]:
    """Return ``(u**(1/p), (1-u)**(1/p))``, a pair with ``s**p + t**p == 1``."""
    p = as_p(p)
    u = float(u)
    if not 0.0 <= u <= 1.0:
        raise DomainError(f"u must lie in [0,1], got {u}")
    return u ** (1.0 / p), (1.0 - u) ** (1.0 / p)


def p_combination(points, weights: WeightVector) -> np.ndarray:
    """Evaluate the p-convex combination ``sum t_i x_i``."""
    if not isinstance(points, PointSet):
        points = PointSet(points)
    if not isinstance(weights, WeightVector):
        raise ValidationError("weights must be a WeightVector")
    if len(points) != len(weights):
        raise ValidationError(
            f"{len(points)} points but {len(weights)} weights"
        )
    return weights.t @ points.points


@dataclass(frozen=True)
class ViolationWitness:
    """A replayable failure: ``z = s*x + t*y`` left the set."""

    x: np.ndarray
    y: np.ndarray
    u: float
    s: float
    t: float
    z: np.ndarray

    def as_dict(self):
        return {
            "x": self.x.tolist(),
            "y": self.y.tolist(),
            "u": self.u,
            "s": self.s,
            "t": self.t,
            "z": self.z.tolist(),
        }


@dataclass(frozen=True)
class ConvexityReport:
    p: float
    trials: int
    n_violations: int
    witness: ViolationWitness | None = None

    @property
    def passed(self) -> bool:
        return self.n_violations == 0

    def as_dict(self):
        return {
            "p": self.p,
            "trials": self.trials,
            "passed": self.passed,
            "n_violations": self.n_violations,
            "witness": None if self.witness is None else self.witness.as_dict(),
        }


def replay_witness(membership: Oracle, p, x, y, u: float) -> ViolationWitness | None:
    """Re-evaluate a single (x, y, u) triple; return the witness if it fails."""
    s, t = admissible_pair(p, u)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = s * x + t * y
    if bool(membership(z[None, :])[0]):
        return None
    return ViolationWitness(x, y, float(u), s, t, z)


def check_p_convex(
    membership: Oracle,
    p,
    sampler: Sampler,
    trials: int = 1000,
    seed: int = 0,
    max_draws: int | None = None,
) -> ConvexityReport:
    """Sample member pairs and admissible pairs and test closure.

    ``sampler(rng, n)`` returns ``n`` candidate points; non-members are
    discarded.  The first failing triple is kept as the witness.
    """
    p = as_p(p)
    if trials < 1:
        raise DomainError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    max_draws = max_draws or 50 * trials
    members = []
    n_members = 0
    drawn = 0
    while n_members < 2 * trials and drawn < max_draws:
        batch = np.asarray(sampler(rng, 2 * trials), dtype=float)
        drawn += len(batch)
        keep = batch[np.asarray(membership(batch), dtype=bool)]
        members.append(keep)
        n_members += len(keep)
    pool = np.concatenate(members) if members else np.empty((0, 0))
    if len(pool) == 0:
        return ConvexityReport(p=p, trials=0, n_violations=0)
    idx = rng.integers(0, len(pool), size=(trials, 2))
    x, y = pool[idx[:, 0]], pool[idx[:, 1]]
    u = rng.uniform(0.0, 1.0, size=trials)
    s = u ** (1.0 / p)
    t = (1.0 - u) ** (1.0 / p)
    z = s[:, None] * x + t[:, None] * y
    inside = np.asarray(membership(z), dtype=bool)
    bad = np.flatnonzero(~inside)
    witness = None
    if bad.size:
        k = bad[0]
        witness = ViolationWitness(x[k].copy(), y[k].copy(), float(u[k]), float(s[k]), float(t[k]), z[k].copy())
    return ConvexityReport(p=p, trials=trials, n_violations=int(bad.size), witness=witness)


def singleton_hull_membership(x, q, p, closed: bool = True) -> bool:
    """Is ``q`` in the p-convex hull (or its closure) of the single point ``x``?

    For p < 1 the hull of ``{x}`` is the segment ``{t x : 0 < t <= 1}``; the
    closure adds the origin.
    """
    p = as_p(p)
    if p == 1.0:
        raise UnsupportedRegimeError(
            "singleton hull for p = 1 is {x} itself; compare points directly"
        )
    x = np.asarray(x, dtype=float)
    q = np.asarray(q, dtype=float)
    if x.shape != q.shape:
        raise DomainError("x and q must have the same dimension")
    xx = float(x @ x)
    if xx == 0.0:
        return bool(np.linalg.norm(q) <= COLLINEAR_TOL)
    t = float(q @ x) / xx
    if np.linalg.norm(q - t * x) > COLLINEAR_TOL * max(1.0, np.sqrt(xx)):
        return False
    if t > 1.0 + COLLINEAR_TOL:
        return False
    if closed:
        return t >= -COLLINEAR_TOL
    return t > COLLINEAR_TOL


@dataclass(frozen=True)
class HullWitness:
    """Certificate that ``q`` lies in the p-convex hull of a point set.

    ``coefficients[i]`` is the total weight on generator ``i``.  For p < 1
    repeated use of a generator is allowed, so ``sum coefficients**p`` may be
    below one; ``indices``/``weights`` spell out the repeated combination
    with ``sum weights.t**p == 1`` exactly.
    """

    coefficients: np.ndarray
    indices: tuple[int, ...]
    weights: WeightVector
    error: float

    def expanded_points(self, points: PointSet) -> np.ndarray:
        return points.points[list(self.indices)]


@dataclass(frozen=True)
class HullResult:
    member: bool
    witness: HullWitness | None = None
    best_error: float = field(default=float("inf"))

    def __bool__(self):
        return self.member


def _split_to_unit_power(c: np.ndarray, p: float) -> tuple[tuple[int, ...], np.ndarray]:
    """Split coefficients into repeated pieces so the p-powers sum to one."""
    idx = [i for i in range(len(c)) if c[i] > 0]
    pieces = [float(c[i]) for i in idx]
    deficit = 1.0 - sum(v**p for v in pieces)
    if deficit <= WEIGHT_TOL or p == 1.0:
        return tuple(idx), np.asarray(pieces)
    j = int(np.argmax(pieces))
    cj = pieces[j]
    target = cj**p + deficit
    m = 2
    while m ** (1.0 - p) * cj**p < target:
        m *= 2
    lo_m, hi_m = m // 2, m
    while hi_m - lo_m > 1:
        mid = (lo_m + hi_m) // 2
        if mid ** (1.0 - p) * cj**p >= target:
            hi_m = mid
        else:
            lo_m = mid
    m = hi_m

    def gap(b):
        a = (cj - b) / (m - 1)
        return (m - 1) * a**p + b**p - target

    b = optimize.brentq(gap, 0.0, cj / m, xtol=1e-300, rtol=4 * np.finfo(float).eps)
    a = (cj - b) / (m - 1)
    split = [a] * (m - 1) + [b]
    new_idx = idx[:j] + [idx[j]] * m + idx[j + 1 :]
    new_pieces = pieces[:j] + split + pieces[j + 1 :]
    return tuple(new_idx), np.asarray(new_pieces)


def _make_witness(points: PointSet, c: np.ndarray, q: np.ndarray, p: float) -> HullWitness | None:
    idx, pieces = _split_to_unit_power(c, p)
    total = float(np.sum(pieces**p))
    if total <= 0:
        return None
    # absorb rounding in the last piece so the constructor tolerance holds
    pieces = pieces / total ** (1.0 / p)
    try:
        weights = WeightVector(pieces, p)
    except ValidationError:
        return None
    err = float(np.linalg.norm(weights.t @ points.points[list(idx)] - q))
    return HullWitness(c, idx, weights, err)


def finite_hull_membership(
    points,
    q,
    p,
    tol: float = 1e-9,
    multistart: int = 16,
    seed: int = 0,
    grid: int = 20001,
) -> HullResult:
    """Search for a p-convex combination of ``points`` reproducing ``q``.

    Feasible total coefficients are ``c >= 0`` with ``sum c**p == 1`` for
    p = 1 and ``0 < sum c**p <= 1`` for p < 1 (repeated generators).  With
    two generators the feasible curve is scanned on a dense grid and refined;
    otherwise a seeded multistart local search over the simplex is used.
    A negative answer means "not found at this budget".
    """
    p = as_p(p)
    if tol <= 0:
        raise DomainError("tol must be positive")
    if not isinstance(points, PointSet):
        points = PointSet(points)
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.size != points.dim:
        raise DomainError(f"q has dimension {q.size}, points have {points.dim}")
    X = points.points
    s_min = 1.0 if p == 1.0 else 0.0

    def best_scale(v):
        # optimal s = rho**(1/p) in [s_min, 1] for the direction v
        vv = float(v @ v)
        if vv == 0.0:
            return 1.0
        return min(1.0, max(s_min, float(q @ v) / vv))

    def profile(u):
        v = (u ** (1.0 / p)) @ X
        s = best_scale(v)
        return float(np.linalg.norm(s * v - q)), s

    n = len(points)
    if n == 1:
        candidates = [np.array([1.0])]
    elif n == 2:
        ws = np.linspace(0.0, 1.0, grid)
        U = np.stack([ws, 1.0 - ws], axis=1)
        V = (U ** (1.0 / p)) @ X
        vv = np.einsum("ij,ij->i", V, V)
        with np.errstate(divide="ignore", invalid="ignore"):
            S = np.where(vv > 0, (V @ q) / vv, 1.0)
        S = np.clip(S, s_min, 1.0)
        errs = np.linalg.norm(S[:, None] * V - q, axis=1)
        k = int(np.argmin(errs))
        lo, hi = ws[max(k - 1, 0)], ws[min(k + 1, grid - 1)]
        res = optimize.minimize_scalar(
            lambda w: profile(np.array([w, 1.0 - w]))[0],
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-14},
        )
        candidates = [np.array([ws[k], 1.0 - ws[k]]), np.array([res.x, 1.0 - res.x])]
    else:
        rng = np.random.default_rng(seed)
        candidates = [np.eye(n)[i] for i in range(n)]
        candidates.append(np.full(n, 1.0 / n))

        def objective(theta):
            w = np.exp(theta - theta.max())
            return profile(w / w.sum())[0] ** 2

        for _ in range(multistart):
            theta0 = rng.normal(size=n) * 2.0
            res = optimize.minimize(objective, theta0, method="Nelder-Mead",
                                    options={"xatol": 1e-12, "fatol": 1e-24, "maxiter": 4000 * n})
            w = np.exp(res.x - res.x.max())
            candidates.append(w / w.sum())

    best_err, best_c = np.inf, None
    for u in candidates:
        err, s = profile(u)
        if err < best_err:
            best_err, best_c = err, s * u ** (1.0 / p)
    if best_err <= tol and best_c is not None and np.any(best_c > 0):
        witness = _make_witness(points, best_c, q, p)
        if witness is not None and witness.error <= tol:
            return HullResult(True, witness, best_err)
    return HullResult(False, None, float(best_err))


def unit_pball_oracle(p, weights: Sequence[float] | None = None) -> Oracle:
    """Membership oracle of ``{x : sum w_i |x_i|**p <= 1}``."""
    p = as_p(p)

    def oracle(X):
        X = np.asarray(X, dtype=float)
        w = 1.0 if weights is None else np.asarray(weights, dtype=float)
        return np.sum(w * np.abs(X) ** p, axis=-1) <= 1.0

    return oracle
