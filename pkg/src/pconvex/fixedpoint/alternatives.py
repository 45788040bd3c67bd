"""Scans for the alternatives to a fixed point: invariant directions on the
boundary, unbounded solution branches of ``x = lam F(x)``, and homotopy
continuation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

from pconvex.errors import DomainError
from pconvex.fixedpoint.certificates import (
    Certificate,
    Check,
    direction_gap,
    eigen_gap,
)
from pconvex.fixedpoint.maps import MapSpec
from pconvex.fixedpoint.scheme import (
    IDENTITY_TOL,
    SOLVER_TOL,
    best_approx_certificate,
    gauge_one,
    retract_one,
)
from pconvex.fixedpoint.solvers import solve_fixed_point
from pconvex.gauge import PBody

DEDUP_TOL = 1e-6


@dataclass(frozen=True)
class ScanResult:
    """Invariant directions found, plus the fixed-point cross-check if none."""

    directions: tuple[Certificate, ...]
    starts: int
    fallback: Certificate | None = None

    @property
    def empty(self) -> bool:
        return not self.directions

    def as_dict(self):
        return {"starts": self.starts,
                "directions": [c.as_dict() for c in self.directions],
                "fallback": None if self.fallback is None else self.fallback.as_dict()}


def _direction_certificate(F: MapSpec, body: PBody, x, tol, identity_tol) -> Certificate | None:
    p = body.p
    x = np.asarray(x, dtype=float)
    Fx = F(x)
    gF = gauge_one(body, Fx)
    lam = gF ** (1.0 / p)
    gx = gauge_one(body, x)
    eg = eigen_gap(lam, x, Fx)
    dg = direction_gap(lam, gF, p)
    checks = {
        "lambda_consistency": Check(dg <= identity_tol, dg, identity_tol),
        "eigen_equation": Check(eg <= tol, eg, tol),
        "on_boundary": Check(abs(gx - 1.0) <= tol, abs(gx - 1.0), tol),
    }
    if not all(c.passed for c in checks.values()):
        return None
    return Certificate("InvariantDirection", p, x, Fx, None, None, gF, gx, lam, tol, identity_tol,
                       checks, "invariant_direction", f"boundary_scan[{F.asserted_class}]")


def birkhoff_kellogg_scan(F: MapSpec, body: PBody, lam_max: float = 1e6, multistart: int = 32,
                          seed: int = 0, tol: float = SOLVER_TOL,
                          identity_tol: float = IDENTITY_TOL, max_iter: int = 2000,
                          cross_check: bool = True) -> ScanResult:
    """Search the boundary for ``x`` with ``F(x) = lam x`` and ``1 < lam <= lam_max``.

    Starts are the axis directions and seeded random boundary points.  Each
    start runs the normalised iteration ``x <- F(x) / P(F(x))**(1/p)``
    followed by a root solve of ``F(x) = lam x, P(x) = 1``.  Solutions are
    deduplicated on ``(x, lam)`` in max-norm.  With no direction found, the
    approximating scheme is run as the cross-check.
    """
    if not lam_max > 1.0:
        raise DomainError("lam_max must exceed 1")
    p = body.p
    d = body.dim
    rng = np.random.default_rng(seed)
    axes = np.concatenate([np.eye(d), -np.eye(d)])
    starts = np.concatenate([axes, rng.normal(size=(multistart, d))])
    starts = starts * body.gauge(starts)[:, None] ** (-1.0 / p)

    def normalise(y):
        g = gauge_one(body, y)
        return y * g ** (-1.0 / p) if g > 0 else None

    found: list[Certificate] = []
    keys: list[np.ndarray] = []
    for x0 in starts:
        cands = []
        x = x0.copy()
        for _ in range(max_iter):
            y = normalise(F(x))
            if y is None:
                break
            if np.max(np.abs(y - x)) <= 1e-14:
                x = y
                break
            x = y
        cands.append(x)

        def eqs(v):
            xv, lam = v[:d], v[d]
            return np.concatenate([F(xv) - lam * xv, [gauge_one(body, xv) - 1.0]])

        try:
            lam0 = gauge_one(body, F(x0)) ** (1.0 / p)
            sol = optimize.root(eqs, np.concatenate([x0, [lam0]]), method="hybr",
                                options={"xtol": 1e-14})
            if np.all(np.isfinite(sol.x)):
                cands.append(normalise(sol.x[:d]) if gauge_one(body, sol.x[:d]) > 0 else x0)
        except (ValueError, FloatingPointError):
            pass
        for c in cands:
            if c is None:
                continue
            cert = _direction_certificate(F, body, c, tol, identity_tol)
            if cert is None or not (1.0 < cert.lam <= lam_max):
                continue
            key = np.concatenate([cert.point, [cert.lam]])
            if any(np.max(np.abs(key - k)) <= DEDUP_TOL for k in keys):
                continue
            keys.append(key)
            found.append(cert)
    fallback = None
    if not found and cross_check:
        fallback = best_approx_certificate(F, body, tol, identity_tol, verify_inward=False,
                                           conclusion="fixed_point_no_invariant_direction")
    return ScanResult(tuple(found), len(starts), fallback)


@dataclass(frozen=True)
class EpsPoint:
    lam: float
    x: np.ndarray | None
    norm: float
    gauge: float | None
    resolved: bool


@dataclass(frozen=True)
class EpsReport:
    points: tuple[EpsPoint, ...]
    max_norm: float
    max_gauge: float | None
    growth_exponent: float | None
    verdict: str
    R_max: float

    @property
    def growth(self) -> bool:
        return self.verdict == "growth_detected"

    def as_dict(self):
        return {
            "verdict": self.verdict, "R_max": self.R_max, "max_norm": self.max_norm,
            "max_gauge": self.max_gauge, "growth_exponent": self.growth_exponent,
            "points": [{"lambda": e.lam, "x": None if e.x is None else e.x.tolist(),
                        "norm": e.norm, "gauge": e.gauge, "resolved": e.resolved}
                       for e in self.points],
        }


def default_eps_grid(k: int = 20) -> np.ndarray:
    return 1.0 - 2.0 ** -np.arange(1, k + 1, dtype=float)


def leray_schauder_eps_scan(F: MapSpec, domain: PBody | None = None, lam_grid=None,
                            R_max: float = 1e6, dim: int | None = None,
                            tol: float = SOLVER_TOL) -> EpsReport:
    """Sample ``eps(F) = {x : x = lam F(x), 0 < lam < 1}`` along a grid.

    Solutions are continued from one grid value to the next.  Growth is
    declared when a solution exceeds ``R_max`` or when ``|x(lam)|`` grows at
    least like ``(1 - lam)**-0.5`` on the tail of the grid.
    """
    lam_grid = default_eps_grid() if lam_grid is None else np.asarray(lam_grid, dtype=float)
    if np.any(lam_grid <= 0) or np.any(lam_grid >= 1):
        raise DomainError("lambda grid must lie in (0, 1)")
    if domain is not None:
        dim = domain.dim
    if dim is None:
        dim = F.dim
    if dim is None:
        raise DomainError("dimension unknown: pass a domain body or dim")
    warm = np.zeros(dim)
    pts = []
    for lam in lam_grid:
        G = lambda x, lam=lam: lam * F(x)  # noqa: E731
        res = solve_fixed_point(G, warm, size=lambda z: float(np.linalg.norm(z)),
                                blowup=1e3 * R_max)
        x = res.z
        ok = bool(np.all(np.isfinite(x))) and float(np.max(np.abs(x - G(x)))) <= tol * (1.0 + np.max(np.abs(x)))
        if ok:
            warm = x
            g = gauge_one(domain, x) if domain is not None else None
            pts.append(EpsPoint(float(lam), x, float(np.linalg.norm(x)), g, True))
        else:
            pts.append(EpsPoint(float(lam), None, float("nan"), None, False))
    good = [e for e in pts if e.resolved]
    max_norm = max((e.norm for e in good), default=0.0)
    gauges = [e.gauge for e in good if e.gauge is not None]
    max_gauge = max(gauges) if gauges else None
    slope = None
    tail = [e for e in good[len(good) // 2:] if e.norm > 0]
    if len(tail) >= 3:
        u = np.log(1.0 / (1.0 - np.array([e.lam for e in tail])))
        v = np.log(np.array([e.norm for e in tail]))
        slope = float(np.polyfit(u, v, 1)[0])
    if max_norm > R_max or (slope is not None and slope >= 0.5):
        verdict = "growth_detected"
    elif not good:
        verdict = "unresolved"
    else:
        verdict = "bounded"
    return EpsReport(tuple(pts), max_norm, max_gauge, slope, verdict, float(R_max))


Homotopy = Callable[[float, np.ndarray], np.ndarray]


def homotopy_map(H: Homotopy, body: PBody, eps: float) -> Callable[[np.ndarray], np.ndarray]:
    """The piecewise map used for continuation at band width ``eps``.

    Inside the band ``1 - eps <= P(x) <= 1`` it evaluates
    ``H((1 - P(x))/eps, x / P(x)**(1/p))``; deeper inside it evaluates
    ``H(1, x / (1 - eps)**(1/p))``.  The ``1/p`` powers keep both branches on
    the same level sets of the gauge, so the map is continuous.  Points
    outside the body are first retracted onto it.
    """
    p = body.p

    def Fn(x):
        x = retract_one(body, x)
        g = gauge_one(body, x)
        if g >= 1.0 - eps:
            t = min(max((1.0 - g) / eps, 0.0), 1.0)
            return H(t, x * g ** (-1.0 / p))
        return H(1.0, x * (1.0 - eps) ** (-1.0 / p))

    return Fn


def trace_path(H: Homotopy, dim: int, ts, x0=None, tol: float = SOLVER_TOL) -> list[tuple[float, np.ndarray | None]]:
    """Continue solutions of ``x = H(t, x)`` along the parameter grid ``ts``."""
    warm = np.zeros(dim) if x0 is None else np.asarray(x0, dtype=float)
    path = []
    for t in ts:
        G = lambda x, t=t: H(float(t), x)  # noqa: E731
        res = solve_fixed_point(G, warm)
        x = res.z
        if float(np.max(np.abs(x - G(x)))) <= tol:
            warm = x
            path.append((float(t), x))
        else:
            path.append((float(t), None))
    return path


def _check_assumptions(H: Homotopy, body: PBody, samples: int, seed: int, tol: float) -> dict:
    rng = np.random.default_rng(seed)
    B = body.boundary_points(rng, samples)
    start_inside = all(body.contains(np.asarray(H(0.0, b))[None, :])[0] for b in B)
    min_gap = np.inf
    for t in np.linspace(0.0, 1.0, 11):
        for b in B:
            min_gap = min(min_gap, float(np.max(np.abs(b - H(float(t), b)))))
    return {"start_maps_boundary_inside": bool(start_inside),
            "boundary_fixed_point_free": bool(min_gap > tol),
            "min_boundary_gap": float(min_gap)}


def homotopy_solve(H: Homotopy, body: PBody, eps_schedule=None, tol: float = SOLVER_TOL,
                   samples: int = 64, seed: int = 0, path_grid=None) -> Certificate:
    """Solve ``x = H(1, x)`` by continuation through shrinking bands.

    For each band width the piecewise map is solved; an interior solution is
    polished on ``x = H(1, x)`` (FixedPoint).  A solution in the band maps to
    a boundary point ``v`` and a parameter ``t`` with ``v = H(t, v)``
    (BoundarySolution).  If neither polishes within ``tol`` the result is
    Inconclusive.
    """
    p = body.p
    eps_schedule = (2.0 ** -np.arange(2, 21, dtype=float)) if eps_schedule is None \
        else np.asarray(eps_schedule, dtype=float)
    if np.any(eps_schedule <= 0) or np.any(eps_schedule >= 0.5):
        raise DomainError("band widths must lie in (0, 1/2)")
    diag = _check_assumptions(H, body, samples, seed, tol)
    diag["band_widths"] = len(eps_schedule)
    if path_grid is not None:
        diag["path"] = [[t, None if x is None else x.tolist()] for t, x in trace_path(H, body.dim, path_grid)]
    H1 = lambda x: np.asarray(H(1.0, x), dtype=float)  # noqa: E731
    warm = np.zeros(body.dim)
    last_band = None
    for eps in eps_schedule:
        Fn = homotopy_map(H, body, float(eps))
        res = solve_fixed_point(Fn, warm)
        u = retract_one(body, res.z)
        if float(np.max(np.abs(u - Fn(u)))) > tol:
            continue
        warm = u
        g = gauge_one(body, u)
        if g < 1.0 - eps:
            pol = solve_fixed_point(H1, u)
            x = pol.z
            gap = float(np.max(np.abs(x - H1(x))))
            if gap <= tol and body.contains(x[None, :])[0]:
                gx = gauge_one(body, x)
                diag["band_width"] = float(eps)
                return Certificate("FixedPoint", p, x, H1(x), None, gap, None, gx, 1.0, tol,
                                   IDENTITY_TOL, {"residual": Check(True, gap, tol)},
                                   "fixed_point_at_t1", "homotopy_continuation", diag)
        else:
            last_band = (float(eps), u, g)
    if last_band is not None:
        eps, u, g = last_band
        t0 = min(max((1.0 - g) / eps, 0.0), 1.0)
        v0 = u * g ** (-1.0 / p)
        d = body.dim

        def eqs(w):
            v, t = w[:d], w[d]
            return np.concatenate([v - np.asarray(H(float(t), v)), [gauge_one(body, v) - 1.0]])

        sol = optimize.root(eqs, np.concatenate([v0, [t0]]), method="hybr", options={"xtol": 1e-14})
        v, t = sol.x[:d], float(sol.x[d])
        Hv = np.asarray(H(t, v), dtype=float)
        gap = float(np.max(np.abs(v - Hv)))
        gv = gauge_one(body, v)
        if gap <= tol and abs(gv - 1.0) <= tol and 0.0 < t < 1.0:
            diag["band_width"] = eps
            checks = {"equation": Check(True, gap, tol),
                      "on_boundary": Check(True, abs(gv - 1.0), tol)}
            return Certificate("BoundarySolution", p, v, Hv, None, gap, None, gv, t, tol,
                               IDENTITY_TOL, checks, "boundary_solution_for_intermediate_t",
                               "homotopy_continuation", diag)
    diag["reason"] = "no band width produced a solution that polished within tolerance"
    return Certificate("Inconclusive", p, tol=tol, conclusion="none",
                       basis="homotopy_continuation", diagnostics=diag)
