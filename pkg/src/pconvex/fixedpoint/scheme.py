"""The approximating scheme ``x_n = r(z_n)`` with ``z_n = lam_n F(r(z_n))``
and the certificates built from its limit."""

from __future__ import annotations

import numpy as np

from pconvex.errors import DomainError, PreconditionError
from pconvex.fixedpoint.certificates import (
    Certificate,
    Check,
    IterTrace,
    StepRecord,
    best_approx_gap,
)
from pconvex.fixedpoint.maps import MapSpec
from pconvex.fixedpoint.solvers import solve_fixed_point
from pconvex.gauge import PBody
from pconvex.retract import p_distance, retract_many

SOLVER_TOL = 1e-8
IDENTITY_TOL = 1e-6


def default_schedule(n: int = 30) -> np.ndarray:
    """``lam_n = 1 - 2**-n`` for ``n = 1..n``."""
    return 1.0 - 2.0 ** -np.arange(1, n + 1, dtype=float)


def validate_schedule(schedule) -> np.ndarray:
    lam = np.asarray(schedule, dtype=float).reshape(-1)
    if lam.size == 0:
        raise DomainError("schedule is empty")
    if np.any(lam <= 0) or np.any(lam >= 1):
        raise DomainError("schedule values must lie in (0, 1)")
    if np.any(np.diff(lam) <= 0):
        raise DomainError("schedule must be strictly increasing")
    return lam


def retract_one(body: PBody, x) -> np.ndarray:
    return retract_many(body, np.asarray(x, dtype=float)[None, :])[0][0]


def gauge_one(body: PBody, x) -> float:
    return float(body.gauge(np.asarray(x, dtype=float)[None, :])[0])


def approximate_fixed_point(F: MapSpec, body: PBody, schedule=None, gamma: float = 0.5,
                            max_iter: int = 10_000) -> IterTrace:
    """Solve ``z = lam_n F(r(z))`` along the schedule and record residuals.

    A step is *interior* when its solution ``z_n`` already lies in the body;
    there ``x_n = z_n`` and the residual obeys
    ``P(F(x_n) - x_n) <= ((1 - lam_n)/lam_n)**p``.  Steps whose inner solve
    fails are kept in the trace with ``converged=False``.
    """
    lam_seq = validate_schedule(default_schedule() if schedule is None else schedule)
    p = body.p
    blowup = 10.0 * body.bound_radius
    warm = np.zeros(body.dim)
    steps = []
    for n, lam in enumerate(lam_seq, start=1):
        def G(z, lam=lam):
            return lam * F(retract_one(body, z))

        res = solve_fixed_point(G, warm, gamma=gamma, max_iter=max_iter,
                                size=lambda z: float(np.linalg.norm(z)), blowup=blowup)
        z = res.z
        x = retract_one(body, z)
        residual = gauge_one(body, F(x) - x)
        interior = bool(body.contains(z[None, :])[0])
        steps.append(StepRecord(
            n=n, lam=float(lam), z=z.copy(), x=x, residual=residual,
            bound=float(((1.0 - lam) / lam) ** p),
            case="interior" if interior else "boundary",
            converged=res.converged, iterations=res.iterations, method=res.method,
        ))
        if res.converged:
            warm = z
    return IterTrace(p, tuple(steps), F.name)


def polish_limit(F: MapSpec, body: PBody, x0, gamma: float = 0.5, max_iter: int = 10_000):
    """Refine a fixed point of ``x -> r(F(x))`` starting near ``x0``."""
    T = lambda x: retract_one(body, F(x))  # noqa: E731
    res = solve_fixed_point(T, x0, gamma=gamma, max_iter=max_iter)
    return retract_one(body, res.z), res


def certify_point(F: MapSpec, body: PBody, x, tol: float = SOLVER_TOL,
                  identity_tol: float = IDENTITY_TOL, conclusion: str = "fixed_point",
                  verify_inward: bool = True, seed: int = 0,
                  trace: IterTrace | None = None, diagnostics=None) -> Certificate:
    """Classify a limit point of the scheme as fixed point or best approximation."""
    p = body.p
    x = np.asarray(x, dtype=float)
    Fx = F(x)
    resid_norm = float(np.max(np.abs(Fx - x)))
    resid = gauge_one(body, Fx - x)
    gF = gauge_one(body, Fx)
    gx = gauge_one(body, x)
    basis = f"approximating_scheme[{F.basis}:{F.asserted_class}]"
    diagnostics = dict(diagnostics or {})
    if resid_norm <= tol:
        return Certificate(
            "FixedPoint", p, x, Fx, resid, resid_norm, gF, gx, None, tol, identity_tol,
            {"residual": Check(True, resid_norm, tol)}, conclusion, basis, diagnostics, trace)
    if gF > 1.0:
        eq_gap = float(np.max(np.abs(x - retract_one(body, Fx))))
        checks = {
            "identity": Check(best_approx_gap(resid, gF, p) <= identity_tol,
                              best_approx_gap(resid, gF, p), identity_tol),
            "on_boundary": Check(abs(gx - 1.0) <= tol, abs(gx - 1.0), tol),
            "retraction_equation": Check(eq_gap <= tol, eq_gap, tol),
        }
        if verify_inward:
            # no sampled point of the body may come closer to F(x0) than x0 does;
            # for p < 1 the inward set of x0 is {x0} together with the body
            est = p_distance(body, Fx, body, budget=2000, seed=seed)
            beat = max(0.0, resid - est.value)
            checks["inward_distance"] = Check(beat <= identity_tol, beat, identity_tol)
            diagnostics["inward_distance_estimate"] = est.value
        return Certificate(
            "BestApproximation", p, x, Fx, resid, resid_norm, gF, gx, None, tol, identity_tol,
            checks, "best_approximation_on_boundary", basis, diagnostics, trace)
    diagnostics["reason"] = "limit point is neither a fixed point nor a boundary best approximation"
    return Certificate("Inconclusive", p, x, Fx, resid, resid_norm, gF, gx, None, tol,
                       identity_tol, {}, "none", basis, diagnostics, trace)


def best_approx_certificate(F: MapSpec, body: PBody, tol: float = SOLVER_TOL,
                            identity_tol: float = IDENTITY_TOL, schedule=None,
                            verify_inward: bool = True, seed: int = 0,
                            conclusion: str = "fixed_point") -> Certificate:
    """Run the scheme, polish its limit, and certify which alternative holds.

    Either ``F`` has a fixed point, or some boundary point ``x0 = r(F(x0))``
    satisfies ``P(F(x0) - x0) = (P(F(x0))**(1/p) - 1)**p`` and no point of
    the inward set is closer to ``F(x0)``.
    """
    trace = approximate_fixed_point(F, body, schedule)
    ok = [s for s in trace.steps if s.converged]
    if not ok:
        return Certificate("Inconclusive", body.p, tol=tol, identity_tol=identity_tol,
                           conclusion="none", diagnostics={"reason": "every inner solve failed"},
                           trace=trace)
    x, res = polish_limit(F, body, ok[-1].x)
    diag = {"polish_method": res.method, "polish_converged": res.converged,
            "failed_steps": len(trace.failed_steps)}
    return certify_point(F, body, x, tol, identity_tol, conclusion, verify_inward, seed, trace, diag)


def rothe_fixed_point(F: MapSpec, body: PBody, samples: int = 1000, seed: int = 0,
                      tol: float = SOLVER_TOL, gauge_tol: float = 1e-9) -> Certificate:
    """Fixed point for maps sending the boundary into the closed body.

    The boundary invariance is checked on seeded boundary samples first;
    a violation raises :class:`PreconditionError` carrying the witness.
    """
    rng = np.random.default_rng(seed)
    X = body.boundary_points(rng, samples)
    FX = F(X)
    g = body.gauge(FX)
    bad = np.flatnonzero(g > 1.0 + gauge_tol)
    if bad.size:
        k = int(bad[0])
        raise PreconditionError(
            "F maps a boundary point outside the closed body",
            witness={"x": X[k].tolist(), "F(x)": FX[k].tolist(), "gauge_F": float(g[k])},
        )
    return best_approx_certificate(F, body, tol, conclusion="fixed_point_by_boundary_invariance",
                                   verify_inward=False, seed=seed)
