"""Sampled boundary conditions that rule out invariant directions.

Each condition is a pointwise inequality between gauge values on the
boundary of the body.  When one holds on every sample, the scheme in
:mod:`pconvex.fixedpoint.scheme` is expected to find a fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pconvex.errors import DomainError, PreconditionError
from pconvex.fixedpoint.alternatives import birkhoff_kellogg_scan
from pconvex.fixedpoint.certificates import Certificate
from pconvex.fixedpoint.maps import MapSpec
from pconvex.fixedpoint.scheme import SOLVER_TOL, best_approx_certificate
from pconvex.gauge import PBody
from pconvex.retract import retract_many

HOLD_TOL = 1e-9

# name -> (description, needs alpha/beta)
CONDITIONS = {
    "rothe": ("P(F x) <= P(x)", False),
    "petryshyn": ("P(F x) <= P(F x - x)", False),
    "altman": ("P(F x)^(2/p) <= P(F x - x)^(2/p) + P(x)^(2/p)", False),
    "norm_i": ("P(F x) <= P(x)", False),
    "norm_ii": ("P(F x) <= P(F x - x)", False),
    "norm_iii": ("P(F x + x) <= P(F x)", False),
    "norm_iv": ("P(F x + x) <= P(x)", False),
    "norm_v": ("P(F x + x) <= P(F x - x)", False),
    "norm_vi": ("P(F x) P(F x + x) <= P(x)^2", False),
    "norm_vii": ("P(F x) P(F x + x) <= P(F x - x) P(x)", False),
    "power_a": ("P(F x - x)^(a/p) >= P(F x)^((a+b)/p) P(x)^(-b/p) - P(x)^(a/p)", True),
    "power_b": ("P(F x + x)^((a+b)/p) <= P(F x)^(a/p) P(x)^(b/p) + P(x)^((a+b)/p)", True),
    "power_c": ("P(F x - x)^(a/p) P(x)^(b/p) >= P(F x)^(a/p) P(F x + x)^(b/p) - P(x)^((a+b)/p)", True),
    "power_d": ("P(F x + x)^((a+b)/p) <= P(F x - x)^(a/p) P(x)^(b/p) + P(F x)^(b/p) P(x)^(a/p)", True),
}

SEMINORM_CONDITIONS = ("norm_i", "norm_ii", "norm_iii", "norm_iv", "norm_v", "norm_vi", "norm_vii")
CLASSICAL_CONDITIONS = ("rothe", "petryshyn", "altman")
POWER_CONDITIONS = ("power_a", "power_b", "power_c", "power_d")


def _sides(name, Px, PF, PFm, PFp, p, a, b):
    """Return (lhs, rhs) arrays with the condition meaning lhs <= rhs."""
    if name in ("rothe", "norm_i"):
        return PF, Px
    if name in ("petryshyn", "norm_ii"):
        return PF, PFm
    if name == "altman":
        e = 2.0 / p
        return PF**e, PFm**e + Px**e
    if name == "norm_iii":
        return PFp, PF
    if name == "norm_iv":
        return PFp, Px
    if name == "norm_v":
        return PFp, PFm
    if name == "norm_vi":
        return PF * PFp, Px**2
    if name == "norm_vii":
        return PF * PFp, PFm * Px
    if name == "power_a":
        return PF ** ((a + b) / p) * Px ** (-b / p) - Px ** (a / p), PFm ** (a / p)
    if name == "power_b":
        return PFp ** ((a + b) / p), PF ** (a / p) * Px ** (b / p) + Px ** ((a + b) / p)
    if name == "power_c":
        return (PF ** (a / p) * PFp ** (b / p) - Px ** ((a + b) / p),
                PFm ** (a / p) * Px ** (b / p))
    if name == "power_d":
        return (PFp ** ((a + b) / p),
                PFm ** (a / p) * Px ** (b / p) + PF ** (b / p) * Px ** (a / p))
    raise DomainError(f"unknown boundary condition {name!r}")


@dataclass(frozen=True)
class ConditionVerdict:
    name: str
    description: str
    holds: bool
    samples: int
    max_excess: float
    witness: dict | None = None
    conclusion: str | None = None

    def as_dict(self):
        return {"name": self.name, "description": self.description, "holds": self.holds,
                "samples": self.samples, "max_excess": self.max_excess,
                "witness": self.witness, "conclusion": self.conclusion}


@dataclass(frozen=True)
class ConditionReport:
    verdicts: tuple[ConditionVerdict, ...]
    alpha: float | None = None
    beta: float | None = None

    def __getitem__(self, name) -> ConditionVerdict:
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    @property
    def any_holds(self) -> bool:
        return any(v.holds for v in self.verdicts)

    def as_dict(self):
        return {"alpha": self.alpha, "beta": self.beta,
                "verdicts": [v.as_dict() for v in self.verdicts]}


def check_boundary_conditions(F: MapSpec, body: PBody, conditions=None, alpha: float | None = None,
                              beta: float = 0.0, samples: int = 1000, seed: int = 0,
                              tol: float = HOLD_TOL) -> ConditionReport:
    """Evaluate the requested conditions on gauge-normalised boundary samples.

    A condition holds when ``lhs <= rhs + tol (1 + |rhs|)`` on every sample.
    """
    names = list(CONDITIONS) if conditions is None else list(conditions)
    for n in names:
        if n not in CONDITIONS:
            raise DomainError(f"unknown boundary condition {n!r}")
    if any(CONDITIONS[n][1] for n in names):
        if alpha is None or not alpha > 1.0:
            raise DomainError(f"alpha must be > 1, got {alpha!r}")
        if beta is None or beta < 0.0:
            raise DomainError(f"beta must be >= 0, got {beta!r}")
    p = body.p
    rng = np.random.default_rng(seed)
    X = body.boundary_points(rng, samples)
    FX = F(X)
    Px, PF = body.gauge(X), body.gauge(FX)
    PFm, PFp = body.gauge(FX - X), body.gauge(FX + X)
    out = []
    for name in names:
        desc, param = CONDITIONS[name]
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            lhs, rhs = _sides(name, Px, PF, PFm, PFp, p, alpha, beta)
            excess = lhs - rhs - tol * (1.0 + np.abs(rhs))
        excess = np.where(np.isnan(excess), np.inf, excess)
        bad = np.flatnonzero(excess > 0)
        witness = None
        if bad.size:
            k = int(bad[0])
            witness = {"x": X[k].tolist(), "F(x)": FX[k].tolist(),
                       "lhs": float(lhs[k]), "rhs": float(rhs[k])}
        holds = bad.size == 0
        out.append(ConditionVerdict(
            name, desc, holds, samples, float(np.max(excess)), witness,
            f"fixed_point_expected[{name}]" if holds else None))
    return ConditionReport(tuple(out), alpha, beta)


def decreasing_gap(t, alpha, beta):
    """``(t-1)**a - t**(a+b) + 1``, strictly decreasing on ``[1, inf)``."""
    t = np.asarray(t, dtype=float)
    return (t - 1.0) ** alpha - t ** (alpha + beta) + 1.0


def increasing_gap(t, alpha, beta):
    """``(t+1)**(a+b) - t**a - 1``, strictly increasing on ``[1, inf)``."""
    t = np.asarray(t, dtype=float)
    return (t + 1.0) ** (alpha + beta) - t**alpha - 1.0


NONSELF_CONDITIONS = {
    "nonself_i": "some z in the closed inward set beats x: P(F x - z) < P(F x - x)",
    "nonself_ii": "lam x + (1 - lam) F x lies in the closed inward set for some |lam| < 1",
    "nonself_iii": "F x lies in the closed inward set",
    "nonself_iv": "F x != lam x for every lam > 1",
    "nonself_v": "F x lies in the closed body",
    "nonself_vi": "P(F x - x) != (P(F x)^(1/p) - 1)^p",
}


def _in_inward_closure(body: PBody, X, Z, tol):
    """Vectorised membership of z in the closed inward set of x.

    The body itself always sits inside the inward set of its boundary points,
    and for p < 1 the inward set is exactly ``{x}`` together with the body.
    For p = 1 the ray ``x + r (z - x)`` is also tested at a few step sizes.
    """
    ok = body.contains(Z) | (np.max(np.abs(Z - X), axis=1) <= tol)
    if body.p == 1.0:
        for r in (2.0, 4.0, 16.0, 256.0):
            ok |= body.contains(X + (Z - X) / r)
    return ok


def _nonself_holds(name, F: MapSpec, body: PBody, X, FX, tol):
    p = body.p
    P = body.gauge
    if name == "nonself_i":
        PFm = P(FX - X)
        best = np.full(len(X), np.inf)
        cands = [retract_many(body, FX)[0], np.zeros_like(X), 0.5 * X]
        for Z in cands:
            best = np.minimum(best, P(FX - Z))
        return best < PFm, {"best_candidate_gap": best}
    if name == "nonself_ii":
        ok = np.zeros(len(X), dtype=bool)
        for lam in np.linspace(-0.99, 0.99, 199):
            ok |= _in_inward_closure(body, X, lam * X + (1.0 - lam) * FX, tol)
        return ok, {}
    if name == "nonself_iii":
        return _in_inward_closure(body, X, FX, tol), {}
    if name == "nonself_iv":
        xx = np.einsum("ij,ij->i", X, X)
        lam = np.einsum("ij,ij->i", FX, X) / xx
        off = np.linalg.norm(FX - lam[:, None] * X, axis=1)
        ray = (lam > 1.0) & (off <= 1e-9 * (1.0 + np.linalg.norm(FX, axis=1)))
        return ~ray, {"lambda": lam}
    if name == "nonself_v":
        return body.contains(FX), {}
    if name == "nonself_vi":
        PF, PFm = P(FX), P(FX - X)
        base = PF ** (1.0 / p) - 1.0
        with np.errstate(invalid="ignore"):
            target = np.where(base >= 0, np.abs(base) ** p, -np.inf)
        return np.abs(PFm - target) > tol * (1.0 + PFm), {}
    raise DomainError(f"unknown non-self condition {name!r}")


def nonself_condition_dispatch(F: MapSpec, body: PBody, condition: str, samples: int = 1000,
                               seed: int = 0, tol: float = SOLVER_TOL,
                               hold_tol: float = HOLD_TOL) -> Certificate:
    """Verify one sampled boundary predicate, then produce the fixed point.

    Raises :class:`PreconditionError` with a replayable witness when the
    predicate fails on some sample.
    """
    if condition not in NONSELF_CONDITIONS:
        raise DomainError(f"unknown non-self condition {condition!r}")
    rng = np.random.default_rng(seed)
    X = body.boundary_points(rng, samples)
    # isolated invariant directions are where these predicates tend to fail,
    # and random sampling almost never hits them
    scan = birkhoff_kellogg_scan(F, body, seed=seed, cross_check=False)
    if scan.directions:
        X = np.concatenate([X, np.stack([c.point for c in scan.directions])])
    FX = F(X)
    fixed = np.max(np.abs(FX - X), axis=1) <= tol
    ok, extra = _nonself_holds(condition, F, body, X, FX, hold_tol)
    ok = ok | fixed  # the predicates are only imposed where x != F(x)
    bad = np.flatnonzero(~ok)
    if bad.size:
        k = int(bad[0])
        raise PreconditionError(
            f"condition {condition} fails at a boundary sample",
            witness={"x": X[k].tolist(), "F(x)": FX[k].tolist()},
        )
    # standing assumption relating the two gauges on the boundary
    p = body.p
    PF, PFm = body.gauge(FX), body.gauge(FX - X)
    standing = PF ** (1.0 / p) - 1.0 <= PFm ** (1.0 / p) + hold_tol
    cert = best_approx_certificate(F, body, tol, conclusion=f"fixed_point_by_{condition}",
                                   verify_inward=False, seed=seed)
    cert.diagnostics["condition"] = condition
    cert.diagnostics["condition_samples"] = int(samples)
    cert.diagnostics["standing_gauge_assumption_holds"] = bool(np.all(standing))
    return cert
