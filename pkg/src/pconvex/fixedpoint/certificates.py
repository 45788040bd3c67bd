"""Certificates and traces produced by the fixed-point procedures.

Each certificate stores the raw values its checks were computed from, so a
reader can recompute every gap with plain arithmetic (see
:func:`revalidate_certificate`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

KINDS = ("FixedPoint", "BestApproximation", "InvariantDirection", "BoundarySolution", "Inconclusive")


@dataclass(frozen=True)
class Check:
    passed: bool
    gap: float
    tol: float

    def as_dict(self):
        return {"passed": self.passed, "gap": self.gap, "tol": self.tol}


@dataclass(frozen=True)
class StepRecord:
    n: int
    lam: float
    z: np.ndarray
    x: np.ndarray
    residual: float
    bound: float
    case: str
    converged: bool
    iterations: int
    method: str

    def as_row(self) -> dict:
        row = {"n": self.n, "lambda": self.lam, "residual": self.residual,
               "bound": self.bound, "case": self.case, "converged": self.converged,
               "iterations": self.iterations, "method": self.method}
        for i, v in enumerate(self.x):
            row[f"x{i}"] = float(v)
        return row


@dataclass(frozen=True)
class IterTrace:
    p: float
    steps: tuple[StepRecord, ...]
    map_name: str = ""

    @property
    def interior_steps(self) -> tuple[StepRecord, ...]:
        return tuple(s for s in self.steps if s.case == "interior" and s.converged)

    @property
    def failed_steps(self) -> tuple[StepRecord, ...]:
        return tuple(s for s in self.steps if not s.converged)

    def bound_respected(self, slack: float) -> bool:
        return all(s.residual <= s.bound + slack for s in self.interior_steps)

    @property
    def last(self) -> StepRecord:
        return self.steps[-1]

    def rows(self) -> list[dict]:
        return [s.as_row() for s in self.steps]


@dataclass(frozen=True)
class Certificate:
    """Outcome of a fixed-point procedure.

    ``residual`` is the gauge residual ``P(F(x0) - x0)``; ``residual_norm``
    is its max-norm counterpart.  ``gauge_F`` is ``P(F(x0))``, ``gauge_x``
    is ``P(x0)`` and ``lam`` is the eigen-like factor where relevant.
    """

    kind: str
    p: float
    point: np.ndarray | None = None
    image: np.ndarray | None = None
    residual: float | None = None
    residual_norm: float | None = None
    gauge_F: float | None = None
    gauge_x: float | None = None
    lam: float | None = None
    tol: float = 1e-8
    identity_tol: float = 1e-6
    checks: dict = field(default_factory=dict)
    conclusion: str = ""
    basis: str = ""
    diagnostics: dict = field(default_factory=dict)
    trace: IterTrace | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown certificate kind {self.kind!r}")

    @property
    def ok(self) -> bool:
        return self.kind != "Inconclusive" and all(c.passed for c in self.checks.values())

    def as_dict(self) -> dict:
        def vec(v):
            return None if v is None else [float(t) for t in v]

        return {
            "kind": self.kind,
            "p": self.p,
            "point": vec(self.point),
            "image": vec(self.image),
            "residual": self.residual,
            "residual_norm": self.residual_norm,
            "gauge_F": self.gauge_F,
            "gauge_x": self.gauge_x,
            "lambda": self.lam,
            "tol": self.tol,
            "identity_tol": self.identity_tol,
            "checks": {k: v.as_dict() for k, v in sorted(self.checks.items())},
            "conclusion": self.conclusion,
            "basis": self.basis,
            "diagnostics": self.diagnostics,
        }


def best_approx_gap(residual: float, gauge_F: float, p: float) -> float:
    """``|residual - (gauge_F**(1/p) - 1)**p|`` for points outside the body."""
    base = gauge_F ** (1.0 / p) - 1.0
    if base < 0:
        return float("inf")
    return abs(residual - base**p)


def direction_gap(lam: float, gauge_F: float, p: float) -> float:
    return abs(lam - gauge_F ** (1.0 / p))


def eigen_gap(lam: float, point, image) -> float:
    return float(np.max(np.abs(lam * np.asarray(point) - np.asarray(image))))


def recompute_gaps(d: dict) -> dict[str, float]:
    """Recompute identity gaps from a serialized certificate."""
    p = d["p"]
    kind = d["kind"]
    gaps = {}
    if kind == "FixedPoint":
        gaps["residual"] = d["residual_norm"]
    elif kind == "BestApproximation":
        gaps["identity"] = best_approx_gap(d["residual"], d["gauge_F"], p)
        gaps["on_boundary"] = abs(d["gauge_x"] - 1.0)
    elif kind == "InvariantDirection":
        gaps["lambda_consistency"] = direction_gap(d["lambda"], d["gauge_F"], p)
        gaps["eigen_equation"] = eigen_gap(d["lambda"], d["point"], d["image"])
        gaps["on_boundary"] = abs(d["gauge_x"] - 1.0)
    elif kind == "BoundarySolution":
        gaps["on_boundary"] = abs(d["gauge_x"] - 1.0)
        gaps["equation"] = float(np.max(np.abs(np.asarray(d["point"]) - np.asarray(d["image"]))))
    return gaps


def revalidate_certificate(cert, atol: float = 1e-12) -> bool:
    """True when stored gaps match gaps recomputed from stored values."""
    d = cert.as_dict() if isinstance(cert, Certificate) else cert
    for name, gap in recompute_gaps(d).items():
        stored = d["checks"].get(name)
        if stored is None:
            return False
        if not (abs(stored["gap"] - gap) <= atol or (np.isinf(gap) and np.isinf(stored["gap"]))):
            return False
    return True
