"""Inner solvers for ``z = G(z)``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SolveResult:
    z: np.ndarray
    converged: bool
    iterations: int
    method: str
    diverged: bool = False


def damped_picard(G: Callable[[np.ndarray], np.ndarray], z0, gamma: float = 0.5,
                  max_iter: int = 10_000, step_tol: float = 0.0,
                  size: Callable[[np.ndarray], float] | None = None,
                  blowup: float = np.inf) -> SolveResult:
    """Iterate ``z <- (1 - gamma) z + gamma G(z)``.

    Stops when the step is below ``step_tol`` or within a few ulps of ``z``.
    ``size`` measures iterates for the divergence test against ``blowup``.
    Gives up early when the observed contraction rate cannot reach that
    threshold within the remaining budget, so a caller can switch methods.
    """
    z = np.asarray(z0, dtype=float).copy()
    window = 50
    ref_step = None
    for k in range(1, max_iter + 1):
        z_new = (1.0 - gamma) * z + gamma * G(z)
        if not np.all(np.isfinite(z_new)):
            return SolveResult(z, False, k, "picard", diverged=True)
        if size is not None and size(z_new) > blowup:
            return SolveResult(z_new, False, k, "picard", diverged=True)
        step = float(np.max(np.abs(z_new - z)))
        z = z_new
        target = max(step_tol, 8 * EPS * (1.0 + float(np.max(np.abs(z)))))
        if step <= target:
            return SolveResult(z, True, k, "picard")
        if k % window == 0:
            if ref_step is not None and 0.0 < step < ref_step:
                rate = (step / ref_step) ** (1.0 / window)
                needed = np.log(target / step) / np.log(rate)
                if needed > max_iter - k:
                    return SolveResult(z, False, k, "picard")
            ref_step = step
    return SolveResult(z, False, max_iter, "picard")


def root_polish(G: Callable[[np.ndarray], np.ndarray], z0) -> SolveResult:
    """Solve ``z - G(z) = 0`` with a quasi-Newton root finder."""
    z0 = np.asarray(z0, dtype=float)
    try:
        sol = optimize.root(lambda z: z - G(z), z0, method="hybr", options={"xtol": 1e-15})
    except (ValueError, FloatingPointError):
        return SolveResult(z0, False, 0, "root")
    z = np.asarray(sol.x, dtype=float)
    ok = bool(np.all(np.isfinite(z)))
    return SolveResult(z if ok else z0, ok and bool(sol.success), int(sol.nfev), "root")


def solve_fixed_point(G, z0, gamma: float = 0.5, max_iter: int = 10_000,
                      size=None, blowup: float = np.inf) -> SolveResult:
    """Damped Picard with a root-finder rescue; keeps whichever is better."""
    res = damped_picard(G, z0, gamma, max_iter, size=size, blowup=blowup)
    if res.converged:
        return res
    start = z0 if res.diverged else res.z
    alt = root_polish(G, start)
    err_p = float(np.max(np.abs(res.z - G(res.z)))) if not res.diverged else np.inf
    err_r = float(np.max(np.abs(alt.z - G(alt.z))))
    if alt.converged and err_r <= err_p:
        return alt
    return res
