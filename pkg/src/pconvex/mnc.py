"""Measures of noncompactness for sets in the sequence space l_p.

The metric is ``d_p(x, y) = sum |x_i - y_i|**p``.  Measures are only
computed for families where both an explicit net (upper bound) and an
explicit separated family (lower bound) are available:

* ``tail_box``: ``{x : |x_i| <= a_i}`` with ``sum a_i**p`` finite (compact),
* ``scaled_ball``: ``{x : d_p(x, 0) <= kappa**p}``,
* ``weighted_ball``: the image of a scaled ball under ``diag(c)``.

Results are brackets ``[lower, upper]`` at a truncation level N; a scalar
value is attached only once the gap is within tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special

from pconvex.errors import DivergentSequenceError, DomainError, ValidationError
from pconvex.pcore import as_p
from pconvex.registry import Registry


@dataclass(frozen=True)
class Generator:
    """A closed-form real sequence ``a_1, a_2, ...``.

    ``sup_from(N)`` and ``inf_from(N)`` are the sup and inf of ``|a_i|``
    over ``i > N``; ``power_tail(N, p)`` is ``sum_{i>N} |a_i|**p``.
    """

    kind: str
    value: float = 0.0

    def term(self, i) -> np.ndarray:
        i = np.asarray(i, dtype=float)
        if np.any(i < 1):
            raise DomainError("sequence indices start at 1")
        if self.kind == "geometric":
            return self.value**i
        if self.kind == "power":
            return i ** (-self.value)
        if self.kind == "constant":
            return np.full_like(i, self.value)
        if self.kind == "mobius":
            return i / (i + 1.0)
        raise ValidationError(f"unknown generator kind {self.kind!r}")

    @property
    def bounded(self) -> bool:
        if self.kind == "geometric":
            return abs(self.value) <= 1.0
        if self.kind == "power":
            return self.value >= 0.0
        return True

    def sup_from(self, N: int) -> float:
        if not self.bounded:
            return float("inf")
        if self.kind == "geometric":
            return abs(self.value) ** (N + 1)
        if self.kind == "power":
            return float((N + 1) ** (-self.value))
        if self.kind == "constant":
            return abs(self.value)
        return 1.0  # mobius: approached, never reached

    def inf_from(self, N: int) -> float:
        if self.kind == "geometric":
            r = abs(self.value)
            return 0.0 if r < 1.0 else r ** (N + 1)
        if self.kind == "power":
            return 0.0 if self.value > 0 else float((N + 1) ** (-self.value))
        if self.kind == "constant":
            return abs(self.value)
        return (N + 1.0) / (N + 2.0)

    @property
    def limit_abs(self) -> float:
        """``lim |a_i|``; every built-in generator converges in absolute value."""
        if self.kind == "geometric":
            r = abs(self.value)
            return 0.0 if r < 1 else (1.0 if r == 1 else float("inf"))
        if self.kind == "power":
            return 0.0 if self.value > 0 else (1.0 if self.value == 0 else float("inf"))
        if self.kind == "constant":
            return abs(self.value)
        return 1.0

    @property
    def sup_attained(self) -> bool:
        """Whether ``sup_i |a_i|`` is attained at some finite index."""
        return self.kind != "mobius"

    @property
    def sup(self) -> float:
        return self.sup_from(0)

    def power_tail(self, N: int, p: float) -> float:
        if self.kind == "geometric":
            q = abs(self.value) ** p
            return q ** (N + 1) / (1.0 - q) if q < 1.0 else float("inf")
        if self.kind == "power":
            s = self.value * p
            return float(special.zeta(s, N + 1)) if s > 1.0 else float("inf")
        if self.kind == "constant":
            return 0.0 if self.value == 0 else float("inf")
        return float("inf")

    def describe(self) -> str:
        if self.kind == "mobius":
            return "mobius"
        return f"{self.kind}({self.value!r})"


GENERATORS = Registry("generator")


@GENERATORS.register("geometric", "geometric(ratio)", "a_i = ratio^i")
def geometric(ratio) -> Generator:
    return Generator("geometric", float(ratio))


@GENERATORS.register("power", "power(exponent)", "a_i = i^(-exponent)")
def power(exponent) -> Generator:
    return Generator("power", float(exponent))


@GENERATORS.register("constant", "constant(value)", "a_i = value")
def constant(value) -> Generator:
    return Generator("constant", float(value))


@GENERATORS.register("mobius", "mobius()", "a_i = i/(i+1)")
def mobius() -> Generator:
    return Generator("mobius")


@dataclass(frozen=True)
class SeqSet:
    kind: str
    p: float
    edges: Generator | None = None
    kappa: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "p", as_p(self.p))
        if self.kind not in ("tail_box", "scaled_ball", "weighted_ball"):
            raise ValidationError(f"unsupported set kind {self.kind!r}")
        if self.kind != "tail_box" and not (np.isfinite(self.kappa) and self.kappa > 0):
            raise ValidationError("kappa must be positive")
        if self.kind != "scaled_ball" and self.edges is None:
            raise ValidationError(f"{self.kind} needs an edge/coefficient generator")

    def scaled(self, factor: float) -> "SeqSet":
        factor = float(factor)
        if factor <= 0:
            raise DomainError("scale factor must be positive")
        if self.kind == "tail_box":
            raise ValidationError("scale a tail box through its edge generator instead")
        return replace(self, kappa=self.kappa * factor)

    def union(self, other: "SeqSet") -> "SeqSet":
        """Union of two nested balls (scaled balls are totally ordered)."""
        if self.kind != "scaled_ball" or other.kind != "scaled_ball" or self.p != other.p:
            raise ValidationError("union is only closed-form for scaled balls with equal p")
        return self if self.kappa >= other.kappa else other

    def p_convex_hull(self) -> "SeqSet":
        # balls and symmetric boxes are already p-convex
        return self

    def _tail_sup(self, N: int) -> float:
        if self.kind == "tail_box":
            t = self.edges.power_tail(N, self.p)
            if not np.isfinite(t):
                raise DivergentSequenceError("set unbounded in d_p metric")
            return t
        c = 1.0 if self.kind == "scaled_ball" else self.edges.sup_from(N)
        if not np.isfinite(c):
            raise DivergentSequenceError("set unbounded in d_p metric")
        return self.kappa**self.p * c**self.p

    def _tail_inf(self, N: int) -> float:
        if self.kind == "tail_box":
            return 0.0
        c = 1.0 if self.kind == "scaled_ball" else self.edges.inf_from(N)
        return self.kappa**self.p * c**self.p

    def _limit(self) -> float:
        if self.kind == "tail_box":
            return 0.0
        c = 1.0 if self.kind == "scaled_ball" else self.edges.limit_abs
        return self.kappa**self.p * c**self.p


def tail_box(edges: Generator, p) -> SeqSet:
    return SeqSet("tail_box", p, edges=edges)


def scaled_ball(kappa: float, p) -> SeqSet:
    return SeqSet("scaled_ball", p, kappa=float(kappa))


def weighted_ball(coefficients: Generator, p, kappa: float = 1.0) -> SeqSet:
    return SeqSet("weighted_ball", p, edges=coefficients, kappa=float(kappa))


@dataclass(frozen=True)
class MncBracket:
    measure: str
    lower: float
    upper: float
    truncation_level: int
    limit: float | None = None
    value: float | None = None

    @property
    def gap(self) -> float:
        return self.upper - self.lower

    def as_dict(self):
        return {"measure": self.measure, "lower": self.lower, "upper": self.upper,
                "truncation_level": self.truncation_level, "limit": self.limit,
                "value": self.value}


def _bracket(measure, lower, upper, N, limit, tol):
    if lower > upper:
        raise ValidationError(f"inconsistent bracket [{lower}, {upper}]")
    value = 0.5 * (lower + upper) if upper - lower <= tol else None
    return MncBracket(measure, float(lower), float(upper), int(N), limit, value)


def _check_args(truncation, tol):
    if int(truncation) < 1:
        raise DomainError("truncation must be >= 1")
    if not tol > 0:
        raise DomainError("tol must be positive")


def hausdorff_mnc(s: SeqSet, truncation: int = 1000, tol: float = 1e-9) -> MncBracket:
    """Bracket for the Hausdorff measure (radius of finite nets).

    Upper: a fine net on the first N coordinates with zero tail, whose radius
    is the largest d_p-size of the tail part.  Lower: the vectors
    ``c_i e_i`` for ``i > N``; any finite net is eventually at distance at
    least ``|c_i|**p`` from them.
    """
    _check_args(truncation, tol)
    N = int(truncation)
    upper = s._tail_sup(N)
    lower = s._tail_inf(N)
    return _bracket("hausdorff", lower, upper, N, s._limit(), tol)


def kuratowski_mnc(s: SeqSet, truncation: int = 1000, tol: float = 1e-9) -> MncBracket:
    """Bracket for the Kuratowski measure (diameters of finite covers).

    Upper: pieces of a fine cover of the first N coordinates times the tail,
    with tail diameter at most ``2**p`` times (boxes) or twice (balls) the
    tail radius.  Lower: infinitely many of the separated vectors
    ``c_i e_i`` share a piece, which forces diameter ``2 inf |c_i|**p``.
    """
    _check_args(truncation, tol)
    N = int(truncation)
    if s.kind == "tail_box":
        upper = 2.0**s.p * s._tail_sup(N)
        limit = 0.0
    else:
        upper = 2.0 * s._tail_sup(N)
        limit = 2.0 * s._limit()
    lower = 2.0 * s._tail_inf(N)
    return _bracket("kuratowski", lower, upper, N, limit, tol)


def union_bracket(brackets) -> MncBracket:
    """Semi-additivity: the measure of a finite union is the max of the parts."""
    brackets = list(brackets)
    if not brackets:
        raise DomainError("need at least one bracket")
    m = brackets[0].measure
    lim = [b.limit for b in brackets]
    return MncBracket(m, max(b.lower for b in brackets), max(b.upper for b in brackets),
                      min(b.truncation_level for b in brackets),
                      None if any(v is None for v in lim) else max(lim),
                      None if any(b.value is None for b in brackets) else max(b.value for b in brackets))


def measures_consistent(h: MncBracket, k: MncBracket, slack: float = 1e-12) -> bool:
    """Can ``beta_H <= beta_K <= 2 beta_H`` hold for values in these brackets?"""
    return h.lower <= k.upper + slack and k.lower <= 2.0 * h.upper + slack


@dataclass(frozen=True)
class DiagOperator:
    """``(T x)_i = c_i x_i`` for a closed-form coefficient sequence."""

    coefficients: Generator

    def __post_init__(self):
        if not self.coefficients.bounded:
            raise DivergentSequenceError("diagonal operator has unbounded coefficients")

    def image(self, s: SeqSet) -> SeqSet:
        if s.kind != "scaled_ball":
            raise ValidationError("images are closed-form for scaled balls only")
        return weighted_ball(self.coefficients, s.p, s.kappa)


@dataclass(frozen=True)
class Classification:
    k: float
    cls: str
    condensing: bool
    sup_attained: bool
    set_bracket: MncBracket
    image_bracket: MncBracket
    notes: tuple[str, ...] = field(default_factory=tuple)

    def as_dict(self):
        return {"k": self.k, "class": self.cls, "condensing": self.condensing,
                "sup_attained": self.sup_attained,
                "set_bracket": self.set_bracket.as_dict(),
                "image_bracket": self.image_bracket.as_dict(),
                "notes": list(self.notes)}


def classify_operator(op: DiagOperator, s: SeqSet, p, truncation: int = 1000,
                      tol: float = 1e-9) -> Classification:
    """Classify a diagonal operator by ``k = limsup |c_i|**p``.

    k < 1 gives a k-set contraction (hence condensing), k = 1 a 1-set
    contraction that is not condensing, and k > 1 an expansive map.
    """
    p = as_p(p)
    if s.p != p:
        raise ValidationError(f"set exponent {s.p} does not match p={p}")
    gen = op.coefficients
    k = gen.limit_abs**p
    notes = []
    if k < 1.0:
        cls, condensing = "k_set_contraction", True
    elif k == 1.0:
        cls, condensing = "one_set_contractive", False
        if not gen.sup_attained:
            notes.append("sup |c_i| = 1 is approached but not attained; the image of the ball keeps its measure")
    else:
        cls, condensing = "expansive", False
    set_b = hausdorff_mnc(s, truncation, tol)
    img_b = hausdorff_mnc(op.image(s), truncation, tol)
    return Classification(float(k), cls, condensing, gen.sup_attained, set_b, img_b, tuple(notes))
