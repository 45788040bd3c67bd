"""Benchmark maps and their registry.

Every map acts on arrays of shape ``(..., d)`` so that boundary samples can
be pushed through it in one call.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from pconvex.errors import ValidationError
from pconvex.registry import Registry

MAP_CLASSES = ("one_set_contractive", "semiclosed_one_set_contractive", "condensing", "nonexpansive")

# which family of results a class tag draws on; numerics are identical
CLASS_BASIS = {
    "one_set_contractive": "one_set_contractive_family",
    "nonexpansive": "one_set_contractive_family",
    "condensing": "one_set_contractive_family",
    "semiclosed_one_set_contractive": "semiclosed_family",
}


@dataclass(frozen=True)
class MapSpec:
    """A continuous map F with its asserted mapping class.

    The class tag (and the hemicompactness-type assumptions it stands for) is
    recorded, not verified; certificates carry residual traces for audit.
    """

    F: Callable[[np.ndarray], np.ndarray]
    asserted_class: str = "one_set_contractive"
    name: str = "custom"
    params: dict = field(default_factory=dict)
    fixed_points: tuple = ()
    dim: int | None = None

    def __post_init__(self):
        if self.asserted_class not in MAP_CLASSES:
            raise ValidationError(
                f"asserted_class must be one of {MAP_CLASSES}, got {self.asserted_class!r}"
            )

    def __call__(self, X):
        return np.asarray(self.F(np.asarray(X, dtype=float)), dtype=float)

    def with_class(self, asserted_class: str) -> "MapSpec":
        return MapSpec(self.F, asserted_class, self.name, self.params, self.fixed_points, self.dim)

    @property
    def basis(self) -> str:
        return CLASS_BASIS[self.asserted_class]

    def probe_finite(self, radius: float, dim: int, n: int = 256, seed: int = 0):
        """Check that F is finite on the bounding box of radius ``radius``."""
        rng = np.random.default_rng(seed)
        X = rng.uniform(-radius, radius, size=(n, dim))
        Y = self(X)
        if Y.shape != X.shape:
            raise ValidationError(f"map {self.name} returned shape {Y.shape}, expected {X.shape}")
        if not np.all(np.isfinite(Y)):
            raise ValidationError(f"map {self.name} is not finite on the bounding box")

    def describe(self) -> dict:
        return {"name": self.name, "params": self.params, "asserted_class": self.asserted_class}


MAPS = Registry("map")


def _class_for_gain(gain: float) -> str:
    if gain < 1.0:
        return "condensing"
    if gain == 1.0:
        return "nonexpansive"
    # finite-dimensional continuous maps are compact, hence condensing
    return "condensing"


@MAPS.register("affine", "affine(A, b)", "F(x) = A x + b")
def affine(A, b, asserted_class: str | None = None) -> MapSpec:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    if A.shape != (b.size, b.size):
        raise ValidationError(f"A must be {b.size}x{b.size}, got {A.shape}")
    A.setflags(write=False)
    b.setflags(write=False)
    fixed = ()
    eye = np.eye(b.size)
    if abs(np.linalg.det(eye - A)) > 1e-12:
        fixed = (tuple(np.linalg.solve(eye - A, b).tolist()),)
    gain = float(np.linalg.norm(A, 2))
    return MapSpec(lambda X: X @ A.T + b, asserted_class or _class_for_gain(gain), "affine",
                   {"A": A.tolist(), "b": b.tolist()}, fixed, b.size)


@MAPS.register("scale", "scale(c)", "F(x) = c x")
def scale(c, asserted_class: str | None = None) -> MapSpec:
    c = float(c)
    fixed = () if c == 1.0 else ("origin",)
    return MapSpec(lambda X: c * X, asserted_class or _class_for_gain(abs(c)), "scale",
                   {"c": c}, fixed)


@MAPS.register("rotation", "rotation(theta, c)",
               "F(x) = c R(theta) x; theta in degrees, acting on the first two coordinates")
def rotation(theta, c=1.0, asserted_class: str | None = None) -> MapSpec:
    th = np.deg2rad(float(theta))
    c = float(c)
    R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    R.setflags(write=False)

    def F(X):
        Y = c * X.copy()
        Y[..., :2] = c * (X[..., :2] @ R.T)
        return Y

    return MapSpec(F, asserted_class or _class_for_gain(abs(c)), "rotation",
                   {"theta": float(theta), "c": c}, ("origin",))


@MAPS.register("translation", "translation(v)", "F(x) = x + v")
def translation(v, asserted_class: str | None = None) -> MapSpec:
    v = np.asarray(v, dtype=float).reshape(-1)
    v.setflags(write=False)
    return MapSpec(lambda X: X + v, asserted_class or "nonexpansive", "translation",
                   {"v": v.tolist()}, (), v.size)


@MAPS.register("negation", "negation()", "F(x) = -x")
def negation(asserted_class: str | None = None) -> MapSpec:
    return MapSpec(lambda X: -X, asserted_class or "nonexpansive", "negation", {}, ("origin",))


@MAPS.register("polynomial", "polynomial(coeffs)",
               "componentwise F(x)_i = sum_k coeffs[k] x_i^k")
def polynomial(coeffs, asserted_class: str | None = None) -> MapSpec:
    a = np.asarray(coeffs, dtype=float).reshape(-1)
    if a.size == 0:
        raise ValidationError("polynomial needs at least one coefficient")
    a.setflags(write=False)

    def F(X):
        # Horner, highest degree first
        out = np.zeros_like(X)
        for ak in a[::-1]:
            out = out * X + ak
        return out

    return MapSpec(F, asserted_class or "condensing", "polynomial", {"coeffs": a.tolist()})


def build_map(key: str, params=None, asserted_class: str | None = None) -> MapSpec:
    m = MAPS.build(key, params)
    if asserted_class is not None:
        m = m.with_class(asserted_class)
    return m


def benchmark_maps() -> dict[str, MapSpec]:
    """The planar benchmark suite used by the property and acceptance tests."""
    return {
        "scale_half": scale(0.5),
        "negation": negation(),
        "neg_half": scale(-0.5),
        "translation": translation([0.5, 0.0]),
        "affine": affine(0.5 * np.eye(2), [0.2, 0.0]),
        "rotation": rotation(30.0, 1.0),
        "rotation_contract": rotation(15.0, 0.9),
        "scale_two": scale(2.0),
        "rotation_expand": rotation(30.0, 2.0),
        "polynomial": polynomial([0.1, 0.3, 0.0, -0.2]),
    }
