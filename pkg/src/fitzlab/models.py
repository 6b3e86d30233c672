"""Closed-form convex functions with exact conjugates and subgradients.

Every model is separable across coordinates, which keeps conjugates, proximal
steps and subdifferentials explicit.  Models act elementwise on vectors of any
length unless they are a :class:`SeparableSum`, which fixes the dimension.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import INF


class DomainError(ValueError):
    """Point outside the effective domain of a function."""


class FunctionModel:
    kind: str = ""
    n: int | None = None  # None: elementwise, any dimension

    # -- scalar pieces, vectorized over numpy arrays; subclasses override
    def _f(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _fstar(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _subdiff(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def _curvature(self, lo: float, hi: float) -> float:
        return 0.0

    # -- public interface
    def values(self, X) -> np.ndarray:
        """``f`` at each row of ``X`` (shape ``(m, n)``)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self._f(X).sum(axis=1)

    def conjugate_values(self, S) -> np.ndarray:
        S = np.atleast_2d(np.asarray(S, dtype=float))
        return self._fstar(S).sum(axis=1)

    def __call__(self, x) -> float:
        return float(self.values(np.atleast_1d(x)[None, :])[0])

    def conjugate(self, s) -> float:
        return float(self.conjugate_values(np.atleast_1d(s)[None, :])[0])

    def subdifferential(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Per-coordinate interval ``[lo, hi]`` of subgradients (may be unbounded)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lo, hi = self._subdiff(x)
        if np.any(np.isnan(lo)) or np.any(lo > hi):
            raise DomainError(f"{x.tolist()} is outside the domain")
        return lo, hi

    def subgradient(self, x) -> np.ndarray:
        """Deterministic selection: interval midpoint, or the finite end of a ray."""
        lo, hi = self.subdifferential(x)
        out = np.where(np.isfinite(lo) & np.isfinite(hi), 0.5 * (lo + hi), 0.0)
        out = np.where(np.isfinite(lo) & ~np.isfinite(hi), lo, out)
        out = np.where(~np.isfinite(lo) & np.isfinite(hi), hi, out)
        return out

    def curvature_bound(self, lo: float, hi: float) -> float:
        """Upper bound of ``f''`` on ``[lo, hi]`` away from kinks."""
        return self._curvature(lo, hi)

    def domain_point(self, n: int) -> np.ndarray:
        return np.zeros(n)

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass
class Quadratic(FunctionModel):
    """``q x^2 / 2``."""

    q: float = 1.0
    kind: str = field(default="quadratic", init=False, repr=False)

    def __post_init__(self):
        if not self.q > 0:
            raise ValueError("quadratic needs q > 0")

    def _f(self, x):
        return 0.5 * self.q * x * x

    def _fstar(self, s):
        return 0.5 * s * s / self.q

    def _subdiff(self, x):
        g = self.q * x
        return g, g

    def _curvature(self, lo, hi):
        return self.q

    def to_dict(self):
        return {"kind": self.kind, "q": self.q}


@dataclass
class Power(FunctionModel):
    """``|x|^p / p`` with ``p > 1``."""

    p: float = 4.0
    kind: str = field(default="power", init=False, repr=False)

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError("power needs p > 1")

    @property
    def conjugate_exponent(self) -> float:
        return self.p / (self.p - 1.0)

    def _f(self, x):
        return np.abs(x) ** self.p / self.p

    def _fstar(self, s):
        r = self.conjugate_exponent
        return np.abs(s) ** r / r

    def _subdiff(self, x):
        g = np.sign(x) * np.abs(x) ** (self.p - 1.0)
        return g, g

    def _curvature(self, lo, hi):
        m = max(abs(lo), abs(hi))
        if self.p >= 2:
            return (self.p - 1.0) * m ** (self.p - 2.0)
        return INF

    def to_dict(self):
        return {"kind": self.kind, "p": self.p}


@dataclass
class AbsoluteValue(FunctionModel):
    """``c |x|``; the subdifferential at 0 is ``[-c, c]``."""

    c: float = 1.0
    kind: str = field(default="abs", init=False, repr=False)

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("absolute value needs c > 0")

    def _f(self, x):
        return self.c * np.abs(x)

    def _fstar(self, s):
        return np.where(np.abs(s) <= self.c, 0.0, INF)

    def _subdiff(self, x):
        lo = np.where(x > 0, self.c, -self.c)
        hi = np.where(x < 0, -self.c, self.c)
        return lo.astype(float), hi.astype(float)

    def to_dict(self):
        return {"kind": self.kind, "c": self.c}


@dataclass
class IntervalIndicator(FunctionModel):
    """Indicator of ``[a, b]``; normal cones at the endpoints are rays."""

    a: float = -1.0
    b: float = 1.0
    kind: str = field(default="indicator", init=False, repr=False)

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("indicator needs a < b")

    def _f(self, x):
        return np.where((x >= self.a) & (x <= self.b), 0.0, INF)

    def _fstar(self, s):
        return np.maximum(self.a * s, self.b * s)

    def _subdiff(self, x):
        inside = (x >= self.a) & (x <= self.b)
        lo = np.where(x == self.a, -INF, 0.0)
        hi = np.where(x == self.b, INF, 0.0)
        lo = np.where(inside, lo, np.nan)
        return lo, hi

    def domain_point(self, n):
        return np.full(n, 0.5 * (self.a + self.b))

    def to_dict(self):
        return {"kind": self.kind, "a": self.a, "b": self.b}


@dataclass
class SeparableSum(FunctionModel):
    """``sum_i f_i(x_i)``: one one-dimensional model per coordinate."""

    parts: list = field(default_factory=list)
    kind: str = field(default="separable", init=False, repr=False)

    def __post_init__(self):
        if not self.parts:
            raise ValueError("separable sum needs at least one part")
        self.n = len(self.parts)

    def _cols(self, X, fn):
        X = np.atleast_2d(X)
        if X.shape[1] != self.n:
            raise ValueError(f"expected dimension {self.n}")
        return np.column_stack([fn(part, X[:, [i]])[:, 0] for i, part in enumerate(self.parts)])

    def _f(self, x):
        return self._cols(x, lambda p, c: p._f(c))

    def _fstar(self, s):
        return self._cols(s, lambda p, c: p._fstar(c))

    def _subdiff(self, x):
        pieces = [p._subdiff(x[[i]]) for i, p in enumerate(self.parts)]
        return np.concatenate([lo for lo, _ in pieces]), np.concatenate([hi for _, hi in pieces])

    def _curvature(self, lo, hi):
        return max(p._curvature(lo, hi) for p in self.parts)

    def domain_point(self, n):
        return np.concatenate([p.domain_point(1) for p in self.parts])

    def to_dict(self):
        return {"kind": self.kind, "parts": [p.to_dict() for p in self.parts]}


@dataclass
class AffineShift(FunctionModel):
    """``f(x) + <a, x>``; conjugate ``f*(s - a)``."""

    base: FunctionModel = None
    slope: float = 0.0
    kind: str = field(default="affine_shift", init=False, repr=False)

    def __post_init__(self):
        self.n = self.base.n

    def _f(self, x):
        return self.base._f(x) + self.slope * x

    def _fstar(self, s):
        return self.base._fstar(s - self.slope)

    def _subdiff(self, x):
        lo, hi = self.base._subdiff(x)
        return lo + self.slope, hi + self.slope

    def _curvature(self, lo, hi):
        return self.base._curvature(lo, hi)

    def domain_point(self, n):
        return self.base.domain_point(n)

    def to_dict(self):
        return {"kind": self.kind, "slope": self.slope, "base": self.base.to_dict()}


@dataclass
class ConstantOffset(FunctionModel):
    """``f(x) + c``; conjugate ``f* - c``.  The offset is spread over coordinates."""

    base: FunctionModel = None
    c: float = 0.0
    kind: str = field(default="offset", init=False, repr=False)

    def __post_init__(self):
        self.n = self.base.n

    def values(self, X):
        return self.base.values(X) + self.c

    def conjugate_values(self, S):
        return self.base.conjugate_values(S) - self.c

    def _subdiff(self, x):
        return self.base._subdiff(x)

    def _curvature(self, lo, hi):
        return self.base._curvature(lo, hi)

    def domain_point(self, n):
        return self.base.domain_point(n)

    def to_dict(self):
        return {"kind": self.kind, "c": self.c, "base": self.base.to_dict()}


def model_from_dict(d: dict) -> FunctionModel:
    kind = d["kind"]
    if kind == "quadratic":
        return Quadratic(float(d.get("q", 1.0)))
    if kind == "power":
        return Power(float(d["p"]))
    if kind == "abs":
        return AbsoluteValue(float(d.get("c", 1.0)))
    if kind == "indicator":
        return IntervalIndicator(float(d["a"]), float(d["b"]))
    if kind == "separable":
        return SeparableSum([model_from_dict(p) for p in d["parts"]])
    if kind == "affine_shift":
        return AffineShift(model_from_dict(d["base"]), float(d["slope"]))
    if kind == "offset":
        return ConstantOffset(model_from_dict(d["base"]), float(d["c"]))
    raise ValueError(f"unknown function model kind {kind!r}")
