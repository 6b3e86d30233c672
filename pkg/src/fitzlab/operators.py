"""Finite operator graphs and members of their Fitzpatrick family.

For a finite monotone graph ``T`` the two extreme members are computed without
grids: ``phi_T`` is a maximum of ``|T|`` affine functions and ``S_T`` is the
lower convex envelope of ``pi`` restricted to the points of ``T``.  ``S_T`` is
available both as an envelope (fast, any size) and as a small linear program
(the reference evaluator, capped at 64 points).
"""

from __future__ import annotations

import csv
import enum
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import LowerEnvelope
from .lp import simplex
from .models import FunctionModel
from .numerics import INF, GridSpec, PairFunction, PairPoint, as_pair_vector, pair_products

LP_MAX_POINTS = 64
_CHUNK = 1 << 22


class NotMonotoneError(ValueError):
    pass


class NotARepresentativeError(ValueError):
    def __init__(self, message: str, witness: np.ndarray, violation: float):
        super().__init__(message)
        self.witness = witness
        self.violation = violation


class LPSizeError(ValueError):
    """The LP evaluator refuses graphs above :data:`LP_MAX_POINTS` points."""


# ---------------------------------------------------------------------------
# graphs


@dataclass
class OperatorGraph:
    """A finite relation ``T`` stored as parallel arrays of ``x`` and ``x*``."""

    xs: np.ndarray
    xstars: np.ndarray
    label: str = ""
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        xss = np.asarray(self.xstars, dtype=float)
        if xs.ndim == 1:
            xs, xss = xs[:, None], xss.reshape(-1, 1)
        if xs.shape != xss.shape:
            raise ValueError(f"x and x* arrays differ in shape: {xs.shape} vs {xss.shape}")
        if xs.shape[1] < 1:
            raise ValueError("graphs need dimension >= 1")
        pairs = np.hstack([xs, xss])
        if pairs.shape[0] and np.unique(pairs, axis=0).shape[0] != pairs.shape[0]:
            raise ValueError("graph contains duplicate points")
        self.xs, self.xstars = xs, xss

    @classmethod
    def from_pairs(cls, pairs, label: str = "", provenance: dict | None = None) -> "OperatorGraph":
        pairs = np.atleast_2d(np.asarray(pairs, dtype=float))
        n = pairs.shape[1] // 2
        return cls(pairs[:, :n], pairs[:, n:], label, dict(provenance or {}))

    @property
    def n(self) -> int:
        return self.xs.shape[1]

    @property
    def size(self) -> int:
        return self.xs.shape[0]

    def __len__(self) -> int:
        return self.size

    @property
    def pairs(self) -> np.ndarray:
        return np.hstack([self.xs, self.xstars])

    @property
    def points(self) -> list[PairPoint]:
        return [PairPoint(x, xs) for x, xs in zip(self.xs, self.xstars)]

    def products(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.xs, self.xstars)

    def save(self, stem) -> tuple[Path, Path]:
        stem = Path(stem)
        names = [f"x{i}" for i in range(self.n)] + [f"xstar{i}" for i in range(self.n)]
        cpath, jpath = stem.with_suffix(".csv"), stem.with_suffix(".json")
        with cpath.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names)
            for row in self.pairs:
                w.writerow([repr(float(v)) for v in row])
        meta = {"dimension": self.n, "label": self.label, "provenance": self.provenance}
        jpath.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        return cpath, jpath

    @classmethod
    def load(cls, stem) -> "OperatorGraph":
        stem = Path(stem)
        meta = json.loads(stem.with_suffix(".json").read_text())
        with stem.with_suffix(".csv").open(newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        n = int(meta["dimension"])
        pairs = np.array([[float(v) for v in r] for r in rows]).reshape(-1, 2 * n)
        return cls(pairs[:, :n], pairs[:, n:], meta.get("label", ""), meta.get("provenance", {}))


@dataclass
class MonotonicityReport:
    monotone: bool
    worst_product: float
    witness: tuple[PairPoint, PairPoint] | None
    pairs_tested: int


def check_monotone(T: OperatorGraph, tol: float = 0.0) -> MonotonicityReport:
    """Smallest ``<x - y, x* - y*>`` over all pairs of ``T``."""
    m = T.size
    if m < 2:
        return MonotonicityReport(True, 0.0, None, 0)
    dx = T.xs[:, None, :] - T.xs[None, :, :]
    ds = T.xstars[:, None, :] - T.xstars[None, :, :]
    prod = np.einsum("ijk,ijk->ij", dx, ds)
    np.fill_diagonal(prod, INF)
    i, j = np.unravel_index(int(np.argmin(prod)), prod.shape)
    worst = float(prod[i, j])
    monotone = worst >= -tol
    witness = None if monotone else (T.points[i], T.points[j])
    return MonotonicityReport(monotone, worst, witness, m * (m - 1) // 2)


def graph_from_subdifferential(
    f: FunctionModel,
    samples,
    kink_spacing: float | None = None,
    label: str = "",
) -> OperatorGraph:
    """Pairs ``(x, g)`` with ``g`` in ``df(x)`` at each sample.

    By default ``g`` is the deterministic selection of
    :meth:`FunctionModel.subgradient`.  With ``kink_spacing`` the bounded part
    of a set-valued subdifferential is filled in on that spacing (both ends
    included), so e.g. the vertical segment of ``d|.|`` at 0 is sampled.
    """
    X = np.asarray(samples, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    rows = []
    for x in X:
        lo, hi = f.subdifferential(x)
        if kink_spacing is not None and np.any(np.isfinite(lo) & np.isfinite(hi) & (hi > lo)):
            axes = []
            sel = f.subgradient(x)
            for a, b, g in zip(lo, hi, sel):
                if np.isfinite(a) and np.isfinite(b) and b > a:
                    k = max(1, int(np.ceil((b - a) / kink_spacing - 1e-9)))
                    axes.append(np.linspace(a, b, k + 1))
                else:
                    axes.append(np.array([g]))
            for combo in itertools.product(*axes):
                rows.append(np.concatenate([x, combo]))
        else:
            rows.append(np.concatenate([x, f.subgradient(x)]))
    prov = {"kind": "subdifferential", "model": f.to_dict()}
    if kink_spacing is not None:
        prov["kink_spacing"] = kink_spacing
    return OperatorGraph.from_pairs(np.array(rows), label or f"subdifferential of {f.kind}", prov)


def linear_graph(A, lattice, label: str = "") -> OperatorGraph:
    """``{(y, A y)}`` for ``y`` on the given sample points (rows)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Y = np.atleast_2d(np.asarray(lattice, dtype=float))
    prov = {"kind": "linear", "matrix": A.tolist()}
    return OperatorGraph(Y, Y @ A.T, label or "linear", prov)


def sampling_tolerance(T: OperatorGraph) -> float:
    """Half the largest ``<dy, dy*>`` between neighbouring samples of ``T``.

    Between two neighbours ``P0, P1`` of a monotone graph, every point
    ``Q = (1-t) P0 + t P1`` has ``phi_T(Q) >= pi(Q) - t(1-t) <dy, dy*>``; the same
    quantity bounds the NI minimum along the chord.  Twice the worst chord
    bound is the tolerance for comparing a sampled graph with its maximal
    parent.  Neighbours are consecutive points in one dimension and points
    within the largest nearest-neighbour distance otherwise.
    """
    if T.size < 2:
        return 0.0
    P = T.pairs
    n = T.n
    if n == 1:
        order = np.lexsort((P[:, 1], P[:, 0]))
        d = np.diff(P[order], axis=0)
        prods = d[:, 0] * d[:, 1]
    else:
        diff = P[:, None, :] - P[None, :, :]
        dist = np.linalg.norm(diff, axis=2)
        np.fill_diagonal(dist, INF)
        radius = dist.min(axis=1).max() * (1 + 1e-9)
        i, j = np.where(dist <= radius)
        prods = np.einsum("ij,ij->i", diff[i, j, :n], diff[i, j, n:])
    return 0.5 * float(max(prods.max(), 0.0))


# ---------------------------------------------------------------------------
# pair functions built from graphs and models


class FitzpatrickFunction(PairFunction):
    """``phi_T(x, x*) = max_{(y, y*) in T} <x, y*> + <y, x*> - <y, y*>``."""

    def __init__(self, T: OperatorGraph):
        if T.size == 0:
            raise ValueError("Fitzpatrick function of an empty graph")
        self.T = T
        self.n = T.n
        self._pi = T.products()
        self.anchor = T.pairs[0]

    def evaluate(self, points):
        P = np.atleast_2d(np.asarray(points, dtype=float))
        n = self.n
        out = np.empty(P.shape[0])
        step = max(1, _CHUNK // self.T.size)
        for k in range(0, P.shape[0], step):
            blk = P[k:k + step]
            v = blk[:, :n] @ self.T.xstars.T + blk[:, n:] @ self.T.xs.T - self._pi
            out[k:k + step] = v.max(axis=1)
        return out

    def piece_gradients(self, points, k):
        P = np.atleast_2d(np.asarray(points, dtype=float))
        n = self.n
        k = min(k, self.T.size)
        v = P[:, :n] @ self.T.xstars.T + P[:, n:] @ self.T.xs.T - self._pi
        top = np.argsort(-v, axis=1, kind="stable")[:, :k]
        grads = np.hstack([self.T.xstars, self.T.xs])
        return grads[top]


def fitzpatrick(T: OperatorGraph, p, xstar=None) -> float:
    return FitzpatrickFunction(T)(p, xstar)


class SFunction(PairFunction):
    """``S_T = clconv(pi + delta_T)`` as the lower envelope of ``(y, y*, <y, y*>)``."""

    def __init__(self, T: OperatorGraph):
        if T.size == 0:
            raise ValueError("S-function of an empty graph")
        self.T = T
        self.n = T.n
        self._env = LowerEnvelope(T.pairs, T.products())
        self.anchor = T.pairs.mean(axis=0)

    def evaluate(self, points):
        return self._env.evaluate(np.atleast_2d(np.asarray(points, dtype=float)))

    def support_points(self):
        return self.T.pairs

    def affine_hull(self):
        frame = self._env.domain.frame
        if frame.dim == 2 * self.n:
            return None
        return frame.center, frame.basis


def s_function_lp(T: OperatorGraph, p, xstar=None):
    """Solve ``min sum l_i pi_i : sum l_i P_i = p, l >= 0, sum l_i = 1``."""
    if T.size == 0:
        raise ValueError("S-function of an empty graph")
    if T.size > LP_MAX_POINTS:
        raise LPSizeError(f"{T.size} points exceed the LP limit of {LP_MAX_POINTS}")
    target = as_pair_vector(p, xstar)
    A = np.vstack([T.pairs.T, np.ones(T.size)])
    b = np.concatenate([target, [1.0]])
    return simplex(T.products(), A, b)


def s_function(T: OperatorGraph, p, xstar=None) -> float:
    """LP value of ``S_T`` at ``p``; ``+inf`` outside the convex hull of ``T``."""
    res = s_function_lp(T, p, xstar)
    return INF if res.status == "infeasible" else float(res.value)


class SeparablePair(PairFunction):
    """``f(x) + f*(x*)``."""

    def __init__(self, f: FunctionModel, n: int | None = None):
        self.f = f
        self.n = f.n or n or 1
        x0 = f.domain_point(self.n)
        self.anchor = np.concatenate([x0, f.subgradient(x0)])

    def evaluate(self, points):
        P = np.atleast_2d(np.asarray(points, dtype=float))
        n = self.n
        return self.f.values(P[:, :n]) + self.f.conjugate_values(P[:, n:])


class QuadraticFitzpatrick(PairFunction):
    """Closed form of ``phi`` for ``d(q |x|^2 / 2)``: ``|q x + x*|^2 / (4q)``."""

    def __init__(self, q: float = 1.0, n: int = 1):
        self.q = q
        self.n = n
        self.anchor = np.zeros(2 * n)

    def evaluate(self, points):
        P = np.atleast_2d(np.asarray(points, dtype=float))
        n = self.n
        s = self.q * P[:, :n] + P[:, n:]
        return np.einsum("ij,ij->i", s, s) / (4.0 * self.q)


class LinearGraphS(PairFunction):
    """``pi + delta`` of the graph of a linear map ``x* = A x``."""

    def __init__(self, A):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.n = self.A.shape[0]
        self.anchor = np.zeros(2 * self.n)
        basis = np.vstack([np.eye(self.n), self.A])
        self._basis = np.linalg.qr(basis)[0]

    def evaluate(self, points):
        P = np.atleast_2d(np.asarray(points, dtype=float))
        n = self.n
        x, xs = P[:, :n], P[:, n:]
        resid = np.abs(xs - x @ self.A.T).max(axis=1)
        scale = 1.0 + np.abs(P).max(axis=1)
        out = pair_products(P)
        return np.where(resid <= 1e-12 * scale, out, INF)

    def affine_hull(self):
        return np.zeros(2 * self.n), self._basis


class ConstantPair(PairFunction):
    def __init__(self, c: float = 0.0, n: int = 1):
        self.c = float(c)
        self.n = n
        self.anchor = np.zeros(2 * n)

    def evaluate(self, points):
        return np.full(np.atleast_2d(points).shape[0], self.c)


class OffsetPair(PairFunction):
    """``h + c``."""

    def __init__(self, h: PairFunction, c: float):
        self.h, self.c = h, float(c)
        self.n = h.n
        self.anchor = h.anchor

    def evaluate(self, points):
        return self.h.evaluate(points) + self.c

    def affine_hull(self):
        return self.h.affine_hull()

    def support_points(self):
        return self.h.support_points()

    def piece_gradients(self, points, k):
        return self.h.piece_gradients(points, k)


class ConvexCombination(PairFunction):
    """``sum_i w_i h_i`` with positive weights summing to one."""

    def __init__(self, parts: list[PairFunction], weights):
        w = np.asarray(weights, dtype=float)
        if len(parts) != w.size or np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("convex combination needs positive weights summing to 1")
        self.parts, self.weights = list(parts), w
        self.n = parts[0].n
        # a point finite for every part: any anchor where all parts are finite
        self.anchor = next(
            (p.anchor for p in parts if p.anchor is not None and np.isfinite(self.evaluate(p.anchor[None, :]))[0]),
            parts[0].anchor,
        )

    def evaluate(self, points):
        total = np.zeros(np.atleast_2d(points).shape[0])
        for w, h in zip(self.weights, self.parts):
            total = total + w * h.evaluate(points)
        return total

    def affine_hull(self):
        hulls = [h for h in (p.affine_hull() for p in self.parts) if h is not None]
        if not hulls:
            return None
        return min(hulls, key=lambda hb: hb[1].shape[1])

    def support_points(self):
        # the domain is the intersection; the only bounded domains here come from S_T
        pts = [v for v in (p.support_points() for p in self.parts) if v is not None]
        return pts[0] if len(pts) == 1 else None


# ---------------------------------------------------------------------------
# family members


class Provenance(enum.Enum):
    FITZPATRICK = "FITZPATRICK"
    S_FUNCTION = "S_FUNCTION"
    CONVEX_COMBINATION = "CONVEX_COMBINATION"
    SEPARABLE = "SEPARABLE"


@dataclass
class FamilyMember:
    h: PairFunction
    provenance: Provenance
    lam: float | None = None

    @property
    def label(self) -> str:
        if self.provenance is Provenance.CONVEX_COMBINATION:
            return f"combination_{self.lam:g}"
        return self.provenance.value.lower()


COMBINATION_WEIGHTS = (0.25, 0.5, 0.75)


def is_sampled_subdifferential(T: OperatorGraph, f: FunctionModel, tol: float = 1e-9) -> bool:
    """Fenchel equality ``f(y) + f*(y*) = <y, y*>`` at every point of ``T``."""
    if f.n is not None and f.n != T.n:
        return False
    gap = f.values(T.xs) + f.conjugate_values(T.xstars) - T.products()
    return bool(np.all(np.abs(gap) <= tol * (1.0 + np.abs(T.products()))))


def family_members(T: OperatorGraph, f: FunctionModel | None = None) -> list[FamilyMember]:
    """``phi_T``, ``S_T``, three convex combinations, and ``f + f*`` when ``T`` samples ``df``."""
    rep = check_monotone(T)
    if not rep.monotone:
        raise NotMonotoneError(f"graph is not monotone (pair product {rep.worst_product:g})")
    phi, s = FitzpatrickFunction(T), SFunction(T)
    members = [FamilyMember(phi, Provenance.FITZPATRICK), FamilyMember(s, Provenance.S_FUNCTION)]
    for lam in COMBINATION_WEIGHTS:
        members.append(FamilyMember(ConvexCombination([phi, s], [lam, 1.0 - lam]), Provenance.CONVEX_COMBINATION, lam))
    if f is not None and is_sampled_subdifferential(T, f):
        members.append(FamilyMember(SeparablePair(f, T.n), Provenance.SEPARABLE))
    return members


def represented_operator(h: PairFunction, region: GridSpec, tol: float = 1e-9, label: str = "") -> OperatorGraph:
    """Grid nodes where ``h = pi`` within ``tol``; ``h < pi - tol`` anywhere is an error."""
    nodes = region.nodes()
    gap = h.evaluate(nodes) - pair_products(nodes)
    k = int(np.argmin(gap))
    if gap[k] < -tol:
        raise NotARepresentativeError(
            f"h falls below the duality product by {-gap[k]:.3g} at {nodes[k].tolist()}", nodes[k], float(-gap[k])
        )
    keep = gap <= tol
    return OperatorGraph.from_pairs(nodes[keep].reshape(-1, region.ndim), label or "represented", {"kind": "represented"})


__all__ = [
    "ConstantPair",
    "ConvexCombination",
    "FamilyMember",
    "FitzpatrickFunction",
    "LinearGraphS",
    "OffsetPair",
    "OperatorGraph",
    "Provenance",
    "QuadraticFitzpatrick",
    "SFunction",
    "SeparablePair",
    "check_monotone",
    "family_members",
    "fitzpatrick",
    "graph_from_subdifferential",
    "linear_graph",
    "represented_operator",
    "s_function",
    "s_function_lp",
    "sampling_tolerance",
]
