"""Translation and the condition checkers.

Every checker returns a :class:`ConditionReport`.  Universal quantifiers over
translations or dual points are replaced by explicit finite sample sets, and
the report always states how many samples were tested.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .models import FunctionModel, SeparableSum
from .numerics import (
    INF,
    GridFunction,
    GridSpec,
    ImproperFunctionError,
    PairFunction,
    PairPoint,
    Space,
    as_pair_vector,
    pair_products,
)
from .operators import OperatorGraph
from .optimize import coordinate_descent, minimize_scalar_batch
from .transform import conjugate

EXACT_TOL = 1e-9
SOLVER_TOL = 1e-6


class ConditionId(enum.Enum):
    H_GE_PI = "H_GE_PI"
    HSTAR_GE_PISTAR = "HSTAR_GE_PISTAR"
    AUX_INF = "AUX_INF"
    NI = "NI"
    REPRESENTS = "REPRESENTS"


class Verdict(enum.Enum):
    HOLDS = "HOLDS"
    FAILS = "FAILS"
    INCONCLUSIVE = "INCONCLUSIVE"


def verdict_all(verdicts) -> Verdict:
    """Conjunction: one FAILS decides; otherwise any INCONCLUSIVE wins."""
    vs = list(verdicts)
    if Verdict.FAILS in vs:
        return Verdict.FAILS
    if Verdict.INCONCLUSIVE in vs:
        return Verdict.INCONCLUSIVE
    return Verdict.HOLDS


def verdict_any(verdicts) -> Verdict:
    """Disjunction: one HOLDS decides; otherwise any INCONCLUSIVE wins."""
    vs = list(verdicts)
    if Verdict.HOLDS in vs:
        return Verdict.HOLDS
    if Verdict.INCONCLUSIVE in vs:
        return Verdict.INCONCLUSIVE
    return Verdict.FAILS


def jsonable(v):
    """Floats as JSON numbers, infinities as the strings ``"inf"``/``"-inf"``."""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.ndarray):
        return [jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, enum.Enum):
        return v.value
    return v


@dataclass
class ConditionReport:
    condition_id: ConditionId
    verdict: Verdict
    worst_violation: float
    witness: list | None
    tolerance_used: float
    samples_tested: int
    note: str = ""
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict is Verdict.FAILS and not (self.worst_violation > self.tolerance_used and self.witness is not None):
            raise AssertionError("a FAILS report needs a violation above tolerance and a witness")

    @property
    def holds(self) -> bool:
        return self.verdict is Verdict.HOLDS

    def to_dict(self) -> dict:
        return jsonable({
            "condition_id": self.condition_id,
            "verdict": self.verdict,
            "worst_violation": self.worst_violation,
            "witness": self.witness,
            "tolerance": self.tolerance_used,
            "samples_tested": self.samples_tested,
            "note": self.note,
            "details": self.details,
        })


# ---------------------------------------------------------------------------
# translation


def translated_values(h: PairFunction, points, shifts) -> np.ndarray:
    """``h(x + x0, x* + x0*) - [<x, x0*> + <x0, x*> + <x0, x0*>]`` row by row.

    ``shifts`` is a single pair vector or one per row.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    S = np.broadcast_to(np.asarray(shifts, dtype=float), P.shape)
    n = P.shape[1] // 2
    x, xs = P[:, :n], P[:, n:]
    x0, x0s = S[:, :n], S[:, n:]
    bracket = (
        np.einsum("ij,ij->i", x, x0s) + np.einsum("ij,ij->i", x0, xs) + np.einsum("ij,ij->i", x0, x0s)
    )
    return h.evaluate(P + S) - bracket


class TranslatedFunction(PairFunction):
    """``h_t`` for ``t = (x0, x0*)``."""

    def __init__(self, h: PairFunction, t):
        self.h = h
        self.t = as_pair_vector(t)
        self.n = h.n
        if self.t.shape[0] != 2 * self.n:
            raise ValueError("translation has the wrong dimension")
        self.anchor = None if h.anchor is None else np.asarray(h.anchor) - self.t

    def evaluate(self, points):
        return translated_values(self.h, points, self.t)

    def affine_hull(self):
        hull = self.h.affine_hull()
        if hull is None:
            return None
        a, B = hull
        return a - self.t, B

    def support_points(self):
        V = self.h.support_points()
        return None if V is None else V - self.t

    def piece_gradients(self, points, k):
        G = self.h.piece_gradients(np.atleast_2d(points) + self.t, k)
        if G is None:
            return None
        n = self.n
        return G - np.concatenate([self.t[n:], self.t[:n]])


def translate(h: PairFunction, t) -> TranslatedFunction:
    return TranslatedFunction(h, t)


# ---------------------------------------------------------------------------
# h >= pi


def _nodes(region) -> np.ndarray:
    return region.nodes() if isinstance(region, GridSpec) else np.atleast_2d(np.asarray(region, dtype=float))


def check_h_above_pi(h: PairFunction, region, tol: float = EXACT_TOL) -> ConditionReport:
    """``h >= pi`` at every node of ``region`` (a grid or an array of pair vectors)."""
    nodes = _nodes(region)
    gap = h.evaluate(nodes) - pair_products(nodes)
    k = int(np.argmin(gap))
    worst = float(-gap[k])
    verdict = Verdict.HOLDS if worst <= tol else Verdict.FAILS
    return ConditionReport(
        ConditionId.H_GE_PI, verdict, worst, nodes[k].tolist(), tol, nodes.shape[0],
        details={"violating_nodes": int(np.sum(-gap > tol))},
    )


# ---------------------------------------------------------------------------
# h* >= pi*


def grid_tolerance(g: GridFunction, floor: float = SOLVER_TOL) -> float:
    """Largest second difference of ``g`` along any grid axis, at least ``floor``.

    The second difference is ``C h^2`` with ``C`` the observed curvature, which
    bounds how far a node-restricted maximum can fall below the continuous one.
    """
    worst = 0.0
    for ax in range(g.spec.ndim):
        if g.spec.resolution[ax] < 3:
            continue
        v = np.moveaxis(g.values, ax, 0)
        ok = np.isfinite(v[2:]) & np.isfinite(v[1:-1]) & np.isfinite(v[:-2])
        d2 = np.where(ok, v[2:], 0.0) - 2.0 * np.where(ok, v[1:-1], 0.0) + np.where(ok, v[:-2], 0.0)
        d2 = d2[ok]
        if d2.size:
            worst = max(worst, float(np.abs(d2).max()))
    return max(floor, worst)


def check_conj_above_pi(
    h: GridFunction,
    dual_region: GridSpec,
    tol: float | None = None,
    engine: str = "bruteforce",
) -> ConditionReport:
    """``h* >= pi*`` on the nodes of ``dual_region``, trusting only interior maxima.

    Violations at trusted nodes make the verdict FAILS; violations confined
    to truncation-suspect nodes make it INCONCLUSIVE.
    """
    if h.tag is not Space.PRIMAL:
        raise ValueError("conjugate check expects a PRIMAL grid function")
    tol = grid_tolerance(h) if tol is None else tol
    conj = conjugate(h, dual_region, engine, trust=True)
    nodes = dual_region.nodes()
    gap = conj.flat() - pair_products(nodes)
    trusted = conj.trusted_mask().ravel()
    viol = -gap
    bad = viol > tol
    bad_trusted = bad & trusted
    details = {
        "suspect_nodes": int(np.sum(~trusted)),
        "violations_trusted": int(bad_trusted.sum()),
        "violations_suspect": int((bad & ~trusted).sum()),
        "engine": engine,
    }
    if bad_trusted.any():
        k = int(np.argmax(np.where(trusted, viol, -INF)))
        verdict, note = Verdict.FAILS, ""
    elif bad.any():
        k = int(np.argmax(viol))
        verdict, note = Verdict.INCONCLUSIVE, "violations only at truncation-suspect nodes"
    else:
        pool = np.where(trusted, viol, -INF) if trusted.any() else viol
        k = int(np.argmax(pool))
        verdict, note = Verdict.HOLDS, ""
    if not trusted.any():
        note = note or "no trusted dual node"
        if verdict is Verdict.HOLDS:
            verdict = Verdict.INCONCLUSIVE
    return ConditionReport(
        ConditionId.HSTAR_GE_PISTAR, verdict, float(viol[k]), nodes[k].tolist(), tol, nodes.shape[0], note, details
    )


# ---------------------------------------------------------------------------
# auxiliary infimum


@dataclass
class AuxResult:
    values: np.ndarray
    minimizers: np.ndarray
    sweeps: int


def _start_offsets(r: int) -> np.ndarray:
    """Nine (or ``2r + 1`` for ``r >= 3``) unit-box lattice starts."""
    if r == 1:
        return np.linspace(-1.0, 1.0, 9)[:, None]
    if r == 2:
        return np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=2)))
    eye = np.eye(r)
    return np.vstack([np.zeros(r), eye, -eye])


VERTEX_DIRECTIONS = 6


def _vertex_directions(V, ts, offset, B, k: int = VERTEX_DIRECTIONS):
    """Unit directions toward the ``k`` support points nearest to each iterate.

    On a polytope domain the only feasible descent at a boundary point may run
    along an edge, i.e. toward a neighbouring vertex; no fixed direction set
    contains those.
    """
    V = np.asarray(V, dtype=float)
    k = min(k, V.shape[0])

    def directions(W, ids):
        Vw = (V[None, :, :] - ts[ids][:, None, :] - offset[ids][:, None, :]) @ B
        diff = Vw - W[:, None, :]
        dist = np.linalg.norm(diff, axis=2)
        near = np.argsort(np.where(dist > 1e-12, dist, INF), axis=1)[:, :k]
        rows = np.arange(W.shape[0])[:, None]
        D, L = diff[rows, near], dist[rows, near]
        return np.where(L[..., None] > 1e-12, D / np.where(L > 1e-12, L, 1.0)[..., None], 0.0)

    return directions


def _face_directions(h: PairFunction, ts, offset, B):
    """Descent directions along the ridges where the top pieces of a max-affine ``h`` tie.

    For ``j = 1, 2, ...`` the objective gradient of the largest piece is
    projected onto the null space of ``g_1 - g_i, i <= j``.  A minimizer on a
    kink ridge is reachable along these directions even when no fixed
    direction is parallel to the ridge.
    """
    d = ts.shape[1]
    n = d // 2
    k = B.shape[1] + 1
    swap = np.hstack([ts[:, n:], ts[:, :n]])

    def directions(W, ids):
        Z = offset[ids] + W @ B.T
        G = h.piece_gradients(Z + ts[ids], k)
        q = G[:, 0, :] - swap[ids] + Z
        out = np.zeros((W.shape[0], G.shape[1], B.shape[1]))
        for j in range(G.shape[1]):
            g = -q
            if j:
                A = G[:, :1, :] - G[:, 1:j + 1, :]
                g = g + (np.linalg.pinv(A) @ (A @ q[:, :, None]))[:, :, 0]
            g = g @ B
            norm = np.linalg.norm(g, axis=1)
            out[:, j, :] = np.where(norm[:, None] > 1e-14, g / np.where(norm > 1e-14, norm, 1.0)[:, None], 0.0)
        return out

    return directions


def aux_infimum_batch(h: PairFunction, translations, tol: float = 1e-8) -> AuxResult:
    """``inf h_t(x, x*) + |x|^2/2 + |x*|^2/2`` for every row ``t`` of ``translations``.

    The objective is strongly convex, so a coarse lattice of starts followed
    by one local descent finds the global minimum.  If ``h`` reports an
    affine hull for its domain the search runs inside it.
    """
    ts = np.atleast_2d(np.asarray(translations, dtype=float))
    m, d = ts.shape
    hull = h.affine_hull()
    if hull is None:
        offset = np.zeros((m, d))
        B = np.eye(d)
    else:
        a, B = hull
        offset = np.asarray(a)[None, :] - ts
    r = B.shape[1]

    def lift(W, ids):
        return offset[ids] + W @ B.T

    def objective(W, ids):
        Z = lift(W, ids)
        return translated_values(h, Z, ts[ids]) + 0.5 * np.einsum("ij,ij->i", Z, Z)

    if r == 0:
        Z = offset
        vals = objective(np.zeros((m, 0)), np.arange(m))
        return AuxResult(vals, Z, 0)

    center = -offset @ B  # projection of the origin
    radius = np.maximum(1.0, np.linalg.norm(ts, axis=1))
    starts = [center + radius[:, None] * o for o in _start_offsets(r)]
    if h.anchor is not None:
        starts.append((np.asarray(h.anchor)[None, :] - ts - offset) @ B)
    best_w = np.zeros((m, r))
    best_v = np.full(m, INF)
    ids = np.arange(m)
    for W in starts:
        v = objective(W, ids)
        better = v < best_v
        best_w[better], best_v[better] = W[better], v[better]
    if not np.all(np.isfinite(best_v)):
        bad = int(np.argmax(~np.isfinite(best_v)))
        raise ImproperFunctionError(f"no finite starting point for translation {ts[bad].tolist()}")
    sources = []
    V = h.support_points()
    if V is not None:
        sources.append(_vertex_directions(V, ts, offset, B))
    if h.piece_gradients(ts[:1], 1) is not None:
        sources.append(_face_directions(h, ts, offset, B))
    extra = None
    if sources:
        def extra(W, ids):
            return np.concatenate([src(W, ids) for src in sources], axis=1)
    res = coordinate_descent(objective, best_w, tol=tol, extra_directions=extra)
    return AuxResult(res.value, lift(res.x, ids), res.sweeps)


def aux_infimum(h: PairFunction, t) -> float:
    return float(aux_infimum_batch(h, as_pair_vector(t)[None, :]).values[0])


def translation_samples(n: int, radius: float, seed: int, n_random: int = 20) -> np.ndarray:
    """Lattice (5x5 when ``n = 1``, 3^4 when ``n = 2``) on ``[-r, r]^{2n}`` plus seeded uniform points."""
    d = 2 * n
    per_axis = 5 if n == 1 else 3
    axis = np.linspace(-radius, radius, per_axis)
    lattice = np.array(list(itertools.product(axis, repeat=d)))
    rng = np.random.default_rng(seed)
    extra = rng.uniform(-radius, radius, size=(n_random, d))
    return np.vstack([lattice, extra])


def check_aux_condition(h: PairFunction, translations, tol: float = SOLVER_TOL) -> ConditionReport:
    """``|aux_infimum(h, t)| <= tol`` at every sampled translation."""
    ts = np.atleast_2d(np.asarray(translations, dtype=float))
    res = aux_infimum_batch(h, ts)
    k = int(np.argmax(np.abs(res.values)))
    worst = float(abs(res.values[k]))
    verdict = Verdict.HOLDS if worst <= tol else Verdict.FAILS
    return ConditionReport(
        ConditionId.AUX_INF,
        verdict,
        worst,
        ts[k].tolist(),
        tol,
        ts.shape[0],
        f"sampled at {ts.shape[0]} translations",
        {
            "value_at_witness": float(res.values[k]),
            "min_value": float(res.values.min()),
            "max_value": float(res.values.max()),
            "minimizer_at_witness": res.minimizers[k].tolist(),
        },
    )


# ---------------------------------------------------------------------------
# NI


def ni_values(T: OperatorGraph, samples) -> tuple[np.ndarray, np.ndarray]:
    """Exact ``min_{(y, y*) in T} <x** - y, x* - y*>`` per sample ``(x*, x**)``, with argmin."""
    if T.size == 0:
        raise ValueError("NI needs a nonempty graph")
    S = np.atleast_2d(np.asarray(samples, dtype=float))
    n = T.n
    xs, xss = S[:, :n], S[:, n:]
    a = xss[:, None, :] - T.xs[None, :, :]
    b = xs[:, None, :] - T.xstars[None, :, :]
    prod = np.einsum("ijk,ijk->ij", a, b)
    j = prod.argmin(axis=1)
    return prod[np.arange(S.shape[0]), j], j


def check_ni(T: OperatorGraph, dual_samples, tol: float = EXACT_TOL) -> ConditionReport:
    S = np.atleast_2d(np.asarray(dual_samples, dtype=float))
    vals, arg = ni_values(T, S)
    k = int(np.argmax(vals))
    worst = float(vals[k])
    verdict = Verdict.HOLDS if worst <= tol else Verdict.FAILS
    return ConditionReport(
        ConditionId.NI,
        verdict,
        worst,
        S[k].tolist(),
        tol,
        S.shape[0],
        f"sampled at {S.shape[0]} dual points",
        {"graph_point": T.pairs[arg[k]].tolist(), "failing_samples": int(np.sum(vals > tol))},
    )


# ---------------------------------------------------------------------------
# quadratic completion used in the proof of the auxiliary condition


def completion_supremum(ystar, ystarstar, z) -> float:
    """``sup_{z*} -<y* - z*, y** - z> - |y* - z*|^2 / 2`` by coordinatewise golden section."""
    ys, yss, z = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (ystar, ystarstar, z))
    c = yss - z

    def neg(zs):
        u = ys - zs
        return u * c + 0.5 * u * u

    half = 2.0 * np.abs(c) + 1.0
    zs = minimize_scalar_batch(neg, ys - half, ys + half)
    return float(-np.sum(neg(zs)))


# ---------------------------------------------------------------------------
# restricted Bronsted-Rockafellar witness


class PremiseError(ValueError):
    pass


@dataclass
class BRResult:
    found: bool
    witness: PairPoint | None
    gap: float
    dist_x: float
    dist_xstar: float
    reason: str = ""


def _prox(f: FunctionModel, v: np.ndarray) -> np.ndarray:
    """``argmin_y f(y) + |y - v|^2 / 2`` coordinate by coordinate."""
    parts = f.parts if isinstance(f, SeparableSum) else [f] * v.size
    out = np.empty_like(v)
    for i, (part, vi) in enumerate(zip(parts, v)):
        try:
            g = float(part.subgradient(np.array([vi]))[0])
            half = abs(g) * (1 + 1e-9) + 1e-12
        except ValueError:
            half = abs(vi) + 10.0
        fun = lambda y, part=part, vi=vi: part._f(y) + 0.5 * (y - vi) ** 2  # noqa: E731
        out[i] = minimize_scalar_batch(fun, np.array([vi - half]), np.array([vi + half]))[0]
    return out


def br_search(h: PairFunction, f: FunctionModel, p, eps: float, eq_tol: float = EXACT_TOL) -> BRResult:
    """Look for a graph point within ``eps`` of an ``eps^2``-subsolution ``p`` of ``h``.

    The candidate is the proximal step
    ``x_bar = argmin f(y) - <y, p.x*> + |y - p.x|^2 / 2`` and
    ``x*_bar = p.x* + p.x - x_bar``, which lies on the graph of ``df``.
    """
    v = as_pair_vector(p)
    n = v.shape[0] // 2
    x, xs = v[:n], v[n:]
    gap = float(h(v) - float(np.dot(x, xs)))
    if not gap < eps * eps:
        raise PremiseError(f"premise fails: h(p) - pi(p) = {gap:.6g} is not below eps^2 = {eps * eps:.6g}")
    if abs(gap) <= 1e-12:
        return BRResult(True, PairPoint(x, xs), gap, 0.0, 0.0, "p already on the graph")
    xbar = _prox(f, x + xs)
    xsbar = xs + x - xbar
    wit = PairPoint(xbar, xsbar)
    eq_gap = float(h(wit.as_vector()) - np.dot(xbar, xsbar))
    dx, dxs = float(np.linalg.norm(x - xbar)), float(np.linalg.norm(xs - xsbar))
    if abs(eq_gap) > eq_tol:
        return BRResult(False, None, gap, dx, dxs, f"candidate misses the graph by {eq_gap:.3g}")
    if not (dx < eps and dxs < eps):
        return BRResult(False, None, gap, dx, dxs, "candidate too far from p")
    return BRResult(True, wit, gap, dx, dxs)
