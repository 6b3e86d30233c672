"""Discrete Fenchel conjugation on regular grids.

Two engines compute the same quantity, the exact conjugate of the restriction
of a grid function to its nodes::

    g*(s) = max_{z node, g(z) < inf} <z, s> - g(z)

``conjugate_bruteforce`` takes the maximum directly.  ``conjugate_llt`` is the
linear-time Legendre transform: per axis, the lower convex hull of each grid
line is merged with the sorted dual axis, and the axes are processed one after
another because the max over a product grid splits into nested maxima.

Both engines flag dual nodes whose maximum is reached only on the boundary of
the primal box (``GridFunction.suspect``); values there are artifacts of
truncating the domain and should not be trusted.
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import PolytopeDomain
from .numerics import (
    INF,
    ConfigurationError,
    GridFunction,
    GridSpec,
    ImproperFunctionError,
    Space,
)

ENGINES = ("llt", "bruteforce")

# relative gap below which an interior maximizer counts as attaining the max
_TIE_RTOL = 1e-12
_CHUNK = 1 << 22


def _check_proper(g: GridFunction) -> None:
    if not np.isfinite(g.values).any():
        raise ImproperFunctionError("conjugate of a function with no finite value")


def _check_dims(g: GridFunction, dual_spec: GridSpec) -> None:
    if g.spec.ndim != dual_spec.ndim:
        raise ConfigurationError(f"primal grid has {g.spec.ndim} axes, dual grid {dual_spec.ndim}")


def _suspect_from(full: np.ndarray, interior: np.ndarray) -> np.ndarray:
    gap = full - interior
    scale = 1.0 + np.abs(np.where(np.isfinite(full), full, 0.0))
    return ~(gap <= _TIE_RTOL * scale)


def _bruteforce_max(z: np.ndarray, v: np.ndarray, s: np.ndarray) -> np.ndarray:
    out = np.full(s.shape[0], -INF)
    if z.shape[0] == 0:
        return out
    step = max(1, _CHUNK // z.shape[0])
    for k in range(0, s.shape[0], step):
        block = s[k:k + step] @ z.T
        block -= v
        out[k:k + step] = block.max(axis=1)
    return out


def conjugate_bruteforce(g: GridFunction, dual_spec: GridSpec, trust: bool = True) -> GridFunction:
    """Conjugate by direct maximization over all finite primal nodes."""
    _check_proper(g)
    _check_dims(g, dual_spec)
    finite = g.finite_mask.ravel()
    z = g.spec.nodes()
    v = g.flat()
    s = dual_spec.nodes()
    full = _bruteforce_max(z[finite], v[finite], s)
    suspect = None
    if trust:
        inner = finite & g.spec.interior_mask().ravel()
        suspect = _suspect_from(full, _bruteforce_max(z[inner], v[inner], s))
    return GridFunction(dual_spec, full, g.tag.flipped(), suspect)


def _lower_hull(z: list, w: list) -> list:
    """Indices of the lower convex hull of points sorted by ``z``."""
    hull: list[int] = []
    for i in range(len(z)):
        zi, wi = z[i], w[i]
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b when it lies on or above the chord a -> i
            if (w[b] - w[a]) * (zi - z[a]) >= (wi - w[a]) * (z[b] - z[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def _maxplus_line(z: np.ndarray, u: np.ndarray, s: np.ndarray) -> np.ndarray:
    """``max_i s_k z_i + u_i`` for sorted ``z`` and sorted ``s``; ``u = -inf`` is skipped."""
    keep = u > -INF
    if not keep.any():
        return np.full(s.shape[0], -INF)
    zk, wk = z[keep], -u[keep]
    idx = _lower_hull(zk.tolist(), wk.tolist())
    hz, hw = zk[idx], wk[idx]
    if len(idx) == 1:
        return s * hz[0] - hw[0]
    slopes = np.diff(hw) / np.diff(hz)
    j = np.searchsorted(slopes, s, side="left")
    return s * hz[j] - hw[j]


def _llt_values(values: np.ndarray, spec: GridSpec, dual_spec: GridSpec) -> np.ndarray:
    u = np.where(np.isfinite(values), -values, -INF)
    zs, ss = spec.axes(), dual_spec.axes()
    for ax in reversed(range(spec.ndim)):
        moved = np.moveaxis(u, ax, -1)
        lead = moved.shape[:-1]
        lines = moved.reshape(-1, moved.shape[-1])
        out = np.empty((lines.shape[0], ss[ax].size))
        for i, line in enumerate(lines):
            out[i] = _maxplus_line(zs[ax], line, ss[ax])
        u = np.moveaxis(out.reshape(lead + (ss[ax].size,)), -1, ax)
    return u


def conjugate_llt(g: GridFunction, dual_spec: GridSpec, trust: bool = True) -> GridFunction:
    """Conjugate with the axis-by-axis linear-time Legendre transform.

    ``+inf`` values are dropped from every line before its hull is built.
    """
    _check_proper(g)
    _check_dims(g, dual_spec)
    full = _llt_values(g.values, g.spec, dual_spec)
    suspect = None
    if trust:
        inner_vals = np.where(g.spec.interior_mask(), g.values, INF)
        if np.isfinite(inner_vals).any():
            inner = _llt_values(inner_vals, g.spec, dual_spec)
        else:
            inner = np.full(dual_spec.shape, -INF)
        suspect = _suspect_from(full, inner)
    return GridFunction(dual_spec, full, g.tag.flipped(), suspect)


def conjugate(g: GridFunction, dual_spec: GridSpec, engine: str = "llt", trust: bool = True) -> GridFunction:
    if engine == "llt":
        return conjugate_llt(g, dual_spec, trust)
    if engine == "bruteforce":
        return conjugate_bruteforce(g, dual_spec, trust)
    raise ValueError(f"unknown engine {engine!r}; expected one of {ENGINES}")


# ---------------------------------------------------------------------------
# biconjugation


def slope_bound(g: GridFunction) -> np.ndarray:
    """Per-axis bound on node-to-node slopes, rounded up to a power of two.

    Rounding keeps the default dual grid of ``g`` and of its biconjugate the
    same in the usual case, which makes :func:`biconjugate` idempotent.
    """
    bounds = []
    for ax, h in enumerate(g.spec.spacing):
        v = np.moveaxis(g.values, ax, 0)
        ok = np.isfinite(v[1:]) & np.isfinite(v[:-1])
        d = v[1:][ok] - v[:-1][ok]
        m = float(np.max(np.abs(d))) / h if d.size else 0.0
        bounds.append(2.0 ** math.ceil(math.log2(max(m, 1.0))))
    return np.array(bounds)


def default_dual_spec(g: GridFunction, refine: int = 4, max_nodes: int = 1 << 20) -> GridSpec:
    """Symmetric dual box covering the slopes of ``g`` on a refined grid."""
    bound = slope_bound(g)
    per_axis = int(max_nodes ** (1.0 / g.spec.ndim))
    res = []
    for r in g.spec.resolution:
        k = refine * (r - 1) + 1
        k = min(k, per_axis)
        res.append(k if k % 2 else k - 1)  # odd count keeps 0 on the dual grid
    return GridSpec(tuple(-bound), tuple(bound), tuple(max(3, k) for k in res))


def biconjugate(g: GridFunction, dual_spec: GridSpec | None = None, engine: str = "llt") -> GridFunction:
    """Closed convex hull of ``g`` on its own grid: conjugate twice.

    Nodes outside the convex hull of the finite support of ``g`` are set to
    ``+inf``; the max-affine values there are box artifacts.
    """
    if g.tag is not Space.PRIMAL:
        raise ValueError("biconjugate expects a PRIMAL grid function")
    _check_proper(g)
    dual_spec = dual_spec or default_dual_spec(g)
    first = conjugate(g, dual_spec, engine, trust=False)
    back = conjugate(first, g.spec, engine, trust=False)
    vals = back.values.copy()
    finite = g.finite_mask
    if not finite.all():
        nodes = g.spec.nodes()
        inside = PolytopeDomain(nodes[finite.ravel()]).contains(nodes).reshape(g.spec.shape)
        vals[~inside] = INF
    return GridFunction(g.spec, vals, Space.PRIMAL)


def j_transform(h: GridFunction, out_spec: GridSpec | None = None, engine: str = "bruteforce") -> GridFunction:
    """``(J h)(x, x*) = h*(x*, x)`` on the grid ``out_spec`` (default: h's grid)."""
    if h.tag is not Space.PRIMAL:
        raise ValueError("J operates on PRIMAL grid functions")
    out_spec = out_spec or h.spec
    if out_spec.ndim % 2 or h.spec.ndim != out_spec.ndim:
        raise ConfigurationError("J needs matching grids with an even number of axes")
    k = out_spec.ndim // 2
    conj = conjugate(h, out_spec.swapped(), engine)
    perm = list(range(k, 2 * k)) + list(range(k))
    vals = np.transpose(conj.values, perm)
    suspect = np.transpose(conj.suspect, perm) if conj.suspect is not None else None
    return GridFunction(out_spec, vals, Space.PRIMAL, suspect)
