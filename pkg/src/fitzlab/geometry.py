"""Affine hulls, polytope membership and lower convex envelopes of point sets."""

from __future__ import annotations

import numpy as np
from scipy.spatial import ConvexHull

from .numerics import INF


class AffineFrame:
    """Orthonormal coordinates on the affine hull of a point set."""

    def __init__(self, center: np.ndarray, basis: np.ndarray):
        self.center = center
        self.basis = basis  # (d, k), orthonormal columns

    @classmethod
    def fit(cls, points: np.ndarray, rtol: float = 1e-10) -> "AffineFrame":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        center = pts.mean(axis=0)
        if pts.shape[0] == 1:
            return cls(center, np.zeros((pts.shape[1], 0)))
        _, sv, vt = np.linalg.svd(pts - center, full_matrices=False)
        k = int(np.sum(sv > rtol * max(1.0, sv[0])))
        return cls(center, vt[:k].T.copy())

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def reduce(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates in the frame and distance to the affine hull."""
        c = np.atleast_2d(points) - self.center
        u = c @ self.basis
        resid = np.linalg.norm(c - u @ self.basis.T, axis=1)
        return u, resid

    def lift(self, coords: np.ndarray) -> np.ndarray:
        return self.center + np.atleast_2d(coords) @ self.basis.T


class PolytopeDomain:
    """Convex hull of finitely many points, possibly lower-dimensional."""

    def __init__(self, points: np.ndarray):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.frame = AffineFrame.fit(self.points)
        self.scale = max(1.0, float(np.max(np.abs(self.points))))
        u, _ = self.frame.reduce(self.points)
        self._u = u
        k = self.frame.dim
        if k == 1:
            self._interval = (u[:, 0].min(), u[:, 0].max())
        elif k >= 2:
            self._eq = ConvexHull(u).equations

    def contains(self, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        tol = tol * self.scale
        u, resid = self.frame.reduce(points)
        inside = resid <= tol
        k = self.frame.dim
        if k == 1:
            lo, hi = self._interval
            inside &= (u[:, 0] >= lo - tol) & (u[:, 0] <= hi + tol)
        elif k >= 2:
            inside &= np.all(u @ self._eq[:, :-1].T + self._eq[:, -1] <= tol, axis=1)
        return inside


def _lower_chain(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((v, u))
    u, v = u[order], v[order]
    keep_u, keep_v = [], []
    for a, b in zip(u.tolist(), v.tolist()):
        if keep_u and a == keep_u[-1]:
            continue  # same abscissa, larger value
        while len(keep_u) >= 2:
            (a0, b0), (a1, b1) = (keep_u[-2], keep_v[-2]), (keep_u[-1], keep_v[-1])
            if (b1 - b0) * (a - a0) >= (b - b0) * (a1 - a0):
                keep_u.pop()
                keep_v.pop()
            else:
                break
        keep_u.append(a)
        keep_v.append(b)
    return np.array(keep_u), np.array(keep_v)


class LowerEnvelope:
    """Largest convex function below ``values`` at ``points``; ``+inf`` off their hull.

    On the hull this is the maximum of the planes carried by the lower facets
    of the lifted point set ``{(p_i, v_i)}``.
    """

    def __init__(self, points: np.ndarray, values: np.ndarray):
        self.domain = PolytopeDomain(points)
        self.values = np.asarray(values, dtype=float)
        frame = self.domain.frame
        u = self.domain._u
        k = frame.dim
        self._kind = "point"
        if k == 0:
            self._const = float(self.values.min())
            return
        lifted = np.column_stack([u, self.values])
        lframe = AffineFrame.fit(lifted)
        if lframe.dim == k:
            # values are affine on the hull
            design = np.column_stack([u, np.ones(u.shape[0])])
            self._affine = np.linalg.lstsq(design, self.values, rcond=None)[0]
            self._kind = "affine"
        elif k == 1:
            self._chain = _lower_chain(u[:, 0], self.values)
            self._kind = "chain"
        else:
            eq = ConvexHull(lifted).equations
            nv = eq[:, -2]
            norm = np.linalg.norm(eq[:, :-1], axis=1)
            lower = nv < -1e-9 * norm
            eq = eq[lower]
            # v >= -(n_u . u + offset) / n_v on every lower facet
            self._planes = -np.column_stack([eq[:, :-2], eq[:, -1]]) / eq[:, -2:-1]
            self._kind = "facets"

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        inside = self.domain.contains(pts)
        out = np.full(pts.shape[0], INF)
        if not inside.any():
            return out
        u, _ = self.domain.frame.reduce(pts[inside])
        if self._kind == "point":
            out[inside] = self._const
        elif self._kind == "affine":
            out[inside] = u @ self._affine[:-1] + self._affine[-1]
        elif self._kind == "chain":
            cu, cv = self._chain
            out[inside] = np.interp(u[:, 0], cu, cv)
        else:
            planes = self._planes
            vals = u @ planes[:, :-1].T + planes[:, -1]
            out[inside] = vals.max(axis=1)
        return out
