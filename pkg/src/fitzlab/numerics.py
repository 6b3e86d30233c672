"""Extended reals, pair points, regular grids and grid-sampled functions.

Everything else in the package computes on the types defined here.  Function
values live in ``(-inf, +inf]``: ``+inf`` is allowed (indicator functions,
restricted domains) while ``nan`` and ``-inf`` mark an improper function and are
rejected wherever values enter the system.

Grid nodes are enumerated row-major with axis 0 slowest, which is also the
C-order flattening of the ``values`` array of a :class:`GridFunction`.
"""

from __future__ import annotations

import csv
import enum
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

INF = math.inf

# largest total axis count for grid-based work (2n <= 4)
MAX_GRID_AXES = 4


class ImproperFunctionError(ValueError):
    """A function value was ``nan`` or ``-inf``, or no value was finite."""


class OutOfDomainError(ValueError):
    """A query point lies outside the box of a grid."""


class ConfigurationError(ValueError):
    """Grids or boxes that cannot be combined the way a caller asked."""


# ---------------------------------------------------------------------------
# extended reals


def ext_check(value: float) -> float:
    """Return ``value`` as a float in ``(-inf, +inf]`` or raise."""
    v = float(value)
    if math.isnan(v) or v == -INF:
        raise ImproperFunctionError(f"improper function value {v!r}")
    return v


def ext_array(values) -> np.ndarray:
    """Vectorized :func:`ext_check`; returns a float64 array."""
    arr = np.asarray(values, dtype=np.float64)
    bad = np.isnan(arr) | (arr == -INF)
    if bad.any():
        idx = np.unravel_index(int(np.argmax(bad)), arr.shape) if arr.ndim else ()
        raise ImproperFunctionError(f"improper function value {arr[idx]!r} at index {idx}")
    return arr


def ext_add(a: float, b: float) -> float:
    return ext_check(a) + ext_check(b)


def ext_scale(c: float, a: float) -> float:
    """``c * a`` for ``c >= 0`` with the convention ``0 * inf = 0``."""
    if c < 0:
        raise ValueError("negative scaling of an extended real")
    a = ext_check(a)
    if c == 0:
        return 0.0
    return c * a


def is_finite(a: float) -> bool:
    return ext_check(a) < INF


# ---------------------------------------------------------------------------
# points


def _as_vector(v) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=np.float64))
    if arr.ndim != 1:
        raise ValueError(f"expected a vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class PairPoint:
    """A point ``(x, x*)`` of ``X x X*`` (or ``(x*, x**)`` one level up)."""

    x: np.ndarray
    xstar: np.ndarray

    def __post_init__(self):
        x, xs = _as_vector(self.x), _as_vector(self.xstar)
        if x.shape != xs.shape:
            raise ValueError(f"dimension mismatch: {x.shape[0]} vs {xs.shape[0]}")
        if x.shape[0] < 1:
            raise ValueError("pair points need dimension >= 1")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xstar", xs)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.xstar])

    @classmethod
    def from_vector(cls, v) -> "PairPoint":
        v = _as_vector(v)
        if v.shape[0] % 2:
            raise ValueError("pair vectors have even length")
        n = v.shape[0] // 2
        return cls(v[:n], v[n:])

    def swapped(self) -> "PairPoint":
        return PairPoint(self.xstar, self.x)

    def __add__(self, other: "PairPoint") -> "PairPoint":
        return PairPoint(self.x + other.x, self.xstar + other.xstar)

    def __neg__(self) -> "PairPoint":
        return PairPoint(-self.x, -self.xstar)


def duality_product(p: PairPoint) -> float:
    """``<x, x*>`` for a pair point."""
    if p.x.shape != p.xstar.shape:
        raise ValueError("dimension mismatch")
    return float(np.dot(p.x, p.xstar))


def pair_products(points: np.ndarray) -> np.ndarray:
    """Row-wise duality product of stacked pair vectors of shape ``(m, 2n)``."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] % 2:
        raise ValueError(f"expected (m, 2n) pair vectors, got {pts.shape}")
    n = pts.shape[1] // 2
    return np.einsum("ij,ij->i", pts[:, :n], pts[:, n:])


def as_pair_vector(p, xstar=None) -> np.ndarray:
    if isinstance(p, PairPoint):
        return p.as_vector()
    if xstar is not None:
        return PairPoint(p, xstar).as_vector()
    return _as_vector(p)


# ---------------------------------------------------------------------------
# evaluable functions on X x X*


class PairFunction:
    """An extended-real function on ``X x X*`` (``R^n x R^n``).

    Subclasses implement :meth:`evaluate` on stacked pair vectors.  Functions
    whose domain sits inside a proper affine subspace report it through
    :meth:`affine_hull` so minimizers can search inside that subspace; a known
    point of the domain may be supplied as ``anchor``.
    """

    n: int = 1
    anchor: np.ndarray | None = None

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def affine_hull(self) -> tuple[np.ndarray, np.ndarray] | None:
        """``(point, basis)`` with basis columns spanning the domain's directions."""
        return None

    def support_points(self) -> np.ndarray | None:
        """Finitely many points whose convex hull is the domain, when known."""
        return None

    def piece_gradients(self, points: np.ndarray, k: int) -> np.ndarray | None:
        """For max-affine functions: gradients ``(m, k, 2n)`` of the ``k`` largest pieces, largest first."""
        return None

    def __call__(self, p, xstar=None) -> float:
        v = as_pair_vector(p, xstar)
        if v.shape[0] != 2 * self.n:
            raise ValueError(f"expected a pair vector of length {2 * self.n}")
        return float(self.evaluate(v[None, :])[0])


class CallablePairFunction(PairFunction):
    """Wraps ``fn(x, xstar) -> float`` as a :class:`PairFunction`."""

    def __init__(self, fn: Callable[[np.ndarray, np.ndarray], float], n: int = 1, label: str = ""):
        self.fn = fn
        self.n = n
        self.label = label

    def evaluate(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        n = self.n
        return ext_array([self.fn(row[:n], row[n:]) for row in pts])


def as_pair_function(h, n: int = 1) -> PairFunction:
    if isinstance(h, PairFunction):
        return h
    if callable(h):
        return CallablePairFunction(h, n)
    raise TypeError(f"cannot evaluate {h!r}")


class DualityProduct(PairFunction):
    """The pairing ``pi(x, x*) = <x, x*>`` itself."""

    def __init__(self, n: int = 1):
        self.n = n

    def evaluate(self, points):
        return pair_products(np.atleast_2d(points))


# ---------------------------------------------------------------------------
# grids


class Space(enum.Enum):
    PRIMAL = "PRIMAL"  # X x X*
    DUAL = "DUAL"  # X* x X**

    def flipped(self) -> "Space":
        return Space.DUAL if self is Space.PRIMAL else Space.PRIMAL


@dataclass(frozen=True)
class GridSpec:
    """Regular grid over an axis-aligned box, endpoints included."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    resolution: tuple[int, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        res = tuple(int(r) for r in np.atleast_1d(self.resolution))
        if len(res) == 1 and len(lo) > 1:
            res = res * len(lo)
        if not (len(lo) == len(hi) == len(res)) or not lo:
            raise ValueError("lo, hi and resolution must have the same nonzero length")
        for a, b in zip(lo, hi):
            if not (math.isfinite(a) and math.isfinite(b) and a < b):
                raise ValueError(f"invalid axis interval [{a}, {b}]")
        if any(r < 2 for r in res):
            raise ValueError("every axis needs at least 2 points")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "resolution", res)

    @classmethod
    def cube(cls, radius: float, resolution: int, ndim: int) -> "GridSpec":
        return cls((-radius,) * ndim, (radius,) * ndim, (resolution,) * ndim)

    @property
    def ndim(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.resolution

    @property
    def size(self) -> int:
        return int(np.prod(self.resolution))

    @property
    def spacing(self) -> np.ndarray:
        return np.array([(b - a) / (r - 1) for a, b, r in zip(self.lo, self.hi, self.resolution)])

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(a, b, r) for a, b, r in zip(self.lo, self.hi, self.resolution)]

    def nodes(self) -> np.ndarray:
        """All nodes as an ``(size, ndim)`` array in row-major order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def interior_mask(self) -> np.ndarray:
        mask = np.ones(self.shape, dtype=bool)
        for ax, r in enumerate(self.resolution):
            idx = [slice(None)] * self.ndim
            idx[ax] = 0
            mask[tuple(idx)] = False
            idx[ax] = r - 1
            mask[tuple(idx)] = False
        return mask

    def contains(self, p, tol: float = 0.0) -> bool:
        p = _as_vector(p)
        return bool(np.all(p >= np.array(self.lo) - tol) and np.all(p <= np.array(self.hi) + tol))

    def swapped(self) -> "GridSpec":
        """Exchange the first and second half of the axes (x-block <-> x*-block)."""
        if self.ndim % 2:
            raise ConfigurationError("block swap needs an even number of axes")
        k = self.ndim // 2
        perm = list(range(k, self.ndim)) + list(range(k))
        return GridSpec(
            tuple(self.lo[i] for i in perm),
            tuple(self.hi[i] for i in perm),
            tuple(self.resolution[i] for i in perm),
        )

    def shifted(self, offset) -> "GridSpec":
        off = _as_vector(offset)
        return GridSpec(tuple(np.array(self.lo) + off), tuple(np.array(self.hi) + off), self.resolution)

    def aligned_subgrid(self, lo, hi) -> "GridSpec":
        """The sub-lattice of nodes lying inside ``[lo, hi]`` on every axis."""
        lo = np.broadcast_to(np.asarray(lo, dtype=float), (self.ndim,))
        hi = np.broadcast_to(np.asarray(hi, dtype=float), (self.ndim,))
        new_lo, new_hi, new_res = [], [], []
        for ax, a, b in zip(self.axes(), lo, hi):
            tol = 1e-12 * max(1.0, float(np.max(np.abs(ax))))
            keep = ax[(ax >= a - tol) & (ax <= b + tol)]
            if keep.size < 2:
                raise ConfigurationError(f"sub-box [{a}, {b}] holds fewer than 2 nodes")
            new_lo.append(keep[0])
            new_hi.append(keep[-1])
            new_res.append(keep.size)
        return GridSpec(tuple(new_lo), tuple(new_hi), tuple(new_res))

    def to_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi), "resolution": list(self.resolution)}

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(tuple(d["lo"]), tuple(d["hi"]), tuple(d["resolution"]))


@dataclass
class GridFunction:
    """Values of an extended-real function on the nodes of a :class:`GridSpec`.

    ``suspect`` is filled in by the conjugation engines: ``True`` marks nodes
    whose supremum is only reached on the boundary of the source box.
    """

    spec: GridSpec
    values: np.ndarray
    tag: Space = Space.PRIMAL
    suspect: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        vals = ext_array(self.values)
        if vals.size != self.spec.size:
            raise ValueError(f"{vals.size} values for a grid of {self.spec.size} nodes")
        self.values = vals.reshape(self.spec.shape)
        if not np.isfinite(self.values).any():
            raise ImproperFunctionError("grid function has no finite value")
        if self.suspect is not None:
            self.suspect = np.asarray(self.suspect, dtype=bool).reshape(self.spec.shape)

    @property
    def finite_mask(self) -> np.ndarray:
        return np.isfinite(self.values)

    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def trusted_mask(self) -> np.ndarray:
        if self.suspect is None:
            return np.ones(self.spec.shape, dtype=bool)
        return ~self.suspect


def sample_on_grid(f, spec: GridSpec, tag: Space = Space.PRIMAL) -> GridFunction:
    """Evaluate ``f`` at every node of ``spec`` (row-major, axis 0 slowest).

    ``f`` is a :class:`PairFunction`, or any callable taking a node vector.
    """
    nodes = spec.nodes()
    if isinstance(f, PairFunction):
        vals = f.evaluate(nodes)
    elif hasattr(f, "evaluate"):
        vals = f.evaluate(nodes)
    else:
        vals = [f(node) for node in nodes]
    vals = np.asarray(vals, dtype=np.float64).reshape(-1)
    try:
        vals = ext_array(vals)
    except ImproperFunctionError as exc:
        raise ImproperFunctionError(f"sampling produced an improper value: {exc}") from None
    return GridFunction(spec, vals, tag)


def interpolate(g: GridFunction, p) -> float:
    """Multilinear interpolation of ``g`` at ``p``.

    A vertex of the enclosing cell with positive weight and value ``+inf``
    makes the result ``+inf``.  Nodes reproduce their stored value exactly.
    """
    p = _as_vector(p)
    spec = g.spec
    if p.shape[0] != spec.ndim:
        raise ValueError(f"query of dimension {p.shape[0]} on a {spec.ndim}-axis grid")
    if not spec.contains(p):
        raise OutOfDomainError(f"{p.tolist()} outside box {spec.lo}..{spec.hi}")
    base, frac = [], []
    for ax, v in zip(spec.axes(), p):
        i = int(np.searchsorted(ax, v, side="right")) - 1
        i = min(max(i, 0), ax.size - 2)
        t = (v - ax[i]) / (ax[i + 1] - ax[i])
        base.append(i)
        frac.append(min(max(t, 0.0), 1.0))
    total = 0.0
    for corner in itertools.product((0, 1), repeat=spec.ndim):
        w = 1.0
        for c, t in zip(corner, frac):
            w *= t if c else 1.0 - t
        if w == 0.0:
            continue
        v = g.values[tuple(b + c for b, c in zip(base, corner))]
        if v == INF:
            return INF
        total += w * v
    return float(total)


# ---------------------------------------------------------------------------
# serialization: JSON header + one-column CSV in node order


def _fmt(v: float) -> str:
    return "inf" if v == INF else repr(float(v))


def save_grid_function(g: GridFunction, stem: str | Path) -> tuple[Path, Path]:
    stem = Path(stem)
    header = {"spec": g.spec.to_dict(), "tag": g.tag.value, "order": "row-major, axis 0 slowest"}
    jpath, cpath = stem.with_suffix(".json"), stem.with_suffix(".csv")
    jpath.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    with cpath.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["value"])
        for v in g.flat():
            w.writerow([_fmt(v)])
    return jpath, cpath


def load_grid_function(stem: str | Path) -> GridFunction:
    stem = Path(stem)
    header = json.loads(stem.with_suffix(".json").read_text())
    with stem.with_suffix(".csv").open(newline="") as fh:
        rows = list(csv.reader(fh))
    vals = [float(r[0]) for r in rows[1:]]
    return GridFunction(GridSpec.from_dict(header["spec"]), np.array(vals), Space(header["tag"]))


def stack_pairs(points: Sequence[PairPoint]) -> np.ndarray:
    return np.array([p.as_vector() for p in points], dtype=np.float64)
