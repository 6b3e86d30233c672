"""Batched derivative-free minimization of convex extended-real functions.

Many independent problems share one objective ``F(X, ids)`` that maps a stack
of points ``(m, r)`` belonging to problems ``ids`` to values ``(m,)``.  Line searches run for all problems at
once: bracket by doubling, then golden-section.  Values may be ``+inf``
outside a convex domain; the bracket logic keeps the last finite point in view.
Every triple of probes along a line is chord-tested, so a nonconvex objective
is reported instead of silently producing a local minimum.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_MAX_EXPAND = 80


class NonConvexityError(RuntimeError):
    def __init__(self, message: str, point: np.ndarray):
        super().__init__(message)
        self.point = point


def _chord_check(x0, f0, x1, f1, x2, f2, where, base, dirs):
    """Raise if ``f1`` lies above the chord from ``(x0, f0)`` to ``(x2, f2)``."""
    ok = np.isfinite(f0) & np.isfinite(f1) & np.isfinite(f2) & (x2 > x0)
    if not ok.any():
        return
    w = np.where(ok, (x1 - x0) / np.where(ok, x2 - x0, 1.0), 0.0)
    chord = np.where(ok, (1 - w) * np.where(ok, f0, 0.0) + w * np.where(ok, f2, 0.0), 0.0)
    f1s = np.where(ok, f1, 0.0)
    bad = ok & (f1s > chord + 1e-9 * (1.0 + np.abs(chord) + np.abs(f1s)))
    if bad.any():
        i = int(np.argmax(bad))
        k = where[i]
        pt = base[k] + x1[i] * dirs[k]
        raise NonConvexityError(
            f"objective rises above a chord along a line (excess {f1s[i] - chord[i]:.3g})", pt
        )


def line_search(F, Z, fZ, D, step0, ids=None, tol: float = 1e-9):
    """Minimize ``F(Z_i + a D_i)`` over ``a`` for every row ``i`` (problem ``ids[i]``).

    ``D`` rows must be unit vectors (zero rows are skipped).  Returns the step
    ``a`` and the new value; the new value never exceeds ``fZ``.
    """
    m = Z.shape[0]
    D = np.broadcast_to(D, Z.shape)
    idx = np.arange(m)
    ids = idx if ids is None else np.asarray(ids)
    L = np.maximum(np.asarray(step0, dtype=float), 1e-6)

    def at(rows, alpha):
        return F(Z[rows] + alpha[:, None] * D[rows], ids[rows])

    fp = at(idx, L)
    fm = at(idx, -L)
    _chord_check(-L, fm, np.zeros(m), fZ, L, fp, idx, Z, D)
    best_a, best_f = np.zeros(m), fZ.copy()
    for a, fa in ((L, fp), (-L, fm)):
        better = fa < best_f
        best_a[better], best_f[better] = a[better], fa[better]

    # bracket [a, b] with known end values; default [-L, L]
    a, b, fa, fb = -L.copy(), L.copy(), fm.copy(), fp.copy()
    sign = np.where(fp < fZ, 1.0, np.where(fm < fZ, -1.0, 0.0))
    grow = np.where(sign != 0)[0]
    if grow.size:
        lo = np.zeros(grow.size)
        flo = fZ[grow]
        mid = L[grow].copy()
        fmid = np.where(sign[grow] > 0, fp[grow], fm[grow])
        active = np.ones(grow.size, dtype=bool)
        hi, fhi = mid.copy(), fmid.copy()
        for _ in range(_MAX_EXPAND):
            if not active.any():
                break
            act = np.where(active)[0]
            rows = grow[act]
            probe = 2.0 * mid[act]
            fprobe = at(rows, sign[rows] * probe)
            _chord_check(lo[act], flo[act], mid[act], fmid[act], probe, fprobe, rows, Z, D * sign[:, None])
            hi[act], fhi[act] = probe, fprobe
            keep = fprobe < fmid[act]
            cont = act[keep]
            lo[cont], flo[cont] = mid[cont], fmid[cont]
            mid[cont], fmid[cont] = probe[keep], fprobe[keep]
            active[act[~keep]] = False
            better = fprobe < best_f[rows]
            best_a[rows[better]] = sign[rows[better]] * probe[better]
            best_f[rows[better]] = fprobe[better]
        if active.any():
            raise RuntimeError("line search failed to bracket a minimum (unbounded below?)")
        s = sign[grow]
        a[grow] = np.where(s > 0, lo, -hi)
        b[grow] = np.where(s > 0, hi, -lo)
        fa[grow] = np.where(s > 0, flo, fhi)
        fb[grow] = np.where(s > 0, fhi, flo)

    active = (b - a) > tol
    while active.any():
        act = np.where(active)[0]
        width = b[act] - a[act]
        c = b[act] - INVPHI * width
        e = a[act] + INVPHI * width
        fc, fe = at(act, c), at(act, e)
        _chord_check(a[act], fa[act], c, fc, b[act], fb[act], act, Z, D)
        _chord_check(a[act], fa[act], e, fe, b[act], fb[act], act, Z, D)
        _chord_check(c, fc, e, fe, b[act], fb[act], act, Z, D)
        for pt, fpt in ((c, fc), (e, fe)):
            better = fpt < best_f[act]
            best_a[act[better]], best_f[act[better]] = pt[better], fpt[better]
        left = fc < fe
        right = fc > fe
        tie = ~left & ~right
        both_inf = tie & ~np.isfinite(fc)
        known = best_a[act]
        na, nb = a[act].copy(), b[act].copy()
        nfa, nfb = fa[act].copy(), fb[act].copy()
        nb[left], nfb[left] = e[left], fe[left]
        na[right], nfa[right] = c[right], fc[right]
        finite_tie = tie & ~both_inf
        na[finite_tie], nfa[finite_tie] = c[finite_tie], fc[finite_tie]
        nb[finite_tie], nfb[finite_tie] = e[finite_tie], fe[finite_tie]
        # both probes outside the domain: shrink toward the best finite point
        to_left = both_inf & (known <= c)
        to_right = both_inf & (known >= e)
        between = both_inf & ~to_left & ~to_right
        nb[to_left], nfb[to_left] = c[to_left], fc[to_left]
        na[to_right], nfa[to_right] = e[to_right], fe[to_right]
        na[between], nfa[between] = c[between], fc[between]
        nb[between], nfb[between] = e[between], fe[between]
        a[act], b[act], fa[act], fb[act] = na, nb, nfa, nfb
        active = (b - a) > tol
    mid = 0.5 * (a + b)
    fmid = at(idx, mid)
    better = fmid < best_f
    best_a[better], best_f[better] = mid[better], fmid[better]
    return best_a, best_f


def default_directions(r: int) -> np.ndarray:
    """Coordinate axes plus the normalized pairwise diagonals ``e_i +- e_j``."""
    dirs = list(np.eye(r))
    for i, j in itertools.combinations(range(r), 2):
        for s in (1.0, -1.0):
            d = np.zeros(r)
            d[i], d[j] = 1.0, s
            dirs.append(d / math.sqrt(2.0))
    return np.array(dirs)


@dataclass
class DescentResult:
    x: np.ndarray
    value: np.ndarray
    sweeps: int
    converged: np.ndarray


def coordinate_descent(
    F,
    X0,
    directions: np.ndarray | None = None,
    tol: float = 1e-8,
    max_sweeps: int = 400,
    step0: float = 0.5,
    extra_directions=None,
    ftol: float = 1e-13,
) -> DescentResult:
    """Cyclic line searches along fixed directions, plus one pattern move per sweep.

    A problem stops once a whole sweep moves it by less than ``tol``, or
    lowers its value by no more than ``ftol * (1 + |f|)`` (rounding noise
    around a kink can otherwise keep a converged iterate jittering).  The
    extra pattern direction (net displacement of the last sweep) lets the
    method follow valleys and kinks that no fixed direction is aligned with.
    ``extra_directions(X, ids)`` may supply point-dependent directions
    ``(m, K, r)`` (unit or zero rows), searched after the fixed ones.
    """
    X = np.array(X0, dtype=float, copy=True)
    m, r = X.shape
    dirs = default_directions(r) if directions is None else np.asarray(directions, dtype=float)
    fX = F(X, np.arange(m))
    if not np.all(np.isfinite(fX)):
        raise ValueError("coordinate descent needs finite starting values")
    steps = np.full((m, len(dirs)), step0)
    pattern_step = np.full(m, step0)
    done = np.zeros(m, dtype=bool)
    sweeps = 0
    while not done.all() and sweeps < max_sweeps:
        sweeps += 1
        act = np.where(~done)[0]
        start = X[act].copy()
        f_start = fX[act].copy()
        moved = np.zeros(act.size)
        for k, d in enumerate(dirs):
            alpha, fnew = line_search(F, X[act], fX[act], d, 4.0 * np.abs(steps[act, k]), act)
            X[act] += alpha[:, None] * d
            fX[act] = fnew
            steps[act, k] = alpha
            moved = np.maximum(moved, np.abs(alpha))
        if extra_directions is not None:
            E = extra_directions(X[act], act)
            for k in range(E.shape[1]):
                D = E[:, k, :]
                alpha, fnew = line_search(F, X[act], fX[act], D, np.full(act.size, 4.0 * step0), act)
                X[act] += alpha[:, None] * D
                fX[act] = fnew
                moved = np.maximum(moved, np.abs(alpha))
        disp = X[act] - start
        norm = np.linalg.norm(disp, axis=1)
        use = norm > tol
        if use.any():
            rows = act[use]
            D = disp[use] / norm[use, None]
            alpha, fnew = line_search(F, X[rows], fX[rows], D, 4.0 * np.abs(pattern_step[rows]), rows)
            X[rows] += alpha[:, None] * D
            fX[rows] = fnew
            pattern_step[rows] = alpha
            moved[use] = np.maximum(moved[use], np.abs(alpha))
        stalled = f_start - fX[act] <= ftol * (1.0 + np.abs(f_start))
        done[act[(moved < tol) | stalled]] = True
    return DescentResult(X, fX, sweeps, done)


def minimize_scalar_batch(F, lo, hi, tol: float = 1e-12):
    """Golden-section minimization of ``F(t)`` (vectorized) on ``[lo_i, hi_i]``."""
    a = np.array(lo, dtype=float, copy=True)
    b = np.array(hi, dtype=float, copy=True)
    c = b - INVPHI * (b - a)
    e = a + INVPHI * (b - a)
    fc, fe = F(c), F(e)
    while np.any(b - a > tol * (1.0 + np.abs(a) + np.abs(b))):
        left = fc < fe
        b = np.where(left, e, b)
        a = np.where(left, a, c)
        newc = b - INVPHI * (b - a)
        newe = a + INVPHI * (b - a)
        # reuse the surviving probe
        c_next = np.where(left, newc, e)
        e_next = np.where(left, c, newe)
        fc_next = np.where(left, np.nan, fe)
        fe_next = np.where(left, fc, np.nan)
        need_c, need_e = np.isnan(fc_next), np.isnan(fe_next)
        if need_c.any():
            fc_next[need_c] = F(c_next)[need_c]
        if need_e.any():
            fe_next[need_e] = F(e_next)[need_e]
        c, e, fc, fe = c_next, e_next, fc_next, fe_next
    return 0.5 * (a + b)
