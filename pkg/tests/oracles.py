"""Independent reference computations used by the tests.

None of these call into the code under test beyond plain data containers.
"""

import itertools

import numpy as np
from scipy.optimize import linprog


def phi_identity(x, xs):
    """Fitzpatrick function of the identity on R: (x + x*)^2 / 4."""
    return (np.asarray(x) + np.asarray(xs)) ** 2 / 4.0


def fitzpatrick_loop(pairs, p):
    """max over graph points, written as a plain loop."""
    n = len(p) // 2
    best = -np.inf
    for q in pairs:
        y, ys = q[:n], q[n:]
        v = float(np.dot(p[:n], ys) + np.dot(y, p[n:]) - np.dot(y, ys))
        best = max(best, v)
    return best


def s_function_linprog(pairs, p):
    """clconv(pi + delta_T)(p) via scipy's HiGHS LP; +inf when infeasible."""
    P = np.asarray(pairs, dtype=float)
    n = P.shape[1] // 2
    c = np.einsum("ij,ij->i", P[:, :n], P[:, n:])
    A = np.vstack([P.T, np.ones(P.shape[0])])
    b = np.concatenate([np.asarray(p, dtype=float), [1.0]])
    res = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    return np.inf if res.status == 2 else float(res.fun)


def conjugate_loop(nodes, values, duals):
    """Discrete conjugate by explicit double loop (skips +inf values)."""
    out = []
    for s in duals:
        best = -np.inf
        for z, v in zip(nodes, values):
            if np.isfinite(v):
                best = max(best, float(np.dot(z, s)) - v)
        out.append(best)
    return np.array(out)


def grid_nodes(lo, hi, res):
    axes = [np.linspace(a, b, r) for a, b, r in zip(lo, hi, res)]
    return np.array(list(itertools.product(*axes)))


def ni_loop(pairs, sample):
    """min over the graph of <x** - y, x* - y*> for one sample (x*, x**)."""
    n = len(sample) // 2
    xs, xss = sample[:n], sample[n:]
    return min(float(np.dot(xss - q[:n], xs - q[n:])) for q in pairs)


def aux_polyhedral_qp(pairs, t, w_phi):
    """Exact auxiliary infimum for w*phi_T + (1 - w)*S_T as a convex QP (cvxpy).

    Variables: barycentric weights on the graph points (the domain of S_T),
    or a free point when ``w_phi == 1`` since phi_T is finite everywhere.
    """
    import cvxpy as cp

    P = np.asarray(pairs, dtype=float)
    t = np.asarray(t, dtype=float)
    n = P.shape[1] // 2
    prods = np.einsum("ij,ij->i", P[:, :n], P[:, n:])
    if w_phi == 1:
        lam = None
        u = cp.Variable(2 * n)
    else:
        lam = cp.Variable(P.shape[0], nonneg=True)
        u = P.T @ lam
    z = u - t
    bracket = z[:n] @ t[n:] + t[:n] @ z[n:] + float(t[:n] @ t[n:])
    phi = cp.max(P[:, n:] @ u[:n] + P[:, :n] @ u[n:] - prods)
    obj = w_phi * phi - bracket + 0.5 * cp.sum_squares(z)
    cons = []
    if lam is not None:
        obj = obj + (1 - w_phi) * (prods @ lam)
        cons = [cp.sum(lam) == 1]
    prob = cp.Problem(cp.Minimize(obj), cons)
    prob.solve(solver=cp.CLARABEL)
    return float(prob.value)


def aux_grid_1d(h_of, t, lo=-4.0, hi=4.0, step=1e-3):
    """Brute-force aux infimum for h(x, x*) on R x R over a fine 2-D grid, coarse-to-fine."""
    t = np.asarray(t, dtype=float)
    cx, cs, half = 0.0, 0.0, (hi - lo) / 2
    best = np.inf
    for _ in range(6):
        xs = np.linspace(cx - half, cx + half, 401)
        ss = np.linspace(cs - half, cs + half, 401)
        X, S = np.meshgrid(xs, ss, indexing="ij")
        val = h_of(X + t[0], S + t[1]) - (X * t[1] + t[0] * S + t[0] * t[1]) + 0.5 * (X**2 + S**2)
        k = np.unravel_index(np.argmin(val), val.shape)
        best = min(best, float(val[k]))
        cx, cs = xs[k[0]], ss[k[1]]
        half = max(half / 10, step)
    return best
