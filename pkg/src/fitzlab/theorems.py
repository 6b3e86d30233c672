"""Equivalence suites for the two characterization theorems and the proof identities.

Each suite computes every condition independently and then compares the
verdicts.  INCONCLUSIVE is a third verdict that is never coerced into HOLDS
or FAILS: an equivalence with an inconclusive side is itself inconclusive.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .conditions import (
    EXACT_TOL,
    SOLVER_TOL,
    ConditionId,
    ConditionReport,
    Verdict,
    check_aux_condition,
    check_conj_above_pi,
    check_h_above_pi,
    check_ni,
    grid_tolerance,
    jsonable,
    ni_values,
    translate,
    verdict_all,
    verdict_any,
)
from .models import FunctionModel
from .numerics import INF, GridSpec, PairFunction, Space, pair_products, sample_on_grid
from .operators import OperatorGraph, family_members
from .transform import conjugate


class Agreement(enum.Enum):
    AGREE = "AGREE"
    DISAGREE = "DISAGREE"
    INCONCLUSIVE = "INCONCLUSIVE"


def agreement_of(verdicts) -> Agreement:
    conclusive = {v for v in verdicts if v is not Verdict.INCONCLUSIVE}
    if len(conclusive) > 1:
        return Agreement.DISAGREE
    if Verdict.INCONCLUSIVE in verdicts:
        return Agreement.INCONCLUSIVE
    return Agreement.AGREE


@dataclass
class GridSetup:
    """Grids used by one scenario.

    ``primal`` carries the sampled ``h`` for conjugation, ``region`` the nodes
    where ``h >= pi`` is tested and ``dual`` the nodes where ``h* >= pi*`` is.
    """

    primal: GridSpec
    region: GridSpec
    dual: GridSpec

    def to_dict(self) -> dict:
        return {"primal": self.primal.to_dict(), "region": self.region.to_dict(), "dual": self.dual.to_dict()}


@dataclass
class EquivalenceReport:
    scenario: str
    suite: str
    items: dict
    agreement: Agreement
    conditions: dict = field(default_factory=dict)
    disagreement: str = ""
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return jsonable({
            "scenario": self.scenario,
            "suite": self.suite,
            "items": {k: v.value for k, v in self.items.items()},
            "agreement": self.agreement.value,
            "disagreement": self.disagreement,
            "conditions": self.conditions,
            "extras": self.extras,
        })


def _describe(items: dict) -> str:
    return ", ".join(f"{k}={v.value}" for k, v in items.items())


def _report(scenario, suite, items, conditions, extras) -> EquivalenceReport:
    agr = agreement_of(list(items.values()))
    text = _describe(items) if agr is Agreement.DISAGREE else ""
    return EquivalenceReport(scenario, suite, items, agr, conditions, text, extras)


# ---------------------------------------------------------------------------
# Theorem 1


def theorem1_suite(
    h: PairFunction,
    setup: GridSetup,
    translations: np.ndarray,
    label: str = "",
    slack: float = 0.0,
    engine: str = "bruteforce",
    exact_tol: float = EXACT_TOL,
    solver_tol: float = SOLVER_TOL,
) -> EquivalenceReport:
    """A: ``h >= pi`` and ``h* >= pi*``.  B: the auxiliary infimum vanishes at every translation.

    ``slack`` widens every tolerance when ``h`` is built from a sampled
    operator (see :func:`operators.sampling_tolerance`); the conjugate check
    adds it to the grid tolerance.
    """
    above = check_h_above_pi(h, setup.region, exact_tol + slack)
    grid = sample_on_grid(h, setup.primal, Space.PRIMAL)
    conj = check_conj_above_pi(grid, setup.dual, grid_tolerance(grid) + slack, engine)
    aux = check_aux_condition(h, translations, solver_tol + slack)
    items = {"A": verdict_all([above.verdict, conj.verdict]), "B": aux.verdict}
    conditions = {"h_ge_pi": above.to_dict(), "hstar_ge_pistar": conj.to_dict(), "aux": aux.to_dict()}
    return _report(label, "theorem1", items, conditions, {"grids": setup.to_dict(), "slack": slack})


# ---------------------------------------------------------------------------
# Theorem 2


def eq20_values(T: OperatorGraph, samples) -> np.ndarray:
    """``sup_T <y, x*> + <y*, x**> - <y, y*>`` minus ``<x*, x**>`` per sample ``(x*, x**)``."""
    S = np.atleast_2d(np.asarray(samples, dtype=float))
    n = T.n
    sup = (S[:, :n] @ T.xs.T + S[:, n:] @ T.xstars.T - T.products()).max(axis=1)
    return sup - pair_products(S)


@dataclass
class Eq20Report:
    samples: int
    matches: int
    eq20_verdict: Verdict
    ni_verdict: Verdict
    max_identity_residual: float

    @property
    def all_match(self) -> bool:
        return self.matches == self.samples

    def to_dict(self) -> dict:
        return jsonable(self.__dict__ | {"all_match": self.all_match})


def eq20_check(T: OperatorGraph, dual_samples, tol: float = EXACT_TOL) -> Eq20Report:
    """Compare the supremum form with the NI form sample by sample.

    The supremum form holds at a sample when its gap is ``>= -tol``; the NI
    form when the graph minimum is ``<= tol``.  Both are computed separately.
    """
    S = np.atleast_2d(np.asarray(dual_samples, dtype=float))
    gap = eq20_values(T, S)
    ni, _ = ni_values(T, S)
    eq_ok = gap >= -tol
    ni_ok = ni <= tol
    matches = int(np.sum(eq_ok == ni_ok))
    return Eq20Report(
        S.shape[0],
        matches,
        Verdict.HOLDS if eq_ok.all() else Verdict.FAILS,
        Verdict.HOLDS if ni_ok.all() else Verdict.FAILS,
        float(np.max(np.abs(gap + ni))),
    )


def check_represents(h: PairFunction, T: OperatorGraph, tol: float = EXACT_TOL) -> ConditionReport:
    """``h = pi`` on every point of ``T``."""
    gap = h.evaluate(T.pairs) - T.products()
    k = int(np.argmax(np.abs(gap)))
    worst = float(abs(gap[k]))
    verdict = Verdict.HOLDS if worst <= tol else Verdict.FAILS
    return ConditionReport(ConditionId.REPRESENTS, verdict, worst, T.pairs[k].tolist(), tol, T.size)


def theorem2_suite(
    T: OperatorGraph,
    f: FunctionModel | None,
    setup: GridSetup,
    translations: np.ndarray,
    dual_samples: np.ndarray,
    label: str = "",
    slack: float = 0.0,
    engine: str = "bruteforce",
    exact_tol: float = EXACT_TOL,
    solver_tol: float = SOLVER_TOL,
) -> EquivalenceReport:
    """Items 1-4 over the generated family of ``T``; item 5 is NI on ``T`` itself.

    A member passes items 1/2 when ``h >= pi`` on the region and ``h* >= pi*``
    on the dual grid; items 3/4 when its auxiliary infimum vanishes.  For a
    graph sampled from a maximal operator pass
    ``slack = sampling_tolerance(T)``; finite graphs use exact tolerances.
    """
    members = family_members(T, f)
    conditions: dict = {}
    ma, aux = [], []
    for m in members:
        above = check_h_above_pi(m.h, setup.region, exact_tol + slack)
        grid = sample_on_grid(m.h, setup.primal)
        conj = check_conj_above_pi(grid, setup.dual, grid_tolerance(grid) + slack, engine)
        ax = check_aux_condition(m.h, translations, solver_tol + slack)
        rep = check_represents(m.h, T, exact_tol)
        ma.append(verdict_all([above.verdict, conj.verdict]))
        aux.append(ax.verdict)
        conditions[m.label] = {
            "h_ge_pi": above.to_dict(),
            "hstar_ge_pistar": conj.to_dict(),
            "aux": ax.to_dict(),
            "represents": rep.to_dict(),
        }
    ni = check_ni(T, dual_samples, exact_tol + slack)
    conditions["ni"] = ni.to_dict()
    items = {
        "item1": verdict_any(ma),
        "item2": verdict_all(ma),
        "item3": verdict_any(aux),
        "item4": verdict_all(aux),
        "item5": ni.verdict,
    }
    eq20 = eq20_check(T, dual_samples, exact_tol + slack)
    extras = {
        "graph_size": T.size,
        "members": [m.label for m in members],
        "sampling_tolerance": slack,
        "eq20": eq20.to_dict(),
        "grids": setup.to_dict(),
    }
    return _report(label, "theorem2", items, conditions, extras)


# ---------------------------------------------------------------------------
# proof identities


@dataclass
class IdentityResult:
    name: str
    instances: int
    max_error: float
    tolerance: float
    witness: list | None

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance

    def to_dict(self) -> dict:
        return jsonable(self.__dict__ | {"passed": self.passed})


def _same(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Absolute difference, zero where both sides are ``+inf``."""
    both = np.isinf(a) & np.isinf(b) & (np.sign(a) == np.sign(b))
    return np.where(both, 0.0, np.abs(np.where(both, 0.0, a) - np.where(both, 0.0, b)))


def _random_points(h: PairFunction, rng, count: int, radius: float) -> np.ndarray:
    """Random pair vectors; inside the affine hull of ``dom h`` when it has one."""
    d = 2 * h.n
    hull = h.affine_hull()
    if hull is None:
        return rng.uniform(-radius, radius, size=(count, d))
    a, B = hull
    return a + rng.uniform(-radius, radius, size=(count, B.shape[1])) @ B.T


def translation_identity(functions, rng, instances: int = 50, radius: float = 1.5, rtol: float = 1e-12) -> IdentityResult:
    """``h(z, z*) - <z, z*> = h_(z, z*)(0, 0)``."""
    worst, wit = 0.0, None
    for i in range(instances):
        h = functions[i % len(functions)]
        z = _random_points(h, rng, 1, radius)[0]
        lhs = h.evaluate(z[None, :]) - pair_products(z[None, :])
        rhs = translate(h, z).evaluate(np.zeros((1, z.size)))
        err = float(_same(lhs, rhs)[0]) / max(1.0, float(np.abs(lhs[0])) if np.isfinite(lhs[0]) else 1.0)
        if err > worst or wit is None:
            worst, wit = max(worst, err), z.tolist()
    return IdentityResult("translation_at_origin", instances, worst, rtol, wit)


def group_action_identity(functions, rng, instances: int = 50, radius: float = 1.5, rtol: float = 1e-12) -> IdentityResult:
    """``(h_t0)_t1 = h_(t0 + t1)`` at a random query."""
    worst, wit = 0.0, None
    for i in range(instances):
        h = functions[i % len(functions)]
        d = 2 * h.n
        t0, t1 = rng.uniform(-radius, radius, size=(2, d))
        q = _random_points(h, rng, 1, radius)[0] - t0 - t1
        lhs = translate(translate(h, t0), t1).evaluate(q[None, :])
        rhs = translate(h, t0 + t1).evaluate(q[None, :])
        scale = max(1.0, float(np.abs(rhs[0])) if np.isfinite(rhs[0]) else 1.0)
        err = float(_same(lhs, rhs)[0]) / scale
        if err > worst or wit is None:
            worst, wit = max(worst, err), np.concatenate([t0, t1, q]).tolist()
    return IdentityResult("group_action", instances, worst, rtol, wit)


def _swap(t: np.ndarray) -> np.ndarray:
    k = t.size // 2
    return np.concatenate([t[k:], t[:k]])


def conjugation_identity(
    functions,
    grids: list[tuple[GridSpec, GridSpec]],
    rng,
    instances: int = 50,
    radius: float = 1.0,
    engine: str = "llt",
) -> IdentityResult:
    """``(h_t)* = (h*)_(swap t)`` through the grid engine.

    ``h_t`` is sampled on the box ``B`` and ``h`` on ``B + t``, so the two
    discrete suprema run over corresponding nodes; ``h*`` is taken on the dual
    grid shifted by ``swap(t)``.  The tolerance is the grid tolerance of
    ``h_t`` on ``B``.
    """
    worst, wit, tol_used = 0.0, None, INF
    for i in range(instances):
        h = functions[i % len(functions)]
        box, dual = grids[i % len(grids)]
        t = rng.uniform(-radius, radius, size=2 * h.n)
        ht = sample_on_grid(translate(h, t), box)
        lhs = conjugate(ht, dual, engine, trust=False).flat()
        hs = conjugate(sample_on_grid(h, box.shifted(t)), dual.shifted(_swap(t)), engine, trust=False)
        nodes = dual.nodes()
        sw = _swap(t)
        n = h.n
        bracket = (
            np.einsum("ij,j->i", nodes[:, :n], sw[n:]) + nodes[:, n:] @ sw[:n] + float(np.dot(sw[:n], sw[n:]))
        )
        rhs = hs.flat() - bracket
        tol = grid_tolerance(ht)
        err = float(np.max(np.abs(lhs - rhs)))
        tol_used = min(tol_used, tol)
        if err > worst or wit is None:
            worst, wit = max(worst, err), t.tolist()
    return IdentityResult("conjugation_translation", instances, worst, tol_used, wit)


@dataclass
class IdentityReport:
    results: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "identities": [r.to_dict() for r in self.results]}


def proof_identity_checks(
    functions,
    grids: list[tuple[GridSpec, GridSpec]],
    seed: int,
    instances: int = 50,
) -> IdentityReport:
    """All three identities at seeded-random instances.

    ``functions`` is a list of pair functions; instance ``i`` uses function
    ``i mod len(functions)``.  The grid identity uses the functions with
    ``n = 1`` whose domain is full-dimensional, since a randomly shifted grid
    misses a lower-dimensional domain.
    """
    rng = np.random.default_rng(seed)
    funcs = list(functions)
    grid_funcs = [h for h in funcs if h.n == 1 and h.affine_hull() is None]
    results = [
        translation_identity(funcs, rng, instances),
        group_action_identity(funcs, rng, instances),
    ]
    if grid_funcs:
        results.append(conjugation_identity(grid_funcs, grids, rng, instances))
    return IdentityReport(results)
