"""The bundled scenario catalog and the runner that turns entries into reports.

A scenario is a JSON object (see ``data/catalog.json``).  Boxes are given in
pair space; ``resolution`` is the number of grid nodes per unit length, so all
grids of one scenario share the lattice ``spacing * Z^d`` and graph samples sit
on a refinement of it.
"""

from __future__ import annotations

import copy
import itertools
import json
import zlib
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .conditions import (
    EXACT_TOL,
    SOLVER_TOL,
    Verdict,
    br_search,
    jsonable,
    translation_samples,
)
from .models import FunctionModel, model_from_dict
from .numerics import ConfigurationError, GridSpec, PairFunction, PairPoint
from .operators import (
    ConstantPair,
    FitzpatrickFunction,
    LinearGraphS,
    OffsetPair,
    OperatorGraph,
    QuadraticFitzpatrick,
    SeparablePair,
    SFunction,
    graph_from_subdifferential,
    linear_graph,
    sampling_tolerance,
)
from .theorems import (
    Agreement,
    EquivalenceReport,
    GridSetup,
    proof_identity_checks,
    theorem1_suite,
    theorem2_suite,
)

SUITES = ("theorem1", "theorem2", "br", "proofs")
DEFAULT_RESOLUTION = 10


@dataclass
class Scenario:
    id: str
    suite: str
    data: dict = field(repr=False)

    @property
    def expected(self) -> dict:
        return dict(self.data.get("expected", {}))

    @property
    def description(self) -> str:
        return self.data.get("description", "")


def load_catalog(path=None) -> dict[str, Scenario]:
    """Scenarios keyed by id, in file order."""
    if path is None:
        text = resources.files("fitzlab").joinpath("data/catalog.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    raw = json.loads(text)
    out = {}
    for entry in raw["scenarios"]:
        sc = scenario_from_dict(entry)
        if sc.id in out:
            raise ConfigurationError(f"duplicate scenario id {sc.id!r}")
        out[sc.id] = sc
    return out


def scenario_from_dict(d: dict) -> Scenario:
    if d.get("suite") not in SUITES:
        raise ConfigurationError(f"scenario {d.get('id')!r}: unknown suite {d.get('suite')!r}")
    return Scenario(str(d["id"]), d["suite"], copy.deepcopy(d))


def scenario_seed(seed: int, scenario_id: str) -> int:
    """Per-scenario seed, independent of run order."""
    return (int(seed) + zlib.crc32(scenario_id.encode())) % (1 << 32)


# ---------------------------------------------------------------------------
# builders


def _lattice_axis(lo: float, hi: float, spacing: float) -> np.ndarray:
    k0, k1 = int(round(lo / spacing)), int(round(hi / spacing))
    return np.arange(k0, k1 + 1) * spacing


def build_graph(d: dict, spacing: float) -> tuple[OperatorGraph, FunctionModel | None]:
    """Operator graph from its description, sampled on ``spacing / refine``."""
    kind = d["kind"]
    step = spacing / int(d.get("refine", 2))
    if kind == "subdifferential":
        f = model_from_dict(d["model"])
        lo, hi = d["range"]
        xs = _lattice_axis(lo, hi, step)
        T = graph_from_subdifferential(f, xs, kink_spacing=step if d.get("fill_kinks") else None)
        return T, f
    if kind == "linear":
        A = np.asarray(d["matrix"], dtype=float)
        lo, hi = d["range"]
        ax = _lattice_axis(lo, hi, step)
        lattice = np.array(list(itertools.product(ax, repeat=A.shape[0])))
        return linear_graph(A, lattice), None
    if kind == "finite":
        P = np.asarray(d["points"], dtype=float)
        return OperatorGraph.from_pairs(P, "finite", {"kind": "finite"}), None
    raise ConfigurationError(f"unknown graph kind {kind!r}")


def build_pair_function(d: dict, n: int, spacing: float) -> tuple[PairFunction, OperatorGraph | None]:
    """Pair function ``h`` of a Theorem-1 scenario, plus the graph it came from if any."""
    kind = d["kind"]
    if kind == "separable":
        return SeparablePair(model_from_dict(d["model"]), n), None
    if kind == "offset":
        base, T = build_pair_function(d["base"], n, spacing)
        return OffsetPair(base, float(d["c"])), T
    if kind == "constant":
        return ConstantPair(float(d.get("c", 0.0)), n), None
    if kind == "linear_graph_s":
        return LinearGraphS(np.asarray(d["matrix"], dtype=float)), None
    if kind == "quadratic_fitzpatrick":
        return QuadraticFitzpatrick(float(d.get("q", 1.0)), n), None
    if kind in ("fitzpatrick", "s_function"):
        T, _ = build_graph(d["graph"], spacing)
        cls = FitzpatrickFunction if kind == "fitzpatrick" else SFunction
        return cls(T), T
    raise ConfigurationError(f"unknown pair function kind {kind!r}")


def _grid(box, spacing: float) -> GridSpec:
    box = np.asarray(box, dtype=float)
    lo, hi = box[:, 0], box[:, 1]
    res = [int(round((b - a) / spacing)) + 1 for a, b in zip(lo, hi)]
    return GridSpec(tuple(lo), tuple(hi), tuple(res))


def _snap(box: np.ndarray, spacing: float, outward: bool) -> np.ndarray:
    q = box / spacing
    if outward:
        lo, hi = np.floor(q[:, 0] + 1e-9), np.ceil(q[:, 1] - 1e-9)
    else:
        lo, hi = np.ceil(q[:, 0] - 1e-9), np.floor(q[:, 1] + 1e-9)
    return np.stack([lo, hi], axis=1) * spacing


def _graph_box(T: OperatorGraph) -> np.ndarray:
    P = T.pairs
    return np.stack([P.min(axis=0), P.max(axis=0)], axis=1)


def _swap_box(box: np.ndarray) -> np.ndarray:
    k = box.shape[0] // 2
    return np.concatenate([box[k:], box[:k]])


def graph_setup(T: OperatorGraph, d: dict, spacing: float) -> GridSetup:
    """Grids for a Theorem-2 scenario.

    Explicit ``primal_box``/``region_box``/``dual_box`` win.  Otherwise the
    primal box is the symmetric cube reaching ``margin`` beyond the graph, the
    region is the graph's bounding box and the dual box is the swapped bounding
    box clipped to ``dual_radius``, each snapped to the lattice.
    """
    bbox = _graph_box(T)
    if "primal_box" in d:
        primal = np.asarray(d["primal_box"], dtype=float)
    else:
        r = float(np.max(np.abs(bbox))) + float(d.get("margin", 1.0))
        primal = _snap(np.tile([-r, r], (2 * T.n, 1)), spacing, outward=True)
    if "region_box" in d:
        region = np.asarray(d["region_box"], dtype=float)
    elif "primal_box" in d:
        region = primal
    else:
        region = _snap(bbox, spacing, outward=False)
        flat = region[:, 1] <= region[:, 0]
        region[flat] = primal[flat]
    if "dual_box" in d:
        dual = np.asarray(d["dual_box"], dtype=float)
    else:
        rad = float(d.get("dual_radius", 2.0))
        sw = _swap_box(bbox)
        dual = np.stack([np.maximum(sw[:, 0], -rad), np.minimum(sw[:, 1], rad)], axis=1)
        dual = _snap(dual, spacing, outward=False)
    return GridSetup(_grid(primal, spacing), _grid(region, spacing), _grid(dual, spacing))


def box_samples(box, seed: int, n_random: int = 20) -> np.ndarray:
    """Lattice (5 per axis in 2-D pair space, 3 per axis in 4-D) plus seeded uniform points."""
    box = np.asarray(box, dtype=float)
    per_axis = 5 if box.shape[0] == 2 else 3
    axes = [np.linspace(a, b, per_axis) for a, b in box]
    lattice = np.array(list(itertools.product(*axes)))
    rng = np.random.default_rng(seed)
    extra = rng.uniform(box[:, 0], box[:, 1], size=(n_random, box.shape[0]))
    return np.vstack([lattice, extra])


def _spec_box(g: GridSpec) -> np.ndarray:
    return np.stack([g.lo, g.hi], axis=1)


# ---------------------------------------------------------------------------
# runner


@dataclass
class RunSettings:
    seed: int = 0
    resolution: int = DEFAULT_RESOLUTION
    engine: str = "bruteforce"
    exact_tol: float = EXACT_TOL
    solver_tol: float = SOLVER_TOL
    translations: int = 20


def _spacing(sc: Scenario, settings: RunSettings) -> float:
    return 1.0 / int(sc.data.get("resolution", settings.resolution))


def run_theorem1(sc: Scenario, settings: RunSettings) -> EquivalenceReport:
    d = sc.data
    n = int(d.get("n", 1))
    spacing = _spacing(sc, settings)
    h, T = build_pair_function(d["h"], n, spacing)
    primal = np.asarray(d["primal_box"], dtype=float)
    region = np.asarray(d.get("region_box", primal), dtype=float)
    setup = GridSetup(_grid(primal, spacing), _grid(region, spacing), _grid(d["dual_box"], spacing))
    seed = scenario_seed(settings.seed, sc.id)
    ts = translation_samples(n, float(d.get("translation_radius", 2.0)), seed, settings.translations)
    slack = sampling_tolerance(T) if T is not None else 0.0
    return theorem1_suite(
        h, setup, ts, sc.id, slack, settings.engine, settings.exact_tol, settings.solver_tol
    )


def run_theorem2(sc: Scenario, settings: RunSettings) -> EquivalenceReport:
    d = sc.data
    spacing = _spacing(sc, settings)
    T, f = build_graph(d["graph"], spacing)
    if "model" in d:
        f = model_from_dict(d["model"])
    setup = graph_setup(T, d, spacing)
    seed = scenario_seed(settings.seed, sc.id)
    ts = translation_samples(T.n, float(d.get("translation_radius", 2.0)), seed, settings.translations)
    dual_samples = box_samples(_spec_box(setup.dual), seed + 1)
    slack = sampling_tolerance(T) if d.get("maximal", False) else 0.0
    return theorem2_suite(
        T, f, setup, ts, dual_samples, sc.id, slack, settings.engine, settings.exact_tol, settings.solver_tol
    )


def br_points(f: FunctionModel, h: PairFunction, count: int, eps: float, noise: float, seed: int,
              span: float = 1.5) -> np.ndarray:
    """Seeded graph points of ``df`` pushed off the graph, kept while ``h - pi < eps^2``."""
    rng = np.random.default_rng(seed)
    out: list[np.ndarray] = []
    while len(out) < count:
        y = rng.uniform(-span, span, size=64)
        ys = np.array([float(f.subgradient(np.array([v]))[0]) for v in y])
        P = np.stack([y, ys], axis=1) + noise * rng.standard_normal((64, 2))
        gap = h.evaluate(P) - P[:, 0] * P[:, 1]
        keep = P[(gap < eps * eps) & (gap > 1e-9)]
        out.extend(keep[: count - len(out)])
    return np.array(out)


def run_br(sc: Scenario, settings: RunSettings) -> EquivalenceReport:
    d = sc.data
    f = model_from_dict(d["model"])
    member = d.get("member", "separable")
    if member == "quadratic_fitzpatrick":
        h = QuadraticFitzpatrick(float(d["model"].get("q", 1.0)))
    else:
        h = SeparablePair(f, 1)
    eps = float(d.get("eps", 0.5))
    P = br_points(f, h, int(d.get("points", 100)), eps, float(d.get("noise", 0.3)),
                  scenario_seed(settings.seed, sc.id))
    found, worst_dx, worst_dxs, misses = 0, 0.0, 0.0, []
    for p in P:
        r = br_search(h, f, PairPoint(p[:1], p[1:]), eps)
        if r.found:
            found += 1
            worst_dx, worst_dxs = max(worst_dx, r.dist_x), max(worst_dxs, r.dist_xstar)
        else:
            misses.append({"point": p.tolist(), "reason": r.reason})
    verdict = Verdict.HOLDS if found == len(P) else Verdict.FAILS
    items = {"witnesses": verdict}
    extras = {
        "points": len(P),
        "found": found,
        "eps": eps,
        "max_dist_x": worst_dx,
        "max_dist_xstar": worst_dxs,
        "misses": misses[:5],
    }
    return EquivalenceReport(sc.id, "br", items, Agreement.AGREE if found == len(P) else Agreement.DISAGREE,
                             {}, "" if found == len(P) else f"{len(P) - found} points without witness", extras)


def identity_functions(catalog: dict[str, Scenario], settings: RunSettings) -> list[PairFunction]:
    """Every Theorem-1 pair function of the catalog."""
    out = []
    for sc in catalog.values():
        if sc.suite == "theorem1":
            h, _ = build_pair_function(sc.data["h"], int(sc.data.get("n", 1)), _spacing(sc, settings))
            out.append(h)
    return out


def run_proofs(sc: Scenario, settings: RunSettings, catalog: dict[str, Scenario] | None = None) -> EquivalenceReport:
    catalog = load_catalog() if catalog is None else catalog
    funcs = identity_functions(catalog, settings)
    spacing = 1.0 / settings.resolution
    grids = [(_grid([[-3, 3], [-3, 3]], spacing), _grid([[-2, 2], [-2, 2]], spacing))]
    rep = proof_identity_checks(funcs, grids, scenario_seed(settings.seed, sc.id), int(sc.data.get("instances", 50)))
    items = {r.name: Verdict.HOLDS if r.passed else Verdict.FAILS for r in rep.results}
    agr = Agreement.AGREE if rep.passed else Agreement.DISAGREE
    text = "" if rep.passed else ", ".join(r.name for r in rep.results if not r.passed) + " violated"
    return EquivalenceReport(sc.id, "proofs", items, agr, {}, text, rep.to_dict())


def run_scenario(sc: Scenario, settings: RunSettings, catalog: dict[str, Scenario] | None = None) -> EquivalenceReport:
    if sc.suite == "theorem1":
        return run_theorem1(sc, settings)
    if sc.suite == "theorem2":
        return run_theorem2(sc, settings)
    if sc.suite == "br":
        return run_br(sc, settings)
    return run_proofs(sc, settings, catalog)


def expectation(sc: Scenario, rep: EquivalenceReport) -> dict:
    """Per-item comparison of observed verdicts against the catalog's expectations."""
    exp = sc.expected
    mismatches = {
        k: {"expected": v, "observed": rep.items[k].value if k in rep.items else None}
        for k, v in sorted(exp.items())
        if k not in rep.items or rep.items[k].value != v
    }
    return {"expected": exp, "matches_expected": not mismatches, "mismatches": mismatches}


def report_entry(sc: Scenario, rep: EquivalenceReport) -> dict:
    return jsonable(rep.to_dict() | {"description": sc.description} | expectation(sc, rep))
