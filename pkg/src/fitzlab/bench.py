"""Conjugation engine benchmark: linear-time transform against brute force."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .catalog import RunSettings, Scenario, build_graph, build_pair_function, load_catalog
from .models import model_from_dict
from .numerics import GridSpec, PairFunction, sample_on_grid
from .operators import FitzpatrickFunction, SFunction
from .transform import conjugate_bruteforce, conjugate_llt

RES_1D = (257, 1025, 4096)
RES_2D = (33, 65, 129)
FIELDS = ("case", "engine", "resolution", "wall_time_ns", "max_abs_disagreement")


@dataclass
class BenchRow:
    case: str
    engine: str
    resolution: str
    wall_time_ns: int
    max_abs_disagreement: float

    def as_row(self) -> list:
        return [self.case, self.engine, self.resolution, self.wall_time_ns, f"{self.max_abs_disagreement:.3e}"]


class _ModelOnLine(PairFunction):
    """A one-dimensional model evaluated at grid nodes (used for 1-D grids)."""

    def __init__(self, f):
        self.f = f

    def evaluate(self, points):
        return self.f.values(np.atleast_2d(points))


def bench_cases(catalog: dict[str, Scenario] | None = None, settings: RunSettings | None = None):
    """``(label, function, primal box, dual box)`` for every distinct catalog function.

    One-dimensional cases are the scalar models behind the catalog; the
    two-dimensional ones are the Theorem-1 pair functions with ``n = 1`` and
    ``phi_T``, ``S_T`` of every one-dimensional Theorem-2 graph.
    """
    catalog = load_catalog() if catalog is None else catalog
    settings = RunSettings() if settings is None else settings
    one, two, seen = [], [], set()
    for sc in catalog.values():
        d = sc.data
        spacing = 1.0 / int(d.get("resolution", settings.resolution))
        if sc.suite == "theorem1" and int(d.get("n", 1)) == 1:
            h, _ = build_pair_function(d["h"], 1, spacing)
            two.append((sc.id, h, [[-4, 4], [-4, 4]], [[-2, 2], [-2, 2]]))
        elif sc.suite == "theorem2":
            T, _ = build_graph(d["graph"], spacing)
            if T.n == 1:
                two.append((f"{sc.id}/phi", FitzpatrickFunction(T), [[-4, 4], [-4, 4]], [[-2, 2], [-2, 2]]))
                two.append((f"{sc.id}/S", SFunction(T), [[-4, 4], [-4, 4]], [[-2, 2], [-2, 2]]))
        if "model" in d:
            key = repr(sorted(d["model"].items()))
            if key not in seen:
                seen.add(key)
                one.append((f"model/{d['model']['kind']}:{sc.id}", _ModelOnLine(model_from_dict(d["model"])),
                            [[-4, 4]], [[-2, 2]]))
    return one, two


def _timed(fn, *args):
    t0 = time.perf_counter_ns()
    out = fn(*args)
    return out, time.perf_counter_ns() - t0


def compare_engines(h: PairFunction, box, dual_box, resolution: int) -> tuple[BenchRow, BenchRow]:
    box, dual_box = np.asarray(box, dtype=float), np.asarray(dual_box, dtype=float)
    k = box.shape[0]
    g = sample_on_grid(h, GridSpec(tuple(box[:, 0]), tuple(box[:, 1]), (resolution,) * k))
    dual = GridSpec(tuple(dual_box[:, 0]), tuple(dual_box[:, 1]), (resolution,) * k)
    bf, t_bf = _timed(conjugate_bruteforce, g, dual, False)
    llt, t_llt = _timed(conjugate_llt, g, dual, False)
    a, b = bf.values, llt.values
    same_inf = (a == b)
    diff = np.where(same_inf, 0.0, np.abs(a - b))
    err = float(np.max(diff)) if diff.size else 0.0
    label = "x".join([str(resolution)] * k)
    return BenchRow("", "bruteforce", label, t_bf, 0.0), BenchRow("", "llt", label, t_llt, err)


def run_bench(res_1d=RES_1D, res_2d=RES_2D, catalog=None) -> list[BenchRow]:
    one, two = bench_cases(catalog)
    rows = []
    for cases, resolutions in ((one, res_1d), (two, res_2d)):
        for label, h, box, dual in cases:
            for r in resolutions:
                for row in compare_engines(h, box, dual, r):
                    row.case = label
                    rows.append(row)
    return rows


def write_bench(rows: list[BenchRow], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FIELDS)
        for r in rows:
            w.writerow(r.as_row())
    return path


def max_disagreement(rows: list[BenchRow]) -> float:
    return max((r.max_abs_disagreement for r in rows), default=0.0)
