import csv

import numpy as np

from fitzlab.bench import FIELDS, bench_cases, compare_engines, max_disagreement, write_bench
from fitzlab.operators import OperatorGraph, FitzpatrickFunction, QuadraticFitzpatrick, SFunction
from fitzlab.plotting import make_slice, plot_gap_map, plot_slice, write_slice_csv


def test_bench_cases_cover_catalog():
    one, two = bench_cases()
    labels = [c[0] for c in two]
    assert any(label.endswith("/phi") for label in labels) and any(label.endswith("/S") for label in labels)
    assert "t1.quadratic" in labels
    assert one and all(len(c[2]) == 1 for c in one)


def test_compare_engines_and_write(tmp_path):
    bf, llt = compare_engines(QuadraticFitzpatrick(), [[-2, 2], [-2, 2]], [[-1, 1], [-1, 1]], 17)
    assert bf.engine == "bruteforce" and llt.engine == "llt" and llt.resolution == "17x17"
    assert llt.max_abs_disagreement <= 1e-12
    path = write_bench([bf, llt], tmp_path / "b.csv")
    rows = list(csv.reader(path.open()))
    assert tuple(rows[0]) == FIELDS and len(rows) == 3
    assert max_disagreement([bf, llt]) == llt.max_abs_disagreement


def test_slice_values_and_csv(tmp_path):
    T = OperatorGraph(np.linspace(-1, 1, 5), np.linspace(-1, 1, 5))
    sl = make_slice("id", {"phi": FitzpatrickFunction(T), "S": SFunction(T)}, [0.0, 0.5], [1.0, 0.0], (-1, 1), 11)
    assert sl.header() == ["s", "x0", "xstar0", "pi", "phi", "S"]
    assert np.allclose(sl.columns["pi"], 0.5 * sl.s)
    assert np.all(sl.columns["phi"] <= sl.columns["S"])
    text = write_slice_csv(sl, tmp_path / "id.csv").read_text()
    assert "inf" in text  # S_T is +inf off the diagonal
    assert len(text.splitlines()) == 12


def test_figures_render(tmp_path):
    T = OperatorGraph(np.linspace(-1, 1, 5), np.linspace(-1, 1, 5))
    sl = make_slice("id", {"phi": FitzpatrickFunction(T)}, [0.0, 0.5], [1.0, 0.0], (-1, 1), 11)
    a = plot_slice(sl, tmp_path / "a.png")
    b = plot_gap_map(FitzpatrickFunction(T), [[-2, 2], [-2, 2]], T.pairs, tmp_path / "b.png", resolution=21)
    for p in (a, b):
        assert p.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
