import numpy as np
import pytest

from fitzlab.catalog import (
    RunSettings,
    build_graph,
    build_pair_function,
    box_samples,
    expectation,
    graph_setup,
    load_catalog,
    run_scenario,
    scenario_from_dict,
    scenario_seed,
)
from fitzlab.numerics import ConfigurationError
from fitzlab.operators import check_monotone
from fitzlab.theorems import Agreement

CATALOG = load_catalog()


def test_catalog_contents():
    suites = [sc.suite for sc in CATALOG.values()]
    assert suites.count("theorem1") == 10
    assert suites.count("theorem2") == 7
    for needed in ("t2.identity", "t2.scaled_identity", "t2.abs", "t2.quartic", "t2.skew_rotation",
                   "t2.singleton", "t2.two_point", "t1.shifted_quadratic_0.1", "t1.shifted_quadratic_0.3"):
        assert needed in CATALOG
    assert all(sc.expected for sc in CATALOG.values())


def test_scenario_seed_is_stable_and_distinct():
    assert scenario_seed(0, "a") == scenario_seed(0, "a")
    assert scenario_seed(0, "a") != scenario_seed(0, "b")
    assert 0 <= scenario_seed(2**64 - 1, "x") < 2**32


@pytest.mark.parametrize("sid", [s for s in CATALOG if s.startswith("t2.")])
def test_catalog_graphs_are_monotone(sid):
    T, _ = build_graph(CATALOG[sid].data["graph"], 0.1)
    assert check_monotone(T, tol=1e-12).monotone


def test_build_graph_kinds():
    T, f = build_graph({"kind": "subdifferential", "model": {"kind": "quadratic"}, "range": [-1, 1], "refine": 1}, 0.5)
    assert T.size == 5 and f is not None
    T, _ = build_graph({"kind": "linear", "matrix": [[0, -1], [1, 0]], "range": [-1, 1], "refine": 1}, 1.0)
    assert T.size == 9 and T.n == 2
    with pytest.raises(ConfigurationError):
        build_graph({"kind": "spiral"}, 0.1)


def test_build_pair_function_unknown():
    with pytest.raises(ConfigurationError):
        build_pair_function({"kind": "mystery"}, 1, 0.1)


def test_graph_setup_boxes_lie_on_lattice():
    T, _ = build_graph(CATALOG["t2.quartic"].data["graph"], 0.1)
    setup = graph_setup(T, CATALOG["t2.quartic"].data, 0.1)
    for g in (setup.primal, setup.region, setup.dual):
        assert np.allclose(np.array(g.lo) / 0.1, np.round(np.array(g.lo) / 0.1))
        assert np.allclose(g.spacing, 0.1)
    assert setup.primal.lo[0] == -setup.primal.hi[0]


def test_box_samples():
    S = box_samples([[-1, 1], [-2, 2]], seed=3, n_random=7)
    assert S.shape == (25 + 7, 2)
    assert np.all(np.abs(S[:, 0]) <= 1) and np.all(np.abs(S[:, 1]) <= 2)
    assert np.array_equal(S, box_samples([[-1, 1], [-2, 2]], seed=3, n_random=7))


def test_inline_scenario_runs_and_checks_expectation():
    sc = scenario_from_dict({
        "id": "inline.half_square", "suite": "theorem1",
        "h": {"kind": "separable", "model": {"kind": "quadratic"}},
        "primal_box": [[-3, 3], [-3, 3]], "dual_box": [[-1, 1], [-1, 1]],
        "resolution": 4, "expected": {"A": "HOLDS", "B": "FAILS"},
    })
    rep = run_scenario(sc, RunSettings(translations=2))
    assert rep.agreement is Agreement.AGREE
    exp = expectation(sc, rep)
    assert not exp["matches_expected"] and list(exp["mismatches"]) == ["B"]


def test_unknown_suite():
    with pytest.raises((ConfigurationError, KeyError, ValueError)):
        run_scenario(scenario_from_dict({"id": "x", "suite": "theorem3"}), RunSettings())
