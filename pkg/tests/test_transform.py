import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fitzlab.conditions import translated_values
from fitzlab.numerics import (
    INF,
    CallablePairFunction,
    ConfigurationError,
    GridFunction,
    GridSpec,
    ImproperFunctionError,
    Space,
    pair_products,
    sample_on_grid,
)
from fitzlab.operators import FitzpatrickFunction, OperatorGraph, SFunction
from fitzlab.transform import (
    biconjugate,
    conjugate,
    conjugate_bruteforce,
    conjugate_llt,
    default_dual_spec,
    j_transform,
)

from oracles import conjugate_loop, grid_nodes


def line(lo, hi, res):
    return GridSpec((lo,), (hi,), (res,))


def half_square(z):
    return 0.5 * float(np.dot(z, z))


# -- conjugate_bruteforce examples


def test_conjugate_of_half_square():
    g = sample_on_grid(half_square, line(-3, 3, 121))
    c = conjugate_bruteforce(g, line(-2, 2, 41))
    h = 6 / 120
    assert c.values[30] == pytest.approx(0.5, abs=h * h)
    assert c.tag is Space.DUAL


def test_conjugate_of_origin_indicator_is_zero():
    g = sample_on_grid(lambda z: 0.0 if z[0] == 0 else INF, line(-1, 1, 5))
    for engine in ("bruteforce", "llt"):
        assert np.all(conjugate(g, line(-3, 3, 13), engine).values == 0.0)


def test_conjugate_of_abs_and_truncation_artifact():
    g = sample_on_grid(lambda z: abs(z[0]), line(-2, 2, 81))
    dual = line(-3, 3, 61)
    c = conjugate_bruteforce(g, dual)
    s = dual.axes()[0]
    inside = np.abs(s) <= 1 + 1e-12
    assert np.allclose(c.values[inside], 0.0, atol=1e-12)
    # outside [-1, 1] the true conjugate is +inf; the box yields 2(|s| - 1)
    assert np.allclose(c.values[~inside], 2 * (np.abs(s[~inside]) - 1), atol=1e-12)
    assert c.suspect[~inside].all()


def test_improper_input_rejected():
    g = GridFunction(line(-1, 1, 3), [0.0, 0.0, 0.0])
    g.values[:] = INF
    for engine in ("bruteforce", "llt"):
        with pytest.raises(ImproperFunctionError):
            conjugate(g, line(-1, 1, 3), engine)


def test_unknown_engine():
    g = sample_on_grid(half_square, line(-1, 1, 3))
    with pytest.raises(ValueError):
        conjugate(g, line(-1, 1, 3), "fft")


def test_dimension_mismatch():
    g = sample_on_grid(half_square, line(-1, 1, 3))
    with pytest.raises(ConfigurationError):
        conjugate(g, GridSpec((-1, -1), (1, 1), (3, 3)))


# -- engines agree


def test_llt_matches_bruteforce_on_examples():
    cases = [
        (half_square, line(-3, 3, 121), line(-2, 2, 41)),
        (lambda z: 0.0 if z[0] == 0 else INF, line(-1, 1, 5), line(-3, 3, 13)),
        (lambda z: abs(z[0]), line(-2, 2, 81), line(-3, 3, 61)),
    ]
    for f, spec, dual in cases:
        g = sample_on_grid(f, spec)
        a, b = conjugate_bruteforce(g, dual), conjugate_llt(g, dual)
        assert np.allclose(a.values, b.values, atol=1e-9, rtol=0)
        assert np.array_equal(a.suspect, b.suspect)


def test_llt_of_affine_function():
    g = sample_on_grid(lambda z: 0.5 * z[0] + 2.0, line(-2, 2, 41))
    c = conjugate_llt(g, line(-1, 1, 21))
    s = line(-1, 1, 21).axes()[0]
    assert c.values[15] == pytest.approx(-2.0)  # s = 0.5
    assert np.allclose(c.values, 2 * np.abs(s - 0.5) - 2.0, atol=1e-12)
    assert c.suspect.sum() == 20


@given(st.integers(0, 2**32 - 1), st.integers(2, 4))
def test_llt_matches_loop_oracle_in_2d(seed, k):
    rng = np.random.default_rng(seed)
    spec = GridSpec((-1.0, -2.0), (1.0, 1.0), (k + 1, k + 2))
    vals = rng.normal(size=spec.shape)
    vals[rng.random(spec.shape) < 0.3] = INF
    vals.flat[0] = 0.0
    g = GridFunction(spec, vals)
    dual = GridSpec((-2.0, -1.5), (2.0, 2.5), (5, 4))
    expect = conjugate_loop(spec.nodes(), g.flat(), dual.nodes())
    assert np.allclose(conjugate_llt(g, dual, trust=False).flat(), expect, atol=1e-9)
    assert np.allclose(conjugate_bruteforce(g, dual, trust=False).flat(), expect, atol=1e-12)


def test_llt_is_faster_on_large_line():
    g = sample_on_grid(half_square, line(-4, 4, 4096))
    dual = line(-2, 2, 4096)
    t0 = time.perf_counter()
    conjugate_bruteforce(g, dual, trust=False)
    t_bf = time.perf_counter() - t0
    t0 = time.perf_counter()
    conjugate_llt(g, dual, trust=False)
    t_llt = time.perf_counter() - t0
    assert t_bf >= 20 * t_llt


# -- invariants


@given(st.integers(0, 2**32 - 1))
def test_fenchel_young_on_grid(seed):
    rng = np.random.default_rng(seed)
    spec = GridSpec((-1.0, -1.0), (1.0, 1.0), (5, 6))
    g = GridFunction(spec, rng.normal(size=spec.shape))
    dual = GridSpec((-2.0, -2.0), (2.0, 2.0), (7, 7))
    c = conjugate_bruteforce(g, dual)
    lhs = g.flat()[:, None] + c.flat()[None, :]
    rhs = spec.nodes() @ dual.nodes().T
    assert np.all(lhs >= rhs - 1e-9)


@given(st.integers(0, 2**32 - 1))
def test_order_reversal(seed):
    rng = np.random.default_rng(seed)
    spec = line(-2, 2, 17)
    a = rng.normal(size=17)
    b = a + rng.uniform(0, 1, size=17)
    dual = line(-3, 3, 25)
    ca = conjugate_llt(GridFunction(spec, a), dual).values
    cb = conjugate_llt(GridFunction(spec, b), dual).values
    assert np.all(ca >= cb - 1e-12)


@given(st.integers(0, 2**32 - 1))
def test_biconjugate_below_and_idempotent(seed):
    rng = np.random.default_rng(seed)
    spec = GridSpec((-1.0, -1.0), (1.0, 1.0), (6, 5))
    g = GridFunction(spec, rng.normal(size=spec.shape))
    bb = biconjugate(g)
    assert np.all(bb.values <= g.values + 1e-9)
    assert np.allclose(biconjugate(bb).values, bb.values, atol=1e-9)


def test_biconjugate_of_convex_function():
    g = sample_on_grid(half_square, line(-2, 2, 41))
    assert np.allclose(biconjugate(g).values, g.values, atol=1e-9)


def test_biconjugate_flattens_double_well():
    g = sample_on_grid(lambda z: z[0] ** 4 - 2 * z[0] ** 2, line(-2, 2, 401))
    bb = biconjugate(g).values
    x = line(-2, 2, 401).axes()[0]
    well = np.abs(x) <= 1
    assert np.allclose(bb[well], -1.0, atol=1e-9)
    assert np.allclose(bb[~well], g.values[~well], atol=1e-9)


def test_biconjugate_of_two_points():
    vals = np.full(9, INF)
    vals[[2, 6]] = 1.0  # nodes -1 and 1 on [-2, 2]
    bb = biconjugate(GridFunction(line(-2, 2, 9), vals))
    assert np.allclose(bb.values[2:7], 1.0)
    assert np.all(np.isinf(bb.values[[0, 1, 7, 8]]))


def test_biconjugate_rejects_dual_tag():
    g = GridFunction(line(-1, 1, 3), [0.0, 0.0, 0.0], Space.DUAL)
    with pytest.raises(ValueError):
        biconjugate(g)


def test_default_dual_spec_keeps_zero():
    g = sample_on_grid(half_square, line(-3, 3, 31))
    d = default_dual_spec(g)
    assert d.resolution[0] % 2 == 1 and d.lo[0] == -d.hi[0] and d.hi[0] >= 3


@given(st.integers(-4, 4), st.integers(-4, 4))
def test_conjugate_of_translate_is_swapped_translate(i, j):
    spec = GridSpec((-2.0, -2.0), (2.0, 2.0), (17, 17))
    dual = GridSpec((-1.0, -1.0), (1.0, 1.0), (9, 9))
    h = CallablePairFunction(lambda x, xs: float(x[0] ** 2 + 0.5 * xs[0] ** 2 + 0.3 * x[0] * xs[0]))
    t = np.array([0.25 * i, 0.25 * j])
    hstar = conjugate_bruteforce(sample_on_grid(h, spec), dual, trust=False)
    # h_t on the shifted grid has the same node set as h on the original one
    shifted = spec.shifted(-t)
    ht = GridFunction(shifted, translated_values(h, shifted.nodes(), t))
    u = t[::-1]
    dual_shifted = dual.shifted(-u)
    lhs = conjugate_bruteforce(ht, dual_shifted, trust=False).flat()
    rhs = translated_values(
        CallablePairFunction(lambda a, b: 0.0), dual_shifted.nodes(), u
    )  # the bracket, negated
    rhs = hstar.flat() + rhs
    assert np.allclose(lhs, rhs, atol=1e-9)


# -- J


def test_j_of_zero_is_box_support_function():
    spec = GridSpec((-1.0, -1.0), (1.0, 1.0), (5, 5))
    j = j_transform(sample_on_grid(lambda z: 0.0, spec))
    nodes = spec.nodes()
    assert np.allclose(j.flat(), np.abs(nodes).sum(axis=1))
    assert j.values[2, 2] == 0.0


def test_j_of_half_square_norm():
    spec = GridSpec((-2.0, -2.0), (2.0, 2.0), (41, 41))
    h = sample_on_grid(half_square, spec)
    j = j_transform(h, engine="llt")
    trusted = j.trusted_mask()
    assert np.allclose(j.values[trusted], h.values[trusted], atol=1e-12)


def test_j_of_s_function_is_fitzpatrick():
    y = np.linspace(-2, 2, 33)
    T = OperatorGraph(y, y)
    spec = GridSpec((-2.0, -2.0), (2.0, 2.0), (33, 33))
    s_grid = sample_on_grid(SFunction(T), spec)
    j = j_transform(s_grid)
    phi = FitzpatrickFunction(T).evaluate(spec.nodes()).reshape(spec.shape)
    mask = j.trusted_mask()
    assert mask.sum() > 0
    assert np.allclose(j.values[mask], phi[mask], atol=1e-9)


def test_j_needs_even_axes():
    with pytest.raises(ConfigurationError):
        j_transform(sample_on_grid(half_square, line(-1, 1, 3)))
