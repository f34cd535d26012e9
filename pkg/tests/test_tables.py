import json
import math

import numpy as np
import pytest

from ibolab.tables import (
    Alphabet,
    Kernel,
    ProbTable,
    TableError,
    ZeroConditioningError,
    integer_alphabet,
    point_mass,
    product_join,
    uniform_table,
)

A = integer_alphabet("a", 2)
B = integer_alphabet("b", 3)
C = integer_alphabet("c", 2)


def test_alphabet_invariants():
    with pytest.raises(TableError):
        Alphabet("empty", ())
    with pytest.raises(TableError):
        Alphabet("dup", ("x", "x"))
    assert integer_alphabet("q", 3).symbols == ("0", "1", "2")


def test_probtable_validates_normalization():
    with pytest.raises(TableError):
        ProbTable((A,), np.array([0.6, 0.6]))
    with pytest.raises(TableError):
        ProbTable((A,), np.array([1.1, -0.1]))
    # entries in [-1e-12, 0) are clamped and the table renormalized
    t = ProbTable((A,), np.array([1.0 + 5e-13, -5e-13]))
    assert t.values[1] == 0.0
    assert math.fsum(t.values.tolist()) == pytest.approx(1.0, abs=1e-15)


def test_probtable_rejects_duplicate_axis_names():
    with pytest.raises(TableError):
        ProbTable((A, A), np.full((2, 2), 0.25))


def test_kernel_row_normalization():
    with pytest.raises(TableError):
        Kernel((A,), B, np.array([[0.5, 0.5, 0.1], [1.0, 0.0, 0.0]]))
    k = Kernel((A,), B, np.array([[0.2, 0.3, 0.5], [1.0, 0.0, 0.0]]))
    assert np.allclose(k.matrix().sum(axis=1), 1.0)


def test_marginal_recovers_factors():
    pa = np.array([0.3, 0.7])
    pb = np.array([0.2, 0.5, 0.3])
    joint = ProbTable((A, B), pa[:, None] * pb[None, :])
    assert np.allclose(joint.marginal("a").values, pa)
    assert np.allclose(joint.marginal("b").values, pb)
    # axis order of the result follows the table, not the request
    assert joint.marginal(["b", "a"]).axis_names == ("a", "b")


def test_condition_then_rejoin_roundtrip(rng):
    vals = rng.dirichlet(np.ones(12)).reshape(2, 3, 2)
    joint = ProbTable((A, B, C), vals)
    marg = joint.marginal(["a", "b"])
    k = joint.condition("c", ["a", "b"])
    rebuilt = product_join(marg, k)
    assert rebuilt.axis_names == ("a", "b", "c")
    assert np.max(np.abs(rebuilt.values - joint.values)) < 1e-12


def test_condition_zero_event_names_it():
    vals = np.zeros((2, 3))
    vals[0] = [0.5, 0.25, 0.25]
    joint = ProbTable((A, B), vals)
    with pytest.raises(ZeroConditioningError, match="a=1"):
        joint.condition("b", "a")


def test_product_join_chain_rule():
    prior = ProbTable((A,), np.array([0.4, 0.6]))
    k = Kernel((A,), B, np.array([[0.1, 0.2, 0.7], [0.5, 0.25, 0.25]]))
    joint = product_join(prior, k)
    assert joint.values[0, 2] == pytest.approx(0.4 * 0.7, abs=1e-15)
    assert joint.values[1, 0] == pytest.approx(0.6 * 0.5, abs=1e-15)


def test_product_join_source_axis_in_middle(rng):
    # kernel conditions on the second of three axes
    vals = rng.dirichlet(np.ones(12)).reshape(2, 3, 2)
    joint = ProbTable((A, B, C), vals)
    d = integer_alphabet("d", 2)
    k = Kernel((B,), d, rng.dirichlet(np.ones(2), size=3))
    out = product_join(joint, k)
    assert out.axis_names == ("a", "b", "c", "d")
    expect = vals[:, :, :, None] * k.rows[None, :, None, :]
    assert np.max(np.abs(out.values - expect)) < 1e-15


def test_product_join_two_source_axes(rng):
    vals = rng.dirichlet(np.ones(6)).reshape(2, 3)
    joint = ProbTable((A, B), vals)
    d = integer_alphabet("d", 2)
    rows = rng.dirichlet(np.ones(2), size=(3, 2))  # kernel from (b, a)
    k = Kernel((B, A), d, rows)
    out = product_join(joint, k)
    expect = np.empty((2, 3, 2))
    for i in range(2):
        for j in range(3):
            expect[i, j] = vals[i, j] * rows[j, i]
    assert np.max(np.abs(out.values - expect)) < 1e-15


def test_product_join_chain_observation_marginal():
    # uniform binary process through the 10%-flip channel: p(x=0) = 0.5
    # (0.5*0.9 + 0.5*0.1 by direct sum; symmetric in the two symbols)
    prior = ProbTable((A,), np.array([0.5, 0.5]))
    chan = Kernel((A,), C, np.array([[0.9, 0.1], [0.1, 0.9]]))
    joint = product_join(prior, chan)
    marg = joint.marginal("c")
    assert marg.values[0] == pytest.approx(0.5, abs=1e-15)
    assert marg.values[1] == pytest.approx(0.5, abs=1e-15)


def test_apply_map_merges_mass():
    p = ProbTable((B,), np.array([0.2, 0.5, 0.3]))
    two = integer_alphabet("m", 2)
    out = p.apply_map("b", [0, 0, 1], two)
    assert np.allclose(out.values, [0.7, 0.3])


def test_json_roundtrip(rng):
    vals = rng.dirichlet(np.ones(6)).reshape(2, 3)
    t = ProbTable((A, B), vals)
    t2 = ProbTable.from_json(t.to_json())
    assert t2.axes == t.axes
    assert np.array_equal(t2.values, t.values)

    k = Kernel((A,), B, rng.dirichlet(np.ones(3), size=2))
    k2 = Kernel.from_json(k.to_json())
    assert k2.from_axes == k.from_axes and k2.to_axis == k.to_axis
    assert np.array_equal(k2.rows, k.rows)


def test_values_immutable():
    t = uniform_table(A)
    with pytest.raises(ValueError):
        t.values[0] = 0.9


def test_point_mass():
    p = point_mass(B, "1")
    assert p.values.tolist() == [0.0, 1.0, 0.0]
