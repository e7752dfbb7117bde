from __future__ import annotations

import json

import numpy as np
import pytest

from specround.errors import InvalidInstance
from specround.instance import LinearRows, VectorInstance
from specround.instances import (
    complete_graph_example,
    helmert_basis,
    random_isotropic_instance,
    tight_lower_bound_example,
)


def test_validation():
    with pytest.raises(InvalidInstance):
        VectorInstance(np.ones((3, 2)), [0.5, 0.5], np.ones(3))
    with pytest.raises(InvalidInstance):
        VectorInstance(np.ones((2, 2)), [0.5, 1.5], np.ones(2))
    with pytest.raises(InvalidInstance):
        VectorInstance(np.ones((2, 2)), [0.5, 0.5], [-1.0, 1.0])
    with pytest.raises(InvalidInstance):
        VectorInstance(np.ones((2, 2)), [0.5, np.nan], np.ones(2))
    with pytest.raises(InvalidInstance):
        LinearRows(-np.ones((1, 2)), [1.0])
    with pytest.raises(InvalidInstance):
        LinearRows(np.ones((1, 2)), [1.0, 2.0])


def test_moment_cost_and_isotropy():
    V = np.vstack([np.eye(2), np.eye(2)])
    inst = VectorInstance(V, np.full(4, 0.5), [1.0, 2.0, 3.0, 4.0])
    np.testing.assert_allclose(inst.moment(), np.eye(2))
    assert inst.is_isotropic
    assert inst.cost() == pytest.approx(5.0)
    assert inst.cost([1, 0, 0, 1]) == pytest.approx(5.0)
    assert inst.c_inf == 4.0
    assert not inst.with_fields(x=np.full(4, 0.4)).is_isotropic


def test_json_round_trip(tmp_path):
    inst = random_isotropic_instance(3, 9, seed=1)
    inst = inst.with_fields(packing=LinearRows(np.ones((1, 9)), [4.0]))
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(inst.to_dict()))
    back = VectorInstance.load(path)
    np.testing.assert_array_equal(back.vectors, inst.vectors)
    np.testing.assert_array_equal(back.x, inst.x)
    np.testing.assert_array_equal(back.packing.matrix, inst.packing.matrix)


def test_json_errors(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "n": 2,\n  oops\n}')
    with pytest.raises(InvalidInstance, match="line 3"):
        VectorInstance.load(path)
    with pytest.raises(InvalidInstance, match="'x'"):
        VectorInstance.from_dict({"n": 1, "m": 1, "vectors": [[1.0]], "c": [1.0]})
    with pytest.raises(InvalidInstance):
        VectorInstance.from_dict({"n": 2, "m": 1, "vectors": [[1.0]], "x": [1], "c": [1]})


def test_helmert_basis_is_orthonormal_complement():
    H = helmert_basis(6)
    np.testing.assert_allclose(H.T @ H, np.eye(5), atol=1e-14)
    np.testing.assert_allclose(np.ones(6) @ H, 0.0, atol=1e-14)


def test_generators_are_isotropic():
    assert random_isotropic_instance(5, 40, seed=0).is_isotropic
    ex = tight_lower_bound_example(4, 0.3, c_inf=2.0)
    assert ex.is_isotropic and ex.m == 8
    assert ex.cost() == pytest.approx(4 * 0.3 * 2.0)
    kg = complete_graph_example(6, 10)
    assert kg.is_isotropic and kg.n == 5
    np.testing.assert_allclose(kg.x, 2 * 10 / 30)


def test_generator_validation():
    with pytest.raises(InvalidInstance):
        tight_lower_bound_example(3, 1.0)
    with pytest.raises(InvalidInstance):
        complete_graph_example(10, 50)
