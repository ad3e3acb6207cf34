import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mopeclt.errors import ParameterError
from mopeclt.lattice_path import LatticePath, hermite_example_path, ray_path, step_line


def _ks(path, count):
    return [tuple(int(v) for v in k) for k in path.multi_indices(count)]


def test_step_line_m2():
    assert _ks(step_line(2, 4), 5) == [(0, 0), (1, 0), (1, 1), (2, 1), (2, 2)]


def test_step_line_m1():
    assert _ks(step_line(1, 3), 4) == [(0,), (1,), (2,), (3,)]


def test_step_line_m3():
    assert _ks(step_line(3, 3), 4)[1:] == [(1, 0, 0), (1, 1, 0), (1, 1, 1)]


def test_ray_symmetric_is_step_line():
    assert list(ray_path((0.5, 0.5), 4).steps) == list(step_line(2, 4).steps)


def test_ray_degenerate_direction():
    assert _ks(ray_path((1, 0), 3), 4)[1:] == [(1, 0), (2, 0), (3, 0)]


def test_ray_third_two_thirds():
    assert tuple(ray_path((1 / 3, 2 / 3), 6).k(6)) == (2, 4)


def test_hermite_example_path():
    p = hermite_example_path(8)
    assert tuple(p.k(0)) == (0, 0)
    assert tuple(p.k(2)) == (1, 1)
    assert tuple(p.k(5)) == (3, 2)
    for j in range(9):
        assert tuple(p.k(j)) == ((j + 1) // 2, j // 2)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=4).filter(lambda v: sum(v) > 0.05))
def test_ray_deviation_bound(weights):
    nu = np.asarray(weights) / sum(weights)
    N = 2000
    path = ray_path(nu, N)
    K = path.multi_indices(N + 1)
    n = np.arange(N + 1)[:, None]
    assert np.max(np.abs(K - n * nu)) <= len(nu)
    path.validate()


def test_ray_deviation_long():
    nu = (0.2, 0.3, 0.5)
    N = 10**5
    K = ray_path(nu, N).multi_indices(N + 1)
    assert np.max(np.abs(K - np.arange(N + 1)[:, None] * np.asarray(nu))) <= 3


def test_generators_validate():
    for p in (step_line(3, 30), ray_path((0.1, 0.9), 50), hermite_example_path(40)):
        p.validate()
        p.prefix(10).validate()


def test_unit_steps_and_sizes():
    K = ray_path((0.25, 0.75), 40).multi_indices(41)
    assert np.all(K.sum(axis=1) == np.arange(41))
    assert np.all(np.abs(np.diff(K, axis=0)).sum(axis=1) == 1)


def test_validate_rejects_bad_direction():
    bad = LatticePath(2, np.zeros(40, dtype=np.int64), (0.5, 0.5))
    with pytest.raises(ParameterError):
        bad.validate()


def test_invalid_inputs():
    with pytest.raises(ParameterError):
        step_line(0, 3)
    with pytest.raises(ParameterError):
        ray_path((0.5, 0.6), 3)
    with pytest.raises(ParameterError):
        ray_path((-0.5, 1.5), 3)


def test_json_one_based():
    p = step_line(2, 4)
    obj = json.loads(json.dumps(p.to_json()))
    assert obj == {"m": 2, "nu": [0.5, 0.5], "steps": [1, 2, 1, 2]}
    q = LatticePath.from_json(obj)
    assert list(q.steps) == list(p.steps)


def test_json_missing_field():
    with pytest.raises(ParameterError):
        LatticePath.from_json({"m": 2, "steps": [1]})
