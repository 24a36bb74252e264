import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from incompat_lab import observables as ob

T = ob.T_HAT


def _offdiag(g):
    return g[~np.eye(len(g), dtype=bool)]


def test_sytri():
    s = ob.sytri()
    assert len(s) == 3
    assert np.allclose(_offdiag(s.gram()), -0.5)
    assert np.allclose(s.directions @ T, 0)


def test_sytet():
    s = ob.sytet()
    assert len(s) == 4
    assert np.allclose(_offdiag(s.gram()), -1 / 3)
    assert np.allclose(np.linalg.norm(s.directions, axis=1), 1)


def test_sytet_klein_symmetry():
    d = ob.sytet().directions
    rows = {tuple(np.round(v, 12)) for v in d}
    for flip in ([1, -1, -1], [-1, 1, -1], [-1, -1, 1]):
        assert {tuple(np.round(v * flip, 12)) for v in d} == rows


def test_mub():
    m = ob.mub()
    assert len(m) == 3 and np.allclose(_offdiag(m.gram()), 0)
    theta0 = np.arccos(1 / np.sqrt(3))
    assert np.allclose(m.pairwise_angles(), ob.theta_family(theta0).pairwise_angles(), atol=1e-12)


def test_theta_family_examples():
    assert np.allclose(ob.theta_family(np.pi / 2).directions, ob.sytri().directions, atol=1e-12)
    rng = np.random.default_rng(3)
    for theta in rng.uniform(0.01, np.pi - 0.01, 50):
        s = ob.theta_family(theta)
        assert np.allclose(s.directions @ T, np.cos(theta), atol=1e-12)
        assert np.allclose(_offdiag(s.gram()), (3 * np.cos(theta) ** 2 - 1) / 2, atol=1e-12)
        assert np.isclose(ob.pairwise_angle(theta), s.pairwise_angles()[0], atol=1e-7)
    for bad in (0.0, np.pi, -1.0):
        with pytest.raises(ob.InvalidSetError):
            ob.theta_family(bad)


def test_theta_family_grid_unit_norm():
    for theta in np.linspace(0, np.pi, 1002)[1:-1]:
        d = ob.theta_family(theta).directions
        assert np.allclose(np.linalg.norm(d, axis=1), 1, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, np.pi - 0.01))
def test_theta_family_cyclic_symmetry(theta):
    d = ob.theta_family(theta).directions
    cyc = d[:, [2, 0, 1]]
    assert np.allclose(ob.ObservableSet(cyc).pairwise_angles(), ob.theta_family(theta).pairwise_angles())
    # the cycle permutes the directions among themselves
    assert {tuple(np.round(v, 10)) for v in cyc} == {tuple(np.round(v, 10)) for v in d}


def test_n_sytet():
    assert np.allclose(ob.n_sytet(1, [np.eye(3)]).directions, ob.sytet().directions)
    two = ob.n_sytet(2, [np.eye(3), ob.rotation_z(np.pi / 6)])
    assert len(two) == 8
    assert min(ob.ObservableSet(two.directions).pairwise_angles()) > 1e-3
    with pytest.raises(ob.InvalidSetError):
        ob.n_sytet(2, [np.eye(3), np.eye(3)])
    with pytest.raises(ob.InvalidSetError):
        ob.n_sytet(1, [2 * np.eye(3)])


def test_is_equatorial():
    ok, normal = ob.is_equatorial(ob.sytri())
    assert ok and np.isclose(abs(normal @ T), 1)
    assert ob.is_equatorial(ob.mub()) == (False, None)
    rng = np.random.default_rng(0)
    for _ in range(10):
        assert ob.is_equatorial(ob.random_set(2, rng))[0]
        assert ob.is_equatorial(ob.random_set(4, rng, equatorial=True))[0]


def test_set_validation():
    with pytest.raises(ob.InvalidSetError):
        ob.ObservableSet(np.array([[1.0, 0, 0], [1.0, 0, 0]]))
    with pytest.raises(ob.InvalidSetError):
        ob.ObservableSet(np.array([[1.0, 1.0, 0]]))
    with pytest.raises(ob.InvalidSetError):
        ob.ObservableSet(np.array([1.0, 0, 0]))
    # antipodal directions are distinct observables here
    assert len(ob.ObservableSet(np.array([[0, 0, 1.0], [0, 0, -1.0]]))) == 2


def test_json_roundtrip():
    s = ob.sytet()
    back = ob.ObservableSet.from_json(s.to_json())
    assert back.label == "sytet" and np.array_equal(back.directions, s.directions)
    with pytest.raises(ob.InvalidSetError):
        ob.ObservableSet.from_json({"label": "x"})


def test_rotation_invariance_of_angles():
    rng = np.random.default_rng(8)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    s = ob.sytet()
    assert np.allclose(s.rotated(q).pairwise_angles(), s.pairwise_angles())


def test_random_set_seeded():
    a = ob.random_set(3, np.random.default_rng(1))
    b = ob.random_set(3, np.random.default_rng(1))
    assert np.array_equal(a.directions, b.directions)
    ang = a.pairwise_angles()
    assert ang.min() > 0.05 and ang.max() < np.pi - 0.05
    assert all(len(ob.BUILTIN_SETS[k]()) >= 2 for k in ob.BUILTIN_SETS)
    assert list(itertools.islice(iter(a), 1))[0].shape == (3,)
