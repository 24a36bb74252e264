import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from incompat_lab import jointmeas as jm
from incompat_lab import linalg as la
from incompat_lab.observables import T_HAT, mub, sytet, sytri

S3, S2 = np.sqrt(3), np.sqrt(2)
LAM_TRI = 2 * S2 / 3
LAM_TET3 = 3 / (S3 + S2)


def _haar_bloch(count, rng):
    v = rng.normal(size=(count, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


# configuration -------------------------------------------------------------

def test_configuration_parse():
    assert jm.Configuration.parse("single") == jm.Configuration.single()
    assert jm.Configuration.parse("parallel:1") == jm.Configuration.single()
    c = jm.Configuration.parse("parallel:3")
    assert (c.copies, c.hilbert_dim, str(c)) == (3, 8, "parallel:3")
    a = jm.Configuration.parse("antiparallel")
    assert a.slot_signs == (1, -1) and a.hilbert_dim == 4
    for bad in ("parallel:0", "parallel:x", "antiparallel:2", "triple"):
        with pytest.raises(ValueError):
            jm.Configuration.parse(bad)


def test_sign_labels():
    assert jm.sign_label((1, -1, 1)) == "+-+"
    assert jm.parse_sign_label("+1-1+1") == (1, -1, 1)
    assert jm.parse_sign_label("+-+") == (1, -1, 1)
    assert len(jm.sign_strings(4)) == 16
    assert [jm.outcome_index(s) for s in jm.sign_strings(3)] == list(range(8))


# marginals and targets -----------------------------------------------------

def test_povm_marginal():
    single = jm.Povm(np.array([la.spin_projector([0, 0, 1], 1), la.spin_projector([0, 0, 1], -1)]), 1, 1)
    assert np.allclose(jm.povm_marginal(single, 0, 1), single.effects[0])
    p = jm.build_sytri_parallel_povm()
    for r in range(3):
        assert np.allclose(jm.povm_marginal(p, r, 1) + jm.povm_marginal(p, r, -1), np.eye(4))
    with pytest.raises(IndexError):
        jm.povm_marginal(p, 3, 1)
    q = jm.build_sytet_antiparallel_povm()
    prim = dict((tuple(v), e) for v, e in jm.sytet_antiparallel_primitive())
    want = prim[(1.0, 0, 0)] + prim[(0, 1.0, 0)] + prim[(0, 0, 1.0)]
    assert np.allclose(jm.povm_marginal(q, 0, 1), want)


def test_target_marginal_examples():
    n = np.array([0.6, 0.8, 0])
    assert np.allclose(jm.target_marginal(jm.Configuration.single(), n, 1, 1.0), la.spin_projector(n, 1))
    for n in sytet():
        got = jm.target_marginal(jm.Configuration.parallel(3), n, 1, LAM_TET3)
        want = (3 * np.eye(8) + LAM_TET3 * la.symmetrize3(la.sigma(n), la.I2, la.I2)) / 6
        assert np.allclose(got, want, atol=1e-14)
    n0 = sytet()[0]
    got = jm.target_marginal(jm.Configuration.antiparallel(), n0, 1, 1.0)
    want = 0.5 * np.eye(4) + S3 / 12 * sum(
        np.kron(p, la.I2) - np.kron(la.I2, p) for p in (la.X, la.Y, la.Z))
    assert np.allclose(got, want, atol=1e-14)
    with pytest.raises(jm.UnsupportedConfiguration):
        jm.target_marginal(jm.Configuration.parallel(5), n0, 1, 0.5)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.floats(0, 1), st.integers(0, 2**31))
def test_target_marginal_statistics(k, lam, seed):
    # the k-slot average reproduces Tr[P(lam) rho] on rho^{⊗k}
    rng = np.random.default_rng(seed)
    n, m = _haar_bloch(2, rng)
    m = m * rng.uniform(0, 1)
    cfg = jm.Configuration.parallel(k)
    t = jm.target_marginal(cfg, n, 1, lam)
    rho = la.bloch_state(m)
    got = np.trace(t @ la.tensor([rho] * k)).real
    assert got == pytest.approx(np.trace(la.unsharp_effect(n, 1, lam) @ rho).real, abs=1e-12)


# verification --------------------------------------------------------------

def test_verify_examples():
    rep = jm.verify_povm(jm.build_sytet_antiparallel_povm(), jm.Configuration.antiparallel(), sytet(), 1.0, 1e-12)
    assert rep.passed
    p = jm.build_sytri_parallel_povm()
    assert jm.verify_povm(p, jm.Configuration.parallel(2), sytri(), LAM_TRI, 1e-12).passed
    bad = jm.verify_povm(p, jm.Configuration.parallel(2), sytri(), 0.95, 1e-12)
    assert not bad.passed and bad.max_residual > 1e-3
    with pytest.raises(ValueError):
        jm.verify_povm(p, jm.Configuration.parallel(3), sytri(), 0.5)
    with pytest.raises(ValueError):
        jm.verify_povm(p, jm.Configuration.parallel(2), sytet(), 0.5)


def test_report_json():
    rep = jm.verify_povm(jm.build_sytri_parallel_povm(), jm.Configuration.parallel(2), sytri(), LAM_TRI)
    obj = json.loads(json.dumps(rep.to_json()))
    assert obj["pass"] is True and len(obj["per_constraint"]) == 6
    assert obj["pass"] == (obj["max_residual"] <= obj["tol"])


@pytest.mark.parametrize("name", sorted(jm.BUILTIN_POVMS))
def test_builtin_certificates(name):
    build, set_fn, cfg, lam = jm.BUILTIN_POVMS[name]
    p = build()
    assert jm.check_effects(p, 1e-10)
    rep = jm.verify_povm(p, cfg, set_fn(), lam, 1e-12)
    assert rep.passed, rep.max_residual
    # operator equality implies the statistics condition
    states = _haar_bloch(50, np.random.default_rng(4)) * 0.9
    assert jm.statistics_check(p, cfg, set_fn(), lam, states) < 1e-12


def test_statistics_check_antiparallel_haar():
    states = _haar_bloch(500, np.random.default_rng(11))
    p = jm.build_sytet_antiparallel_povm()
    assert jm.statistics_check(p, jm.Configuration.antiparallel(), sytet(), 1.0, states) < 1e-12


def test_statistics_check_trivial():
    p = jm.Povm(np.array([np.eye(4) / 8] * 8), 3, 2)
    dev = jm.statistics_check(p, jm.Configuration.parallel(2), mub(), 0.0, _haar_bloch(20, np.random.default_rng(0)))
    assert dev < 1e-15


def test_statistics_check_3copy_grid():
    grid = [np.array([np.sin(t) * np.cos(f), np.sin(t) * np.sin(f), np.cos(t)])
            for t in np.linspace(0, np.pi, 7) for f in np.linspace(0, 2 * np.pi, 8)]
    p = jm.build_sytet_3copy_povm()
    assert jm.statistics_check(p, jm.Configuration.parallel(3), sytet(), LAM_TET3, grid) < 1e-10


# single-copy tetrahedral POVM ----------------------------------------------

def test_sytet_single():
    prim = jm.sytet_single_primitive()
    assert all(np.isclose(np.trace(e).real, 1 / 3) for _, e in prim)
    assert np.allclose(sum(e for _, e in prim), la.I2)
    p = jm.build_sytet_single_povm()
    assert jm.verify_povm(p, jm.Configuration.single(), sytet(), 1 / S3, 1e-12).passed


def test_sytet_single_two_thirds_weight_is_not_a_povm():
    prim = jm.sytet_single_primitive(weight=2 / 3)
    assert np.allclose(sum(e for _, e in prim), 2 * la.I2)


# antiparallel tetrahedral POVM ---------------------------------------------

def test_sytet_antiparallel_primitive():
    prim = jm.sytet_antiparallel_primitive()
    assert len(prim) == 6
    for _, e in prim:
        assert np.linalg.matrix_rank(e, tol=1e-10) == 1
        assert np.isclose(np.trace(e).real, 2 / 3)
    assert np.max(np.abs(sum(e for _, e in prim) - np.eye(4))) < 1e-12


@pytest.mark.parametrize("axis", [0, 1, 2])
def test_sytet_antiparallel_hs_form(axis):
    paulis = [la.X, la.Y, la.Z]
    v = np.eye(3)[axis]
    e = dict((tuple(u), op) for u, op in jm.sytet_antiparallel_primitive())[tuple(v)]
    sa = paulis[axis]
    sb, sc = (paulis[j] for j in range(3) if j != axis)
    want = (2 * np.eye(4) - 2 * np.kron(sa, sa) + S3 * la.pair_bracket(sa, la.I2, -1)
            + np.kron(sb, sb) + np.kron(sc, sc)) / 12
    assert np.allclose(e, want, atol=1e-14)


def test_relabel_realizes_six_strings():
    p = jm.build_sytet_antiparallel_povm()
    nonzero = [s for s, e in p.items() if np.abs(e).max() > 0]
    assert len(nonzero) == 6
    with pytest.raises(ValueError):
        jm.relabel_primitive([(np.array([1.0, -1.0, 0]) / S2, np.eye(4))], sytet(), 2)


def test_octahedron_geometry():
    vecs = jm.reduced_bloch_vectors([e for _, e in jm.sytet_antiparallel_primitive()])
    norms = np.linalg.norm(vecs, axis=1)
    assert np.allclose(norms, norms[0], atol=1e-12)
    u = vecs / norms[:, None]
    for i in range(6):
        for j in range(i + 1, 6):
            ang = np.degrees(np.arccos(np.clip(u[i] @ u[j], -1, 1)))
            assert min(abs(ang - 90), abs(ang - 180)) < 1e-9


# two-copy triangle POVM ----------------------------------------------------

def test_sytri_table_rows():
    assert jm.SYTRI_TABLE[(1, 1, 1)] == (1, 0, 0, 0, 0, 0, 0, -9, -9, -9)
    p = jm.build_sytri_parallel_povm()
    assert np.allclose(p.total(), np.eye(4), atol=1e-14)
    c = la.hs_decompose(p[(1, 1, 1)], cutoff=1e-14)
    assert set(c) == {"II", "XX", "YY", "ZZ"}
    # (1/8)[I/4 - (9/36)(XX + YY + ZZ)]
    assert c == pytest.approx({"II": 1 / 32, "XX": -1 / 32, "YY": -1 / 32, "ZZ": -1 / 32})


def test_sytri_header_reading_chosen_by_positivity():
    good = jm.sytri_parallel_effects(("XY", "YZ", "ZX"))
    literal = jm.sytri_parallel_effects(("XY", "YX", "ZX"))
    assert min(la.min_eigenvalue(e) for e in good) > -1e-12
    assert min(la.min_eigenvalue(e) for e in literal) < -1e-2


def test_sytri_antiparallel():
    p = jm.build_sytri_antiparallel_povm()
    assert jm.verify_povm(p, jm.Configuration.antiparallel(), sytri(), LAM_TRI, 1e-12).passed


# equatorial transform -----------------------------------------------------------

def test_equatorial_plane_transform():
    p = jm.build_sytri_antiparallel_povm()
    q = jm.prop2_transform(p, T_HAT)
    assert jm.verify_povm(q, jm.Configuration.parallel(2), sytri(), LAM_TRI, 1e-12).passed
    assert np.allclose(q.total(), np.eye(4))
    back = jm.prop2_transform(q, T_HAT)
    assert np.allclose(back.effects, p.effects)
    for e, f in zip(p.effects, q.effects):
        assert np.allclose(np.linalg.eigvalsh(e), np.linalg.eigvalsh(f), atol=1e-12)
    with pytest.raises(ValueError):
        jm.prop2_transform(jm.build_sytet_single_povm(), T_HAT)


# three-copy tetrahedral POVM -----------------------------------------------

def test_sytet_3copy():
    p = jm.build_sytet_3copy_povm()
    table = jm.sytet_3copy_table()
    coeffs = jm.sytet_3copy_coefficients()
    row = dict(zip(jm.SYTET_3COPY_BASIS, table[(1, 1, 1, 1)]))
    assert row["III"] == pytest.approx(3 * coeffs["a"])
    assert row["IXX"] == row["IYY"] == row["IZZ"] == pytest.approx(-coeffs["a"])
    assert sum(1 for v in row.values() if v != 0) == 4
    assert min(la.min_eigenvalue(e) for e in p.effects) > -1e-10
    for r, n in enumerate(sytet()):
        want = (3 * np.eye(8) + LAM_TET3 * la.symmetrize3(la.sigma(n), la.I2, la.I2)) / 6
        assert np.allclose(jm.povm_marginal(p, r, 1), want, atol=1e-12)
    # no XYZ-type term anywhere
    for e in p.effects:
        c = la.hs_decompose(e)
        assert abs(c.get("XYZ", 0)) < 1e-14 and abs(c.get("ZYX", 0)) < 1e-14


# JSON ----------------------------------------------------------------------

def test_povm_json_roundtrip():
    p = jm.build_sytri_parallel_povm()
    back = jm.Povm.from_json(json.loads(json.dumps(p.to_json())))
    assert np.allclose(back.effects, p.effects)
    obj = p.to_json()
    obj["copies"] = 3
    with pytest.raises(ValueError):
        jm.Povm.from_json(obj)
    with pytest.raises(ValueError):
        jm.Povm.from_json({"copies": 1})
    with pytest.raises(ValueError):
        jm.Povm(np.zeros((4, 2, 2)), 3, 1)
