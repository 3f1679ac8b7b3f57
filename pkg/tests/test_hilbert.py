import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dicke_chaos.hilbert import (HilbertGeometry, OperatorMatrix, SpinMode, boson_ops,
                                 collective_spin_ops, dump_operator, excitation_number_op,
                                 load_operator, number_op, parity_op, pauli_sum_ops,
                                 quadrature_ops, spin_matrices, spin_ops)
from dicke_chaos.models import ModelSpec, hamiltonian


def comm(a, b):
    return a @ b - b @ a


def test_geometry_dims():
    g = HilbertGeometry(7, 10)
    assert g.j == 3.5 and g.spin_dim == 8 and g.total_dim == 80
    f = HilbertGeometry(3, 4, "full_sectors")
    assert f.spin_dim == 8 and f.total_dim == 32
    assert HilbertGeometry.from_dict(f.to_dict()) == f


@pytest.mark.parametrize("args", [(0, 4), (2, 1), (2.5, 4)])
def test_geometry_rejects_bad_input(args):
    with pytest.raises(ValueError):
        HilbertGeometry(*args)


def test_operator_matrix_validation():
    g = HilbertGeometry(1, 2)
    with pytest.raises(ValueError):
        OperatorMatrix(np.zeros((3, 3)), g)
    m = np.zeros((4, 4), complex)
    m[0, 1] = 1
    with pytest.raises(ValueError):
        OperatorMatrix(m, g, hermitian=True)
    op = OperatorMatrix(m, g)
    assert not op.data.flags.writeable
    assert np.allclose(op.dag().data, m.conj().T)


def test_single_atom_ordering():
    # ascending m: |m=-1/2> first
    jz, jp, jm = spin_matrices(0.5)
    assert np.allclose(np.diag(jz), [-0.5, 0.5])
    assert np.allclose(jp, [[0, 0], [1, 0]])
    g1 = HilbertGeometry(1, 3)
    gf = HilbertGeometry(1, 3, SpinMode.FULL_SECTORS)
    for a, b in zip(collective_spin_ops(g1), pauli_sum_ops(gf)):
        assert np.allclose(a.data, b.data)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 12), nf=st.integers(2, 5))
def test_collective_algebra(n, nf):
    g = HilbertGeometry(n, nf)
    jz, jp, jm = (o.data for o in collective_spin_ops(g))
    assert np.allclose(comm(jp, jm), 2 * jz)
    assert np.allclose(comm(jz, jp), jp)
    casimir = jz @ jz + 0.5 * (jp @ jm + jm @ jp)
    assert np.allclose(casimir, g.j * (g.j + 1) * np.eye(g.total_dim))


def test_full_sector_casimir_spectrum():
    g = HilbertGeometry(3, 2, "full_sectors")
    jz, jp, jm = (o.data for o in pauli_sum_ops(g))
    assert np.allclose(comm(jp, jm), 2 * jz)
    casimir = jz @ jz + 0.5 * (jp @ jm + jm @ jp)
    vals = np.round(np.linalg.eigvalsh(casimir), 10)
    # j = 3/2 (4 states) and two copies of j = 1/2, times 2 Fock levels
    assert sorted(set(vals)) == [0.75, 3.75]
    assert np.count_nonzero(np.isclose(vals, 3.75)) == 8


def test_full_sector_cap():
    with pytest.raises(ValueError):
        pauli_sum_ops(HilbertGeometry(9, 2, "full_sectors"))
    with pytest.raises(ValueError):
        collective_spin_ops(HilbertGeometry(2, 2, "full_sectors"))


def test_boson_commutator_truncation():
    nf = 6
    g = HilbertGeometry(1, nf)
    a, ad = (o.data for o in boson_ops(g))
    c = np.diag(comm(a, ad)).real.reshape(2, nf)
    assert np.allclose(c[:, :-1], 1) and np.allclose(c[:, -1], -(nf - 1))
    assert np.allclose(ad @ a, number_op(g).data)
    q, p = quadrature_ops(g)
    assert np.allclose(q.data @ q.data + p.data @ p.data, ad @ a + a @ ad)


def test_parity():
    g = HilbertGeometry(3, 5)
    pi = parity_op(g).data
    assert np.allclose(pi @ pi, np.eye(g.total_dim))
    for spec in (ModelSpec("nqubit_dicke", lam=1.3), ModelSpec("generalized_dicke", lam=0.7,
                                                               lam_prime=1.9)):
        h = hamiltonian(spec, g).data
        assert np.allclose(comm(pi, h), 0)
    _, jp, _ = spin_ops(g)
    a, _ = boson_ops(g)
    assert np.allclose(pi @ jp.data @ pi, -jp.data)      # single J+ is odd
    assert np.allclose(pi @ a.data @ pi, -a.data)
    assert np.allclose(pi @ (jp.data @ a.data) @ pi, jp.data @ a.data)


def test_excitation_number_conserved_by_tc():
    g = HilbertGeometry(4, 6)
    h = hamiltonian(ModelSpec("tavis_cummings", lam=2.3), g).data
    ne = excitation_number_op(g).data
    # exact except where J+ a^dag would leave the Fock truncation (not present in TC)
    assert np.allclose(comm(h, ne), 0)


def test_dump_load_roundtrip(tmp_path):
    g = HilbertGeometry(2, 3)
    rng = np.random.default_rng(1)
    m = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
    path = tmp_path / "op.csv"
    dump_operator(OperatorMatrix(m, g), path)
    back = load_operator(path)
    assert back.geometry == g
    assert np.array_equal(back.data, m)
