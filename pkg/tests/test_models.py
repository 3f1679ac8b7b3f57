import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from dicke_chaos.hilbert import HilbertGeometry
from dicke_chaos.models import (BathSpec, ModelSpec, Variant, hamiltonian, jump_operators,
                                spectrum_free)


@pytest.mark.parametrize("kwargs", [
    dict(variant="generalized_dicke", lam=1.0),
    dict(variant="nqubit_dicke", lam=1.0, lam_prime=0.5),
    dict(variant="tavis_cummings", lam=1.0, lam_prime=0.5),
    dict(variant="floquet_dicke", lam0=1.0),
    dict(variant="floquet_dicke", lam0=1.0, delta_lam=0.5, drive_freq=0.0),
    dict(variant="nqubit_dicke", omega_a=-2.0, lam=1.0),
    dict(variant="nqubit_dicke", lam=-1.0),
    dict(variant="nonsense"),
])
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        ModelSpec(**kwargs)


def test_bath_validation_and_occupation():
    with pytest.raises(ValueError):
        BathSpec(gamma=-1)
    assert BathSpec(temperature=0).occupation(2.0) == 0.0
    assert math.isclose(BathSpec(temperature=1.0).occupation(2.0), 1 / (math.e**2 - 1))


def test_variants_agree():
    g = HilbertGeometry(3, 5)
    gd = lambda lam, lp: hamiltonian(ModelSpec("generalized_dicke", lam=lam, lam_prime=lp), g).data
    assert np.allclose(hamiltonian(ModelSpec("nqubit_dicke", lam=1.2), g).data, gd(1.2, 1.2))
    assert np.allclose(hamiltonian(ModelSpec("tavis_cummings", lam=1.2), g).data, gd(1.2, 0.0))
    fd = ModelSpec("floquet_dicke", lam0=0.65, delta_lam=0.75, drive_freq=math.pi)
    for t in (0.0, 0.37, 0.55):
        lam_t = 0.65 + 0.75 * math.cos(math.pi * t)
        assert np.allclose(hamiltonian(fd, g, t).data, gd(lam_t, lam_t))


def test_zero_coupling_ground_energy():
    g = HilbertGeometry(5, 4)
    for v in ("nqubit_dicke", "tavis_cummings"):
        h = hamiltonian(ModelSpec(v, lam=0.0), g).data
        assert np.isclose(np.linalg.eigvalsh(h)[0], -2.0 * g.j)
        assert np.allclose(np.linalg.eigvalsh(h), spectrum_free(ModelSpec(v), g))


def test_tc_first_crossing_at_two():
    # the one-excitation block is [[-w j + 2, lam], [lam, -w j + 2]]: crossing at lam = 2
    g = HilbertGeometry(7, 12)
    e0 = lambda lam: scipy.linalg.eigvalsh(hamiltonian(ModelSpec("tavis_cummings", lam=lam), g).data)[0]
    assert np.isclose(e0(1.95), -7.0, atol=1e-12)
    assert e0(2.05) < -7.0 - 0.05 + 1e-9


def test_jump_operators():
    g = HilbertGeometry(2, 3)
    spec = ModelSpec("nqubit_dicke", lam=1.0, omega_a=1.5, omega_c=2.5)
    (jm, gam, wa), (a, kap, wc) = jump_operators(spec, BathSpec(0.1, 0.2, 1.0), g)
    assert (gam, wa, kap, wc) == (0.1, 1.5, 0.2, 2.5)
    assert np.allclose(a.data[:3, :3], np.diag([1, np.sqrt(2)], k=1))
    assert np.allclose(jm.data[: 3, 3:6], np.eye(3) * math.sqrt(2))


@settings(max_examples=30, deadline=None)
@given(variant=st.sampled_from(list(Variant)),
       lam=st.floats(0, 3), lp=st.floats(0, 3), wa=st.floats(0.1, 4), wc=st.floats(0.1, 4))
def test_spec_roundtrip_and_hermiticity(variant, lam, lp, wa, wc):
    kw = dict(variant=variant, omega_a=wa, omega_c=wc)
    if variant is Variant.GENERALIZED_DICKE:
        kw.update(lam=lam, lam_prime=lp)
    elif variant is Variant.FLOQUET_DICKE:
        kw.update(lam0=lam, delta_lam=lp, drive_freq=1.0)
    else:
        kw.update(lam=lam)
    spec = ModelSpec(**kw)
    assert ModelSpec.from_dict(spec.to_dict()) == spec
    h = hamiltonian(spec, HilbertGeometry(2, 3), 0.3).data
    assert np.array_equal(h, h.conj().T)
