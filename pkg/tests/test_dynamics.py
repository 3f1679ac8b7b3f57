import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from dicke_chaos.dynamics import (GeneratorContext, apply_adjoint_generator, apply_generator,
                                  propagate, propagate_expm, propagate_state)
from dicke_chaos.hilbert import HilbertGeometry, boson_ops, quadrature_ops
from dicke_chaos.models import BathSpec, ModelSpec

MODELS = [
    ModelSpec("generalized_dicke", lam=0.8, lam_prime=1.3),
    ModelSpec("nqubit_dicke", lam=1.1),
    ModelSpec("tavis_cummings", lam=1.7),
    ModelSpec("floquet_dicke", lam0=0.65, delta_lam=0.75, drive_freq=math.pi),
]


def random_hermitian(d, rng):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return 0.5 * (m + m.conj().T)


def bulk(m, geom):
    """Drop the highest Fock level, where truncation breaks [a, a^dag] = 1."""
    s, f = geom.spin_dim, geom.fock_dim
    return m.reshape(s, f, s, f)[:, :-1, :, :-1]


@pytest.mark.parametrize("spec", MODELS)
def test_fused_matches_sparse(spec):
    rng = np.random.default_rng(3)
    for geom in (HilbertGeometry(3, 5), HilbertGeometry(2, 3, "full_sectors")):
        bath = BathSpec(0.3, 0.2, 0.8)
        fused = GeneratorContext(spec, bath, geom)
        sparse = GeneratorContext(spec, bath, geom, backend="sparse")
        a = random_hermitian(geom.total_dim, rng) + 0.3j * rng.normal(size=(geom.total_dim,) * 2)
        for t in (0.0, 0.31):
            assert np.allclose(apply_adjoint_generator(fused, a, t),
                               apply_adjoint_generator(sparse, a, t), atol=1e-12)
            assert np.allclose(apply_generator(fused, a, t), apply_generator(sparse, a, t),
                               atol=1e-12)


@pytest.mark.parametrize("spec", MODELS)
def test_closed_system_reduces_to_commutator(spec):
    geom = HilbertGeometry(2, 4)
    ctx = GeneratorContext(spec, BathSpec(), geom)
    a = random_hermitian(geom.total_dim, np.random.default_rng(0))
    h = ctx.hamiltonian_at(0.2).data
    assert np.allclose(apply_adjoint_generator(ctx, a, 0.2), 1j * (h @ a - a @ h), atol=1e-12)


def test_damped_cavity_generator():
    geom = HilbertGeometry(1, 8)
    ctx = GeneratorContext(ModelSpec("tavis_cummings", lam=0.0), BathSpec(0.0, 0.4, 0.0), geom)
    a = boson_ops(geom)[0].data
    assert np.allclose(bulk(apply_adjoint_generator(ctx, a), geom),
                       bulk((-2j - 0.2) * a, geom), atol=1e-13)


def test_damped_cavity_propagation():
    geom = HilbertGeometry(1, 10)
    kappa = 0.3
    ctx = GeneratorContext(ModelSpec("tavis_cummings", lam=0.0), BathSpec(0.0, kappa, 0.0), geom)
    a = boson_ops(geom)[0].data
    grid = np.linspace(0, 5, 11)
    res = propagate(ctx, a, grid)
    for t, at in zip(grid, res.series()):
        exact = np.exp((-2j - kappa / 2) * t) * a
        err = np.max(np.abs(bulk(at - exact, geom))) / np.max(np.abs(bulk(exact, geom)))
        assert err < 1e-6


def test_closed_system_matches_eigendecomposition():
    geom = HilbertGeometry(2, 4)
    ctx = GeneratorContext(ModelSpec("nqubit_dicke", lam=1.3), BathSpec(), geom)
    evals, vecs = scipy.linalg.eigh(ctx.hamiltonian.data)
    a0 = random_hermitian(geom.total_dim, np.random.default_rng(5))
    grid = np.linspace(0, 10, 21)
    res = propagate(ctx, a0, grid, rtol=1e-10)
    for t, at in zip(grid, res.series()):
        u = (vecs * np.exp(1j * evals * t)) @ vecs.conj().T
        assert np.max(np.abs(at - u @ a0 @ u.conj().T)) < 1e-7


def test_identity_is_fixed():
    geom = HilbertGeometry(3, 5)
    ctx = GeneratorContext(MODELS[3], BathSpec(0.5, 0.5, 1.0), geom)
    res = propagate(ctx, np.eye(geom.total_dim), np.linspace(0, 3, 7))
    # the step controller only bounds the deviation at the rtol level
    assert np.max(np.abs(res.series() - np.eye(geom.total_dim))) < 1e-7


@settings(max_examples=20, deadline=None)
@given(model=st.sampled_from(MODELS), gamma=st.sampled_from([0.0, 0.01, 0.5]),
       kappa=st.sampled_from([0.0, 0.01, 0.5]), temp=st.sampled_from([0.0, 1.0]),
       t=st.floats(0, 3))
def test_identity_annihilated(model, gamma, kappa, temp, t):
    geom = HilbertGeometry(3, 5)
    ctx = GeneratorContext(model, BathSpec(gamma, kappa, temp), geom)
    assert np.max(np.abs(apply_adjoint_generator(ctx, np.eye(geom.total_dim), t))) < 1e-12


def test_duality():
    geom = HilbertGeometry(2, 4)
    ctx = GeneratorContext(MODELS[0], BathSpec(0.2, 0.3, 1.0), geom)
    rng = np.random.default_rng(11)
    rho0 = random_hermitian(geom.total_dim, rng)
    rho0 = rho0 @ rho0
    rho0 /= np.trace(rho0)
    grid = np.linspace(0, 2, 5)
    states = propagate_state(ctx, rho0, grid, rtol=1e-10)
    assert states.diagnostics["max_trace_error"] < 1e-8
    a0 = random_hermitian(geom.total_dim, rng)
    ops = propagate(ctx, a0, grid, rtol=1e-10)
    for i in range(grid.size):
        lhs = np.trace(rho0 @ ops.operators[i, 0])
        rhs = np.trace(states.operators[i, 0] @ a0)
        assert abs(lhs - rhs) < 1e-6


def test_expm_cross_check():
    geom = HilbertGeometry(2, 3)
    ctx = GeneratorContext(MODELS[1], BathSpec(0.2, 0.4, 0.5), geom)
    q = quadrature_ops(geom)[0].data
    grid = np.linspace(0, 2, 5)
    rk = propagate(ctx, q, grid, rtol=1e-10).series()
    ex = propagate_expm(ctx, q, grid).series()
    assert np.max(np.abs(rk - ex)) < 1e-8
    with pytest.raises(ValueError):
        propagate_expm(GeneratorContext(MODELS[3], BathSpec(), geom), q, grid)


def test_hermiticity_and_tolerance_convergence():
    geom = HilbertGeometry(3, 6)
    ctx = GeneratorContext(MODELS[0], BathSpec(0.05, 0.05, 1.0), geom)
    q = quadrature_ops(geom)[0].data
    grid = np.linspace(0, 3, 7)
    coarse = propagate(ctx, q, grid, rtol=1e-6)
    fine = propagate(ctx, q, grid, rtol=5e-7)
    assert coarse.diagnostics["max_hermiticity_drift"] < 1e-8
    scale = np.max(np.abs(fine.series()))
    assert np.max(np.abs(coarse.series() - fine.series())) < 1e-6 * scale


def test_steady_state_free_cavity():
    geom = HilbertGeometry(1, 4)
    ctx = GeneratorContext(ModelSpec("tavis_cummings", lam=0.0), BathSpec(3.0, 3.0, 0.0), geom)
    rho0 = np.eye(geom.total_dim) / geom.total_dim
    res = propagate_state(ctx, rho0, [0.0, 20.0])
    target = np.zeros(geom.total_dim)
    target[0] = 1.0      # spin down, vacuum
    assert np.allclose(np.diag(res.operators[-1, 0]).real, target, atol=1e-8)


def test_input_errors():
    geom = HilbertGeometry(2, 3)
    ctx = GeneratorContext(MODELS[1], BathSpec(), geom)
    with pytest.raises(ValueError):
        apply_adjoint_generator(ctx, np.eye(4))
    with pytest.raises(ValueError):
        propagate(ctx, np.eye(9), [0.0, 1.0, 0.5])
    with pytest.raises(ValueError):
        GeneratorContext(MODELS[1], BathSpec(), geom, backend="gpu")


def test_multiple_operators_share_steps():
    geom = HilbertGeometry(2, 4)
    ctx = GeneratorContext(MODELS[0], BathSpec(0.1, 0.1, 1.0), geom)
    q, p = (o.data for o in quadrature_ops(geom))
    grid = np.linspace(0, 1, 3)
    both = propagate(ctx, [q, p], grid, rtol=1e-10)
    single = propagate(ctx, p, grid, rtol=1e-10)
    assert both.operators.shape == (3, 2, geom.total_dim, geom.total_dim)
    assert np.max(np.abs(both.series(1) - single.series())) < 1e-8
    seen = []
    streamed = propagate(ctx, q, grid, keep=False, visitor=lambda i, t, y: seen.append(i))
    assert streamed.operators is None and seen == [0, 1, 2]


def test_floquet_duality_at_whole_periods():
    geom = HilbertGeometry(2, 4)
    ctx = GeneratorContext(MODELS[3], BathSpec(0.1, 0.2, 1.0), geom)
    rng = np.random.default_rng(8)
    x = random_hermitian(geom.total_dim, rng)
    rho0 = x @ x / np.trace(x @ x)
    a0 = random_hermitian(geom.total_dim, rng)
    period = 2 * math.pi / MODELS[3].drive_freq
    grid = period * np.arange(4)
    states = propagate_state(ctx, rho0, grid, rtol=1e-10).operators[:, 0]
    ops = propagate(ctx, a0, grid, rtol=1e-10).operators[:, 0]
    for s, a in zip(states, ops):
        assert abs(np.trace(rho0 @ a) - np.trace(s @ a0)) < 1e-7
    # off-period the reversed drive differs and so does the expectation
    half = propagate(ctx, a0, [0.0, period / 4]).operators[-1, 0]
    rho_half = propagate_state(ctx, rho0, [0.0, period / 4]).operators[-1, 0]
    assert abs(np.trace(rho0 @ half) - np.trace(rho_half @ a0)) > 1e-3
