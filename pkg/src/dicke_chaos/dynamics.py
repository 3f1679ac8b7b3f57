"""
Heisenberg-picture propagation under the adjoint Lindblad generator.

The generator is applied through matrix products only:

    L^dag(A) = Z A + A Z^dag + sum_c r_c M_c^dag A M_c,
    Z = i H - 1/2 sum_c r_c M_c^dag M_c,

where the channels c run over (L_k, nu_k (N_k + 1)) and (L_k^dag, nu_k N_k).
H and the jump operators are very sparse in the Fock (x) spin basis, so the
default backend evaluates the whole right-hand side in one fused pass over
the output (see ``_kernels``); the ``"sparse"`` backend does the same
algebra with scipy CSR products and serves as an independent reference.
Either way one evaluation costs O(nnz * d) rather than O(d^3).  No
d^2 x d^2 superoperator is built except by the explicit cross-check path
``liouvillian``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.integrate import DOP853, RK45

from ._kernels import FusedGenerator, OffsetTerms
from .hilbert import HilbertGeometry, OperatorMatrix, as_array, hermitian_deviation
from .models import BathSpec, ModelSpec, hamiltonian, hamiltonian_parts, jump_operators

log = logging.getLogger(__name__)

HERMITICITY_WARN = 1e-6
_METHODS = {"DOP853": DOP853, "RK45": RK45}


class IntegrationError(RuntimeError):
    """Adaptive integration failed; ``time`` is where it stopped."""

    def __init__(self, message, time):
        super().__init__(f"{message} (t = {time:.6g})")
        self.time = time


@dataclass(frozen=True)
class Channel:
    op: sp.csr_matrix        # M_c
    op_dag: sp.csr_matrix    # M_c^dag
    rate: float


class GeneratorContext:
    """Immutable cache of everything the adjoint generator needs.

    Attributes:
        spec, bath, geom: the inputs.
        hamiltonian: H at t=0 as an OperatorMatrix.
        jumps: list of (L_k, nu_k, omega_k).
        channels: non-zero dissipative channels in product form.
    """

    def __init__(self, spec: ModelSpec, bath: BathSpec, geom: HilbertGeometry,
                 backend: str = "fused"):
        if backend not in ("fused", "sparse"):
            raise ValueError(f"unknown backend {backend!r}")
        self.backend = backend
        self.spec = spec
        self.bath = bath
        self.geom = geom
        self.hamiltonian = hamiltonian(spec, geom, 0.0)
        self.jumps = jump_operators(spec, bath, geom)

        channels = []
        k_total = sp.csr_matrix((geom.total_dim, geom.total_dim), dtype=complex)
        self.products = []
        for op, nu, omega in self.jumps:
            l = sp.csr_matrix(op.data)
            ld = sp.csr_matrix(op.data.conj().T)
            n_th = bath.occupation(omega)
            self.products.append({"L": l, "Ldag": ld, "LdagL": (ld @ l).tocsr(),
                                  "LLdag": (l @ ld).tocsr(), "n_th": n_th})
            for m, mdag, rate in ((l, ld, nu * (n_th + 1.0)), (ld, l, nu * n_th)):
                if rate > 0:
                    channels.append(Channel(m, mdag, rate))
                    k_total = k_total + rate * (mdag @ m)
        self.channels = tuple(channels)
        self._k_half = (0.5 * k_total).tocsr()

        static, drive, f = hamiltonian_parts(spec, geom)
        self._drive_fn = f
        self._z_static = (1j * sp.csr_matrix(static) - self._k_half).tocsr()
        self._drive = None if drive is None else (1j * sp.csr_matrix(drive)).tocsr()
        if self._drive is None:
            self._z_cache = (self._z_static, self._z_static.conj().T.tocsr())
        if backend == "fused":
            self._build_fused()

    def _build_fused(self):
        s, f = self.geom.spin_dim, self.geom.fock_dim

        def terms(m):
            return OffsetTerms.from_dense(m.toarray(), s, f)

        zs = terms(self._z_static)
        zd = terms(self._drive) if self._drive is not None else OffsetTerms(np.zeros((0, 2)), np.zeros((0, s, f)))
        # align static and drive parts on one offset list so Z(t) is a single axpy
        union = zs.combine(zd, 0.0)
        drive = OffsetTerms(np.zeros((0, 2)), np.zeros((0, s, f))).combine(zd, 1.0)
        drive = union.combine(drive, 1.0)
        self._zs_terms = union
        self._zd_weights = drive.weights - union.weights
        zs_dag = terms(self._z_static.conj().T.tocsr())
        zd_dag = terms(self._drive.conj().T.tocsr()) if self._drive is not None else OffsetTerms(np.zeros((0, 2)), np.zeros((0, s, f)))
        union_dag = zs_dag.combine(zd_dag, 0.0)
        self._zs_dag_terms = union_dag
        self._zd_dag_weights = union_dag.combine(zd_dag, 1.0).weights - union_dag.weights
        self._fused_adj = FusedGenerator(
            s, f, union, union_dag,
            [(terms(ch.op_dag), terms(ch.op), ch.rate) for ch in self.channels])
        self._fused_fwd = FusedGenerator(
            s, f, union_dag, union,
            [(terms(ch.op), terms(ch.op_dag), ch.rate) for ch in self.channels])

    def z_terms(self, t: float):
        """(Z(t), Z(t)^dag) as offset-diagonal terms."""
        if self._drive is None:
            return self._zs_terms, self._zs_dag_terms
        x = self._drive_fn(t)
        z = OffsetTerms(self._zs_terms.offsets, self._zs_terms.weights + x * self._zd_weights)
        zd = OffsetTerms(self._zs_dag_terms.offsets,
                         self._zs_dag_terms.weights + np.conj(x) * self._zd_dag_weights)
        return z, zd

    @property
    def time_dependent(self) -> bool:
        return self._drive is not None

    def z_matrix(self, t: float):
        """(Z(t), Z(t)^dag) as CSR matrices."""
        if self._drive is None:
            return self._z_cache
        z = (self._z_static + self._drive_fn(t) * self._drive).tocsr()
        return z, z.conj().T.tocsr()

    def hamiltonian_at(self, t: float) -> OperatorMatrix:
        return hamiltonian(self.spec, self.geom, t) if self.time_dependent else self.hamiltonian


def _rmul(a: np.ndarray, m: sp.csr_matrix) -> np.ndarray:
    # A @ M for sparse M, evaluated as (M^T A^T)^T with a C-ordered operand
    return np.ascontiguousarray((m.T @ a.T).T)


def apply_adjoint_generator(ctx: GeneratorContext, a, time: float = 0.0) -> np.ndarray:
    """L^dag(A) at the given time."""
    am = as_array(a)
    d = ctx.geom.total_dim
    if am.shape != (d, d):
        raise ValueError(f"operator shape {am.shape} does not match geometry dim {d}")
    if ctx.backend == "fused":
        z, zdag = ctx.z_terms(time)
        return ctx._fused_adj(am, z, zdag)
    z, zdag = ctx.z_matrix(time)
    out = z @ am + _rmul(am, zdag)
    for ch in ctx.channels:
        out += ch.rate * _rmul(ch.op_dag @ am, ch.op)
    return out


def apply_generator(ctx: GeneratorContext, rho, time: float = 0.0) -> np.ndarray:
    """Schroedinger-picture generator L(rho), the predual of L^dag."""
    rm = as_array(rho)
    if ctx.backend == "fused":
        z, zdag = ctx.z_terms(time)
        return ctx._fused_fwd(rm, zdag, z)
    z, zdag = ctx.z_matrix(time)
    out = zdag @ rm + _rmul(rm, z)
    for ch in ctx.channels:
        out += ch.rate * _rmul(ch.op @ rm, ch.op_dag)
    return out


@dataclass
class PropagationResult:
    """Operators sampled on a time grid plus integrator diagnostics.

    ``operators`` has shape (n_times, n_ops, d, d) unless the caller asked
    for streaming only (then it is None).
    """

    times: np.ndarray
    operators: np.ndarray | None
    diagnostics: dict = field(default_factory=dict)

    def series(self, index: int = 0) -> np.ndarray:
        """All snapshots of one propagated operator, shape (n_times, d, d)."""
        return self.operators[:, index]


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("time grid must be a non-empty 1-d array")
    if grid[0] < 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("time grid must be strictly increasing from t >= 0")
    return grid


def _integrate(rhs: Callable, y0: np.ndarray, grid: np.ndarray, visit: Callable,
               rtol: float, atol: float, method: str, hermitian: Sequence[bool],
               max_step: float) -> dict:
    """Drive a scipy embedded RK stepper and hand dense-output samples to ``visit``.

    y0 has shape (k, d, d).  Samples that drift from Hermiticity by more
    than HERMITICITY_WARN are symmetrised and the stepper is restarted from
    the corrected state.
    """
    shape = y0.shape
    solver_cls = _METHODS[method]

    def fun(t, y):
        return rhs(t, y.reshape(shape)).ravel()

    def make(t0, y):
        return solver_cls(fun, t0, y.ravel(), grid[-1] if grid[-1] > t0 else t0 + 1e-300,
                          rtol=rtol, atol=atol, max_step=max_step, vectorized=False)

    diag = {"method": method, "rtol": rtol, "atol": atol, "n_steps": 0, "nfev": 0,
            "min_step": math.inf, "max_step": 0.0, "max_hermiticity_drift": 0.0,
            "symmetrizations": 0, "restarts": 0}
    herm = np.asarray(hermitian, dtype=bool)
    i = 0
    t_cur = 0.0
    y_cur = y0
    while i < grid.size and grid[i] <= t_cur:
        if grid[i] == t_cur:
            visit(i, grid[i], y_cur.copy())
        i += 1
    if i >= grid.size:
        return diag
    solver = make(t_cur, y_cur)
    nfev_offset = 0
    while i < grid.size:
        message = solver.step()
        if solver.status == "failed":
            raise IntegrationError(f"integrator failed: {message}", solver.t)
        h = solver.t - solver.t_old
        diag["n_steps"] += 1
        diag["min_step"] = min(diag["min_step"], h)
        diag["max_step"] = max(diag["max_step"], h)
        if h <= 0 or h < 1e-14 * max(1.0, abs(solver.t)):
            raise IntegrationError("step size underflow", solver.t)
        interp = None
        restart_from = None
        while i < grid.size and grid[i] <= solver.t:
            if grid[i] == solver.t:
                y = solver.y.reshape(shape).copy()
            else:
                if interp is None:
                    interp = solver.dense_output()
                y = interp(grid[i]).reshape(shape)
            if herm.any():
                drift = max(hermitian_deviation(y[k]) for k in np.nonzero(herm)[0])
                diag["max_hermiticity_drift"] = max(diag["max_hermiticity_drift"], drift)
                if drift > HERMITICITY_WARN:
                    log.warning("hermiticity drift %.2e at t=%.4g; symmetrising", drift, grid[i])
                    for k in np.nonzero(herm)[0]:
                        y[k] = 0.5 * (y[k] + y[k].conj().T)
                    diag["symmetrizations"] += 1
                    restart_from = (grid[i], y)
            visit(i, grid[i], y)
            i += 1
            if restart_from is not None:
                break
        if restart_from is not None and i < grid.size:
            nfev_offset += solver.nfev
            solver = make(*restart_from)
            diag["restarts"] += 1
    diag["nfev"] = nfev_offset + solver.nfev
    return diag


def _stack(ops) -> tuple[np.ndarray, list[bool]]:
    if isinstance(ops, (OperatorMatrix, np.ndarray)) and np.ndim(as_array(ops)) == 2:
        ops = [ops]
    arrays = [as_array(o) for o in ops]
    herm = [hermitian_deviation(a) <= 1e-12 for a in arrays]
    return np.array(arrays, dtype=complex), herm


def propagate(ctx: GeneratorContext, a0, grid, rtol: float = 1e-8, atol: float | None = None,
              method: str = "DOP853", visitor: Callable | None = None, keep: bool = True,
              max_step: float = math.inf) -> PropagationResult:
    """Integrate dA/dt = L^dag(A(t), t) and sample A on ``grid``.

    For a time-dependent generator this local equation orders the
    generators backwards in time, so Tr(rho_0 A_t) matches the state
    evolved under the reversed drive t - s.  For the cosine drive the two
    coincide at whole drive periods.

    ``a0`` may be a single operator or a sequence; several operators are
    propagated together with a shared step sequence.  ``visitor(i, t, ops)``
    is called for every grid point with ops of shape (k, d, d); with
    ``keep=False`` nothing else is stored, which bounds memory on large
    spaces.
    """
    grid = _check_grid(grid)
    y0, herm = _stack(a0)
    d = ctx.geom.total_dim
    if y0.shape[1:] != (d, d):
        raise ValueError(f"operator dim {y0.shape[1:]} does not match geometry dim {d}")
    if atol is None:
        atol = rtol * 1e-2 * max(1.0, float(np.max(np.abs(y0))))
    store = np.empty((grid.size,) + y0.shape, dtype=complex) if keep else None

    def rhs(t, y):
        return np.array([apply_adjoint_generator(ctx, y[k], t) for k in range(y.shape[0])])

    def visit(i, t, y):
        if store is not None:
            store[i] = y
        if visitor is not None:
            visitor(i, t, y)

    diag = _integrate(rhs, y0, grid, visit, rtol, atol, method, herm, max_step)
    return PropagationResult(grid, store, diag)


def propagate_state(ctx: GeneratorContext, rho0, grid, rtol: float = 1e-8,
                    atol: float | None = None, method: str = "DOP853") -> PropagationResult:
    """Integrate d rho/dt = L(rho(t), t) for a density matrix.

    Exact dual of ``propagate`` for static generators; see its docstring
    for the time-dependent case.
    """
    grid = _check_grid(grid)
    y0, herm = _stack(rho0)
    if atol is None:
        atol = rtol * 1e-2
    store = np.empty((grid.size,) + y0.shape, dtype=complex)

    def rhs(t, y):
        return np.array([apply_generator(ctx, y[k], t) for k in range(y.shape[0])])

    def visit(i, t, y):
        store[i] = y

    diag = _integrate(rhs, y0, grid, visit, rtol, atol, method, herm, math.inf)
    traces = np.real(np.einsum("tkii->tk", store))
    diag["max_trace_error"] = float(np.max(np.abs(traces - np.real(np.trace(y0, axis1=1, axis2=2)))))
    return PropagationResult(grid, store, diag)


EXPM_MAX_DIM = 100


def liouvillian(ctx: GeneratorContext, adjoint: bool = True) -> sp.csr_matrix:
    """Sparse d^2 x d^2 matrix of L^dag (or L) acting on row-major vec(A).

    Uses vec(X A Y) = (X kron Y^T) vec(A).  Time-independent models only.
    """
    if ctx.time_dependent:
        raise ValueError("liouvillian is only defined for time-independent generators")
    d = ctx.geom.total_dim
    eye = sp.identity(d, dtype=complex, format="csr")
    z, zdag = ctx.z_matrix(0.0)
    if adjoint:
        sup = sp.kron(z, eye) + sp.kron(eye, zdag.T)
        for ch in ctx.channels:
            sup = sup + ch.rate * sp.kron(ch.op_dag, ch.op.T)
    else:
        sup = sp.kron(zdag, eye) + sp.kron(eye, z.T)
        for ch in ctx.channels:
            sup = sup + ch.rate * sp.kron(ch.op, ch.op_dag.T)
    return sup.tocsr()


def propagate_expm(ctx: GeneratorContext, a0, grid) -> PropagationResult:
    """Cross-check path: A(t) = exp(t L^dag) A0 via the sparse Liouvillian.

    Restricted to time-independent generators with total_dim <= EXPM_MAX_DIM.
    """
    from scipy.sparse.linalg import expm_multiply

    grid = _check_grid(grid)
    d = ctx.geom.total_dim
    if d > EXPM_MAX_DIM:
        raise ValueError(f"expm cross-check limited to dim <= {EXPM_MAX_DIM}")
    sup = liouvillian(ctx)
    y0, _ = _stack(a0)
    out = np.empty((grid.size,) + y0.shape, dtype=complex)
    for k in range(y0.shape[0]):
        v = y0[k].ravel()
        t_prev = 0.0
        for i, t in enumerate(grid):
            v = expm_multiply(sup * (t - t_prev), v) if t > t_prev else v
            out[i, k] = v.reshape(d, d)
            t_prev = t
    return PropagationResult(grid, out, {"method": "expm"})
