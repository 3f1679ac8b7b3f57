"""Thermal states, ground-state scans and critical couplings."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .hilbert import HilbertGeometry, OperatorMatrix, hermitian_deviation
from .models import ModelSpec, hamiltonian

log = logging.getLogger(__name__)

DEGENERACY_RTOL = 1e-10
NORMAL_PHASE_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class ThermalState:
    """rho, rho^(1/2) and the eigen-decomposition they were built from."""

    rho: OperatorMatrix
    rho_sqrt: OperatorMatrix
    energies: np.ndarray
    weights: np.ndarray
    temperature: float
    vectors: np.ndarray | None = None


def thermal_state(h, temperature: float) -> ThermalState:
    """rho = exp(-H/T)/Z and its square root via eigendecomposition.

    T = 0 gives the (equal-weight, if degenerate) ground-space projector.
    """
    if not isinstance(h, OperatorMatrix):
        raise TypeError("thermal_state expects an OperatorMatrix Hamiltonian")
    geom = h.geometry
    hm = h.data
    if hermitian_deviation(hm) > 1e-10:
        raise ValueError("thermal_state needs a Hermitian Hamiltonian")
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    try:
        energies, vecs = scipy.linalg.eigh(hm)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigendecomposition failed: {exc}") from exc
    e0 = energies[0]
    if temperature == 0:
        scale = max(abs(e0), 1.0)
        ground = np.abs(energies - e0) <= DEGENERACY_RTOL * scale
        w = ground.astype(float)
    else:
        w = np.exp(-(energies - e0) / temperature)
    w /= w.sum()
    rho = (vecs * w) @ vecs.conj().T
    rho_sqrt = (vecs * np.sqrt(w)) @ vecs.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    rho_sqrt = 0.5 * (rho_sqrt + rho_sqrt.conj().T)
    return ThermalState(OperatorMatrix(rho, geom, True), OperatorMatrix(rho_sqrt, geom, True),
                        energies, w, float(temperature), vecs)


def ground_energy(spec: ModelSpec, geom: HilbertGeometry, time: float = 0.0) -> float:
    h = hamiltonian(spec, geom, time).data
    return float(scipy.linalg.eigh(h, eigvals_only=True, subset_by_index=[0, 0])[0])


def finite_differences(x: np.ndarray, y: np.ndarray):
    """Central first and second derivatives on a (possibly non-uniform) grid.

    Second-order accurate in the interior; the end points copy their
    neighbours for the second derivative.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    d1 = np.gradient(y, x, edge_order=2)
    d2 = np.empty_like(y)
    h1 = np.diff(x)[:-1]
    h2 = np.diff(x)[1:]
    d2[1:-1] = 2.0 * ((y[2:] - y[1:-1]) / h2 - (y[1:-1] - y[:-2]) / h1) / (h1 + h2)
    d2[0], d2[-1] = d2[1], d2[-2]
    return d1, d2


@dataclass
class GroundScanResult:
    coupling: np.ndarray
    scaled_energy: np.ndarray
    first_derivative: np.ndarray
    second_derivative: np.ndarray

    def kink(self) -> float:
        """Coupling where the second derivative jumps the most between neighbours."""
        jumps = np.abs(np.diff(self.second_derivative[1:-1]))
        i = int(np.argmax(jumps)) + 1
        return float(0.5 * (self.coupling[i] + self.coupling[i + 1]))

    def departure(self, tol: float = NORMAL_PHASE_TOL) -> float | None:
        """First coupling at which scaled E0 leaves the normal-phase value -1."""
        off = np.nonzero(np.abs(self.scaled_energy + 1.0) > tol)[0]
        return float(self.coupling[off[0]]) if off.size else None

    def normal_phase(self, tol: float = NORMAL_PHASE_TOL) -> np.ndarray:
        return np.abs(self.scaled_energy + 1.0) <= tol


def ground_scan(spec: ModelSpec, geom: HilbertGeometry, couplings, time: float = 0.0,
                jobs: int = 1) -> GroundScanResult:
    """Lowest eigenvalue over a coupling grid, scaled by 1/(omega_a j)."""
    grid = np.asarray(couplings, dtype=float)
    if grid.size < 5:
        raise ValueError("ground_scan needs at least 5 grid points")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("coupling grid must be strictly increasing")
    specs = [spec.with_coupling(float(lam)) for lam in grid]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(jobs) as pool:
            e0 = list(pool.map(ground_energy, specs, [geom] * len(specs), [time] * len(specs)))
    else:
        e0 = [ground_energy(s, geom, time) for s in specs]
    scaled = np.asarray(e0) / (spec.omega_a * geom.j)
    d1, d2 = finite_differences(grid, scaled)
    return GroundScanResult(grid, scaled, d1, d2)


def floquet_ground_trace(spec: ModelSpec, geom: HilbertGeometry, times) -> np.ndarray:
    """Scaled instantaneous ground energy of H(t) over a time grid."""
    return np.array([ground_energy(spec, geom, float(t)) for t in times]) / (spec.omega_a * geom.j)


def critical_total_coupling(omega_a, omega_c, kappa, gamma, s_z, ratio):
    """Threshold of lam^2 + lam'^2 at fixed ratio lam'/lam, or None.

    Rearranged so that R -> 0 is evaluated without cancellation:
    S_c = -P / (2 s_z Q (1 + sqrt(1 - R^2 P / Q^2))).
    """
    if s_z >= 0:
        raise ValueError("s_z must be negative")
    if ratio < 0:
        raise ValueError("ratio must be >= 0")
    if math.isinf(ratio):
        r = -1.0
    else:
        r = (1.0 - ratio**2) / (1.0 + ratio**2)
    p = (omega_c**2 + kappa**2) * (gamma**2 + omega_a**2)
    q = omega_a * omega_c + r * kappa * gamma
    if q <= 0:
        return None
    disc = 1.0 - r * r * p / (q * q)
    if disc < 0:
        return None
    return -p / (2.0 * s_z * q * (1.0 + math.sqrt(disc)))


def critical_coupling_gd(omega_a, omega_c, kappa, gamma, s_z=-0.5, ratio=1.0):
    """Critical coupling of the dissipative generalized Dicke model.

    lam_c^2 = (R-1)(w_a w_c + R k g) / (4 R^2 s_z) * (1 - sqrt(1 - R^2 (w_c^2+k^2)(g^2+w_a^2) / (w_c w_a + R k g)^2))
    with R = (1 - ratio^2)/(1 + ratio^2), ratio = lam'/lam.  Returns the
    positive root or None when there is no real positive solution.
    """
    s_c = critical_total_coupling(omega_a, omega_c, kappa, gamma, s_z, ratio)
    if s_c is None:
        return None
    r = -1.0 if math.isinf(ratio) else (1.0 - ratio**2) / (1.0 + ratio**2)
    lam_sq = 0.5 * (1.0 - r) * s_c
    if lam_sq <= 0:
        return None
    return math.sqrt(lam_sq)


def phase_diagram(lams, lam_primes, omega_a=1.0, omega_c=1.0, kappa=1.0, gamma=0.0, s_z=-0.5):
    """Boolean superradiant map over the (lam, lam') grid, indexed [lam', lam].

    A point is superradiant when lam^2 + lam'^2 exceeds the critical total
    coupling for its ratio.
    """
    lams = np.asarray(lams, float)
    lam_primes = np.asarray(lam_primes, float)
    out = np.zeros((lam_primes.size, lams.size), dtype=bool)
    for i, lp in enumerate(lam_primes):
        for k, lam in enumerate(lams):
            if lam == 0 and lp == 0:
                continue
            ratio = math.inf if lam == 0 else lp / lam
            s_c = critical_total_coupling(omega_a, omega_c, kappa, gamma, s_z, ratio)
            out[i, k] = s_c is not None and lam**2 + lp**2 >= s_c
    return out


def phase_boundary(omega_a=1.0, omega_c=1.0, kappa=1.0, gamma=0.0, s_z=-0.5, n_angles=721):
    """Boundary points (lam, lam') traced over the angle theta = atan(lam'/lam)."""
    theta = np.linspace(0.0, 0.5 * math.pi, n_angles)
    rows = []
    for th in theta:
        ratio = math.inf if np.isclose(th, 0.5 * math.pi) else math.tan(th)
        s_c = critical_total_coupling(omega_a, omega_c, kappa, gamma, s_z, ratio)
        if s_c is None:
            continue
        radius = math.sqrt(s_c)
        rows.append((th, radius * math.cos(th), radius * math.sin(th), radius))
    return np.array(rows).reshape(-1, 4)


def thermal_critical_beta(omega_a, omega_c, lam):
    """beta_c = (2/omega_a) artanh(omega_a omega_c / (4 lam^2)); None without a transition."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    x = omega_a * omega_c / (4.0 * lam * lam)
    if x >= 1.0:
        return None
    return 2.0 / omega_a * math.atanh(x)


class TruncationError(RuntimeError):
    pass


def top_level_population(spec: ModelSpec, geom: HilbertGeometry, temperature: float) -> float:
    """Thermal weight on the highest retained Fock level."""
    h = hamiltonian(spec, geom).data
    energies, vecs = scipy.linalg.eigh(h)
    w = np.exp(-(energies - energies[0]) / temperature) if temperature > 0 else \
        (np.abs(energies - energies[0]) <= DEGENERACY_RTOL * max(abs(energies[0]), 1.0)).astype(float)
    w /= w.sum()
    diag = (np.abs(vecs) ** 2) @ w
    return float(diag.reshape(geom.spin_dim, geom.fock_dim)[:, -1].sum())


def converge_truncation(spec: ModelSpec, geom: HilbertGeometry, tol: float, cap: int = 64,
                        start: int | None = None, temperature: float | None = None):
    """Smallest fock_dim with |E0(n+1) - E0(n)| < tol.

    With ``temperature`` given, the thermal population of the top Fock level
    must also be below ``tol`` (E0 alone misses excited sectors that a
    thermal state occupies).  Returns ``(fock_dim, evidence)`` where
    evidence lists (n, E0(n)) and, if requested, the top-level populations.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = start or 2
    prev = ground_energy(spec, geom.with_fock_dim(n))
    evidence = [(n, prev)]
    e0_done = None
    while n < cap:
        cur = ground_energy(spec, geom.with_fock_dim(n + 1))
        evidence.append((n + 1, cur))
        if abs(cur - prev) < tol:
            e0_done = n
            break
        n += 1
        prev = cur
    if e0_done is None:
        raise TruncationError(f"no convergence to {tol:g} below fock_dim cap {cap}")
    if temperature is None:
        log.info("fock truncation converged at n_f=%d", n)
        return n, evidence
    tails = []
    while n <= cap:
        pop = top_level_population(spec, geom.with_fock_dim(n), temperature)
        tails.append((n, pop))
        if pop < tol:
            log.info("fock truncation converged at n_f=%d (top population %.3g)", n, pop)
            return n, {"ground_energy": evidence, "top_population": tails}
        n += 1
    raise TruncationError(f"thermal tail above {tol:g} at fock_dim cap {cap}")
