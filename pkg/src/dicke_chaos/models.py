"""Dicke-class Hamiltonians and their dissipation channels."""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .hilbert import HilbertGeometry, OperatorMatrix, boson_ops, spin_ops


class Variant(str, enum.Enum):
    GENERALIZED_DICKE = "generalized_dicke"
    NQUBIT_DICKE = "nqubit_dicke"
    TAVIS_CUMMINGS = "tavis_cummings"
    FLOQUET_DICKE = "floquet_dicke"


@dataclass(frozen=True)
class ModelSpec:
    """Physical parameters of one model.

    ``lam`` is the co-rotating coupling and ``lam_prime`` the counter-rotating
    one (generalized Dicke only).  The Floquet variant uses
    lam(t) = lam0 + delta_lam * cos(drive_freq * t) and ignores ``lam``.
    """

    variant: Variant
    omega_a: float = 2.0
    omega_c: float = 2.0
    lam: float = 0.0
    lam_prime: float | None = None
    lam0: float | None = None
    delta_lam: float | None = None
    drive_freq: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not (self.omega_a > 0 and self.omega_c > 0):
            raise ValueError("omega_a and omega_c must be positive")
        v = self.variant
        if v is Variant.GENERALIZED_DICKE:
            if self.lam_prime is None:
                raise ValueError("generalized_dicke needs lam_prime")
        elif v is Variant.NQUBIT_DICKE:
            if self.lam_prime is not None and self.lam_prime != self.lam:
                raise ValueError("nqubit_dicke requires lam_prime == lam")
        elif v is Variant.TAVIS_CUMMINGS:
            if self.lam_prime not in (None, 0, 0.0):
                raise ValueError("tavis_cummings requires lam_prime == 0")
        elif v is Variant.FLOQUET_DICKE:
            if None in (self.lam0, self.delta_lam, self.drive_freq):
                raise ValueError("floquet_dicke needs lam0, delta_lam and drive_freq")
            if self.drive_freq <= 0:
                raise ValueError("drive_freq must be positive")
        for name in ("lam", "lam_prime", "lam0", "delta_lam"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def time_dependent(self) -> bool:
        return self.variant is Variant.FLOQUET_DICKE

    def coupling(self, t: float = 0.0) -> tuple[float, float]:
        """(co-rotating, counter-rotating) couplings at time t."""
        v = self.variant
        if v is Variant.GENERALIZED_DICKE:
            return self.lam, self.lam_prime
        if v is Variant.NQUBIT_DICKE:
            return self.lam, self.lam
        if v is Variant.TAVIS_CUMMINGS:
            return self.lam, 0.0
        lam_t = self.lam0 + self.delta_lam * math.cos(self.drive_freq * t)
        return lam_t, lam_t

    def with_coupling(self, lam: float) -> "ModelSpec":
        """Copy with the co-rotating coupling replaced (lam0 for Floquet)."""
        if self.variant is Variant.FLOQUET_DICKE:
            return replace(self, lam0=lam)
        if self.variant is Variant.NQUBIT_DICKE and self.lam_prime is not None:
            return replace(self, lam=lam, lam_prime=lam)
        return replace(self, lam=lam)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["variant"] = self.variant.value
        return {k: v for k, v in d.items() if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        known = {"variant", "omega_a", "omega_c", "lam", "lam_prime", "lam0",
                 "delta_lam", "drive_freq"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown model fields: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class BathSpec:
    """Dissipation rates and bath temperature (hbar = k_B = 1)."""

    gamma: float = 0.0
    kappa: float = 0.0
    temperature: float = 0.0

    def __post_init__(self):
        for name in ("gamma", "kappa", "temperature"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def occupation(self, omega: float) -> float:
        """Bose occupation 1/(exp(omega/T) - 1), zero at T = 0."""
        if self.temperature == 0:
            return 0.0
        return 1.0 / math.expm1(omega / self.temperature)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "BathSpec":
        return cls(**d)


def hamiltonian_parts(spec: ModelSpec, geom: HilbertGeometry):
    """Split H(t) = static + f(t) * drive.

    Returns ``(static, drive, f)``; for time-independent variants ``drive`` is
    None and the couplings are folded into ``static``.
    """
    a, ad = (op.data for op in boson_ops(geom))
    jz, jp, jm = (op.data for op in spin_ops(geom))
    n = ad @ a
    free = spec.omega_c * n + spec.omega_a * jz
    scale = 1.0 / math.sqrt(geom.n_atoms)
    co = jp @ a + jm @ ad
    counter = jm @ a + jp @ ad
    if spec.time_dependent:
        def f(t):
            return spec.coupling(t)[0]
        return free, scale * (co + counter), f
    lam, lam_prime = spec.coupling()
    return free + scale * (lam * co + lam_prime * counter), None, None


def hamiltonian(spec: ModelSpec, geom: HilbertGeometry, time: float = 0.0) -> OperatorMatrix:
    """H(t) for the given model; ``time`` only matters for the Floquet variant."""
    static, drive, f = hamiltonian_parts(spec, geom)
    h = static if drive is None else static + f(time) * drive
    # products of exact matrices can leave ~1e-16 asymmetry
    h = 0.5 * (h + h.conj().T)
    return OperatorMatrix(h, geom, True)


def jump_operators(spec: ModelSpec, bath: BathSpec, geom: HilbertGeometry):
    """[(J-, gamma, omega_a), (a, kappa, omega_c)]."""
    a, _ = boson_ops(geom)
    _, _, jm = spin_ops(geom)
    return [(jm, bath.gamma, spec.omega_a), (a, bath.kappa, spec.omega_c)]


def describe(spec: ModelSpec) -> str:
    v = spec.variant
    if v is Variant.GENERALIZED_DICKE:
        return f"GD lam={spec.lam:g} lam'={spec.lam_prime:g}"
    if v is Variant.NQUBIT_DICKE:
        return f"Dicke lam={spec.lam:g}"
    if v is Variant.TAVIS_CUMMINGS:
        return f"TC lam={spec.lam:g}"
    return f"FD lam0={spec.lam0:g} dlam={spec.delta_lam:g} Omega={spec.drive_freq:g}"


def spectrum_free(spec: ModelSpec, geom: HilbertGeometry) -> np.ndarray:
    """Sorted eigenvalues of the decoupled Hamiltonian (used for sanity checks)."""
    jz = np.real(np.diag(spin_ops(geom)[0].data))
    n = np.tile(np.arange(geom.fock_dim), geom.spin_dim)
    return np.sort(spec.omega_c * n + spec.omega_a * jz)
