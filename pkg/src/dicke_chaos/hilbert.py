"""
Truncated spin (x) boson Hilbert spaces and their elementary operators.

Basis ordering is spin-index-major, Fock-index-minor, so a full-space
operator is ``kron(spin_part, fock_part)``.  The collective |j, m> basis is
ordered with m ascending from -j to +j.  In the full 2^N spin space each
site uses the ordering (down, up), which makes N=1 identical to the
collective construction.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

HERMITIAN_RTOL = 1e-12
MAX_FULL_ATOMS = 8


class SpinMode(str, enum.Enum):
    COLLECTIVE = "collective"
    FULL_SECTORS = "full_sectors"


@dataclass(frozen=True)
class HilbertGeometry:
    """Dimensions of the atoms (x) cavity space.

    Attributes:
        n_atoms: number of two-level atoms N.
        fock_dim: number of retained Fock levels n_f.
        spin_mode: pseudospin j=N/2 sector only, or the full 2^N space.
    """

    n_atoms: int
    fock_dim: int
    spin_mode: SpinMode = SpinMode.COLLECTIVE

    def __post_init__(self):
        object.__setattr__(self, "spin_mode", SpinMode(self.spin_mode))
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise ValueError(f"n_atoms must be a positive integer, got {self.n_atoms}")
        if int(self.fock_dim) != self.fock_dim or self.fock_dim < 2:
            raise ValueError(f"fock_dim must be an integer >= 2, got {self.fock_dim}")

    @property
    def j(self) -> float:
        return self.n_atoms / 2

    @property
    def spin_dim(self) -> int:
        if self.spin_mode is SpinMode.COLLECTIVE:
            return self.n_atoms + 1
        return 2**self.n_atoms

    @property
    def total_dim(self) -> int:
        return self.spin_dim * self.fock_dim

    def with_fock_dim(self, fock_dim: int) -> "HilbertGeometry":
        return HilbertGeometry(self.n_atoms, fock_dim, self.spin_mode)

    def to_dict(self) -> dict:
        return {"n_atoms": self.n_atoms, "fock_dim": self.fock_dim,
                "spin_mode": self.spin_mode.value}

    @classmethod
    def from_dict(cls, d: dict) -> "HilbertGeometry":
        return cls(int(d["n_atoms"]), int(d["fock_dim"]),
                   SpinMode(d.get("spin_mode", "collective")))


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense complex matrix on a given geometry.

    ``hermitian`` is a hint set by constructors that produce Hermitian
    operators; it is validated on construction.
    """

    data: np.ndarray
    geometry: HilbertGeometry
    hermitian: bool = field(default=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        d = self.geometry.total_dim
        if data.shape != (d, d):
            raise ValueError(f"operator shape {data.shape} does not match total_dim {d}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        if self.hermitian and hermitian_deviation(data) > HERMITIAN_RTOL:
            raise ValueError("operator flagged hermitian but data is not")

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    @property
    def shape(self):
        return self.data.shape

    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self.data.conj().T, self.geometry, self.hermitian)

    def __matmul__(self, other):
        other_data = other.data if isinstance(other, OperatorMatrix) else other
        return OperatorMatrix(self.data @ other_data, self.geometry)


def hermitian_deviation(m: np.ndarray) -> float:
    """max|M - M^dag| relative to max|M| (0 for the zero matrix)."""
    m = np.asarray(m)
    scale = np.max(np.abs(m)) if m.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(m - m.conj().T)) / scale)


def as_array(op) -> np.ndarray:
    if isinstance(op, OperatorMatrix):
        return op.data
    return np.asarray(op, dtype=complex)


# -- single-factor building blocks ------------------------------------------

def fock_lowering(fock_dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, fock_dim)), k=1).astype(complex)


def spin_matrices(j: float):
    """(Jz, J+, J-) for spin j in the ascending-m basis."""
    m = np.arange(-j, j + 1)
    jz = np.diag(m).astype(complex)
    # J+|j,m> = sqrt(j(j+1) - m(m+1)) |j,m+1>
    up = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))
    jp = np.diag(up, k=-1).astype(complex)
    return jz, jp, jp.T.copy()


def _site_op(single: np.ndarray, site: int, n_atoms: int) -> np.ndarray:
    eye = np.eye(2, dtype=complex)
    factors = [single if k == site else eye for k in range(n_atoms)]
    return reduce(np.kron, factors)


def pauli_site_ops(n_atoms: int, site: int):
    """(sigma_z, sigma_+, sigma_-) for one site of the 2^N spin factor."""
    sz = np.diag([-1.0, 1.0]).astype(complex)
    sp = np.array([[0, 0], [1, 0]], dtype=complex)
    return (_site_op(sz, site, n_atoms), _site_op(sp, site, n_atoms),
            _site_op(sp.T.copy(), site, n_atoms))


def lift_spin(geom: HilbertGeometry, spin_op: np.ndarray) -> np.ndarray:
    return np.kron(spin_op, np.eye(geom.fock_dim, dtype=complex))


def lift_fock(geom: HilbertGeometry, fock_op: np.ndarray) -> np.ndarray:
    return np.kron(np.eye(geom.spin_dim, dtype=complex), fock_op)


# -- full-space operators ---------------------------------------------------

def boson_ops(geom: HilbertGeometry):
    """Cavity annihilation and creation operators on the full space."""
    a = lift_fock(geom, fock_lowering(geom.fock_dim))
    return OperatorMatrix(a, geom), OperatorMatrix(a.conj().T, geom)


def quadrature_ops(geom: HilbertGeometry):
    """q = (a^dag + a)/sqrt2 and p = i(a^dag - a)/sqrt2."""
    a, ad = boson_ops(geom)
    q = (ad.data + a.data) / np.sqrt(2)
    p = 1j * (ad.data - a.data) / np.sqrt(2)
    return OperatorMatrix(q, geom, True), OperatorMatrix(p, geom, True)


def number_op(geom: HilbertGeometry) -> OperatorMatrix:
    n = np.diag(np.arange(geom.fock_dim, dtype=float)).astype(complex)
    return OperatorMatrix(lift_fock(geom, n), geom, True)


def collective_spin_ops(geom: HilbertGeometry):
    """Jz, J+, J- for the j=N/2 sector."""
    if geom.spin_mode is not SpinMode.COLLECTIVE:
        raise ValueError("collective_spin_ops needs a collective geometry; use pauli_sum_ops")
    jz, jp, jm = spin_matrices(geom.j)
    return (OperatorMatrix(lift_spin(geom, jz), geom, True),
            OperatorMatrix(lift_spin(geom, jp), geom),
            OperatorMatrix(lift_spin(geom, jm), geom))


def pauli_sum_ops(geom: HilbertGeometry, max_atoms: int = MAX_FULL_ATOMS):
    """Jz = 1/2 sum sigma_z and J+- = sum sigma_+- on the full 2^N spin space."""
    if geom.spin_mode is not SpinMode.FULL_SECTORS:
        raise ValueError("pauli_sum_ops needs a full_sectors geometry; use collective_spin_ops")
    if geom.n_atoms > max_atoms:
        raise ValueError(f"full-sector space limited to N <= {max_atoms}, got N={geom.n_atoms}")
    dim = geom.spin_dim
    jz = np.zeros((dim, dim), dtype=complex)
    jp = np.zeros((dim, dim), dtype=complex)
    for site in range(geom.n_atoms):
        sz, sp, _ = pauli_site_ops(geom.n_atoms, site)
        jz += 0.5 * sz
        jp += sp
    return (OperatorMatrix(lift_spin(geom, jz), geom, True),
            OperatorMatrix(lift_spin(geom, jp), geom),
            OperatorMatrix(lift_spin(geom, jp.conj().T), geom))


def spin_ops(geom: HilbertGeometry):
    """Jz, J+, J- in whichever spin mode the geometry uses."""
    if geom.spin_mode is SpinMode.COLLECTIVE:
        return collective_spin_ops(geom)
    return pauli_sum_ops(geom)


def parity_op(geom: HilbertGeometry) -> OperatorMatrix:
    """Pi = exp[-i pi (a^dag a + Jz)] with the constant phase exp(-i pi j) dropped.

    The exponent is shifted to a^dag a + Jz + j, an integer on every basis
    state, so Pi is real, diagonal and squares to the identity.
    """
    if geom.spin_mode is not SpinMode.COLLECTIVE:
        raise ValueError("parity_op is defined on the collective geometry")
    m = np.arange(-geom.j, geom.j + 1)
    n = np.arange(geom.fock_dim)
    exponent = np.add.outer(np.rint(m + geom.j), n).ravel()
    return OperatorMatrix(np.diag((-1.0) ** exponent).astype(complex), geom, True)


def excitation_number_op(geom: HilbertGeometry) -> OperatorMatrix:
    jz = spin_ops(geom)[0]
    return OperatorMatrix(number_op(geom).data + jz.data, geom, True)


def dump_operator(op: OperatorMatrix, path) -> None:
    """Write an operator as CSV of (row, col, re, im) after a geometry header line."""
    g = op.geometry
    data = op.data
    rows, cols = np.indices(data.shape)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# n_atoms={g.n_atoms} fock_dim={g.fock_dim} "
                 f"spin_mode={g.spin_mode.value} total_dim={g.total_dim}\n")
        fh.write("row,col,re,im\n")
        for r, c, v in zip(rows.ravel(), cols.ravel(), data.ravel()):
            fh.write(f"{r},{c},{v.real:.17g},{v.imag:.17g}\n")


def load_operator(path) -> OperatorMatrix:
    with open(path) as fh:
        header = fh.readline().lstrip("# ").split()
        meta = dict(item.split("=") for item in header)
        geom = HilbertGeometry(int(meta["n_atoms"]), int(meta["fock_dim"]),
                               SpinMode(meta["spin_mode"]))
        table = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
    d = geom.total_dim
    data = np.zeros((d, d), dtype=complex)
    data[table[:, 0].astype(int), table[:, 1].astype(int)] = table[:, 2] + 1j * table[:, 3]
    return OperatorMatrix(data, geom)
