"""
OTOCs and related correlators evaluated on propagated operators.

All expectation values use the t = 0 state, <X> = Tr(rho X); dissipation is
carried entirely by the propagated operators.  Traces are evaluated through
a factor W with rho = W W^dag (eigenvectors with negligible Boltzmann weight
are dropped), so <X1 X2 ... Xn> is a chain of products applied to W.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .hilbert import OperatorMatrix, as_array, hermitian_deviation
from .thermo import ThermalState

UNDEFINED_THRESHOLD = 1e-12


class Kind(str, enum.Enum):
    C_HERM = "C_herm"
    C_REG = "C_reg"
    C_PHYS = "C_phys"
    D = "D"
    I = "I"
    F = "F"
    ALPHA = "alpha"
    WY_SKEW = "WY_skew"
    G2 = "g2"
    C_AA = "C_aa"


@dataclass
class CorrelatorSeries:
    kind: Kind
    times: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.kind = Kind(self.kind)
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have the same length")

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    def __len__(self):
        return self.times.size


class Ensemble:
    """Expectation values in a fixed state rho.

    Built from a ThermalState (reusing its eigendecomposition) or from a raw
    density matrix.
    """

    def __init__(self, state, weight_cutoff: float = 1e-16):
        if isinstance(state, ThermalState) and state.vectors is not None:
            w, vecs = state.weights, state.vectors
            rho = state.rho.data
        else:
            rho = as_array(state.rho if isinstance(state, ThermalState) else state)
            w, vecs = np.linalg.eigh(0.5 * (rho + rho.conj().T))
        w = np.clip(np.real(w), 0.0, None)
        keep = w > weight_cutoff * w.max()
        self.weights = w[keep]
        self.vecs = np.ascontiguousarray(vecs[:, keep])
        self.dim = rho.shape[0]
        self.factor = self.vecs * np.sqrt(self.weights)
        self.rho = (self.vecs * self.weights) @ self.vecs.conj().T
        self.rho_sqrt = self.factor @ self.vecs.conj().T

    def apply(self, *ops) -> np.ndarray:
        """X1 X2 ... Xn W."""
        out = self.factor
        for op in reversed(ops):
            out = _mul(op, out)
        return out

    def expect(self, *ops) -> complex:
        """Tr(rho X1 ... Xn)."""
        if not ops:
            return complex(np.sum(self.weights))
        return complex(np.vdot(self.factor, self.apply(*ops)))

    def norm2(self, *ops) -> float:
        """Tr(rho X^dag X) for X = X1 ... Xn, always >= 0."""
        v = self.apply(*ops)
        return float(np.vdot(v, v).real)

    def expect_sandwich(self, x, y) -> complex:
        """Tr(rho^(1/2) X rho^(1/2) Y)."""
        s = np.sqrt(self.weights)
        xt = self.vecs.conj().T @ _mul(x, self.vecs)
        yt = self.vecs.conj().T @ _mul(y, self.vecs)
        return complex(np.sum((s[:, None] * xt * s[None, :]) * yt.T))


def _mul(op, v):
    if isinstance(op, OperatorMatrix):
        return op.data @ v
    return op @ v


def _ensemble(state) -> Ensemble:
    return state if isinstance(state, Ensemble) else Ensemble(state)


def _snapshots(ops):
    """Accept (n, d, d), a PropagationResult column, or a list of operators."""
    if hasattr(ops, "operators"):
        return ops.operators[:, 0]
    if isinstance(ops, OperatorMatrix):
        return ops.data[None]
    arr = np.asarray([as_array(o) for o in ops]) if isinstance(ops, list) else np.asarray(ops)
    return arr[None] if arr.ndim == 2 else arr


def _at(ops, i):
    """Operator at time index i; a fixed operator is broadcast."""
    if isinstance(ops, OperatorMatrix):
        return ops.data
    arr = ops if isinstance(ops, np.ndarray) else np.asarray(ops)
    return arr if arr.ndim == 2 else arr[i]


def bracket(x, y, flavor: str) -> np.ndarray:
    """[x, y] for flavor "comm", {x, y} for flavor "anti"."""
    x = as_array(x)
    y = as_array(y)
    if flavor == "comm":
        return x @ y - y @ x
    if flavor == "anti":
        return x @ y + y @ x
    raise ValueError(f"flavor must be 'comm' or 'anti', got {flavor!r}")


def _grid(times, n):
    times = np.asarray(times, float)
    if times.size != n:
        raise ValueError(f"time grid has {times.size} points but {n} snapshots were given")
    return times


# -- OTOC and its decomposition ---------------------------------------------

def otoc(state, a_t, b, times, kind: Kind = Kind.C_HERM, meta=None) -> CorrelatorSeries:
    """<[A_t, B]^dag [A_t, B]> on the grid (B may itself be a series)."""
    ens = _ensemble(state)
    a_t = _snapshots(a_t)
    times = _grid(times, a_t.shape[0])
    vals = np.empty(times.size)
    for i in range(times.size):
        m = bracket(a_t[i], _at(b, i), "comm")
        vals[i] = ens.norm2(m)
    return CorrelatorSeries(kind, times, vals, dict(meta or {}))


def otoc_hermitian(state, a_t, b, times, meta=None) -> CorrelatorSeries:
    """C = -<[A_t, B]^2> for Hermitian A, B, evaluated as <M^dag M> >= 0."""
    b0 = _at(b, 0)
    if hermitian_deviation(b0) > 1e-10:
        raise ValueError("otoc_hermitian needs a Hermitian B")
    return otoc(state, a_t, b, times, Kind.C_HERM, meta)


@dataclass
class Decomposition:
    D: CorrelatorSeries
    I: CorrelatorSeries
    F: CorrelatorSeries
    C: CorrelatorSeries
    D_composite: CorrelatorSeries | None = None

    @property
    def residual(self) -> float:
        """max |C - (D + I - 2 Re F)|."""
        recon = self.D.real + self.I.real - 2.0 * self.F.real
        return float(np.max(np.abs(self.C.real - recon)))


def otoc_decomposition(state, a_t, b, times, composite=None, meta=None) -> Decomposition:
    """D = <B^dag A_t^dag A_t B>, I = <A_t^dag B^dag B A_t>, F = <A_t^dag B^dag A_t B>.

    D uses the product of the propagated A_t so that C = D + I - 2 Re F and
    the Cauchy-Schwarz envelope hold exactly.  If ``composite`` (the
    separately propagated (A^dag A)_t) is given, <B^dag (A^dag A)_t B> is
    returned as ``D_composite`` as well.
    """
    ens = _ensemble(state)
    a_t = _snapshots(a_t)
    times = _grid(times, a_t.shape[0])
    n = times.size
    d_v, i_v, f_v, c_v = (np.empty(n, complex) for _ in range(4))
    dc = np.empty(n, complex) if composite is not None else None
    comp = _snapshots(composite) if composite is not None else None
    for k in range(n):
        a = a_t[k]
        bk = _at(b, k)
        ab = ens.apply(a, bk)
        ba = ens.apply(bk, a)
        d_v[k] = np.vdot(ab, ab).real
        i_v[k] = np.vdot(ba, ba).real
        f_v[k] = np.vdot(ba, ab)
        c_v[k] = np.vdot(ab - ba, ab - ba).real
        if dc is not None:
            dc[k] = ens.expect(bk.conj().T, comp[k], bk)
    meta = dict(meta or {})
    return Decomposition(
        CorrelatorSeries(Kind.D, times, d_v, meta),
        CorrelatorSeries(Kind.I, times, i_v, meta),
        CorrelatorSeries(Kind.F, times, f_v, meta),
        CorrelatorSeries(Kind.C_HERM, times, c_v, meta),
        None if dc is None else CorrelatorSeries(Kind.D, times, dc, {**meta, "composite": True}),
    )


def alpha_t(c: CorrelatorSeries, d: CorrelatorSeries, i: CorrelatorSeries) -> CorrelatorSeries:
    """alpha_t = sqrt(I/D) (sqrt(C/I) - 1); NaN where D or I is below 1e-12."""
    for s in (d, i):
        if s.times.shape != c.times.shape or not np.allclose(s.times, c.times, rtol=0, atol=1e-12):
            raise ValueError("alpha_t needs series on one time grid")
    cv = np.clip(c.real, 0.0, None)
    dv = d.real
    iv = i.real
    out = np.full(cv.shape, np.nan)
    ok = (dv > UNDEFINED_THRESHOLD) & (iv > UNDEFINED_THRESHOLD)
    out[ok] = np.sqrt(iv[ok] / dv[ok]) * (np.sqrt(cv[ok] / iv[ok]) - 1.0)
    meta = dict(c.meta)
    meta["undefined_points"] = int(np.count_nonzero(~ok))
    return CorrelatorSeries(Kind.ALPHA, c.times, out, meta)


def otoc_unitary(f: CorrelatorSeries) -> CorrelatorSeries:
    """2 (1 - Re F), the OTOC for unitary A and B."""
    return CorrelatorSeries(Kind.C_HERM, f.times, 2.0 * (1.0 - f.real), dict(f.meta))


# -- regularized / physical forms and skew information ----------------------

def otoc_regularized(state, a_t, b_t, times, x: str = "comm", y: str = "comm",
                     meta=None) -> CorrelatorSeries:
    """Tr(rho^(1/2) [A_t, B_t']_x rho^(1/2) [A_t, B_t']_y)."""
    ens = _ensemble(state)
    a_t = _snapshots(a_t)
    times = _grid(times, a_t.shape[0])
    vals = np.empty(times.size, complex)
    for k in range(times.size):
        bk = _at(b_t, k)
        vals[k] = ens.expect_sandwich(bracket(a_t[k], bk, x), bracket(a_t[k], bk, y))
    return CorrelatorSeries(Kind.C_REG, times, vals, {**(meta or {}), "x": x, "y": y})


def otoc_physical(state, a_t, b_t, times, x: str = "comm", y: str = "comm",
                  meta=None) -> CorrelatorSeries:
    """Tr(rho [A_t, B_t']_x [A_t, B_t']_y); equals -C_herm for x = y = comm."""
    ens = _ensemble(state)
    a_t = _snapshots(a_t)
    times = _grid(times, a_t.shape[0])
    vals = np.empty(times.size, complex)
    for k in range(times.size):
        bk = _at(b_t, k)
        vals[k] = ens.expect(bracket(a_t[k], bk, x), bracket(a_t[k], bk, y))
    return CorrelatorSeries(Kind.C_PHYS, times, vals, {**(meta or {}), "x": x, "y": y})


def wy_skew(state, o, check: bool = True) -> float:
    """Wigner-Yanase skew information Tr(rho O^2) - Tr(rho^(1/2) O rho^(1/2) O)."""
    om = as_array(o)
    if check and hermitian_deviation(om) > 1e-8:
        raise ValueError("wy_skew needs a Hermitian observable")
    ens = _ensemble(state)
    return float((ens.expect(om, om) - ens.expect_sandwich(om, om)).real)


def _skew_complex(ens: Ensemble, o) -> complex:
    return ens.expect(o, o) - ens.expect_sandwich(o, o)


@dataclass
class RelationReport:
    """Residuals of the three regularized/physical OTOC identities per time."""

    times: np.ndarray
    series: dict
    residuals: dict

    @property
    def max_residual(self) -> dict:
        return {k: float(np.max(np.abs(v))) for k, v in self.residuals.items()}


def relation_suite(state, a_t, b_t, times) -> RelationReport:
    """Check reg = phys + skew for the commutator, anticommutator and mixed forms.

      C_reg[comm,comm] = C_phys[comm,comm] + I(rho, i[A,B])
      C_reg[anti,anti] = C_phys[anti,anti] - I(rho, {A,B})
      C_reg[anti,comm] = (C_phys[anti,comm] + C_phys[comm,anti]) / 2
                         + i/4 I(rho, {A,B} + i[A,B]) - i/4 I(rho, {A,B} - i[A,B])
    """
    ens = _ensemble(state)
    a_t = _snapshots(a_t)
    times = _grid(times, a_t.shape[0])
    names = ["reg_cc", "phys_cc", "skew_comm", "reg_aa", "phys_aa", "skew_anti",
             "reg_ac", "phys_ac", "phys_ca", "skew_plus", "skew_minus"]
    vals = {k: np.empty(times.size, complex) for k in names}
    for k in range(times.size):
        bk = _at(b_t, k)
        comm = bracket(a_t[k], bk, "comm")
        anti = bracket(a_t[k], bk, "anti")
        vals["reg_cc"][k] = ens.expect_sandwich(comm, comm)
        vals["phys_cc"][k] = ens.expect(comm, comm)
        vals["skew_comm"][k] = _skew_complex(ens, 1j * comm)
        vals["reg_aa"][k] = ens.expect_sandwich(anti, anti)
        vals["phys_aa"][k] = ens.expect(anti, anti)
        vals["skew_anti"][k] = _skew_complex(ens, anti)
        vals["reg_ac"][k] = ens.expect_sandwich(anti, comm)
        vals["phys_ac"][k] = ens.expect(anti, comm)
        vals["phys_ca"][k] = ens.expect(comm, anti)
        vals["skew_plus"][k] = _skew_complex(ens, anti + 1j * comm)
        vals["skew_minus"][k] = _skew_complex(ens, anti - 1j * comm)
    v = vals
    residuals = {
        "commutator": v["reg_cc"] - (v["phys_cc"] + v["skew_comm"]),
        "anticommutator": v["reg_aa"] - (v["phys_aa"] - v["skew_anti"]),
        "mixed": v["reg_ac"] - (0.5 * (v["phys_ac"] + v["phys_ca"])
                                + 0.25j * v["skew_plus"] - 0.25j * v["skew_minus"]),
    }
    return RelationReport(times, vals, residuals)


# -- second-order coherence -------------------------------------------------

@dataclass
class G2Bridge:
    """OTOC of the cavity field and its split into D, I, F with D = <n_t>^2 g2."""

    g2: CorrelatorSeries
    c_aa: CorrelatorSeries
    D: CorrelatorSeries
    I: CorrelatorSeries
    F: CorrelatorSeries
    photon_number: np.ndarray

    @property
    def residual_series(self) -> np.ndarray:
        recon = self.photon_number**2 * self.g2.real + self.I.real - 2.0 * self.F.real
        return self.c_aa.real - recon

    @property
    def residual(self) -> float:
        r = self.residual_series
        return float(np.nanmax(np.abs(r))) if np.any(np.isfinite(r)) else 0.0


def otoc_g2_bridge(state, a_t, n_t, times, a_ref=None) -> G2Bridge:
    """g2 and C_aa from a propagated a_t and composite (a^dag a)_t.

    ``a_ref`` is a(t'), fixed or a series aligned with ``times``; by default
    t' = 0, i.e. the unpropagated a (taken from the first snapshot).
    """
    ens = _ensemble(state)
    a_t = _snapshots(a_t)
    n_t = _snapshots(n_t)
    times = _grid(times, a_t.shape[0])
    if a_ref is None:
        if times[0] != 0:
            raise ValueError("a_ref is required when the grid does not start at t = 0")
        a_ref = a_t[0]
    n = times.size
    g2v = np.full(n, np.nan)
    c, d, i_, f, nbar = (np.empty(n, complex) for _ in range(5))
    for k in range(n):
        at = a_t[k]
        ar = _at(a_ref, k)
        x = ens.apply(at, ar)     # a(t) a(t') W
        y = ens.apply(ar, at)     # a(t') a(t) W
        d[k] = np.vdot(x, x).real
        i_[k] = np.vdot(y, y).real
        f[k] = np.vdot(y, x)
        c[k] = np.vdot(x - y, x - y).real
        nbar[k] = ens.expect(n_t[k]).real
        if abs(nbar[k]) > UNDEFINED_THRESHOLD:
            g2v[k] = d[k].real / nbar[k].real ** 2
    meta = {"t_prime": "a_ref"}
    return G2Bridge(CorrelatorSeries(Kind.G2, times, g2v, meta),
                    CorrelatorSeries(Kind.C_AA, times, c, meta),
                    CorrelatorSeries(Kind.D, times, d, meta),
                    CorrelatorSeries(Kind.I, times, i_, meta),
                    CorrelatorSeries(Kind.F, times, f, meta),
                    nbar.real)


def g2(state, a_t, n_t, times, a_ref=None) -> CorrelatorSeries:
    """<a^dag(t') a^dag(t) a(t) a(t')> / <a^dag(t) a(t)>^2 (NaN if the denominator vanishes)."""
    return otoc_g2_bridge(state, a_t, n_t, times, a_ref).g2


def classify_light(g2_series: CorrelatorSeries, tol: float = 1e-6) -> dict:
    """Photon statistics from g2(0) and bunching from g2(t) vs g2(0)."""
    vals = g2_series.real
    g0 = float(vals[0])
    if g0 > 1 + tol:
        stats = "super-Poissonian"
    elif g0 < 1 - tol:
        stats = "sub-Poissonian"
    else:
        stats = "Poissonian"
    later = vals[1:][np.isfinite(vals[1:])]
    if later.size and np.all(later < g0):
        bunching = "bunched"
    elif later.size and np.all(later > g0):
        bunching = "antibunched"
    else:
        bunching = "mixed"
    return {"g2_0": g0, "statistics": stats, "bunching": bunching}
