"""
Fused evaluation of X A + A Y + sum_c r_c P_c A Q_c on the spin (x) Fock space.

Every operator used by the models is a short sum of "offset diagonals": a
term (ks, kf, W) has entries O[(i, n), (i + ks, n + kf)] = W[i, n].  The
kernel walks each output row once and accumulates all terms, so one
generator evaluation costs O(d^2 * n_terms) with no temporaries.
"""
from __future__ import annotations

import numba
import numpy as np


class OffsetTerms:
    """Offset-diagonal decomposition of a d x d matrix with d = s * f."""

    def __init__(self, offsets: np.ndarray, weights: np.ndarray):
        self.offsets = np.ascontiguousarray(offsets, dtype=np.int64).reshape(-1, 2)
        self.weights = np.ascontiguousarray(weights, dtype=np.complex128)

    @classmethod
    def from_dense(cls, m: np.ndarray, s: int, f: int, tol: float = 0.0) -> "OffsetTerms":
        m = np.asarray(m)
        rows, cols = np.nonzero(np.abs(m) > tol)
        i, n = np.divmod(rows, f)
        i2, n2 = np.divmod(cols, f)
        ks, kf = i2 - i, n2 - n
        keys = sorted(set(zip(ks.tolist(), kf.tolist())))
        weights = np.zeros((len(keys), s, f), dtype=np.complex128)
        index = {k: t for t, k in enumerate(keys)}
        for r, c, a, b, x, y in zip(rows, cols, ks, kf, i, n):
            weights[index[(a, b)], x, y] = m[r, c]
        return cls(np.array(keys, dtype=np.int64).reshape(-1, 2), weights)

    def __len__(self):
        return self.offsets.shape[0]

    def combine(self, other: "OffsetTerms", scale: complex) -> "OffsetTerms":
        """self + scale * other, merging equal offsets."""
        table = {tuple(k): w.copy() for k, w in zip(self.offsets.tolist(), self.weights)}
        for k, w in zip(other.offsets.tolist(), other.weights):
            k = tuple(k)
            table[k] = table[k] + scale * w if k in table else scale * w
        keys = sorted(table)
        return OffsetTerms(np.array(keys, dtype=np.int64).reshape(-1, 2),
                           np.array([table[k] for k in keys]))


def expand_sandwich(p: OffsetTerms, q: OffsetTerms, rate: float):
    """All (p-term, q-term) pairs of rate * P A Q, flattened for the kernel."""
    po, pw, qo, qw, rates = [], [], [], [], []
    for a in range(len(p)):
        for b in range(len(q)):
            po.append(p.offsets[a])
            pw.append(p.weights[a])
            qo.append(q.offsets[b])
            qw.append(q.weights[b])
            rates.append(rate)
    return po, pw, qo, qw, rates


@numba.njit(cache=True, fastmath=True)
def _apply(a, s, f, lo, lw, ro, rw, po, pw, qo, qw, rates, out):
    d = s * f
    for i in range(s):
        for n in range(f):
            r = i * f + n
            for c in range(d):
                out[r, c] = 0.0
            for t in range(lo.shape[0]):
                i2 = i + lo[t, 0]
                n2 = n + lo[t, 1]
                if i2 < 0 or i2 >= s or n2 < 0 or n2 >= f:
                    continue
                w = lw[t, i, n]
                if w == 0:
                    continue
                r2 = i2 * f + n2
                for c in range(d):
                    out[r, c] += w * a[r2, c]
            for t in range(ro.shape[0]):
                ks = ro[t, 0]
                kf = ro[t, 1]
                for j in range(max(0, -ks), min(s, s - ks)):
                    for m in range(max(0, -kf), min(f, f - kf)):
                        out[r, (j + ks) * f + m + kf] += a[r, j * f + m] * rw[t, j, m]
            for t in range(po.shape[0]):
                i2 = i + po[t, 0]
                n2 = n + po[t, 1]
                if i2 < 0 or i2 >= s or n2 < 0 or n2 >= f:
                    continue
                wp = pw[t, i, n] * rates[t]
                if wp == 0:
                    continue
                r2 = i2 * f + n2
                ks = qo[t, 0]
                kf = qo[t, 1]
                for j in range(max(0, -ks), min(s, s - ks)):
                    for m in range(max(0, -kf), min(f, f - kf)):
                        out[r, (j + ks) * f + m + kf] += wp * a[r2, j * f + m] * qw[t, j, m]
    return out


class FusedGenerator:
    """Callable computing left @ A + A @ right + sum rate * P A Q."""

    def __init__(self, s: int, f: int, left: OffsetTerms, right: OffsetTerms, sandwiches):
        self.s, self.f = s, f
        self.left, self.right = left, right
        po, pw, qo, qw, rates = [], [], [], [], []
        for p, q, rate in sandwiches:
            for lst, vals in zip((po, pw, qo, qw, rates), expand_sandwich(p, q, rate)):
                lst.extend(vals)
        self.po = np.array(po, dtype=np.int64).reshape(-1, 2)
        self.pw = np.array(pw, dtype=np.complex128).reshape(-1, s, f)
        self.qo = np.array(qo, dtype=np.int64).reshape(-1, 2)
        self.qw = np.array(qw, dtype=np.complex128).reshape(-1, s, f)
        self.rates = np.array(rates, dtype=np.float64)

    def __call__(self, a: np.ndarray, left: OffsetTerms | None = None,
                 right: OffsetTerms | None = None, out: np.ndarray | None = None) -> np.ndarray:
        left = left or self.left
        right = right or self.right
        a = np.ascontiguousarray(a, dtype=np.complex128)
        if out is None:
            out = np.empty_like(a)
        return _apply(a, self.s, self.f, left.offsets, left.weights, right.offsets,
                      right.weights, self.po, self.pw, self.qo, self.qw, self.rates, out)
