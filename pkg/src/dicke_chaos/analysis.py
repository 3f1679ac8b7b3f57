"""Lyapunov fits, window search and long-time classification of OTOC series."""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np

MIN_SAMPLES = 8
TIE_RTOL = 1e-9


class FitMode(str, enum.Enum):
    RAW = "raw"            # lyapunov = slope of log C
    SQUARED = "squared"    # C ~ exp(2 lambda t): lyapunov = slope / 2


class LongTime(str, enum.Enum):
    DECAYS_TO_ZERO = "DecaysToZero"
    SATURATES_NONZERO = "SaturatesNonzero"
    OSCILLATORY = "Oscillatory"


class FitError(ValueError):
    pass


class NoWindowError(FitError):
    """No window shows clean exponential growth."""


@dataclass
class FitResult:
    lyapunov: float
    slope: float
    intercept: float
    window: tuple
    r_squared: float
    bound_value: float
    bound_satisfied: bool
    mode: str
    n_samples: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d


def _values(series):
    if hasattr(series, "times"):
        return np.asarray(series.times, float), np.real(np.asarray(series.values))
    t, y = series
    return np.asarray(t, float), np.real(np.asarray(y))


def _linfit(t, y):
    """Least-squares slope, intercept and r^2 of y against t."""
    tm = t.mean()
    ym = y.mean()
    dt = t - tm
    dy = y - ym
    stt = np.dot(dt, dt)
    slope = np.dot(dt, dy) / stt
    intercept = ym - slope * tm
    syy = np.dot(dy, dy)
    r2 = 1.0 if syy == 0 else min(1.0, (np.dot(dt, dy) ** 2) / (stt * syy))
    return float(slope), float(intercept), float(r2)


def fit_lyapunov(series, window, mode: FitMode | str = FitMode.RAW,
                 temperature: float = 0.0) -> FitResult:
    """Straight-line fit of log C(t) on the closed window [t0, t1].

    ``series`` is a CorrelatorSeries or a (times, values) pair.  The chaos
    bound 2 pi T is checked against the reported exponent.
    """
    mode = FitMode(mode)
    t, y = _values(series)
    t0, t1 = map(float, window)
    if not t1 > t0:
        raise FitError("window end must exceed its start")
    eps = 1e-9 * max(1.0, abs(t1))
    sel = (t >= t0 - eps) & (t <= t1 + eps)
    if np.count_nonzero(sel) < MIN_SAMPLES:
        raise FitError(f"window {window} holds {np.count_nonzero(sel)} samples, need {MIN_SAMPLES}")
    ys = y[sel]
    if np.any(~np.isfinite(ys)) or np.any(ys <= 0):
        raise FitError("series must be positive and finite on the fit window")
    slope, intercept, r2 = _linfit(t[sel], np.log(ys))
    lyap = slope if mode is FitMode.RAW else 0.5 * slope
    bound = 2.0 * math.pi * temperature
    return FitResult(lyap, slope, intercept, (t0, t1), r2, bound, bool(lyap <= bound),
                     mode.value, int(np.count_nonzero(sel)))


def auto_window(series, min_len: float, r2_min: float = 0.98, monotone: bool = False):
    """Window of length >= min_len maximizing r^2 of the log-linear fit.

    Only windows with positive slope, r^2 >= r2_min and at least
    MIN_SAMPLES strictly positive samples qualify (with ``monotone`` the
    samples must also increase strictly).  r^2 values within TIE_RTOL count
    as equal; ties go to the earliest start, then the longest window.
    Raises NoWindowError when nothing qualifies.
    """
    t, y = _values(series)
    n = t.size
    ok = np.isfinite(y) & (y > 0)
    logy = np.where(ok, np.log(np.where(ok, y, 1.0)), 0.0)
    rising = np.concatenate([[True], np.diff(y) > 0])
    # prefix sums give O(1) regression statistics per window
    c = lambda v: np.concatenate([[0.0], np.cumsum(v)])
    st, sy, stt, sty, syy = c(t), c(logy), c(t * t), c(t * logy), c(logy * logy)
    bad = c((~ok).astype(float))
    falls = c((~rising).astype(float))
    best = None
    for i in range(n):
        for j in range(i + MIN_SAMPLES - 1, n):
            if t[j] - t[i] < min_len - 1e-12:
                continue
            if bad[j + 1] - bad[i] > 0:
                break
            if monotone and falls[j + 1] - falls[i + 1] > 0:
                break
            m = j - i + 1
            sxx = (stt[j + 1] - stt[i]) - (st[j + 1] - st[i]) ** 2 / m
            sxy = (sty[j + 1] - sty[i]) - (st[j + 1] - st[i]) * (sy[j + 1] - sy[i]) / m
            syy_ = (syy[j + 1] - syy[i]) - (sy[j + 1] - sy[i]) ** 2 / m
            if sxx <= 0 or sxy <= 0:
                continue
            r2 = 1.0 if syy_ <= 0 else min(1.0, sxy * sxy / (sxx * syy_))
            if r2 < r2_min:
                continue
            if best is None or r2 > best[0] * (1 + TIE_RTOL):
                best = (r2, i, j)
            elif r2 >= best[0] * (1 - TIE_RTOL) and i == best[1] and j > best[2]:
                best = (max(r2, best[0]), i, j)
    if best is None:
        raise NoWindowError("no window with exponential growth")
    return float(t[best[1]]), float(t[best[2]])


def has_exponential_window(series, min_len: float, **kwargs) -> bool:
    try:
        auto_window(series, min_len, **kwargs)
    except NoWindowError:
        return False
    return True


def classify_longtime(series, tail_fraction: float = 0.25, decay_threshold: float = 0.02,
                      oscillation_threshold: float = 0.5) -> LongTime:
    """Label the tail of a series by its mean and relative spread."""
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must be in (0, 1]")
    t, y = _values(series)
    y = y[np.isfinite(y)]
    k = max(1, int(math.ceil(tail_fraction * y.size)))
    tail = y[-k:]
    mu = float(np.mean(tail))
    sigma = float(np.std(tail))
    peak = float(np.max(y))
    if mu < decay_threshold * peak:
        return LongTime.DECAYS_TO_ZERO
    if sigma / mu > oscillation_threshold:
        return LongTime.OSCILLATORY
    return LongTime.SATURATES_NONZERO


def scrambling_time(series) -> float:
    """Time of the global maximum."""
    t, y = _values(series)
    return float(t[int(np.nanargmax(y))])
