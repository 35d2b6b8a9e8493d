"""Slowness-based spike detection in a long recording.

Slowness is the variance of the first difference of a unit-variance signal:
about 2 for iid noise, near 0 for smooth waveforms, at most 4. A sliding
window of slowness separates smooth spikes from fast background noise,
independently of the signal's amplitude.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DataError, RecordingTooShort, ZeroVarianceSeries
from .spectral import TimeSeries, TimeSeriesSet, standardize_rows

FAST_SENTINEL = 2.0
_REL_VAR_EPS = 1e-14
_CHUNK = 65536
_MAX_ALIGN_STEPS = 10


@dataclass(frozen=True)
class Recording:
    samples: np.ndarray
    sample_rate: float | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise DataError(f"a recording must be one-dimensional, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise DataError("recording contains non-finite samples")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    def scaled(self, c: float) -> "Recording":
        return Recording(self.samples * c, self.sample_rate)


@dataclass(frozen=True)
class DetectorConfig:
    window_len: int = 55
    tol: float = 0.25
    min_separation: int | None = None  # default window_len // 2
    align_index: int | None = None  # default window_len // 2
    peak: str = "max"  # "max" or "abs" for negative-going spikes
    recheck: bool = True  # drop aligned windows that are no longer below tol

    def __post_init__(self):
        if self.window_len < 8:
            raise ValueError(f"window_len must be >= 8, got {self.window_len}")
        if not 0 < self.tol < 2:
            raise ValueError(f"tol must lie in (0, 2), got {self.tol}")
        if self.peak not in ("max", "abs"):
            raise ValueError(f"peak must be 'max' or 'abs', got {self.peak!r}")
        if self.min_separation is not None and self.min_separation < 1:
            raise ValueError("min_separation must be >= 1")
        if self.align_index is not None and not 0 <= self.align_index < self.window_len:
            raise ValueError("align_index must lie inside the window")

    @property
    def separation(self) -> int:
        return self.window_len // 2 if self.min_separation is None else self.min_separation

    @property
    def align(self) -> int:
        return self.window_len // 2 if self.align_index is None else self.align_index


@dataclass
class SpikeCatalog:
    onsets: np.ndarray
    windows: TimeSeriesSet | None
    slowness: np.ndarray
    window_len: int
    align_index: int
    raw_windows: np.ndarray = field(repr=False, default=None)

    def __len__(self):
        return self.onsets.size


def slowness_rows(windows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Slowness of each row plus a mask of (numerically) constant rows.

    Both variances use the n-1 divisor, which makes a linear ramp exactly 0
    and an even-length alternating sequence exactly 4.
    """
    centered = windows - windows.mean(axis=1, keepdims=True)
    ss_x = np.sum(centered**2, axis=1)
    d = np.diff(windows, axis=1)
    d = d - d.mean(axis=1, keepdims=True)
    ss_d = np.sum(d**2, axis=1)
    n = windows.shape[1]
    scale = np.mean(windows**2, axis=1)
    degenerate = ss_x / n <= _REL_VAR_EPS * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        delta = (ss_d / (n - 2)) / (ss_x / (n - 1))
    return np.where(degenerate, FAST_SENTINEL, delta), degenerate


def slowness(x: TimeSeries | np.ndarray) -> float:
    """Variance of the differenced, unit-variance signal."""
    values = np.asarray(getattr(x, "values", x), dtype=float)
    if values.ndim != 1 or values.size < 3:
        raise DataError("slowness needs a one-dimensional series with at least 3 samples")
    delta, degenerate = slowness_rows(values[None, :])
    if degenerate[0]:
        raise ZeroVarianceSeries("slowness of a constant series is undefined")
    return float(delta[0])


def rolling_slowness(rec: Recording | np.ndarray, window_len: int, return_degenerate: bool = False):
    """Slowness of every length-``window_len`` window, one value per start index.

    Constant windows get the sentinel value 2.0 (treated as fast noise) and
    are marked in the optional degenerate mask.
    """
    y = np.asarray(getattr(rec, "samples", rec), dtype=float)
    if y.size < window_len:
        raise RecordingTooShort(f"recording of length {y.size} is shorter than the window {window_len}")
    n_windows = y.size - window_len + 1
    values = np.empty(n_windows)
    degenerate = np.empty(n_windows, dtype=bool)
    view = sliding_window_view(y, window_len)
    for start in range(0, n_windows, _CHUNK):
        stop = min(start + _CHUNK, n_windows)
        values[start:stop], degenerate[start:stop] = slowness_rows(view[start:stop])
    if return_degenerate:
        return values, degenerate
    return values


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Half-open index ranges of consecutive True entries."""
    padded = np.concatenate([[False], mask, [False]])
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return list(zip(edges[0::2], edges[1::2]))


def _suppress(candidates: list[int], score: np.ndarray, separation: int) -> list[int]:
    """Greedy left-to-right: of two candidates closer than ``separation`` keep the slower."""
    kept: list[int] = []
    for c in candidates:
        if kept and c - kept[-1] < separation:
            if score[c] < score[kept[-1]]:
                kept[-1] = c
            continue
        kept.append(c)
    return kept


def _peak(window: np.ndarray, mode: str) -> int:
    centered = window - window.mean()
    return int(np.argmax(np.abs(centered) if mode == "abs" else centered))


def align_window(y: np.ndarray, start: int, cfg: DetectorConfig) -> int | None:
    """Shift ``start`` until the window's peak sits at the alignment index.

    Returns None if the shifted window would leave the recording or the
    peak does not settle.
    """
    T = cfg.window_len
    for _ in range(_MAX_ALIGN_STEPS):
        if start < 0 or start + T > y.size:
            return None
        p = _peak(y[start : start + T], cfg.peak)
        if p == cfg.align:
            return start
        start = start + p - cfg.align
    return None


def detect_spikes(rec: Recording | np.ndarray, cfg: DetectorConfig | None = None) -> SpikeCatalog:
    """Find slow windows, collapse neighbours, align peaks, standardize.

    An empty catalog (no window below ``cfg.tol``) is a valid result.
    """
    cfg = cfg or DetectorConfig()
    y = np.asarray(getattr(rec, "samples", rec), dtype=float)
    T = cfg.window_len
    if y.size < 2 * T:
        raise RecordingTooShort(f"recording of length {y.size} needs at least {2 * T} samples")

    delta = rolling_slowness(y, T)
    candidates = [a + int(np.argmin(delta[a:b])) for a, b in _runs(delta < cfg.tol)]
    candidates = _suppress(candidates, delta, cfg.separation)

    onsets: list[int] = []
    for c in candidates:
        start = align_window(y, c, cfg)
        if start is None:
            continue
        if cfg.recheck and delta[start] >= cfg.tol:
            # re-centering left the slow region: the candidate was a spike's tail
            continue
        if onsets and start - onsets[-1] < cfg.separation:
            # two candidates aligned onto the same spike
            continue
        onsets.append(start)

    onsets_arr = np.asarray(onsets, dtype=int)
    if onsets_arr.size == 0:
        return SpikeCatalog(onsets_arr, None, np.empty(0), T, cfg.align, np.empty((0, T)))
    raw = np.vstack([y[s : s + T] for s in onsets_arr])
    spike_delta, _ = slowness_rows(raw)
    windows = TimeSeriesSet(
        standardize_rows(raw), labels=[f"spike_{s}" for s in onsets_arr], standardized=True
    )
    return SpikeCatalog(onsets_arr, windows, spike_delta, T, cfg.align, raw)
