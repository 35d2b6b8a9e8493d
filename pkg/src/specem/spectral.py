"""Standardization, DFT, periodograms and averaged spectra.

Every series is mapped to its half-spectrum: bins ``j = 1 .. T//2`` on the
Fourier grid ``omega_j = j / T``. The DC bin is dropped because standardized
series have ``X(omega_0) = 0`` exactly, and bins ``T - j`` mirror bins ``j``
for real input.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DataError, EmptySpectrum, MixedGrids, ZeroTotalWeight, ZeroVarianceSeries

PMF_FLOOR = 1e-12
VARIANCE_EPS = 1e-14
MIN_LENGTH = 4


@dataclass(frozen=True)
class TimeSeries:
    values: np.ndarray
    standardized: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise DataError(f"a time series must be one-dimensional, got shape {values.shape}")
        if values.size < MIN_LENGTH:
            raise DataError(f"a time series needs at least {MIN_LENGTH} samples, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise DataError("time series contains non-finite values")
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class TimeSeriesSet:
    """N series of common length T, stored row-wise as an (N, T) array."""

    values: np.ndarray
    labels: tuple[str, ...] | None = None
    standardized: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 1:
            raise DataError(f"expected an (N, T) array with N >= 1, got shape {values.shape}")
        if values.shape[1] < MIN_LENGTH:
            raise DataError(f"series need at least {MIN_LENGTH} samples, got {values.shape[1]}")
        if not np.all(np.isfinite(values)):
            raise DataError("time series set contains non-finite values")
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            labels = tuple(str(lab) for lab in self.labels)
            if len(labels) != values.shape[0]:
                raise DataError(f"{len(labels)} labels for {values.shape[0]} series")
            object.__setattr__(self, "labels", labels)

    @classmethod
    def from_series(cls, series: Sequence[TimeSeries | Sequence[float]], labels=None) -> "TimeSeriesSet":
        arrays = [s.values if isinstance(s, TimeSeries) else np.asarray(s, dtype=float) for s in series]
        if not arrays:
            raise DataError("empty time series set")
        lengths = {a.size for a in arrays}
        if len(lengths) != 1:
            raise DataError(f"series lengths differ: {sorted(lengths)}")
        flags = [isinstance(s, TimeSeries) and s.standardized for s in series]
        return cls(np.vstack(arrays), labels=labels, standardized=all(flags))

    @property
    def n_series(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]

    @property
    def series(self) -> list[TimeSeries]:
        return [TimeSeries(row, standardized=self.standardized) for row in self.values]

    def __len__(self):
        return self.n_series

    def __iter__(self) -> Iterator[TimeSeries]:
        return iter(self.series)

    def standardize(self) -> "TimeSeriesSet":
        return TimeSeriesSet(standardize_rows(self.values), labels=self.labels, standardized=True)


@dataclass(frozen=True)
class Spectrum:
    """Power on the half Fourier grid of a length-``n_samples`` series.

    ``kind`` is ``"raw"`` for a periodogram and ``"pmf"`` once normalized.
    """

    power: np.ndarray
    n_samples: int
    kind: str = "raw"

    def __post_init__(self):
        power = np.asarray(self.power, dtype=float)
        if self.kind not in ("raw", "pmf"):
            raise ValueError(f"unknown spectrum kind {self.kind!r}")
        if power.ndim != 1 or power.size != n_bins(self.n_samples):
            raise MixedGrids(
                f"spectrum of a length-{self.n_samples} series needs {n_bins(self.n_samples)} bins, got {power.size}"
            )
        if np.any(power < 0) or not np.all(np.isfinite(power)):
            raise DataError("spectrum power must be finite and non-negative")
        object.__setattr__(self, "power", power)

    @property
    def bins(self) -> np.ndarray:
        return fourier_bins(self.n_samples)

    @property
    def frequencies(self) -> np.ndarray:
        return self.bins / self.n_samples

    def __len__(self):
        return self.power.size


def n_bins(n_samples: int) -> int:
    return n_samples // 2


def fourier_bins(n_samples: int) -> np.ndarray:
    return np.arange(1, n_bins(n_samples) + 1)


def _as_array(x) -> np.ndarray:
    if isinstance(x, TimeSeries):
        return x.values
    return np.asarray(x, dtype=float)


def standardize_rows(values: np.ndarray) -> np.ndarray:
    """Scale every row of ``values`` to mean 0 and population variance 1."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    centered = values - values.mean(axis=-1, keepdims=True)
    var = np.mean(centered**2, axis=-1, keepdims=True)
    bad = np.flatnonzero(var.ravel() <= VARIANCE_EPS)
    if bad.size:
        raise ZeroVarianceSeries(f"series {bad.tolist()} have zero variance")
    return centered / np.sqrt(var)


def standardize(x: TimeSeries | Sequence[float]) -> TimeSeries:
    values = _as_array(x)
    if values.size < MIN_LENGTH:
        raise DataError(f"a time series needs at least {MIN_LENGTH} samples, got {values.size}")
    return TimeSeries(standardize_rows(values)[0], standardized=True)


def is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def _bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=int)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def fft_radix2(values: np.ndarray) -> np.ndarray:
    """Unnormalized radix-2 decimation-in-time FFT along the last axis."""
    a = np.asarray(values, dtype=complex)
    n = a.shape[-1]
    if not is_power_of_two(n):
        raise ValueError(f"radix-2 FFT needs a power-of-two length, got {n}")
    lead = a.shape[:-1]
    a = a[..., _bit_reverse_indices(n)]
    size = 2
    while size <= n:
        half = size // 2
        twiddle = np.exp(-2j * np.pi * np.arange(half) / size)
        blocks = a.reshape(*lead, n // size, size)
        even = blocks[..., :half]
        odd = blocks[..., half:] * twiddle
        a = np.concatenate([even + odd, even - odd], axis=-1).reshape(*lead, n)
        size *= 2
    return a


def dft_direct(values: np.ndarray) -> np.ndarray:
    """Unnormalized O(T^2) DFT along the last axis, with t = 0 .. T-1."""
    a = np.asarray(values, dtype=complex)
    n = a.shape[-1]
    k = np.arange(n)
    # reduce k*t mod n before scaling so the phase stays accurate for large n
    kernel = np.exp(-2j * np.pi * (np.outer(k, k) % n) / n)
    return a @ kernel.T


def dft(x, method: str = "auto") -> np.ndarray:
    """Unitary DFT ``X(omega_k) = T^(-1/2) sum_t x_t exp(-2 pi i k t / T)``.

    Works on a single series or row-wise on an (N, T) array. ``method`` is
    ``"auto"`` (radix-2 when T is a power of two, direct otherwise),
    ``"fft"`` or ``"direct"``.
    """
    values = _as_array(x)
    n = values.shape[-1]
    if method == "auto":
        method = "fft" if is_power_of_two(n) else "direct"
    if method == "fft":
        out = fft_radix2(values)
    elif method == "direct":
        out = dft_direct(values)
    else:
        raise ValueError(f"unknown DFT method {method!r}")
    return out / np.sqrt(n)


def periodogram_rows(values: np.ndarray, method: str = "auto") -> np.ndarray:
    """Half-spectrum periodograms of standardized rows, shape (N, T//2)."""
    values = np.atleast_2d(values)
    coeffs = dft(values, method=method)
    half = n_bins(values.shape[-1])
    return np.abs(coeffs[..., 1 : half + 1]) ** 2


def periodogram(x: TimeSeries | Sequence[float]) -> Spectrum:
    """Raw periodogram ``|X(omega_j)|^2`` for ``j = 1 .. T//2``.

    The series is standardized first unless it already carries the flag.
    """
    if not (isinstance(x, TimeSeries) and x.standardized):
        x = standardize(x)
    power = periodogram_rows(x.values)[0]
    return Spectrum(power, n_samples=len(x), kind="raw")


def pmf_rows(power: np.ndarray, floor: float = PMF_FLOOR) -> np.ndarray:
    power = np.atleast_2d(np.asarray(power, dtype=float))
    empty = np.flatnonzero(~np.any(power > 0, axis=-1))
    if empty.size:
        raise EmptySpectrum(f"spectra {empty.tolist()} have no positive power")
    floored = np.maximum(power, floor)
    return floored / floored.sum(axis=-1, keepdims=True)


def to_pmf(s: Spectrum) -> Spectrum:
    """Floor every bin at ``PMF_FLOOR`` and renormalize to sum 1."""
    if s.kind == "pmf":
        return s
    return Spectrum(pmf_rows(s.power)[0], n_samples=s.n_samples, kind="pmf")


def spectra_matrix(data: TimeSeriesSet, method: str = "auto") -> np.ndarray:
    """Pmf spectra of every series in ``data`` as an (N, B) array."""
    values = data.values if data.standardized else standardize_rows(data.values)
    return pmf_rows(periodogram_rows(values, method=method))


def check_grid(spectra: Iterable[Spectrum]) -> tuple[int, str]:
    spectra = list(spectra)
    if not spectra:
        raise DataError("no spectra given")
    grids = {s.n_samples for s in spectra}
    if len(grids) != 1:
        raise MixedGrids(f"spectra live on different grids: T in {sorted(grids)}")
    kinds = {s.kind for s in spectra}
    if len(kinds) != 1:
        raise MixedGrids(f"cannot mix spectrum kinds {sorted(kinds)}")
    return grids.pop(), kinds.pop()


def average_spectra(spectra: Sequence[Spectrum], weights: Sequence[float] | None = None) -> Spectrum:
    """Weighted bin-wise mean ``sum_i w_i s_i[j] / sum_i w_i``."""
    n_samples, kind = check_grid(spectra)
    if weights is None:
        weights = np.ones(len(spectra))
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(spectra),):
        raise ValueError(f"need one weight per spectrum, got {weights.shape} for {len(spectra)}")
    if np.any(weights < 0):
        raise ValueError("weights must be non-negative")
    total = weights.sum()
    if total <= 0:
        raise ZeroTotalWeight("weights sum to zero")
    stacked = np.vstack([s.power for s in spectra])
    avg = weights @ stacked / total
    if kind == "pmf":
        # convex combination of pmfs; renormalize only to clear rounding
        avg = avg / avg.sum()
    return Spectrum(avg, n_samples=n_samples, kind=kind)
