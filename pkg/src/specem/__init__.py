"""Clustering short time series by spectral shape with a frequency-domain EM."""

__version__ = "0.1.0"

from .em import EmConfig, EmResult, EmState, run_em
from .gmm1d import Gmm1dModel, fit_gmm1d, scan_bic
from .selection import SelectionReport, select_k
from .simulation import ClassSpec, LabeledSet, SimSpec, generate, sim4_spec, synth_recording
from .spectral import Spectrum, TimeSeries, TimeSeriesSet, dft, periodogram, standardize, to_pmf
from .spikes import DetectorConfig, Recording, SpikeCatalog, detect_spikes, rolling_slowness, slowness

__all__ = [
    "ClassSpec",
    "DetectorConfig",
    "EmConfig",
    "EmResult",
    "EmState",
    "Gmm1dModel",
    "LabeledSet",
    "Recording",
    "SelectionReport",
    "SimSpec",
    "Spectrum",
    "SpikeCatalog",
    "TimeSeries",
    "TimeSeriesSet",
    "detect_spikes",
    "dft",
    "fit_gmm1d",
    "generate",
    "periodogram",
    "rolling_slowness",
    "run_em",
    "scan_bic",
    "select_k",
    "sim4_spec",
    "slowness",
    "standardize",
    "synth_recording",
    "to_pmf",
]
