"""Choosing the number of clusters: normalized entropy criterion and elbow rule."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .em import EmConfig, run_em_spectra, with_k
from .errors import SpecEMError, TooFewPoints, UndefinedNEC
from .spectral import TimeSeriesSet, spectra_matrix

log = logging.getLogger(__name__)

GAMMA_FLOOR = 1e-12


def classification_entropy(gamma: np.ndarray) -> float:
    """``-sum_ik g_ik log g_ik``; entries at or below the floor count as 0."""
    g = np.asarray(gamma, dtype=float)
    g = g[g > GAMMA_FLOOR]
    return float(max(0.0, -np.sum(g * np.log(g))))


def nec(e_k: float, loglik_k: float, loglik_1: float) -> float:
    gain = loglik_k - loglik_1
    if not gain > 0:
        raise UndefinedNEC(f"likelihood gain over one cluster is {gain}; NEC undefined")
    return e_k / gain


def elbow(logliks) -> int:
    """K (1-based) with the largest drop in likelihood gain.

    The drop at K is ``(l(K) - l(K-1)) - (l(K+1) - l(K))`` over interior K;
    ties go to the smaller K.
    """
    ll = np.asarray(logliks, dtype=float)
    if ll.size < 3:
        raise TooFewPoints(f"elbow needs at least 3 likelihoods, got {ll.size}")
    gains = np.diff(ll)
    drops = gains[:-1] - gains[1:]
    slack = 1e-12 * max(1.0, float(np.max(np.abs(ll))))
    return int(np.flatnonzero(drops >= drops.max() - slack)[0]) + 2


@dataclass
class KRecord:
    k: int
    loglik: float | None
    entropy: float | None
    nec: float | None = None
    error: str | None = None


@dataclass
class SelectionReport:
    records: list[KRecord]
    nec_global_min: int | None
    nec_local_minima: list[int]
    elbow_k: int | None
    recommended_k: int

    def by_k(self, k: int) -> KRecord:
        return self.records[k - 1]

    @property
    def logliks(self) -> list[float | None]:
        return [r.loglik for r in self.records]

    @property
    def necs(self) -> list[float | None]:
        return [r.nec for r in self.records]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SelectionReport":
        return cls(
            records=[KRecord(**r) for r in d["records"]],
            nec_global_min=d["nec_global_min"],
            nec_local_minima=list(d["nec_local_minima"]),
            elbow_k=d["elbow_k"],
            recommended_k=d["recommended_k"],
        )


def nec_minima(necs: dict[int, float]) -> tuple[int | None, list[int]]:
    """Global minimum and interior local minima of NEC over a K grid.

    A local minimum needs a defined NEC strictly larger on both sides, so the
    grid endpoints can only ever be global minima.
    """
    if not necs:
        return None, []
    global_min = min(sorted(necs), key=lambda k: necs[k])
    local = [
        k
        for k in sorted(necs)
        if k - 1 in necs and k + 1 in necs and necs[k] < necs[k - 1] and necs[k] < necs[k + 1]
    ]
    return global_min, local


def recommend(elbow_k: int | None, local_minima: list[int], global_min: int | None) -> int:
    if elbow_k is None:
        return global_min if global_min is not None else 1
    above = [k for k in local_minima if k >= elbow_k]
    return min(above) if above else elbow_k


def select_k_spectra(P: np.ndarray, k_max: int, cfg: EmConfig, n_samples: int) -> tuple[SelectionReport, dict]:
    """Run EM for K = 1..k_max and assemble the report.

    Returns the report and the per-K EM results (missing where EM failed).
    """
    if k_max < 2:
        raise ValueError(f"k_max must be >= 2, got {k_max}")
    records: list[KRecord] = []
    results = {}
    for k in range(1, k_max + 1):
        try:
            res = run_em_spectra(P, with_k(cfg, k), n_samples)
        except SpecEMError as exc:
            log.warning("EM failed for K=%d: %s", k, exc)
            records.append(KRecord(k, None, None, None, f"{type(exc).__name__}: {exc}"))
            continue
        results[k] = res
        records.append(KRecord(k, res.loglik, classification_entropy(res.gamma)))

    ll1 = records[0].loglik
    necs = {}
    for rec in records[1:]:
        if rec.loglik is None or ll1 is None:
            continue
        try:
            rec.nec = nec(rec.entropy, rec.loglik, ll1)
            necs[rec.k] = rec.nec
        except UndefinedNEC as exc:
            rec.error = f"UndefinedNEC: {exc}"

    global_min, local = nec_minima(necs)

    prefix = []
    for rec in records:
        if rec.loglik is None:
            break
        prefix.append(rec.loglik)
    elbow_k = elbow(prefix) if len(prefix) >= 3 else None

    report = SelectionReport(records, global_min, local, elbow_k, recommend(elbow_k, local, global_min))
    return report, results


def select_k(data: TimeSeriesSet, k_max: int, cfg: EmConfig | None = None) -> SelectionReport:
    """Fit K = 1..k_max clusters with a shared seed schedule and compare them."""
    cfg = cfg or EmConfig(k=1)
    report, _ = select_k_spectra(spectra_matrix(data), k_max, cfg, data.length)
    return report
