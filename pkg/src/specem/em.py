"""Frequency-domain EM: mixture clustering of periodograms viewed as pmfs.

Each series is represented by its normalized periodogram ``P_i`` on the half
Fourier grid. Cluster ``k`` is a pmf ``F_k`` on the same grid and the
log-likelihood of series ``i`` under cluster ``k`` is

    l_ik = -scale * (KL(P_i || F_k) + H(P_i)) = scale * sum_j P_ij log F_kj

with ``scale`` defaulting to the number of bins. The M-step is the
responsibility-weighted average of periodograms, the E-step a softmax of
``log pi_k + l_ik``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DegenerateRun, EmptyCluster, MixedGrids
from .spectral import Spectrum, TimeSeriesSet, check_grid, spectra_matrix

log = logging.getLogger(__name__)

EMPTY_MASS = 1e-12
MAX_RESCUES = 3


@dataclass(frozen=True)
class EmConfig:
    k: int
    max_iter: int = 500
    tol: float = 1e-8
    restarts: int = 10
    seed: int = 0
    # None means "auto": the number of frequency bins
    likelihood_scale: float | None = None
    use_mixing_weights_in_estep: bool = True

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.likelihood_scale is not None and not self.likelihood_scale > 0:
            raise ValueError(f"likelihood_scale must be > 0, got {self.likelihood_scale}")

    def scale_for(self, n_bins: int) -> float:
        return float(n_bins) if self.likelihood_scale is None else float(self.likelihood_scale)


@dataclass
class EmState:
    gamma: np.ndarray  # (N, K) responsibilities
    pi: np.ndarray  # (K,) mixing weights
    cluster_spectra: np.ndarray  # (K, B) pmfs
    loglik: float
    iteration: int
    n_samples: int

    @property
    def spectra(self) -> list[Spectrum]:
        return [Spectrum(row, n_samples=self.n_samples, kind="pmf") for row in self.cluster_spectra]


@dataclass
class EmResult:
    state: EmState
    loglik_trace: list[float]
    converged: bool
    hard_assignment: np.ndarray
    restart_logliks: list[float] = field(default_factory=list)
    best_restart: int = 0
    rescues: int = 0

    @property
    def loglik(self) -> float:
        return self.state.loglik

    @property
    def gamma(self) -> np.ndarray:
        return self.state.gamma


def as_pmf_matrix(spectra) -> np.ndarray:
    """Stack pmf spectra into an (N, B) array; arrays pass through."""
    if isinstance(spectra, np.ndarray):
        return np.atleast_2d(spectra)
    _, kind = check_grid(spectra)
    if kind != "pmf":
        raise ValueError("EM operates on pmf spectra; call to_pmf first")
    return np.vstack([s.power for s in spectra])


def _pair(p, q) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(p, Spectrum) and isinstance(q, Spectrum):
        check_grid([p, q])
        return p.power, q.power
    p, q = np.asarray(getattr(p, "power", p), dtype=float), np.asarray(getattr(q, "power", q), dtype=float)
    if p.shape != q.shape:
        raise MixedGrids(f"pmfs have different lengths {p.shape} and {q.shape}")
    return p, q


def kl_divergence(p, q) -> float:
    """KL(p || q) in nats. Both arguments must be floored pmfs on one grid."""
    p, q = _pair(p, q)
    return float(np.sum(p * (np.log(p) - np.log(q))))


def entropy(p) -> float:
    p = np.asarray(getattr(p, "power", p), dtype=float)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def spectral_loglik(obs, model, scale: float) -> float:
    """``-scale * (KL(obs || model) + H(obs))``."""
    return -scale * (kl_divergence(obs, model) + entropy(obs))


def loglik_matrix(spectra: np.ndarray, clusters: np.ndarray, scale: float) -> np.ndarray:
    """All ``l_ik`` at once via the cross-entropy form, shape (N, K)."""
    return scale * (spectra @ np.log(clusters).T)


def _log_weights(pi: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(pi)


def logsumexp_rows(a: np.ndarray) -> np.ndarray:
    m = np.max(a, axis=1, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    return (m + np.log(np.sum(np.exp(a - m), axis=1, keepdims=True)))[:, 0]


def softmax_rows(a: np.ndarray) -> np.ndarray:
    m = np.max(a, axis=1, keepdims=True)
    e = np.exp(a - m)
    return e / e.sum(axis=1, keepdims=True)


def _estep(P, F, pi, scale, use_weights) -> tuple[np.ndarray, np.ndarray]:
    logits = loglik_matrix(P, F, scale)
    if use_weights:
        logits = logits + _log_weights(pi)
    gamma = softmax_rows(logits)
    return gamma, gamma.sum(axis=0) / gamma.shape[0]


def e_step(spectra, state: EmState, cfg: EmConfig) -> tuple[np.ndarray, np.ndarray]:
    """New responsibilities and mixing weights from ``state``'s cluster spectra."""
    P = as_pmf_matrix(spectra)
    return _estep(P, state.cluster_spectra, state.pi, cfg.scale_for(P.shape[1]), cfg.use_mixing_weights_in_estep)


def m_step(spectra, gamma: np.ndarray) -> np.ndarray:
    """Responsibility-weighted mean pmf per cluster, shape (K, B).

    Raises EmptyCluster when a column of ``gamma`` carries no mass.
    """
    P = as_pmf_matrix(spectra)
    gamma = np.asarray(gamma, dtype=float)
    nk = gamma.sum(axis=0)
    dead = np.flatnonzero(nk <= EMPTY_MASS)
    if dead.size:
        raise EmptyCluster(dead.tolist())
    F = (gamma.T @ P) / nk[:, None]
    return F / F.sum(axis=1, keepdims=True)


def _total(P, F, pi, scale) -> float:
    return float(np.sum(logsumexp_rows(loglik_matrix(P, F, scale) + _log_weights(pi))))


def total_loglik(spectra, state: EmState, cfg: EmConfig) -> float:
    """``sum_i log sum_k pi_k exp(l_ik)``, evaluated with log-sum-exp."""
    P = as_pmf_matrix(spectra)
    return _total(P, state.cluster_spectra, state.pi, cfg.scale_for(P.shape[1]))


def _initial_labels(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    labels = rng.integers(0, k, size=n)
    # hand every empty cluster one series drawn from a cluster that can spare it
    for c in range(k):
        if not np.any(labels == c):
            counts = np.bincount(labels, minlength=k)
            donors = np.flatnonzero(counts[labels] > 1)
            labels[rng.choice(donors)] = c
    return labels


def _rescue(gamma: np.ndarray, dead: Sequence[int]) -> np.ndarray:
    gamma = gamma.copy()
    for c in dead:
        nk = gamma.sum(axis=0)
        owner = gamma.argmax(axis=1)
        movable = np.flatnonzero(nk[owner] >= 2.0)
        if movable.size == 0:
            raise EmptyCluster([c])
        i = movable[np.argmin(gamma[movable].max(axis=1))]
        gamma[i] = 0.0
        gamma[i, c] = 1.0
    return gamma


def _fit_once(P, labels, k, scale, cfg, n_samples):
    n = P.shape[0]
    gamma = np.zeros((n, k))
    gamma[np.arange(n), labels] = 1.0
    trace: list[float] = []
    rescues = 0
    converged = False
    state = None
    it = 0
    while it < cfg.max_iter:
        try:
            F = m_step(P, gamma)
        except EmptyCluster as exc:
            if rescues >= MAX_RESCUES:
                raise
            gamma = _rescue(gamma, exc.clusters)
            rescues += 1
            # the re-seeded run is a new EM path; its monotone trace starts here
            trace = []
            continue
        pi = gamma.sum(axis=0) / n
        ll = _total(P, F, pi, scale)
        trace.append(ll)
        state = EmState(gamma=gamma, pi=pi, cluster_spectra=F, loglik=ll, iteration=it, n_samples=n_samples)
        it += 1
        if len(trace) >= 2 and abs(trace[-1] - trace[-2]) < cfg.tol * abs(trace[-2]):
            converged = True
            break
        gamma, _ = _estep(P, F, pi, scale, cfg.use_mixing_weights_in_estep)
    return state, trace, converged, rescues


def _result(state, trace, converged, rescues, restart_logliks=None, best=0) -> EmResult:
    return EmResult(
        state=state,
        loglik_trace=trace,
        converged=converged,
        hard_assignment=np.argmax(state.gamma, axis=1),
        restart_logliks=restart_logliks if restart_logliks is not None else [state.loglik],
        best_restart=best,
        rescues=rescues,
    )


def em_from_assignment(spectra, labels: Sequence[int], cfg: EmConfig, n_samples: int | None = None) -> EmResult:
    """Single EM run started from a given hard assignment."""
    P = as_pmf_matrix(spectra)
    labels = np.asarray(labels, dtype=int)
    if n_samples is None:
        n_samples = 2 * P.shape[1]
    state, trace, converged, rescues = _fit_once(P, labels, cfg.k, cfg.scale_for(P.shape[1]), cfg, n_samples)
    return _result(state, trace, converged, rescues)


def run_em_spectra(P: np.ndarray, cfg: EmConfig, n_samples: int) -> EmResult:
    """Best-of-restarts EM on a precomputed (N, B) pmf matrix."""
    n = P.shape[0]
    k = cfg.k
    if k > n:
        raise DegenerateRun(f"cannot form {k} non-empty clusters from {n} series")
    scale = cfg.scale_for(P.shape[1])
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    best = None
    restart_logliks = []
    for r, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        labels = _initial_labels(rng, n, k)
        try:
            state, trace, converged, rescues = _fit_once(P, labels, k, scale, cfg, n_samples)
        except EmptyCluster as exc:
            log.debug("restart %d failed: %s", r, exc)
            restart_logliks.append(float("nan"))
            continue
        restart_logliks.append(state.loglik)
        if best is None or state.loglik > best[0].loglik:
            best = (state, trace, converged, rescues, r)
    if best is None:
        raise DegenerateRun(f"all {cfg.restarts} restarts lost a cluster")
    state, trace, converged, rescues, r = best
    return _result(state, trace, converged, rescues, restart_logliks, r)


def run_em(data: TimeSeriesSet, cfg: EmConfig) -> EmResult:
    """Cluster ``data`` into ``cfg.k`` groups of similar spectral shape."""
    P = spectra_matrix(data)
    return run_em_spectra(P, cfg, data.length)


def with_k(cfg: EmConfig, k: int) -> EmConfig:
    return replace(cfg, k=k)
