"""Univariate Gaussian mixture EM with BIC order selection.

Used as the time-domain baseline on log-slowness features. BIC follows the
"higher is better" convention: ``2 * loglik - p * log(n)`` with ``p = 3K - 1``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit

from .errors import DegenerateComponent

VAR_FLOOR = 1e-6
MIN_MASS = 1e-8
MAX_RESCUES = 3
_LOG_2PI = np.log(2 * np.pi)


@dataclass
class Gmm1dModel:
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    loglik: float
    n: int
    converged: bool = True
    loglik_trace: list[float] = field(default_factory=list, repr=False)

    @property
    def k(self) -> int:
        return self.means.size

    @property
    def bic(self) -> float:
        return bic(self, self.n)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("loglik_trace")
        for key in ("weights", "means", "variances"):
            d[key] = [float(v) for v in d[key]]
        d["k"] = self.k
        d["bic"] = self.bic
        return d


def n_params(k: int) -> int:
    return 3 * k - 1


def bic(model: Gmm1dModel, n: int) -> float:
    return 2.0 * model.loglik - n_params(model.k) * np.log(n)


def _log_joint(x, weights, means, variances):
    with np.errstate(divide="ignore"):
        logw = np.log(weights)
    return logw - 0.5 * (_LOG_2PI + np.log(variances)) - 0.5 * (x[:, None] - means) ** 2 / variances


def _lse(a):
    m = a.max(axis=1, keepdims=True)
    return m[:, 0] + np.log(np.exp(a - m).sum(axis=1))


def responsibilities(model: Gmm1dModel, x) -> np.ndarray:
    lj = _log_joint(np.asarray(x, dtype=float), model.weights, model.means, model.variances)
    return np.exp(lj - _lse(lj)[:, None])


def assign(model: Gmm1dModel, x) -> np.ndarray:
    """Maximum a posteriori component per point; ties go to the smaller index."""
    lj = _log_joint(np.atleast_1d(np.asarray(x, dtype=float)), model.weights, model.means, model.variances)
    return np.argmax(lj, axis=1)


@njit(cache=True)
def _e_pass(x, weights, means, variances, r, norm):
    """Fill responsibilities ``r`` and per-point log-normalizers; return loglik."""
    n = x.size
    k = means.size
    const = np.empty(k)
    inv2v = np.empty(k)
    for c in range(k):
        const[c] = np.log(weights[c]) - 0.5 * (_LOG_2PI + np.log(variances[c]))
        inv2v[c] = 0.5 / variances[c]
    ll = 0.0
    for i in range(n):
        mx = -np.inf
        for c in range(k):
            d = x[i] - means[c]
            r[i, c] = const[c] - d * d * inv2v[c]
            if r[i, c] > mx:
                mx = r[i, c]
        tot = 0.0
        for c in range(k):
            r[i, c] = np.exp(r[i, c] - mx)
            tot += r[i, c]
        for c in range(k):
            r[i, c] /= tot
        norm[i] = mx + np.log(tot)
        ll += norm[i]
    return ll


@njit(cache=True)
def _em_kernel(x, weights, means, variances, max_iter, tol, var_floor, min_mass):
    """One EM run, updating the parameter arrays in place.

    Returns (trace, log-normalizers, status): status 1 converged, 0 hit
    max_iter, ``-1 - c`` when component c lost its mass.
    """
    n = x.size
    k = means.size
    trace = np.empty(max_iter + 1)
    r = np.empty((n, k))
    norm = np.empty(n)
    nk = np.empty(k)
    sx = np.empty(k)
    used = 0
    for it in range(max_iter):
        trace[used] = _e_pass(x, weights, means, variances, r, norm)
        used += 1
        if used >= 2 and abs(trace[used - 1] - trace[used - 2]) < tol * abs(trace[used - 2]):
            return trace[:used], norm, 1
        nk[:] = 0.0
        sx[:] = 0.0
        for i in range(n):
            for c in range(k):
                nk[c] += r[i, c]
                sx[c] += r[i, c] * x[i]
        for c in range(k):
            if nk[c] < min_mass:
                return trace[:used], norm, -1 - c
        for c in range(k):
            means[c] = sx[c] / nk[c]
            weights[c] = nk[c] / n
        sx[:] = 0.0
        for i in range(n):
            for c in range(k):
                d = x[i] - means[c]
                sx[c] += r[i, c] * d * d
        for c in range(k):
            variances[c] = max(sx[c] / nk[c], var_floor)
    # likelihood of the final update
    trace[used] = _e_pass(x, weights, means, variances, r, norm)
    return trace[: used + 1], norm, 0


def _em(x, weights, means, variances, max_iter, tol):
    """EM from one start, re-seeding components that lose their mass.

    A re-seed starts a fresh EM path, so the returned trace covers only the
    iterations since the last one.
    """
    weights, means, variances = weights.copy(), means.copy(), variances.copy()
    pooled = max(float(np.var(x)), VAR_FLOOR)
    for _ in range(MAX_RESCUES + 1):
        trace, norm, status = _em_kernel(x, weights, means, variances, max_iter, tol, VAR_FLOOR, MIN_MASS)
        if status >= 0:
            return weights, means, variances, list(trace), status == 1
        dead = -status - 1
        means[dead] = x[int(np.argmin(norm))]
        variances[dead] = pooled
        weights[:] = 1.0 / means.size
    raise DegenerateComponent(f"component {dead} keeps losing its responsibility mass")


def _initial(x, k, restarts, rng):
    qs = (np.arange(k) + 0.5) / k
    base = np.quantile(x, qs)
    var = max(float(np.var(x)), VAR_FLOOR)
    means = np.tile(base, (restarts, 1))
    # restart 0 is the plain quantile start
    means[1:] += rng.normal(0.0, np.sqrt(var) / k, size=(restarts - 1, k))
    return np.full((restarts, k), 1.0 / k), means, np.full((restarts, k), var)


def fit_gmm1d(
    x,
    k: int,
    restarts: int = 100,
    seed: int = 0,
    max_iter: int = 1000,
    tol: float = 1e-8,
) -> Gmm1dModel:
    """Best-of-``restarts`` EM fit of a ``k``-component univariate mixture.

    Restart 0 starts from the k-quantile means with the pooled variance and
    uniform weights; later restarts jitter those means. Components come back
    sorted by mean.
    """
    x = np.asarray(x, dtype=float).ravel()
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    if x.size < 2 * k:
        raise ValueError(f"need at least {2 * k} points for {k} components, got {x.size}")
    if k == 1:
        mean = x.mean()
        var = max(float(np.mean((x - mean) ** 2)), VAR_FLOOR)
        w, m, v = np.ones(1), np.array([mean]), np.array([var])
        ll = float(_lse(_log_joint(x, w, m, v)).sum())
        return Gmm1dModel(w, m, v, ll, x.size, True, [ll])

    rng = np.random.default_rng(seed)
    W, M, V = _initial(x, k, restarts, rng)
    best = None
    for r in range(restarts):
        try:
            w, m, v, trace, conv = _em(x, W[r], M[r], V[r], max_iter, tol)
        except DegenerateComponent:
            continue
        if best is None or trace[-1] > best[3][-1]:
            best = (w, m, v, trace, conv)
    if best is None:
        raise DegenerateComponent(f"every restart of the {k}-component fit degenerated")
    w, m, v, trace, conv = best
    order = np.argsort(m, kind="stable")
    return Gmm1dModel(w[order], m[order], v[order], trace[-1], x.size, conv, trace)


@dataclass
class BicScan:
    models: dict[int, Gmm1dModel]
    errors: dict[int, str]

    @property
    def bics(self) -> dict[int, float]:
        return {k: m.bic for k, m in self.models.items()}

    @property
    def best_k(self) -> int:
        b = self.bics
        return max(sorted(b), key=lambda k: b[k])

    @property
    def best(self) -> Gmm1dModel:
        return self.models[self.best_k]


def scan_bic(x, k_max: int = 10, restarts: int = 100, seed: int = 0, **kw) -> BicScan:
    """Fit K = 1..k_max and keep every model; ``best_k`` maximizes BIC."""
    models = {}
    errors = {}
    for k in range(1, k_max + 1):
        try:
            models[k] = fit_gmm1d(x, k, restarts=restarts, seed=seed, **kw)
        except (DegenerateComponent, ValueError) as exc:
            errors[k] = str(exc)
    if not models:
        raise DegenerateComponent("no mixture order could be fitted")
    return BicScan(models, errors)
