"""Agreement between a clustering and known classes."""

from __future__ import annotations

import numpy as np


def confusion_matrix(truth, predicted, n_true: int | None = None, n_pred: int | None = None) -> np.ndarray:
    """Counts with true classes as rows and clusters as columns."""
    truth = np.asarray(truth, dtype=int)
    predicted = np.asarray(predicted, dtype=int)
    n_true = int(truth.max()) + 1 if n_true is None else n_true
    n_pred = int(predicted.max()) + 1 if n_pred is None else n_pred
    out = np.zeros((n_true, n_pred), dtype=int)
    np.add.at(out, (truth, predicted), 1)
    return out


def class_purity(conf: np.ndarray) -> np.ndarray:
    """Per true class: share of its members in the cluster where it is the plurality.

    A class that is not the plurality of any cluster scores 0 (it was merged
    into a cluster dominated by another class).
    """
    conf = np.asarray(conf)
    owner = conf.argmax(axis=0)
    out = np.zeros(conf.shape[0])
    for c in range(conf.shape[0]):
        own = np.flatnonzero(owner == c)
        if own.size and conf[c].sum():
            out[c] = conf[c, own].max() / conf[c].sum()
    return out


def cluster_purity(conf: np.ndarray) -> float:
    """Share of items that belong to their cluster's majority class."""
    conf = np.asarray(conf)
    total = conf.sum()
    return float(conf.max(axis=0).sum() / total) if total else float("nan")


def adjusted_rand(truth, predicted) -> float:
    conf = confusion_matrix(truth, predicted)
    n = conf.sum()

    def pairs(v):
        v = np.asarray(v, dtype=float)
        return float(np.sum(v * (v - 1) / 2))

    index = pairs(conf.ravel())
    a = pairs(conf.sum(axis=1))
    b = pairs(conf.sum(axis=0))
    total = n * (n - 1) / 2
    expected = a * b / total if total else 0.0
    maximum = (a + b) / 2
    if maximum == expected:
        return 1.0
    return float((index - expected) / (maximum - expected))


def class_scores(conf: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """For each true class, the cluster holding most of its members, scored two ways.

    Returns (recall, precision): the share of the class inside that cluster
    and the share of that cluster belonging to the class.
    """
    conf = np.asarray(conf, dtype=float)
    home = conf.argmax(axis=1)
    rows = np.arange(conf.shape[0])
    recall = conf[rows, home] / np.maximum(conf.sum(axis=1), 1)
    precision = conf[rows, home] / np.maximum(conf[:, home].sum(axis=0), 1)
    return recall, precision
