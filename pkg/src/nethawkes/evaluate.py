"""Evaluation harness: link-prediction ROC/AUC, predictive log likelihood
in bits per spike, and the binned cross-correlation baseline.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import ArgumentError, DegenerateError
from .model import marginal_loglik

LN2 = math.log(2.0)


@dataclass(frozen=True)
class RocCurve:
    """ROC points aligned by threshold (descending); ties share one point."""

    thresholds: np.ndarray
    tpr: np.ndarray
    fpr: np.ndarray
    auc: float


@dataclass(frozen=True)
class PredLikReport:
    """Held-out likelihood of a posterior sample set against a homogeneous
    Poisson baseline, normalized per test event."""

    model_ll: float
    baseline_ll: float
    num_test_events: int
    bits_per_spike: float


def edge_posterior(chain, burn_in):
    """Elementwise posterior probability of each edge: the mean adjacency
    over post-burn-in samples."""
    kept = chain[burn_in:]
    if len(kept) == 0:
        raise ArgumentError("burn_in leaves no samples")
    acc = np.zeros(kept[0].network.A.shape)
    for sample in kept:
        acc += sample.network.A
    return acc / len(kept)


def roc_from_scores(scores, truth, exclude_diagonal=True):
    """ROC curve of score-thresholded link prediction against a binary
    truth matrix.  Equal scores are grouped at a single threshold; AUC is
    the trapezoid area (equals the tie-averaged rank statistic)."""
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth)
    if scores.shape != truth.shape:
        raise ArgumentError("scores and truth must have identical shapes")
    if exclude_diagonal:
        mask = ~np.eye(truth.shape[0], dtype=bool)
        s, y = scores[mask], truth[mask].astype(bool)
    else:
        s, y = scores.ravel(), truth.ravel().astype(bool)
    P = int(y.sum())
    N = y.size - P
    if P == 0 or N == 0:
        raise DegenerateError("truth has no positives or no negatives; AUC undefined")

    order = np.argsort(-s, kind="stable")
    s_sorted, y_sorted = s[order], y[order]
    boundaries = np.nonzero(np.diff(s_sorted))[0]
    ends = np.concatenate((boundaries, [s.size - 1]))
    tp = np.cumsum(y_sorted)[ends]
    fp = (ends + 1) - tp
    thresholds = s_sorted[ends]

    tpr = np.concatenate(([0.0], tp / P))
    fpr = np.concatenate(([0.0], fp / N))
    thresholds = np.concatenate(([np.inf], thresholds))
    auc = float(np.trapezoid(tpr, fpr))
    return RocCurve(thresholds, tpr, fpr, auc)


def cross_correlation_scores(binned, max_lag_bins):
    """Directed interaction scores from summed cross-correlation of binned
    counts over nonnegative lags 0..max_lag_bins (zero-padded)."""
    if max_lag_bins < 0:
        raise ArgumentError("max_lag_bins must be >= 0")
    counts = np.asarray(binned.counts, dtype=float)
    K, M = counts.shape
    scores = np.zeros((K, K))
    for m in range(min(max_lag_bins, M - 1) + 1):
        if m == 0:
            scores += counts @ counts.T
        else:
            scores += counts[:, :-m] @ counts[:, m:].T
    return scores


def predictive_log_lik(chain, burn_in, test_seq, train_seq, threads=1,
                       exact_integrals=True):
    """Posterior predictive log likelihood of held-out events.

    The model score is the log of the sample-averaged likelihood over
    kept posterior draws.  The baseline is a per-process homogeneous
    Poisson process with smoothed training rates (count + 1) / T_train.
    Bits per spike normalizes the improvement by test events and ln 2.
    """
    kept = chain[burn_in:]
    if len(kept) == 0:
        raise ArgumentError("burn_in leaves no samples")
    if len(test_seq) == 0:
        raise DegenerateError("bits per spike is undefined with zero test events")

    def sample_ll(sample):
        return marginal_loglik(sample.params(), test_seq,
                               exact_integrals=exact_integrals)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            lls = list(pool.map(sample_ll, kept))
    else:
        lls = [sample_ll(s) for s in kept]
    model_ll = float(logsumexp(lls) - math.log(len(kept)))

    rates = (train_seq.counts_per_process() + 1.0) / train_seq.horizon
    counts = test_seq.counts_per_process()
    baseline_ll = float((counts * np.log(rates)).sum()
                        - rates.sum() * test_seq.horizon)

    n = len(test_seq)
    bps = (model_ll - baseline_ll) / (n * LN2)
    return PredLikReport(model_ll, baseline_ll, n, bps)


def format_result_row(label, values):
    """Render 'label mean ± sem' rows like published comparison tables."""
    values = np.asarray(values, dtype=float)
    mean = values.mean()
    sem = values.std(ddof=1) / math.sqrt(values.size) if values.size > 1 else 0.0
    return f"{label} {mean:.3f} ± {sem:.3f}"
