"""Independent reference implementations the tests check against.

Everything here avoids the code paths under test: summation is exact
(math.fsum) or plain loops, PSD goes through scipy.signal.welch, linear
algebra uses explicit inverses instead of solves.
"""

import math

import numpy as np
from scipy import signal as scipy_signal


def naive_moment(samples, k):
    """Direct-summation standardized moment (two-pass, fsum)."""
    xs = [float(v) for v in samples]
    n = len(xs)
    mean = math.fsum(xs) / n
    if k == 1:
        return mean
    m2 = math.fsum((v - mean) ** 2 for v in xs) / n
    if k == 2:
        return m2
    mk = math.fsum((v - mean) ** k for v in xs) / n
    return mk / m2 ** (k / 2.0)


def one_pass_moment(samples, k):
    """Raw power sums combined by the binomial expansion (single pass)."""
    xs = [float(v) for v in samples]
    n = len(xs)
    raw = [math.fsum(v**j for v in xs) / n for j in range(k + 1)]
    mean = raw[1]
    if k == 1:
        return mean
    central = [
        math.fsum(
            math.comb(order, j) * raw[j] * (-mean) ** (order - j)
            for j in range(order + 1)
        )
        for order in range(k + 1)
    ]
    if k == 2:
        return central[2]
    return central[k] / central[2] ** (k / 2.0)


def naive_fano(samples, eps=1e-12):
    xs = [float(v) for v in samples]
    n = len(xs)
    mean = math.fsum(xs) / n
    var = math.fsum((v - mean) ** 2 for v in xs) / n
    if abs(mean) < eps:
        mean = eps if mean >= 0.0 else -eps
    return var / mean


def reference_psd_mean(samples, sample_rate, segment_length=1024, overlap=0.5):
    """Bin-mean of scipy's Welch estimate under the package's conventions."""
    x = np.asarray(samples, dtype=np.float64)
    nper = int(min(segment_length, x.size))
    _, psd = scipy_signal.welch(
        x,
        fs=sample_rate,
        window="hann",
        nperseg=nper,
        noverlap=int(nper * overlap),
        detrend=False,
        return_onesided=True,
        scaling="density",
    )
    return float(psd.mean())


def brute_force_fdr(features, labels):
    """Per-feature FDR via plain loops; returns scores in column order."""
    classes = sorted(set(labels))
    scores = []
    for j in range(features.shape[1]):
        stats = []
        for c in classes:
            col = [features[i, j] for i in range(len(labels)) if labels[i] == c]
            n = len(col)
            mean = math.fsum(col) / n
            var = math.fsum((v - mean) ** 2 for v in col) / (n - 1)
            stats.append((mean, var))
        (m1, v1), (m2, v2) = stats
        denom = v1 + v2
        if denom == 0.0:
            scores.append(float("inf") if m1 != m2 else 0.0)
        else:
            scores.append((m1 - m2) ** 2 / denom)
    return np.array(scores)


def brute_force_scatter(features, labels):
    """S_w, S_b, S_m by explicit per-row outer-product summation."""
    x = np.asarray(features, dtype=np.float64)
    n, d = x.shape
    classes = sorted(set(labels))
    mu0 = sum(x[i] for i in range(n)) / n
    s_w = np.zeros((d, d))
    s_b = np.zeros((d, d))
    s_m = np.zeros((d, d))
    for c in classes:
        rows = [i for i in range(n) if labels[i] == c]
        mu = sum(x[i] for i in rows) / len(rows)
        cov = np.zeros((d, d))
        for i in rows:
            diff = (x[i] - mu)[:, None]
            cov += diff @ diff.T
        s_w += (len(rows) / n) * cov / len(rows)
        diff = (mu - mu0)[:, None]
        s_b += (len(rows) / n) * (diff @ diff.T)
    for i in range(n):
        diff = (x[i] - mu0)[:, None]
        s_m += diff @ diff.T
    return s_w, s_b, s_m / n


def lda_closed_form_predict(train_x, train_y, classes, test_x):
    """Closed-form pooled-covariance linear discriminant, explicit inverse."""
    x1 = train_x[train_y == classes[0]]
    x2 = train_x[train_y == classes[1]]
    mu1, mu2 = x1.mean(axis=0), x2.mean(axis=0)
    n1, n2 = len(x1), len(x2)
    pooled = (
        (n1 - 1) * np.cov(x1, rowvar=False, ddof=1)
        + (n2 - 1) * np.cov(x2, rowvar=False, ddof=1)
    ) / (n1 + n2 - 2)
    w = np.linalg.inv(pooled) @ (mu1 - mu2)
    threshold = 0.5 * w @ (mu1 + mu2) - math.log(n1 / n2)
    score = test_x @ w - threshold
    return np.where(score >= 0.0, classes[0], classes[1])


def kkt_violation(model, features, labels, decision):
    """Worst KKT violation of a fitted SVM over its training set.

    Returns the largest margin-condition breach:
      alpha=0      requires y f >= 1, breach = 1 - y f
      0<alpha<C    requires y f  = 1, breach = |y f - 1|
      alpha=C      requires y f <= 1, breach = y f - 1
    """
    n = len(labels)
    alpha = np.zeros(n)
    alpha[model.sv_indices] = model.alphas
    y = np.where(labels == model.classes[1], 1.0, -1.0)
    yf = y * decision
    worst = 0.0
    bound_slack = 1e-9 * model.C
    for a, v in zip(alpha, yf):
        if a <= bound_slack:
            breach = 1.0 - v
        elif a >= model.C - bound_slack:
            breach = v - 1.0
        else:
            breach = abs(v - 1.0)
        worst = max(worst, breach)
    return worst
