"""Measurement tasks over reconstructed sketches, and their accuracy metrics.

Tasks: cardinality (linear counting over valid buckets), heavy hitters
(top fraction by estimate), flow-size distribution, and the size-weighted
entropy sum_i(i * m_i/M * log2(m_i/M)).

Metrics: relative error, F1, weighted mean relative error between size
histograms, and the relative aggregated error RAE(x, y) =
sum|x_f - y_f| / sum x_f used to split end-host error into the part the
switch sketch already had and the part reconstruction staleness added.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .sketch import ReconSketch, Sketch


def estimate_cardinality(recon: ReconSketch) -> float:
    """Linear-counting estimate of distinct flows seen by the sketch.

    Uses the row with the most valid buckets. V is the fraction of
    buckets not known to be nonzero (invalid ones count as empty), and
    the estimate is -w * ln(V); a fully nonzero row saturates at
    w * ln(w).
    """
    w = recon.params.w
    valid_per_row = recon.valid.sum(axis=1)
    row = int(np.argmax(valid_per_row))
    nonzero_valid = int((recon.valid[row] & (recon.buckets[row] > 0)).sum())
    v = (w - nonzero_valid) / w
    if v == 0.0:
        return w * math.log(w)
    return -w * math.log(v)


def detect_heavy_hitters(
    recon: ReconSketch, candidate_keys: Sequence[int], fraction: float = 0.10
) -> set[int]:
    """Top ceil(fraction * len(keys)) candidates by estimate.

    Ties break toward the smaller key so results are deterministic.
    """
    if not len(candidate_keys):
        raise ValueError("candidate_keys must be nonempty")
    n_top = math.ceil(fraction * len(candidate_keys))
    keys = np.asarray(candidate_keys, dtype=np.uint64)
    est, _ = recon.query_many(keys)
    order = sorted(range(len(keys)), key=lambda i: (-int(est[i]), int(keys[i])))
    return {int(keys[i]) for i in order[:n_top]}


def top_keys(truth: Mapping[int, int], fraction: float = 0.10) -> set[int]:
    """Ground-truth heavy hitters under the same selection rule."""
    if not truth:
        raise ValueError("truth must be nonempty")
    n_top = math.ceil(fraction * len(truth))
    order = sorted(truth, key=lambda k: (-truth[k], k))
    return set(order[:n_top])


def estimate_fsd(recon: ReconSketch, candidate_keys: Sequence[int]) -> dict[int, int]:
    """Histogram of estimated flow sizes over the candidates.

    Flows whose mapped buckets are all invalid are excluded (the
    reconstruction has no data for them, not a zero estimate).
    """
    keys = np.asarray(candidate_keys, dtype=np.uint64)
    est, n_valid = recon.query_many(keys)
    hist: dict[int, int] = {}
    for e, nv in zip(est, n_valid):
        if nv == 0:
            continue
        hist[int(e)] = hist.get(int(e), 0) + 1
    return hist


def true_fsd(truth: Mapping[int, int]) -> dict[int, int]:
    hist: dict[int, int] = {}
    for n in truth.values():
        hist[n] = hist.get(n, 0) + 1
    return hist


def estimate_entropy(fsd: Mapping[int, int]) -> float:
    """Size-weighted entropy sum_i(i * m_i/M * log2(m_i/M)); M = sum m_i.

    Zero-count sizes contribute nothing. Nonpositive for any real
    histogram (every m_i/M <= 1), zero when all flows share one size.
    """
    total = sum(fsd.values())
    if total <= 0:
        raise ValueError("histogram is empty")
    acc = 0.0
    for size, m in fsd.items():
        if m == 0:
            continue
        p = m / total
        acc += size * p * math.log2(p)
    return acc


def relative_error(estimated: float, truth: float) -> float:
    """|estimated - truth| / truth; truth must be positive."""
    if truth <= 0:
        raise ValueError(f"truth must be > 0, got {truth}")
    return abs(estimated - truth) / truth


def f1_score(detected: Iterable[int], truth_set: Iterable[int]) -> float:
    """2PR/(P+R) over key sets; 0 when precision and recall are both 0."""
    detected = set(detected)
    truth_set = set(truth_set)
    hits = len(detected & truth_set)
    precision = hits / len(detected) if detected else 0.0
    recall = hits / len(truth_set) if truth_set else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def wmre(m: Mapping[int, int], m_hat: Mapping[int, int]) -> float:
    """Weighted mean relative error between two size histograms.

    sum_i |m_i - mhat_i| / sum_i (m_i + mhat_i)/2 over the union of sizes.
    """
    sizes = set(m) | set(m_hat)
    num = sum(abs(m.get(i, 0) - m_hat.get(i, 0)) for i in sizes)
    den = sum((m.get(i, 0) + m_hat.get(i, 0)) / 2 for i in sizes)
    if den == 0:
        raise ValueError("histograms are both empty")
    return num / den


def rae(
    x: Mapping[int, float],
    y: Mapping[int, float],
    keys: Iterable[int] | None = None,
) -> float:
    """Relative aggregated error of y against x: sum|x_f - y_f| / sum x_f.

    Not symmetric: x is the reference whose mass normalizes the error.
    """
    keys = list(keys) if keys is not None else list(x)
    if not keys:
        raise ValueError("flow set is empty")
    num = sum(abs(x[k] - y[k]) for k in keys)
    den = sum(x[k] for k in keys)
    if den <= 0:
        raise ValueError("reference values sum to zero")
    return num / den


@dataclass(frozen=True)
class MetricsReport:
    """Accuracy of one run's end-host reconstruction, plus the error split."""

    re_cardinality: float
    f1_heavy_hitter: float
    wmre_fsd: float
    re_entropy: float
    rae_switch_vs_truth: float
    rae_recon_vs_truth: float
    rae_recon_vs_switch: float

    FIELDS = (
        "re_cardinality",
        "f1_heavy_hitter",
        "wmre_fsd",
        "re_entropy",
        "rae_switch_vs_truth",
        "rae_recon_vs_truth",
        "rae_recon_vs_switch",
    )


def evaluate(
    switch: Sketch,
    recon: ReconSketch,
    truth: Mapping[int, int],
    heavy_fraction: float = 0.10,
) -> MetricsReport:
    """All task accuracies for one (switch, reconstruction, truth) snapshot.

    The entropy RE normalizes by |truth| since the size-weighted entropy
    is nonpositive.
    """
    if not truth:
        raise ValueError("truth must be nonempty")
    keys = np.array(sorted(truth), dtype=np.uint64)
    truth_vals = {int(k): truth[int(k)] for k in keys}

    switch_est = switch.query_many(keys)
    recon_est, _ = recon.query_many(keys)
    sw = {int(k): int(v) for k, v in zip(keys, switch_est)}
    rc = {int(k): int(v) for k, v in zip(keys, recon_est)}

    card = estimate_cardinality(recon)
    re_card = relative_error(card, len(truth))

    detected = detect_heavy_hitters(recon, keys, heavy_fraction)
    f1 = f1_score(detected, top_keys(truth_vals, heavy_fraction))

    fsd_hat = estimate_fsd(recon, keys)
    fsd = true_fsd(truth_vals)
    wm = wmre(fsd, fsd_hat)

    truth_entropy = estimate_entropy(fsd)
    # an empty estimated histogram has no entropy; score it as if zero
    est_entropy = estimate_entropy(fsd_hat) if fsd_hat else 0.0
    if truth_entropy != 0.0:
        re_ent = abs(est_entropy - truth_entropy) / abs(truth_entropy)
    else:
        re_ent = abs(est_entropy)

    return MetricsReport(
        re_cardinality=re_card,
        f1_heavy_hitter=f1,
        wmre_fsd=wm,
        re_entropy=re_ent,
        rae_switch_vs_truth=rae(truth_vals, sw),
        rae_recon_vs_truth=rae(truth_vals, rc),
        rae_recon_vs_switch=rae(sw, rc),
    )
