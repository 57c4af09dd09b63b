"""Independent straight-line reimplementations used to cross-check the
package. Nothing here imports from ``rim``; everything is written with
explicit loops over python scalars (plus numpy only as an array source)
so that agreement between the two codebases is meaningful.
"""

from __future__ import annotations

import itertools
import math
import struct

import numpy as np

# ---------------------------------------------------------------- ranking


def pl_permutation_probability(scores, perm) -> float:
    """Sequential sampling without replacement, proportional to score."""
    p = 1.0
    for k in range(len(perm)):
        denom = 0.0
        for j in perm[k:]:
            denom += scores[j]
        p *= scores[perm[k]] / denom
    return p


def pl_distribution(scores) -> list[float]:
    """All n! permutation probabilities in lexicographic order."""
    return [
        pl_permutation_probability(scores, perm)
        for perm in itertools.permutations(range(len(scores)))
    ]


def pl_top1_marginal(scores, item: int) -> float:
    """P(item is ranked first) summed over the full distribution."""
    total = 0.0
    for perm, p in zip(itertools.permutations(range(len(scores))), pl_distribution(scores)):
        if perm[0] == item:
            total += p
    return total


# ------------------------------------------------------------ similarity


def cosine(a, b) -> float:
    dot = 0.0
    na = 0.0
    nb = 0.0
    for x, y in zip(a, b):
        dot += float(x) * float(y)
        na += float(x) * float(x)
        nb += float(y) * float(y)
    return dot / (math.sqrt(na) * math.sqrt(nb))


def calibrate(value: float, epsilon: float = 1e-6) -> float:
    return max((value + 1.0) / 2.0, epsilon)


# -------------------------------------------------------- classification


def classify(
    region_feature,
    background,
    holistics,
    subcategories,
    *,
    agent_count: int = 4,
    use_subcategories: bool = True,
    epsilon: float = 1e-6,
) -> int:
    """Label of the candidate whose ranking distribution best matches the
    region's. ``holistics`` is a list of C class features, ``subcategories``
    a list of C lists of subcategory features. Label 0 is background,
    label k+1 is class k. Ties go to the lower label.
    """
    pool = [list(background)] + [list(h) for h in holistics]
    sims = [cosine(region_feature, p) for p in pool]
    order = sorted(range(len(pool)), key=lambda i: (-sims[i], i))
    agents = [pool[i] for i in order[: min(agent_count, len(pool))]]

    def dist_for(vector):
        scores = [calibrate(cosine(vector, a), epsilon) for a in agents]
        return pl_distribution(scores)

    region_dist = dist_for(region_feature)
    best_label = 0
    best_score = -math.inf
    for label in range(len(pool)):
        if label == 0 or not use_subcategories:
            feats = [pool[label]]
        else:
            feats = [list(f) for f in subcategories[label - 1]]
        total = 0.0
        for f in feats:
            total += cosine(region_dist, dist_for(f))
        if total > best_score:
            best_score = total
            best_label = label
    return best_label


def classify_nearest(region_feature, background, holistics) -> int:
    pool = [list(background)] + [list(h) for h in holistics]
    sims = [cosine(region_feature, p) for p in pool]
    best = 0
    for i in range(1, len(pool)):
        if sims[i] > sims[best]:
            best = i
    return best


# ---------------------------------------------------------------- pooling


def masked_mean(feature_map, weights) -> list[float]:
    """Weighted per-channel mean with explicit loops."""
    h = len(feature_map)
    w = len(feature_map[0])
    d = len(feature_map[0][0])
    acc = [0.0] * d
    total = 0.0
    for r in range(h):
        for c in range(w):
            wt = float(weights[r][c])
            total += wt
            for k in range(d):
                acc[k] += wt * float(feature_map[r][c][k])
    return [a / total for a in acc]


# ------------------------------------------------------------------ miou


def miou_report(pred_maps, gt_maps, class_count: int, ignore_label: int = 255):
    """Per-pixel counting with dict accumulators; returns (per-class IoU
    dict over classes with nonzero union, mean IoU)."""
    n = class_count + 1
    tp = {c: 0 for c in range(n)}
    fp = {c: 0 for c in range(n)}
    fn = {c: 0 for c in range(n)}
    for pred, gt in zip(pred_maps, gt_maps):
        for row_p, row_g in zip(pred, gt):
            for p, g in zip(row_p, row_g):
                p = int(p)
                g = int(g)
                if p == ignore_label or g == ignore_label:
                    continue
                if p == g:
                    tp[p] += 1
                else:
                    fp[p] += 1
                    fn[g] += 1
    ious = {}
    for c in range(n):
        union = tp[c] + fp[c] + fn[c]
        if union > 0:
            ious[c] = tp[c] / union
    mean = sum(ious.values()) / len(ious)
    return ious, mean


# ----------------------------------------------------------- file format


def write_rimt(path, array) -> None:
    """Manual header + payload writer (little-endian float32)."""
    a = np.asarray(array, dtype="<f4")
    blob = b"RIMT"
    blob += struct.pack("<H", 1)
    blob += struct.pack("<B", 1)
    blob += struct.pack("<B", a.ndim)
    for s in a.shape:
        blob += struct.pack("<I", s)
    blob += a.tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(blob)


def read_rimt(path) -> np.ndarray:
    """Manual header parser; raises ValueError on any malformation."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 8:
        raise ValueError("too short")
    if blob[:4] != b"RIMT":
        raise ValueError("bad magic")
    (version,) = struct.unpack_from("<H", blob, 4)
    if version != 1:
        raise ValueError("bad version")
    dtype_code = blob[6]
    if dtype_code != 1:
        raise ValueError("bad dtype")
    ndim = blob[7]
    if ndim < 1 or len(blob) < 8 + 4 * ndim:
        raise ValueError("bad shape table")
    shape = struct.unpack_from(f"<{ndim}I", blob, 8)
    count = 1
    for s in shape:
        if s == 0:
            raise ValueError("zero dim")
        count *= s
    payload = blob[8 + 4 * ndim :]
    if len(payload) != 4 * count:
        raise ValueError("payload size mismatch")
    return np.frombuffer(payload, dtype="<f4").reshape(shape).copy()
