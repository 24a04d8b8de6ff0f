"""Independent oracles shared by the unit and acceptance suites. These stay
deliberately naive: literal definitions, no shortcuts from the library code."""
import math

import numpy as np

import twinforge.rng as rng


def naive_silhouette(x, labels):
    """Literal O(n^2) silhouette definition."""
    n = len(x)
    scores = []
    for i in range(n):
        same = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not same:
            scores.append(0.0)
            continue
        a = sum(math.dist(x[i], x[j]) for j in same) / len(same)
        b = math.inf
        for c in set(labels):
            if c == labels[i]:
                continue
            members = [j for j in range(n) if labels[j] == c]
            b = min(b, sum(math.dist(x[i], x[j]) for j in members) / len(members))
        scores.append((b - a) / max(a, b) if max(a, b) > 0 else 0.0)
    return sum(scores) / n


def random_step_series(seed, max_n=128, max_d=3):
    """Mixed step/noise series for segmentation oracle comparisons."""
    key = rng.stream_key(seed, "steps")
    u = rng.uniforms(key, np.arange(4096, dtype=np.uint64))
    n = 4 + int(u[0] * (max_n - 4))
    d = 1 + int(u[1] * max_d)
    n_steps = int(u[2] * 4)
    bounds = sorted({2 + int(u[3 + j] * (n - 4)) for j in range(n_steps)})
    x = np.empty((n, d))
    prev = 0
    ptr = 10
    for b in [*bounds, n]:
        for dim in range(d):
            level = (u[ptr] - 0.5) * 10
            scale = 0.05 + u[ptr + 1]
            noise = u[ptr + 2 : ptr + 2 + (b - prev)] - 0.5
            x[prev:b, dim] = level + scale * noise
            ptr += 2 + (b - prev)
        prev = b
    return x
