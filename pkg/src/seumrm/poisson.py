"""Truncated Poisson weights for uniformization.

Weights are built by the ratio recurrence outward from the mode, so no
factorials or large powers are ever formed, then normalized and trimmed so
that the discarded mass on each side is at most ``eps / 2``.
"""

from __future__ import annotations

import math

import numpy as np


def poisson_weights(mean: float, eps: float = 1e-10) -> tuple[int, np.ndarray]:
    """Return ``(left, w)`` with ``w[k - left] ~= P(N = k)``, ``N ~ Poisson(mean)``.

    ``w`` sums to one and the mass outside ``[left, left + len(w))`` is at
    most ``eps``.
    """
    if mean < 0 or not math.isfinite(mean):
        raise ValueError(f"Poisson mean must be finite and >= 0, got {mean}")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if mean == 0:
        return 0, np.ones(1)

    mode = int(math.floor(mean))
    p_mode = math.exp(-mean + mode * math.log(mean) - math.lgamma(mode + 1))
    cutoff = eps * 1e-4

    right = [1.0]
    k = mode
    while True:
        ratio = mean / (k + 1)
        nxt = right[-1] * ratio
        # the remaining tail is dominated by a geometric series with this ratio
        if ratio < 1 and nxt * p_mode / (1 - ratio) < cutoff:
            break
        right.append(nxt)
        k += 1

    left = []
    w = 1.0
    k = mode
    while k > 0:
        ratio = k / mean
        nxt = w * ratio
        if ratio < 1 and nxt * p_mode / (1 - ratio) < cutoff:
            break
        left.append(nxt)
        w = nxt
        k -= 1

    weights = np.array(left[::-1] + right)
    start = mode - len(left)
    weights /= weights.sum()

    lo_cum = np.cumsum(weights)
    hi_cum = np.cumsum(weights[::-1])
    drop_lo = int(np.searchsorted(lo_cum, eps / 2, side="right"))
    drop_hi = int(np.searchsorted(hi_cum, eps / 2, side="right"))
    drop_lo = min(drop_lo, len(weights) - 1)
    trimmed = weights[drop_lo:len(weights) - drop_hi] if drop_hi else weights[drop_lo:]
    if trimmed.size == 0:
        trimmed = weights[drop_lo:drop_lo + 1]
    return start + drop_lo, trimmed / trimmed.sum()
