"""Cap-set capacity lower bound from an admissible set size."""
from __future__ import annotations

import math
from dataclasses import dataclass

A0 = 12
A1 = 112
AUTO_M = range(1, 13)


@dataclass(frozen=True)
class BoundResult:
    C: float
    dimension: int
    m: int


def _log_bound(s: float, n: int, w: int, m: int) -> float:
    log_b0 = math.log(A0) + math.log(m) + (m - 1) * math.log(A1)
    log_b1 = m * math.log(A1)
    return (math.log(s) + (n - w) * log_b0 + w * log_b1) / (6 * m * n)


def capacity_lower_bound(s: float, n: int, w: int, m="auto") -> BoundResult:
    """C = (s * b0^(n-w) * b1^w)^(1/(6mn)) with b0 = a0*m*a1^(m-1), b1 = a1^m.

    ``m="auto"`` tries m = 1..12 and keeps the largest C.
    """
    if s < 1 or n < 1 or not 0 <= w <= n:
        raise ValueError(f"invalid bound parameters s={s}, n={n}, w={w}")
    if m == "auto" or m is None:
        best = max(AUTO_M, key=lambda k: _log_bound(s, n, w, k))
    else:
        best = int(m)
        if best < 1:
            raise ValueError("m must be >= 1")
    return BoundResult(math.exp(_log_bound(s, n, w, best)), 6 * best * n, best)
