"""Small deterministic optimization helpers."""

from __future__ import annotations

import math
from typing import Callable

__all__ = ["golden_section_max"]

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_INV_PHI_SQ = (3.0 - math.sqrt(5.0)) / 2.0


def golden_section_max(
    f: Callable[[float], float], a: float, b: float, tol: float = 1e-10
) -> tuple[float, float]:
    """Maximize a concave (or unimodal) function on [a, b].

    Runs golden-section search until the bracket is narrower than ``tol``
    and returns ``(x, f(x))`` at the bracket midpoint.  Deterministic: the
    iteration count is fixed by ``tol`` up front.
    """
    if not b > a:
        raise ValueError("need b > a")
    dist = b - a
    if dist <= tol:
        x = (a + b) / 2.0
        return x, f(x)
    n_iter = int(math.ceil(math.log(tol / dist) / math.log(_INV_PHI)))
    c = a + _INV_PHI_SQ * dist
    d = a + _INV_PHI * dist
    fc = f(c)
    fd = f(d)
    for _ in range(n_iter - 1):
        dist *= _INV_PHI
        if fc > fd:
            b, d, fd = d, c, fc
            c = a + _INV_PHI_SQ * dist
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * dist
            fd = f(d)
    x = (a + b) / 2.0
    return x, f(x)
