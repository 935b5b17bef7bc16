"""One-sided binomial upper limits.

``solve_delta`` gives the relaxed (Chernoff-Hoeffding) upper limit used for
facet offsets; ``exact_cp_upper`` is the exact Clopper-Pearson limit, kept as a
reference the relaxed limit must dominate. Natural logarithms throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy import special

from .errors import DomainError

MAX_BISECTIONS = 200


def binary_kl(x, y):
    """Binary relative entropy ``D(x || y)`` in nats.

    ``0 log 0`` is taken as 0, so ``y`` may be 0 or 1 only when it equals ``x``.
    """
    x = float(x)
    y = float(y)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    if not 0.0 <= y <= 1.0:
        raise DomainError(f"y must lie in [0, 1], got {y}")
    if x == y:
        return 0.0
    if y in (0.0, 1.0):
        raise DomainError(f"D({x} || {y}) is infinite")
    out = 0.0
    if x > 0.0:
        out += x * math.log(x / y)
    if x < 1.0:
        out += (1.0 - x) * math.log((1.0 - x) / (1.0 - y))
    return max(out, 0.0)


def binary_kl_array(x, y):
    """Vectorised ``D(x || y)``; returns ``inf`` where it diverges."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = special.rel_entr(x, y) + special.rel_entr(1.0 - x, 1.0 - y)
    return np.maximum(out, 0.0)


@dataclass(frozen=True)
class DeltaSolution:
    delta: float
    bound: float
    clamped: bool
    residual: float


def _check_counts(n_i, n):
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    if int(n_i) != n_i or not 0 <= n_i <= n:
        raise DomainError(f"n_i must be an integer in [0, n], got {n_i}")


def _check_eps(eps):
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")


def delta_bounds(n_i, n, eps_i):
    """Vectorised root solve; returns ``(delta, bound, clamped, residual)`` arrays.

    For each entry finds the positive ``delta`` with
    ``D(x || x + delta) = -ln(eps_i) / n`` where ``x = n_i / n``. ``D`` is
    strictly increasing in ``delta`` on ``(0, 1 - x)`` and diverges at the right
    end, so bisection always brackets the root. The upper bracket end is
    returned, so the offset errs on the safe side. ``n_i == n`` has no positive
    root and gives a clamped, vacuous bound of 1.
    """
    n_i, n, eps_i = np.broadcast_arrays(
        np.asarray(n_i, dtype=float), np.asarray(n, dtype=float), np.asarray(eps_i, dtype=float)
    )
    if np.any(n < 1) or np.any(n_i < 0) or np.any(n_i > n):
        raise DomainError("require 0 <= n_i <= n and n >= 1")
    if np.any(eps_i <= 0) or np.any(eps_i >= 1):
        raise DomainError("eps_i must lie in (0, 1)")
    x = n_i / n
    target = -np.log(eps_i) / n
    clamped = n_i >= n

    lo = np.zeros_like(x)
    hi = np.where(clamped, 0.0, 1.0 - x)
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if np.all((mid == lo) | (mid == hi)):
            break
        above = binary_kl_array(x, x + mid) >= target
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)

    delta = np.where(clamped, 1.0 - x, hi)
    bound = np.minimum(x + delta, 1.0)
    clamped = clamped | (x + delta >= 1.0)
    residual = np.where(clamped, 0.0, binary_kl_array(x, bound) - target)
    return delta, bound, clamped, residual


def solve_delta(n_i, n, eps_i):
    """Relaxed upper limit for a single outcome count, see :func:`delta_bounds`."""
    _check_counts(n_i, n)
    _check_eps(eps_i)
    delta, bound, clamped, residual = delta_bounds(n_i, n, eps_i)
    return DeltaSolution(float(delta), float(bound), bool(clamped), float(residual))


def binomial_tail(n_i, n, p):
    """``P[X <= n_i]`` for ``X ~ Binomial(n, p)`` (regularised incomplete beta)."""
    _check_counts(n_i, n)
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    if n_i == n:
        return 1.0
    return float(special.bdtr(int(n_i), int(n), p))


def exact_cp_upper(n_i, n, eps_i):
    """One-sided Clopper-Pearson upper limit ``p*`` with tail ``eps_i``.

    The lower binomial tail at ``n_i`` decreases strictly in ``p`` for
    ``n_i < n``; ``p*`` is located by bisection to machine precision.
    """
    _check_counts(n_i, n)
    _check_eps(eps_i)
    if n_i == n:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if special.bdtr(int(n_i), int(n), mid) > eps_i:
            lo = mid
        else:
            hi = mid
    return hi
