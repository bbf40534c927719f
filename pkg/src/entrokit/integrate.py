"""Adaptive Simpson quadrature.

Small, dependency-free integrator used by the ground-truth entropy oracles so
they stay independent of the estimators they validate.  The integrand must be
vectorized over a numpy array of abscissae.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError, ParameterError


def _simpson(fa, fm, fb, a, b):
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def adaptive_simpson(
    f, a: float, b: float, tol: float = 1e-9, max_depth: int = 60, initial_splits: int = 8
) -> float:
    """Integrate ``f`` on ``[a, b]`` to absolute tolerance ``tol``.

    Classic recursive Simpson with Richardson correction; intervals are split
    until the two-panel estimate agrees with the one-panel estimate to
    ``15 * tol`` (locally scaled).  The interval is pre-split uniformly so an
    integrand that vanishes on part of the domain cannot fool the initial
    error estimate into converging early.
    """
    if not b >= a:
        raise ParameterError("integration bounds must satisfy a <= b")
    if b == a:
        return 0.0

    def ev(x):
        return float(f(np.asarray([x]))[0])

    stack_result = 0.0
    # (a, fa, fm, fb, b, whole, tol, depth)
    edges = np.linspace(a, b, max(1, initial_splits) + 1)
    work = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (lo + hi)
        flo, fmid, fhi = ev(lo), ev(mid), ev(hi)
        work.append((lo, flo, fmid, fhi, hi, _simpson(flo, fmid, fhi, lo, hi), tol / len(edges), 0))
    while work:
        a0, fa0, fm0, fb0, b0, whole0, tol0, depth = work.pop()
        m0 = 0.5 * (a0 + b0)
        lm = 0.5 * (a0 + m0)
        rm = 0.5 * (m0 + b0)
        flm, frm = ev(lm), ev(rm)
        left = _simpson(fa0, flm, fm0, a0, m0)
        right = _simpson(fm0, frm, fb0, m0, b0)
        err = left + right - whole0
        if depth >= max_depth:
            raise NumericError("adaptive quadrature failed to converge on [%g, %g]" % (a0, b0))
        if abs(err) <= 15.0 * tol0:
            stack_result += left + right + err / 15.0
        else:
            work.append((a0, fa0, flm, fm0, m0, left, tol0 / 2.0, depth + 1))
            work.append((m0, fm0, frm, fb0, b0, right, tol0 / 2.0, depth + 1))
    return stack_result


def entropy_integral(pdf, segments, tol: float = 1e-9) -> float:
    """Quadrature of ``-p log p`` over a list of ``(lo, hi)`` segments.

    Points where the density underflows contribute nothing (the integrand
    tends to zero with p).
    """

    def integrand(x):
        p = np.asarray(pdf(x), dtype=float)
        out = np.zeros_like(p)
        ok = p >= 1e-300
        out[ok] = -p[ok] * np.log(p[ok])
        return out

    total = 0.0
    for lo, hi in segments:
        total += adaptive_simpson(integrand, float(lo), float(hi), tol=tol)
    return total


def merge_intervals(intervals) -> list:
    """Union of closed intervals as a sorted, disjoint list."""
    ivs = sorted((float(a), float(b)) for a, b in intervals)
    merged: list = []
    for a, b in ivs:
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return merged
