"""Quadrature helpers for weighted integrals of moduli of continuity.

Every integral handled here has the form  int phi(t) / t**m dt  over a
subinterval of (0, 1].  Substituting s = ln(1/t) turns it into
int exp(g(s)) ds with

    g(s) = log(phi(exp(-s))) + (m - 1) * s,

which is evaluated entirely in log space.  That keeps t down to exp(-700)
and weight orders up to t**-66 representable, and it keeps slowly varying
logarithmic factors (the interesting part of these integrands) resolved.

Callers supply ``g`` as a vectorized callable of s.  Results are returned
as log-values; ``math.exp`` them only when the caller knows they are in
range.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

LogIntegrand = Callable[[np.ndarray], np.ndarray]

_GAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}

# Hard ceiling for the s-range explored when estimating tails; corresponds
# to t = exp(-1e13), far below anything float64 arithmetic distinguishes.
S_CAP = 1.0e13

NEG_INF = float("-inf")


def gauss_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    rule = _GAUSS_CACHE.get(order)
    if rule is None:
        rule = leggauss(order)
        _GAUSS_CACHE[order] = rule
    return rule


def panel_points(edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes/weights for the given panel edges."""
    xs, ws = gauss_rule(order)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    pts = mid[:, None] + half[:, None] * xs[None, :]
    wts = half[:, None] * ws[None, :]
    return pts.ravel(), wts.ravel()


def _logsumexp(log_terms: np.ndarray) -> float:
    finite = log_terms[np.isfinite(log_terms)]
    if finite.size == 0:
        return NEG_INF
    m = float(finite.max())
    return m + math.log(float(np.sum(np.exp(finite - m))))


def log_integral(g: LogIntegrand, s_lo: float, s_hi: float,
                 order: int = 12, min_panels: int = 8,
                 panels_per_decade: int = 16) -> float:
    """log of int_{s_lo}^{s_hi} exp(g(s)) ds over a finite s-range.

    Panels are geometric when the range spans decades (integrands here are
    power-law-like in s), uniform otherwise.
    """
    if s_hi <= s_lo:
        return NEG_INF
    if s_lo > 0 and s_hi / s_lo > 16.0:
        n = max(min_panels, int(panels_per_decade * math.log10(s_hi / s_lo)) + 1)
        edges = np.geomspace(s_lo, s_hi, n + 1)
    else:
        n = max(min_panels, int(4 * (s_hi - s_lo)) + 1, 8)
        n = min(n, 512)
        edges = np.linspace(s_lo, s_hi, n + 1)
    pts, wts = panel_points(edges, order)
    logs = g(pts) + np.log(wts)
    return _logsumexp(logs)


def _tail_remainder_log(g: LogIntegrand, s: float) -> float:
    """log of int_s^inf exp(g) ds, from the local behaviour of g at s.

    Uses an exponential-decay model exp(g)/|g'| when the log-derivative is
    locally constant, and a power model exp(g) * s / (p - 1) with
    p = -s g'(s) when g decays like -p ln s.  Both are exact for integrands
    of their own class; the class is chosen from the local curvature.
    """
    h = 1e-4 * max(s, 1.0)
    g0 = float(g(np.array([s]))[0])
    gp = float(g(np.array([s + h]))[0])
    gm = float(g(np.array([s - h]))[0])
    g1 = (gp - gm) / (2 * h)
    g2 = (gp - 2 * g0 + gm) / (h * h)
    if g1 >= -1e-13:
        raise ArithmeticError("tail estimate requested for non-decaying integrand")
    curv = g2 / (g1 * g1)
    if abs(curv) < 0.05:
        # locally exponential: remainder = exp(g)/|g1| * (1 + curv + ...)
        return g0 - math.log(-g1) + math.log1p(max(curv, -0.5))
    p = -s * g1
    if p <= 1.0:
        raise ArithmeticError("tail decays too slowly for a power model")
    return g0 + math.log(s) - math.log(p - 1.0)


def log_integral_to_zero(g: LogIntegrand, s_lo: float,
                         rel_tol: float = 1e-9, order: int = 12) -> float:
    """log of int_{s_lo}^{inf} exp(g(s)) ds  (i.e. the t-integral down to 0+).

    The caller must already know the integral converges.  The tail beyond
    the explored range is added from a local decay model (exact for pure
    power or exponential decay in s); the range is extended by factors of 32
    until two consecutive totals agree to rel_tol, a Richardson-style check
    on the model error.
    """
    s_max = max(32.0 * max(s_lo, 1.0), 1e4)
    acc = log_integral(g, s_lo, s_max, order=order)
    prev_total = None
    while True:
        try:
            rem = _tail_remainder_log(g, s_max)
        except ArithmeticError:
            rem = None
        total = None
        if rem is not None:
            total = rem if acc == NEG_INF else _logsumexp(np.array([acc, rem]))
            if rem - total <= math.log(rel_tol):
                return total
            if prev_total is not None and abs(total - prev_total) <= rel_tol:
                return total
        if s_max >= S_CAP:
            if total is None:
                raise AnalysisTailError(
                    "tail did not enter a decaying regime by s = %.3g" % s_max)
            return total
        s_next = min(s_max * 32.0, S_CAP)
        acc = _logsumexp(np.array([acc, log_integral(g, s_max, s_next, order=order)]))
        prev_total = total
        s_max = s_next


class AnalysisTailError(ArithmeticError):
    pass


def increment_logs(g: LogIntegrand, j_lo: int, j_hi: int, upper: float,
                   order: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """log of int over [2^-(j+1), 2^-j] (plus a head piece up to ``upper``).

    Returns (a_j, log d_j) for j = j_lo .. j_hi where d_j is the t-integral
    over [2^-(j+1), min(2^-j, upper)].  These dyadic increments drive the
    convergence/divergence classification of truncated integrals.
    """
    ln2 = math.log(2.0)
    js = np.arange(j_lo, j_hi + 1)
    logs = np.empty(len(js))
    s_upper = -math.log(upper)
    for i, j in enumerate(js):
        s_a = max(j * ln2, s_upper)
        s_b = (j + 1) * ln2
        if s_b <= s_a:
            logs[i] = NEG_INF
            continue
        edges = np.linspace(s_a, s_b, 5)
        pts, wts = panel_points(edges, order)
        logs[i] = _logsumexp(g(pts) + np.log(wts))
    return 0.5 ** js.astype(float), logs


def cumulative_from_increments(log_d: np.ndarray) -> np.ndarray:
    """log I_j for I_j = sum_{i<=j} d_i (running log-sum-exp)."""
    out = np.empty_like(log_d)
    acc = NEG_INF
    for i, v in enumerate(log_d):
        acc = v if acc == NEG_INF else np.logaddexp(acc, v)
        out[i] = acc
    return out
