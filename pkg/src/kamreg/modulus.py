"""Moduli of continuity and their structural properties.

A modulus here is a positive nondecreasing function w on an interval
(0, delta] with w(0+) = 0 and x/w(x) bounded near 0.  Built-in kinds:

    hoelder(alpha)            w(x) = x**alpha,            0 < alpha <= 1
    log_hoelder(lam)          w(x) = (-ln x)**-lam,       lam > 0
    gen_log_hoelder(rho,lam)  w(x) = 1/[L1(x) L2(x) ... L_rho(x)**lam]
                              with L_j(x) the j-fold iterated ln(1/x)
    power_log(a, lam)         w(x) = x**a * (-ln x)**-lam, 0 <= a < 1
    tabulated(xs, ws)         monotone log-log interpolation of samples

Structural checks (semi separability, weak homogeneity, comparison,
convexity) are grid-based: limits at 0+ are operationalized as tail
statistics over geometric grids, and boundedness verdicts require the
measured ratio sequence to be nonincreasing over the final third of the
grid or to stay below the constant fitted on the head of the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from kamreg.errors import DomainError

_LOG_KINDS = {"log_hoelder", "gen_log_hoelder", "power_log"}
VALID_KINDS = ("hoelder", "log_hoelder", "gen_log_hoelder", "power_log", "tabulated")


def _default_delta(kind: str, params: dict) -> float:
    # log kinds need every iterated log positive on (0, delta]; nesting one
    # exponential per depth keeps each factor >= ln 2 there.
    if kind == "gen_log_hoelder":
        b = math.log(2.0)
        for _ in range(int(params["depth"]) - 1):
            b = math.exp(b)
        return math.exp(-b)
    if kind in _LOG_KINDS:
        return 0.5
    return 1.0


class LogLogTable:
    """Piecewise-linear interpolation of (ln x, ln w) samples.

    Linear extension beyond both ends preserves the local power law; the
    slopes of the end segments are reused, which is what makes tabulated
    moduli and fitted envelopes integrable against power weights.
    """

    def __init__(self, xs: Sequence[float], ws: Sequence[float]):
        xs = np.asarray(xs, dtype=float)
        ws = np.asarray(ws, dtype=float)
        if xs.ndim != 1 or xs.size < 2 or xs.shape != ws.shape:
            raise ValueError("need at least two (x, w) samples of equal length")
        order = np.argsort(xs)
        xs, ws = xs[order], ws[order]
        if np.any(xs <= 0) or np.any(ws <= 0):
            raise ValueError("samples must be strictly positive")
        if np.any(np.diff(ws) < -1e-12 * ws[:-1]):
            raise ValueError("tabulated modulus must be nondecreasing")
        self.log_x = np.log(xs)
        self.log_w = np.log(ws)
        if np.any(np.diff(self.log_x) <= 0):
            raise ValueError("sample abscissae must be distinct")
        self._lo_slope = ((self.log_w[1] - self.log_w[0])
                          / (self.log_x[1] - self.log_x[0]))
        self._hi_slope = ((self.log_w[-1] - self.log_w[-2])
                          / (self.log_x[-1] - self.log_x[-2]))

    def log_eval(self, log_x: np.ndarray) -> np.ndarray:
        log_x = np.asarray(log_x, dtype=float)
        out = np.interp(log_x, self.log_x, self.log_w)
        below = log_x < self.log_x[0]
        above = log_x > self.log_x[-1]
        if np.any(below):
            out = np.where(below, self.log_w[0]
                           + self._lo_slope * (log_x - self.log_x[0]), out)
        if np.any(above):
            out = np.where(above, self.log_w[-1]
                           + self._hi_slope * (log_x - self.log_x[-1]), out)
        return out

    @property
    def x_min(self) -> float:
        return float(math.exp(self.log_x[0]))

    def samples(self) -> tuple[np.ndarray, np.ndarray]:
        return np.exp(self.log_x), np.exp(self.log_w)


class ModulusSpec:
    """A parameterized modulus of continuity with validity interval (0, delta]."""

    def __init__(self, kind: str, params: dict | None = None,
                 delta: float | None = None,
                 table: LogLogTable | None = None):
        if kind not in VALID_KINDS:
            raise ValueError(f"unknown modulus kind {kind!r}")
        params = dict(params or {})
        if kind == "hoelder":
            a = float(params.get("alpha", math.nan))
            if not 0.0 < a <= 1.0:
                raise ValueError("hoelder exponent must lie in (0, 1]")
            params = {"alpha": a}
        elif kind == "log_hoelder":
            lam = float(params.get("lam", math.nan))
            if not lam > 0.0:
                raise ValueError("log_hoelder index must be positive")
            params = {"lam": lam}
        elif kind == "gen_log_hoelder":
            depth = int(params.get("depth", 0))
            lam = float(params.get("lam", math.nan))
            if depth < 1:
                raise ValueError("gen_log_hoelder depth must be a positive integer")
            if not lam > 0.0:
                raise ValueError("gen_log_hoelder index must be positive")
            params = {"depth": depth, "lam": lam}
        elif kind == "power_log":
            a = float(params.get("a", math.nan))
            lam = float(params.get("lam", math.nan))
            if not 0.0 <= a < 1.0:
                raise ValueError("power_log exponent must lie in [0, 1)")
            if not lam > 0.0:
                raise ValueError("power_log index must be positive")
            params = {"a": a, "lam": lam}
        elif kind == "tabulated":
            if table is None:
                raise ValueError("tabulated modulus needs a sample table")
        self.kind = kind
        self.params = params
        self.table = table
        if delta is None:
            delta = table.samples()[0][-1] if kind == "tabulated" \
                else _default_delta(kind, params)
        self.delta = float(delta)
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if kind == "tabulated":
            self._check_tabulated_invariants()

    # -- constructors ------------------------------------------------------

    @classmethod
    def hoelder(cls, alpha: float, delta: float | None = None) -> "ModulusSpec":
        return cls("hoelder", {"alpha": alpha}, delta)

    @classmethod
    def log_hoelder(cls, lam: float, delta: float | None = None) -> "ModulusSpec":
        return cls("log_hoelder", {"lam": lam}, delta)

    @classmethod
    def gen_log_hoelder(cls, depth: int, lam: float,
                        delta: float | None = None) -> "ModulusSpec":
        return cls("gen_log_hoelder", {"depth": depth, "lam": lam}, delta)

    @classmethod
    def power_log(cls, a: float, lam: float,
                  delta: float | None = None) -> "ModulusSpec":
        return cls("power_log", {"a": a, "lam": lam}, delta)

    @classmethod
    def tabulated(cls, xs: Iterable[float], ws: Iterable[float],
                  delta: float | None = None) -> "ModulusSpec":
        return cls("tabulated", None, delta, table=LogLogTable(xs, ws))

    # -- evaluation --------------------------------------------------------

    def neglog_slope(self) -> float:
        """Exact coefficient c0 of s in ln w(exp(-s)) = c0 s + slow(s).

        Exposing the linear part separately lets quadrature combine power
        weights with it exactly; forming c0*s and the weight term separately
        cancels catastrophically at the huge s reached by tail estimates.
        """
        if self.kind == "hoelder":
            return -self.params["alpha"]
        if self.kind == "power_log":
            return -self.params["a"]
        if self.kind == "tabulated":
            return -self.table._lo_slope
        return 0.0

    def log_slow_neglog(self, s: np.ndarray) -> np.ndarray:
        """Slowly varying part of ln w(exp(-s)) (everything minus c0 s)."""
        s = np.asarray(s, dtype=float)
        kind = self.kind
        if kind == "hoelder":
            return np.zeros_like(s)
        if kind == "log_hoelder":
            return -self.params["lam"] * np.log(s)
        if kind == "gen_log_hoelder":
            depth, lam = self.params["depth"], self.params["lam"]
            t = s
            acc = np.zeros_like(t)
            for d in range(1, depth + 1):
                acc = acc + (lam if d == depth else 1.0) * np.log(t)
                if d < depth:
                    t = np.log(t)
            return -acc
        if kind == "power_log":
            return -self.params["lam"] * np.log(s)
        # tabulated: exactly constant below the sampled range, table values
        # plus the removed linear part inside it (s is moderate there)
        t = self.table
        const_lo = float(t.log_w[0] - t._lo_slope * t.log_x[0])
        inside = t.log_eval(-s) - t._lo_slope * (-s)
        return np.where(-s < t.log_x[0], const_lo, inside)

    def log_eval_neglog(self, s: np.ndarray) -> np.ndarray:
        """ln w(exp(-s)) for s >= ln(1/delta); the form used by quadrature."""
        s = np.asarray(s, dtype=float)
        return self.neglog_slope() * s + self.log_slow_neglog(s)

    def eval(self, x) -> np.ndarray | float:
        """w(x) for 0 < x <= delta (vectorized)."""
        arr = np.asarray(x, dtype=float)
        if np.any(arr <= 0.0) or np.any(arr > self.delta * (1 + 1e-12)):
            raise DomainError(
                f"modulus defined on (0, {self.delta}]; got values outside")
        out = np.exp(self.log_eval_neglog(-np.log(arr)))
        return float(out) if np.isscalar(x) or arr.ndim == 0 else out

    def _check_tabulated_invariants(self) -> None:
        # decreasing-to-0 and x/w bounded, probed on a geometric grid
        js = np.arange(1, 41)
        xs = self.delta * 0.5 ** js
        w = self.eval(xs)
        if not (w[-1] < w[0] and w[-1] <= 0.5 * float(self.eval(self.delta))):
            raise ValueError("tabulated modulus does not decay toward 0")
        ratio = xs / w
        if ratio[-1] > 10.0 * max(1.0, ratio[0]) and ratio[-1] > ratio[-8]:
            raise ValueError("x / w(x) appears unbounded near 0")

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "params": dict(self.params), "delta": self.delta}
        if self.kind == "tabulated":
            xs, ws = self.table.samples()
            d["params"] = {"x": xs.tolist(), "w": ws.tolist()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModulusSpec":
        kind = d.get("kind")
        params = d.get("params", {})
        delta = d.get("delta")
        if kind == "tabulated":
            return cls.tabulated(params["x"], params["w"], delta)
        return cls(kind, params, delta)

    def __repr__(self) -> str:
        ps = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"ModulusSpec({self.kind}, {ps}, delta={self.delta:g})"


@dataclass
class PropertyReport:
    """Outcome of a grid-based structural check."""

    property: str
    verdict: bool | str
    witness: dict = field(default_factory=dict)
    bound_constant: float = math.nan

    def to_dict(self) -> dict:
        return {
            "property": self.property,
            "verdict": self.verdict,
            "witness": {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                        for k, v in self.witness.items()},
            "bound_constant": self.bound_constant,
        }


def _tail_bounded(values: np.ndarray, rel_slack: float = 1e-9) -> tuple[bool, float]:
    """Bounded-at-the-limit verdict for a sequence ordered toward the limit.

    True when the final third is nonincreasing (up to relative slack) or
    stays below the maximum fitted on the first two thirds.
    """
    n = len(values)
    cut = max(1, (2 * n) // 3)
    head, tail = values[:cut], values[cut:]
    if tail.size == 0:
        tail = values[-1:]
    nonincreasing = bool(np.all(np.diff(tail) <= rel_slack * np.abs(tail[:-1])
                                + 1e-300)) if tail.size > 1 else True
    fitted = float(head.max()) if head.size else float(values.max())
    below_fit = bool(tail.max() <= fitted * (1 + rel_slack))
    return (nonincreasing or below_fit), float(tail.max())


def semi_separability(m: ModulusSpec, x_grid: Sequence[float] | None = None,
                      r_resolution: int = 400) -> PropertyReport:
    """Estimate psi(x) = sup_{0<r<delta/x} w(rx)/w(r) and test psi(x) = O(x).

    The sup is taken over a geometric r-grid of size r_resolution; the
    verdict is whether psi(x)/x stays bounded along the x-grid.
    """
    if x_grid is None:
        x_grid = np.geomspace(1.0, 1e6, 25)
    x_grid = np.asarray(x_grid, dtype=float)
    if x_grid.size < 3 or np.any(x_grid < 1.0) or np.any(np.diff(x_grid) <= 0):
        raise ValueError("x_grid must be increasing with all entries >= 1")
    if r_resolution < 8:
        raise ValueError("r_resolution too small")
    psi = np.empty_like(x_grid)
    for i, x in enumerate(x_grid):
        r_hi = m.delta / x
        s = -np.log(np.geomspace(r_hi * 1e-12, r_hi * (1 - 1e-12), r_resolution))
        log_ratio = m.log_eval_neglog(s - math.log(x)) - m.log_eval_neglog(s)
        psi[i] = math.exp(float(log_ratio.max()))
    scaled = psi / x_grid
    verdict, tail_max = _tail_bounded(scaled)
    return PropertyReport(
        property="semi_separable",
        verdict=verdict,
        witness={"x": x_grid, "psi": psi, "psi_over_x": scaled},
        bound_constant=tail_max,
    )


def weak_homogeneity(m: ModulusSpec, a: float,
                     x_grid: Sequence[float] | None = None) -> PropertyReport:
    """Estimate limsup_{x->0+} w(x)/w(ax) for fixed 0 < a < 1."""
    if not 0.0 < a < 1.0:
        raise ValueError("scale factor a must lie in (0, 1)")
    if x_grid is None:
        x_grid = np.geomspace(m.delta * a, 1e-12, 41)
    x_grid = np.asarray(x_grid, dtype=float)
    if x_grid.size < 3 or np.any(np.diff(x_grid) >= 0):
        raise ValueError("x_grid must decrease toward 0")
    s = -np.log(x_grid)
    ratios = np.exp(m.log_eval_neglog(s) - m.log_eval_neglog(s - math.log(a)))
    verdict, _ = _tail_bounded(ratios)
    cut = max(1, (2 * len(ratios)) // 3)
    limsup = float(ratios[cut:].max())
    return PropertyReport(
        property="weak_homogeneous",
        verdict=verdict,
        witness={"x": x_grid, "ratio": ratios, "a": a},
        bound_constant=limsup,
    )


def compare(m1: ModulusSpec, m2: ModulusSpec,
            x_grid: Sequence[float] | None = None) -> str:
    """Order m1 against m2 near 0+ from the ratio w2(x)/w1(x).

    Returns one of "weaker", "strictly_weaker", "equivalent", "incomparable"
    describing m1 relative to m2 (m1 weaker means limsup w2/w1 < inf).  A
    growing ratio, including the case m2 strictly weaker than m1, reports
    "incomparable"; swap the arguments to resolve the direction.

    The default grid lives in s = ln(1/x) down to s = 1e6; ratios of
    logarithmic against power kinds separate only at such depths.
    """
    delta = min(m1.delta, m2.delta)
    if x_grid is None:
        s = np.geomspace(-math.log(delta) + 0.1, 1e6, 49)
        x_grid = None
    else:
        x_grid = np.asarray(x_grid, dtype=float)
        if np.any(x_grid > delta * (1 + 1e-12)) or np.any(x_grid <= 0):
            raise DomainError("comparison grid leaves the common validity interval")
        s = -np.log(x_grid)
        s = np.sort(s)
    log_ratio = m2.log_eval_neglog(s) - m1.log_eval_neglog(s)
    cut = max(1, (2 * len(s)) // 3)
    tail_lr = log_ratio[cut:]
    drift = float(tail_lr[-1] - tail_lr[0])
    span = float(log_ratio.max() - log_ratio.min())
    if span <= math.log(8.0):
        return "equivalent"
    if drift < 0:
        if tail_lr[-1] < min(math.log(0.1), float(log_ratio[0]) - math.log(10.0)):
            return "strictly_weaker"
        return "weaker"
    if drift > 0 and tail_lr[-1] > float(log_ratio[0]) + math.log(10.0):
        return "incomparable"
    bounded, _ = _tail_bounded(np.exp(log_ratio - log_ratio.max()))
    return "weaker" if bounded else "incomparable"


def convexity_check(m: ModulusSpec,
                    x_grid: Sequence[float] | None = None) -> PropertyReport:
    """Second-divided-difference convexity test near 0+.

    A convex modulus automatically admits semi separability and weak
    homogeneity, so a true verdict short-circuits both (the report carries
    the implied verdicts).
    """
    if x_grid is None:
        x_grid = np.geomspace(1e-12, m.delta, 41)
    x_grid = np.sort(np.asarray(x_grid, dtype=float))
    if x_grid.size < 3:
        raise ValueError("need at least three grid points")
    w = m.eval(x_grid)
    x0, x1, x2 = x_grid[:-2], x_grid[1:-1], x_grid[2:]
    dd2 = ((w[2:] - w[1:-1]) / (x2 - x1) - (w[1:-1] - w[:-2]) / (x1 - x0)) \
        / (x2 - x0)
    scale = np.abs(w[1:-1]) / (x2 - x0) ** 2 + 1e-300
    near0 = slice(0, max(1, len(dd2) // 2))
    convex = bool(np.all(dd2[near0] >= -1e-9 * scale[near0]))
    return PropertyReport(
        property="convex",
        verdict=convex,
        witness={
            "x": x_grid[1:-1],
            "second_divided_difference": dd2,
            "implies_semi_separable": convex,
            "implies_weak_homogeneous": convex,
        },
        bound_constant=float(dd2[near0].min()),
    )
