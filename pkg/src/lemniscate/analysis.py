"""Empirical lemniscate level s_n, the potential envelope, and rate sweeps.

For a polynomial P of degree n the measured level is the smallest s such that
``|P| > ||P||_K`` on the closed exterior region ``{g >= s}``. Once no zero
of P lies in ``{g >= s}``, ``log|P| - n g`` is harmonic there (including at
infinity), so its minimum over the region is attained on K_s and

    phi(s) = min_{K_s} log|P| - log||P||_K

is increasing in s. The level is found by bisection on phi.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .geometry import CompactSet
from .green_solver import GreenSolution
from .lemniscate_builder import LemniscatePolynomial, build, log_abs, split_degrees
from .level_set import level_curve, partition_level

__all__ = [
    "BracketError",
    "SnReport",
    "SweepRow",
    "sup_norm",
    "measure_sn",
    "verify_level",
    "envelope_check",
    "far_field_envelope",
    "loglog_q",
    "choose_degrees",
    "construct",
    "sweep",
    "SWEEP_COLUMNS",
]

SWEEP_COLUMNS = ("n", "m", "q", "s_construct", "s_n_emp", "sn_times_n", "sn_scaled_loglog",
                 "envelope", "wall_ms")


class BracketError(RuntimeError):
    """phi is not positive at the upper end of the bisection bracket."""


def _local_extrema(vals: np.ndarray, count: int, largest: bool) -> np.ndarray:
    """Indices of the ``count`` most extreme discrete local extrema of a
    periodic sequence.

    Peaks are ranked by the vertex of the parabola through each sample and
    its two neighbours, not by the sample itself: with many narrow peaks of
    nearly equal height the best sample need not sit on the best peak.
    """
    v = vals if largest else -vals
    left, right = np.roll(v, 1), np.roll(v, -1)
    idx = np.flatnonzero((v >= left) & (v >= right) & np.isfinite(v))
    if idx.size == 0:
        idx = np.arange(v.size)
    curv = 2 * v[idx] - left[idx] - right[idx]
    with np.errstate(divide="ignore", invalid="ignore"):
        vertex = v[idx] + np.where(curv > 0, (right[idx] - left[idx]) ** 2 / (8 * curv), 0.0)
    vertex = np.where(np.isfinite(vertex), vertex, v[idx])
    order = np.argsort(vertex)[::-1][:max(count, 1)]
    return idx[order], (vertex if largest else -vertex)[order]


def _sup_norm(poly: LemniscatePolynomial, spec: CompactSet, samples_per_zero: int = 16,
              min_samples: int = 2048, refine: int = 10):
    cands = []
    total = 0
    for j, c in enumerate(spec.continua):
        n_pts = max(min_samples, samples_per_zero * poly.n)
        t = np.arange(n_pts) / n_pts
        vals = log_abs(poly, c.boundary(t))
        total += n_pts
        top, est = _local_extrema(vals, refine, largest=True)
        cands.extend((float(e), float(vals[i]), j, float(t[i]), 1.0 / n_pts)
                     for i, e in zip(top, est))
    cands.sort(reverse=True)
    best = max(c[1] for c in cands)
    for _, val, j, t0, h in cands[:refine]:
        c = spec[j]
        res = minimize_scalar(lambda t: -log_abs(poly, c.boundary(np.array([t])))[0],
                              bounds=(t0 - h, t0 + h), method="bounded",
                              options={"xatol": 1e-12})
        best = max(best, val, -float(res.fun))
    return best, total


def sup_norm(poly: LemniscatePolynomial, spec: CompactSet, samples_per_zero: int = 16) -> float:
    """log ||P||_K: the maximum of log|P| over the boundary of K.

    Dense boundary sampling followed by bounded scalar refinement around the
    ten largest samples.
    """
    return _sup_norm(poly, spec, samples_per_zero)[0]


@dataclass
class SnReport:
    """Measured level for one polynomial; ``s_n_emp`` is an upper bound for s_n(K)."""

    n: int
    m: int
    q: int
    s_construct: float
    sup_norm_on_K: float
    s_n_emp: float
    bound_envelope: float = float("nan")
    far_envelope: float = float("nan")
    schedule: str = "fixed_q"
    bracket_lo: float = 0.0
    bracket_hi: float = 0.0
    phi_lo: float = float("nan")
    phi_hi: float = float("nan")
    monotone: bool = True
    sup_samples: int = 0
    tolerance: float = 0.0
    label: str = "s_n upper bound"

    def to_dict(self) -> dict:
        return asdict(self)


class _LevelMin:
    """min over K_s of log|P|, with traced curves cached by level."""

    def __init__(self, poly, sol, samples_per_zero=8, min_points=2048, refine=10):
        self.poly, self.sol, self.refine = poly, sol, refine
        self.n_pts = [max(min_points, int(samples_per_zero * poly.n * w) + 1) for w in sol.omegas]
        self.curves: dict[float, list] = {}
        self.evaluated = 0

    def _curves(self, s):
        if s not in self.curves:
            if self.curves:
                near = min(self.curves, key=lambda t: abs(math.log(t / s)))
                self.curves[s] = [c.at_level(s) for c in self.curves[near]]
            else:
                self.curves[s] = [level_curve(self.sol, s, j, n)
                                  for j, n in enumerate(self.n_pts)]
        return self.curves[s]

    def __call__(self, s: float) -> float:
        self.evaluated += 1
        cands = []
        curves = self._curves(s)
        for curve in curves:
            vals = log_abs(self.poly, curve.points[:-1])
            low, est = _local_extrema(vals, self.refine, largest=False)
            cands.extend((float(e), float(vals[i]), curve, float(curve.cum_measure[i]),
                          curve.total / len(curve)) for i, e in zip(low, est))
        cands.sort(key=lambda c: c[0])
        best = min(c[1] for c in cands)
        for _, val, curve, mu0, h in cands[:self.refine]:
            if not np.isfinite(val):
                return -np.inf
            res = minimize_scalar(lambda mu: log_abs(self.poly, curve.point_at(np.array([mu])))[0],
                                  bounds=(mu0 - h, mu0 + h), method="bounded",
                                  options={"xatol": 1e-13 * curve.total})
            best = min(best, val, float(res.fun))
        return best


def measure_sn(poly: LemniscatePolynomial, sol: GreenSolution, spec: CompactSet | None = None,
               bracket_hi: float | None = None, tol: float | None = None,
               schedule: str = "fixed_q") -> SnReport:
    """Smallest level s with min_{K_s} |P| > ||P||_K, by bisection.

    The lower end of the bracket is the largest Green level of a zero of P
    (below it a zero lies outside U_s). ``tol`` defaults to 1e-3 / n.
    """
    spec = spec or sol.spec
    tol = tol if tol is not None else 1e-3 / poly.n
    sup, n_sup = _sup_norm(poly, spec)
    level_min = _LevelMin(poly, sol)

    def phi(s):
        return level_min(s) - sup if s > 0 else -0.0

    zero_levels = np.maximum(sol.potential(poly.zeros), 0.0)
    lo = float(zero_levels.max())
    limit = sol.s0
    if lo >= limit:
        raise BracketError(f"zeros reach level {lo:.4g} >= s0 = {limit:.4g}")
    phi_lo = phi(lo) if lo > 0 else -0.0
    if phi_lo > 0:
        return SnReport(poly.n, poly.m, poly.q, poly.s, sup, lo, schedule=schedule,
                        bracket_lo=lo, bracket_hi=lo, phi_lo=phi_lo, phi_hi=phi_lo,
                        sup_samples=n_sup, tolerance=tol)
    if bracket_hi is None:
        width = max(lo, 4.0 / poly.n)
        hi = min(lo + width, limit)
        while phi(hi) <= 0:
            if hi >= limit:
                raise BracketError(f"phi <= 0 up to s0 = {limit:.4g}")
            width *= 2
            hi = min(lo + width, limit)
    else:
        hi = float(bracket_hi)
        if hi >= limit:
            raise BracketError(f"bracket_hi {hi:.4g} not below s0 = {limit:.4g}")
        if phi(hi) <= 0:
            raise BracketError(f"phi({hi:.4g}) <= 0; enlarge bracket_hi")
    phi_hi = phi(hi)
    # Monotonicity probe; a violation falls back to a fine scan for the
    # last nonpositive level.
    probe = np.linspace(lo, hi, 10)[1:-1]
    vals = np.array([phi(s) for s in probe])
    monotone = bool(np.all(np.diff(np.concatenate([[phi_lo], vals, [phi_hi]])) >= -1e-9 * poly.n))
    if not monotone:
        scan = np.linspace(lo, hi, 65)
        sv = np.array([phi(s) for s in scan])
        bad = np.flatnonzero(sv <= 0)
        lo = float(scan[bad[-1]])
        hi = float(scan[bad[-1] + 1])
    else:
        neg = probe[vals <= 0]
        pos = probe[vals > 0]
        if neg.size:
            lo = float(neg.max())
        if pos.size:
            hi = float(pos.min())
    bracket = (lo, hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if phi(mid) > 0:
            hi = mid
        else:
            lo = mid
    return SnReport(poly.n, poly.m, poly.q, poly.s, sup, hi, schedule=schedule,
                    bracket_lo=bracket[0], bracket_hi=bracket[1], phi_lo=phi_lo,
                    phi_hi=phi_hi, monotone=monotone, sup_samples=n_sup, tolerance=tol)


def verify_level(poly: LemniscatePolynomial, sol: GreenSolution, s: float,
                 sup: float | None = None, n_points: int | None = None) -> float:
    """min over a fresh, independently sampled K_s of log|P| minus log||P||_K.

    Positive values confirm ``|P| > ||P||_K`` on K_s. The curve is traced
    from scratch by marching (no continuation cache) and resampled.
    """
    from .level_set import trace

    sup = sup_norm(poly, sol.spec) if sup is None else sup
    worst = np.inf
    for j, w in enumerate(sol.omegas):
        n = n_points or max(4096, int(12 * poly.n * w) + 1)
        z = trace(sol, s, j).resampled(n).points[:-1]
        worst = min(worst, float(log_abs(poly, z).min()))
    return worst - sup


def envelope_check(poly: LemniscatePolynomial, sol: GreenSolution, s: float | None = None,
                   n_samples: int = 512) -> float:
    """max over K_{10 s} of |log|P| - n g - n log cap(K)|."""
    s = poly.s if s is None else s
    worst = 0.0
    for j, w in enumerate(sol.omegas):
        n_pts = max(int(np.ceil(n_samples * w)), 16 * (poly.ms[j] if poly.ms else poly.m), 64)
        z = level_curve(sol, 10 * s, j, n_pts).points[:-1]
        dev = log_abs(poly, z) - poly.n * sol.potential(z) - poly.n * sol.log_capacity
        worst = max(worst, float(np.abs(dev).max()))
    return worst


def far_field_envelope(poly: LemniscatePolynomial, sol: GreenSolution, radius: float | None = None,
                       n_samples: int = 512, rng: np.random.Generator | None = None) -> float:
    """The same deviation on a circle of radius ``10 diam(K)`` around K."""
    spec = sol.spec
    center = np.mean([c.centroid for c in spec.continua])
    radius = radius or 10 * spec.diam
    phase = 0.0 if rng is None else rng.uniform(0, 2 * np.pi / n_samples)
    z = center + radius * np.exp(1j * (phase + 2 * np.pi * np.arange(n_samples) / n_samples))
    dev = log_abs(poly, z) - poly.n * sol.potential(z) - poly.n * sol.log_capacity
    return float(np.abs(dev).max())


def loglog_q(m: int) -> int:
    """q_m = floor(2 log log m), at least 1."""
    if m < 3:
        return 1
    return max(1, int(math.floor(2 * math.log(math.log(m)))))


def choose_degrees(n: int, schedule: str = "fixed_q", q: int = 4) -> tuple[int, int]:
    """(m, q) with q m <= n: m = n // q for a fixed q, otherwise the largest
    m with m q_m <= n."""
    if schedule in ("fixed", "fixed_q"):
        return n // q, q
    if schedule != "loglog":
        raise ValueError(f"unknown schedule {schedule!r}")
    m = n
    while m > 1 and m * loglog_q(m) > n:
        m -= 1
    return m, loglog_q(m)


def construct(sol: GreenSolution, m: int, q: int, c: float, strict_m: bool = False,
              nodes_per_arc: int = 8) -> LemniscatePolynomial:
    """Build P_{qm} at the level s = c q / m."""
    s = c * q / m
    ms = split_degrees(sol.omegas, m, strict=strict_m)
    part = partition_level(sol, s, ms, nodes_per_arc=max(nodes_per_arc, q + 2))
    return build(sol, part, q)


@dataclass
class SweepRow:
    n: int
    m: int = 0
    q: int = 0
    s_construct: float = float("nan")
    s_n_emp: float = float("nan")
    sn_times_n: float = float("nan")
    sn_scaled_loglog: float = float("nan")
    envelope: float = float("nan")
    wall_ms: float = float("nan")
    far_envelope: float = float("nan")
    error: str | None = None
    report: dict = field(default_factory=dict, repr=False)

    def csv_row(self, timing: bool = False) -> list[str]:
        def fmt(v):
            return "" if isinstance(v, float) and not math.isfinite(v) else repr(v)
        vals = [self.n, self.m, self.q, self.s_construct, self.s_n_emp, self.sn_times_n,
                self.sn_scaled_loglog, self.envelope]
        out = [fmt(v) for v in vals]
        out.append(fmt(round(self.wall_ms, 3)) if timing else "")
        return out


def _sweep_one(sol, n, schedule, q, c):
    t0 = time.perf_counter()
    row = SweepRow(n)
    try:
        m, qq = choose_degrees(n, schedule, q)
        row.m, row.q = m, qq
        row.s_construct = c * qq / m
        poly = construct(sol, m, qq, c)
        rep = measure_sn(poly, sol, schedule=schedule)
        rep.bound_envelope = envelope_check(poly, sol)
        rep.far_envelope = far_field_envelope(poly, sol)
        row.s_n_emp = rep.s_n_emp
        row.sn_times_n = rep.s_n_emp * n
        row.sn_scaled_loglog = rep.s_n_emp * n / math.log(math.log(n)) ** 2
        row.envelope = rep.bound_envelope
        row.far_envelope = rep.far_envelope
        row.report = rep.to_dict()
    except Exception as err:  # per-row failures are recorded, the sweep goes on
        row.error = f"{type(err).__name__}: {err}"
    row.wall_ms = 1e3 * (time.perf_counter() - t0)
    return row


def sweep(sol: GreenSolution, n_list, schedule: str = "fixed_q", q: int = 4, c: float = 0.1,
          jobs: int = 1) -> list[SweepRow]:
    """Construct and measure P_n for each n; rows come back ordered by n."""
    n_list = sorted(int(n) for n in n_list)
    if not n_list:
        raise ValueError("n_list is empty")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            futs = [ex.submit(_sweep_one, sol, n, schedule, q, c) for n in n_list]
            return [f.result() for f in futs]
    return [_sweep_one(sol, n, schedule, q, c) for n in n_list]
