"""Level curves K_s = {g = s}, their equilibrium-measure parameterization, and
the equal-measure arc partition.

Along a level curve the equilibrium measure of K_s is ``dmu_s = |grad g| ds /
(2 pi)``, which by the Cauchy-Riemann equations is the increment of the
harmonic conjugate of g divided by 2 pi. With the charge expansion the
conjugate increment between two nearby points is available in closed form,

    Im sum_i w_i Log((z2 - y_i) / (z1 - y_i)),

so cumulative measures are exact up to rounding, and a point with prescribed
level ``s`` and measure coordinate ``mu`` solves the analytic equation
``F(z) = s + 2 pi i mu`` (Newton's method, started from a nearby known point).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .geometry import CompactSet, Disk, Polygon
from .green_solver import GreenSolution, _chunks

__all__ = [
    "TraceError",
    "LevelCurve",
    "ComponentPartition",
    "LevelPartition",
    "Lemma21Report",
    "trace",
    "trace_component",
    "reference_curve",
    "level_curve",
    "partition",
    "partition_level",
    "lemma21_diagnostics",
    "separation_check",
    "paper_constant",
    "minimal_m",
    "estimate_s_star",
]

TWO_PI = 2.0 * np.pi
MAX_POINTS = 10**6


class TraceError(RuntimeError):
    """Level-curve tracing or point placement failed."""


def _local_log(sol: GreenSolution, z: np.ndarray, z0: np.ndarray) -> np.ndarray:
    """F(z) - F(z0) on the branch continuous along the segment [z0, z]."""
    out = np.empty(z.shape, dtype=complex)
    y, w = sol.charges, sol.weights
    for sl in _chunks(z.size, y.size):
        ratio = (z[sl, None] - y[None, :]) / (z0[sl, None] - y[None, :])
        # Real and imaginary parts separately; numpy's complex log is much slower.
        out[sl] = np.log(np.abs(ratio)) @ w + 1j * (np.arctan2(ratio.imag, ratio.real) @ w)
    return out


def _solve_from(sol, z0, delta, z_init=None, tol=1e-13, maxit=40):
    """Solve F(z) - F(z0) = delta by Newton's method, vectorized.

    Returns (z, converged mask).
    """
    z0 = np.asarray(z0, dtype=complex).ravel()
    delta = np.broadcast_to(np.asarray(delta, dtype=complex), z0.shape).ravel()
    z = (z0.copy() if z_init is None else np.asarray(z_init, dtype=complex).ravel().copy())
    active = np.arange(z.size)
    done = np.zeros(z.size, dtype=bool)
    # Rounding in F grows with the total absolute charge weight.
    tol = tol * float(np.abs(sol.weights).sum())
    for _ in range(maxit):
        if active.size == 0:
            break
        za = z[active]
        r = _local_log(sol, za, z0[active]) - delta[active]
        ok = np.abs(r) <= tol * (1.0 + np.abs(delta[active]))
        done[active[ok]] = True
        keep = ~ok
        active, za, r = active[keep], za[keep], r[keep]
        if active.size == 0:
            break
        z[active] = za - r / sol.derivative(za)
    # The principal logarithm of each ratio is the continuous branch only while
    # z stays closer to z0 than any charge does.
    reach = np.empty(z.size)
    for sl in _chunks(z.size, sol.charges.size):
        reach[sl] = np.abs(z0[sl, None] - sol.charges[None, :]).min(axis=1)
    done &= np.abs(z - z0) < 0.95 * reach
    return z, done


@dataclass(frozen=True, eq=False)
class LevelCurve:
    """A traced component K_s^j with its cumulative equilibrium measure.

    ``points`` is closed (last point equals the first) and positively
    oriented; ``cum_measure[i]`` is mu_s of the arc from ``points[0]`` to
    ``points[i]`` and ends at omega_j.
    """

    s: float
    component: int
    points: np.ndarray
    cum_measure: np.ndarray
    sol: GreenSolution = field(repr=False)

    @property
    def total(self) -> float:
        return float(self.cum_measure[-1])

    def __len__(self) -> int:
        return len(self.points) - 1

    def point_at(self, mu) -> np.ndarray:
        """Points of the curve with measure coordinate ``mu`` (mod omega_j)."""
        mu = np.asarray(mu, dtype=float)
        flat = np.mod(mu.ravel(), self.total)
        cum = self.cum_measure
        i = np.clip(np.searchsorted(cum, flat, side="right") - 1, 0, len(cum) - 2)
        frac = (flat - cum[i]) / (cum[i + 1] - cum[i])
        z0 = self.points[i]
        guess = z0 + frac * (self.points[i + 1] - z0)
        z, ok = _solve_from(self.sol, z0, 1j * TWO_PI * (flat - cum[i]), guess)
        if not ok.all():
            raise TraceError(f"point placement failed for {np.count_nonzero(~ok)} measure values")
        return z.reshape(mu.shape)

    def resampled(self, n_points: int) -> "LevelCurve":
        """The same level curve at ``n_points`` equally spaced measure values."""
        mu = self.total * np.arange(n_points) / n_points
        pts = self.point_at(mu)
        return LevelCurve(self.s, self.component, np.append(pts, pts[0]),
                          np.append(mu, self.total), self.sol)

    def at_level(self, s_new: float) -> "LevelCurve":
        """Move every point along its gradient line to the level ``s_new``.

        Measure coordinates are preserved (the harmonic conjugate is constant
        along gradient lines).
        """
        _check_level(self.sol, s_new)
        z = _continue(self.sol, self.points[:-1], self.s, s_new)
        return LevelCurve(s_new, self.component, np.append(z, z[0]), self.cum_measure, self.sol)


def _continue(sol, z, s_from, s_to, depth=0):
    """Continuation of points from level s_from to s_to, keeping the conjugate."""
    if s_from == s_to:
        return z.copy()
    n_stages = max(1, int(np.ceil(abs(np.log2(s_to / s_from)))))
    levels = s_from * (s_to / s_from) ** (np.arange(1, n_stages + 1) / n_stages)
    cur, prev = z.copy(), s_from
    for lev in levels:
        guess = cur + (lev - prev) / sol.derivative(cur)
        nxt, ok = _solve_from(sol, cur, lev - prev, guess)
        if not ok.all():
            if depth > 12:
                raise TraceError(f"continuation from level {prev:.4g} to {lev:.4g} failed")
            bad = ~ok
            mid = np.sqrt(prev * lev)
            part = _continue(sol, cur[bad], prev, mid, depth + 1)
            nxt[bad] = _continue(sol, part, mid, lev, depth + 1)
        cur, prev = nxt, lev
    return cur


def _check_level(sol: GreenSolution, s: float):
    if not s > 0:
        raise ValueError(f"level must be positive, got {s}")
    if s >= sol.critical_level:
        raise ValueError(
            f"level {s:.6g} is not below the first critical level {sol.critical_level:.6g}; "
            "K_s is no longer a union of disjoint Jordan curves")


def _start_point(sol: GreenSolution, s: float, j: int, tol: float) -> complex:
    c = sol.spec[j]
    b = c.dense[np.argmax(c.dense.real)]
    scale = sol.spec.diam

    def f(t):
        return float(sol.potential(np.array([b + t]))[0]) - s

    t_lo, t = 0.0, 1e-9 * scale
    while f(t) <= 0:
        t_lo, t = t, 2 * t
        if t > 1e3 * scale:
            raise TraceError(f"no point of level {s} found to the right of continuum {j}")
    if t_lo == 0.0:
        t_lo = t / 2
        while f(t_lo) > 0 and t_lo > 1e-300:
            t, t_lo = t_lo, t_lo / 2
    z = b + brentq(f, t_lo, t, xtol=1e-15 * scale, rtol=1e-15)
    return _correct(sol, z, s, tol)


def _correct(sol, z, s, tol, maxit=30):
    for _ in range(maxit):
        gv = float(sol.potential(np.array([z]))[0])
        if abs(gv - s) <= tol:
            return z
        grad = np.conj(sol.derivative(np.array([z]))[0])
        z = z - (gv - s) * grad / abs(grad) ** 2
    return None


def trace_component(
    sol: GreenSolution,
    s: float,
    j: int,
    trace_tol: float | None = None,
    max_points: int = MAX_POINTS,
) -> LevelCurve:
    """Trace K_s^j by predictor-corrector marching.

    Predictor: a step along the tangent (the gradient rotated by 90 degrees).
    Corrector: Newton iterations along the gradient until ``|g - s| <=
    trace_tol``. Steps adapt between the curvature of the curve and one tenth
    of the distance to K^j. The loop closes when the accumulated measure
    reaches omega_j.
    """
    _check_level(sol, s)
    spec = sol.spec
    c = spec[j]
    tol = trace_tol if trace_tol is not None else 1e-10 * spec.diam
    omega = float(sol.omegas[j])
    start = _start_point(sol, s, j, tol)
    if start is None:
        raise TraceError(f"could not locate K_s^{j} at level {s}")

    def dist(z):
        return float(c.tree.query([z.real, z.imag])[0])

    z, mu = start, 0.0
    pts, cum = [start], [0.0]
    h = 0.1 * dist(z)
    h_max = 0.02 * max(c.diam, 1e-300) * max(1.0, s)
    while True:
        if len(pts) >= max_points:
            raise TraceError(f"K_s^{j} did not close within {max_points} points; "
                             "the level may be too close to a critical value")
        grad = np.conj(sol.derivative(np.array([z]))[0])
        tangent = 1j * grad / abs(grad)
        h = min(1.5 * h, 0.1 * dist(z), h_max)
        while True:
            if h < 1e-14 * spec.diam:
                raise TraceError(f"step size underflow while tracing K_s^{j}")
            zp = _correct(sol, z + h * tangent, s, tol)
            if zp is not None:
                grad_p = np.conj(sol.derivative(np.array([zp]))[0])
                turn = abs(np.angle(grad_p / grad))
                dmu = float(_local_log(sol, np.array([zp]), np.array([z]))[0].imag) / TWO_PI
                if turn < 0.2 and dmu > 0:
                    break
            h *= 0.5
        if mu + dmu >= omega - 1e-12:
            close = float(_local_log(sol, np.array([start]), np.array([z]))[0].imag) / TWO_PI
            total = mu + close
            if abs(total - omega) > 1e-6:
                raise TraceError(f"closed curve carries measure {total:.9f}, expected "
                                 f"omega_{j}={omega:.9f}")
            if close < 1e-9 * omega and len(pts) > 1:
                pts.pop()
                cum.pop()
            pts.append(start)
            cum.append(total)
            break
        z, mu = zp, mu + dmu
        pts.append(z)
        cum.append(mu)
    return LevelCurve(float(s), j, np.array(pts), np.array(cum), sol)


def trace(sol: GreenSolution, s: float, j: int, trace_tol: float | None = None) -> LevelCurve:
    """Trace the level curve K_s^j (component ``j``)."""
    return trace_component(sol, s, j, trace_tol)


def reference_level(sol: GreenSolution) -> float:
    return 0.5 * sol.s0


def reference_curve(sol: GreenSolution, j: int, n_points: int = 2048) -> LevelCurve:
    """Dense traced curve at the reference level ``s0 / 2``, memoized on ``sol``."""
    key = ("reference", j, n_points)
    if key not in sol.cache:
        sol.cache[key] = trace_component(sol, reference_level(sol), j).resampled(n_points)
    return sol.cache[key]


def level_curve(sol: GreenSolution, s: float, j: int, n_points: int = 2048) -> LevelCurve:
    """K_s^j sampled at ``n_points`` equally spaced measure values.

    Obtained by continuation from the memoized reference curve, which is much
    faster than marching at small levels.
    """
    ref = reference_curve(sol, j, max(256, min(n_points, 4096)))
    cur = ref.at_level(s)
    return cur if len(cur) == n_points else cur.resampled(n_points)


@dataclass(frozen=True, eq=False)
class ComponentPartition:
    """The arcs I_{s,k}^j of one component, k = 1..m_j.

    Arc ``a`` (0-based) runs from ``xi[a]`` to ``xi[a + 1]``; its base point
    xi_{s,k} is the terminal endpoint ``xi[a + 1]``. ``xi[m] == xi[0]``.
    """

    s: float
    component: int
    omega: float
    m: int
    xi: np.ndarray
    xi_measure: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    curve: LevelCurve = field(repr=False)

    @property
    def bases(self) -> np.ndarray:
        return self.xi[1:]

    @property
    def arc_mass(self) -> float:
        return self.omega / self.m

    def arc_samples(self, n_per_arc: int) -> np.ndarray:
        """(m, n_per_arc + 1) points per arc, equally spaced in measure,
        endpoints included."""
        frac = np.arange(n_per_arc + 1) / n_per_arc
        mu = self.xi_measure[:-1, None] + frac[None, :] * self.arc_mass
        pts = self.curve.point_at(mu)
        pts[:, 0] = self.xi[:-1]
        pts[:, -1] = self.xi[1:]
        return pts


@dataclass(frozen=True, eq=False)
class LevelPartition:
    s: float
    components: tuple[ComponentPartition, ...]

    @property
    def m(self) -> int:
        return sum(p.m for p in self.components)

    @property
    def ms(self) -> list[int]:
        return [p.m for p in self.components]

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, j):
        return self.components[j]


def _start_measure(curve: LevelCurve) -> float:
    """Measure coordinate of the point of maximal real part (ties: maximal
    imaginary part), refined by bounded scalar minimization."""
    pts = curve.points[:-1]
    scale = np.abs(pts).max() + 1.0
    top = np.flatnonzero(pts.real >= pts.real.max() - 1e-12 * scale)
    i = int(top[np.argmax(pts.imag[top])])
    cum = curve.cum_measure
    n = len(pts)
    lo = cum[i] - (cum[i] - cum[i - 1] if i > 0 else curve.total - cum[n - 1])
    hi = cum[i + 1]
    res = minimize_scalar(lambda mu: -float(curve.point_at(mu).real), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-14 * curve.total})
    best = float(res.x) if -res.fun > pts[i].real else float(cum[i])
    return best % curve.total


def partition(curve: LevelCurve, m_j: int, nodes_per_arc: int = 8) -> ComponentPartition:
    """Split one level curve into ``m_j`` arcs of equal equilibrium measure.

    Quadrature nodes are Gauss-Legendre points in the measure coordinate of
    each arc; weights are renormalized to sum exactly to omega_j / m_j.
    """
    if m_j < 1:
        raise ValueError("m_j must be >= 1")
    if len(curve) < 10 * m_j:
        raise TraceError(f"curve resolution {len(curve)} below 10*m_j={10 * m_j}; "
                         f"resample with curve.resampled({10 * m_j})")
    omega = curve.total
    mass = omega / m_j
    mu0 = _start_measure(curve)
    xi_mu = mu0 + mass * np.arange(m_j + 1)
    xi = curve.point_at(xi_mu)
    xi[-1] = xi[0]
    x, w = np.polynomial.legendre.leggauss(nodes_per_arc)
    node_mu = xi_mu[:-1, None] + 0.5 * (x[None, :] + 1.0) * mass
    nodes = curve.point_at(node_mu)
    weights = np.broadcast_to(0.5 * w * mass, nodes.shape).copy()
    weights *= mass / weights.sum(axis=1, keepdims=True)
    return ComponentPartition(curve.s, curve.component, omega, m_j, xi, xi_mu, nodes,
                              weights, curve)


def partition_level(sol: GreenSolution, s: float, ms, nodes_per_arc: int = 8) -> LevelPartition:
    """Equal-measure partition of every component of K_s."""
    parts = []
    for j, m_j in enumerate(ms):
        curve = level_curve(sol, s, j, max(2048, 10 * int(m_j)))
        parts.append(partition(curve, int(m_j), nodes_per_arc))
    return LevelPartition(float(s), tuple(parts))


def paper_constant(omegas, s_star: float) -> float:
    """c = 640 pi max_j exp(s*/omega_j)."""
    return 640.0 * np.pi * float(np.max(np.exp(s_star / np.asarray(omegas))))


def minimal_m(c: float, q: int, s_star: float, omegas) -> int:
    """m_0 = floor(2 c q / s* + 10 nu / min_j omega_j)."""
    omegas = np.asarray(omegas)
    return int(np.floor(2 * c * q / s_star + 10 * omegas.size / omegas.min()))


def estimate_s_star(sol: GreenSolution, n_points: int = 1024) -> float:
    """Largest s* <= s0/10 (shrinking by 0.8) such that points of K^j_{s*}
    are no farther from K^j than from K^j_{s0}."""
    from scipy.spatial import cKDTree

    key = ("s_star", n_points)
    if key in sol.cache:
        return sol.cache[key]
    s_star = sol.s0 / 10
    outer = [level_curve(sol, sol.s0, j, n_points).points for j in range(sol.nu)]
    trees = [cKDTree(np.column_stack([p.real, p.imag])) for p in outer]
    for _ in range(60):
        ok = True
        for j, c in enumerate(sol.spec):
            inner = level_curve(sol, s_star, j, n_points).points
            d_k = c.distance(inner) if isinstance(c, Disk | Polygon) else \
                c.coarse_distance(inner)
            d_out, _ = trees[j].query(np.column_stack([inner.real, inner.imag]))
            if np.any(d_k > d_out):
                ok = False
                break
        if ok:
            break
        s_star *= 0.8
    sol.cache[key] = s_star
    return s_star


def _min_distance_per_row(c, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise minimum of the distance to ``c`` and the argmin column."""
    if isinstance(c, Disk | Polygon):
        d = c.distance(pts)
        return d.min(axis=1), d.argmin(axis=1)
    flat = pts.ravel()
    d, _ = c.tree.query(np.column_stack([flat.real, flat.imag]))
    d = d.reshape(pts.shape)
    arg = d.argmin(axis=1)
    best = pts[np.arange(len(pts)), arg]
    return c.distance(best), arg


@dataclass
class Lemma21Report:
    """Margins of the four chained inequalities, per arc.

    Margins are relative: ``(rhs - lhs) / rhs``; a negative margin is a
    violation.
    """

    q: int
    c: float
    s: float
    m: int
    margins: dict
    worst: dict
    violations: list
    preconditions: dict

    @property
    def worst_margin(self) -> float:
        return min(self.worst.values())

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "q": self.q, "c": self.c, "s": self.s, "m": self.m,
            "worst_margin": self.worst_margin,
            "worst": self.worst,
            "n_violations": len(self.violations),
            "violations": self.violations[:100],
            "preconditions": self.preconditions,
        }


_INEQ = ("chord_lower", "chord_le_diam", "diam_le_length", "length_upper")


def lemma21_diagnostics(part: LevelPartition, spec: CompactSet, q: int, c: float,
                        s_star: float | None = None, n_per_arc: int = 8) -> Lemma21Report:
    """Evaluate, per arc, the chain

        d(xi_k, K^j) / (c^2 q) <= |xi_k - xi_{k-1}| <= diam(I_k) <= |I_k|
                               <= d(I_k, K^j) / (10 q)

    with |I| the length of a polyline through ``n_per_arc + 1`` arc points
    and d(I, K^j) the minimum distance over those points.
    """
    margins = {k: [] for k in _INEQ}
    violations = []
    for p in part:
        cont = spec[p.component]
        pts = p.arc_samples(n_per_arc)
        chord = np.abs(p.xi[1:] - p.xi[:-1])
        length = np.abs(np.diff(pts, axis=1)).sum(axis=1)
        diam = np.zeros(p.m)
        for sl in _chunks(p.m, (n_per_arc + 1) ** 2):
            blk = pts[sl]
            diam[sl] = np.abs(blk[:, :, None] - blk[:, None, :]).max(axis=(1, 2))
        d_base = cont.distance(p.bases) if isinstance(cont, Disk | Polygon) else \
            cont.distance(p.bases, refine=True)
        d_arc, _ = _min_distance_per_row(cont, pts)
        pairs = {
            "chord_lower": (d_base / (c * c * q), chord),
            "chord_le_diam": (chord, diam),
            "diam_le_length": (diam, length),
            "length_upper": (length, d_arc / (10 * q)),
        }
        for name, (lhs, rhs) in pairs.items():
            mg = (rhs - lhs) / np.where(rhs > 0, rhs, 1.0)
            if name in ("chord_le_diam", "diam_le_length"):
                # Exact by geometry; only rounding can make these negative.
                mg = np.where(mg > -1e-12, np.maximum(mg, 0.0), mg)
            margins[name].append(mg)
            for k in np.flatnonzero(mg < 0):
                violations.append({"component": p.component, "arc": int(k) + 1,
                                   "inequality": name, "margin": float(mg[k])})
    margins = {k: np.concatenate(v) for k, v in margins.items()}
    worst = {k: float(v.min()) for k, v in margins.items()}
    pre = {"s_equals_cq_over_m": bool(np.isclose(part.s, c * q / part.m, rtol=1e-12))}
    if s_star is not None:
        omegas = [p.omega for p in part]
        m0 = minimal_m(c, q, s_star, omegas)
        pre.update({"s_star": s_star, "m0": m0, "m_ge_m0": part.m >= m0,
                    "s_below_s_star": part.s < s_star})
    return Lemma21Report(q, c, part.s, part.m, margins, worst, violations, pre)


def separation_check(part: LevelPartition, sol: GreenSolution, n_points: int | None = None) -> float:
    """min over k and z in K_{10s} of |z - xi_k| / (d(xi_k, K^j) / 2).

    Values >= 1 mean every base point keeps half its distance to K away from
    the level curve K_{10s}.
    """
    from scipy.spatial import cKDTree

    worst = np.inf
    curves = []
    for p in part:
        n = n_points or max(4096, 16 * p.m)
        curves.append(level_curve(sol, 10 * part.s, p.component, n).points)
    allpts = np.concatenate(curves)
    tree = cKDTree(np.column_stack([allpts.real, allpts.imag]))
    for p in part:
        cont = sol.spec[p.component]
        d_base = cont.distance(p.bases) if isinstance(cont, Disk | Polygon) else \
            cont.distance(p.bases, refine=True)
        near, _ = tree.query(np.column_stack([p.bases.real, p.bases.imag]))
        worst = min(worst, float((near / (0.5 * d_base)).min()))
    return worst
