"""Green function of the complement of K with pole at infinity.

The Green function is represented by a charge expansion

    g(z) = sum_i w_i log|z - y_i| + gamma,     sum_i w_i = 1,

with charges ``y_i`` strictly inside the continua and weights fitted by least
squares so that g vanishes on the boundary of K (method of fundamental
solutions). With this normalization ``gamma`` is the Robin constant, the
capacity is ``exp(-gamma)`` and the charge mass inside ``K^j`` is the
equilibrium mass ``omega_j``.

The expansion is the real part of the multivalued analytic function
``F(z) = sum_i w_i log(z - y_i) + gamma``; ``F'(z) = g_x - i g_y``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .geometry import CompactSet, SmoothCurve, spec_from_dict, spec_to_dict

__all__ = [
    "SolverError",
    "GreenSolution",
    "solve",
    "eval_g",
    "eval_grad",
    "capacity_of_levelset",
    "solution_from_dict",
]

DEFAULT_DEPTHS = (0.7, 0.8, 0.9, 0.6, 0.95)
_CHUNK = 1 << 17


class SolverError(RuntimeError):
    """The charge fit did not reach the requested boundary tolerance."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


def _chunks(n: int, width: int):
    step = max(1, _CHUNK // max(width, 1))
    for start in range(0, n, step):
        yield slice(start, min(start + step, n))


def log_potential(z, points, weights) -> np.ndarray:
    """sum_i weights_i * log|z - points_i| for every z (chunked)."""
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    out = np.empty(flat.shape)
    for sl in _chunks(flat.size, points.size):
        out[sl] = np.log(np.abs(flat[sl, None] - points[None, :])) @ weights
    return out.reshape(z.shape)


@dataclass(frozen=True, eq=False)
class GreenSolution:
    """Charge representation of g, with capacity and equilibrium masses."""

    spec: CompactSet
    charges: np.ndarray
    weights: np.ndarray
    component_of_charge: np.ndarray
    robin_constant: float
    omegas: np.ndarray
    fit_residual: float
    depth: float
    critical_points: np.ndarray
    critical_values: np.ndarray
    s0: float
    # Memo for traced reference curves (see level_set); not part of the value.
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def nu(self) -> int:
        return self.spec.nu

    @property
    def capacity(self) -> float:
        return float(np.exp(-self.robin_constant))

    @property
    def log_capacity(self) -> float:
        return -self.robin_constant

    @property
    def critical_level(self) -> float:
        """Smallest critical value of g, ``inf`` for a single continuum."""
        return float(self.critical_values.min()) if self.critical_values.size else np.inf

    def potential(self, z) -> np.ndarray:
        """Raw charge expansion (no clamping; negative inside K)."""
        return log_potential(z, self.charges, self.weights) + self.robin_constant

    def derivative(self, z) -> np.ndarray:
        """F'(z) = g_x - i g_y."""
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        out = np.empty(flat.shape, dtype=complex)
        for sl in _chunks(flat.size, self.charges.size):
            out[sl] = (1.0 / (flat[sl, None] - self.charges[None, :])) @ self.weights
        return out.reshape(z.shape)

    def second_derivative(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return -(1.0 / (z[..., None] - self.charges) ** 2) @ self.weights

    def g(self, z) -> np.ndarray:
        """Green function, clamped at zero and exactly zero on K."""
        z = np.asarray(z, dtype=complex)
        val = np.maximum(self.potential(z), 0.0)
        return np.where(self.spec.component_of(z) >= 0, 0.0, val)

    def charges_of(self, j: int) -> np.ndarray:
        return self.charges[self.component_of_charge == j]

    def to_dict(self) -> dict:
        return {
            "spec": spec_to_dict(self.spec),
            "capacity": self.capacity,
            "robin_constant": self.robin_constant,
            "omegas": self.omegas.tolist(),
            "fit_residual": self.fit_residual,
            "depth": self.depth,
            "s0": self.s0,
            "critical_points": [[z.real, z.imag] for z in self.critical_points],
            "critical_values": self.critical_values.tolist(),
            "charges": [[y.real, y.imag, float(w), int(j)] for y, w, j in
                        zip(self.charges, self.weights, self.component_of_charge)],
        }


def solution_from_dict(data: dict) -> GreenSolution:
    """Inverse of :meth:`GreenSolution.to_dict`."""
    ch = np.asarray(data["charges"], dtype=float).reshape(-1, 4)
    crit = np.asarray(data["critical_points"], dtype=float).reshape(-1, 2)
    return GreenSolution(
        spec=spec_from_dict(data["spec"]),
        charges=ch[:, 0] + 1j * ch[:, 1],
        weights=ch[:, 2].copy(),
        component_of_charge=ch[:, 3].astype(int),
        robin_constant=float(data["robin_constant"]),
        omegas=np.asarray(data["omegas"], dtype=float),
        fit_residual=float(data["fit_residual"]),
        depth=float(data["depth"]),
        critical_points=crit[:, 0] + 1j * crit[:, 1],
        critical_values=np.asarray(data["critical_values"], dtype=float),
        s0=float(data["s0"]),
    )


def _fit(spec: CompactSet, n_charges: int, depth: float, oversample: int):
    charges, comp, colloc = [], [], []
    for j, c in enumerate(spec.continua):
        b = c.boundary_sample(n_charges)
        y = c.centroid + depth * (b - c.centroid)
        if not np.all(c.contains(y)) or np.any(c.distance(y) > 0):
            return None
        charges.append(y)
        comp.append(np.full(n_charges, j))
        colloc.append(c.boundary_sample(oversample * n_charges))
    y = np.concatenate(charges)
    comp = np.concatenate(comp)
    x = np.concatenate(colloc)
    n = y.size
    # w = 1/n + Z v keeps sum(w) == 1 exactly; the columns of Z span 1^perp.
    z_basis = scipy.linalg.null_space(np.ones((1, n)))
    a = np.log(np.abs(x[:, None] - y[None, :]))
    lhs = np.hstack([a @ z_basis, np.ones((x.size, 1))])
    rhs = -a @ np.full(n, 1.0 / n)
    sol, *_ = scipy.linalg.lstsq(lhs, rhs)
    w = np.full(n, 1.0 / n) + z_basis @ sol[:-1]
    w *= 1.0 / w.sum()
    gamma = float(sol[-1])
    check = np.concatenate([c.boundary_sample(8 * n_charges + 1, offset=0.5)
                            for c in spec.continua])
    resid = float(np.abs(log_potential(check, y, w) + gamma).max())
    return y, w, comp, gamma, resid


def _critical_points(spec: CompactSet, charges, weights, gamma):
    """Zeros of F' outside K, by multi-start Newton."""
    if spec.nu == 1:
        return np.empty(0, complex), np.empty(0)
    pts = np.concatenate([c.dense for c in spec.continua])
    lo = complex(pts.real.min(), pts.imag.min())
    hi = complex(pts.real.max(), pts.imag.max())
    pad = 0.25 * spec.diam
    xs = np.linspace(lo.real - pad, hi.real + pad, 48)
    ys = np.linspace(lo.imag - pad, hi.imag + pad, 48)
    z = (xs[None, :] + 1j * ys[:, None]).ravel()
    z = z[spec.component_of(z) < 0]
    limit = 0.1 * spec.diam
    for _ in range(80):
        d = 1.0 / (z[:, None] - charges[None, :])
        f1 = d @ weights
        f2 = -(d**2) @ weights
        step = f1 / f2
        big = np.abs(step) > limit
        step[big] *= limit / np.abs(step[big])
        z = z - step
    f1 = (1.0 / (z[:, None] - charges[None, :])) @ weights
    scale = 1.0 / spec.diam
    ok = (np.abs(f1) < 1e-9 * scale) & (spec.component_of(z) < 0) & np.isfinite(z)
    ok &= (np.abs(z - 0.5 * (lo + hi)) < 2 * spec.diam)
    found: list[complex] = []
    for c in z[ok]:
        if all(abs(c - f) > 1e-6 * spec.diam for f in found):
            found.append(c)
    found.sort(key=lambda c: (round(c.real, 9), round(c.imag, 9)))
    crit = np.array(found, dtype=complex)
    values = log_potential(crit, charges, weights) + gamma
    keep = values > 0
    return crit[keep], values[keep]


def solve(
    spec: CompactSet,
    n_charges_per_component: int = 64,
    boundary_tol: float = 1e-8,
    depth: float | None = None,
    oversample: int = 4,
) -> GreenSolution:
    """Fit the charge expansion of g for the compact set ``spec``.

    Charges sit on a copy of each boundary scaled toward the continuum's
    centroid by ``depth``. When ``depth`` is None every depth in
    ``DEFAULT_DEPTHS`` is fitted; among those meeting ``boundary_tol`` the
    one with the smallest ``sum |w|`` is kept (ties go to the smaller
    residual).

    Raises
    ------
    SolverError
        If no depth reaches ``boundary_tol``; ``err.residual`` is the best
        residual achieved.
    """
    if n_charges_per_component < 8:
        raise ValueError("n_charges_per_component must be >= 8")
    depths = DEFAULT_DEPTHS if depth is None else (depth,)
    fits = []
    for dep in depths:
        fit = _fit(spec, n_charges_per_component, dep, oversample)
        if fit is not None:
            fits.append((dep, fit))
    if not fits:
        raise SolverError("no charge depth places every charge inside its continuum; "
                          "pass a smaller depth")
    passing = [f for f in fits if f[1][4] <= boundary_tol]
    if not passing:
        resid = min(f[1][4] for f in fits)
        raise SolverError(
            f"boundary residual {resid:.3e} exceeds tolerance {boundary_tol:.3e}; "
            "try more charges per component or a different charge depth",
            residual=resid,
        )
    # Among fits meeting the tolerance prefer small sum|w|: large alternating
    # weights lose digits to cancellation in every later evaluation.
    dep, (y, w, comp, gamma, resid) = min(
        passing, key=lambda f: (round(float(np.log10(np.abs(f[1][1]).sum())), 2), f[1][4]))
    omegas = np.array([w[comp == j].sum() for j in range(spec.nu)])
    if spec.nu > 1 and np.any((omegas <= 0) | (omegas >= 1)):
        raise SolverError(f"equilibrium masses out of (0, 1): {omegas}", residual=resid)
    crit, values = _critical_points(spec, y, w, gamma)
    if spec.nu > 1 and values.size == 0:
        warnings.warn("no critical point of g found; s0 falls back to 1", stacklevel=2)
    s0 = 0.9 * float(values.min()) if values.size else 1.0
    return GreenSolution(
        spec=spec,
        charges=y,
        weights=w,
        component_of_charge=comp,
        robin_constant=gamma,
        omegas=omegas,
        fit_residual=resid,
        depth=dep,
        critical_points=crit,
        critical_values=values,
        s0=s0,
    )


def eval_g(sol: GreenSolution, z):
    """g(z), zero on K."""
    val = sol.g(z)
    return float(val) if np.ndim(val) == 0 else val


def eval_grad(sol: GreenSolution, z):
    """Complex gradient ``g_x - i g_y`` of the charge expansion."""
    val = sol.derivative(z)
    return complex(val) if np.ndim(val) == 0 else val


def capacity_of_levelset(sol: GreenSolution, s: float, n_charges_per_component: int | None = None,
                         boundary_tol: float = 1e-7) -> float:
    """Capacity of K_s, re-solved from scratch with the traced K_s as boundary.

    A cross-check only: the result should equal ``exp(s) * sol.capacity``.
    """
    from .level_set import trace_component

    if not 0 < s < sol.critical_level:
        raise ValueError(f"level {s} outside (0, {sol.critical_level:.4g}); K_s is not a union "
                         "of disjoint Jordan curves there")
    curves = [trace_component(sol, s, j).resampled(1024) for j in range(sol.nu)]
    level = CompactSet(tuple(SmoothCurve(c.points[:-1]) for c in curves))
    n = n_charges_per_component or 2 * sol.charges.size // sol.nu
    return solve(level, n, boundary_tol=boundary_tol).capacity
