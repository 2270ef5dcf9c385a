"""Zero clusters matching arc moments, and the polynomial they define.

For every arc I of the level curve K_s the q roots r_l of a monic polynomial
are chosen so that their power sums match the measure moments of the arc
about its terminal endpoint xi,

    sum_l r_l^u = q / mu_s(I) * int_I (x - xi)^u dmu_s(x),    u = 1..q.

The coefficients follow from Newton's identities; the roots are eigenvalues
of the companion matrix. The zeros of P_n are xi + r_l over all arcs.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .green_solver import GreenSolution, _chunks
from .level_set import LevelPartition

__all__ = [
    "ConstructionError",
    "ConstructionWarning",
    "ZeroCluster",
    "LemniscatePolynomial",
    "split_degrees",
    "arc_moments",
    "newton_coefficients",
    "newton_to_roots",
    "power_sums",
    "build",
    "log_abs",
    "load_polynomial",
]


class ConstructionError(RuntimeError):
    """The polynomial could not be built."""


class ConstructionWarning(UserWarning):
    """A cluster invariant failed beyond tolerance."""


def split_degrees(omegas, m: int, strict: bool = True) -> list[int]:
    """m_j = floor(m omega_j) for j < nu, the remainder to the last component.

    With ``strict`` the size condition m > 10 / min(omega) is enforced;
    otherwise only m_j >= 1 is required.
    """
    omegas = np.asarray(omegas, dtype=float)
    if strict and m <= 10.0 / omegas.min():
        raise ValueError(f"m={m} too small: need m > 10/min(omega) = {10.0 / omegas.min():.3f}")
    # The masses come from a numerical fit; m * omega_j = 170 - 1e-13 must
    # still floor to 170.
    ms = [int(np.floor(m * w + 1e-9)) for w in omegas[:-1]]
    ms.append(m - sum(ms))
    if min(ms) < 1:
        raise ValueError(f"m={m} leaves a component without arcs: {ms}")
    return ms


def arc_moments(nodes, weights, base: complex, q: int) -> np.ndarray:
    """Scaled moments q * m_u, u = 1..q, of one arc about ``base``.

    ``weights`` are the arc's quadrature weights; they sum to mu_s(I).
    """
    nodes = np.asarray(nodes, dtype=complex)
    weights = np.asarray(weights, dtype=float)
    d = nodes - base
    powers = d[None, :] ** np.arange(1, q + 1)[:, None]
    return q * (powers @ weights) / weights.sum()


def newton_coefficients(mt) -> np.ndarray:
    """Coefficients [1, a_{q-1}, ..., a_0] of the monic polynomial whose roots
    have power sums ``mt``.

    Newton's identities: mt_u + a_{q-1} mt_{u-1} + ... + a_{q-u+1} mt_1 = -u a_{q-u}.
    """
    mt = np.asarray(mt, dtype=complex)
    q = mt.size
    c = np.zeros(q + 1, dtype=complex)
    c[0] = 1.0
    for u in range(1, q + 1):
        c[u] = -(mt[u - 1] + np.dot(c[1:u], mt[u - 2::-1][:u - 1])) / u
    return c


def power_sums(roots, q: int | None = None) -> np.ndarray:
    roots = np.asarray(roots, dtype=complex)
    q = roots.size if q is None else q
    return (roots[None, :] ** np.arange(1, q + 1)[:, None]).sum(axis=1)


def newton_to_roots(mt, scale: float | None = None) -> np.ndarray:
    """Roots whose first q power sums are ``mt``.

    The moments are rescaled by ``scale`` (default: the magnitude implied by
    the moments themselves) so that the companion matrix is well scaled.
    """
    mt = np.asarray(mt, dtype=complex)
    q = mt.size
    if q == 0:
        return np.empty(0, dtype=complex)
    if scale is None:
        u = np.arange(1, q + 1)
        scale = float(np.max(np.abs(mt / q) ** (1.0 / u)))
    if not scale > 0:
        return np.zeros(q, dtype=complex)
    scaled = mt / scale ** np.arange(1, q + 1)
    c = newton_coefficients(scaled)
    if q == 1:
        return np.array([-c[1] * scale])
    comp = np.zeros((q, q), dtype=complex)
    comp[0, :] = -c[1:]
    comp[np.arange(1, q), np.arange(q - 1)] = 1.0
    try:
        roots = np.linalg.eigvals(comp)
    except np.linalg.LinAlgError as err:
        raise ConstructionError(f"companion eigenvalues did not converge: {err}") from err
    return np.sort_complex(roots) * scale


@dataclass(frozen=True)
class ZeroCluster:
    component: int
    arc: int
    base: complex
    moments: np.ndarray
    roots: np.ndarray
    diam: float

    @property
    def zeros(self) -> np.ndarray:
        return self.base + self.roots


@dataclass(frozen=True, eq=False)
class LemniscatePolynomial:
    """P_n(z) = prod (z - zeta) over all clusters, with n = q m."""

    zeros: np.ndarray
    n: int
    m: int
    q: int
    s: float
    log_capacity: float
    ms: tuple = ()
    checks: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n": self.n, "m": self.m, "q": self.q, "s": self.s,
            "log_capacity": self.log_capacity,
            "zeros": [[z.real, z.imag] for z in self.zeros],
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")


def load_polynomial(path) -> LemniscatePolynomial:
    with open(path) as fh:
        d = json.load(fh)
    zeros = np.array([complex(x, y) for x, y in d["zeros"]])
    return LemniscatePolynomial(zeros, int(d["n"]), int(d["m"]), int(d["q"]), float(d["s"]),
                                float(d["log_capacity"]))


def _cluster_roots(part_j, q: int):
    """Moments and roots for every arc of one component (vectorized moments)."""
    bases = part_j.bases
    d = part_j.nodes - bases[:, None]
    w = part_j.weights
    mass = w.sum(axis=1)
    u = np.arange(1, q + 1)
    moments = q * np.einsum("kpu,kp->ku", d[:, :, None] ** u[None, None, :], w) / mass[:, None]
    # Arc diameter from the node set and both endpoints.
    pts = np.concatenate([part_j.xi[:-1, None], part_j.nodes, part_j.xi[1:, None]], axis=1)
    diam = np.zeros(part_j.m)
    for sl in _chunks(part_j.m, pts.shape[1] ** 2):
        b = pts[sl]
        diam[sl] = np.abs(b[:, :, None] - b[:, None, :]).max(axis=(1, 2))
    roots = np.array([newton_to_roots(mt, scale=dk) for mt, dk in zip(moments, diam)])
    return moments, roots.reshape(part_j.m, q), diam


def build(sol: GreenSolution, part: LevelPartition, q: int, keep_clusters: bool = False,
          strict: bool = False) -> LemniscatePolynomial:
    """Place q zeros per arc and collect them into P_n.

    Every cluster is checked for the power-sum identities, the root bound
    ``|r| <= 2 q diam(I)``, and the placement ratios
    ``|zeta - xi| / d(xi, K^j) <= 1/5`` and ``|x - xi| / d(xi, K^j) <= 1/10``
    over the arc nodes. The first two always hold; failures emit a
    :class:`ConstructionWarning` (or raise with ``strict``). The placement
    ratios are recorded in ``checks`` and are only guaranteed under the
    preconditions s = c q / m with m >= m_0.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    zeros, clusters, problems = [], [], []
    worst_sum = worst_root = worst_zeta = worst_node = 0.0
    for p in part:
        moments, roots, diam = _cluster_roots(p, q)
        u = np.arange(1, q + 1)
        ps = (roots[:, None, :] ** u[None, :, None]).sum(axis=2)
        rel = np.abs(ps - moments) / np.maximum(diam[:, None] ** u[None, :], 1e-300)
        root_ratio = np.abs(roots).max(axis=1) / (2 * q * diam)
        cont = sol.spec[p.component]
        d_xi = cont.distance(p.bases)
        zeta_ratio = np.abs(roots).max(axis=1) / d_xi
        node_ratio = np.abs(p.nodes - p.bases[:, None]).max(axis=1) / d_xi
        worst_sum = max(worst_sum, float(rel.max()))
        worst_root = max(worst_root, float(root_ratio.max()))
        worst_zeta = max(worst_zeta, float(zeta_ratio.max()))
        worst_node = max(worst_node, float(node_ratio.max()))
        for k in np.flatnonzero(rel.max(axis=1) > 1e-9):
            problems.append((p.component, int(k) + 1, "power sums"))
        for k in np.flatnonzero(root_ratio > 1 + 1e-12):
            problems.append((p.component, int(k) + 1, "root bound"))
        zeros.append((p.bases[:, None] + roots).ravel())
        if keep_clusters:
            clusters.extend(ZeroCluster(p.component, int(k) + 1, complex(p.bases[k]),
                                        moments[k], roots[k], float(diam[k]))
                            for k in range(p.m))
    if problems:
        msg = f"{len(problems)} cluster invariant violations, first at (j, k) = {problems[0][:2]}: " \
              f"{problems[0][2]}"
        if strict:
            raise ConstructionError(msg)
        warnings.warn(msg, ConstructionWarning, stacklevel=2)
    zeros = np.concatenate(zeros)
    m = part.m
    checks = {
        "power_sum_residual": worst_sum,
        "root_bound_ratio": worst_root,
        "zeta_over_dist": worst_zeta,
        "node_over_dist": worst_node,
        "violations": problems,
    }
    if keep_clusters:
        checks["clusters"] = clusters
    if zeros.size != q * m:
        raise ConstructionError(f"zero count {zeros.size} != q*m = {q * m}")
    return LemniscatePolynomial(zeros, q * m, m, q, part.s, sol.log_capacity,
                                tuple(part.ms), checks)


def log_abs(poly: LemniscatePolynomial, z, normalized: bool = False):
    """log|P_n(z)|, or log|P_n(z)| - n log cap(K) when ``normalized``.

    Terms are summed pairwise along the zero axis. Exact zeros give ``-inf``.
    """
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    out = np.empty(flat.shape)
    zs = poly.zeros
    with np.errstate(divide="ignore"):
        for sl in _chunks(flat.size, zs.size):
            out[sl] = np.log(np.abs(flat[sl, None] - zs[None, :])).sum(axis=1)
    if normalized:
        out -= poly.n * poly.log_capacity
    out = out.reshape(z.shape)
    return float(out) if out.ndim == 0 else out
