"""Compact sets made of finitely many disjoint Jordan continua.

Each continuum is a closed Jordan domain described by its boundary: a disk,
a simple polygon, or a smooth closed curve given as a sample table. Boundary
parameterizations run over ``t in [0, 1)`` in positive (counterclockwise)
orientation and are proportional to arclength.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar
from scipy.spatial import ConvexHull, cKDTree

__all__ = [
    "GeometryError",
    "Continuum",
    "Disk",
    "Polygon",
    "SmoothCurve",
    "CompactSet",
    "boundary_sample",
    "dist_to_continuum",
    "contains",
    "load_spec",
    "spec_from_dict",
    "spec_to_dict",
]

# Closed-set convention: points this close to the boundary (relative to the
# continuum's diameter) count as inside.
BOUNDARY_TOL = 1e-14
_DENSE_POINTS = 4096


class GeometryError(ValueError):
    """Invalid or degenerate geometry."""


def _as_complex(z) -> np.ndarray:
    return np.asarray(z, dtype=complex)


def _signed_area(pts: np.ndarray) -> float:
    x, y = pts.real, pts.imag
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_intersect(p: np.ndarray) -> bool:
    """True if the closed polyline ``p`` has two non-adjacent crossing edges."""
    n = len(p)
    a, b = p, np.roll(p, -1)
    d = b - a

    def cross(u, v):
        return u.real * v.imag - u.imag * v.real

    for i in range(n):
        # Edges i and j share a vertex when j in {i-1, i, i+1} (mod n).
        j = np.arange(i + 2, n if i > 0 else n - 1)
        if j.size == 0:
            continue
        d1 = cross(d[i], a[j] - a[i])
        d2 = cross(d[i], b[j] - a[i])
        d3 = cross(d[j], a[i] - a[j])
        d4 = cross(d[j], b[i] - a[j])
        if np.any((d1 * d2 < 0) & (d3 * d4 < 0)):
            return True
    return False


def _winding(z: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Winding number of the closed polyline ``poly`` around each of ``z``."""
    z = np.atleast_1d(z)
    out = np.empty(z.shape, dtype=float)
    nxt = np.roll(poly, -1)
    for start in range(0, z.size, 2048):
        zz = z.ravel()[start:start + 2048, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            ang = np.nan_to_num(np.angle((nxt[None, :] - zz) / (poly[None, :] - zz)))
        out.ravel()[start:start + 2048] = ang.sum(axis=1) / (2 * np.pi)
    return np.rint(out)


def _segment_distance(z: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from each of ``z`` to the union of segments [a_i, b_i]."""
    z = np.atleast_1d(z)
    out = np.empty(z.shape, dtype=float)
    d = b - a
    dd = np.abs(d) ** 2
    flat = z.ravel()
    for start in range(0, flat.size, 2048):
        zz = flat[start:start + 2048, None]
        t = ((zz - a[None, :]) * np.conj(d[None, :])).real / dd[None, :]
        t = np.clip(t, 0.0, 1.0)
        out.ravel()[start:start + 2048] = np.abs(zz - (a + t * d)).min(axis=1)
    return out


@dataclass(frozen=True, eq=False)
class Continuum:
    """Base class: a closed Jordan domain K^j with a boundary parameterization."""

    def boundary(self, t) -> np.ndarray:
        raise NotImplementedError

    def distance(self, z) -> np.ndarray:
        raise NotImplementedError

    def contains(self, z) -> np.ndarray:
        raise NotImplementedError

    @property
    def kind(self) -> str:
        raise NotImplementedError

    def boundary_sample(self, n_pts: int, offset: float = 0.0) -> np.ndarray:
        """``n_pts`` boundary points, equally spaced in arclength."""
        return self.boundary((np.arange(n_pts) + offset) / n_pts)

    @cached_property
    def dense(self) -> np.ndarray:
        return self.boundary_sample(_DENSE_POINTS)

    @cached_property
    def tree(self) -> cKDTree:
        return cKDTree(np.column_stack([self.dense.real, self.dense.imag]))

    @cached_property
    def diam(self) -> float:
        return _diameter(self.dense)

    @cached_property
    def centroid(self) -> complex:
        """Area centroid of the enclosed region."""
        p = self.dense
        x, y = p.real, p.imag
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cr = x * yn - xn * y
        area = 0.5 * cr.sum()
        cx = ((x + xn) * cr).sum() / (6 * area)
        cy = ((y + yn) * cr).sum() / (6 * area)
        return complex(cx, cy)

    def coarse_distance(self, z) -> np.ndarray:
        """Distance to the dense boundary sample (zero inside).

        Overestimates the true distance by at most the sampling gap; used for
        step-size control, never for diagnostics.
        """
        z = _as_complex(z)
        d, _ = self.tree.query(np.column_stack([z.ravel().real, z.ravel().imag]))
        d = d.reshape(z.shape)
        return np.where(self.contains(z), 0.0, d)


def _diameter(pts: np.ndarray) -> float:
    xy = np.column_stack([pts.real, pts.imag])
    try:
        hull = xy[ConvexHull(xy).vertices]
    except Exception:
        hull = xy
    h = hull[:, 0] + 1j * hull[:, 1]
    return float(np.abs(h[:, None] - h[None, :]).max())


@dataclass(frozen=True, eq=False)
class Disk(Continuum):
    center: complex
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        if not self.radius > 0:
            raise GeometryError(f"disk radius must be positive, got {self.radius}")

    kind = "disk"

    def boundary(self, t) -> np.ndarray:
        return self.center + self.radius * np.exp(2j * np.pi * np.asarray(t, dtype=float))

    def distance(self, z) -> np.ndarray:
        return np.maximum(np.abs(_as_complex(z) - self.center) - self.radius, 0.0)

    def contains(self, z) -> np.ndarray:
        r = np.abs(_as_complex(z) - self.center)
        return r <= self.radius * (1 + BOUNDARY_TOL) + BOUNDARY_TOL

    @property
    def diam(self) -> float:
        return 2.0 * self.radius

    @property
    def centroid(self) -> complex:
        return self.center


@dataclass(frozen=True, eq=False)
class Polygon(Continuum):
    """Simple polygon; vertices are reordered counterclockwise if needed."""

    vertices: np.ndarray

    kind = "polygon"

    def __post_init__(self):
        v = _as_complex(self.vertices).ravel()
        if len(v) >= 2 and v[0] == v[-1]:
            v = v[:-1]
        if len(v) < 3:
            raise GeometryError("polygon needs at least 3 vertices")
        if np.any(np.abs(np.roll(v, -1) - v) == 0):
            raise GeometryError("polygon has a zero-length edge")
        area = _signed_area(v)
        scale = np.abs(v - v.mean()).max()
        if abs(area) <= 1e-12 * scale**2:
            raise GeometryError("polygon vertices are collinear")
        if area < 0:
            v = v[::-1].copy()
        if _segments_intersect(v):
            raise GeometryError("polygon is not simple (edges cross)")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @cached_property
    def _cumlen(self) -> np.ndarray:
        edges = np.abs(np.roll(self.vertices, -1) - self.vertices)
        return np.concatenate([[0.0], np.cumsum(edges)])

    def boundary(self, t) -> np.ndarray:
        t = np.mod(np.asarray(t, dtype=float), 1.0)
        cum = self._cumlen
        s = t * cum[-1]
        i = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(self.vertices) - 1)
        a = self.vertices[i]
        b = self.vertices[(i + 1) % len(self.vertices)]
        frac = (s - cum[i]) / (cum[i + 1] - cum[i])
        return a + frac * (b - a)

    def distance(self, z) -> np.ndarray:
        z = _as_complex(z)
        d = _segment_distance(z, self.vertices, np.roll(self.vertices, -1))
        return np.where(self.contains(z), 0.0, d).reshape(z.shape)

    def contains(self, z) -> np.ndarray:
        z = _as_complex(z)
        inside = _winding(z, self.vertices) != 0
        edge = _segment_distance(z, self.vertices, np.roll(self.vertices, -1))
        tol = BOUNDARY_TOL * (1 + self._cumlen[-1])
        return (inside | (edge <= tol)).reshape(z.shape)


@dataclass(frozen=True, eq=False)
class SmoothCurve(Continuum):
    """Closed curve through a periodic sample table, cubic-spline interpolated."""

    points: np.ndarray

    kind = "smooth_curve"

    def __post_init__(self):
        p = _as_complex(self.points).ravel()
        if len(p) >= 2 and abs(p[0] - p[-1]) <= 1e-12 * np.abs(p).max():
            p = p[:-1]
        if len(p) < 16:
            raise GeometryError("smooth_curve needs at least 16 samples")
        if np.any(np.abs(np.roll(p, -1) - p) == 0):
            raise GeometryError("smooth_curve has repeated consecutive samples")
        if _signed_area(p) < 0:
            p = p[::-1].copy()
        if _segments_intersect(p):
            raise GeometryError("smooth_curve samples do not form a simple closed curve")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    @cached_property
    def _spline(self) -> CubicSpline:
        p = self.points
        closed = np.append(p, p[0])
        tau = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(closed)))])
        return CubicSpline(tau, np.column_stack([closed.real, closed.imag]), bc_type="periodic")

    def _eval(self, tau) -> np.ndarray:
        xy = self._spline(np.mod(tau, self._spline.x[-1]))
        return xy[..., 0] + 1j * xy[..., 1]

    @cached_property
    def _arclength(self) -> tuple[np.ndarray, np.ndarray]:
        # Gauss-Legendre arclength of each spline piece, accumulated on a fine grid.
        knots = self._spline.x
        sub = np.linspace(0.0, 1.0, 9)
        tau = (knots[:-1, None] + sub[None, :] * np.diff(knots)[:, None]).ravel()
        tau = np.append(np.unique(tau), knots[-1])
        xg, wg = np.polynomial.legendre.leggauss(6)
        a, b = tau[:-1], tau[1:]
        mid, half = (a + b) / 2, (b - a) / 2
        nodes = mid[:, None] + half[:, None] * xg[None, :]
        dxy = self._spline(nodes, 1)
        speed = np.hypot(dxy[..., 0], dxy[..., 1])
        seg = (speed * wg[None, :]).sum(axis=1) * half
        return tau, np.concatenate([[0.0], np.cumsum(seg)])

    def boundary(self, t) -> np.ndarray:
        tau_grid, s_grid = self._arclength
        t = np.mod(np.asarray(t, dtype=float), 1.0)
        tau = np.interp(t * s_grid[-1], s_grid, tau_grid)
        return self._eval(tau)

    def _nearest(self, z: complex, tau0: float) -> tuple[float, float]:
        """(distance, parameter) of the spline point nearest to ``z``."""
        h = self._spline.x[-1] / _DENSE_POINTS
        res = minimize_scalar(
            lambda tau: abs(self._eval(tau) - z),
            bounds=(tau0 - 1.5 * h, tau0 + 1.5 * h),
            method="bounded",
            options={"xatol": 1e-12 * self._spline.x[-1]},
        )
        d0 = abs(self._eval(tau0) - z)
        tau = float(tau0) if d0 < res.fun else float(res.x)
        # Newton polish of Re((c - z) conj(c')) = 0; Brent alone leaves the
        # distance accurate to about xatol only.
        period = self._spline.x[-1]
        for _ in range(3):
            tt = np.mod(tau, period)
            c = self._eval(tt)
            d1 = self._spline(tt, 1)
            d2 = self._spline(tt, 2)
            c1, c2 = complex(d1[0], d1[1]), complex(d2[0], d2[1])
            f = ((c - z) * np.conj(c1)).real
            fp = abs(c1) ** 2 + ((c - z) * np.conj(c2)).real
            if fp <= 0:
                break
            step = f / fp
            if abs(step) > 1.5 * h:
                break
            tau -= step
        return float(abs(self._eval(tau) - z)), tau

    @cached_property
    def _dense_tau(self) -> np.ndarray:
        tau_grid, s_grid = self._arclength
        t = np.arange(_DENSE_POINTS) / _DENSE_POINTS
        return np.interp(t * s_grid[-1], s_grid, tau_grid)

    def distance(self, z, refine: bool = True) -> np.ndarray:
        z = _as_complex(z)
        flat = z.ravel()
        d, idx = self.tree.query(np.column_stack([flat.real, flat.imag]))
        if refine:
            d = np.array([self._nearest(zz, self._dense_tau[i])[0]
                          for zz, i in zip(flat, idx)])
        return np.where(self.contains(flat), 0.0, d).reshape(z.shape)

    def contains(self, z) -> np.ndarray:
        z = _as_complex(z)
        flat = z.ravel()
        inside = _winding(flat, self.dense) != 0
        d, idx = self.tree.query(np.column_stack([flat.real, flat.imag]))
        # Close to the boundary the dense polygon and the spline disagree; decide
        # there by the side of the spline's tangent line at the nearest point.
        gap = 2.0 * np.pi * self.diam / _DENSE_POINTS
        tol = BOUNDARY_TOL * (1 + self.diam)
        for i in np.flatnonzero(d < gap):
            dist, tau = self._nearest(flat[i], self._dense_tau[idx[i]])
            dxy = self._spline(np.mod(tau, self._spline.x[-1]), 1)
            outward = complex(dxy[1], -dxy[0])
            side = (flat[i] - self._eval(tau)) * np.conj(outward)
            inside[i] = dist <= tol or side.real < 0
        return inside.reshape(z.shape)


@dataclass(frozen=True, eq=False)
class CompactSet:
    """K as a union of pairwise disjoint, non-nested continua.

    ``quasidisk`` holds the user's assertion per continuum; it only selects the
    analysis schedule and is never checked.
    """

    continua: tuple[Continuum, ...]
    quasidisk: tuple[bool, ...] = field(default=())

    def __post_init__(self):
        continua = tuple(self.continua)
        if not continua:
            raise GeometryError("a compact set needs at least one continuum")
        flags = tuple(bool(f) for f in self.quasidisk) or (False,) * len(continua)
        if len(flags) != len(continua):
            raise GeometryError("one quasidisk flag per continuum")
        object.__setattr__(self, "continua", continua)
        object.__setattr__(self, "quasidisk", flags)
        self._validate()

    def _validate(self):
        for j, a in enumerate(self.continua):
            for k in range(j + 1, len(self.continua)):
                b = self.continua[k]
                gap, _ = b.tree.query(np.column_stack([a.dense.real, a.dense.imag]))
                if gap.min() <= 1e-9 * max(a.diam, b.diam):
                    raise GeometryError(f"continua {j} and {k} touch or overlap")
                if b.contains(a.dense[:1])[0] or a.contains(b.dense[:1])[0]:
                    raise GeometryError(f"continua {j} and {k} are nested or overlap")
                if np.any(b.contains(a.dense[::64])) or np.any(a.contains(b.dense[::64])):
                    raise GeometryError(f"continua {j} and {k} overlap")

    def __len__(self) -> int:
        return len(self.continua)

    def __iter__(self):
        return iter(self.continua)

    def __getitem__(self, j: int) -> Continuum:
        return self.continua[j]

    @property
    def nu(self) -> int:
        return len(self.continua)

    @property
    def all_quasidisks(self) -> bool:
        return all(self.quasidisk)

    @cached_property
    def diam(self) -> float:
        return _diameter(np.concatenate([c.dense for c in self.continua]))

    def component_of(self, z) -> np.ndarray:
        """Index of the continuum containing each point, ``-1`` outside K."""
        z = _as_complex(z)
        out = np.full(z.shape, -1, dtype=int)
        for j, c in enumerate(self.continua):
            out[(out < 0) & c.contains(z)] = j
        return out

    def distance(self, z) -> np.ndarray:
        """Distance to K (minimum over the continua)."""
        return np.min([c.distance(z) for c in self.continua], axis=0)


def boundary_sample(c: Continuum, n_pts: int) -> np.ndarray:
    """Sample ``n_pts`` points on the boundary of ``c`` in positive orientation.

    Points are equally spaced in arclength starting at parameter zero (angle
    zero for disks, the first vertex for polygons, the first table entry for
    smooth curves).
    """
    if n_pts < 16 and not isinstance(c, Disk | Polygon):
        raise GeometryError("boundary_sample needs n_pts >= 16")
    if n_pts < 1:
        raise GeometryError("boundary_sample needs n_pts >= 1")
    return c.boundary_sample(int(n_pts))


def dist_to_continuum(z, c: Continuum):
    """Euclidean distance from ``z`` to the closed continuum ``c``."""
    d = c.distance(z)
    return float(d) if np.ndim(d) == 0 else d


def contains(z: complex, spec: CompactSet) -> tuple[bool, int | None]:
    """Membership test for the closed set K; returns the continuum index."""
    j = int(spec.component_of(np.asarray([z]))[0])
    return (True, j) if j >= 0 else (False, None)


def _xy(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise GeometryError("expected a list of [x, y] pairs")
    return arr[:, 0] + 1j * arr[:, 1]


def spec_from_dict(data: dict) -> CompactSet:
    """Build a :class:`CompactSet` from the geometry JSON layout."""
    try:
        entries = data["continua"]
    except (KeyError, TypeError):
        raise GeometryError("geometry spec needs a top-level 'continua' list") from None
    continua, flags = [], []
    for i, e in enumerate(entries):
        kind = e.get("kind")
        try:
            if kind == "disk":
                cx, cy = e["center"]
                continua.append(Disk(complex(cx, cy), float(e["radius"])))
            elif kind == "polygon":
                continua.append(Polygon(_xy(e["vertices"])))
            elif kind == "smooth_curve":
                continua.append(SmoothCurve(_xy(e["points"])))
            else:
                raise GeometryError(f"continuum {i}: unknown kind {kind!r}")
        except KeyError as err:
            raise GeometryError(f"continuum {i} ({kind}): missing field {err}") from None
        flags.append(bool(e.get("quasidisk", False)))
    return CompactSet(tuple(continua), tuple(flags))


def spec_to_dict(spec: CompactSet) -> dict:
    out = []
    for c, flag in zip(spec.continua, spec.quasidisk):
        if isinstance(c, Disk):
            e = {"kind": "disk", "center": [c.center.real, c.center.imag], "radius": c.radius}
        elif isinstance(c, Polygon):
            e = {"kind": "polygon", "vertices": [[v.real, v.imag] for v in c.vertices]}
        else:
            e = {"kind": "smooth_curve", "points": [[p.real, p.imag] for p in c.points]}
        e["quasidisk"] = flag
        out.append(e)
    return {"continua": out}


def load_spec(path: str | Path) -> CompactSet:
    """Read a geometry JSON file.

    Raises :class:`json.JSONDecodeError` (with line/column) on malformed JSON
    and :class:`GeometryError` on invalid geometry.
    """
    with open(path) as fh:
        data = json.load(fh)
    return spec_from_dict(data)


def ellipse(a: float, b: float, n: int = 512, center: complex = 0j) -> SmoothCurve:
    """Sample-table ellipse with semiaxes ``a`` (along x) and ``b``."""
    t = 2 * np.pi * np.arange(n) / n
    return SmoothCurve(center + a * np.cos(t) + 1j * b * np.sin(t))
