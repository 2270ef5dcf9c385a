import json
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lemniscate.lemniscate_builder import (ConstructionError, ConstructionWarning,
                                           LemniscatePolynomial, arc_moments, build,
                                           load_polynomial, log_abs, newton_coefficients,
                                           newton_to_roots, power_sums, split_degrees)
from lemniscate.level_set import (estimate_s_star, level_curve, minimal_m, paper_constant,
                                  partition, partition_level)


def _match(a, b):
    """Greedy nearest-neighbour matching distance between two multisets."""
    b = list(b)
    worst = 0.0
    for x in a:
        i = int(np.argmin([abs(x - y) for y in b]))
        worst = max(worst, abs(x - b.pop(i)))
    return worst


def test_split_degrees_examples():
    assert split_degrees([0.5, 0.5], 10, strict=False) == [5, 5]
    assert split_degrees([0.3, 0.7], 10, strict=False) == [3, 7]
    ms = split_degrees([1 / 3, 1 / 3, 1 / 3], 100)
    assert ms == [33, 33, 34]
    assert 0 <= ms[-1] - 100 / 3 <= 2


def test_split_degrees_size_condition():
    with pytest.raises(ValueError):
        split_degrees([0.5, 0.5], 20)
    assert split_degrees([0.5, 0.5], 21) == [10, 11]


def test_split_degrees_fitted_masses():
    # masses from a numerical fit sit a rounding error below 1/2
    assert split_degrees([0.5 - 1e-15, 0.5 + 1e-15], 340) == [170, 170]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.05, 1.0), min_size=1, max_size=5), st.integers(1, 5000))
def test_split_degrees_slack(raw, m):
    w = np.array(raw) / np.sum(raw)
    m = max(m, int(10 / w.min()) + 1)
    ms = split_degrees(w, m)
    assert sum(ms) == m
    slack = ms[-1] - m * w[-1]
    assert -1e-6 <= slack <= len(w) - 1 + 1e-6


def test_newton_examples():
    assert newton_to_roots([0.2]) == pytest.approx([0.2])
    assert np.allclose(newton_coefficients([3, 5]), [1, -3, 2])
    assert np.allclose(np.sort(newton_to_roots([3, 5]).real), [1, 2], atol=1e-14)


@pytest.mark.parametrize("q", range(1, 9))
def test_newton_round_trip(q, rng):
    for _ in range(50):
        roots = np.sqrt(rng.uniform(0, 1, q)) * np.exp(2j * np.pi * rng.uniform(0, 1, q))
        ps = power_sums(roots)
        got = newton_to_roots(ps)
        assert _match(roots, got) < 1e-8
        assert np.abs(power_sums(got) - ps).max() <= 1e-9


def test_moments_straight_symmetric_segment():
    nodes = np.linspace(-1, 1, 9) + 0j
    w = np.full(9, 1 / 9)
    assert abs(arc_moments(nodes, w, 0j, 3)[0]) < 1e-15


def test_moments_circular_arc_closed_form(disk_sol):
    # On |z| = R with uniform measure over angles [a, b]:
    # int (R e^{it} - xi)^u dt / (b - a) expands binomially into exact exponentials.
    s = 0.2
    part = partition(level_curve(disk_sol, s, 0, 4096), 12)
    R = np.exp(s)
    q = 5
    for a in range(12):
        mt = arc_moments(part.nodes[a], part.weights[a], part.bases[a], q)
        t0 = np.angle(part.xi[a])
        t1 = t0 + 2 * np.pi / 12
        xi = part.bases[a]
        for u in range(1, q + 1):
            total = 0j
            for k in range(u + 1):
                coef = mpmath.binomial(u, k) * (-xi) ** (u - k) * R**k
                if k == 0:
                    total += complex(coef) * (t1 - t0)
                else:
                    total += complex(coef) * (np.exp(1j * k * t1) - np.exp(1j * k * t0)) / (1j * k)
            exact = q * total / (t1 - t0)
            assert abs(mt[u - 1] - exact) < 1e-10


def test_moment_bound(two_sol):
    part = partition_level(two_sol, 0.03, [9, 9])
    q = 6
    for p in part:
        pts = p.arc_samples(16)
        d = np.abs(pts[:, :, None] - pts[:, None, :]).max(axis=(1, 2))
        for k in range(p.m):
            mt = arc_moments(p.nodes[k], p.weights[k], p.bases[k], q)
            assert np.all(np.abs(mt) <= q * d[k] ** np.arange(1, q + 1) * (1 + 1e-9))


def test_disk_q1_equally_spaced(disk_sol):
    m = 24
    part = partition_level(disk_sol, 0.1, [m])
    poly = build(disk_sol, part, 1)
    z = poly.zeros
    assert z.size == m
    assert np.allclose(np.abs(z), np.abs(z[0]), atol=1e-12)
    assert np.abs(z[0]) < np.exp(0.1)
    ang = np.sort(np.mod(np.angle(z), 2 * np.pi))
    assert np.allclose(np.diff(ang), 2 * np.pi / m, atol=1e-12)


def test_build_invariants_sweep(two_sol):
    for q in (1, 3, 5):
        part = partition_level(two_sol, 0.01, [30, 30], nodes_per_arc=q + 3)
        poly = build(two_sol, part, q)
        assert poly.zeros.size == q * 60 == poly.n
        assert poly.checks["power_sum_residual"] <= 1e-9
        assert poly.checks["root_bound_ratio"] <= 1.0
        assert poly.checks["violations"] == []


def test_build_placement_under_lemma_preconditions(disk_sol):
    s_star = estimate_s_star(disk_sol)
    c = paper_constant(disk_sol.omegas, s_star)
    q = 2
    m = minimal_m(c, q, s_star, disk_sol.omegas)
    part = partition_level(disk_sol, c * q / m, [m])
    poly = build(disk_sol, part, q, keep_clusters=True)
    assert poly.checks["zeta_over_dist"] <= 0.2
    assert poly.checks["node_over_dist"] <= 0.1
    # zeros sit in the closed sublevel region {g <= s}
    assert np.all(disk_sol.potential(poly.zeros) <= poly.s * (1 + 1e-9))
    assert len(poly.checks["clusters"]) == m


def test_strict_build_raises_on_violation(two_sol, monkeypatch):
    import lemniscate.lemniscate_builder as lb
    part = partition_level(two_sol, 0.01, [10, 10])
    orig = lb.newton_to_roots
    monkeypatch.setattr(lb, "newton_to_roots", lambda mt, scale=None: orig(mt, scale) + 1e-3)
    with pytest.raises(ConstructionError, match=r"\(j, k\)"):
        build(two_sol, part, 2, strict=True)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        build(two_sol, part, 2)
    assert any(issubclass(w.category, ConstructionWarning) for w in rec)


def test_log_abs_closed_form():
    n = 40
    poly = LemniscatePolynomial(np.zeros(n, complex), n, n, 1, 0.1, 0.0)
    assert log_abs(poly, 2.0) == pytest.approx(n * np.log(2.0))
    assert log_abs(poly, 0.0) == -np.inf


def test_log_abs_extended_precision(two_sol, rng):
    part = partition_level(two_sol, 0.05, [8, 8])
    poly = build(two_sol, part, 4)
    assert poly.n == 64
    z = rng.uniform(-7, 7, 20) + 1j * rng.uniform(-3, 3, 20)
    mpmath.mp.dps = 40
    for zz, val in zip(z, log_abs(poly, z)):
        prod = mpmath.mpf(1)
        for r in poly.zeros:
            prod *= abs(mpmath.mpc(zz.real, zz.imag) - mpmath.mpc(r.real, r.imag))
        assert abs(float(mpmath.log(prod)) - val) < 1e-10
    norm = log_abs(poly, z, normalized=True)
    assert np.allclose(norm, log_abs(poly, z) - 64 * two_sol.log_capacity)


def test_log_abs_conjugate_symmetry(two_sol):
    part = partition_level(two_sol, 0.05, [8, 8])
    poly = build(two_sol, part, 4)
    z = np.array([1 + 2j, -5 + 0.5j, 6 - 3j])
    assert np.allclose(log_abs(poly, z), log_abs(poly, z.conj()), atol=1e-10)


def test_polynomial_json_round_trip(tmp_path, two_sol, rng):
    part = partition_level(two_sol, 0.05, [8, 8])
    poly = build(two_sol, part, 3)
    path = tmp_path / "p.json"
    poly.save(path)
    back = load_polynomial(path)
    z = rng.normal(size=100) * 5 + 1j * rng.normal(size=100) * 5
    assert np.abs(log_abs(back, z) - log_abs(poly, z)).max() <= 1e-12
    data = json.loads(path.read_text())
    assert set(data) == {"n", "m", "q", "s", "log_capacity", "zeros"}
