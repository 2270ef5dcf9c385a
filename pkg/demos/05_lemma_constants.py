"""
Arc geometry under the explicit constants
=========================================

With c = 640 pi max_j exp(s*/omega_j) and m >= m0 = floor(2 c q / s* +
10 nu / min omega), every arc of K_s at s = c q / m is short compared with
its distance to K yet not too short:

    d(xi, K^j) / (c^2 q) <= |chord| <= diam(I) <= |I| <= d(I, K^j) / (10 q).

m0 is large (tens of thousands for the unit disk), but the chain can be
checked arc by arc.
"""

# %%
from lemniscate import CompactSet, Disk, build, lemma21_diagnostics, partition_level, solve
from lemniscate.level_set import estimate_s_star, minimal_m, paper_constant

sol = solve(CompactSet((Disk(0j, 1.0),)), 64)
s_star = estimate_s_star(sol)
c = paper_constant(sol.omegas, s_star)
q = 1
m = minimal_m(c, q, s_star, sol.omegas)
print(f"s* = {s_star}, c = {c:.2f}, m0 = {m}, s = cq/m = {c * q / m:.6f}")

# %%
part = partition_level(sol, c * q / m, [m])
rep = lemma21_diagnostics(part, sol.spec, q, c, s_star=s_star)
print(f"violations: {len(rep.violations)}")
for name, margin in rep.worst.items():
    print(f"  worst relative margin {name:15s} {margin:.5f}")

# %%
poly = build(sol, part, q)
print(f"|zeta - xi| / d(xi, K) <= {poly.checks['zeta_over_dist']:.5f}  (bound 1/5)")
print(f"|x - xi| / d(xi, K)    <= {poly.checks['node_over_dist']:.5f}  (bound 1/10)")
