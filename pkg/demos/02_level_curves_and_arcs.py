"""
Level curves and equal-measure arcs
===================================

The level curve K_s = {g = s} of the two-disk set has one component around
each disk while s is below the saddle value. Its equilibrium measure has
density |grad g| / (2 pi) with respect to arc length; equivalently, the
harmonic conjugate of g increases by 2 pi omega_j around component j.
Points are placed at prescribed measure values by Newton's method on the
complex potential.
"""

# %%
import numpy as np

from lemniscate import CompactSet, Disk, level_curve, partition_level, solve
from lemniscate.green_solver import capacity_of_levelset

sol = solve(CompactSet((Disk(-4, 1.0), Disk(4, 1.0))), 64)
s = 0.1
curve = level_curve(sol, s, 0, 1024)
print(f"component 0 of K_{s}: {len(curve)} points, total measure {curve.total:.12f}")
print(f"max |g - s| on the curve: {np.abs(sol.potential(curve.points) - s).max():.1e}")

# %%
# Capacity of the level set: cap(K_s) = e^s cap(K).
for level in (0.05, 0.1, 0.2):
    ratio = capacity_of_levelset(sol, level) / sol.capacity
    print(f"s = {level:4}: cap(K_s)/cap(K) = {ratio:.10f}, e^s = {np.exp(level):.10f}")

# %%
# Split K_s into m arcs of equal measure, m_j = floor(m omega_j) per
# component. Each arc gets Gauss-Legendre nodes in its measure coordinate.
part = partition_level(sol, s, [12, 12], nodes_per_arc=6)
p = part[0]
print(f"arc mass omega/m = {p.arc_mass:.6f}")
print("first arc endpoints:", np.round(p.xi[:3], 6))

# %%
# The conjugate increment across each arc recovers its mass.
from lemniscate.level_set import _local_log

pts = p.arc_samples(8)
inc = _local_log(sol, pts[:, 1:].ravel(), pts[:, :-1].ravel()).imag
mu = inc.reshape(p.m, -1).sum(axis=1) / (2 * np.pi)
print(f"max relative arc mass deviation: {np.abs(mu / p.arc_mass - 1).max():.1e}")

# %%
from _plotting import plt, save

if plt is not None:
    fig, ax = plt.subplots(figsize=(7, 3.5))
    for comp in part:
        c = comp.curve.points
        ax.plot(c.real, c.imag, lw=0.8)
        ax.plot(comp.xi.real, comp.xi.imag, "o", ms=3)
    ax.set_aspect("equal")
    ax.set_title(f"K_s for s = {s} with 12 equal-measure arcs per component")
    save(fig, "02_arcs.png")
