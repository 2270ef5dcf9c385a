"""
Building a polynomial whose lemniscate encloses K
=================================================

For each arc I of K_s we place q zeros whose first q power sums, measured
from the arc's endpoint, match the arc's moments of the equilibrium measure.
Then log|P_n| tracks n (g + log cap) away from the arcs, and the lemniscate
{|P_n| = ||P_n||_K} separates the continua while staying close to K.
"""

# %%
import numpy as np

from lemniscate import CompactSet, Disk, build, measure_sn, partition_level, solve, split_degrees
from lemniscate.analysis import envelope_check

sol = solve(CompactSet((Disk(-4, 1.0), Disk(4, 1.0))), 64)
m, q, c = 64, 4, 0.1
s = c * q / m
part = partition_level(sol, s, split_degrees(sol.omegas, m, strict=False), nodes_per_arc=8)
poly = build(sol, part, q)
print(f"n = {poly.n} zeros on K_s, s = {s}")
for key in ("power_sum_residual", "root_bound_ratio", "zeta_over_dist"):
    print(f"  {key:20s} {poly.checks[key]:.3e}")

# %%
# The bound envelope compares log|P_n| - n log cap with n g on K_{10 s}.
print(f"envelope on K_10s: {envelope_check(poly, sol):.3e}")

# %%
# s_n: the smallest level t with min_{K_t} log|P_n| >= sup_K log|P_n|.
# The polynomial certifies that the optimal level is at most this value.
rep = measure_sn(poly, sol)
print(f"s_n upper bound {rep.s_n_emp:.6f},  n s_n = {rep.n * rep.s_n_emp:.4f}")
print(f"bracket [{rep.bracket_lo:.6f}, {rep.bracket_hi:.6f}], tolerance {rep.tolerance:.1e}")

# %%
from _plotting import plt, save
from lemniscate import log_abs

if plt is not None:
    x, y = np.meshgrid(np.linspace(-6.5, 6.5, 521), np.linspace(-2.5, 2.5, 201))
    vals = log_abs(poly, x + 1j * y)
    sup = rep.sup_norm_on_K
    fig, ax = plt.subplots(figsize=(8, 3.5))
    ax.contour(x, y, vals, levels=[sup], colors="C3")
    ax.plot(poly.zeros.real, poly.zeros.imag, ".", ms=2, color="k")
    t = np.linspace(0, 2 * np.pi, 200)
    for cx in (-4, 4):
        ax.plot(cx + np.cos(t), np.sin(t), color="C0", lw=0.8)
    ax.set_aspect("equal")
    ax.set_title(f"lemniscate |P_{poly.n}| = ||P_{poly.n}||_K")
    save(fig, "03_lemniscate.png")
