"""
Green function and capacity of a system of continua
===================================================

The complement of a compact set K in the Riemann sphere carries a Green
function g with pole at infinity. Near infinity g(z) = log|z| - log cap(K)
+ o(1), so the capacity is read off the constant term. Here g is represented
by logarithmic charges placed inside each continuum, with total mass one.
"""

# %%
# A disk: capacity equals the radius.
import numpy as np

from lemniscate import CompactSet, Disk, ellipse, solve

disk = solve(CompactSet((Disk(0.5 + 0.5j, 2.0),)), 64)
print(f"disk of radius 2: cap = {disk.capacity:.12f}, fit residual {disk.fit_residual:.1e}")

# %%
# An ellipse with semiaxes a and b has capacity (a + b) / 2.
ell = solve(CompactSet((ellipse(2.0, 1.0),)), 256)
print(f"ellipse 2 x 1:     cap = {ell.capacity:.12f}, charge depth {ell.depth}")

# %%
# Two disjoint disks. The charges inside each continuum carry its share
# omega_j of the equilibrium measure, and g has a saddle point between them.
two = solve(CompactSet((Disk(-4, 1.0), Disk(4, 1.0))), 64)
print(f"two disks: cap = {two.capacity:.9f}, omegas = {np.round(two.omegas, 12)}")
print(f"saddle point at {two.critical_points[0]:.6f}, g there = {two.critical_values[0]:.6f}")
print(f"level sets K_s stay separated for s < {two.critical_level:.6f}")

# %%
# g vanishes on K and grows like log|z| far away.
z = np.array([1.0 + 0j, 4.0, 10.0, 1e6])
print("g(z)            :", np.round(two.g(z), 6))
print("log|z| - log cap:", np.round(np.log(np.abs(z)) - two.log_capacity, 6))

# %%
# Optional figure: level lines of g.
from _plotting import plt, save

if plt is not None:
    x, y = np.meshgrid(np.linspace(-8, 8, 321), np.linspace(-5, 5, 201))
    fig, ax = plt.subplots(figsize=(7, 4.5))
    cs = ax.contour(x, y, two.g(x + 1j * y), levels=np.linspace(0.05, 2.0, 16))
    ax.clabel(cs, fontsize=6)
    ax.plot(two.charges.real, two.charges.imag, ".", ms=2, color="k")
    ax.set_aspect("equal")
    ax.set_title("level lines of g for two disks")
    save(fig, "01_green_levels.png")
