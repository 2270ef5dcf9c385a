"""
How fast does the level shrink?
===============================

With q zeros per arc fixed, the measured level s_n decays like 1/n: n s_n
settles to a constant. With q growing like log log n, the bound carries an
extra (log log n)^2 factor. A small sweep shows both schedules.
"""

# %%
from lemniscate import CompactSet, Disk, solve, sweep

sol = solve(CompactSet((Disk(-4, 1.0), Disk(4, 1.0))), 64)
n_list = [64, 128, 256, 512]

print("fixed q = 4")
for row in sweep(sol, n_list, schedule="fixed_q", q=4, c=0.1):
    print(f"  n = {row.n:5d}  m = {row.m:4d}  n s_n = {row.sn_times_n:.4f}  "
          f"envelope = {row.envelope:.2e}")

# %%
# Under the log log schedule the split m_j = floor(m omega_j) leaves one
# component one arc heavier when m is odd. That offset is bounded but shows
# up as a parity pattern in n s_n.
print("q = max(1, floor(2 ln ln m))")
for row in sweep(sol, n_list + [1024], schedule="loglog", c=0.1):
    print(f"  n = {row.n:5d}  m = {row.m:4d}  q = {row.q}  n s_n = {row.sn_times_n:.4f}  "
          f"scaled = {row.sn_scaled_loglog:.4f}")
