"""Both sides of the dual-sum identity for sym^3 of the discriminant form.

The twisted sum of length N is compared against the stationary-phase
closed form on the dual window n ~ N^3 / H^4.

    python demos/dual_sum.py
"""

from shiftconv import coefficients as co
from shiftconv import dual_sum as ds

for N in (10**3, 10**4, 10**5):
    H = round(N**0.6)
    p = ds.DualSumParams(N, H, 4)
    need = max(2 * N + 2, p.dual_window[1] + 1)
    table = co.gen_sym_power(co.gen_ramanujan(need), 3)
    r = ds.dual_sum_check(table, p)
    lo, hi = r["dual_window"]
    print(f"N={N:>6} H={H:>4} dual n in [{lo}, {hi}]  "
          f"rel_err {r['rel_err']:.3f}  modulus {r['rel_err_modulus']:.3f}  "
          f"phase offset {r['phase_offset']:+.2f}")

# the closed form against a direct t-integral, one n at a time
p = ds.DualSumParams(1000, 63, 4)
lo, hi = p.dual_window
for n in (lo + (hi - lo) // 4, (lo + hi) // 2):
    cf = ds.omega_transform(p, n)
    qd = ds.omega_transform(p, n, "quadrature")
    print(f"Omega({n}): closed {abs(cf):.4g}  quadrature {abs(qd):.4g}")
