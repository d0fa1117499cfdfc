"""How fast does B(N^theta, N) grow?  One-sided comparison with the bounds.

    python demos/exponent_scan.py [theta]
"""

import sys

from shiftconv import coefficients as co
from shiftconv import convolution as cv

theta = float(sys.argv[1]) if len(sys.argv) > 1 else 0.6
grid = [2**k for k in range(12, 19)]
L = 2 * grid[-1] + 2 * int(grid[-1] ** theta) + 2

tables = {
    "sym3": co.gen_sym_power(co.gen_ramanujan(L), 3),
    "divisor4": co.gen_divisor(4, L),
    "random": co.gen_random_model(L, 1),
    "ones": co.ones_table(L),
}
# the bound is for cusp forms; divisor4 carries a main term and overshoots it,
# random and ones are controls with no degree-4 structure
pred = cv.theorem_bounds(4, 4, theta)["thm1"]
print(f"degree-4 cuspidal bound {pred:+.3f}, trivial 1")
for name, t in tables.items():
    fit = cv.exponent_scan(t, t, theta, grid)
    print(f"{name:>9}: slope {fit.slope:+.3f}")

d = 4
print("thresholds for d = 4:", cv.theorem_bounds(d, d, 0.5)["thresholds"])
