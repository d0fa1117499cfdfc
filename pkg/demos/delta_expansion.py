"""Kronecker delta from moduli q <= Q, and the weight g(q, x) it needs.

    python demos/delta_expansion.py [Q]
"""

import sys

import numpy as np

from shiftconv import delta_method as dm

Q = int(sys.argv[1]) if len(sys.argv) > 1 else 50
exp = dm.DeltaExpansion.make(Q)

print(f"Q = {Q}")
for n in (0, 1, 2, 7, -13, 2 * Q):
    print(f"  delta({n:>4}) ~ {dm.evaluate_delta(exp, n):+.3e}")

res = dm.delta_identity_check(Q)
print(f"max error over |n| <= 2Q: {res['max_abs_error']:.2e}")

# g is ~1 near the origin for small moduli and decays past |x| ~ 1
x = np.array([0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0])
for q in (1, 2, int(Q**0.5)):
    g = dm.g_weight(exp, q, x).real
    print(f"  g({q:>2}, x) =", " ".join(f"{v:+.3f}" for v in g))
