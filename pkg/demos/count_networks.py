"""From generators to exact counts and their growth rate.

Run: python demos/count_networks.py
"""
import mpmath

from levelknet.offspring import exact_count
from levelknet.pipeline import level

for k in (1, 2, 3):
    lev = level(k)
    exact_level = sum(1 for g in lev.generators if g.n_reticulations == k)
    print(f"level {k}: {len(lev.generators)} generators ({exact_level} of exact level {k})")
    fam = lev.heads
    print("  labelled heads on d leaves:",
          [fam.weights.labelled_count(d) for d in range(2, 6)])

print()
for k in (1, 2):
    lev = level(k)
    series = lev.network_series(40)
    m = lev.model
    print(f"level {k}: rho = {mpmath.nstr(m.rho, 12)}, a_k = {mpmath.nstr(m.a, 12)}")
    for n in (1, 2, 3, 4, 5, 10, 20, 40):
        c = exact_count(series, n)
        # counts divided by the leading asymptotic term drift to 1
        approx = m.a * mpmath.factorial(n) * mpmath.mpf(n) ** -1.5 * m.rho ** -n
        shown = f"{c}" if n <= 5 else f"{c:.6e}"
        print(f"  n={n:>2}  count={shown:<14}  ratio to a_k n^-3/2 rho^-n n! = "
              f"{mpmath.nstr(c / approx, 6)}")
