"""Cumulants of sum_i x_i^2 for the two-weight multiple Hermite ensemble.

The weights are exp(-n x^2 / 2 + n a_j x) with a = (1, -1); particles are
split evenly between the weights.  The variance settles at its limit and the
third and fourth cumulants decay like 1/n and 1/n^2.
"""

from mopeclt.cumulants import linear_statistic_cumulants
from mopeclt.families import FamilySpec, nevai_limits
from mopeclt.lattice_path import ray_path
from mopeclt.symbol import compose_laurent, laurent_series, limiting_variance

base = FamilySpec.hermite([1.0, -1.0])
nu = (0.5, 0.5)
f = [0.0, 0.0, 1.0]

sym = nevai_limits(base, nu)
print("limit symbol poles", sym.poles, "residues", sym.residues)
w = laurent_series(f, sym, 2)
print("Laurent coefficients of f(c(z)):", {ell: float(v) for ell, v in w.items()})
print("sigma^2 (series)     ", limiting_variance(w))
print("sigma^2 (quadrature) ", limiting_variance(compose_laurent(f, sym, 2)))

print(f"{'n':>5} {'C_1':>12} {'C_2':>20} {'C_3':>12} {'C_4':>12}")
for n in (25, 50, 100, 200, 400, 800):
    rep = linear_statistic_cumulants(base.with_n_scale(n), ray_path(nu, n + 40), f, n, 4)
    c = rep.values
    print(f"{n:>5} {c[1]:>12.6f} {c[2]:>20.15f} {c[3]:>12.3e} {c[4]:>12.3e}")
