"""Structure behind the vanishing of higher cumulants for Toeplitz symbols.

For a banded Toeplitz matrix split into strictly lower and upper parts, the
commutator [T_-, T_+] lives in finitely many columns.  Projected traces of
nested commutators of order three and higher then vanish, while the order two
trace equals minus the variance.
"""

import numpy as np

from mopeclt.banded import commutator
from mopeclt.cumulants import bch_commutator_trace, bch_compositions, commutator_support, cumulant
from mopeclt.families import FamilySpec, nevai_limits
from mopeclt.symbol import finite_n_variance
from mopeclt.verify import toeplitz_split

sym = nevai_limits(FamilySpec.charlier([0.5, 1.0], lam=1.0, tau=1.0), (0.5, 0.5))
f = [0.0, 0.0, 0.0, 1.0]
n = 40
pair, w = toeplitz_split(f, sym, n + 40)

C = commutator(pair.minus, pair.plus)
cols = np.flatnonzero(np.abs(C.data[: C.exact_rows - 8]).max(axis=0) > 1e-12 * C.max_abs())
print("nonzero columns of [T_-, T_+]:", cols.tolist(), " support reported:", commutator_support(pair))

print("Tr P_n [T_-, T_+] P_n =", bch_commutator_trace(pair, n, (1, 1)))
print("-C_2                  =", -cumulant(pair.minus + pair.plus, n, 2))
print("-sum min(l, n) r_l r_-l =", -finite_n_variance(w, n))

for m in (3, 4):
    worst = max(abs(bch_commutator_trace(pair, n, comp)) for comp in bch_compositions(m))
    print(f"largest |trace| over order-{m} compositions: {worst:.3e}")
