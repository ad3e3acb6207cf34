"""Exact enumeration of a tiny multiple Krawtchouk ensemble.

Two particles on {0, 1, 2, 3}, one attached to each weight.  The cumulants
of a polynomial statistic from the configuration law agree with projected
traces of f(J), and the truncated-exponential determinant matches the
enumerated moment generating function.
"""

from fractions import Fraction

from mopeclt.banded import polynomial
from mopeclt.cumulants import cumulant, mgf_determinant
from mopeclt.lattice_path import step_line
from mopeclt.oracle import enumerate_mope, exact_cumulants, family_ensemble, mgf_expectation
from mopeclt.recurrence import build_J
from mopeclt.verify import tiny_krawtchouk

spec = tiny_krawtchouk()
dist = enumerate_mope(family_ensemble(spec, (1, 1)))
print("configuration law:")
for cfg, p in zip(dist.configs, dist.probs):
    print(f"  {tuple(int(x) for x in cfg)}: {p}")

f = [Fraction(1), Fraction(-1), Fraction(1, 2)]
rep = exact_cumulants(dist, f, 3)
J = build_J(spec, step_line(2, 60), 50)
B = polynomial([float(c) for c in f], J)
for m in (1, 2, 3):
    print(f"C_{m}: exact {rep.metadata['exact_cumulants'][m - 1]:>10}  trace {cumulant(B, 2, m)!r}")

for lam in (0.1, -0.1):
    det = mgf_determinant(J, [float(c) for c in f], lam, 2, 20)
    ref = float(mgf_expectation(dist, f, lam, 20))
    print(f"lambda={lam:+}: det {det!r}  enumerated {ref!r}")
