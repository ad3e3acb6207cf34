"""The rational symbol c(z) = z + sum_j a_j / (z - b_j)."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfluenceError, ParameterError


@dataclass(frozen=True)
class RationalSymbol:
    """Poles ``b_j`` and residues ``a_j`` of ``c(z) = z + sum_j a_j / (z - b_j)``.

    The linear term always has coefficient one.  Poles must be pairwise
    distinct; confluent symbols are rejected.
    """

    poles: tuple
    residues: tuple

    def __post_init__(self):
        poles = tuple(self.poles)
        residues = tuple(self.residues)
        if len(poles) != len(residues):
            raise ParameterError("poles and residues must have the same length")
        if len(poles) == 0:
            raise ParameterError("a symbol needs at least one pole")
        for i in range(len(poles)):
            for j in range(i):
                if poles[i] == poles[j]:
                    raise ConfluenceError(
                        f"poles {j} and {i} coincide at {poles[i]!r}; confluent symbols are not supported"
                    )
        object.__setattr__(self, "poles", poles)
        object.__setattr__(self, "residues", residues)

    @property
    def m(self):
        return len(self.poles)

    @property
    def b(self):
        return np.asarray(self.poles, dtype=float)

    @property
    def a(self):
        return np.asarray(self.residues, dtype=float)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = z.copy()
        for aj, bj in zip(self.residues, self.poles):
            out = out + aj / (z - bj)
        return out

    def moment(self, ell):
        """Coefficient of ``z**(-ell)`` in the expansion at infinity, ``ell >= 1``."""
        if ell < 1:
            raise ValueError("ell must be positive")
        return sum(aj * bj ** (ell - 1) for aj, bj in zip(self.residues, self.poles))

    def pole_radius(self):
        return max(abs(float(bj)) for bj in self.poles)

    def to_json(self):
        return {"poles": [float(x) for x in self.poles], "residues": [float(x) for x in self.residues]}

    @classmethod
    def from_json(cls, obj):
        return cls(tuple(obj["poles"]), tuple(obj["residues"]))
