"""Admissible up-right lattice paths ``k_0 = 0, k_{n+1} = k_n + e_{j_n}``."""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True, eq=False)
class LatticePath:
    """A path stored as its step sequence.

    ``steps[n]`` is the 0-based direction ``j_n`` with ``k_{n+1} = k_n + e_{j_n}``;
    the JSON form uses 1-based directions.  ``nu`` is the limiting direction.
    """

    m: int
    steps: np.ndarray
    nu: tuple

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ParameterError("m must be a positive integer")
        steps = np.asarray(self.steps, dtype=np.int64).reshape(-1)
        if steps.size and (steps.min() < 0 or steps.max() >= self.m):
            raise ParameterError(f"step directions must lie in 0..{self.m - 1}")
        steps.setflags(write=False)
        nu = tuple(float(x) for x in self.nu)
        if len(nu) != self.m:
            raise ParameterError("nu must have length m")
        if any(x < 0 for x in nu) or abs(sum(nu) - 1) > 1e-12:
            raise ParameterError("nu must be a probability vector")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "_cache", {})

    def __len__(self):
        """Number of steps; multi-indices ``k_0 .. k_len`` are available."""
        return int(self.steps.size)

    def multi_indices(self, count=None):
        """Array of shape ``(count, m)`` holding ``k_0 .. k_{count-1}``."""
        if count is None:
            count = len(self) + 1
        if count > len(self) + 1:
            raise ParameterError(f"path has only {len(self) + 1} multi-indices, {count} requested")
        K = self._cache.get("K")
        if K is None:
            K = np.zeros((len(self) + 1, self.m), dtype=np.int64)
            if len(self):
                K[np.arange(1, len(self) + 1), self.steps] = 1
                K = np.cumsum(K, axis=0)
            K.setflags(write=False)
            self._cache["K"] = K
        return K[:count]

    def k(self, n):
        return tuple(int(x) for x in self.multi_indices(n + 1)[n])

    def prefix(self, length):
        return LatticePath(self.m, self.steps[:length], self.nu)

    def validate(self):
        """Check unit steps, ``|k_n| = n`` and the direction bound at the horizon."""
        K = self.multi_indices()
        inc = np.diff(K, axis=0)
        if inc.size and not (np.all(inc >= 0) and np.all(inc.sum(axis=1) == 1)):
            raise ParameterError("path steps are not unit up-right steps")
        if not np.array_equal(K.sum(axis=1), np.arange(len(K))):
            raise ParameterError("|k_n| != n somewhere on the path")
        N = len(self)
        if N > 0:
            dev = np.abs(K[-1] / N - np.asarray(self.nu))
            if np.any(dev > self.m / N + 1e-15):
                raise ParameterError(f"k_N/N deviates from nu by {dev.max():.3g} > m/N")
        return True

    def to_json(self):
        return {"m": self.m, "nu": list(self.nu), "steps": [int(s) + 1 for s in self.steps]}

    @classmethod
    def from_json(cls, obj):
        for key in ("m", "nu", "steps"):
            if key not in obj:
                raise ParameterError(f"path is missing field {key!r}")
        steps = np.asarray(obj["steps"], dtype=np.int64) - 1
        return cls(int(obj["m"]), steps, tuple(obj["nu"]))


def step_line(m, length):
    """Cyclic path with ``j_n = n mod m``."""
    if m < 1 or length < 0:
        raise ParameterError("need m >= 1 and length >= 0")
    return LatticePath(m, np.arange(length) % m, (1.0 / m,) * m)


def ray_path(nu, length):
    """Greedy path towards ``nu``: step in the direction most behind schedule.

    ``j_n = argmax_j ((n+1) nu_j - k_{n,j})`` with ties broken by the smallest
    index, which keeps ``|k_{n,j} - n nu_j| <= m`` along the whole path.
    """
    nu = np.asarray(nu, dtype=float)
    m = nu.size
    if np.any(nu < 0) or abs(nu.sum() - 1) > 1e-12:
        raise ParameterError("nu must be a probability vector")
    steps = np.empty(length, dtype=np.int64)
    k = np.zeros(m)
    for n in range(length):
        j = int(np.argmax((n + 1) * nu - k))
        steps[n] = j
        k[j] += 1
    return LatticePath(m, steps, tuple(nu))


def hermite_example_path(length):
    """The two-weight path ``k_j = (floor((j+1)/2), floor(j/2))``."""
    idx = np.arange(length + 1)
    K = np.stack([(idx + 1) // 2, idx // 2], axis=1)
    steps = np.argmax(np.diff(K, axis=0), axis=1) if length else np.zeros(0, dtype=np.int64)
    return LatticePath(2, steps, (0.5, 0.5))
