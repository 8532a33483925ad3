"""Deterministic counter-based random number generation.

Every random draw in this package flows through :class:`Rng`, a splittable
64-bit counter generator, so that runs are reproducible from a single seed
and the streams can be regenerated bit-for-bit in any language. The exact
algorithm:

Raw stream
    The generator holds a 64-bit ``seed`` and a draw counter ``n`` (starting
    at 0). The i-th raw output (i = 1, 2, ...) is::

        state_i = (seed + i * 0x9E3779B97F4A7C15) mod 2**64
        z = state_i
        z = ((z XOR (z >> 30)) * 0xBF58476D1E3EBAB1) mod 2**64
        z = ((z XOR (z >> 27)) * 0x94D049BB133111EB) mod 2**64
        out_i = z XOR (z >> 31)

    (the SplitMix64 mixing function applied to an arithmetic counter).

Uniforms
    ``uniform()`` maps one raw output to [0, 1) using its top 53 bits:
    ``u = (out >> 11) * 2.0**-53``.

Integers
    ``randint(m)`` is ``out mod m`` on one raw output. The modulo bias is
    below 2**-57 for every modulus used here (m <= 256).

Gaussians
    Box-Muller on consecutive uniforms. Pair j (j = 0, 1, ...) consumes
    uniforms (2j, 2j+1) as ``u, v`` and yields::

        r  = sqrt(-2 * log(1 - u))        # 1 - u is in (0, 1], log is safe
        z0 = r * cos(2 * pi * v)
        z1 = r * sin(2 * pi * v)

    ``normal_pair()`` returns (z0, z1); ``normals(k)`` returns the first k
    values of the interleaved stream z0_0, z1_0, z0_1, z1_1, ... and always
    consumes ceil(k / 2) full pairs.

Splitting
    ``split()`` draws one raw output from the parent and uses it as the
    child's seed. Parent and child streams are then independent; the order
    of splits is therefore part of the protocol and is documented wherever
    a module performs them.
"""

from __future__ import annotations

import numpy as np

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1E3EBAB1
_MIX2 = 0x94D049BB133111EB
_INV_2_53 = 2.0**-53


def _mix(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer on a uint64 array (wrapping arithmetic)."""
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


class Rng:
    """Splittable counter-based generator (see module docstring)."""

    __slots__ = ("seed", "_count")

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._count = 0

    def __repr__(self):
        return f"Rng(seed={self.seed:#x}, draws={self._count})"

    def raw(self, k: int) -> np.ndarray:
        """Next k raw 64-bit outputs as a uint64 array."""
        idx = np.arange(self._count + 1, self._count + k + 1, dtype=np.uint64)
        self._count += k
        with np.errstate(over="ignore"):
            state = np.uint64(self.seed) + idx * np.uint64(_GOLDEN)
            return _mix(state)

    def uniforms(self, k: int) -> np.ndarray:
        """Next k doubles uniform on [0, 1)."""
        return (self.raw(k) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def randint(self, m: int) -> int:
        """Uniform integer in [0, m)."""
        return int(self.raw(1)[0] % np.uint64(m))

    def randints(self, k: int, m) -> np.ndarray:
        """k uniform integers; ``m`` may be a scalar or per-draw array."""
        mod = np.asarray(m, dtype=np.uint64)
        return (self.raw(k) % mod).astype(np.int64)

    def normals(self, k: int) -> np.ndarray:
        """Next k standard normals (interleaved Box-Muller pair stream)."""
        pairs = (k + 1) // 2
        u = self.uniforms(2 * pairs)
        r = np.sqrt(-2.0 * np.log1p(-u[0::2]))
        angle = (2.0 * np.pi) * u[1::2]
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(angle)
        out[1::2] = r * np.sin(angle)
        return out[:k]

    def normal_pair(self) -> tuple[float, float]:
        z = self.normals(2)
        return float(z[0]), float(z[1])

    def normal(self) -> float:
        """One standard normal; consumes a full pair (cosine branch)."""
        return float(self.normals(2)[0])

    def points(self, n: int) -> np.ndarray:
        """n standard-normal 2-D points, one Box-Muller pair per row."""
        return self.normals(2 * n).reshape(n, 2)

    def split(self) -> "Rng":
        """Child generator seeded by the next raw output of this one."""
        return Rng(int(self.raw(1)[0]))
