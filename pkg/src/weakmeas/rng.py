"""Per-trajectory counter-based random streams.

Trajectory ``index`` under ``master_seed`` draws from two Philox streams keyed
by ``(master_seed, 2*index)`` (uniforms, choosing the outcome mixture
component) and ``(master_seed, 2*index + 1)`` (standard normals).  Draws do not
depend on which worker runs the trajectory, or on whether they are requested
one at a time or in bulk.
"""

from __future__ import annotations

import numpy as np

_MAX_KEY = 2 ** 64


def _generator(k0: int, k1: int) -> np.random.Generator:
    key = np.array([k0, k1], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


class RandomSource:
    """Deterministic source of ``(uniform, normal)`` pairs, one pair per step."""

    def __init__(self, seed: int, index: int = 0):
        seed, index = int(seed), int(index)
        if not 0 <= seed < _MAX_KEY:
            raise ValueError(f"seed must be in [0, 2**64), got {seed}")
        if not 0 <= 2 * index + 1 < _MAX_KEY:
            raise ValueError(f"stream index out of range: {index}")
        self.seed = seed
        self.index = index
        self._uniform = _generator(seed, 2 * index)
        self._normal = _generator(seed, 2 * index + 1)

    def pairs(self, count: int) -> tuple[np.ndarray, np.ndarray]:
        """Next ``count`` uniforms on [0, 1) and standard normals."""
        return self._uniform.random(count), self._normal.standard_normal(count)

    def pair(self) -> tuple[float, float]:
        return float(self._uniform.random()), float(self._normal.standard_normal())


def trajectory_stream(master_seed: int, index: int) -> RandomSource:
    return RandomSource(master_seed, index)


def _reset(bitgen: np.random.Philox, k0: int, k1: int) -> None:
    bitgen.state = {
        "bit_generator": "Philox",
        "state": {
            "counter": np.zeros(4, dtype=np.uint64),
            "key": np.array([k0, k1], dtype=np.uint64),
        },
        "buffer": np.zeros(4, dtype=np.uint64),
        "buffer_pos": 4,
        "has_uint32": 0,
        "uinteger": 0,
    }


def stream_block(master_seed: int, start: int, stop: int, steps: int) -> tuple[np.ndarray, np.ndarray]:
    """First ``steps`` pairs of trajectories ``start..stop-1``, row by row.

    Equivalent to ``RandomSource(master_seed, k).pairs(steps)`` for each ``k``,
    but rekeys one generator instead of building a new one per trajectory.
    """
    RandomSource(master_seed, max(stop - 1, 0))  # range checks
    bitgen = np.random.Philox(key=np.array([master_seed, 0], dtype=np.uint64))
    gen = np.random.Generator(bitgen)
    u = np.empty((stop - start, steps))
    z = np.empty((stop - start, steps))
    for row, k in enumerate(range(start, stop)):
        _reset(bitgen, master_seed, 2 * k)
        u[row] = gen.random(steps)
        _reset(bitgen, master_seed, 2 * k + 1)
        z[row] = gen.standard_normal(steps)
    return u, z
