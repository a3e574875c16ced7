"""Counter-based random streams addressed by (seed, step).

Every simulation step owns an independent stream derived purely from the
run seed and the absolute step index, so thinning the trajectory, restarting
mid-run, or farming steps out to replicas can never change which numbers a
given step sees. The generator is the SplitMix64 finalizer applied to a Weyl
sequence; each step's stream starts at counter ``step * STRIDE`` which leaves
2^32 draws per step before streams could touch.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_PHI = 0x9E3779B97F4A7C15
_STRIDE = 1 << 32


def _mix(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return z ^ (z >> 31)


class StepRng:
    """Deterministic uniform stream for one (seed, step) pair."""

    __slots__ = ("_counter",)

    def __init__(self, seed: int, step: int):
        base = (_mix(seed & _MASK) + step * _STRIDE) & _MASK
        self._counter = base

    def next_uint64(self) -> int:
        self._counter = (self._counter + _PHI) & _MASK
        return _mix(self._counter)

    def uniform(self) -> float:
        """Uniform draw in [0, 1) with 53 random bits."""
        return (self.next_uint64() >> 11) * 1.1102230246251565e-16  # 2^-53


def make_uniform_pair_sampler(seed: int):
    """(step) -> (u1, u2): the first two uniforms of stream (seed, step).

    Bit-identical to two StepRng(seed, step).uniform() calls, with the
    mixing inlined for the simulation hot loop.
    """
    mixed = _mix(seed & _MASK)
    inv53 = 1.1102230246251565e-16

    def pair(step: int) -> tuple[float, float]:
        counter = (mixed + step * _STRIDE + _PHI) & _MASK
        z = (counter ^ (counter >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
        u1 = ((z ^ (z >> 31)) >> 11) * inv53
        counter = (counter + _PHI) & _MASK
        z = (counter ^ (counter >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
        u2 = ((z ^ (z >> 31)) >> 11) * inv53
        return u1, u2

    return pair


def make_uniform_single_sampler(seed: int):
    """(step) -> u: the first uniform of stream (seed, step), inlined."""
    mixed = _mix(seed & _MASK)
    inv53 = 1.1102230246251565e-16

    def single(step: int) -> float:
        counter = (mixed + step * _STRIDE + _PHI) & _MASK
        z = (counter ^ (counter >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
        return ((z ^ (z >> 31)) >> 11) * inv53

    return single
