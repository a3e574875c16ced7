"""Bounded endowment distributions feeding the sequential-trader process."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DimensionMismatchError, DomainError
from .rng import StepRng


@dataclass(frozen=True)
class UniformBox:
    """Independent uniform draws on the box [lo, hi] per coordinate."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi):
            raise DimensionMismatchError("lo and hi must share a dimension")
        if any(a < 0 for a in lo) or any(a > b for a, b in zip(lo, hi)):
            raise DomainError(f"need 0 <= lo <= hi, got lo={lo} hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dimension(self) -> int:
        return len(self.lo)

    def sample_scalars(self, rng: StepRng) -> tuple[float, ...]:
        return tuple(a + rng.uniform() * (b - a) for a, b in zip(self.lo, self.hi))

    def sample(self, rng: StepRng) -> np.ndarray:
        return np.array(self.sample_scalars(rng))

    def atoms(self) -> None:
        return None

    def mean(self) -> np.ndarray:
        return (np.asarray(self.lo) + np.asarray(self.hi)) / 2.0


@dataclass(frozen=True)
class DiscreteAtoms:
    """Finite support: point i drawn with probability probs[i]."""

    points: tuple[tuple[float, ...], ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        pts = tuple(tuple(float(v) for v in p) for p in self.points)
        pr = tuple(float(v) for v in self.probs)
        if len(pts) == 0 or len(pts) != len(pr):
            raise DomainError("points and probs must be nonempty and aligned")
        dims = {len(p) for p in pts}
        if len(dims) != 1:
            raise DimensionMismatchError(f"atoms of mixed dimension: {dims}")
        if any(v < 0 for v in pr) or abs(sum(pr) - 1.0) > 1e-12:
            raise DomainError(f"probs must be >= 0 and sum to 1, got {pr}")
        if any(v < 0 for p in pts for v in p):
            raise DomainError("atom coordinates must be >= 0")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "probs", pr)
        object.__setattr__(self, "_cum", tuple(itertools.accumulate(pr)))

    @property
    def dimension(self) -> int:
        return len(self.points[0])

    def sample_scalars(self, rng: StepRng) -> tuple[float, ...]:
        r = rng.uniform()
        for point, edge in zip(self.points, self._cum):
            if r < edge:
                return point
        return self.points[-1]

    def sample(self, rng: StepRng) -> np.ndarray:
        return np.array(self.sample_scalars(rng))

    def atoms(self) -> tuple[tuple[tuple[float, ...], ...], tuple[float, ...]]:
        return self.points, self.probs

    def mean(self) -> np.ndarray:
        return np.average(np.asarray(self.points), axis=0, weights=self.probs)


@dataclass(frozen=True)
class BernoulliProduct:
    """Each coordinate independently equals delta_max with probability p, else 0."""

    p: float
    delta_max: float = 1.0
    dimension: int = 2

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f"p must be in [0,1], got {self.p}")
        if self.delta_max < 0:
            raise DomainError(f"delta_max must be >= 0, got {self.delta_max}")
        if self.dimension < 2:
            raise DimensionMismatchError("dimension must be >= 2")

    def sample_scalars(self, rng: StepRng) -> tuple[float, ...]:
        return tuple(
            self.delta_max if rng.uniform() < self.p else 0.0
            for _ in range(self.dimension)
        )

    def sample(self, rng: StepRng) -> np.ndarray:
        return np.array(self.sample_scalars(rng))

    def atoms(self) -> tuple[tuple[tuple[float, ...], ...], tuple[float, ...]]:
        points = []
        probs = []
        for bits in itertools.product((0, 1), repeat=self.dimension):
            points.append(tuple(self.delta_max * b for b in bits))
            ones = sum(bits)
            probs.append(self.p**ones * (1.0 - self.p) ** (self.dimension - ones))
        return tuple(points), tuple(probs)

    def mean(self) -> np.ndarray:
        return np.full(self.dimension, self.p * self.delta_max)


EndowmentDistribution = Union[UniformBox, DiscreteAtoms, BernoulliProduct]


def sample_endowment(distribution: EndowmentDistribution, rng: StepRng) -> np.ndarray:
    """One i.i.d. endowment draw, fully determined by the rng state."""
    return distribution.sample(rng)


def make_two_good_sampler(distribution: EndowmentDistribution, seed: int):
    """(step) -> (d1, d2): hot-loop sampler for two-good distributions.

    Produces exactly the draws of sample_scalars(StepRng(seed, step)), with
    the counter mixing inlined.
    """
    from .rng import make_uniform_pair_sampler, make_uniform_single_sampler

    if distribution.dimension != 2:
        raise DimensionMismatchError("two-good sampler needs a two-good distribution")
    if isinstance(distribution, UniformBox):
        pair = make_uniform_pair_sampler(seed)
        lo1, lo2 = distribution.lo
        span1 = distribution.hi[0] - distribution.lo[0]
        span2 = distribution.hi[1] - distribution.lo[1]

        def sample(step: int) -> tuple[float, float]:
            u1, u2 = pair(step)
            return lo1 + u1 * span1, lo2 + u2 * span2

        return sample
    if isinstance(distribution, BernoulliProduct):
        pair = make_uniform_pair_sampler(seed)
        p = distribution.p
        top = distribution.delta_max

        def sample(step: int) -> tuple[float, float]:
            u1, u2 = pair(step)
            return (top if u1 < p else 0.0, top if u2 < p else 0.0)

        return sample

    single = make_uniform_single_sampler(seed)
    points = distribution.points
    edges = distribution._cum

    def sample(step: int) -> tuple[float, float]:
        r = single(step)
        for point, edge in zip(points, edges):
            if r < edge:
                return point
        return points[-1]

    return sample
