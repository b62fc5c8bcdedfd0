"""Seeded Brownian increments on a fine grid with deterministic refinement.

Streams are counter-based (Philox keyed by seed and particle index), so the
increment at (particle i, fine step k, component c) never depends on the
particle count, the traversal order or the number of workers.  Gaussians come
from the inverse normal CDF of the counter output -- no rejection, so counter
alignment survives.  Each draw is snapped to the 2^-32 grid; sums of up to
~2^20 such values are exact in double precision, which makes coarse-grid
refinement additive bit-for-bit regardless of how the summation associates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

from .errors import NonCommensurate, ShrinkNotAllowed

__all__ = ["BrownianLattice", "coarse_increment", "extend_particles", "purpose_uniforms"]

_QUANTUM = 2.0 ** -32
_U53 = 2.0 ** -53
_TAG_INCREMENTS = 0
_TAG_X0 = 1 << 62

# fine words per generation tile of one cursor (max ~48 MB transient)
_TILE_WORDS = 6_000_000


def _raw_words(seed: int, stream: int, start: int, count: int) -> np.ndarray:
    """Raw 64-bit outputs [start, start+count) of the (seed, stream) generator."""
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
                    np.uint64(stream & 0xFFFFFFFFFFFFFFFF)], dtype=np.uint64)
    block = start // 4
    offset = start - 4 * block
    n_blocks = (offset + count + 3) // 4
    bg = Philox(counter=np.array([block, 0, 0, 0], dtype=np.uint64), key=key)
    words = bg.random_raw(n_blocks * 4)
    return words[offset:offset + count]


def _uniforms(seed, stream, start, count):
    # strictly inside (0, 1): (word >> 11 + 0.5) * 2^-53
    words = _raw_words(seed, stream, start, count)
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * _U53


def purpose_uniforms(seed: int, particle: int, count: int, tag: int = _TAG_X0) -> np.ndarray:
    """Uniform draws from a side stream (initial conditions etc.), stable per
    particle index so coupled particle-count sweeps reuse them."""
    return _uniforms(seed, tag | particle, 0, count)


@dataclass(frozen=True)
class BrownianLattice:
    """Increment lattice: N particles, l components, M_fine steps of size h_fine."""

    seed: int
    n_particles: int
    l: int
    h_fine: float
    m_fine: int

    def __post_init__(self):
        if self.n_particles < 1 or self.l < 1 or self.m_fine < 0:
            raise ValueError("lattice dimensions must be positive")
        if self.h_fine <= 0:
            raise ValueError("h_fine must be positive")

    # -- fine-grid access ---------------------------------------------------

    def fine_increments(self, i: int, k0: int, k1: int) -> np.ndarray:
        """Increments of particle i over fine steps [k0, k1), shape (k1-k0, l)."""
        if not 0 <= i < self.n_particles:
            raise IndexError(f"particle {i} outside [0, {self.n_particles})")
        if not 0 <= k0 <= k1 <= self.m_fine:
            raise ValueError("fine-step range outside the lattice")
        count = (k1 - k0) * self.l
        u = _uniforms(self.seed, _TAG_INCREMENTS | i, k0 * self.l, count)
        z = ndtri(u) * np.sqrt(self.h_fine)
        z = np.rint(z / _QUANTUM) * _QUANTUM
        return z.reshape(k1 - k0, self.l)

    def ratio(self, h: float) -> int:
        """Integer h / h_fine; NonCommensurate if it is not one (within ulps)."""
        r = h / self.h_fine
        ri = int(round(r))
        if ri < 1 or abs(h - ri * self.h_fine) > 8.0 * np.finfo(float).eps * max(h, 1.0):
            raise NonCommensurate(
                f"h={h!r} is not an integer multiple of h_fine={self.h_fine!r}")
        return ri

    def coarse_increment(self, i: int, n: int, h: float) -> np.ndarray:
        """Increment of particle i over coarse step n of size h, shape (l,).

        The sum over the covered fine steps runs in ascending k order; with
        grid-snapped draws the result is exact, hence independent of the
        association used.
        """
        r = self.ratio(h)
        if (n + 1) * r > self.m_fine:
            raise ValueError("coarse step outside the lattice horizon")
        fine = self.fine_increments(i, n * r, (n + 1) * r)
        return np.cumsum(fine, axis=0)[-1]

    def coarse_all(self, n: int, h: float) -> np.ndarray:
        """Coarse increments of every particle at step n, shape (N, l)."""
        r = self.ratio(h)
        if (n + 1) * r > self.m_fine:
            raise ValueError("coarse step outside the lattice horizon")
        out = np.empty((self.n_particles, self.l))
        for i in range(self.n_particles):
            out[i] = np.cumsum(self.fine_increments(i, n * r, (n + 1) * r), axis=0)[-1]
        return out

    def iter_coarse(self, h: float, m_steps: int):
        """Yield (N, l) coarse increments for steps 0..m_steps-1.

        Each iterator owns a private generation tile, so concurrent
        simulations can share one immutable lattice.
        """
        r = self.ratio(h)
        if m_steps * r > self.m_fine:
            raise ValueError("requested horizon exceeds the lattice")
        n_part = self.n_particles
        steps_per_tile = max(1, _TILE_WORDS // max(1, n_part * r * self.l))
        n = 0
        while n < m_steps:
            hi = min(m_steps, n + steps_per_tile)
            tile = np.empty((n_part, hi - n, self.l))
            for i in range(n_part):
                fine = self.fine_increments(i, n * r, hi * r)
                tile[i] = np.cumsum(fine.reshape(hi - n, r, self.l), axis=1)[:, -1]
            for s in range(hi - n):
                yield tile[:, s]
            n = hi

    # -- coupling across particle counts -------------------------------------

    def extend_particles(self, n_new: int) -> "BrownianLattice":
        """Lattice with more particles; the first N streams are bitwise identical."""
        if n_new < self.n_particles:
            raise ShrinkNotAllowed(
                f"cannot shrink lattice from {self.n_particles} to {n_new} particles")
        return BrownianLattice(self.seed, n_new, self.l, self.h_fine, self.m_fine)


def coarse_increment(lattice: BrownianLattice, i: int, n: int, h: float) -> np.ndarray:
    return lattice.coarse_increment(i, n, h)


def extend_particles(lattice: BrownianLattice, n_new: int) -> BrownianLattice:
    return lattice.extend_particles(n_new)
