"""Empirical-measure computations over particle configurations.

Convolution sums, moments, one-dimensional Wasserstein distances, density
histograms, the integral-identity diagnostics, and the binary checkpoint
format.  The convolution is a direct O(N^2) pair sum: ascending-j left fold
below 1024 summands, zero-padded pairwise cascade at or above, so results
are bit-reproducible for a fixed particle count.
"""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _fast
from .errors import NonFiniteError, SizeMismatch
from .model import Kernel

__all__ = [
    "ParticleState",
    "MeasureSummary",
    "convolve",
    "convolve_all",
    "convolve_jacobian",
    "empirical_moment",
    "w2_1d",
    "w2_paired_bound",
    "DensityTable",
    "histogram_density",
    "identity_decomposition_check",
    "identity_odd_kernel_check",
    "ordered_pair_sum",
    "save_state",
    "load_state",
]

PAIRWISE_MIN = _fast.PAIRWISE_MIN

# upper bound on floats held by one pairwise chunk of the generic path
_CHUNK_BUDGET = 8_000_000


@dataclass
class ParticleState:
    """N particles in R^d at one time point."""

    positions: np.ndarray
    time: float = 0.0
    n_step_index: int = 0

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim == 1:
            pos = pos[:, None]
        if pos.ndim != 2 or pos.shape[0] < 1 or pos.shape[1] < 1:
            raise SizeMismatch("positions must be a nonempty (N, d) array")
        self.positions = np.ascontiguousarray(pos)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.positions)))

    def copy(self) -> "ParticleState":
        return ParticleState(self.positions.copy(), self.time, self.n_step_index)


class MeasureSummary:
    """Lazy empirical moments handed to coefficient evaluators.

    Coefficients never see raw particle arrays; measure dependence beyond the
    convolution terms enters through these summaries only.
    """

    def __init__(self, positions: np.ndarray):
        self._pos = positions
        self._mean = None
        self._m2 = None

    @classmethod
    def from_positions(cls, positions):
        return cls(np.atleast_2d(np.asarray(positions, dtype=float)))

    @classmethod
    def from_state(cls, state: ParticleState):
        return cls(state.positions)

    @property
    def mean(self) -> np.ndarray:
        if self._mean is None:
            self._mean = self._pos.mean(axis=0)
        return self._mean

    @property
    def second_moment(self) -> float:
        if self._m2 is None:
            self._m2 = float(np.mean(np.sum(self._pos ** 2, axis=1)))
        return self._m2

    @property
    def variance(self) -> float:
        return self.second_moment - float(np.sum(self.mean ** 2))

    def moment(self, p: float) -> float:
        return float(np.mean(np.linalg.norm(self._pos, axis=1) ** p))


# ---------------------------------------------------------------------------
# Ordered pair summation
# ---------------------------------------------------------------------------

def ordered_pair_sum(terms: np.ndarray, axis: int = 1) -> np.ndarray:
    """Sum with the contractual order: left fold for < 1024 summands,
    zero-padded halving cascade otherwise."""
    n = terms.shape[axis]
    if n < PAIRWISE_MIN:
        return np.cumsum(terms, axis=axis).take(-1, axis=axis)
    terms = np.moveaxis(terms, axis, 1)
    p = 1 << (n - 1).bit_length()
    if p != n:
        pad = np.zeros((terms.shape[0], p - n) + terms.shape[2:])
        terms = np.concatenate([terms, pad], axis=1)
    else:
        terms = terms.copy()
    width = p
    while width > 1:
        half = width // 2
        terms[:, :half] += terms[:, half:width]
        width = half
    return terms[:, 0]


def _generic_conv(kernel, z, base, skip_self):
    n_base, d = base.shape
    rows = z.shape[0]
    probe = kernel(z[:1] - base[:1])
    out_shape = probe.shape[1:]
    out = np.empty((rows,) + out_shape)
    chunk = max(1, _CHUNK_BUDGET // (n_base * max(d, int(np.prod(out_shape)))))
    for i0 in range(0, rows, chunk):
        i1 = min(rows, i0 + chunk)
        diff = z[i0:i1, None, :] - base[None, :, :]
        vals = kernel(diff.reshape(-1, d)).reshape((i1 - i0, n_base) + out_shape)
        if skip_self:
            idx = np.arange(i0, i1)
            ok = idx < n_base
            vals[np.arange(i1 - i0)[ok], idx[ok]] = 0.0
        out[i0:i1] = ordered_pair_sum(vals, axis=1)
    out /= n_base
    return out


def convolve_all(kernel: Kernel, z: np.ndarray, base: Optional[np.ndarray] = None,
                 skip_self: bool = False, validate: bool = True) -> np.ndarray:
    """Empirical convolution of ``kernel`` against the particles in ``base``,
    evaluated at every row of ``z`` in one pass.

    ``base=None`` convolves a configuration with itself.  ``skip_self`` drops
    the j == i term, which matters when ``z`` and ``base`` differ (inside the
    implicit-stage solver); for a self-convolution that term is kernel(0) = 0.
    """
    z = np.ascontiguousarray(np.atleast_2d(np.asarray(z, dtype=float)))
    if base is None:
        base = z
        skip_self = False
    else:
        base = np.ascontiguousarray(np.atleast_2d(np.asarray(base, dtype=float)))
    if kernel.powerlaw_params is not None and _fast.HAVE_NUMBA and kernel.output == "vector":
        c, k = kernel.powerlaw_params
        out = _fast.powerlaw_conv(z, base, c, k, skip_self=skip_self)
    else:
        out = _generic_conv(kernel, z, base, skip_self)
    if validate and not np.all(np.isfinite(out)):
        raise NonFiniteError("non-finite value in convolution sum")
    return out


def convolve(kernel: Kernel, state: ParticleState, i: int) -> np.ndarray:
    """(1/N) sum_j kernel(x_i - x_j) for the single particle ``i`` (0-based).

    Exact arithmetic order: ascending j, left fold for N < 1024 and pairwise
    cascade summation for N >= 1024.
    """
    if not 0 <= i < state.n:
        raise IndexError(f"particle index {i} outside [0, {state.n})")
    full = convolve_all(kernel, state.positions)
    return full[i]


def convolve_jacobian(kernel: Kernel, z: np.ndarray, base: np.ndarray,
                      skip_self: bool = False) -> Optional[np.ndarray]:
    """(1/N) sum_j Dkernel(z_i - base_j), or None if the kernel has no jacobian."""
    z = np.ascontiguousarray(np.atleast_2d(np.asarray(z, dtype=float)))
    base = np.ascontiguousarray(np.atleast_2d(np.asarray(base, dtype=float)))
    if kernel.powerlaw_params is not None and _fast.HAVE_NUMBA:
        c, k = kernel.powerlaw_params
        return _fast.powerlaw_conv_jac(z, base, c, k, skip_self=skip_self)
    if kernel.jacobian(z[:1]) is None:
        return None
    n_base, d = base.shape
    rows = z.shape[0]
    out = np.empty((rows, d, d))
    chunk = max(1, _CHUNK_BUDGET // (n_base * d * d))
    for i0 in range(0, rows, chunk):
        i1 = min(rows, i0 + chunk)
        diff = z[i0:i1, None, :] - base[None, :, :]
        jac = kernel.jacobian(diff.reshape(-1, d)).reshape(i1 - i0, n_base, d, d)
        if skip_self:
            idx = np.arange(i0, i1)
            ok = idx < n_base
            jac[np.arange(i1 - i0)[ok], idx[ok]] = 0.0
        out[i0:i1] = jac.sum(axis=1)
    out /= n_base
    return out


# ---------------------------------------------------------------------------
# Moments and distances
# ---------------------------------------------------------------------------

def empirical_moment(state: ParticleState, p: float) -> float:
    """(1/N) sum_i |x_i|^p."""
    if p < 1:
        raise ValueError("p must be >= 1")
    return float(np.mean(np.linalg.norm(state.positions, axis=1) ** p))


def w2_1d(a, b) -> float:
    """Exact quadratic Wasserstein distance between two equal-size empirical
    measures on the line (sorted pairing)."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.shape != b.shape:
        raise SizeMismatch(f"sample sizes differ: {a.size} vs {b.size}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def w2_paired_bound(state_a: ParticleState, state_b: ParticleState) -> float:
    """Same-index coupling upper bound on W2; exact only up to permutation."""
    if state_a.n != state_b.n or state_a.d != state_b.d:
        raise SizeMismatch("states must share N and d")
    diff = state_a.positions - state_b.positions
    return float(np.sqrt(np.mean(np.sum(diff ** 2, axis=1))))


# ---------------------------------------------------------------------------
# Histograms
# ---------------------------------------------------------------------------

@dataclass
class DensityTable:
    """Normalized histogram with explicit out-of-range mass."""

    edges: np.ndarray
    mass: np.ndarray
    underflow: float
    overflow: float
    axis: int = 0
    time: float = 0.0

    def total_mass(self) -> float:
        return float(self.mass.sum() + self.underflow + self.overflow)

    def to_csv(self, path):
        edges = [float(e) for e in self.edges]
        with open(path, "w", newline="") as fh:
            fh.write("bin_left,bin_right,mass\n")
            fh.write(f"-inf,{edges[0]!r},{float(self.underflow)!r}\n")
            for k in range(self.mass.size):
                fh.write(f"{edges[k]!r},{edges[k + 1]!r},{float(self.mass[k])!r}\n")
            fh.write(f"{edges[-1]!r},inf,{float(self.overflow)!r}\n")


def histogram_density(state: ParticleState, axis: int = 0, bins: int = 60,
                      value_range=None) -> DensityTable:
    """Histogram of one coordinate, masses summing to one including the
    underflow/overflow fields.  Default range: mean +/- 4 std."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    x = state.positions[:, axis]
    if value_range is None:
        mu, sd = float(np.mean(x)), float(np.std(x))
        value_range = (mu - 4.0 * sd - 1e-12, mu + 4.0 * sd + 1e-12)
    lo, hi = float(value_range[0]), float(value_range[1])
    if not hi > lo:
        raise ValueError("empty histogram range")
    counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
    n = x.size
    under = float(np.count_nonzero(x < lo)) / n
    over = float(np.count_nonzero(x > hi)) / n
    return DensityTable(edges=edges, mass=counts / n, underflow=under,
                        overflow=over, axis=axis, time=state.time)


# ---------------------------------------------------------------------------
# Integral-identity diagnostics
# ---------------------------------------------------------------------------

def _pair_values(kernel, x):
    n, d = x.shape
    diff = x[:, None, :] - x[None, :, :]
    vals = kernel(diff.reshape(-1, d))
    return vals.reshape((n, n) + vals.shape[1:])


def identity_decomposition_check(f: Kernel, state: ParticleState, p: float) -> float:
    """Residual of the weighted-pair decomposition of the convolved drift.

    For odd f, the double integral of |x|^{p-2} <x, f(x-y)> against mu x mu
    equals the sum of a symmetric half term and a quarter cross term; exact
    for empirical measures, so the residual is pure floating-point noise.
    """
    if p <= 2:
        raise ValueError("p must exceed 2")
    x = state.positions
    n = state.n
    fv = _pair_values(f, x)
    nx = np.linalg.norm(x, axis=1)
    wx = nx ** (p - 2.0)
    inner_x = np.einsum("id,ijd->ij", x, fv)
    inner_diff = np.einsum("ijd,ijd->ij", x[:, None, :] - x[None, :, :], fv)
    inner_sum = np.einsum("ijd,ijd->ij", x[:, None, :] + x[None, :, :], fv)
    lhs = float(np.sum(wx[:, None] * inner_x)) / n ** 2
    rhs = float(np.sum(0.5 * wx[:, None] * inner_diff
                       + 0.25 * (wx[:, None] - wx[None, :]) * inner_sum)) / n ** 2
    return abs(lhs - rhs)


IdentityOddResult = namedtuple("IdentityOddResult", "lhs bound oddness_gap")


def identity_odd_kernel_check(f: Kernel, f_sigma: Kernel, state: ParticleState,
                              m: float, l_f1: float) -> IdentityOddResult:
    """Variance bound for the convolved pair (f, f_sigma) over one empirical
    measure.

    Returns the double sum
    ``(1/N^2) sum_ij (<x_i, f(x_i - x_j)> + (m-1) |f_sigma(x_i - x_j)|^2)``,
    the bound ``l_f1 * Var``, and the gap of the oddness equality step
    (the <x, f> sum must match half the <x - y, f> sum).
    """
    if m <= 2:
        raise ValueError("m must exceed 2")
    x = state.positions
    n = state.n
    fv = _pair_values(f, x)
    sv = _pair_values(f_sigma, x)
    inner_x = np.einsum("id,ijd->ij", x, fv)
    inner_diff = np.einsum("ijd,ijd->ij", x[:, None, :] - x[None, :, :], fv)
    s_sq = np.sum(sv.reshape(n, n, -1) ** 2, axis=2)
    s1 = float(np.sum(inner_x)) / n ** 2
    s2 = 0.5 * float(np.sum(inner_diff)) / n ** 2
    lhs = s1 + (m - 1.0) * float(np.sum(s_sq)) / n ** 2
    meas = MeasureSummary.from_state(state)
    bound = l_f1 * meas.variance
    return IdentityOddResult(lhs=lhs, bound=bound, oddness_gap=abs(s1 - s2))


# ---------------------------------------------------------------------------
# Binary checkpoints: header (N, d as uint64, time as float64), then the
# row-major float64 position block; everything little-endian.
# ---------------------------------------------------------------------------

def save_state(state: ParticleState, path):
    with open(path, "wb") as fh:
        fh.write(np.array([state.n, state.d], dtype="<u8").tobytes())
        fh.write(np.array([state.time], dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(state.positions, dtype="<f8").tobytes())


def load_state(path) -> ParticleState:
    with open(path, "rb") as fh:
        head = fh.read(24)
        if len(head) != 24:
            raise SizeMismatch("truncated state file")
        n, d = np.frombuffer(head[:16], dtype="<u8")
        time = float(np.frombuffer(head[16:], dtype="<f8")[0])
        body = np.frombuffer(fh.read(int(n) * int(d) * 8), dtype="<f8")
        if body.size != int(n) * int(d):
            raise SizeMismatch("truncated state body")
    return ParticleState(body.reshape(int(n), int(d)).copy(), time=time)
