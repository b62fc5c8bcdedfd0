"""Coefficient bundles for McKean-Vlasov particle models.

A model collects the interaction kernels (``f`` in the drift, ``f_sigma`` in
the diffusion), the confinement drift ``u``, the outer drift ``b`` and the
diffusion ``sigma``, together with the structural constants used by the
stepsize rule and the stability diagnostics.  Structural constants are
declared, not inferred; the ``check_*`` verifiers sample them numerically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, MissingConstant, UnknownModel

__all__ = [
    "Kernel",
    "PowerLawKernel",
    "LinearKernel",
    "ZeroKernel",
    "SquareKernel",
    "CustomKernel",
    "SumKernel",
    "Coefficient",
    "ModelConstants",
    "Model",
    "builtin_model",
    "BUILTIN_MODELS",
    "compute_zeta",
    "check_odd",
    "check_one_sided_lipschitz",
    "check_additional_symmetry",
    "verify_model",
    "default_sample_points",
    "default_sample_pairs",
    "CheckReport",
]

VERIFIER_TOL = 1e-9


# ---------------------------------------------------------------------------
# Kernels: maps of the displacement x - y
# ---------------------------------------------------------------------------

class Kernel:
    """Base class for interaction kernels.

    A kernel maps displacements in R^d to R^d (drift kernels, ``output='vector'``)
    or to R^{d x l} (diffusion kernels, ``output='matrix'``).  Evaluators are
    vectorized over the leading axis: input ``(n, d)``, output ``(n, d)`` or
    ``(n, d, l)``.  All kernels satisfy the normalization ``kernel(0) = 0``.
    """

    output = "vector"
    is_odd = False
    has_additional_symmetry = False

    def __call__(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, x: np.ndarray) -> Optional[np.ndarray]:
        """Jacobian w.r.t. the displacement, shape (n, d, d), or None."""
        return None

    # (c, k) parameters when the kernel is exactly c * x * |x|^(k-1),
    # which unlocks the compiled pair-summation path.
    powerlaw_params = None


class PowerLawKernel(Kernel):
    """f(x) = c * x * |x|^(k-1); odd for every k >= 1."""

    is_odd = True

    def __init__(self, c: float, k: float, additional_symmetry: bool = False):
        if k < 1:
            raise ValueError("power-law exponent must be >= 1")
        self.c = float(c)
        self.k = float(k)
        self.has_additional_symmetry = additional_symmetry
        self.powerlaw_params = (self.c, self.k)

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x, axis=1)
        w = np.zeros_like(r)
        nz = r > 0
        w[nz] = self.c * r[nz] ** (self.k - 1.0)
        return w[:, None] * x

    def jacobian(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        n, d = x.shape
        r = np.linalg.norm(x, axis=1)
        jac = np.zeros((n, d, d))
        eye = np.eye(d)
        nz = r > 0
        jac[nz] = self.c * (r[nz] ** (self.k - 1.0))[:, None, None] * eye
        if self.k != 1.0:
            xx = x[nz, :, None] * x[nz, None, :]
            jac[nz] += self.c * (self.k - 1.0) * (r[nz] ** (self.k - 3.0))[:, None, None] * xx
        return jac

    def __repr__(self):
        return f"PowerLawKernel(c={self.c}, k={self.k})"


class LinearKernel(Kernel):
    """f(x) = A @ x for a constant matrix A (odd)."""

    is_odd = True

    def __init__(self, matrix):
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=float))

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return x @ self.matrix.T

    def jacobian(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.broadcast_to(self.matrix, (x.shape[0],) + self.matrix.shape).copy()

    def __repr__(self):
        return f"LinearKernel({self.matrix.tolist()})"


class ZeroKernel(Kernel):
    """Identically zero; used when a model has no kernel in a slot."""

    is_odd = True
    has_additional_symmetry = True

    def __init__(self, d: int, l: Optional[int] = None):
        self.d = d
        self.l = l
        self.output = "vector" if l is None else "matrix"

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        n = x.shape[0]
        if self.output == "vector":
            return np.zeros((n, self.d))
        return np.zeros((n, self.d, self.l))

    def jacobian(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.zeros((x.shape[0], self.d, self.d))

    def __repr__(self):
        return "ZeroKernel()"


class SquareKernel(Kernel):
    """Scalar diffusion kernel f_sigma(x) = c * x^2 in d = 1 (not odd)."""

    output = "matrix"
    is_odd = False

    def __init__(self, c: float = 1.0):
        self.c = float(c)

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != 1:
            raise DimensionMismatch("SquareKernel is one-dimensional")
        return (self.c * x[:, 0] ** 2)[:, None, None]

    def __repr__(self):
        return f"SquareKernel(c={self.c})"


class CustomKernel(Kernel):
    """Kernel from a user-supplied vectorized evaluator."""

    def __init__(self, fn, jacobian=None, output="vector", is_odd=False,
                 additional_symmetry=False):
        self._fn = fn
        self._jac = jacobian
        self.output = output
        self.is_odd = is_odd
        self.has_additional_symmetry = additional_symmetry

    def __call__(self, x):
        return self._fn(np.atleast_2d(np.asarray(x, dtype=float)))

    def jacobian(self, x):
        if self._jac is None:
            return None
        return self._jac(np.atleast_2d(np.asarray(x, dtype=float)))


class SumKernel(Kernel):
    """Pointwise sum of kernels with identical output shape."""

    def __init__(self, parts: Sequence[Kernel]):
        if not parts:
            raise ValueError("empty kernel sum")
        self.parts = list(parts)
        self.output = self.parts[0].output
        self.is_odd = all(p.is_odd for p in self.parts)
        self.has_additional_symmetry = all(p.has_additional_symmetry for p in self.parts)

    def __call__(self, x):
        out = self.parts[0](x)
        for p in self.parts[1:]:
            out = out + p(x)
        return out

    def jacobian(self, x):
        jacs = [p.jacobian(x) for p in self.parts]
        if any(j is None for j in jacs):
            return None
        out = jacs[0]
        for j in jacs[1:]:
            out = out + j
        return out


# ---------------------------------------------------------------------------
# Coefficients: maps of (t, x, measure summary)
# ---------------------------------------------------------------------------

@dataclass
class Coefficient:
    """Vectorized coefficient evaluator.

    ``fn(t, x, meas)`` receives the scalar time, positions ``(n, d)`` and a
    measure summary (see :class:`mvsde.measure.MeasureSummary`); it returns
    ``(n, d)`` for drifts or ``(n, d, l)`` for diffusions.  ``jacobian`` is
    the optional derivative w.r.t. x, shape ``(n, d, d)`` (drifts only).
    """

    fn: Callable
    jacobian: Optional[Callable] = None
    name: str = ""

    def __call__(self, t, x, meas):
        return self.fn(t, x, meas)


def zero_drift(d: int) -> Coefficient:
    return Coefficient(
        fn=lambda t, x, meas: np.zeros_like(x),
        jacobian=lambda t, x, meas: np.zeros((x.shape[0], d, d)),
        name="0",
    )


def diag_cubic_drift(coeffs) -> Coefficient:
    """u(x)_i = c_i * x_i^3 per coordinate (c scalar or length-d)."""
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))

    def fn(t, x, meas):
        return c * x ** 3

    def jac(t, x, meas):
        n, d = x.shape
        out = np.zeros((n, d, d))
        idx = np.arange(d)
        out[:, idx, idx] = 3.0 * c * x ** 2
        return out

    return Coefficient(fn=fn, jacobian=jac, name="diag-cubic")


def powerlaw_drift(c: float, k: float) -> Coefficient:
    """u(x) = c * x * |x|^(k-1) acting on the position itself."""
    kern = PowerLawKernel(c, k)
    return Coefficient(
        fn=lambda t, x, meas: kern(x),
        jacobian=lambda t, x, meas: kern.jacobian(x),
        name=f"powerlaw({c},{k})",
    )


def linear_drift(matrix) -> Coefficient:
    a = np.atleast_2d(np.asarray(matrix, dtype=float))

    def fn(t, x, meas):
        return x @ a.T

    def jac(t, x, meas):
        return np.broadcast_to(a, (x.shape[0],) + a.shape).copy()

    return Coefficient(fn=fn, jacobian=jac, name="linear")


def const_drift(vec) -> Coefficient:
    v = np.atleast_1d(np.asarray(vec, dtype=float))

    def fn(t, x, meas):
        return np.broadcast_to(v, x.shape).copy()

    def jac(t, x, meas):
        d = x.shape[1]
        return np.zeros((x.shape[0], d, d))

    return Coefficient(fn=fn, jacobian=jac, name="const")


def const_sigma(matrix, l: Optional[int] = None) -> Coefficient:
    a = np.atleast_2d(np.asarray(matrix, dtype=float))

    def fn(t, x, meas):
        return np.broadcast_to(a, (x.shape[0],) + a.shape).copy()

    return Coefficient(fn=fn, name="const-sigma")


def diag_linear_sigma(c: float) -> Coefficient:
    """sigma(x) = diag(c * x_i), square diffusion (l = d)."""

    def fn(t, x, meas):
        n, d = x.shape
        out = np.zeros((n, d, d))
        idx = np.arange(d)
        out[:, idx, idx] = c * x
        return out

    return Coefficient(fn=fn, name="diag-linear-sigma")


def sum_coefficients(parts: Sequence[Coefficient]) -> Coefficient:
    parts = list(parts)
    if len(parts) == 1:
        return parts[0]

    def fn(t, x, meas):
        out = parts[0](t, x, meas)
        for p in parts[1:]:
            out = out + p(t, x, meas)
        return out

    jac = None
    if all(p.jacobian is not None for p in parts):
        def jac(t, x, meas):
            out = parts[0].jacobian(t, x, meas)
            for p in parts[1:]:
                out = out + p.jacobian(t, x, meas)
            return out

    return Coefficient(fn=fn, jacobian=jac, name="+".join(p.name for p in parts))


# ---------------------------------------------------------------------------
# Constants and the model bundle
# ---------------------------------------------------------------------------

@dataclass
class ModelConstants:
    """Structural constants declared for a coefficient bundle.

    ``L_f1`` is the one-sided Lipschitz constant of the (f, f_sigma) pair,
    ``L_us1``/``L_us2`` the state/measure constants of the (u, sigma) pair,
    ``L_b1``..``L_b3`` the Lipschitz constants of b, ``q`` the polynomial
    growth degree and ``m`` the moment order (m > 2).
    """

    L_f1: float = 0.0
    L_us1: float = 0.0
    L_us2: float = 0.0
    L_b1: float = 0.0
    L_b2: float = 0.0
    L_b3: float = 0.0
    q: float = 0.0
    m: float = 3.0
    L3: Optional[float] = 0.0  # additional-symmetry constant of f

    def __post_init__(self):
        if self.m <= 2:
            raise ValueError("moment order m must exceed 2")
        if self.q < 0:
            raise ValueError("growth degree q must be nonnegative")


def compute_zeta(constants: ModelConstants) -> float:
    """Stepsize-rule constant: h must stay below min(1, 1/zeta) when zeta > 0.

    zeta = max{ 2(L_f1 + L_us1), 2(2*max(L_f1, 0) + L_us1 + L_us2), 0 }.
    """
    for name in ("L_f1", "L_us1", "L_us2"):
        val = getattr(constants, name, None)
        if val is None:
            raise MissingConstant(f"constant {name} is not declared")
    lf_plus = max(constants.L_f1, 0.0)
    return max(
        2.0 * (constants.L_f1 + constants.L_us1),
        2.0 * (2.0 * lf_plus + constants.L_us1 + constants.L_us2),
        0.0,
    )


@dataclass
class Model:
    """Complete coefficient bundle of one interacting-particle model."""

    name: str
    d: int
    l: int
    f: Kernel
    f_sigma: Kernel
    u: Coefficient
    b: Coefficient
    sigma: Coefficient
    constants: ModelConstants

    def __post_init__(self):
        if self.d < 1 or self.l < 1:
            raise DimensionMismatch("d and l must be positive")
        # zeta must be finite for the stepsize rule to make sense
        if not np.isfinite(compute_zeta(self.constants)):
            raise ValueError("zeta computed from the declared constants is not finite")

    def zeta(self) -> float:
        return compute_zeta(self.constants)


# ---------------------------------------------------------------------------
# Built-in models
# ---------------------------------------------------------------------------

def _double_well(d):
    if d != 1:
        raise DimensionMismatch("double-well is one-dimensional")

    def sig(t, x, meas):
        return (x[:, 0] + 0.25 * x[:, 0] ** 2)[:, None, None]

    return Model(
        name="double-well", d=1, l=1,
        f=PowerLawKernel(-1.0, 3, additional_symmetry=True),
        f_sigma=ZeroKernel(1, 1),
        u=diag_cubic_drift(-0.25),
        b=linear_drift([[1.0]]),
        sigma=Coefficient(fn=sig, name="x + x^2/4"),
        # m close to 2 is the only range in which the (u, sigma) pair of this
        # model admits a finite one-sided constant; the sup sits at x = x' = 28.
        constants=ModelConstants(L_f1=0.0, L_us1=42.0, L_us2=0.0,
                                 L_b1=1.0, L_b2=1.0, L_b3=0.0, q=2.0, m=2.4),
    )


def _invariant(d):
    if d != 1:
        raise DimensionMismatch("invariant is one-dimensional")

    def sig(t, x, meas):
        return (0.25 * (1.0 - x[:, 0] ** 2))[:, None, None]

    return Model(
        name="invariant", d=1, l=1,
        f=PowerLawKernel(-1.0, 3, additional_symmetry=True),
        f_sigma=ZeroKernel(1, 1),
        u=diag_cubic_drift(-1.0),
        b=linear_drift([[-1.0]]),
        sigma=Coefficient(fn=sig, name="(1 - x^2)/4"),
        constants=ModelConstants(L_f1=0.0, L_us1=0.0, L_us2=0.0,
                                 L_b1=1.0, L_b2=-1.0, L_b3=0.0, q=2.0, m=6.0),
    )


def _vdp2d(d):
    if d != 2:
        raise DimensionMismatch("vdp2d is two-dimensional")

    def sig(t, x, meas):
        n = x.shape[0]
        out = np.zeros((n, 2, 2))
        out[:, 0, 0] = 1.0 + 0.25 * x[:, 0] ** 2
        return out

    return Model(
        name="vdp2d", d=2, l=2,
        f=PowerLawKernel(-1.0, 3, additional_symmetry=True),
        f_sigma=ZeroKernel(2, 2),
        u=diag_cubic_drift([-1.0 / 3.0, 0.0]),
        b=linear_drift([[1.0, -1.0], [1.0, 0.0]]),
        sigma=Coefficient(fn=sig, name="vdp-sigma"),
        constants=ModelConstants(L_f1=0.0, L_us1=0.0, L_us2=0.0,
                                 L_b1=3.0, L_b2=1.0, L_b3=0.0, q=2.0, m=3.0),
    )


def _supermeasure(d, case):
    if d != 1:
        raise DimensionMismatch("supermeasure models are one-dimensional")

    if case == 1:
        f_sigma = SquareKernel(1.0)

        def sig(t, x, meas):
            return (x[:, 0] + 0.25 * x[:, 0] ** 2)[:, None, None]
    else:
        f_sigma = ZeroKernel(1, 1)

        def sig(t, x, meas):
            # variance-type measure term: int int (y - z)^2 mu(dy) mu(dz)
            return (x[:, 0] + 0.25 * x[:, 0] ** 2 + 2.0 * meas.variance)[:, None, None]

    return Model(
        name=f"supermeasure-case{case}", d=1, l=1,
        f=PowerLawKernel(-1.0, 3, additional_symmetry=True),
        f_sigma=f_sigma,
        u=diag_cubic_drift(-0.25),
        b=linear_drift([[1.0]]),
        sigma=Coefficient(fn=sig, name=f"case{case}-sigma"),
        # aspirational constants: the declared bound is known not to hold for
        # these coefficient pairs, and verify_model reports exactly that.
        constants=ModelConstants(L_f1=0.0, L_us1=0.0, L_us2=0.0,
                                 L_b1=1.0, L_b2=1.0, L_b3=0.0, q=2.0, m=6.0),
    )


def _poc_dd(d):
    if d < 2:
        raise DimensionMismatch("poc-dd needs d >= 2")

    def sig(t, x, meas):
        n = x.shape[0]
        out = np.broadcast_to(x[:, None, :], (n, d, d)).copy()
        idx = np.arange(d)
        out[:, idx, idx] += 0.25 * x ** 2
        return out

    return Model(
        name="poc-dd", d=d, l=d,
        f=PowerLawKernel(-1.0, 3, additional_symmetry=True),
        f_sigma=ZeroKernel(d, d),
        u=diag_cubic_drift(-1.0 / 3.0),
        b=linear_drift(np.eye(d)),
        sigma=Coefficient(fn=sig, name="poc-sigma"),
        constants=ModelConstants(L_f1=0.0, L_us1=3.0 * (d - 1) + 12.0, L_us2=0.0,
                                 L_b1=1.0, L_b2=1.0, L_b3=0.0, q=2.0, m=2.5),
    )


BUILTIN_MODELS = {
    "double-well": (_double_well, (1,)),
    "invariant": (_invariant, (1,)),
    "vdp2d": (_vdp2d, (2,)),
    "supermeasure-case1": (lambda d: _supermeasure(d, 1), (1,)),
    "supermeasure-case2": (lambda d: _supermeasure(d, 2), (1,)),
    "poc-dd": (_poc_dd, None),  # any d >= 2
}


def builtin_model(name: str, d: int) -> Model:
    """Construct one of the built-in coefficient bundles.

    Parameters
    ----------
    name : one of ``double-well``, ``invariant``, ``vdp2d``,
        ``supermeasure-case1``, ``supermeasure-case2``, ``poc-dd``.
    d : state dimension; fixed for all models except ``poc-dd`` (any d >= 2).
    """
    if name not in BUILTIN_MODELS:
        raise UnknownModel(f"unknown model '{name}' (known: {sorted(BUILTIN_MODELS)})")
    factory, dims = BUILTIN_MODELS[name]
    if dims is not None and d not in dims:
        raise DimensionMismatch(f"model '{name}' requires d in {dims}, got {d}")
    return factory(d)


# ---------------------------------------------------------------------------
# Sampling verifiers for the structural assumptions
# ---------------------------------------------------------------------------

@dataclass
class CheckReport:
    """Outcome of a sampling verifier: max violation over the sample set."""

    name: str
    max_violation: float
    passed: bool
    tolerance: float
    detail: str = ""

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        return f"[{status}] {self.name}: max violation {self.max_violation:.3e} (tol {self.tolerance:.1e}) {self.detail}"


def default_sample_points(d, n=1000, half_width=10.0, seed=42):
    rng = np.random.default_rng(seed)
    return rng.uniform(-half_width, half_width, size=(n, d))


def default_sample_pairs(d, n=10_000, half_width=10.0, seed=42):
    """Uniform random pairs plus a deterministic grid of 11^min(d,2) points."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-half_width, half_width, size=(n, d))
    y = rng.uniform(-half_width, half_width, size=(n, d))
    grid_1d = np.linspace(-half_width, half_width, 11)
    if d == 1:
        g = grid_1d[:, None]
    else:
        a, b = np.meshgrid(grid_1d, grid_1d, indexing="ij")
        g = np.zeros((grid_1d.size ** 2, d))
        g[:, 0] = a.ravel()
        g[:, 1] = b.ravel()
    gx = np.repeat(g, g.shape[0], axis=0)
    gy = np.tile(g, (g.shape[0], 1))
    return np.vstack([x, gx]), np.vstack([y, gy])


def check_odd(f: Kernel, samples, tolerance: float = VERIFIER_TOL) -> CheckReport:
    """Report max |f(x) + f(-x)| over the samples."""
    x = np.atleast_2d(np.asarray(samples, dtype=float))
    s = f(x) + f(-x)
    viol = np.linalg.norm(s.reshape(s.shape[0], -1), axis=1)
    worst = float(np.max(viol)) if viol.size else 0.0
    return CheckReport("odd-kernel", worst, worst <= tolerance, tolerance)


def check_one_sided_lipschitz(f: Kernel, f_sigma: Kernel, m: float, L: float,
                              sample_pairs=None, d: int = 1,
                              tolerance: float = VERIFIER_TOL) -> CheckReport:
    """One-sided Lipschitz / monotonicity check for the (f, f_sigma) pair.

    Reports the max over pairs of
    ``<x - y, f(x) - f(y)> + 2(m-1) |f_sigma(x) - f_sigma(y)|^2 - L |x - y|^2``.
    """
    if m <= 2:
        raise ValueError("m must exceed 2")
    if sample_pairs is None:
        sample_pairs = default_sample_pairs(d)
    x, y = (np.atleast_2d(np.asarray(s, dtype=float)) for s in sample_pairs)
    dx = x - y
    df = f(x) - f(y)
    lhs = np.sum(dx * df, axis=1)
    ds = f_sigma(x) - f_sigma(y)
    lhs = lhs + 2.0 * (m - 1.0) * np.sum(ds.reshape(ds.shape[0], -1) ** 2, axis=1)
    vals = lhs - L * np.sum(dx ** 2, axis=1)
    worst = float(np.max(vals)) if vals.size else 0.0
    return CheckReport("one-sided-lipschitz", worst, worst <= tolerance, tolerance,
                       detail=f"(m={m}, L={L})")


def check_additional_symmetry(f: Kernel, p_values, L3: float,
                              sample_pairs=None, d: int = 1,
                              tolerance: float = VERIFIER_TOL) -> CheckReport:
    """Check (|x|^{p-2} - |y|^{p-2}) <x + y, f(x - y)>  <=  L3 (|x|^p + |y|^p)."""
    if sample_pairs is None:
        sample_pairs = default_sample_pairs(d)
    x, y = (np.atleast_2d(np.asarray(s, dtype=float)) for s in sample_pairs)
    fxy = f(x - y)
    inner = np.sum((x + y) * fxy, axis=1)
    nx = np.linalg.norm(x, axis=1)
    ny = np.linalg.norm(y, axis=1)
    worst = -np.inf
    for p in np.atleast_1d(p_values):
        if p <= 2:
            raise ValueError("each p must exceed 2")
        vals = (nx ** (p - 2) - ny ** (p - 2)) * inner - L3 * (nx ** p + ny ** p)
        worst = max(worst, float(np.max(vals)))
    return CheckReport("additional-symmetry", worst, worst <= tolerance, tolerance,
                       detail=f"(p in {[float(p) for p in np.atleast_1d(p_values)]}, L3={L3})")


def _coefficient_pair_check(model: Model, tolerance: float) -> CheckReport:
    """One-sided check for the (u, sigma) pair at the declared L_us1.

    Same shape as the kernel check but on positions instead of displacements;
    the measure argument is frozen at a point mass in zero.
    """
    from .measure import MeasureSummary  # local import, no cycle at call time

    x, y = default_sample_pairs(model.d)
    meas = MeasureSummary.from_positions(np.zeros((1, model.d)))
    m = model.constants.m
    ux = model.u(0.0, x, meas)
    uy = model.u(0.0, y, meas)
    sx = model.sigma(0.0, x, meas)
    sy = model.sigma(0.0, y, meas)
    dx = x - y
    vals = np.sum(dx * (ux - uy), axis=1)
    ds = (sx - sy).reshape(x.shape[0], -1)
    vals = vals + 2.0 * (m - 1.0) * np.sum(ds ** 2, axis=1)
    vals = vals - model.constants.L_us1 * np.sum(dx ** 2, axis=1)
    worst = float(np.max(vals))
    return CheckReport("drift-diffusion-pair", worst, worst <= tolerance, tolerance,
                       detail=f"(m={m}, L_us1={model.constants.L_us1})")


def verify_model(model: Model, tolerance: float = VERIFIER_TOL,
                 p_values=None) -> list[CheckReport]:
    """Run every applicable sampling verifier against the declared constants.

    Failures are reported, never raised: some models are deliberately outside
    the declared bounds and still simulate fine.
    """
    reports = []
    pts = default_sample_points(model.d)
    pairs = default_sample_pairs(model.d)
    m = model.constants.m
    if p_values is None:
        p_values = [p for p in (3.0, 4.0) if p <= m] or [2.0 + 0.5 * (m - 2.0)]
    if model.f.is_odd:
        reports.append(check_odd(model.f, pts, tolerance))
    reports.append(check_one_sided_lipschitz(
        model.f, model.f_sigma, m, model.constants.L_f1,
        sample_pairs=pairs, tolerance=tolerance))
    if model.f.has_additional_symmetry and model.constants.L3 is not None:
        reports.append(check_additional_symmetry(
            model.f, [p for p in p_values if p > 2], model.constants.L3,
            sample_pairs=pairs, tolerance=tolerance))
    reports.append(_coefficient_pair_check(model, tolerance))
    return reports
