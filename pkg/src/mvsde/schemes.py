"""One-step integrators for the interacting particle system.

The split-step method solves the drift-implicit stage Y = X + h V(Y) (outer
iteration on the empirical measure, inner per-particle Newton), then takes
the explicit stochastic step from the stage configuration.  Two taming
baselines and plain Euler-Maruyama are provided for comparison; the latter
is expected to blow up on super-linear models and serves as a negative
control.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .brownian import BrownianLattice
from .errors import ConfigInvalid, NonConvergence, NonFiniteError
from .measure import (MeasureSummary, ParticleState, convolve_all,
                      convolve_jacobian, empirical_moment, histogram_density)
from .model import Model, ZeroKernel, compute_zeta

__all__ = [
    "SolverConfig",
    "SchemeConfig",
    "StageState",
    "solve_implicit_stage",
    "ssm_step",
    "taming_step",
    "euler_step",
    "simulate",
    "make_stepper",
    "SimulationResult",
    "BlowupInfo",
    "Observer",
    "SnapshotObserver",
    "MomentObserver",
    "DensityObserver",
    "SCHEME_KINDS",
]

SCHEME_KINDS = ("ssm", "taming-in", "taming-out", "euler")


@dataclass
class SolverConfig:
    """Tolerances of the implicit-stage solver.

    ``tol`` is relative to 1 + max_i |X_i|.  The outer loop iterates on the
    empirical measure; ``max_newton`` caps the per-sweep Newton iterations on
    the frozen measure.
    """

    tol: float = 1e-12
    max_outer: int = 100
    max_newton: int = 50
    damping: float = 1.0

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_outer < 1 or self.max_newton < 1:
            raise ValueError("iteration caps must be >= 1")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")


@dataclass
class SchemeConfig:
    """Scheme kind plus the time grid: M steps of size h with M h = T.

    ``tame_confinement`` additionally tames the confinement drift u inside
    the taming schemes.  Off by default: taming u removes the pull-back that
    keeps the explicit schemes alive, and with it both variants diverge even
    from benign starts.
    """

    kind: str
    h: float
    T: float
    alpha: float = 0.5
    solver: SolverConfig = field(default_factory=SolverConfig)
    enforce_h_constraint: bool = True
    tame_confinement: bool = False

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ConfigInvalid(f"unknown scheme kind '{self.kind}'")
        if self.h <= 0 or self.T < 0:
            raise ConfigInvalid("h must be positive and T nonnegative")
        m = int(round(self.T / self.h)) if self.T > 0 else 0
        if abs(m * self.h - self.T) > 8.0 * np.finfo(float).eps * max(self.T, 1.0):
            raise ConfigInvalid(f"M*h != T: h={self.h!r} does not divide T={self.T!r}")
        self.M = m
        if self.kind.startswith("taming") and not 0 < self.alpha <= 1:
            raise ConfigInvalid("taming exponent alpha must lie in (0, 1]")

    def check_h_constraint(self, model: Model):
        """Stepsize rule h < min(1, 1/zeta).  Soft in theory; enforced only
        when the flag is on."""
        if not self.enforce_h_constraint:
            return
        zeta = compute_zeta(model.constants)
        cap = 1.0 if zeta <= 0 else min(1.0, 1.0 / zeta)
        if self.h >= cap:
            raise ConfigInvalid(
                f"h={self.h!r} violates the stepsize rule h < min(1, 1/zeta) "
                f"= {cap!r} (zeta={zeta!r}); pass enforce_h_constraint=False "
                "to override")


@dataclass
class StageState:
    """Solution of the implicit stage for one step."""

    y_star: np.ndarray
    residual_norm: float
    iterations: int


def _row_norm_max(arr) -> float:
    return float(np.max(np.sqrt(np.sum(arr * arr, axis=1))))


def _stage_residual(model, y, x, h, meas):
    conv = convolve_all(model.f, y, validate=False)
    uval = model.u(0.0, y, meas)
    return y - x - h * (conv + uval)


def _frozen_residual(model, z, x, base, h, meas):
    conv = convolve_all(model.f, z, base, skip_self=True, validate=False)
    uval = model.u(0.0, z, meas)
    return z - x - h * (conv + uval)


def _frozen_jacobian(model, z, x, base, h, meas):
    """Jacobian of the frozen-measure residual map; finite differences when
    no analytic derivative is available."""
    n, d = z.shape
    jc = convolve_jacobian(model.f, z, base, skip_self=True)
    if model.u.jacobian is not None:
        ju = model.u.jacobian(0.0, z, meas)
    else:
        ju = None
    if jc is None or ju is None:
        eye = np.eye(d)
        jac = np.empty((n, d, d))
        for c in range(d):
            eps = 1e-6 * (1.0 + np.abs(z[:, c]))
            zp = z.copy()
            zp[:, c] += eps
            zm = z.copy()
            zm[:, c] -= eps
            rp = _frozen_residual(model, zp, x, base, h, meas)
            rm = _frozen_residual(model, zm, x, base, h, meas)
            jac[:, :, c] = (rp - rm) / (2.0 * eps[:, None])
        return jac
    jac = -h * (jc + ju)
    jac[:, np.arange(d), np.arange(d)] += 1.0
    return jac


def _cubic_moments(y):
    """Moment statistics that carry the full measure dependence of a cubic
    kernel's empirical convolution."""
    n = y.shape[0]
    nsq = np.sum(y * y, axis=1)
    m1 = y.mean(axis=0)
    s2 = float(nsq.mean())
    m2 = y.T @ y / n
    m3v = (y * nsq[:, None]).mean(axis=0)
    return m1, s2, m2, m3v


def _cubic_conv(c, y, m1, s2, m2, m3v):
    """(1/N) sum_j c (y_i - y_j)|y_i - y_j|^2 written in moment form; exact
    (the pair sum expands termwise into these four statistics)."""
    nsq = np.sum(y * y, axis=1)
    return c * (y * nsq[:, None] - 2.0 * (y @ m1)[:, None] * y - nsq[:, None] * m1
                + s2 * y + 2.0 * (y @ m2) - m3v)


def _solve_stage_cubic(model, x, h, y0, scale):
    """Stage solve specialized to cubic kernels: the measure enters only
    through four moment statistics, so each sweep costs O(N d^2) instead of
    O(N^2).  Returns a candidate configuration; the caller re-checks it
    against the contractual pair-sum residual.
    """
    c = model.f.powerlaw_params[0]
    d = x.shape[1]
    eye = np.eye(d)
    idx = np.arange(d)
    inner_tol = 1e-14 * scale
    y = y0.copy()
    theta_prev = None
    for _sweep in range(20000):
        frozen = y.copy()
        meas = MeasureSummary(frozen)
        m1, s2, m2, m3v = _cubic_moments(frozen)
        theta = np.concatenate([m1, [s2], m2.ravel(), m3v])
        if theta_prev is not None and \
                np.max(np.abs(theta - theta_prev)) <= 1e-15 * (1.0 + np.max(np.abs(theta))):
            break
        theta_prev = theta
        for _ in range(50):
            resid = y - x - h * (_cubic_conv(c, y, m1, s2, m2, m3v)
                                 + model.u(0.0, y, meas))
            if not np.all(np.isfinite(resid)):
                raise NonFiniteError("implicit-stage iterate diverged")
            if _row_norm_max(resid) <= inner_tol:
                break
            nsq = np.sum(y * y, axis=1)
            jc = c * (nsq[:, None, None] * eye
                      + 2.0 * y[:, :, None] * y[:, None, :]
                      - 2.0 * y[:, :, None] * m1[None, None, :]
                      - 2.0 * (y @ m1)[:, None, None] * eye
                      - 2.0 * m1[None, :, None] * y[:, None, :]
                      + s2 * eye + 2.0 * m2[None, :, :])
            jac = -h * (jc + model.u.jacobian(0.0, y, meas))
            jac[:, idx, idx] += 1.0
            y = y - np.linalg.solve(jac, resid[..., None])[..., 0]
    return y


def solve_implicit_stage(model: Model, state: ParticleState, h: float,
                         solver: Optional[SolverConfig] = None,
                         initial: Optional[np.ndarray] = None) -> StageState:
    """Solve Y_i = X_i + h v(Y_i, mu^Y) for the whole configuration.

    Outer sweeps freeze the empirical measure at the current iterate; the
    per-particle equations are then decoupled and solved by damped Newton
    with analytic jacobians where the model supplies them.  Cubic power-law
    kernels take a moment-reduced shortcut first (same unique fixed point,
    O(N) per sweep); the configuration it produces still has to pass the
    pair-sum residual check below.  If the outer residual stalls, the solver
    degrades to a damped global fixed point before giving up with
    :class:`NonConvergence`.

    Returns the stage configuration with its residual norm and the number of
    outer sweeps used.
    """
    solver = solver or SolverConfig()
    x = state.positions
    scale = 1.0 + _row_norm_max(x)
    y = x.copy() if initial is None else np.array(initial, dtype=float).reshape(x.shape)
    if (model.f.powerlaw_params is not None and model.f.powerlaw_params[1] == 3.0
            and model.u.jacobian is not None):
        y = _solve_stage_cubic(model, x, h, y, scale)
    last_res = np.inf
    stalled = 0
    fallback = False
    res = np.inf
    for outer in range(1, solver.max_outer + 1):
        meas = MeasureSummary(y)
        resid = _stage_residual(model, y, x, h, meas)
        if not np.all(np.isfinite(resid)):
            raise NonFiniteError("implicit-stage iterate diverged")
        res = _row_norm_max(resid)
        if res <= solver.tol * scale:
            return StageState(y_star=y, residual_norm=res, iterations=outer)
        if res > 0.9 * last_res:
            stalled += 1
            if stalled >= 5:
                fallback = True
        else:
            stalled = 0
        last_res = res
        if fallback:
            y = y - 0.5 * resid
            continue
        base = y.copy()
        z = y
        r = resid  # frozen residual at z = base equals the full residual
        for _ in range(solver.max_newton):
            jac = _frozen_jacobian(model, z, x, base, h, meas)
            try:
                delta = np.linalg.solve(jac, r[..., None])[..., 0]
            except np.linalg.LinAlgError as exc:
                raise NonConvergence(f"singular stage jacobian: {exc}",
                                     residual=res, iterations=outer) from exc
            z = z - solver.damping * delta
            if not np.all(np.isfinite(z)):
                raise NonFiniteError("implicit-stage iterate diverged")
            r = _frozen_residual(model, z, x, base, h, meas)
            if _row_norm_max(r) <= 0.5 * solver.tol * scale:
                break
        y = z
    raise NonConvergence(
        f"implicit stage did not converge: residual {res:.3e} after "
        f"{solver.max_outer} sweeps", residual=res, iterations=solver.max_outer)


def _diffusion(model, t, y, meas):
    sig = model.sigma(t, y, meas)
    if not isinstance(model.f_sigma, ZeroKernel):
        sig = sig + convolve_all(model.f_sigma, y, validate=False)
    return sig


def _check_finite(arr, step=None, time=None, what="state"):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"non-finite {what}", step=step, time=time)


def ssm_step(model: Model, state: ParticleState, dw: np.ndarray, t: float,
             h: float, solver: Optional[SolverConfig] = None,
             stage_initial: Optional[np.ndarray] = None) -> ParticleState:
    """One split-step update: implicit drift stage, then the explicit
    stochastic step evaluated at the stage configuration."""
    stage = solve_implicit_stage(model, state, h, solver, initial=stage_initial)
    y = stage.y_star
    meas = MeasureSummary(y)
    bval = model.b(t, y, meas)
    sig = _diffusion(model, t, y, meas)
    x_new = y + h * bval + np.einsum("ndl,nl->nd", sig, dw)
    _check_finite(x_new, step=state.n_step_index, time=t + h)
    return ParticleState(x_new, time=t + h, n_step_index=state.n_step_index + 1)


def _tame(values: np.ndarray, factor: float) -> np.ndarray:
    """g -> g / (1 + factor * |g|) rowwise, |.| the Euclidean/Frobenius norm."""
    flat = values.reshape(values.shape[0], -1)
    norms = np.sqrt(np.sum(flat * flat, axis=1))
    scale = 1.0 / (1.0 + factor * norms)
    return values * scale.reshape((-1,) + (1,) * (values.ndim - 1))


class _TamedKernel:
    """Per-pair tamed wrapper used by the taming-in variant."""

    def __init__(self, kernel, factor):
        self.kernel = kernel
        self.factor = factor
        self.output = kernel.output
        self.is_odd = kernel.is_odd
        self.powerlaw_params = None

    def __call__(self, x):
        return _tame(self.kernel(x), self.factor)


def _tamed_kernel_conv(kernel, x, factor):
    """Convolution of the per-pair tamed kernel; compiled path for power
    laws, generic pass otherwise."""
    from . import _fast
    if kernel.powerlaw_params is not None and _fast.HAVE_NUMBA \
            and kernel.output == "vector":
        c, k = kernel.powerlaw_params
        pos = np.ascontiguousarray(x)
        return _fast.powerlaw_conv_tamed(pos, pos, c, k, factor)
    return convolve_all(_TamedKernel(kernel, factor), x, validate=False)


def taming_step(model: Model, state: ParticleState, dw: np.ndarray, t: float,
                h: float, alpha: float, m_steps: int, variant: str,
                tame_u: bool = False) -> ParticleState:
    """Explicit Euler update with tamed super-linear pieces.

    ``variant='in'`` tames the kernels pointwise before the convolution;
    ``variant='out'`` tames the convolved values.  The confinement drift u
    stays untamed by default: its pull-back is what keeps the explicit
    update alive, and taming it (``tame_u=True``, in its own magnitude) makes
    both variants diverge even from benign starts.  b is never tamed.
    """
    if variant not in ("in", "out"):
        raise ConfigInvalid(f"unknown taming variant '{variant}'")
    factor = float(m_steps) ** alpha
    x = state.positions
    meas = MeasureSummary(x)
    if variant == "in":
        conv_f = _tamed_kernel_conv(model.f, x, factor)
    else:
        conv_f = _tame(convolve_all(model.f, x, validate=False), factor)
    uval = model.u(0.0, x, meas)
    if tame_u:
        uval = _tame(uval, factor)
    drift = conv_f + uval + model.b(t, x, meas)
    sig = model.sigma(t, x, meas)
    if not isinstance(model.f_sigma, ZeroKernel):
        if variant == "in":
            sig = sig + convolve_all(_TamedKernel(model.f_sigma, factor), x, validate=False)
        else:
            sig = sig + _tame(convolve_all(model.f_sigma, x, validate=False), factor)
    x_new = x + h * drift + np.einsum("ndl,nl->nd", sig, dw)
    _check_finite(x_new, step=state.n_step_index, time=t + h)
    return ParticleState(x_new, time=t + h, n_step_index=state.n_step_index + 1)


def euler_step(model: Model, state: ParticleState, dw: np.ndarray, t: float,
               h: float) -> ParticleState:
    """Plain explicit Euler-Maruyama with untamed coefficients."""
    x = state.positions
    meas = MeasureSummary(x)
    drift = convolve_all(model.f, x, validate=False) + model.u(0.0, x, meas) \
        + model.b(t, x, meas)
    sig = _diffusion(model, t, x, meas)
    x_new = x + h * drift + np.einsum("ndl,nl->nd", sig, dw)
    _check_finite(x_new, step=state.n_step_index, time=t + h)
    return ParticleState(x_new, time=t + h, n_step_index=state.n_step_index + 1)


def make_stepper(model: Model, scheme: SchemeConfig):
    """Bind a scheme configuration to its one-step map (state, dW, t) -> state."""
    if scheme.kind == "ssm":
        def step(state, dw, t):
            return ssm_step(model, state, dw, t, scheme.h, scheme.solver)
    elif scheme.kind in ("taming-in", "taming-out"):
        variant = scheme.kind.split("-")[1]

        def step(state, dw, t):
            return taming_step(model, state, dw, t, scheme.h, scheme.alpha,
                               scheme.M, variant, tame_u=scheme.tame_confinement)
    elif scheme.kind == "euler":
        def step(state, dw, t):
            return euler_step(model, state, dw, t, scheme.h)
    else:  # pragma: no cover - guarded by SchemeConfig
        raise ConfigInvalid(f"unknown scheme kind '{scheme.kind}'")
    return step


# ---------------------------------------------------------------------------
# Observers and the simulation driver
# ---------------------------------------------------------------------------

class Observer:
    """Collects data along a trajectory; ``observe`` runs after every step
    (and once on the initial state)."""

    def observe(self, step: int, t: float, state: ParticleState):
        raise NotImplementedError


class SnapshotObserver(Observer):
    """Stores position copies at selected times ('all' keeps every step)."""

    def __init__(self, times="all", h: Optional[float] = None):
        self.snapshots: dict[float, np.ndarray] = {}
        self._all = times == "all"
        self._steps = None
        if not self._all:
            if h is None:
                raise ValueError("snapshot times need the stepsize h")
            self._steps = {int(round(tt / h)) for tt in times}

    def observe(self, step, t, state):
        if self._all or step in self._steps:
            self.snapshots[t] = state.positions.copy()


class MomentObserver(Observer):
    """Empirical |x|^p moments at every step for each requested p."""

    def __init__(self, p_values=(2.0,)):
        self.p_values = tuple(float(p) for p in p_values)
        self.times: list[float] = []
        self.moments: dict[float, list[float]] = {p: [] for p in self.p_values}

    def observe(self, step, t, state):
        self.times.append(t)
        for p in self.p_values:
            self.moments[p].append(empirical_moment(state, p))


class DensityObserver(Observer):
    """Histogram snapshots at selected times."""

    def __init__(self, times, h, axis=0, bins=60, value_range=None):
        self._steps = {int(round(tt / h)): tt for tt in times}
        self.axis = axis
        self.bins = bins
        self.value_range = value_range
        self.tables = {}

    def observe(self, step, t, state):
        if step in self._steps:
            self.tables[t] = histogram_density(state, axis=self.axis,
                                               bins=self.bins,
                                               value_range=self.value_range)


@dataclass
class BlowupInfo:
    step: int
    time: float
    kind: str
    message: str


@dataclass
class SimulationResult:
    """Trajectory handle: final state, observer payloads, blow-up record."""

    final_state: ParticleState
    observers: Sequence[Observer]
    blowup: Optional[BlowupInfo]
    lineage: dict

    @property
    def diverged(self) -> bool:
        return self.blowup is not None


def simulate(model: Model, scheme: SchemeConfig, lattice: BrownianLattice,
             x0: ParticleState, observers: Iterable[Observer] = (),
             on_blowup: str = "record", tags: Optional[dict] = None) -> SimulationResult:
    """Drive M steps of the configured scheme over the increment lattice.

    A non-finite state or a solver failure ends the run; with
    ``on_blowup='record'`` (the default harness behaviour) the event is
    recorded on the result and the trajectory is truncated, with
    ``on_blowup='raise'`` it propagates with the step index attached.
    """
    if x0.n != lattice.n_particles:
        raise ConfigInvalid(
            f"x0 has {x0.n} particles but the lattice carries {lattice.n_particles}")
    if x0.d != model.d:
        raise ConfigInvalid(f"x0 dimension {x0.d} != model dimension {model.d}")
    if lattice.l != model.l:
        raise ConfigInvalid(f"lattice noise dimension {lattice.l} != model l {model.l}")
    scheme.check_h_constraint(model)
    observers = list(observers)
    step_fn = make_stepper(model, scheme)
    state = x0.copy()
    blowup = None
    for obs in observers:
        obs.observe(0, 0.0, state)
    increments = lattice.iter_coarse(scheme.h, scheme.M)
    for n, dw in enumerate(increments):
        t = n * scheme.h
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                state = step_fn(state, dw, t)
        except (NonFiniteError, NonConvergence) as exc:
            blowup = BlowupInfo(step=n, time=t, kind=type(exc).__name__,
                                message=str(exc))
            if on_blowup == "raise":
                raise NonFiniteError(f"step {n} (t={t}): {exc}", step=n, time=t) from exc
            break
        # keep grid times canonical (t_n = n * h, not an accumulated sum)
        state.time = (n + 1) * scheme.h
        with np.errstate(over="ignore", invalid="ignore"):
            for obs in observers:
                obs.observe(n + 1, state.time, state)
    lineage = {
        "seed": lattice.seed,
        "h_fine": lattice.h_fine,
        "model": model.name,
        "scheme": scheme.kind,
        "h": scheme.h,
        "T": scheme.T,
        "N": x0.n,
        "d": model.d,
    }
    if tags:
        lineage.update(tags)
    return SimulationResult(final_state=state, observers=observers,
                            blowup=blowup, lineage=lineage)
