"""Error estimators, convergence-rate regression and contraction diagnostics.

Expectations are single-run empirical means over the N particles; with
common random numbers across stepsizes and particle counts the estimators
isolate discretization and particle-count error.  Rate fits are ordinary
least squares on log-log axes; runs that ended non-finite are excluded and
listed, never silently dropped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .brownian import BrownianLattice
from .errors import CouplingViolation, DegenerateFit, LineageMismatch
from .measure import ParticleState
from .model import Model, ModelConstants
from .schemes import (MomentObserver, SchemeConfig, SimulationResult,
                      SnapshotObserver, make_stepper)

__all__ = [
    "ErrorCurve",
    "ContractionTrace",
    "MomentTrace",
    "rmse",
    "path_error",
    "poc_error",
    "fit_rate",
    "beta_theoretical",
    "rho_one",
    "contraction_run",
    "moment_trace",
    "write_error_curve",
    "write_contraction_csv",
]


@dataclass
class ErrorCurve:
    """One error metric against h or N, with the fitted log-log rate."""

    abscissa: list
    errors: list
    metric: str
    slope: Optional[float] = None
    r_squared: Optional[float] = None
    excluded: list = field(default_factory=list)

    def __post_init__(self):
        a = np.asarray(self.abscissa, dtype=float)
        if a.size and not np.all(np.diff(a) > 0):
            raise ValueError("abscissa must be strictly increasing")
        if any(e < 0 for e in self.errors):
            raise ValueError("errors must be nonnegative")


def _lineage_key(lineage):
    return tuple(lineage.get(k) for k in ("seed", "model", "N", "d", "h_fine", "x0"))


def _require_same_lineage(results, proxy):
    ref = _lineage_key(proxy.lineage)
    for r in results:
        if _lineage_key(r.lineage) != ref:
            raise LineageMismatch(
                f"run lineage {r.lineage} does not match proxy {proxy.lineage}")


def _get_snapshots(result: SimulationResult) -> dict:
    for obs in result.observers:
        if isinstance(obs, SnapshotObserver):
            return obs.snapshots
    raise ValueError("result carries no SnapshotObserver")


def _match_time(t, times_sorted, tol=1e-9):
    idx = np.searchsorted(times_sorted, t)
    for j in (idx - 1, idx, idx + 1):
        if 0 <= j < len(times_sorted) and abs(times_sorted[j] - t) <= tol * max(1.0, abs(t)):
            return times_sorted[j]
    raise KeyError(f"no reference snapshot at t={t!r}")


def rmse(results: Sequence[SimulationResult], proxy: SimulationResult) -> ErrorCurve:
    """Root mean-square terminal error against the proxy run, same paths and
    initial samples, particle j paired with particle j."""
    _require_same_lineage(results, proxy)
    ref = proxy.final_state.positions
    pairs, excluded = [], []
    for r in results:
        h = r.lineage["h"]
        if r.diverged:
            excluded.append((h, f"{r.blowup.kind} at step {r.blowup.step}"))
            continue
        diff = r.final_state.positions - ref
        pairs.append((h, float(np.sqrt(np.mean(np.sum(diff ** 2, axis=1))))))
    pairs.sort()
    return ErrorCurve([p[0] for p in pairs], [p[1] for p in pairs],
                      metric="rmse", excluded=excluded)


def path_error(results: Sequence[SimulationResult], proxy: SimulationResult) -> ErrorCurve:
    """Pathwise strong error: sup over each run's own grid points of the
    particle-paired distance to the proxy, then the mean-square average."""
    _require_same_lineage(results, proxy)
    proxy_snaps = _get_snapshots(proxy)
    ptimes = np.array(sorted(proxy_snaps))
    pairs, excluded = [], []
    for r in results:
        h = r.lineage["h"]
        if r.diverged:
            excluded.append((h, f"{r.blowup.kind} at step {r.blowup.step}"))
            continue
        snaps = _get_snapshots(r)
        sup_sq = None
        for t, pos in snaps.items():
            ref = proxy_snaps[_match_time(t, ptimes)]
            dist_sq = np.sum((pos - ref) ** 2, axis=1)
            sup_sq = dist_sq if sup_sq is None else np.maximum(sup_sq, dist_sq)
        pairs.append((h, float(np.sqrt(np.mean(sup_sq)))))
    pairs.sort()
    return ErrorCurve([p[0] for p in pairs], [p[1] for p in pairs],
                      metric="path", excluded=excluded)


def poc_error(small: SimulationResult, large: SimulationResult) -> float:
    """Coupled particle-count error between systems of size N and 2N.

    The larger system must extend the smaller one's lattice: same seed, same
    fine grid, first half of the streams identical.
    """
    ls, ll = small.lineage, large.lineage
    if ll["N"] != 2 * ls["N"]:
        raise CouplingViolation(f"expected doubled system, got N={ls['N']} -> {ll['N']}")
    for key in ("seed", "h_fine", "model", "h", "d"):
        if ls[key] != ll[key]:
            raise CouplingViolation(f"lattice lineage differs in '{key}'")
    n_small = ls["N"]
    diff = large.final_state.positions[:n_small] - small.final_state.positions
    return float(np.sqrt(np.mean(np.sum(diff ** 2, axis=1))))


def fit_rate(curve: ErrorCurve):
    """OLS fit of log(error) against log(abscissa); returns (slope, r_squared)
    and stores them on the curve.  Rate convention: d log(err) / d log(x)."""
    x = np.asarray(curve.abscissa, dtype=float)
    y = np.asarray(curve.errors, dtype=float)
    if x.size < 3:
        raise ValueError("need at least 3 points to fit a rate")
    if np.any(y <= 0):
        raise ValueError("all errors must be positive for a log-log fit")
    lx, ly = np.log(x), np.log(y)
    vx = lx - lx.mean()
    denom = float(np.sum(vx ** 2))
    if denom == 0.0:
        raise DegenerateFit("zero variance in the abscissa")
    slope = float(np.sum(vx * (ly - ly.mean())) / denom)
    resid = ly - (ly.mean() + slope * vx)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    ss_res = float(np.sum(resid ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    curve.slope = slope
    curve.r_squared = r2
    return slope, r2


# ---------------------------------------------------------------------------
# Mean-square contraction
# ---------------------------------------------------------------------------

def rho_one(c: ModelConstants) -> float:
    lf_plus = max(c.L_f1, 0.0)
    return 4.0 * lf_plus + 2.0 * c.L_us1 + 2.0 * c.L_us2 + 2.0 * c.L_b2 + 2.0 * c.L_b3


def beta_theoretical(c: ModelConstants, h: float) -> float:
    """Per-step mean-square growth rate bound from the declared constants:
    E|X_n - Z_n|^2 <= (1 + beta h)^n E|X_0 - Z_0|^2."""
    lf_plus = max(c.L_f1, 0.0)
    denom = 1.0 - h * (4.0 * lf_plus + 2.0 * c.L_us1 + 2.0 * c.L_us2)
    return (rho_one(c) + 2.0 * c.L_b1 * h) / denom


@dataclass
class ContractionTrace:
    """Paired mean-square distance of two coupled runs over time."""

    times: list
    msd: list
    beta_theoretical: float
    fitted_decay: Optional[float] = None

    def fit_decay(self, t_min: float = 0.0) -> float:
        """OLS slope of log(msd) against t over times >= t_min."""
        t = np.asarray(self.times)
        m = np.asarray(self.msd)
        mask = (t >= t_min) & (m > 0)
        if mask.sum() < 2:
            return 0.0
        tt, lm = t[mask], np.log(m[mask])
        vt = tt - tt.mean()
        return float(np.sum(vt * (lm - lm.mean())) / np.sum(vt ** 2))

    def mean_step_rate(self, t_min: float = 0.0) -> float:
        """(1/h) log of the geometric-mean per-step contraction factor over
        times >= t_min (telescoped)."""
        t = np.asarray(self.times)
        m = np.asarray(self.msd)
        mask = (t >= t_min) & (m > 0)
        idx = np.nonzero(mask)[0]
        if idx.size < 2:
            return 0.0
        i0, i1 = idx[0], idx[-1]
        return float((np.log(m[i1]) - np.log(m[i0])) / (t[i1] - t[i0]))

    def nonmonotone_fraction(self, t_min: float = 0.0) -> float:
        """Fraction of steps after t_min on which log(msd) increased."""
        t = np.asarray(self.times)
        m = np.asarray(self.msd)
        mask = t >= t_min
        mm = m[mask]
        if mm.size < 2:
            return 0.0
        return float(np.mean(np.diff(mm) > 0))


def contraction_run(model: Model, scheme: SchemeConfig, lattice: BrownianLattice,
                    x0: ParticleState, z0: ParticleState) -> ContractionTrace:
    """Advance two particle systems in lockstep on the same increments and
    record the per-step paired mean-square distance."""
    if x0.n != z0.n or x0.d != z0.d:
        raise LineageMismatch("coupled runs need identical N and d")
    scheme.check_h_constraint(model)
    step_fn = make_stepper(model, scheme)
    sx, sz = x0.copy(), z0.copy()

    def msd_of():
        return float(np.mean(np.sum((sx.positions - sz.positions) ** 2, axis=1)))

    times = [0.0]
    msd = [msd_of()]
    for n, dw in enumerate(lattice.iter_coarse(scheme.h, scheme.M)):
        t = n * scheme.h
        with np.errstate(over="ignore", invalid="ignore"):
            sx = step_fn(sx, dw, t)
            sz = step_fn(sz, dw, t)
        times.append((n + 1) * scheme.h)
        msd.append(msd_of())
    trace = ContractionTrace(times=times, msd=msd,
                             beta_theoretical=beta_theoretical(model.constants, scheme.h))
    trace.fitted_decay = trace.fit_decay()
    return trace


# ---------------------------------------------------------------------------
# Moment traces
# ---------------------------------------------------------------------------

@dataclass
class MomentTrace:
    times: list
    moments: dict
    first_nonfinite_time: Optional[float] = None
    first_cap_time: Optional[float] = None


def moment_trace(result: SimulationResult, cap: Optional[float] = None) -> MomentTrace:
    """Collect the moment observer of a run and flag the first time a moment
    went non-finite (blow-up) or exceeded the cap."""
    obs = None
    for o in result.observers:
        if isinstance(o, MomentObserver):
            obs = o
            break
    if obs is None:
        raise ValueError("result carries no MomentObserver")
    first_nonfinite = result.blowup.time if result.blowup is not None else None
    first_cap = None
    if cap is not None:
        for k, t in enumerate(obs.times):
            if any(obs.moments[p][k] > cap for p in obs.p_values):
                first_cap = t
                break
    for p in obs.p_values:
        vals = np.asarray(obs.moments[p])
        bad = ~np.isfinite(vals)
        if bad.any():
            t_bad = obs.times[int(np.argmax(bad))]
            first_nonfinite = t_bad if first_nonfinite is None else min(first_nonfinite, t_bad)
    return MomentTrace(times=list(obs.times),
                       moments={p: list(obs.moments[p]) for p in obs.p_values},
                       first_nonfinite_time=first_nonfinite,
                       first_cap_time=first_cap)


# ---------------------------------------------------------------------------
# Artifact serialization (CSV + JSON sidecar)
# ---------------------------------------------------------------------------

def write_error_curve(curve: ErrorCurve, csv_path, sidecar_path=None, meta=None):
    with open(csv_path, "w", newline="") as fh:
        fh.write("abscissa,error\n")
        for a, e in zip(curve.abscissa, curve.errors):
            fh.write(f"{a!r},{e!r}\n")
    if sidecar_path is not None:
        payload = {
            "metric": curve.metric,
            "slope": curve.slope,
            "r_squared": curve.r_squared,
            "excluded_points": [[a, reason] for a, reason in curve.excluded],
        }
        payload.update(meta or {})
        with open(sidecar_path, "w", newline="") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def write_contraction_csv(trace: ContractionTrace, path):
    with open(path, "w", newline="") as fh:
        fh.write("t,msd\n")
        for t, m in zip(trace.times, trace.msd):
            fh.write(f"{t!r},{m!r}\n")
