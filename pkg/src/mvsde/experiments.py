"""Config-driven experiment pipelines and the preset registry.

A resolved experiment configuration is a plain dict (the run manifest).  Each
task function drives the simulations for one experiment kind, writes the
CSV/JSON artifacts into the output directory, and returns the summary
payload.  Independent simulation cells run on a thread pool; artifacts are
written by the collector in a fixed order, so re-running a manifest with the
same seed reproduces every file byte for byte.
"""

from __future__ import annotations

import json
import re
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from scipy.special import ndtri

from . import __version__ as _version
from .analysis import (contraction_run, fit_rate, moment_trace, path_error,
                       poc_error, rmse, write_contraction_csv,
                       write_error_curve)
from .brownian import BrownianLattice, purpose_uniforms
from .errors import ConfigInvalid
from .measure import ParticleState, save_state
from .model import Model, builtin_model
from .schemes import (DensityObserver, MomentObserver, SchemeConfig,
                      SnapshotObserver, SolverConfig, simulate)

__all__ = [
    "PRESETS",
    "preset_config",
    "list_presets",
    "run_experiment",
    "run_preset",
    "phase_portrait",
    "sample_x0",
    "parse_x0_spec",
    "resolve_model",
    "validate_config",
]

_TAG_X0 = 1 << 62
_TAG_Z0 = (1 << 62) | (1 << 61)

_TASKS = ("rmse", "densities", "contraction", "phase", "poc", "simulate")


# ---------------------------------------------------------------------------
# Initial-condition specs
# ---------------------------------------------------------------------------

_DIST_RE = re.compile(r"^\s*(normal|uniform|binomial)\s*\(\s*([^,()]+)\s*,\s*([^,()]+)\s*\)\s*$")


def parse_x0_spec(spec: str, d: int):
    """Parse an initial-law spec: one marginal or a '|'-separated product.

    ``normal(mean, var)``, ``uniform(a, b)``, and ``binomial(c, p)`` (the
    two-point law: 0 with probability p, else c).  A single marginal is
    reused for every coordinate.
    """
    parts = [p for p in spec.split("|")]
    if len(parts) not in (1, d):
        raise ConfigInvalid(f"x0 spec '{spec}' has {len(parts)} marginals for d={d}")
    laws = []
    for part in parts:
        match = _DIST_RE.match(part)
        if not match:
            raise ConfigInvalid(f"cannot parse initial law '{part.strip()}'")
        kind = match.group(1)
        try:
            a, b = float(match.group(2)), float(match.group(3))
        except ValueError as exc:
            raise ConfigInvalid(f"bad parameters in initial law '{part.strip()}'") from exc
        if kind == "normal" and b <= 0:
            raise ConfigInvalid("normal variance must be positive")
        if kind == "uniform" and b <= a:
            raise ConfigInvalid("uniform needs a < b")
        if kind == "binomial" and not 0 <= b <= 1:
            raise ConfigInvalid("binomial probability must lie in [0, 1]")
        laws.append((kind, a, b))
    if len(laws) == 1:
        laws = laws * d
    return laws


def sample_x0(seed: int, n: int, d: int, spec: str, stream: str = "x0") -> ParticleState:
    """Seeded i.i.d. initial positions, stable per particle index so that a
    larger system reuses the smaller one's draws (particle-count coupling).
    ``stream='z0'`` draws from a second independent stream for coupled pairs."""
    laws = parse_x0_spec(spec, d)
    tag = {"x0": _TAG_X0, "z0": _TAG_Z0}[stream]
    out = np.empty((n, d))
    for i in range(n):
        u = purpose_uniforms(seed, i, d, tag=tag)
        for c, (kind, a, b) in enumerate(laws):
            if kind == "normal":
                out[i, c] = a + np.sqrt(b) * ndtri(u[c])
            elif kind == "uniform":
                out[i, c] = a + (b - a) * u[c]
            else:
                out[i, c] = 0.0 if u[c] < b else a
    return ParticleState(out)


# ---------------------------------------------------------------------------
# Model resolution (built-in name or custom primitive composition)
# ---------------------------------------------------------------------------

def resolve_model(cfg: dict) -> Model:
    spec = cfg["model"]
    if "name" in spec and "custom" not in spec:
        return builtin_model(spec["name"], int(spec.get("d", _default_dim(spec["name"]))))
    from .config import build_custom_model
    return build_custom_model(spec["custom"])


def _default_dim(name: str) -> int:
    return {"vdp2d": 2, "poc-dd": 2}.get(name, 1)


# ---------------------------------------------------------------------------
# Config validation
# ---------------------------------------------------------------------------

_KNOWN_KEYS = {
    "task", "model", "seed", "T", "h", "h_grid", "h_proxy", "h_fine", "N",
    "N_grid", "N_proxy", "schemes", "alpha", "x0", "z0", "observe_times",
    "bins", "hist_range", "tracks", "enforce_h_constraint", "solver",
    "tame_confinement",
}

_TASK_REQUIRED = {
    "rmse": ("h_grid", "h_proxy", "N", "x0"),
    "densities": ("h", "N", "x0", "observe_times"),
    "contraction": ("h", "N", "x0", "z0"),
    "phase": ("h", "N_grid", "x0"),
    "poc": ("h", "N_grid", "N_proxy", "x0"),
    "simulate": ("h", "N", "x0"),
}


def validate_config(cfg: dict) -> dict:
    """Check a resolved experiment dict; returns it with defaults filled in.

    Unknown keys are errors, as are missing task-required fields, grids not
    commensurate with the fine grid, and stepsize-rule violations when
    enforcement is on.
    """
    unknown = set(cfg) - _KNOWN_KEYS
    if unknown:
        raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")
    if cfg.get("task") not in _TASKS:
        raise ConfigInvalid(f"task must be one of {_TASKS}, got {cfg.get('task')!r}")
    task = cfg["task"]
    for key in _TASK_REQUIRED[task]:
        if cfg.get(key) in (None, [], ""):
            raise ConfigInvalid(f"task '{task}' requires config key '{key}'")
    if "model" not in cfg:
        raise ConfigInvalid("config needs a model")
    cfg.setdefault("seed", 1)
    cfg.setdefault("T", 1.0)
    cfg.setdefault("schemes", ["ssm"])
    cfg.setdefault("alpha", 0.5)
    cfg.setdefault("enforce_h_constraint", True)
    cfg.setdefault("tame_confinement", False)
    cfg.setdefault("bins", 60)
    cfg.setdefault("tracks", 5)
    for kind in cfg["schemes"]:
        if kind not in ("ssm", "taming-in", "taming-out", "euler"):
            raise ConfigInvalid(f"unknown scheme '{kind}' in schemes")
    if len(set(cfg["schemes"])) != len(cfg["schemes"]):
        raise ConfigInvalid("duplicate scheme in schemes")
    if "solver" in cfg:
        try:
            SolverConfig(**cfg["solver"])
        except (TypeError, ValueError) as exc:
            raise ConfigInvalid(f"solver: {exc}") from exc
    model = resolve_model(cfg)
    hs = []
    if task == "rmse":
        hs = list(cfg["h_grid"]) + [cfg["h_proxy"]]
        if len(set(cfg["h_grid"])) != len(cfg["h_grid"]):
            raise ConfigInvalid("duplicate h in h_grid")
        if cfg["h_proxy"] >= min(cfg["h_grid"]):
            raise ConfigInvalid("h_proxy must be finer than every h in h_grid")
    elif cfg.get("h") is not None:
        hs = [cfg["h"]]
    h_fine = cfg.get("h_fine") or min(hs)
    cfg["h_fine"] = h_fine
    probe = BrownianLattice(seed=0, n_particles=1, l=model.l, h_fine=h_fine, m_fine=0)
    for h in hs:
        try:
            probe.ratio(h)
        except Exception as exc:
            raise ConfigInvalid(f"h={h!r} is not commensurate with h_fine={h_fine!r}") from exc
        scheme = _scheme("ssm", h, cfg)
        if cfg["enforce_h_constraint"]:
            try:
                scheme.check_h_constraint(model)
            except ConfigInvalid as exc:
                raise ConfigInvalid(f"h={h!r}: {exc}") from exc
    if task == "poc":
        grid = list(cfg["N_grid"]) + [cfg["N_proxy"]]
        for small, large in zip(grid, grid[1:]):
            if large != 2 * small:
                raise ConfigInvalid(
                    f"poc particle grid must double at every level, got {small} -> {large}")
    if task == "contraction" and "z0" in cfg:
        parse_x0_spec(cfg["z0"], model.d)
    if cfg.get("x0"):
        parse_x0_spec(cfg["x0"], model.d)
    return cfg


def _scheme(kind: str, h: float, cfg: dict) -> SchemeConfig:
    solver = SolverConfig(**cfg.get("solver", {}))
    return SchemeConfig(kind=kind, h=h, T=cfg["T"], alpha=cfg.get("alpha", 0.5),
                        solver=solver,
                        enforce_h_constraint=cfg.get("enforce_h_constraint", True),
                        tame_confinement=cfg.get("tame_confinement", False))


# ---------------------------------------------------------------------------
# Task pipelines
# ---------------------------------------------------------------------------

def _fname(scheme: str) -> str:
    return scheme.replace("-", "_")


def _parallel(jobs, threads):
    if threads <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(job) for job in jobs]
        return [f.result() for f in futures]


def _blowup_payload(result):
    if result.blowup is None:
        return None
    return {"step": result.blowup.step, "time": result.blowup.time,
            "kind": result.blowup.kind}


def _run_rmse(cfg, out_dir, threads):
    model = resolve_model(cfg)
    n = int(cfg["N"])
    h_grid = sorted(float(h) for h in cfg["h_grid"])
    h_proxy = float(cfg["h_proxy"])
    m_fine = int(round(cfg["T"] / cfg["h_fine"]))
    lattice = BrownianLattice(seed=cfg["seed"], n_particles=n, l=model.l,
                              h_fine=cfg["h_fine"], m_fine=m_fine)
    x0 = sample_x0(cfg["seed"], n, model.d, cfg["x0"])
    tags = {"x0": cfg["x0"]}

    # the proxy only keeps snapshots on the union of the coarse grids; the
    # coarse runs keep every own-grid point (needed for the pathwise sup)
    union_times = sorted({n * h for h in h_grid
                          for n in range(int(round(cfg["T"] / h)) + 1)})

    def cell(kind, h, proxy_run=False):
        def job():
            snaps = SnapshotObserver(times=union_times, h=h) if proxy_run \
                else SnapshotObserver("all")
            return simulate(model, _scheme(kind, h, cfg), lattice,
                            x0, observers=[snaps], tags=tags)
        return job

    # one pool over every (scheme, h) cell; the per-scheme proxies are the
    # expensive cells and overlap with the coarse runs
    all_jobs = [cell(kind, h) for kind in cfg["schemes"] for h in h_grid]
    all_jobs += [cell(kind, h_proxy, proxy_run=True) for kind in cfg["schemes"]]
    all_results = _parallel(all_jobs, threads)
    n_h = len(h_grid)
    summary = {"metrics": {}, "divergences": []}
    for idx, kind in enumerate(cfg["schemes"]):
        results = all_results[idx * n_h:(idx + 1) * n_h]
        # per-scheme proxy: each method is compared against its own fine run
        proxy = all_results[len(cfg["schemes"]) * n_h + idx]
        entry = {}
        if proxy.diverged:
            summary["divergences"].append(
                {"scheme": kind, "h": h_proxy, **_blowup_payload(proxy)})
            entry["proxy_diverged"] = True
        else:
            for metric, fn in (("rmse", rmse), ("path", path_error)):
                curve = fn(results, proxy)
                if len(curve.abscissa) >= 3:
                    fit_rate(curve)
                write_error_curve(
                    curve, out_dir / f"{metric}_{_fname(kind)}.csv",
                    out_dir / f"{metric}_{_fname(kind)}.json",
                    meta={"model": model.name, "scheme": kind, "seed": cfg["seed"]})
                entry[metric] = {"slope": curve.slope, "r_squared": curve.r_squared,
                                 "excluded": curve.excluded}
        for r in results:
            if r.diverged:
                summary["divergences"].append(
                    {"scheme": kind, "h": r.lineage["h"], **_blowup_payload(r)})
        summary["metrics"][kind] = entry
    return summary


def _run_densities(cfg, out_dir, threads):
    model = resolve_model(cfg)
    n = int(cfg["N"])
    h = float(cfg["h"])
    times = [float(t) for t in cfg["observe_times"]]
    m_fine = int(round(cfg["T"] / cfg["h_fine"]))
    lattice = BrownianLattice(seed=cfg["seed"], n_particles=n, l=model.l,
                              h_fine=cfg["h_fine"], m_fine=m_fine)
    x0 = sample_x0(cfg["seed"], n, model.d, cfg["x0"])
    hist_range = cfg.get("hist_range")

    def cell(kind):
        def job():
            dens = DensityObserver(times, h=h, bins=cfg["bins"], value_range=hist_range)
            mom = MomentObserver(p_values=(2.0,))
            return simulate(model, _scheme(kind, h, cfg), lattice, x0,
                            observers=[dens, mom], tags={"x0": cfg["x0"]})
        return job

    results = _parallel([cell(k) for k in cfg["schemes"]], threads)
    summary = {"times": times, "schemes": {}, "divergences": []}
    for kind, result in zip(cfg["schemes"], results):
        dens = result.observers[0]
        for t, table in sorted(dens.tables.items()):
            table.to_csv(out_dir / f"density_{_fname(kind)}_t{t:g}.csv")
        trace = moment_trace(result)
        with open(out_dir / f"moments_{_fname(kind)}.csv", "w", newline="") as fh:
            fh.write("t,m2\n")
            for t, v in zip(trace.times, trace.moments[2.0]):
                fh.write(f"{t!r},{v!r}\n")
        summary["schemes"][kind] = {
            "final_m2": trace.moments[2.0][-1] if trace.moments[2.0] else None,
            "blowup": _blowup_payload(result),
        }
        if result.diverged:
            summary["divergences"].append({"scheme": kind, "h": h,
                                           **_blowup_payload(result)})
    return summary


def _run_contraction(cfg, out_dir, threads):
    model = resolve_model(cfg)
    n = int(cfg["N"])
    h = float(cfg["h"])
    m_fine = int(round(cfg["T"] / cfg["h_fine"]))
    lattice = BrownianLattice(seed=cfg["seed"], n_particles=n, l=model.l,
                              h_fine=cfg["h_fine"], m_fine=m_fine)
    x0 = sample_x0(cfg["seed"], n, model.d, cfg["x0"])
    z0 = sample_x0(cfg["seed"], n, model.d, cfg["z0"], stream="z0")
    kind = cfg["schemes"][0]
    trace = contraction_run(model, _scheme(kind, h, cfg), lattice, x0, z0)
    write_contraction_csv(trace, out_dir / "contraction.csv")
    summary = {
        "scheme": kind,
        "beta_theoretical": trace.beta_theoretical,
        "fitted_decay": trace.fitted_decay,
        "fitted_decay_after_half": trace.fit_decay(t_min=0.5),
        "mean_step_rate_after_half": trace.mean_step_rate(t_min=0.5),
        "nonmonotone_fraction_after_half": trace.nonmonotone_fraction(t_min=0.5),
    }
    return summary


def _run_phase(cfg, out_dir, threads):
    model = resolve_model(cfg)
    h = float(cfg["h"])
    n_grid = [int(v) for v in cfg["N_grid"]]
    n_tracks = int(cfg.get("tracks", 5))
    m_fine = int(round(cfg["T"] / cfg["h_fine"]))
    summary = {"divergences": [], "files": []}

    def cell(kind, n):
        def job():
            lattice = BrownianLattice(seed=cfg["seed"], n_particles=n, l=model.l,
                                      h_fine=cfg["h_fine"], m_fine=m_fine)
            x0 = sample_x0(cfg["seed"], n, model.d, cfg["x0"])
            snaps = SnapshotObserver("all")
            return simulate(model, _scheme(kind, h, cfg), lattice, x0,
                            observers=[snaps], tags={"x0": cfg["x0"]})
        return job

    cells = [(kind, n) for kind in cfg["schemes"] for n in n_grid]
    results = _parallel([cell(k, n) for k, n in cells], threads)
    for (kind, n), result in zip(cells, results):
        snaps = result.observers[0].snapshots
        path = out_dir / f"tracks_{_fname(kind)}_N{n}.csv"
        track_idx = list(range(min(n_tracks, n)))
        with open(path, "w", newline="") as fh:
            cols = ["t"] + [f"mean_x{c + 1}" for c in range(model.d)]
            for j in track_idx:
                cols += [f"p{j}_x{c + 1}" for c in range(model.d)]
            fh.write(",".join(cols) + "\n")
            for t in sorted(snaps):
                pos = snaps[t]
                row = [repr(t)] + [repr(float(v)) for v in pos.mean(axis=0)]
                for j in track_idx:
                    row += [repr(float(v)) for v in pos[j]]
                fh.write(",".join(row) + "\n")
        summary["files"].append(path.name)
        if result.diverged:
            summary["divergences"].append({"scheme": kind, "N": n,
                                           **_blowup_payload(result)})
    return summary


def _run_poc(cfg, out_dir, threads):
    model = resolve_model(cfg)
    h = float(cfg["h"])
    n_grid = [int(v) for v in cfg["N_grid"]]
    n_all = n_grid + [int(cfg["N_proxy"])]
    m_fine = int(round(cfg["T"] / cfg["h_fine"]))
    base = BrownianLattice(seed=cfg["seed"], n_particles=n_all[0], l=model.l,
                           h_fine=cfg["h_fine"], m_fine=m_fine)

    def cell(kind, n):
        lattice = base.extend_particles(n)

        def job():
            x0 = sample_x0(cfg["seed"], n, model.d, cfg["x0"])
            return simulate(model, _scheme(kind, h, cfg), lattice, x0,
                            tags={"x0": cfg["x0"]})
        return job

    summary = {"metrics": {}, "divergences": []}
    for kind in cfg["schemes"]:
        results = _parallel([cell(kind, n) for n in n_all], threads)
        abscissa, errors, excluded = [], [], []
        for small, large in zip(results, results[1:]):
            n_small = small.lineage["N"]
            if small.diverged or large.diverged:
                bad = small if small.diverged else large
                excluded.append((n_small, f"{bad.blowup.kind} at step {bad.blowup.step}"))
                continue
            abscissa.append(n_small)
            errors.append(poc_error(small, large))
        from .analysis import ErrorCurve
        curve = ErrorCurve(abscissa, errors, metric="poc", excluded=excluded)
        if len(abscissa) >= 3:
            fit_rate(curve)
        write_error_curve(curve, out_dir / f"poc_{_fname(kind)}.csv",
                          out_dir / f"poc_{_fname(kind)}.json",
                          meta={"model": model.name, "scheme": kind,
                                "seed": cfg["seed"], "d": model.d})
        summary["metrics"][kind] = {"slope": curve.slope,
                                    "r_squared": curve.r_squared,
                                    "excluded": curve.excluded}
        for r in results:
            if r.diverged:
                summary["divergences"].append(
                    {"scheme": kind, "N": r.lineage["N"], **_blowup_payload(r)})
    return summary


def _run_simulate(cfg, out_dir, threads):
    model = resolve_model(cfg)
    n = int(cfg["N"])
    h = float(cfg["h"])
    m_fine = int(round(cfg["T"] / cfg["h_fine"]))
    lattice = BrownianLattice(seed=cfg["seed"], n_particles=n, l=model.l,
                              h_fine=cfg["h_fine"], m_fine=m_fine)
    x0 = sample_x0(cfg["seed"], n, model.d, cfg["x0"])

    def cell(kind):
        def job():
            mom = MomentObserver(p_values=(2.0,))
            return simulate(model, _scheme(kind, h, cfg), lattice, x0,
                            observers=[mom], tags={"x0": cfg["x0"]})
        return job

    results = _parallel([cell(k) for k in cfg["schemes"]], threads)
    summary = {"schemes": {}, "divergences": []}
    for kind, result in zip(cfg["schemes"], results):
        trace = moment_trace(result)
        with open(out_dir / f"moments_{_fname(kind)}.csv", "w", newline="") as fh:
            fh.write("t,m2\n")
            for t, v in zip(trace.times, trace.moments[2.0]):
                fh.write(f"{t!r},{v!r}\n")
        save_state(result.final_state, out_dir / f"final_{_fname(kind)}.bin")
        summary["schemes"][kind] = {"final_time": result.final_state.time,
                                    "blowup": _blowup_payload(result)}
        if result.diverged:
            summary["divergences"].append({"scheme": kind, "h": h,
                                           **_blowup_payload(result)})
    return summary


_TASK_RUNNERS = {
    "rmse": _run_rmse,
    "densities": _run_densities,
    "contraction": _run_contraction,
    "phase": _run_phase,
    "poc": _run_poc,
    "simulate": _run_simulate,
}


def run_experiment(cfg: dict, out_dir, threads: int = 1, preset: str | None = None) -> Path:
    """Validate, run, and write artifacts; returns the output directory.

    The manifest written first contains the fully resolved configuration and
    suffices to re-run the experiment: ``run --manifest manifest.json``
    reproduces every artifact byte for byte.
    """
    cfg = validate_config(dict(cfg))
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {"mvsde_version": _version, "preset": preset, "config": cfg}
    with open(out_dir / "manifest.json", "w", newline="") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    summary = _TASK_RUNNERS[cfg["task"]](cfg, out_dir, threads)
    if any(k.startswith("taming") for k in cfg["schemes"]):
        summary["taming"] = {"alpha": cfg["alpha"],
                             "confinement_tamed": cfg["tame_confinement"]}
    summary["preset"] = preset
    summary["seed"] = cfg["seed"]
    summary["model"] = cfg["model"]
    with open(out_dir / "summary.json", "w", newline="") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out_dir


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

_RMSE_H_GRID = [1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3]
_ALL_SCHEMES = ["ssm", "taming-in", "taming-out"]


def _p(task, model, **kw):
    cfg = {"task": task, "model": model}
    cfg.update(kw)
    return cfg


PRESETS = {
    "dw-rmse": (
        "double-well strong-error study, X0 ~ N(3,9)",
        _p("rmse", {"name": "double-well"}, T=10.0, N=1000, x0="normal(3,9)",
           h_grid=list(_RMSE_H_GRID), h_proxy=1e-4, schemes=list(_ALL_SCHEMES),
           enforce_h_constraint=False, seed=99),
    ),
    "dw-densities": (
        "double-well density evolution at T in {1,3,10}, X0 ~ N(0,1)",
        _p("densities", {"name": "double-well"}, T=10.0, N=1000, h=1e-2,
           x0="normal(0,1)", observe_times=[1.0, 3.0, 10.0], hist_range=[-5.0, 5.0],
           schemes=list(_ALL_SCHEMES), enforce_h_constraint=False, seed=2024),
    ),
    "dw-taming": (
        "double-well with the high-variance two-point start, X0 ~ B(50,0.5)",
        _p("densities", {"name": "double-well"}, T=10.0, N=1000, h=1e-2,
           x0="binomial(50,0.5)", observe_times=[1.0, 3.0, 10.0],
           hist_range=[-5.0, 5.0], schemes=list(_ALL_SCHEMES),
           enforce_h_constraint=False, seed=2024),
    ),
    "invariant-rmse": (
        "ergodic model strong-error study, X0 ~ N(2,16)",
        _p("rmse", {"name": "invariant"}, T=10.0, N=1000, x0="normal(2,16)",
           h_grid=list(_RMSE_H_GRID), h_proxy=1e-4, schemes=list(_ALL_SCHEMES),
           seed=2024),
    ),
    "invariant-densities": (
        "ergodic model long-run densities, X0 ~ N(2,16)",
        _p("densities", {"name": "invariant"}, T=10.0, N=1000, h=1e-2,
           x0="normal(2,16)", observe_times=[1.0, 3.0, 10.0],
           hist_range=[-3.0, 3.0], schemes=list(_ALL_SCHEMES), seed=2024),
    ),
    "invariant-densities-uniform": (
        "ergodic model long-run densities, X0 ~ U(4,12)",
        _p("densities", {"name": "invariant"}, T=10.0, N=1000, h=1e-2,
           x0="uniform(4,12)", observe_times=[1.0, 3.0, 10.0],
           hist_range=[-3.0, 3.0], schemes=list(_ALL_SCHEMES), seed=2024),
    ),
    "invariant-contraction": (
        "coupled mean-square contraction, X0 ~ N(2,16) vs Z0 ~ N(0,1)",
        _p("contraction", {"name": "invariant"}, T=10.0, N=1000, h=1e-3,
           x0="normal(2,16)", z0="normal(0,1)", schemes=["ssm"], seed=2024),
    ),
    "vdp-phase": (
        "2-d oscillator phase portraits over N in {50,...,2000}",
        _p("phase", {"name": "vdp2d"}, T=12.0, h=1e-2,
           N_grid=[50, 200, 500, 1000, 2000], x0="normal(2,16)|normal(0,16)",
           schemes=list(_ALL_SCHEMES), seed=2024),
    ),
    "poc": (
        "particle-count convergence sweep with coupled doubling",
        _p("poc", {"name": "poc-dd", "d": 2}, T=1.0, h=1e-3,
           N_grid=[40, 80, 160, 320, 640, 1280], N_proxy=2560,
           x0="normal(1,1)", schemes=["ssm"], seed=42),
    ),
    "supermeasure1-rmse": (
        "convolution kernel in the diffusion, strong-error study",
        _p("rmse", {"name": "supermeasure-case1"}, T=10.0, N=1000,
           x0="normal(1,1)", h_grid=list(_RMSE_H_GRID), h_proxy=1e-4,
           schemes=list(_ALL_SCHEMES), enforce_h_constraint=False, seed=2024),
    ),
    "supermeasure2-rmse": (
        "variance-type measure term in the diffusion, strong-error study",
        _p("rmse", {"name": "supermeasure-case2"}, T=10.0, N=1000,
           x0="normal(1,1)", h_grid=list(_RMSE_H_GRID), h_proxy=1e-4,
           schemes=list(_ALL_SCHEMES), enforce_h_constraint=False, seed=2024),
    ),
    "supermeasure1-densities": (
        "convolution-diffusion model densities, X0 ~ N(0,1)",
        _p("densities", {"name": "supermeasure-case1"}, T=10.0, N=1000, h=1e-2,
           x0="normal(0,1)", observe_times=[1.0, 3.0, 10.0], hist_range=[-5.0, 5.0],
           schemes=list(_ALL_SCHEMES), enforce_h_constraint=False, seed=2024),
    ),
}


def list_presets():
    return [(name, desc) for name, (desc, _) in sorted(PRESETS.items())]


def preset_config(name: str, full: bool = False) -> dict:
    """Deep copy of a preset's resolved config; ``full`` widens the h grid to
    the complete study grid (adds h = 1e-3 to the rmse presets)."""
    if name not in PRESETS:
        raise ConfigInvalid(f"unknown preset '{name}' (see list-presets)")
    cfg = json.loads(json.dumps(PRESETS[name][1]))
    if full and cfg["task"] == "rmse" and 1e-3 not in cfg["h_grid"]:
        cfg["h_grid"] = sorted(cfg["h_grid"] + [1e-3])
    return cfg


def run_preset(name: str, out_dir, overrides: dict | None = None,
               threads: int = 1, full: bool = False) -> Path:
    cfg = preset_config(name, full=full)
    cfg.update(overrides or {})
    return run_experiment(cfg, out_dir, threads=threads, preset=name)


def phase_portrait(out_dir, n_grid=(50, 200, 500, 1000, 2000), overrides=None,
                   threads: int = 1) -> Path:
    """Phase-portrait preset entry point with a configurable particle grid."""
    ov = {"N_grid": list(n_grid)}
    ov.update(overrides or {})
    return run_preset("vdp-phase", out_dir, overrides=ov, threads=threads)
