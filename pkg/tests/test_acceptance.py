"""Acceptance criteria, one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s``.  The strong-rate
criterion drives the full study protocol (N = 1000 with a 1e5-step proxy)
and takes several minutes; everything else is seconds to a couple of
minutes.  Set ``MVSDE_FULL_ACCEPT=1`` to run the particle-count criterion
on the full grid (N up to 2560, tens of minutes) instead of the trimmed
variant with its widened band.
"""

import json
import os

import numpy as np
import pytest

from mvsde import (BrownianLattice, ParticleState, SchemeConfig, builtin_model,
                   check_additional_symmetry, check_odd,
                   check_one_sided_lipschitz, contraction_run,
                   identity_decomposition_check, identity_odd_kernel_check,
                   moment_trace, rmse, simulate, solve_implicit_stage,
                   verify_model)
from mvsde.measure import convolve_all, empirical_moment
from mvsde.model import (CustomKernel, Model, ModelConstants, PowerLawKernel,
                         ZeroKernel, const_sigma, diag_cubic_drift, zero_drift,
                         default_sample_points)
from mvsde.schemes import MomentObserver, SolverConfig
from mvsde.experiments import run_preset, sample_x0

FULL = os.environ.get("MVSDE_FULL_ACCEPT", "") not in ("", "0")


def report(name, detail):
    print(f"\n[criterion] PASS {name}: {detail}")


def bisect(fn, lo, hi, iters=200):
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if fn(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# 1. strong rate of the split-step scheme on the double-well study
# ---------------------------------------------------------------------------

def test_ssm_strong_rate(tmp_path):
    out = run_preset("dw-rmse", tmp_path / "rmse",
                     overrides={"schemes": ["ssm"]}, threads=3)
    metrics = json.loads((out / "summary.json").read_text())["metrics"]["ssm"]
    slope = metrics["rmse"]["slope"]
    r2 = metrics["rmse"]["r_squared"]
    assert metrics["rmse"]["excluded"] == []
    assert 0.35 <= slope <= 0.65, f"rMSE slope {slope} outside [0.35, 0.65]"
    assert r2 >= 0.9, f"rMSE fit R^2 {r2} below 0.9"
    report("ssm strong rate",
           f"rMSE slope {slope:.4f} in [0.35, 0.65], R^2 {r2:.4f} >= 0.9 "
           f"(path slope {metrics['path']['slope']:.4f})")


# ---------------------------------------------------------------------------
# 2. taming comparison from the high-variance two-point start
# ---------------------------------------------------------------------------

def test_taming_divergence_from_two_point_start():
    model = builtin_model("double-well", 1)
    n, t_end, h, seed = 1000, 10.0, 1e-2, 2024
    lattice = BrownianLattice(seed=seed, n_particles=n, l=1, h_fine=h,
                              m_fine=int(round(t_end / h)))
    x0 = sample_x0(seed, n, 1, "binomial(50,0.5)")

    ssm = simulate(model, SchemeConfig("ssm", h=h, T=t_end,
                                       enforce_h_constraint=False),
                   lattice, x0, observers=[MomentObserver()],
                   tags={"x0": "binomial(50,0.5)"})
    assert not ssm.diverged, "split-step run must complete"
    trace = moment_trace(ssm)
    m2 = np.asarray(trace.moments[2.0])
    late = m2[np.asarray(trace.times) >= 1.0]
    assert np.all(np.isfinite(m2))
    assert m2[-1] < 50.0 and late.max() < 100.0, "second moment not bounded"

    out = simulate(model, SchemeConfig("taming-out", h=h, T=t_end,
                                       enforce_h_constraint=False),
                   lattice, x0, tags={"x0": "binomial(50,0.5)"})
    if out.diverged:
        detail = (f"taming-out NonFinite at step {out.blowup.step} "
                  f"(t={out.blowup.time:.2f}); ssm bounded with "
                  f"E|X_T|^2 = {m2[-1]:.2f}")
    else:
        # fall back to the error-ratio leg against a fine split-step proxy
        fine = BrownianLattice(seed=seed, n_particles=n, l=1, h_fine=1e-4,
                               m_fine=int(round(t_end / 1e-4)))
        proxy = simulate(model, SchemeConfig("ssm", h=1e-4, T=t_end,
                                             enforce_h_constraint=False),
                         fine, x0, tags={"x0": "binomial(50,0.5)"})
        ssm_fine = simulate(model, SchemeConfig("ssm", h=h, T=t_end,
                                                enforce_h_constraint=False),
                            fine, x0, tags={"x0": "binomial(50,0.5)"})
        err_ssm = rmse([ssm_fine], proxy).errors[0]
        err_out = rmse([out], proxy).errors[0]
        assert err_out >= 10.0 * err_ssm, \
            f"taming-out error {err_out} not 10x ssm error {err_ssm}"
        detail = f"taming-out error {err_out:.3f} >= 10 x ssm {err_ssm:.3f}"
    report("taming comparison", detail)


# ---------------------------------------------------------------------------
# 3. particle-count convergence rate with the coupled doubling protocol
# ---------------------------------------------------------------------------

def test_poc_rate(tmp_path):
    if FULL:
        overrides, band, label = {}, (-0.70, -0.35), "full grid N in {40..1280}"
    else:
        overrides = {"N_grid": [40, 80, 160], "N_proxy": 320}
        band, label = (-0.80, -0.25), "trimmed grid N <= 320"
    out = run_preset("poc", tmp_path / "poc", overrides=overrides, threads=3)
    metrics = json.loads((out / "summary.json").read_text())["metrics"]["ssm"]
    slope, r2 = metrics["slope"], metrics["r_squared"]
    assert metrics["excluded"] == []
    assert band[0] <= slope <= band[1], f"poc slope {slope} outside {band}"
    assert r2 >= 0.6, f"poc fit R^2 {r2} below 0.6"
    report("poc rate", f"{label}: slope {slope:.4f} in {band}, R^2 {r2:.3f}")


# ---------------------------------------------------------------------------
# 4. mean-square contraction of coupled runs on the ergodic model
# ---------------------------------------------------------------------------

def test_mean_square_contraction(tmp_path):
    out = run_preset("invariant-contraction", tmp_path / "contr", threads=1)
    summary = json.loads((out / "summary.json").read_text())
    beta = summary["beta_theoretical"]
    nonmono = summary["nonmonotone_fraction_after_half"]
    decay = summary["fitted_decay"]
    step_rate = summary["mean_step_rate_after_half"]
    assert nonmono <= 0.05, f"{100 * nonmono:.1f}% non-monotone steps after t=0.5"
    assert decay < 0.0
    assert step_rate <= beta + 0.5, \
        f"per-step rate {step_rate:.3f} above beta + 0.5 = {beta + 0.5:.3f}"
    report("mean-square contraction",
           f"fitted decay {decay:.3f} < 0; per-step rate {step_rate:.3f} <= "
           f"beta+0.5 = {beta + 0.5:.3f}; non-monotone {100 * nonmono:.2f}%")


# ---------------------------------------------------------------------------
# 5. implicit-stage solver against independent bisection oracles
# ---------------------------------------------------------------------------

def test_solver_oracle_equivalence():
    # (a) trivial drift: the stage is the identity in one sweep
    still = Model(name="still", d=1, l=1, f=ZeroKernel(1),
                  f_sigma=ZeroKernel(1, 1), u=zero_drift(1), b=zero_drift(1),
                  sigma=const_sigma([[0.0]]), constants=ModelConstants(m=3.0))
    stage = solve_implicit_stage(still, ParticleState(np.array([1.5, -0.25])), 0.1)
    assert np.array_equal(stage.y_star[:, 0], [1.5, -0.25])
    assert stage.iterations == 1

    # (b) single particle, cubic confinement: y + 0.1 y^3 = 1
    cubic = Model(name="c", d=1, l=1, f=PowerLawKernel(-1.0, 3),
                  f_sigma=ZeroKernel(1, 1), u=diag_cubic_drift(-1.0),
                  b=zero_drift(1), sigma=const_sigma([[0.0]]),
                  constants=ModelConstants(m=3.0))
    got = solve_implicit_stage(cubic, ParticleState(np.array([1.0])), 0.1).y_star[0, 0]
    want = bisect(lambda y: y + 0.1 * y ** 3 - 1.0, 0.0, 1.0)
    assert abs(got - want) < 1e-8

    # (c) symmetric pair under the interaction kernel: y + 4 h y^3 = 1
    pair = Model(name="p", d=1, l=1, f=PowerLawKernel(-1.0, 3),
                 f_sigma=ZeroKernel(1, 1), u=zero_drift(1), b=zero_drift(1),
                 sigma=const_sigma([[0.0]]), constants=ModelConstants(m=3.0))
    got2 = solve_implicit_stage(pair, ParticleState(np.array([1.0, -1.0])),
                                0.05).y_star
    want2 = bisect(lambda y: y + 0.2 * y ** 3 - 1.0, 0.0, 1.0)
    assert abs(got2[0, 0] - want2) < 1e-8 and abs(got2[1, 0] + want2) < 1e-8

    # (d) uniqueness: perturbed initial guesses agree to 10 tol
    model = builtin_model("double-well", 1)
    solver = SolverConfig()
    rng = np.random.default_rng(123)
    worst = 0.0
    for _ in range(100):
        x = ParticleState(rng.normal(0, 2, size=(30, 1)))
        a = solve_implicit_stage(model, x, 0.005, solver)
        noisy = x.positions + rng.normal(size=(30, 1))
        b = solve_implicit_stage(model, x, 0.005, solver, initial=noisy)
        worst = max(worst, float(np.max(np.abs(a.y_star - b.y_star))))
    assert worst < 10 * solver.tol
    report("implicit-solver oracles",
           f"bisection roots {want:.10f}, {want2:.10f} reproduced to 1e-8; "
           f"uniqueness gap {worst:.2e} < 10 tol over 100 states")


# ---------------------------------------------------------------------------
# 6. integral identities over empirical measures
# ---------------------------------------------------------------------------

def test_integral_identities():
    rng = np.random.default_rng(321)
    cases = [("double-well", 1), ("invariant", 1), ("vdp2d", 2), ("poc-dd", 3)]
    checked = 0
    worst_rel = 0.0
    for name, d in cases:
        model = builtin_model(name, d)
        assert model.f.is_odd
        for _ in range(50):
            n = int(rng.integers(2, 201))
            st = ParticleState(rng.uniform(-3, 3, size=(n, d)))
            for p in (3.0, 4.0, 6.0):
                res = identity_decomposition_check(model.f, st, p)
                conv = convolve_all(model.f, st.positions)
                lhs_scale = 1.0 + float(np.abs(conv).max()) * empirical_moment(st, p - 1)
                assert res < 1e-10 * lhs_scale
                worst_rel = max(worst_rel, res / lhs_scale)
            odd = identity_odd_kernel_check(model.f, model.f_sigma, st,
                                            m=model.constants.m,
                                            l_f1=model.constants.L_f1)
            assert odd.lhs <= odd.bound + 1e-10 * (1.0 + abs(odd.lhs))
            assert odd.oddness_gap < 1e-10 * (1.0 + abs(odd.lhs))
            checked += 1
    report("integral identities",
           f"{checked} random empirical measures across {len(cases)} kernels; "
           f"worst decomposition residual {worst_rel:.2e} of scale")


# ---------------------------------------------------------------------------
# 7. assumption verifiers
# ---------------------------------------------------------------------------

def test_assumption_verifiers():
    # additional symmetry of the cubic kernel with a zero constant
    for d in (1, 2, 3):
        rep = check_additional_symmetry(PowerLawKernel(-1.0, 3),
                                        [3.0, 4.0, 6.0], L3=0.0, d=d,
                                        tolerance=1e-12)
        assert rep.passed, f"d={d}: {rep}"

    # an even function must fail the oddness check
    square = CustomKernel(lambda x: x ** 2, output="vector")
    assert not check_odd(square, default_sample_points(1, n=100, seed=2)).passed

    # the diffusion-side measure models violate the declared pair bound,
    # the failure is reported, and simulation still runs
    for name in ("supermeasure-case1", "supermeasure-case2"):
        model = builtin_model(name, 1)
        reports = verify_model(model)
        assert any(not r.passed for r in reports), name
        lattice = BrownianLattice(seed=4, n_particles=20, l=1, h_fine=1e-2,
                                  m_fine=10)
        res = simulate(model, SchemeConfig("ssm", h=1e-2, T=0.1,
                                           enforce_h_constraint=False),
                       lattice, sample_x0(4, 20, 1, "normal(1,1)"))
        assert not res.diverged
    rep1 = check_one_sided_lipschitz(builtin_model("supermeasure-case1", 1).f,
                                     builtin_model("supermeasure-case1", 1).f_sigma,
                                     m=6.0, L=0.0, d=1)
    report("assumption verifiers",
           f"cubic kernel symmetric in d=1,2,3; x^2 fails oddness; "
           f"diffusion-measure models report violation "
           f"{rep1.max_violation:.2e} and still simulate")


# ---------------------------------------------------------------------------
# 8. byte-identical artifacts across reruns and thread counts
# ---------------------------------------------------------------------------

def test_determinism_across_threads(tmp_path):
    digests = []
    for tag, threads in (("a", 1), ("b", 1), ("c", 4)):
        out = run_preset("dw-taming", tmp_path / tag,
                         overrides={"N": 100, "T": 1.0}, threads=threads)
        digests.append({p.name: p.read_bytes() for p in sorted(out.iterdir())
                        if p.is_file()})
    assert digests[0].keys() == digests[1].keys() == digests[2].keys()
    for name in digests[0]:
        assert digests[0][name] == digests[1][name], f"{name}: rerun differs"
        assert digests[0][name] == digests[2][name], f"{name}: thread count leaks"
    report("determinism",
           f"{len(digests[0])} artifact files byte-identical across reruns "
           "and thread counts 1 and 4")
