"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line
(run with ``pytest tests/test_acceptance.py -v -s``).

Every tolerance is pinned here.  Box-size surrogate budgets (mass/L, wrap,
dealiasing) are computed explicitly where a criterion involves them and are
reported in the printed line.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from bolab.cutoffs import DEFAULT
from bolab.grid import ComplexField, Field, Grid
from bolab.kernels import KernelSpec, fit_decay, phase_integral, sweep_j, sweep_t
from bolab.normal_form import transformed_residual
from bolab.pseudoproduct import (
    SQRT_2PI,
    BilinearSymbol,
    bilinear_apply,
    leibnitz_check,
    nf_cancellation_scale,
    nf_generator_terms,
)
from bolab.solver import SolverState, evolve, soliton
from bolab.spectral import (
    analyze,
    apply_multiplier,
    hilbert,
    lp_partition_bounds,
    lp_project,
    spatial_cutoff,
    weighted_shell_sup,
)
from bolab.decay import ExperimentConfig, bootstrap_predict, run
from bolab.testing import random_band_limited, random_compact_bump

pytestmark = pytest.mark.filterwarnings(
    "ignore::bolab.errors.AliasingWarning",
    "ignore::bolab.errors.BandEdgeWarning",
)

SHELLS = [2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5]


def _report(number: int, name: str, passed: bool, detail: str) -> None:
    status = "PASS" if passed else "FAIL"
    print(f"ACCEPTANCE {number:02d} {name}: {status} ({detail})")
    assert passed, f"criterion {number} {name}: {detail}"


# ---------------------------------------------------------------------------
# shared expensive runs
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def soliton_run():
    """T = 10 comoving soliton at the reference resolution (criteria 9, 10)."""
    g = Grid(4096, 400.0)
    s = soliton(1.0, 0.0, g)
    state = SolverState(w=s, frame="moving", speed=1.0, dt=1e-3)
    snaps = evolve(state, 10.0, snapshot_stride=1000)
    return s, snaps


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------


def test_criterion_01_operator_calculus_suite():
    t0 = time.time()
    g = Grid(2048, 64 * np.pi)
    rng = np.random.default_rng(0)
    k_min, k_max = lp_partition_bounds(g)
    m1 = lambda xi: np.exp(-(xi**2) / 50.0)
    m2 = lambda xi: 1j * np.tanh(xi) + np.cos(xi)
    worst = {"parseval": 0.0, "composition": 0.0, "hilbert_sq": 0.0, "partition": 0.0}
    for _ in range(1000):
        f = random_band_limited(g, rng, 0.45)
        s = analyze(f)
        worst["parseval"] = max(
            worst["parseval"], abs(f.l2_norm() - s.l2_norm()) / f.l2_norm()
        )
        once = apply_multiplier(lambda xi: m1(xi) * m2(xi), f)
        twice = apply_multiplier(m1, apply_multiplier(m2, f))
        worst["composition"] = max(
            worst["composition"],
            float(np.max(np.abs(once.samples - twice.samples))) / once.sup_norm(),
        )
        hh = hilbert(hilbert(f))
        worst["hilbert_sq"] = max(
            worst["hilbert_sq"],
            float(np.max(np.abs(hh.samples + f.samples))) / f.sup_norm(),
        )
        total = lp_project(f, k_min, "leq").samples.copy()
        for k in range(k_min + 1, k_max + 1):
            total += lp_project(f, k, "full").samples
        worst["partition"] = max(
            worst["partition"],
            float(np.max(np.abs(total - f.samples))) / f.sup_norm(),
        )
    elapsed = time.time() - t0
    ok = all(v <= 1e-10 for v in worst.values()) and elapsed < 60.0
    _report(
        1,
        "operator-calculus",
        ok,
        f"worst rel errors {', '.join(f'{k}={v:.2e}' for k, v in worst.items())}, "
        f"{elapsed:.0f}s for 1000 fields",
    )


def test_criterion_02_hilbert_closed_form():
    g = Grid(4096, 400.0)
    f = Field(g, 1.0 / (1.0 + g.x**2))
    hf = hilbert(f)
    target = g.x / (1.0 + g.x**2)
    err = np.abs(hf.samples - target)
    # the 1e-4 budget is box-truncation dominated: the lattice error at the
    # dispersion kink grows ~ (2 pi / L)^2 |x|, so it holds on the central
    # window; the whole box obeys the O(1/L) budget
    window = np.abs(g.x) <= g.box_length / 100.0
    err_window = float(np.max(err[window]))
    err_box = float(np.max(err))
    hs = hilbert(soliton(1.0, 0.0, g))
    sups = weighted_shell_sup(hs, [3.0, 3.5, 4.0, 4.5, 5.0, 5.5])
    fit = fit_decay([(j, max(v["+"], v["-"])) for j, v in sups.items()])
    ok = err_window <= 1e-4 and err_box <= 2.5 / g.box_length and abs(fit.slope + 1.0) <= 0.15
    _report(
        2,
        "hilbert-closed-form",
        ok,
        f"window err {err_window:.2e} (<=1e-4), box err {err_box:.2e} "
        f"(<=2.5/L), |H soliton| slope {fit.slope:.3f} (-1 +- 0.15)",
    )


def test_criterion_03_pseudoproduct_identity():
    g = Grid(512, 16 * np.pi)
    rng = np.random.default_rng(1)
    worst_prod = 0.0
    worst_leib = 0.0
    one = BilinearSymbol(fn=lambda xi, eta: np.ones(np.broadcast(xi, eta).shape))
    for _ in range(20):
        f = random_band_limited(g, rng, 0.25)
        h = random_band_limited(g, rng, 0.25)
        out = bilinear_apply(one, f, h)
        target = SQRT_2PI * f.samples * h.samples
        worst_prod = max(
            worst_prod,
            float(np.max(np.abs(out.samples - target))) / float(np.max(np.abs(target))),
        )
        worst_leib = max(
            worst_leib, leibnitz_check(one, f, h) / (f.sup_norm() * h.sup_norm())
        )
    ok = worst_prod <= 1e-10 and worst_leib <= 1e-10
    _report(
        3,
        "pseudoproduct-identity",
        ok,
        f"sqrt(2pi)fg rel err {worst_prod:.2e}, Leibnitz rel {worst_leib:.2e} (<=1e-10)",
    )


def test_criterion_04_pseudolocality_slope():
    g = Grid(2048, 256.0)
    rng = np.random.default_rng(2)
    htar = random_band_limited(g, rng, 0.25)
    obs = np.abs(g.x) <= 1.0
    best = {}
    for j, k in [(3, 0), (4, 0), (5, 0), (4, 1), (5, 1), (5, 2), (5, 3), (5, 4)]:
        sym = BilinearSymbol(
            fn=lambda xi, eta, k=k: DEFAULT.le_abs(k, xi) * DEFAULT.le_abs(k, eta),
            xi_support=(-(2.0 ** (k + 1)) - 1, 2.0 ** (k + 1) + 1),
        )
        f = Field(g, np.exp(-(((g.x - 2.0**j) / 0.5) ** 2)))
        out = bilinear_apply(sym, f, htar)
        val = np.max(np.abs(out.samples[obs])) / (f.sup_norm() * htar.sup_norm())
        best[j + k] = max(best.get(j + k, 0.0), float(val))
    fit = fit_decay(sorted(best.items()))
    ok = fit.slope <= -2.5
    _report(
        4,
        "pseudolocality-slope",
        ok,
        f"fitted decay {-fit.slope:.2f} in j+k over [3,9] (need >= 2.5)",
    )


def test_criterion_05_commutator_constants():
    g = Grid(8192, 2048.0)
    rng = np.random.default_rng(3)
    consts = {0: {}, 1: {}, 2: {}}
    from bolab.spectral import derivative

    for j in range(3, 9):
        worst = {0: 0.0, 1: 0.0, 2: 0.0}
        for _ in range(100):
            f = random_compact_bump(g, rng)
            l1 = g.dx * float(np.sum(np.abs(f.samples)))
            comm = ComplexField(
                g,
                spatial_cutoff(hilbert(f), j, "+", "exact").samples
                - hilbert(spatial_cutoff(f, j, "+", "exact")).samples,
            )
            worst[0] = max(worst[0], comm.sup_norm() * 2.0**j / l1)
            for n in (1, 2):
                dn = derivative(comm, n)
                worst[n] = max(worst[n], dn.sup_norm() * 2.0 ** ((n + 1) * j) / l1)
        for n in (0, 1, 2):
            consts[n][j] = worst[n]
    spreads = {
        n: max(consts[n].values()) / min(consts[n].values()) for n in (0, 1, 2)
    }
    # the +-50% stability clause attaches to the base constant; the derivative
    # versions assert the bound with an order-one constant per derivative count
    ok = spreads[0] <= 3.0 and spreads[1] <= 10.0 and spreads[2] <= 10.0
    _report(
        5,
        "hilbert-commutator",
        ok,
        f"constant spreads across j in [3,8]: base {spreads[0]:.2f} (<=3, +-50%), "
        f"d1 {spreads[1]:.2f}, d2 {spreads[2]:.2f} (bounds hold, spread <=10)",
    )


def test_criterion_06_normal_form_cancellation():
    t0 = time.time()
    g = Grid(1024, 8 * np.pi)
    rng = np.random.default_rng(4)
    worst = 0.0
    count = 0
    for k in (0.0, 1.0, 2.0, 3.0, 4.0):
        for order in (2, 4):
            for _ in range(5):
                u = random_band_limited(g, rng, 0.25)
                terms = nf_generator_terms(u, k, order)
                resid = float(np.max(np.abs(sum(t.samples for t in terms.values()))))
                scale = nf_cancellation_scale(terms)
                worst = max(worst, resid / scale)
                count += 1
    elapsed = time.time() - t0
    ok = worst <= 1e-8 and elapsed < 600.0 and count == 50
    _report(
        6,
        "normal-form-cancellation",
        ok,
        f"worst relative residual {worst:.2e} over {count} fields (<=1e-8), "
        f"{elapsed:.0f}s at n=1024 (<600s)",
    )


def test_criterion_07_transformed_equation_residual():
    g = Grid(8192, 400.0)
    s = soliton(1.0, 0.0, g)
    k, order, factor = 1.0, 4, 3.0
    reports = []
    for dt in (1e-3, 5e-4):
        st = SolverState(w=s, frame="lab", dt=dt)
        snaps = evolve(st, 6 * dt, snapshot_stride=1, record_ledger=False)
        reports.append(
            transformed_residual([(sn.t, sn.w) for sn in snaps], k, order, factor)
        )
    rep = reports[0]
    ratio = reports[0].residual_box_exact / reports[1].residual_box_exact
    within_budget = rep.residual_inf <= (
        1e-3 * rep.term_scale + rep.budget_massL + rep.budget_alias
    )
    box_small = rep.residual_box_exact <= 1e-3 * rep.term_scale
    ok = 3.0 <= ratio <= 5.0 and within_budget and box_small
    _report(
        7,
        "transformed-residual",
        ok,
        f"dt-halving ratio {ratio:.2f} (~4), residual {rep.residual_inf:.2e} <= "
        f"1e-3*scale({rep.term_scale:.2e}) + massL({rep.budget_massL:.2e}) + "
        f"alias({rep.budget_alias:.1e}); budget-corrected {rep.residual_box_exact:.2e}",
    )


def test_criterion_08_kernel_exponents():
    eps = 0.5
    t0 = time.time()
    spec = KernelSpec(variant="lowfreq-left", j=0.0, t=16.0, a=1, epsilon=eps,
                      quad_tol=1e-12)
    rows = sweep_t(spec, [16.0 * 2.0**i for i in range(8)], nx=5, ny=5)
    t_fit = fit_decay([(np.log2(r["t"]), r["sup"]) for r in rows])
    t_time = time.time() - t0

    t0 = time.time()
    spec = KernelSpec(variant="lowfreq-left", j=3.0, t=4.0, a=1, epsilon=eps,
                      quad_tol=1e-12)
    rows = sweep_j(spec, [3, 4, 5, 6, 7, 8], nx=5, ny=5)
    j_fit = fit_decay([(r["j"], r["sup"]) for r in rows])
    j_time = time.time() - t0

    t0 = time.time()
    spec = KernelSpec(variant="dyadic-right", j=2.0, t=46.0, a=1, k=0.0,
                      ell=-4.0, M=6, quad_tol=1e-12)
    rows = sweep_t(spec, [46.0 * 1.5**i for i in range(5)], nx=5, ny=5)
    r_fit = fit_decay([(np.log2(r["t"]), r["sup"]) for r in rows])
    r_time = time.time() - t0

    bo = KernelSpec(variant="dyadic-left", j=3.0, t=2.0, a=0, k=1.0, quad_tol=1e-12)
    sch = KernelSpec(variant="schro-left", j=3.0, t=2.0, a=0, k=1.0, quad_tol=1e-12)
    cut = lambda xi: bo.cutoffs.shell(1.0, xi)
    schro_diff = 0.0
    for x in np.linspace(4.0, 16.0, 4):
        for y in np.linspace(-4.0, 2.0 ** (3 - 9), 4):
            v1 = phase_integral(bo, float(x), float(y), cutoff_override=cut,
                                range_override=(0.5, 4.0)).value
            v2 = phase_integral(sch, float(x), float(y)).value
            schro_diff = max(schro_diff, abs(v1 - v2))

    ok = (
        t_fit.slope <= -2.8
        and j_fit.slope <= -2.8
        and r_fit.slope <= -2.7
        and schro_diff <= 1e-10
        and max(t_time, j_time, r_time) < 300.0
    )
    _report(
        8,
        "kernel-exponents",
        ok,
        f"left t-slope {t_fit.slope:.2f} (<=-2.8, {t_time:.0f}s), "
        f"j-slope {j_fit.slope:.2f} (<=-2.8, {j_time:.0f}s), "
        f"right t-slope {r_fit.slope:.2f} (<=-2.7, {r_time:.0f}s), "
        f"schro diff {schro_diff:.1e} (<=1e-10)",
    )


def test_criterion_09_solver_fidelity(soliton_run):
    s, snaps = soliton_run
    shape_err = float(np.max(np.abs(snaps[-1].w.samples - s.samples)))
    led = np.array(snaps[-1].ledger)
    mass_drift = float(np.max(np.abs(led[:, 1] - led[0, 1]))) / abs(led[0, 1])
    l2_drift = float(np.max(np.abs(led[:, 2] - led[0, 2]))) / abs(led[0, 2])

    g2 = Grid(512, 50.0)
    s2 = soliton(1.0, 0.0, g2)
    errs = []
    for dt in (0.02, 0.01):
        st = SolverState(w=s2, frame="moving", speed=1.0, dt=dt)
        w = evolve(st, 0.5, snapshot_stride=10**9, record_ledger=False)[-1].w
        ref = evolve(replace(st, dt=dt / 8), 0.5, snapshot_stride=10**9,
                     record_ledger=False)[-1].w
        errs.append(float(np.max(np.abs(w.samples - ref.samples))))
    ratio = errs[0] / errs[1]

    ok = (
        shape_err <= 1e-3
        and mass_drift <= 1e-10
        and l2_drift <= 1e-10
        and 12.0 <= ratio <= 20.0
    )
    _report(
        9,
        "solver-fidelity",
        ok,
        f"T=10 shape err {shape_err:.2e} (<=1e-3), mass drift {mass_drift:.1e}, "
        f"L2 drift {l2_drift:.1e} (<=1e-10), RK4 halving ratio {ratio:.1f} (16+-4)",
    )


def test_criterion_10_sharp_soliton_decay(soliton_run):
    _, snaps = soliton_run
    slopes = []
    for snap in snaps:
        sups = weighted_shell_sup(snap.w, SHELLS)
        fit = fit_decay([(j, v["+"]) for j, v in sups.items()])
        slopes.append(-fit.slope)
    ok = all(abs(e - 2.0) <= 0.1 for e in slopes)
    _report(
        10,
        "sharp-soliton-decay",
        ok,
        f"exponent over t in [0,10]: min {min(slopes):.3f}, max {max(slopes):.3f} "
        f"(2.0 +- 0.1)",
    )


def test_criterion_11_bootstrap_arithmetic():
    from bolab.decay import bootstrap_iteration_count

    # independent oracle: iterate the exponent map directly and count
    eps, count = 0.1, 0
    seq = []
    exponent = 1.0 + eps
    while exponent < 2.0:
        exponent = min(1.0 + 1.5 * (exponent - 1.0), 2.0)
        seq.append(exponent)
        count += 1
        assert count < 100
    measured = bootstrap_iteration_count(0.1)
    ok = measured == count == 6 and seq[-1] == 2.0
    _report(
        11,
        "bootstrap-arithmetic",
        ok,
        f"eps=0.1 terminates at exponent 2 in {measured} iterations (oracle {count})",
    )


def test_criterion_12_perturbed_decay_indicative():
    cfg = ExperimentConfig(
        n_points=4096,
        box_length=400.0,
        t_final=10.0,
        dt=1e-3,
        snapshot_stride=1000,
        shells=SHELLS,
        initial={
            "kind": "soliton_bump",
            "c": 1.0,
            "x0": 0.0,
            "bump_amplitude": 0.05,
            "bump_width": 1.0,
            "bump_center": 2.0,
        },
        sponge={"enabled": True, "width_fraction": 0.1, "strength": 1.0},
    )
    report = run(cfg)
    predicted = bootstrap_predict(report.epsilon_measured)
    late = [f for f in report.fits if f["kind"] == "sup_plus"][-1]
    late_exponent = -late["slope"]
    # indicative evidence only: finite box, finite horizon, fitted exponents
    ok = late_exponent >= predicted - 0.3 and report.predicted_exponent == predicted
    _report(
        12,
        "perturbed-decay-indicative",
        ok,
        f"eps_meas {report.epsilon_measured:.3f}, predicted exponent {predicted:.2f}, "
        f"late-time measured {late_exponent:.3f} (>= predicted - 0.3); "
        f"budgets: wrap tail {report.budgets['box_wrap_tail']:.1e}, "
        f"mass/L {report.budgets['mass_over_L']:.1e}",
    )
