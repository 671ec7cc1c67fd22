"""Acceptance criteria, each at its stated tolerance.

Every test records a PASS/FAIL line (shown in the pytest terminal summary)
before asserting, so a failing criterion still reports its measured value.
"""

import numpy as np
import pytest

from fwm_homodyne.criteria import COHERENT_LO, MAIN, RESCALED, evaluate_all, rescaled_criteria
from fwm_homodyne.dynamics import ModelParams, ReducedState, evolve, evolve_many, lift_to_sparse, mode_populations
from fwm_homodyne.ensembles import block_raw_moments
from fwm_homodyne.fock import SparseState
from fwm_homodyne.homodyne import (
    QuadratureMoments,
    coherent_lo_floor,
    coherent_lo_moments,
    commutator_closed_form,
    commutator_expectation,
    normalize,
    quadrature_moments,
    raw_moments_oracle,
    split_local_oscillator,
)
from fwm_homodyne.pump import small_time_consistency
from fwm_homodyne.sweep import RunConfig, run_sweep

FIG2 = dict(t_min=0.0, t_max=0.05, points=400)
MAIN_CURVES = ("separability", "epr_sum", "epr_reid")


def windows(mask):
    """Contiguous True runs as (first, last) index pairs."""
    mask = np.asarray(mask, dtype=bool)
    edges = np.diff(np.concatenate([[0], mask.astype(int), [0]]))
    return list(zip(np.flatnonzero(edges == 1), np.flatnonzero(edges == -1) - 1))


def moment_vector(m):
    return np.array([np.asarray(v, dtype=float) for v in m.as_dict().values()])


@pytest.fixture(scope="module")
def fock100():
    return run_sweep(RunConfig(kind="fock", mean=100, **FIG2))


@pytest.fixture(scope="module")
def poisson100():
    return run_sweep(RunConfig(kind="poissonian", mean=100, **FIG2))


@pytest.fixture(scope="module")
def thermal100():
    return run_sweep(RunConfig(kind="thermal", mean=100, **FIG2))


def test_1_boundary_baseline(acceptance_report):
    worst = 0.0
    for kind, mean in (("fock", 100), ("fock", 3), ("poissonian", 40), ("coherent", 7), ("thermal", 20)):
        t = run_sweep(RunConfig(kind=kind, mean=mean, t_max=0.01, points=2, criteria=MAIN))
        plus = t.column("var_x1_plus_x2")[0] + t.column("var_y1_minus_y2")[0]
        minus = t.column("var_x1_minus_x2")[0] + t.column("var_y1_plus_y2")[0]
        worst = max(worst, abs(plus - 4), abs(minus - 4), abs(t.column("separability_rhs")[0] - 4),
                    abs(t.column("separability_margin")[0]))
    ok = acceptance_report("1", worst < 1e-9, f"worst deviation from 4 / zero margin at t=0: {worst:.2e} (< 1e-9)")
    assert ok


def test_2_two_particle_oracle(acceptance_report):
    times = np.linspace(0, 5, 100)
    coeffs = evolve_many(ReducedState.fock(2), ModelParams(1.0, 2), times)
    _, n1, _ = mode_populations(coeffs, 2)
    err = np.max(np.abs(n1 - np.sin(np.sqrt(2) * times) ** 2))
    ok = acceptance_report("2", err < 1e-10, f"max |n1 - sin^2(sqrt2 chi t)| = {err:.2e} (< 1e-10)")
    assert ok


def test_3_oracle_equivalence(acceptance_report):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for N in range(1, 21):
        times = np.sort(rng.uniform(0.0, 2.0, 10))
        _, fast = block_raw_moments(N, ModelParams(1.0, N), times)
        generic = []
        for t in times:
            # generic pipeline: sparse evolution lifted to Fock space, LO split, ladder-operator moments
            state = split_local_oscillator(lift_to_sparse(evolve(ReducedState.fock(N), ModelParams(1.0, N), t)))
            generic.append(moment_vector(quadrature_moments(state)))
        diff = np.abs(moment_vector(normalize(fast)).T - np.array(generic))
        worst = max(worst, float(np.max(diff)))
    ok = acceptance_report("3", worst < 1e-8,
                           f"N=1..20, 10 random times: worst field difference {worst:.2e} (< 1e-8)")
    assert ok


def test_4_fig2_fock_windows(acceptance_report, fock100):
    x = fock100.column("chi_t")
    total = fock100.column("n0") + fock100.column("n1") + fock100.column("n2")
    conserved = np.max(np.abs(total - 100)) < 1e-9 and np.array_equal(fock100.column("n1"), fock100.column("n2"))
    sep = windows(fock100.column("separability_violated"))
    esum = windows(fock100.column("epr_sum_violated"))
    reid = windows(fock100.column("epr_reid_violated"))
    ok = conserved and bool(sep) and bool(esum) and bool(reid)
    detail = "no window"
    if ok:
        e0, e1 = esum[0]
        outer = [w for w in sep if w[0] <= e0 and w[1] >= e1]
        inner_strict = bool(outer) and outer[0][0] < e0 and outer[0][1] > e1
        rw = [w for w in reid if w[0] <= e0 and w[1] >= e1]
        reid_wider = bool(rw) and (rw[0][1] - rw[0][0]) > (e1 - e0)
        ok = inner_strict and reid_wider
        fmt = lambda w: f"[{x[w[0]]:.4f}, {x[w[1]]:.4f}]"  # noqa: E731
        detail = (f"separability {fmt(outer[0]) if outer else 'none containing'}, "
                  f"epr_sum {fmt(esum[0])}, epr_reid {fmt(rw[0]) if rw else 'none containing'}")
    ok = acceptance_report("4", ok, f"conservation {conserved}; windows (chi t): {detail}")
    assert ok


def test_5_false_identification(acceptance_report, fock100):
    classic = fock100.column("classic_duan_violated") | fock100.column("classic_reid_violated")
    correct = fock100.column("separability_violated") | fock100.column("epr_reid_violated")
    false_id = classic & ~correct
    x = fock100.column("chi_t")[false_id]
    detail = f"{false_id.sum()} points, chi t in [{x.min():.4f}, {x.max():.4f}]" if x.size else "none"
    ok = acceptance_report("5", bool(false_id.any()), f"classic criteria violated while corrected ones hold: {detail}")
    assert ok


def small_lo_min_margin(N, scaled_max=30.0, points=12001):
    s = np.linspace(0.0, scaled_max, points)
    pops, raw = block_raw_moments(N, ModelParams(1.0, N), s / N)
    sep = rescaled_criteria(normalize(raw, strict=False))[0]
    small = pops[1] > raw.n_lo[0]
    runs = windows(small)
    if not runs or runs[0][1] == points - 1:
        return None, None, None
    i, j = runs[0]
    margins = np.where(sep.defined[i:j + 1], sep.margin[i:j + 1], np.nan)
    return float(np.nanmin(margins)), bool(sep.violated[i:j + 1].any()), (s[i], s[j])


def test_6_small_lo_window(acceptance_report):
    results = {N: small_lo_min_margin(N) for N in (100, 300, 1000)}
    mins = [results[N][0] for N in (100, 300, 1000)]
    ok = all(r[1] for r in results.values()) and mins[0] > mins[1] > mins[2]
    detail = ", ".join(f"N={N}: min margin {r[0]:.3f} over N chi t [{r[2][0]:.2f}, {r[2][1]:.2f}]"
                       for N, r in results.items())
    ok = acceptance_report("6", ok, f"rescaled separability violated where n1 > <b^dag b>; {detail}")
    assert ok


def test_7_coherent_lo_floor_beaten(acceptance_report):
    N = 1000
    s = np.linspace(0.0, 8.0, 3201)[1:]
    _, raw = block_raw_moments(N, ModelParams(1.0, N), s / N)
    m = normalize(raw)
    ratio = np.minimum(m.var_x1_plus_x2, m.var_x1_minus_x2) / coherent_lo_floor(m)
    best = float(np.min(ratio))
    below = int(np.sum(ratio < 1))
    # convergence of the same quantity with N (logged)
    study = []
    for n in (10, 100, 300):
        _, r = block_raw_moments(n, ModelParams(1.0, n), s / n)
        mm = normalize(r, strict=False)
        study.append(f"N={n}: {np.nanmin(np.minimum(mm.var_x1_plus_x2, mm.var_x1_minus_x2) / coherent_lo_floor(mm)):.3f}")
    ok = acceptance_report("7", below > 0 and best <= 0.6,
                           f"min Var[X1+-X2]/floor = {best:.4f} at N=1000 (<= 0.6), {below} points below the floor; "
                           f"convergence {', '.join(study)}")
    assert ok


def test_8a_poissonian_matches_fock(acceptance_report, fock100, poisson100):
    worst, where = 0.0, None
    for name in MAIN_CURVES:
        a = fock100.column(f"{name}_lhs").astype(float)
        b = poisson100.column(f"{name}_lhs").astype(float)
        scale = np.nanmax(np.abs(a))
        rel = np.abs(a - b) / scale
        k = int(np.nanargmax(rel))
        if rel[k] > worst:
            worst, where = float(rel[k]), (name, fock100.column("chi_t")[k])
    ok = acceptance_report("8a", worst <= 1e-2,
                           f"Poissonian vs Fock N=100 criterion curves: worst |diff|/scale {worst:.3e} "
                           f"({where[0]} at chi t {where[1]:.4f}; needs <= 1e-2)")
    assert ok


def test_8b_coherent_matches_poissonian(acceptance_report, poisson100):
    coherent = run_sweep(RunConfig(kind="coherent", mean=100, **FIG2))
    fields = QuadratureMoments.field_names()
    diff = max(float(np.nanmax(np.abs(coherent.column(f).astype(float) - poisson100.column(f).astype(float))))
               for f in fields)
    ok = acceptance_report("8b", diff < 1e-8, f"pure coherent vs Poissonian mixture, all moments: {diff:.2e} (< 1e-8)")
    assert ok


def test_8c_thermal_reduced(acceptance_report, fock100, thermal100):
    x = fock100.column("chi_t")
    fm, tm = fock100.column("separability_margin"), thermal100.column("separability_margin")
    peak_f, peak_t = np.nanmin(fm), np.nanmin(tm)
    wf = windows(fock100.column("separability_violated"))
    wt = windows(thermal100.column("separability_violated"))
    span = lambda ws: sum(j - i + 1 for i, j in ws) * (x[1] - x[0])  # noqa: E731
    # small chi t: the first tenth of the Fock violation window
    early = slice(1, max(2, wf[0][1] // 10))
    more_negative = bool(np.all(tm[early] < fm[early]))
    ok = peak_t > peak_f and span(wt) < span(wf) and more_negative
    ok = acceptance_report(
        "8c", ok,
        f"thermal n=100 vs Fock N=100: peak margin {peak_t:.3f} vs {peak_f:.3f}, "
        f"violation span {span(wt):.4f} vs {span(wf):.4f}, "
        f"small chi t margins more negative: {more_negative} (e.g. {tm[early][-1]:.4f} vs {fm[early][-1]:.4f})")
    assert ok


def test_9_undepleted_pump_limit(acceptance_report):
    N = 1000
    s = np.linspace(0.0, 4.0, 1601)
    pops, raw = block_raw_moments(N, ModelParams(1.0, N), s / N)
    sep = rescaled_criteria(normalize(raw))[0]
    comp = small_time_consistency(N, s[1:], sep.lhs[1:], pops[0][1:])
    early = comp.scaled_time <= 0.5
    rel = float(np.max(comp.relative_deviation[early]))
    onset = comp.onset(0.05, scale=4.0)
    depletion = float(comp.depletion[onset]) if onset is not None else float("nan")
    pointwise = comp.onset(0.05)
    ok = rel < 0.05 and onset is not None and depletion > 0.05
    ok = acceptance_report(
        "9", ok,
        f"N=1000: max relative deviation for N chi t <= 0.5 is {rel:.4f} (< 0.05); deviation exceeds 5% of the "
        f"boundary value 4 at N chi t {comp.scaled_time[onset]:.3f} with mode-0 depletion {depletion:.3f} (> 0.05); "
        f"pointwise-relative 5% onset at N chi t {comp.scaled_time[pointwise]:.3f}, "
        f"depletion {comp.depletion[pointwise]:.4f}")
    assert ok


def random_side(rng, max_total=6):
    kets = rng.integers(1, 6)
    amps = {}
    for _ in range(kets):
        total = rng.integers(0, max_total + 1)
        n_a = rng.integers(0, total + 1)
        amps[(int(total - n_a), int(n_a))] = complex(*rng.normal(size=2))
    return SparseState(2, amps).normalized()


def random_mode(rng, max_n=6):
    amps = {(int(n),): complex(*rng.normal(size=2)) for n in rng.integers(0, max_n + 1, rng.integers(1, 4))}
    return SparseState(1, amps).normalized()


def test_10_separable_states_never_violate(acceptance_report):
    rng = np.random.default_rng(10)
    worst, tested, redrawn = np.inf, 0, 0
    while tested < 200:
        # system j = (LO b_j, signal a_j); global mode order (b1, a1, a2, b2)
        s1, s2 = random_side(rng), random_side(rng)
        state = s1.tensor(s2.permuted((1, 0)))
        try:
            m = quadrature_moments(state)
        except ArithmeticError:
            # an empty LO leaves the measured quadratures undefined; draw again
            redrawn += 1
            continue
        tested += 1
        rep = evaluate_all(m)
        for name in MAIN + RESCALED:
            if rep[name].defined:
                worst = min(worst, float(rep[name].margin))
        # coherent-LO forms only apply with coherent oscillators
        sig = random_mode(rng).tensor(random_mode(rng))
        crep = evaluate_all(coherent_lo_moments(sig, rng.uniform(0.2, 20.0, 2)))
        for name in COHERENT_LO:
            if crep[name].defined:
                worst = min(worst, float(crep[name].margin))
    ok = acceptance_report("10", worst >= -1e-9,
                           f"{tested} random product states (+ coherent-LO variants), min margin {worst:.3e} "
                           f"(>= -1e-9); {redrawn} draws with an empty LO replaced")
    assert ok


def test_11_commutator_identity(acceptance_report):
    worst = 0.0
    for N in range(1, 21):
        for t in (0.013, 0.11, 0.6):
            state = split_local_oscillator(lift_to_sparse(evolve(ReducedState.fock(N), ModelParams(1.0, N), t)))
            raw = raw_moments_oracle(state)
            if np.min(raw.n_lo) <= 1e-6:
                continue
            diff = np.abs(np.array(commutator_expectation(state)) - commutator_closed_form(raw.n_signal, raw.n_lo))
            worst = max(worst, float(np.max(diff)))
    ok = acceptance_report("11", worst < 1e-8, f"N=1..20 evolved states: worst |<[X,Y]> - closed form| {worst:.2e} (< 1e-8)")
    assert ok
