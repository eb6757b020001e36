"""End-to-end acceptance checks, one per shipping criterion.

Each test prints a single PASS/FAIL line with its headline numbers, then
asserts. Checks 5, 6 and 8 run full Monte Carlo presets and dominate the
wall time of this file (roughly an hour on one core, all within their
stated budgets); run `pytest tests/test_acceptance.py -v -s` to watch the
verdict lines as they land.
"""

import time

import numpy as np
import pytest

from oracles import arc_gram_oracle, grid_weighted_l1
from specprior.conic import ConicProgram, SolveOptions, SolverFailure, solve
from specprior.estimators import (
    atomic_sdp_standard,
    dual_objective,
    dual_sdp_standard,
    dual_sdp_weighted,
    known_poles_sdp,
    localize,
)
from specprior.harness import preset_config, run_experiment, verify_theorem3
from specprior.signal import (
    Band,
    KnownPoles,
    LineSpectrum,
    ObservedSignal,
    Probabilistic,
    SampleSet,
    random_instance,
    synthesize,
    wrap_distance,
)
from specprior.trigpoly import GramPair, TrigPoly, arc_poly, eval_dual, gram_map, translate_band


pytestmark = pytest.mark.acceptance

# Seed of the weighted-prior demo instance (criterion 9): a draw from the
# concentrated prior whose low-band poles cluster below the classical
# resolution limit, so the unweighted program provably has trouble.
SHOWCASE_SEED = 214


def _verdict(num, ok, detail):
    print(f"\ncriterion {num} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {num}: {detail}"


def _random_obs(spectrum, n, m, rng):
    idx = tuple(sorted(rng.choice(n, size=m, replace=False).tolist()))
    return synthesize(spectrum, SampleSet(n, idx))


def _separated_freqs(rng, s, sep, lo=0.0, hi=1.0):
    while True:
        f = np.sort(rng.uniform(lo, hi, s))
        gaps = np.diff(f, append=f[0] + 1.0)
        if s == 1 or gaps.min() >= sep:
            return f


def test_criterion_1_gram_round_trip():
    # 200 random (F, G) pairs against the direct-convolution oracle, and
    # the mapped polynomial must be nonnegative on its arc.
    t0 = time.perf_counter()
    rng = np.random.default_rng(1001)
    sizes = [4] * 67 + [8] * 67 + [12] * 66
    worst = 0.0
    floor = 0.0
    for n in sizes:
        lo = rng.uniform(-0.45, 0.38)
        hi = lo + rng.uniform(0.02, min(0.44 - lo, 0.4))
        arc = arc_poly(lo, hi)
        f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        g = rng.standard_normal(n - 1) + 1j * rng.standard_normal(n - 1)
        pair = GramPair(np.outer(f, f.conj()), np.outer(g, g.conj()))
        want = arc_gram_oracle(f, g, arc.d0, arc.d1)
        got = np.array([gram_map(k, arc, pair) for k in range(n)])
        worst = max(worst, float(np.abs(got - want[n - 1 :]).max()))
        poly = TrigPoly.from_halfspace(got)
        omegas = np.linspace(arc.omega_lo, arc.omega_hi, 2048)
        floor = min(floor, float(poly.eval_omega(omegas).min()))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and floor >= -1e-9 and dt < 10.0
    _verdict(
        1,
        ok,
        f"200 Gram round-trips: max coeff error {worst:.2e} (<=1e-10), "
        f"arc-grid min {floor:.2e} (>=-1e-9), {dt:.1f}s (<10s)",
    )


def test_criterion_2_arc_polynomial_sign():
    # D(w) >= -1e-12 on the arc, <= -1e-9 once 1e-3 radians outside it.
    rng = np.random.default_rng(1002)
    inside_min = np.inf
    outside_max = -np.inf
    for _ in range(50):
        lo = rng.uniform(0.0, 0.95)
        hi = lo + rng.uniform(0.01, min(0.35, 0.999 - lo))
        _, (lo2, hi2) = translate_band(lo, hi)
        arc = arc_poly(lo2, hi2)
        w_in = np.linspace(arc.omega_lo, arc.omega_hi, 512)
        inside_min = min(inside_min, float(arc.eval_omega(w_in).min()))
        w_all = np.linspace(-np.pi, np.pi, 8192, endpoint=False)
        d_lo = np.abs((w_all - arc.omega_lo + np.pi) % (2 * np.pi) - np.pi)
        d_hi = np.abs((w_all - arc.omega_hi + np.pi) % (2 * np.pi) - np.pi)
        inside = (w_all >= arc.omega_lo) & (w_all <= arc.omega_hi)
        far = ~inside & (np.minimum(d_lo, d_hi) >= 1e-3)
        outside_max = max(outside_max, float(arc.eval_omega(w_all[far]).max()))
    ok = inside_min >= -1e-12 and outside_max <= -1e-9
    _verdict(
        2,
        ok,
        f"50 arcs: min inside {inside_min:.2e} (>=-1e-12), "
        f"max outside {outside_max:.2e} (<=-1e-9)",
    )


def test_criterion_3_solver_oracle_sandwich():
    # Three pinned example programs, then 20 instances against the
    # 65536-point discretized weighted-l1 oracle.
    t0 = time.perf_counter()

    p = ConicProgram()
    X = p.add_psd_block("X", 2)
    p.add_equality(X[0, 1], 1.0)
    p.add_equality(X[0, 0] - X[1, 1], 0.0)
    p.minimize(X[0, 0])
    sol = solve(p)
    ex1 = sol.status == "Optimal" and abs(sol.objective_value - 1.0) < 1e-5

    p = ConicProgram()
    X = p.add_psd_block("X", 3)
    p.add_equality(X[0, 0], 5.0)
    p.minimize(X[0, 0] + X[1, 1] + X[2, 2])
    sol = solve(p)
    ex2 = sol.status == "Optimal" and abs(sol.objective_value - 5.0) < 1e-5

    rng = np.random.default_rng(1003)
    c = (rng.standard_normal() + 1j * rng.standard_normal()) * 1.3
    single = LineSpectrum(((0.3173828125, c),))
    obs1 = synthesize(single, SampleSet(8, tuple(range(8))))
    est = atomic_sdp_standard(obs1)
    ex3 = abs(est.objective - abs(c)) <= 1e-4 * (1.0 + abs(c))

    G = 1 << 16
    worst = 0.0
    for k in range(20):
        n = int(rng.integers(8, 17))
        s = int(rng.integers(1, 3))
        g_star = rng.choice(G, size=s, replace=False)
        freqs = np.sort(g_star / G)
        while s > 1 and np.diff(np.concatenate([freqs, freqs[:1] + 1])).min() < 2.0 / n:
            g_star = rng.choice(G, size=s, replace=False)
            freqs = np.sort(g_star / G)
        coeffs = rng.standard_normal(s) + 1j * rng.standard_normal(s)
        spec = LineSpectrum(tuple(zip(freqs.tolist(), coeffs.tolist())))
        m = int(rng.integers(max(3 * s, n // 2), n + 1))
        obs = _random_obs(spec, n, m, rng)
        fgrid = np.arange(G) / G
        if k % 2:
            w_pair = (float(rng.uniform(0.6, 1.2)), float(rng.uniform(1.2, 1.8)))
            prior = Probabilistic((Band(0.0, 0.5), Band(0.5, 1.0)), w_pair)
            d = dual_sdp_weighted(obs, prior)
            wgrid = np.where(fgrid < 0.5, w_pair[0], w_pair[1])
            wgrid[0] = w_pair[0]
        else:
            d = dual_sdp_standard(obs)
            wgrid = np.ones(G)
        got = dual_objective(d, obs)
        oracle_obj, _ = grid_weighted_l1(
            obs.value_array(), obs.sample_set.index_array(), wgrid, G
        )
        worst = max(worst, abs(got - oracle_obj) / (1.0 + abs(oracle_obj)))
    dt = time.perf_counter() - t0
    ok = ex1 and ex2 and ex3 and worst <= 1e-3 and dt < 300.0
    _verdict(
        3,
        ok,
        f"examples {'ok' if ex1 and ex2 and ex3 else 'FAILED'}, 20-instance "
        f"oracle sandwich max rel gap {worst:.2e} (<=1e-3), {dt:.0f}s (<300s)",
    )


def test_criterion_4_strong_duality():
    # |primal - dual| <= 1e-4 (1 + |primal|) on 30 instances per pair.
    rng = np.random.default_rng(1004)
    worst_std = 0.0
    for _ in range(30):
        n = int(rng.integers(8, 14))
        s = int(rng.integers(1, 4))
        freqs = _separated_freqs(rng, s, 2.0 / n)
        coeffs = rng.standard_normal(s) + 1j * rng.standard_normal(s)
        spec = LineSpectrum(tuple(zip(freqs.tolist(), coeffs.tolist())))
        m = int(rng.integers(min(n, 3 * s), n + 1))
        obs = _random_obs(spec, n, m, rng)
        primal = atomic_sdp_standard(obs)
        gap = abs(primal.objective - dual_objective(dual_sdp_standard(obs), obs))
        worst_std = max(worst_std, gap / (1.0 + abs(primal.objective)))

    worst_kp = 0.0
    for _ in range(30):
        n = int(rng.integers(8, 14))
        s = int(rng.integers(2, 4))
        freqs = _separated_freqs(rng, s, 2.0 / n)
        coeffs = rng.standard_normal(s) + 1j * rng.standard_normal(s)
        spec = LineSpectrum(tuple(zip(freqs.tolist(), coeffs.tolist())))
        m = int(rng.integers(min(n, 3 * s), n + 1))
        obs = _random_obs(spec, n, m, rng)
        p = int(rng.integers(1, s))
        known = KnownPoles(tuple(freqs[:p].tolist()))
        est = known_poles_sdp(obs, known)
        atoms = np.exp(2j * np.pi * np.outer(np.arange(n), freqs[:p]))
        resid = np.array(est.filled_signal) - atoms @ np.array(est.known_pole_coeffs)
        resid_obs = ObservedSignal(
            obs.sample_set, tuple(resid[obs.sample_set.index_array()])
        )
        gap = abs(est.objective - dual_objective(est.dual, resid_obs))
        worst_kp = max(worst_kp, gap / (1.0 + abs(est.objective)))

    ok = worst_std <= 1e-4 and worst_kp <= 1e-4
    _verdict(
        4,
        ok,
        f"strong duality over 30+30 instances: standard max rel gap "
        f"{worst_std:.2e}, known-poles {worst_kp:.2e} (both <=1e-4)",
    )


def test_criterion_5_block_prior_dominance(tmp_path):
    # Fixed three-band prior, 50 trials: block-prior complete-success rate
    # beats the no-prior rate by >= 0.3, and the showcased instance
    # (trial 0) recovers all 5 frequencies.
    t0 = time.perf_counter()
    res = run_experiment(preset_config("B1"), tmp_path)
    rates = {c["estimator"]: c["probability"] for c in res.summary["cells"]}
    showcase = [
        r for r in res.records if r.estimator == "block" and r.trial == 0
    ][0]
    dt = time.perf_counter() - t0
    ok = (
        rates["block"] >= rates["standard"] + 0.3
        and showcase.complete_success
        and dt < 1200.0
    )
    _verdict(
        5,
        ok,
        f"block rate {rates['block']:.2f} vs standard {rates['standard']:.2f} "
        f"(gap {rates['block'] - rates['standard']:+.2f}, need >=+0.30), "
        f"showcase trial complete={showcase.complete_success}, "
        f"{dt / 60:.1f} min (<20)",
    )


def test_criterion_6_tiny_blocks_below_3s(tmp_path):
    # 18 samples, 7 poles (under the 3s = 21 certificate threshold),
    # +-0.001 per-pole blocks: complete success in >= 70% of 30 trials.
    res = run_experiment(preset_config("B3"), tmp_path)
    rates = {c["estimator"]: c["probability"] for c in res.summary["cells"]}
    ok = rates["block"] >= 0.7
    _verdict(
        6,
        ok,
        f"per-pole-block rate {rates['block']:.2f} over 30 trials "
        f"(need >=0.70) at m=18 < 21=3s; standard rate {rates['standard']:.2f}",
    )


def test_criterion_7_certificate_construction(tmp_path):
    # s = 2..8 with m = 3s random samples, 200 trials each: the
    # interpolation system is nonsingular in >= 99%, and every
    # well-conditioned trial interpolates to 1e-8.
    t0 = time.perf_counter()
    report = verify_theorem3(list(range(2, 9)), trials=200, n=256, seed=0,
                             out_dir=tmp_path)
    singular = {
        row["s"]: row["trials"] - row["nonsingular"] for row in report["per_s"]
    }
    frac_ok = all(row["nonsingular_fraction"] >= 0.99 for row in report["per_s"])
    interp_ok = all(row["interp_below_1e8_tame"] for row in report["per_s"])
    worst = max(row["max_interp_residual_tame"] for row in report["per_s"])
    dt = time.perf_counter() - t0
    ok = frac_ok and interp_ok and dt < 300.0
    _verdict(
        7,
        ok,
        f"nonsingular >=99% for every s (singular counts {singular}), "
        f"max tame interpolation residual {worst:.2e} (<=1e-8), "
        f"{dt:.0f}s (<300s)",
    )


def test_criterion_8_known_poles_monotone(tmp_path):
    # Success probability must not decrease as more poles are revealed,
    # up to twice the binomial standard error of each difference.
    t0 = time.perf_counter()
    res = run_experiment(preset_config("C1"), tmp_path)
    cells = sorted(
        (c for c in res.summary["cells"]), key=lambda c: c["p"]
    )
    probs = [c["probability"] for c in cells]
    trials = [c["trials"] for c in cells]
    drops = []
    mono = True
    for a, b, ta, tb in zip(probs, probs[1:], trials, trials[1:]):
        sigma = np.sqrt(a * (1 - a) / ta + b * (1 - b) / tb)
        drops.append(b - a)
        if b - a < -2.0 * sigma:
            mono = False
    dt = time.perf_counter() - t0
    ok = mono and dt < 1800.0
    _verdict(
        8,
        ok,
        f"success probability by known poles {[f'{p:.2f}' for p in probs]} "
        f"(steps {[f'{d:+.2f}' for d in drops]}, each >= -2 sigma), "
        f"{dt / 60:.1f} min (<30)",
    )


def test_criterion_9_weighted_showcase():
    # One fully observed instance drawn from the concentrated prior: the
    # weighted dual localizes all 5 poles and touches the band weight at
    # each; the standard dual misses at least one pole.
    prior = Probabilistic((Band(0.0, 0.2), Band(0.2, 1.0)), (0.2008, 200.8))
    rng = np.random.default_rng(SHOWCASE_SEED)
    truth = random_instance(64, 5, prior, None, rng)
    obs = synthesize(truth, SampleSet(64, tuple(range(64))))
    opts = SolveOptions(eps_abs=1e-6, eps_rel=1e-6)

    d_w = dual_sdp_weighted(obs, prior, opts)
    f_w = localize(d_w, prior)
    tf = np.sort(truth.frequencies)
    hit = (
        len(f_w) == 5
        and float(np.max(wrap_distance(np.sort(f_w), tf))) <= 1e-4
    )
    qs = np.abs(eval_dual(d_w.q_array(), tf))
    ws = prior.weight_at(tf)
    touch = float(np.max(np.abs(qs - ws) / ws))

    try:
        f_s = localize(dual_sdp_standard(obs, opts), 1.0)
        std_hits = (
            len(f_s) == 5
            and float(np.max(wrap_distance(np.sort(f_s), tf))) <= 1e-4
        )
        std_note = f"located {len(f_s)} of 5"
    except SolverFailure as e:
        std_hits = False
        std_note = f"solver {e.solution.status}"

    ok = hit and touch <= 1e-3 and not std_hits
    _verdict(
        9,
        ok,
        f"weighted dual found all 5 poles={hit}, max |Q(f_j)|/w deviation "
        f"{touch:.2e} (<=1e-3); standard dual {std_note} (must fail)",
    )
