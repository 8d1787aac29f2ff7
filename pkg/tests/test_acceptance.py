"""One test per acceptance criterion; each prints a PASS/FAIL line."""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from calderonlab import maximal, seqspace, transform, weights
from calderonlab.calderon import InterpolationSetup, factorize, product_norm_bounds
from calderonlab.dyadic import CubeFamily, IndexWindow
from calderonlab.experiments import duality_error, exponent_identity_error, random_step_weight, reconstruction_error
from calderonlab.seqspace import SpaceSpec, random_coeffs

from conftest import ACCEPTANCE_LINES

BASE = IndexWindow(1, 8, -3, 3, 4)
LADDER = BASE.refined(2).grown(1)  # R doubled, one extra level per side
T = weights.GeometricSequence(0.5, weights.ShiftedPowerWeight(0.3), 2.0)
U = weights.GeometricSequence(-0.4, weights.PowerWeight(0.2), 3.0)
INF = math.inf

# (theta, (p0, q0), (p1, q1)), all exponents strictly inside (1, inf)
PARAMS = [
    (0.4, (2.0, 1.5), (3.0, 4.0)),
    (0.3, (2.0, 3.0), (3.0, 1.5)),
    (0.5, (2.0, 2.0), (3.0, 3.0)),
    (0.7, (1.5, 4.0), (5.0, 2.0)),
    (0.2, (4.0, 1.2), (1.3, 6.0)),
]


def report(number: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def setup_for(variant: str, theta, e0, e1) -> InterpolationSetup:
    fam0 = "b" if variant == "b" else "f"
    s1 = SpaceSpec("f_infinity", INF, e1[1], U) if variant == "f_infinity" else SpaceSpec(variant, *e1, U)
    return InterpolationSetup(theta, SpaceSpec(fam0, *e0, T), s1)


def test_criterion_01_ap_threshold():
    t0 = time.perf_counter()
    fam = CubeFamily.enlarged(BASE)
    verdicts = {a: weights.estimate_ap_constant(weights.PowerWeight(a), 2.0, fam).verdict
                for a in (-0.5, 0.0, 0.5, 0.9, 1.1, 1.5)}
    elapsed = time.perf_counter() - t0
    expected = {a: "stable" if -1 < a < 1 else "growing" for a in verdicts}
    ok = verdicts == expected and elapsed < 5.0
    report(1, ok, f"A_p verdicts {verdicts} in {elapsed:.2f}s (limit 5s)")


def test_criterion_02_ap_duality():
    fam = CubeFamily.enlarged(BASE)
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(20):
        gamma = random_step_weight(1, rng)
        for p in (1.5, 2.0, 3.0):
            worst = max(worst, duality_error(gamma, p, fam))
    report(2, worst <= 1e-10, f"A_p duality max relative error {worst:.2e} (tol 1e-10)")


def test_criterion_03_factorization_exactness():
    worst_rec = worst_id = 0.0
    for theta, e0, e1 in PARAMS:
        s = setup_for("f", theta, e0, e1)
        worst_id = max(worst_id, exponent_identity_error(s, 1))
        for trial in range(100):
            lam = random_coeffs(BASE, np.random.default_rng([3, trial]), 200)
            worst_rec = max(worst_rec, reconstruction_error(lam, factorize(lam, s), theta))
    ok = worst_rec <= 1e-12 and worst_id <= 1e-12
    report(3, ok, f"reconstruction error {worst_rec:.2e}, exponent identities {worst_id:.2e} (tol 1e-12)")


@pytest.mark.parametrize("variant", ["f", "b", "f_infinity"])
def test_criterion_04_two_sided_bounds(variant):
    violations = 0
    worst_change = 0.0
    for theta, e0, e1 in PARAMS:
        s = setup_for(variant, theta, e0, e1)
        maxima = [0.0, 0.0]
        for trial in range(100):
            lam = random_coeffs(BASE, np.random.default_rng([4, trial]), 200)
            for i, w in enumerate((BASE, LADDER)):
                b = product_norm_bounds(lam.on_window(w), s)
                violations += b.lower > b.upper * (1 + 1e-12)
                maxima[i] = max(maxima[i], b.ratio)
        worst_change = max(worst_change, abs(maxima[1] / maxima[0] - 1))
    ok = violations == 0 and worst_change < 0.2
    report(4, ok, f"{variant}: lower>upper in {violations} cases, max upper/lower changed {worst_change:.4%} (limit 20%)")


def test_criterion_05_finf_rewrite():
    worst = 0.0
    rng = np.random.default_rng(5)
    seqs = [T, U, weights.GeometricSequence(0.2, weights.ShiftedPowerWeight(-0.4), 2.0)]
    for trial in range(50):
        t = seqs[trial % 3]
        q = float(rng.uniform(0.5, 4.0))
        spec = SpaceSpec("f_infinity", INF, q, t)
        lam = random_coeffs(BASE, rng, 200)
        a = seqspace.finf_norm(lam, spec)
        b = seqspace.finf_norm_local(lam, spec, seqspace.local_weight_table(t, BASE, q))
        worst = max(worst, abs(a - b) / a)
    report(5, worst <= 1e-10, f"finf local rewrite max relative error {worst:.2e} (tol 1e-10)")


def test_criterion_06_starred_equivalence():
    lines, ok = [], True
    for fam in ("f", "b"):
        spec = SpaceSpec(fam, 1.5, 1.2, weights.GeometricSequence(0.5, weights.ShiftedPowerWeight(0.4), 1.5))
        unit = SpaceSpec(fam, 1.5, 1.2)
        C = [1.0, 1.0]
        unit_err = 0.0
        for trial in range(100):
            lam = random_coeffs(BASE, np.random.default_rng([6, trial]), 200)
            for i, w in enumerate((BASE, LADDER)):
                lw = lam.on_window(w)
                r = seqspace.star_norm(lw, spec) / seqspace.norm(lw, spec)
                C[i] = max(C[i], r, 1 / r)
            unit_err = max(unit_err, abs(seqspace.star_norm(lam, unit) / seqspace.norm(lam, unit) - 1))
        change = abs(C[1] / C[0] - 1)
        ok = ok and unit_err <= 1e-10 and change < 0.1
        lines.append(f"{fam}: C={C[0]:.4f} (change {change:.2%}), unit-weight error {unit_err:.1e}")
    report(6, ok, "; ".join(lines) + " (C change limit 10%, exact tol 1e-10)")


def test_criterion_07_maximal_inequalities():
    windows = (BASE, BASE.refined(2))
    fams = [CubeFamily.enlarged(w) for w in windows]
    fs_max, wt_max = [0.0, 0.0], [0.0, 0.0]
    for trial in range(100):
        for i, (w, fam) in enumerate(zip(windows, fams)):
            fs = maximal.random_stack(w, np.random.default_rng([7, trial]))
            fs_max[i] = max(fs_max[i], maximal.fefferman_stein_ratio(fs, 2.0, 2.0, 0.5, fam))
            wt_max[i] = max(wt_max[i], maximal.weighted_maximal_ratio(fs, T, 2.0, 2.0, fam).ratio)
    d_fs = abs(fs_max[1] / fs_max[0] - 1)
    d_wt = abs(wt_max[1] / wt_max[0] - 1)
    ok = d_fs < 0.1 and d_wt < 0.1
    report(7, ok, f"Fefferman-Stein max {fs_max[0]:.3f} change {d_fs:.2%}, weighted max {wt_max[0]:.3f} "
                  f"change {d_wt:.2%} (limit 10%)")


def test_criterion_08_transform_round_trip():
    t0 = time.perf_counter()
    wp = transform.build_windows("bump")
    part = transform.partition_error(wp, 4096)
    rng = np.random.default_rng(8)
    worst = max(transform.round_trip_error(transform.random_band_limited(1, 4096, rng), wp) for _ in range(20))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and part <= 1e-10 and elapsed < 10
    report(8, ok, f"round trip {worst:.2e} (tol 1e-6), partition {part:.2e} (tol 1e-10), {elapsed:.2f}s (limit 10s)")


def test_criterion_09_window_independence():
    A, B = transform.build_windows("bump"), transform.build_windows("narrow")
    lines, ok = [], True
    for fam, p in (("f", 1.5), ("b", 1.5), ("f_infinity", INF)):
        spec = SpaceSpec(fam, p, 1.2, weights.GeometricSequence(0.3, p=1.5))
        C = []
        for N in (4096, 8192):
            rng = np.random.default_rng(9)
            vals = [transform.window_independence_ratio(transform.random_band_limited(1, N, rng), A, B, spec)
                    for _ in range(20)]
            C.append(max(max(vals), 1 / min(vals)))
        change = abs(C[1] / C[0] - 1)
        ok = ok and change < 0.1
        lines.append(f"{fam}: C={C[0]:.4f} change {change:.2%}")
    report(9, ok, "; ".join(lines) + " (limit 10%)")


NORMS = {
    "bnorm": ("b", lambda lam, s: seqspace.bnorm(lam, s)),
    "fnorm": ("f", lambda lam, s: seqspace.fnorm(lam, s)),
    "finf_norm": ("f_infinity", lambda lam, s: seqspace.finf_norm(lam, s)),
    "bnorm_star": ("b", lambda lam, s: seqspace.star_norm(lam, s)),
    "fnorm_star": ("f", lambda lam, s: seqspace.star_norm(lam, s)),
    "finf_norm_local": ("f_infinity", lambda lam, s: seqspace.star_norm(lam, s)),
}


def test_criterion_10_quasi_norm_axioms():
    rng = np.random.default_rng(10)
    w = IndexWindow(1, 4, -2, 2, 4)
    bad = {name: 0 for name in NORMS}
    for name, (fam, fn) in NORMS.items():
        for _ in range(200):
            p, q = (float(x) for x in rng.uniform(0.5, 3.0, 2))
            spec = SpaceSpec(fam, INF if fam == "f_infinity" else p, q, T)
            lam, mu = random_coeffs(w, rng, 30), random_coeffs(w, rng, 30)
            a, b = fn(lam, spec), fn(mu, spec)
            c = complex(*rng.standard_normal(2))
            hom = abs(fn(c * lam, spec) - abs(c) * a) <= 1e-12 * abs(c) * a
            shrunk = lam.map(lambda x: x * rng.uniform(0, 1, x.shape))
            mono = fn(shrunk, spec) <= a * (1 + 1e-12)
            K = max(1.0, 2.0 ** (1 / min(spec.p, q) - 1))
            tri = fn(lam + mu, spec) <= K * (a + b) * (1 + 1e-12)
            bad[name] += not (hom and mono and tri)
    report(10, not any(bad.values()), f"axiom violations over 200 pairs each: {bad}")
