"""Acceptance criteria, each run at its stated tolerance and time limit.

Every sub-check appends one PASS/FAIL line to LINES; conftest prints them in
the terminal summary. A test fails if any of its sub-checks fails.
"""

import math
import time

import numpy as np
import pytest

from rmdl import (
    SeedSpec,
    build_mangoldt_table,
    convolve_power_direct,
    convolve_power_fft,
    estimate_abscissa,
    exact_distribution,
    geometric_checkpoints,
    goldbach_coefficients,
    hl_lower_bound_check,
    sample_path,
    symmetry_check,
    variance_series,
)
from rmdl.cli import dispatch
from rmdl.dirichlet import loglog_slope
from rmdl.ensemble import sample_coefficients
from rmdl.goldbach import divergence_profile

LINES: list[str] = []


class Criterion:
    def __init__(self, cid: str, limit_s: float):
        self.cid = cid
        self.limit = limit_s
        self.ok = True
        self.start = time.perf_counter()

    def check(self, label: str, ok: bool, detail: str) -> None:
        ok = bool(ok)
        self.ok &= ok
        LINES.append(f"{'PASS' if ok else 'FAIL'}  {self.cid} {label}: {detail}")

    def finish(self) -> None:
        dt = time.perf_counter() - self.start
        self.check("runtime", dt < self.limit, f"{dt:.1f} s (limit {self.limit:g} s)")
        assert self.ok, f"{self.cid} failed; see the acceptance summary"


def _tail_change(S):
    return abs(S[-1] - S[0]) / abs(S[0])


def _slope_over(coeffs, sigma, lo, hi):
    cps = geometric_checkpoints(hi)
    cps = cps[cps >= lo]
    return loglog_slope(cps, variance_series(coeffs, sigma, cps))[0]


def test_c1_fft_matches_direct():
    c = Criterion("C1", 10)
    t = build_mangoldt_table(2000)
    for r in (2, 3, 4):
        for name, wt in (("G", t.lam), ("W", t.lam_squared)):
            d = convolve_power_direct(wt, r, 2000)
            f, bound = convolve_power_fft(wt, r, 2000)
            err = float(np.abs(f - d).max())
            nz = d > 0
            per_entry = float((np.abs(f - d)[nz] / d[nz]).max())
            c.check(
                f"r={r} {name}_r",
                err <= 1e-9 * d.max() and err <= bound,
                f"max|fft-direct|/max = {err / d.max():.2e} <= 1e-9, within certified bound {bound:.2e}"
                f" (largest per-entry relative {per_entry:.1e})",
            )
    c.finish()


def test_c2_deterministic_bound():
    c = Criterion("C2", 30)
    t = build_mangoldt_table(10**5)
    n = np.arange(2, 10**5 + 1, dtype=float)
    for r in (2, 3):
        g = goldbach_coefficients(t, r, 10**5, "fft")
        bound = n ** (r - 1) * np.log(n) ** r
        ratio = float((g.g[2:] / bound).max())
        c.check(f"G_{r}(n) <= n^{r - 1}(log n)^{r}, n in [2, 1e5]", np.all(g.g[2:] <= bound + g.g_error_bound),
                f"max ratio {ratio:.4f}")
    bound = n * np.log(n) ** 2
    worst = 0.0
    for k in range(20):
        y = sample_path(t, 2, 10**5, SeedSpec(42, k)).y
        worst = max(worst, float((np.abs(y[2:]) / bound).max()))
    c.check("|y[n]| on 20 exact r=2 paths", worst <= 1.0, f"max ratio {worst:.4f}")
    c.finish()


def test_c3_symmetry():
    c = Criterion("C3", 60)
    t = build_mangoldt_table(64)
    for r in (2, 3):
        cases = [n for n in range(r, 64) if math.comb(n - 1, r - 1) <= 24]
        bad = [n for n in cases if not symmetry_check(exact_distribution(t, r, n))]
        c.check(f"r={r} all n with L(n) <= 24", not bad,
                f"{len(cases)} cases (n = {cases[0]}..{cases[-1]}), asymmetric: {bad or 'none'}")
    c.finish()


def test_c4_mean_and_variance():
    c = Criterion("C4", 60)
    t = build_mangoldt_table(1000)
    W = goldbach_coefficients(t, 2, 1000, "direct").w[1000]
    y = sample_coefficients(t, 2, 1000, [SeedSpec(42, k) for k in range(10**4)])
    tol = 4 * math.sqrt(W) / 100
    c.check("mean of Y_2(1000)", abs(y.mean()) <= tol, f"|mean| = {abs(y.mean()):.3f} <= {tol:.3f}")
    rel = y.var(ddof=1) / W - 1
    c.check("variance of Y_2(1000) vs W_2(1000)", abs(rel) < 0.15, f"relative deviation {rel:+.4f}, |.| < 0.15")
    c.finish()


def test_c5_variance_threshold():
    c = Criterion("C5", 120)
    t = build_mangoldt_table(10**6)
    for r in (1, 2):
        coeffs = goldbach_coefficients(t, r, 10**6, "fft")
        sigma = r / 2 + 0.25
        change = _tail_change(variance_series(coeffs, sigma, [5 * 10**5, 10**6]))
        c.check(f"convergent r={r} sigma={sigma}", change < 0.02, f"change 5e5 -> 1e6 = {change:.4%} < 2%")
        sigma = r / 2 - 0.2
        slope = _slope_over(coeffs, sigma, 10**4, 10**6)
        target = r - 2 * sigma
        c.check(f"divergent r={r} sigma={sigma:.1f}", abs(slope - target) <= 0.07,
                f"slope {slope:.4f}, target {target:.2f} +- 0.07")
    c.finish()


def test_c6_abscissa():
    c = Criterion("C6", 600)
    t = build_mangoldt_table(10**5)
    cases = ((1, "exact", 0.45, 0.60), (2, "exact", 0.95, 1.10), (3, "surrogate", 1.40, 1.60))
    for r, mode, lo, hi in cases:
        est = estimate_abscissa(t, r, 10**5, 100, SeedSpec(42), mode)
        c.check(f"r={r} ({est.mode})", lo <= est.sigma_hat <= hi,
                f"sigma_hat {est.sigma_hat:.4f} +- {est.stderr:.4f}, target [{lo}, {hi}]")
    c.finish()


def test_c7_r1_threshold():
    c = Criterion("C7", 30)
    t = build_mangoldt_table(10**6)
    coeffs = goldbach_coefficients(t, 1, 10**6, "fft")
    change = _tail_change(variance_series(coeffs, 0.75, [5 * 10**5, 10**6]))
    c.check("sigma=0.75 last doubling", change < 0.01, f"change {change:.4%} < 1%")
    slope = _slope_over(coeffs, 0.3, 10**4, 10**6)
    c.check("sigma=0.3 log-log slope", abs(slope - 0.4) <= 0.05, f"slope {slope:.4f}, target 0.4 +- 0.05")
    c.finish()


def test_c8_goldbach():
    c = Criterion("C8", 120)
    t = build_mangoldt_table(10**6)
    bad = [n for n in range(6, 10**4 + 1, 2) if not hl_lower_bound_check(t, n)]
    c.check("lower bound, even n in [6, 1e4]", not bad, f"{(10**4 - 6) // 2 + 1} values, violations: {bad or 'none'}")
    prof = divergence_profile(goldbach_coefficients(t, 2, 10**6, "fft"))
    dev = prof.relative_deviation
    c.check("sigma=1 slope stable", prof.slope > 0 and abs(dev) <= 0.25,
            f"slope {prof.slope:.3f} vs upper-half {prof.upper_slope:.3f}: {dev:+.1%}, limit +-25%")
    c.finish()


def test_c9_determinism(tmp_path):
    c = Criterion("C9", 300)
    runs = {
        "sample r=2 exact": ["sample", "--r", "2", "--n-max", "100000", "--seed", "42", "--replicate", "7"],
        "sample r=3 surrogate": ["sample", "--r", "3", "--n-max", "100000", "--seed", "42", "--mode", "surrogate"],
        "abscissa r=1": ["abscissa", "--r", "1", "--n-max", "100000", "--ensemble", "100", "--seed", "42"],
        "abscissa r=2": ["abscissa", "--r", "2", "--n-max", "20000", "--ensemble", "30", "--seed", "42"],
    }
    for label, argv in runs.items():
        blobs = []
        for threads in (1, 8):
            out = tmp_path / f"{argv[0]}_{len(blobs)}_{threads}.out"
            code = dispatch(argv + ["--threads", str(threads), "--out", str(out)])
            blobs.append(out.read_bytes() if code == 0 else None)
        c.check(label, blobs[0] is not None and blobs[0] == blobs[1], "threads 1 vs 8 bit-identical")
    c.finish()
