"""Partial sums of the random Dirichlet series and abscissa estimation.

The series is A(N; s) = sum_{n <= N} y[n] n**(-s) for a sampled coefficient
path y. Its variance at real s = sigma is sum_{n <= N} W_r(n) n**(-2 sigma).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .arithmetic import MangoldtTable
from .config import Budgets, DegenerateError, default_budgets
from .convolution import CoefficientArrays, composition_count, goldbach_coefficients
from .ensemble import (
    EXACT,
    SignedPath,
    SeedSpec,
    exact_distribution,
    normalize_mode,
    sample_coefficients,
    sample_path,
)
from .summation import checkpoint_sums

DEFAULT_N0 = 64
MAD_SCALE = 1.4826
TAIL_TOLERANCE = 0.05


def geometric_checkpoints(n_max: int, n0: int = DEFAULT_N0, per_octave: int = 4) -> np.ndarray:
    """N_k = ceil(n0 * 2**(k / per_octave)) for all N_k <= n_max."""
    out = []
    k = 0
    while True:
        N = math.ceil(n0 * 2.0 ** (k / per_octave))
        if N > n_max:
            break
        if not out or N != out[-1]:
            out.append(N)
        k += 1
    return np.array(out, dtype=np.int64)


def _validate_checkpoints(checkpoints, n_max: int) -> np.ndarray:
    cps = np.asarray(checkpoints, dtype=np.int64)
    if cps.ndim != 1 or cps.size == 0:
        raise ValueError("checkpoints must be a non-empty 1-d sequence")
    if np.any(np.diff(cps) <= 0):
        raise ValueError("checkpoints must be strictly increasing")
    if cps[0] < 1 or cps[-1] > n_max:
        raise IndexError(f"checkpoints must lie in [1, {n_max}]")
    return cps


def _power(n_max: int, exponent: float) -> np.ndarray:
    """n**exponent for n = 0..n_max with slot 0 set to 0."""
    n = np.arange(n_max + 1, dtype=np.float64)
    n[0] = 1.0
    out = np.power(n, exponent)
    out[0] = 0.0
    return out


@dataclass(frozen=True, eq=False)
class PartialSumTrace:
    s: complex
    checkpoints: np.ndarray
    values: np.ndarray
    r: int
    seed: SeedSpec | None


def partial_sum_trace(path: SignedPath, s: complex, checkpoints: Sequence[int]) -> PartialSumTrace:
    """A(N_k; s) for the sampled path, summed in ascending n."""
    cps = _validate_checkpoints(checkpoints, path.n_max)
    s = complex(s)
    n = np.arange(path.n_max + 1, dtype=np.float64)
    n[0] = 1.0
    logn = np.log(n)
    mag = path.y * np.exp(-s.real * logn)
    phase = -s.imag * logn
    re = checkpoint_sums(mag * np.cos(phase), cps)
    im = checkpoint_sums(mag * np.sin(phase), cps) if s.imag != 0 else np.zeros(cps.size)
    return PartialSumTrace(s=s, checkpoints=cps, values=re + 1j * im, r=path.r, seed=path.seed)


def coefficient_sums(y: np.ndarray, checkpoints: Sequence[int]) -> np.ndarray:
    """Unweighted A(N) = sum_{n <= N} y[n] at the checkpoints."""
    return checkpoint_sums(np.asarray(y, dtype=np.float64), checkpoints)


def variance_series(coeffs: CoefficientArrays, sigma: float, checkpoints: Sequence[int]) -> np.ndarray:
    """Partial sums of V(X_n) = W_r(n) / n**(2 sigma) at each checkpoint."""
    cps = _validate_checkpoints(checkpoints, coeffs.n_max)
    terms = coeffs.w * _power(coeffs.n_max, -2.0 * sigma)
    return checkpoint_sums(terms, cps)


def truncate_unit(x):
    """Clip to the closed unit disc: x if |x| <= 1, else x / |x|."""
    if np.ndim(x) == 0:
        a = abs(x)
        return x if a <= 1 else x / a
    x = np.asarray(x)
    a = np.abs(x)
    return np.where(a > 1, x / np.where(a > 1, a, 1), x)


def truncated_variance(
    table: MangoldtTable,
    r: int,
    n: int,
    sigma: float,
    replicates: int,
    seed: SeedSpec,
    budgets: Budgets | None = None,
) -> float:
    """V(X'_n) for X'_n = truncate_unit(Y_r(n, .) n**(-sigma)).

    Exact (from the enumerated pmf) when L(n) fits the pmf budget, otherwise a
    Monte Carlo estimate over ``replicates`` seeds starting at ``seed``.
    """
    if replicates < 100:
        raise ValueError("replicates must be >= 100")
    budgets = budgets or default_budgets()
    scale = float(n) ** (-sigma)
    if composition_count(n, r) <= budgets.exact_pmf_bits:
        dist = exact_distribution(table, r, n, budgets)
        x = truncate_unit(dist.support * scale)
        p = dist.mass
        mean = math.fsum((p * x).tolist())
        second = math.fsum((p * x * x).tolist())
        return second - mean * mean
    seeds = [SeedSpec(seed.master_seed, seed.replicate_id + k) for k in range(replicates)]
    x = truncate_unit(sample_coefficients(table, r, n, seeds, budgets=budgets) * scale)
    return float(np.var(x, ddof=1))


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope and its standard error."""
    xm = x - x.mean()
    sxx = float(xm @ xm)
    slope = float(xm @ (y - y.mean())) / sxx
    resid = y - y.mean() - slope * xm
    dof = x.size - 2
    stderr = math.sqrt(float(resid @ resid) / dof / sxx) if dof > 0 else float("nan")
    return slope, stderr


def loglog_slope(checkpoints, values, min_points: int = 4) -> tuple[float, float]:
    """Slope of log|values| against log N, skipping exact zeros."""
    cps = np.asarray(checkpoints, dtype=np.float64)
    v = np.abs(np.asarray(values, dtype=np.float64))
    keep = v > 0
    if keep.sum() < min_points:
        raise DegenerateError(f"only {int(keep.sum())} usable checkpoints, need {min_points}")
    return _ols(np.log(cps[keep]), np.log(v[keep]))


def growth_exponent(path: SignedPath, checkpoints: Sequence[int] | None = None) -> tuple[float, float]:
    """Growth rate of the coefficient sums: slope of log|A(N_k)| vs log N_k.

    For a Dirichlet series whose coefficient sums diverge, the abscissa of
    convergence is limsup log|A(N)| / log N, so this slope is its finite-N proxy.
    """
    cps = geometric_checkpoints(path.n_max) if checkpoints is None else checkpoints
    cps = _validate_checkpoints(cps, path.n_max)
    if cps.size < 8:
        raise ValueError("growth_exponent needs at least 8 checkpoints")
    return loglog_slope(cps, coefficient_sums(path.y, cps))


def tail_convergent(path: SignedPath, sigma: float, checkpoints: Sequence[int]) -> bool:
    """Tail-oscillation classifier at real s = sigma.

    Convergent when max_{N > n_max/2} |A(N) - A(n_max)| < 0.05 max_N |A(N)|.
    The last checkpoint is taken as n_max.
    """
    cps = _validate_checkpoints(checkpoints, path.n_max)
    A = partial_sum_trace(path, sigma, cps).values.real
    end = cps[-1]
    tail = np.abs(A[cps > end / 2] - A[-1])
    peak = float(np.abs(A).max())
    if peak == 0.0:
        return True
    return float(tail.max()) < TAIL_TOLERANCE * peak


def grid_abscissa(path: SignedPath, sigmas: Sequence[float], checkpoints: Sequence[int]) -> float:
    """Smallest grid sigma from which the path is classified convergent upward."""
    sig = np.sort(np.asarray(sigmas, dtype=np.float64))
    flags = [tail_convergent(path, float(s), checkpoints) for s in sig]
    hat = float("inf")
    for s, ok in zip(sig[::-1], flags[::-1]):
        if not ok:
            break
        hat = float(s)
    return hat


@dataclass(frozen=True, eq=False)
class AbscissaEstimate:
    r: int
    sigma_hat: float
    stderr: float
    ensemble_size: int
    n_max: int
    method: str
    mode: str
    per_replicate: np.ndarray = field(repr=False)


def estimate_abscissa(
    table: MangoldtTable,
    r: int,
    n_max: int,
    ensemble: int,
    seed: SeedSpec,
    mode: str = EXACT,
    method: Literal["coefficient_growth", "sigma_grid"] = "coefficient_growth",
    checkpoints: Sequence[int] | None = None,
    sigmas: Sequence[float] | None = None,
    coeffs: CoefficientArrays | None = None,
    threads: int = 1,
    budgets: Budgets | None = None,
) -> AbscissaEstimate:
    """Median per-path abscissa over ``ensemble`` replicates 0..ensemble-1.

    ``stderr`` is 1.4826 * MAD / sqrt(ensemble). Replicate results are merged
    in replicate order, so ``threads`` never changes the outcome.
    """
    if ensemble < 30:
        raise ValueError("ensemble must be >= 30")
    mode = normalize_mode(mode)
    if mode != EXACT and coeffs is None:
        coeffs = goldbach_coefficients(table, r, n_max, "fft")
    if method == "coefficient_growth":
        cps = geometric_checkpoints(n_max) if checkpoints is None else np.asarray(checkpoints)
    elif method == "sigma_grid":
        cps = geometric_checkpoints(n_max) if checkpoints is None else np.asarray(checkpoints)
        if cps[-1] != n_max:
            cps = np.append(cps, n_max)
        sigmas = np.round(np.arange(0.0, r + 0.5 + 1e-9, 0.05), 10) if sigmas is None else sigmas
    else:
        raise ValueError(f"unknown method {method!r}")

    def one(k: int) -> float:
        path = sample_path(table, r, n_max, SeedSpec(seed.master_seed, k), mode, coeffs, budgets=budgets)
        if method == "coefficient_growth":
            return growth_exponent(path, cps)[0]
        return grid_abscissa(path, sigmas, cps)

    ids = range(ensemble)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            vals = np.array(list(pool.map(one, ids)))
    else:
        vals = np.array([one(k) for k in ids])

    med = float(np.median(vals))
    mad = float(np.median(np.abs(vals - med))) if np.isfinite(med) else float("nan")
    return AbscissaEstimate(
        r=r,
        sigma_hat=med,
        stderr=MAD_SCALE * mad / math.sqrt(ensemble),
        ensemble_size=ensemble,
        n_max=n_max,
        method=method,
        mode=mode,
        per_replicate=vals,
    )
