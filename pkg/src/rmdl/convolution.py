"""r-fold additive convolutions of arithmetic weights.

G_r(n) sums Lambda(m_1)...Lambda(m_r) over compositions m_1 + ... + m_r = n
of n into positive parts; W_r(n) is the same sum with squared weights. Both
are r-fold additive self-convolutions of a weight array indexed from 1.

Two routes are provided: a direct enumeration with correctly rounded sums,
used as the reference, and an FFT route with an a-priori error bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .arithmetic import MangoldtTable
from .config import BudgetError, PrecisionError, default_budgets

INT64_MAX = 2**63 - 1
UNIT_ROUNDOFF = 2.0**-53
FFT_MAX_N = 2**22
PRECISION_LIMIT = 1e-6

# Percival-style roundoff model for a radix-2 real convolution of length
# L = 2**k: |fft - exact| <= |a|_2 |b|_2 u (13 k + 3).
FFT_LOG_COEFF = 13.0
FFT_CONST = 3.0

Method = Literal["direct", "fft"]


def composition_count(n: int, r: int) -> int:
    """L(n) = C(n-1, r-1): number of r-tuples of positive integers summing to n."""
    if n < 1 or r < 1:
        raise ValueError("n and r must be positive")
    if n < r:
        return 0
    return math.comb(n - 1, r - 1)


def composition_count_u64(n: int, r: int) -> tuple[int, bool]:
    """L(n) clipped to the signed 64-bit range, with a saturation flag."""
    count = composition_count(n, r)
    if count > INT64_MAX:
        return INT64_MAX, True
    return count, False


def _prepare(weights, n_max: int) -> np.ndarray:
    w = np.zeros(n_max + 1, dtype=np.float64)
    src = np.asarray(weights, dtype=np.float64)[: n_max + 1]
    w[: src.size] = src
    w[0] = 0.0
    return w


def _convolve_direct(a: np.ndarray, w: np.ndarray, support: np.ndarray, n_max: int) -> np.ndarray:
    out = np.zeros(n_max + 1, dtype=np.float64)
    cuts = np.searchsorted(support, np.arange(n_max + 1) - 1, side="right")
    for n in range(2, n_max + 1):
        m = support[: cuts[n]]
        if m.size:
            out[n] = math.fsum((w[m] * a[n - m]).tolist())
    return out


def convolve_power_direct(weights, r: int, n_max: int, cap: int | None = None) -> np.ndarray:
    """Reference r-fold convolution by enumeration.

    Folds one factor at a time; every output entry of every fold is a
    correctly rounded ``math.fsum`` of its products. Only the nonzero support
    of ``weights`` is enumerated, so sparse weights such as Lambda are cheap.

    Returns an array of length n_max + 1 with slot 0 equal to zero.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    cap = default_budgets().direct_cap if cap is None else cap
    if n_max > cap:
        raise BudgetError(f"direct convolution capped at n_max={cap}, got {n_max}")
    w = _prepare(weights, n_max)
    support = np.flatnonzero(w)
    out = w.copy()
    for _ in range(r - 1):
        out = _convolve_direct(out, w, support, n_max)
    return out


def fft_roundoff_bound(norm_a: float, norm_b: float, length: int) -> float:
    """A-priori sup-norm error of one FFT convolution of the given 2-norms."""
    k = max(1, int(length).bit_length() - 1)
    return norm_a * norm_b * UNIT_ROUNDOFF * (FFT_LOG_COEFF * k + FFT_CONST)


def _fft_length(n_max: int) -> int:
    return 1 << (2 * (n_max + 1) - 1).bit_length()


def _fft_stage(a, ea, b, eb, n_max, square, nonneg):
    L = _fft_length(n_max)
    fa = np.fft.rfft(a, L)
    fb = fa if square else np.fft.rfft(b, L)
    c = np.fft.irfft(fa * fb, L)[: n_max + 1]
    c[0] = 0.0
    if nonneg:
        # exact values are >= 0, so clipping can only shrink the error
        np.maximum(c, 0.0, out=c)
    bound = fft_roundoff_bound(float(np.linalg.norm(a)), float(np.linalg.norm(b)), L)
    bound += ea * float(np.abs(b).sum()) + eb * float(np.abs(a).sum()) + ea * eb * (n_max + 1)
    return c, bound


def convolve_power_fft(weights, r: int, n_max: int) -> tuple[np.ndarray, float]:
    """r-fold convolution by FFT with repeated squaring.

    Every stage is truncated back to n_max, so transforms stay at length
    ~2 n_max regardless of r. The returned bound is certified elementwise:
    it composes the per-stage roundoff model with the propagated error of
    the (already approximate) stage inputs.

    Raises:
        PrecisionError: if the bound exceeds 1e-6 times the largest entry.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    if n_max > FFT_MAX_N:
        raise BudgetError(f"fft convolution capped at n_max=2**22, got {n_max}")
    w = _prepare(weights, n_max)
    nonneg = bool((w >= 0).all())

    result, e_result = None, 0.0
    base, e_base = w, 0.0
    k = r
    while True:
        if k & 1:
            if result is None:
                result, e_result = base.copy(), e_base
            else:
                result, e_result = _fft_stage(result, e_result, base, e_base, n_max, False, nonneg)
        k >>= 1
        if not k:
            break
        base, e_base = _fft_stage(base, e_base, base, e_base, n_max, True, nonneg)

    result[: min(r, n_max + 1)] = 0.0
    peak = float(np.abs(result).max())
    # an array whose peak sits inside its own bound carries no signal to be relative to
    if e_result > PRECISION_LIMIT * peak and peak > e_result:
        raise PrecisionError(
            f"certified bound {e_result:.3e} exceeds {PRECISION_LIMIT:g} x max entry {peak:.3e}"
        )
    if peak == 0.0:
        e_result = 0.0
    return result, e_result


@dataclass(frozen=True, eq=False)
class CoefficientArrays:
    """G_r and W_r on 0..n_max (slot 0 unused).

    ``max_abs_error_bound`` is the larger of the two per-array bounds; both are
    kept separately since G and W live on very different scales.
    """

    r: int
    n_max: int
    g: np.ndarray
    w: np.ndarray
    method: str
    max_abs_error_bound: float
    g_error_bound: float = 0.0
    w_error_bound: float = 0.0


def goldbach_coefficients(
    table: MangoldtTable, r: int, n_max: int, method: Method = "fft"
) -> CoefficientArrays:
    """G_r from Lambda and W_r from Lambda**2 (never by squaring G_r)."""
    if n_max > table.n_max:
        raise ValueError(f"n_max={n_max} exceeds table bound {table.n_max}")
    lam = table.lam[: n_max + 1]
    lam2 = lam * lam
    if method == "direct":
        g = convolve_power_direct(lam, r, n_max)
        w = convolve_power_direct(lam2, r, n_max)
        eg = ew = 0.0
    elif method == "fft":
        g, eg = convolve_power_fft(lam, r, n_max)
        w, ew = convolve_power_fft(lam2, r, n_max)
    else:
        raise ValueError(f"unknown method {method!r}")
    return CoefficientArrays(
        r=r, n_max=n_max, g=g, w=w, method=method,
        max_abs_error_bound=max(eg, ew), g_error_bound=eg, w_error_bound=ew,
    )
