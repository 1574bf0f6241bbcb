"""Prime-pair counts, the singular series and the r = 2 divergence diagnostic."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .arithmetic import MangoldtTable, _base_sieve
from .convolution import CoefficientArrays, convolve_power_fft
from .dirichlet import _ols, geometric_checkpoints, variance_series

MIN_PRIME_CUTOFF = 10**5
DEFAULT_PRIME_CUTOFF = 10**6
DECILES = tuple(range(10, 100, 10))


def _check_n(table: MangoldtTable, n: int, lo: int) -> None:
    if not lo <= n <= table.n_max:
        raise IndexError(f"n={n} outside [{lo}, {table.n_max}]")


def _pair_primes(table: MangoldtTable, n: int) -> np.ndarray:
    """Ordered first components p1 of prime pairs p1 + p2 = n."""
    p = table.primes
    p = p[p <= n - 2]
    return p[table.prime_flag[n - p]]


def prime_pair_count(table: MangoldtTable, n: int) -> int:
    """#{(p1, p2) ordered, both prime, p1 + p2 = n}."""
    _check_n(table, n, 4)
    return int(_pair_primes(table, n).size)


def w2_prime_part(table: MangoldtTable, n: int) -> float:
    """Sum over ordered prime pairs of (log p1)**2 (log p2)**2."""
    _check_n(table, n, 4)
    p1 = _pair_primes(table, n)
    l1 = table.lam[p1]
    l2 = table.lam[n - p1]
    return math.fsum(((l1 * l1) * (l2 * l2)).tolist())


@lru_cache(maxsize=8)
def twin_prime_constant(prime_cutoff: int = DEFAULT_PRIME_CUTOFF) -> float:
    """C2 = prod over odd primes p <= cutoff of (1 - 1/(p - 1)**2)."""
    p = np.flatnonzero(_base_sieve(prime_cutoff))[1:].astype(np.float64)
    logs = np.log1p(-1.0 / ((p - 1.0) * (p - 1.0)))
    return math.exp(math.fsum(logs.tolist()))


def singular_series_error(prime_cutoff: int) -> float:
    """Relative truncation error bound of C2 cut at ``prime_cutoff``.

    The omitted primes are odd and exceed the cutoff P, so the omitted factors
    satisfy sum 1/(p-1)**2 <= sum over even k >= P of 1/k**2 <= 1/(2P - 4) =: d,
    and the truncated product overshoots by at most d / (1 - d).
    """
    d = 1.0 / (2.0 * prime_cutoff - 4.0)
    return d / (1.0 - d)


def _odd_prime_factors(n: int) -> list[int]:
    while n % 2 == 0:
        n //= 2
    out = []
    f = 3
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 2
    if n > 1:
        out.append(n)
    return out


def singular_series(n: int, prime_cutoff: int = DEFAULT_PRIME_CUTOFF) -> float:
    """Goldbach singular series 2 C2 prod_{p | n, p > 2} (p - 1)/(p - 2); 0 for odd n."""
    if prime_cutoff < MIN_PRIME_CUTOFF:
        raise ValueError(f"prime_cutoff must be >= {MIN_PRIME_CUTOFF}")
    if n % 2:
        return 0.0
    value = 2.0 * twin_prime_constant(prime_cutoff)
    for p in _odd_prime_factors(n):
        value *= (p - 1) / (p - 2)
    return value


def singular_series_array(n_max: int, prime_cutoff: int = DEFAULT_PRIME_CUTOFF) -> np.ndarray:
    """singular_series(n) for n = 0..n_max, with the same multiplication order."""
    out = np.zeros(n_max + 1)
    out[2::2] = 2.0 * twin_prime_constant(prime_cutoff)
    for p in np.flatnonzero(_base_sieve(n_max))[1:].tolist():
        out[2 * p :: 2 * p] *= (p - 1) / (p - 2)
    out[0] = 0.0
    return out


@dataclass(frozen=True)
class GoldbachRecord:
    n: int
    pair_count: int
    w2_prime_part: float
    singular_series: float
    hl_prediction: float


def goldbach_record(table: MangoldtTable, n: int, prime_cutoff: int = DEFAULT_PRIME_CUTOFF) -> GoldbachRecord:
    S = singular_series(n, prime_cutoff)
    return GoldbachRecord(
        n=n,
        pair_count=prime_pair_count(table, n),
        w2_prime_part=w2_prime_part(table, n),
        singular_series=S,
        hl_prediction=S * n / math.log(n) ** 2,
    )


def hl_lower_bound_check(table: MangoldtTable, n: int) -> bool:
    """Check sum_{p1+p2=n} (log p1 log p2)**2 >= #pairs * (log(n/2) log 2)**2.

    In every prime pair the larger prime is >= n/2 and the smaller is >= 2.
    """
    _check_n(table, n, 6)
    bound = prime_pair_count(table, n) * (math.log(n / 2) ** 2) * (math.log(2) ** 2)
    return w2_prime_part(table, n) >= bound


def pair_counts(table: MangoldtTable, n_max: int) -> np.ndarray:
    """Ordered prime-pair counts for every n <= n_max via one FFT convolution."""
    ind = table.prime_flag[: n_max + 1].astype(np.float64)
    counts, bound = convolve_power_fft(ind, 2, n_max)
    if bound >= 0.5:
        raise ArithmeticError(f"fft bound {bound} too large to round counts")
    return np.rint(counts).astype(np.int64)


def w2_prime_parts(table: MangoldtTable, n_max: int) -> tuple[np.ndarray, float]:
    """w2_prime_part for every n <= n_max by FFT, with its certified bound."""
    lam = table.lam[: n_max + 1]
    sq = np.where(table.prime_flag[: n_max + 1], lam * lam, 0.0)
    return convolve_power_fft(sq, 2, n_max)


@dataclass(frozen=True)
class RatioSummary:
    mean: float
    median: float
    deciles: tuple[float, ...]

    @classmethod
    def of(cls, x: np.ndarray) -> "RatioSummary":
        return cls(float(np.mean(x)), float(np.median(x)), tuple(float(v) for v in np.percentile(x, DECILES)))


@dataclass(frozen=True)
class HLScan:
    lo: int
    hi: int
    count: int
    g2_ratio: RatioSummary
    pair_ratio: RatioSummary


def hl_ratio_scan(
    table: MangoldtTable,
    lo: int,
    hi: int,
    coeffs: CoefficientArrays | None = None,
    prime_cutoff: int = DEFAULT_PRIME_CUTOFF,
) -> HLScan:
    """Distribution of G_2(n)/(n S(n)) and pairs(n) (log n)**2/(n S(n)) over even n in [lo, hi]."""
    if hi > table.n_max:
        raise IndexError(f"hi={hi} exceeds table bound {table.n_max}")
    n = np.arange(lo + (lo % 2), hi + 1, 2)
    n = n[n >= 4]
    if n.size == 0:
        raise ValueError("empty range")
    if coeffs is None or coeffs.r != 2 or coeffs.n_max < hi:
        g2, _ = convolve_power_fft(table.lam[: hi + 1], 2, hi)
    else:
        g2 = coeffs.g
    S = singular_series_array(hi, prime_cutoff)[n]
    pairs = pair_counts(table, hi)[n]
    nf = n.astype(np.float64)
    return HLScan(
        lo=lo,
        hi=hi,
        count=int(n.size),
        g2_ratio=RatioSummary.of(g2[n] / (nf * S)),
        pair_ratio=RatioSummary.of(pairs * np.log(nf) ** 2 / (nf * S)),
    )


@dataclass(frozen=True, eq=False)
class DivergenceProfile:
    """Partial sums of W_2(n)/n**(2 sigma) regressed on log N."""

    sigma: float
    checkpoints: np.ndarray
    partial_sums: np.ndarray
    slope: float
    upper_slope: float

    @property
    def relative_deviation(self) -> float:
        if self.upper_slope == 0.0:
            return 0.0 if self.slope == 0.0 else math.inf
        return self.slope / self.upper_slope - 1.0


def divergence_profile(
    coeffs: CoefficientArrays, checkpoints: Sequence[int] | None = None, sigma: float = 1.0
) -> DivergenceProfile:
    if coeffs.r != 2:
        raise ValueError("the divergence diagnostic needs r = 2 coefficients")
    cps = geometric_checkpoints(coeffs.n_max) if checkpoints is None else np.asarray(checkpoints, np.int64)
    S = variance_series(coeffs, sigma, cps)
    x = np.log(cps.astype(np.float64))
    half = cps.size // 2
    return DivergenceProfile(
        sigma=sigma,
        checkpoints=cps,
        partial_sums=S,
        slope=_ols(x, S)[0],
        upper_slope=_ols(x[half:], S[half:])[0],
    )


def divergence_diagnostic_sigma1(coeffs: CoefficientArrays, checkpoints: Sequence[int] | None = None) -> float:
    """Slope of sum_{n <= N} W_2(n)/n**2 against log N over all checkpoints."""
    return divergence_profile(coeffs, checkpoints, 1.0).slope
