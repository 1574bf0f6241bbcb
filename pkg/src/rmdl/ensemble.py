"""Rademacher signs on composition indices, sampled coefficients and exact pmfs.

Every sign is a pure function of (master_seed, replicate_id, r, n, rank),
where rank is the lexicographic rank of the composition (m_1, ..., m_r)
among all compositions of n into r positive parts. There is no generator
state, so any partition of the work across workers gives identical output.

Mixer (frozen; changing it changes every published sample):

    mix64(z):  z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
               z ^= z >> 27; z *= 0x94D049BB133111EB
               z ^= z >> 31                      (all mod 2**64)
    absorb(h, v) = mix64(h ^ mix64(v + 0x9E3779B97F4A7C15))
    prefix       = absorb(absorb(mix64(master_seed + 0x9E3779B97F4A7C15), replicate_id), r)
    sign         = -1 if absorb(absorb(prefix, n), rank) >> 63 else +1

Gaussian surrogate draws use the prefix absorbed with SURROGATE_TAG, then n,
then 0 and 1 for the two uniforms of a Box-Muller pair.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Literal, Sequence

import numpy as np

from .arithmetic import MangoldtTable
from .config import Budgets, BudgetError, default_budgets
from .convolution import CoefficientArrays, composition_count, convolve_power_fft
from ._kernels import signed_sums

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
MIX_C1 = 0xBF58476D1CE4E5B9
MIX_C2 = 0x94D049BB133111EB
SURROGATE_TAG = 0x5352524F47415445

_U_GAMMA = np.uint64(GAMMA)
_U_C1 = np.uint64(MIX_C1)
_U_C2 = np.uint64(MIX_C2)
_S30, _S27, _S31, _S63, _S11 = (np.uint64(k) for k in (30, 27, 31, 63, 11))

EXACT = "exact_enumeration"
SURROGATE = "gaussian_surrogate"
_MODE_ALIASES = {"exact": EXACT, EXACT: EXACT, "surrogate": SURROGATE, SURROGATE: SURROGATE}

Mode = Literal["exact", "surrogate", "exact_enumeration", "gaussian_surrogate"]


def mix64(z: int) -> int:
    z &= MASK64
    z ^= z >> 30
    z = (z * MIX_C1) & MASK64
    z ^= z >> 27
    z = (z * MIX_C2) & MASK64
    return z ^ (z >> 31)


def absorb(h: int, v: int) -> int:
    return mix64(h ^ mix64(v + GAMMA))


def mix64_array(z: np.ndarray) -> np.ndarray:
    """Vectorised :func:`mix64`; modifies and returns ``z`` (dtype uint64)."""
    z ^= z >> _S30
    z *= _U_C1
    z ^= z >> _S27
    z *= _U_C2
    z ^= z >> _S31
    return z


def absorb_array(h: np.ndarray, v) -> np.ndarray:
    mv = mix64_array(np.array(v, dtype=np.uint64, ndmin=1) + _U_GAMMA)
    return mix64_array(h ^ mv)


def normalize_mode(mode: str) -> str:
    try:
        return _MODE_ALIASES[mode]
    except KeyError:
        raise ValueError(f"unknown mode {mode!r}") from None


@dataclass(frozen=True)
class SeedSpec:
    """(master_seed, replicate_id) pins down every sign ever drawn."""

    master_seed: int
    replicate_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "replicate_id"):
            v = getattr(self, name)
            if not 0 <= v <= MASK64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v}")

    def prefix(self, r: int) -> int:
        h = mix64(self.master_seed + GAMMA)
        return absorb(absorb(h, self.replicate_id), r)

    def replicate(self, k: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, k)


def composition_rank(parts: Sequence[int]) -> int:
    """Lexicographic rank of a composition among compositions of sum(parts)."""
    r = len(parts)
    remaining = sum(parts)
    rank = 0
    for i, m in enumerate(parts[:-1]):
        k = r - i - 1
        rank += math.comb(remaining - 1, k) - math.comb(remaining - m, k)
        remaining -= m
    return rank


def draw_sign(seed: SeedSpec, key: tuple[int, int, int]) -> int:
    """The sign attached to composition ``rank`` of n, for multiplicity r."""
    r, n, rank = key
    if not 0 <= rank < composition_count(n, r):
        raise IndexError(f"rank {rank} outside [0, L({n})) for r={r}")
    h = absorb(absorb(seed.prefix(r), n), rank)
    return -1 if h >> 63 else 1


def draw_signs(seed: SeedSpec, r: int, n, rank) -> np.ndarray:
    """Vectorised :func:`draw_sign` over broadcastable (n, rank) arrays; no range check."""
    n = np.asarray(n, dtype=np.uint64)
    h = absorb_array(np.full(n.shape, seed.prefix(r), dtype=np.uint64), n)
    h = absorb_array(h, rank)
    return 1 - 2 * (h >> _S63).astype(np.int8)


# ---------------------------------------------------------------------------
# enumeration of nonzero-weight compositions
# ---------------------------------------------------------------------------

def nonzero_compositions(w: np.ndarray, r: int, n: int):
    """Compositions of n with every part in the support of ``w``, in rank order.

    Returns (parts, ranks, weights) with parts of shape (T, r) and weights the
    left-to-right products w[m_1] * ... * w[m_r].
    """
    w = np.asarray(w, dtype=np.float64)
    support = [int(m) for m in np.flatnonzero(w[: n + 1]) if m >= 1]
    sset = set(support)
    found: list[tuple[int, ...]] = []

    def rec(prefix, remaining):
        if len(prefix) == r - 1:
            if remaining in sset:
                found.append(prefix + (remaining,))
            return
        for m in support:
            if m + (r - len(prefix) - 1) > remaining:
                break
            rec(prefix + (m,), remaining - m)

    rec((), n)
    parts = np.array(found, dtype=np.int64).reshape(-1, r)
    ranks = np.array([composition_rank(p) for p in found], dtype=np.int64)
    weights = np.array([math.prod(float(w[m]) for m in p) for p in found])
    return parts, ranks, weights


def _nonzero_term_count(support: np.ndarray, r: int, n_max: int) -> int:
    """Number of compositions with every part in ``support`` and sum <= n_max."""
    support = support[support <= n_max]
    if r == 1:
        return int(support.size)
    if r == 2:
        return int(np.searchsorted(support, n_max - support, side="right").sum())
    ind = np.zeros(n_max + 1)
    ind[support] = 1.0
    counts, _ = convolve_power_fft(ind, r, n_max)
    return int(round(float(counts.sum())))


def _split_points(n_max: int, r: int, parts: int) -> list[int]:
    """Boundaries splitting 1..n_max into blocks of roughly equal work (~n**r)."""
    pts = [0]
    for j in range(1, parts):
        pts.append(max(pts[-1], int(n_max * (j / parts) ** (1.0 / max(r, 1)))))
    pts.append(n_max)
    return pts


def _resolve_weights(table: MangoldtTable, weights, n_max: int) -> np.ndarray:
    if weights is None:
        if n_max > table.n_max:
            raise ValueError(f"n={n_max} exceeds table bound {table.n_max}")
        src = table.lam
    else:
        src = np.asarray(weights, dtype=np.float64)
    w = np.zeros(n_max + 1)
    w[: min(src.size, n_max + 1)] = src[: n_max + 1]
    w[0] = 0.0
    return w


def _check_terms(n: int, r: int, budgets: Budgets) -> None:
    L = composition_count(n, r) if n >= r else 0
    if L > budgets.terms_per_coefficient:
        raise BudgetError(
            f"L({n}) = {L} compositions for r={r} exceeds the per-coefficient budget "
            f"{budgets.terms_per_coefficient}; use surrogate mode"
        )


def _prefixes(seeds: Sequence[SeedSpec], r: int) -> np.ndarray:
    return np.array([s.prefix(r) for s in seeds], dtype=np.uint64)


def sample_signed_sums(
    table: MangoldtTable,
    r: int,
    n_max: int,
    seeds: Sequence[SeedSpec],
    weights=None,
    threads: int = 1,
    budgets: Budgets | None = None,
) -> np.ndarray:
    """Exact-enumeration Y_r(n, omega) for a batch of seeds, shape (len(seeds), n_max + 1).

    Each coefficient is a Neumaier-compensated sum over its nonzero-weight
    compositions in ascending rank. ``threads`` splits the n-range into
    disjoint blocks; every n still sees its terms in the same order, so the
    result does not depend on the worker count.
    """
    budgets = budgets or default_budgets()
    if r < 1:
        raise ValueError("r must be >= 1")
    _check_terms(n_max, r, budgets)
    w = _resolve_weights(table, weights, n_max)
    support = np.flatnonzero(w)
    terms = _nonzero_term_count(support, r, n_max)
    if terms > budgets.path_terms:
        raise BudgetError(
            f"exact path needs {terms} weighted terms, budget is {budgets.path_terms}; use surrogate mode"
        )
    prefixes = _prefixes(seeds, r)
    out = np.zeros((len(seeds), n_max + 1))
    threads = max(1, int(threads))
    pts = _split_points(n_max, r, threads)
    blocks = [(lo, hi) for lo, hi in zip(pts[:-1], pts[1:]) if hi > lo]
    run = lambda b: signed_sums(prefixes, support, w, r, b[0], b[1])
    if threads == 1:
        parts = map(run, blocks)
    else:
        pool = ThreadPoolExecutor(max_workers=threads)
        parts = pool.map(run, blocks)
    for (lo, hi), part in zip(blocks, parts):
        out[:, lo + 1 : hi + 1] = part
    if threads > 1:
        pool.shutdown()
    return out


# ---------------------------------------------------------------------------
# single coefficients
# ---------------------------------------------------------------------------

def sample_coefficients(
    table: MangoldtTable,
    r: int,
    n: int,
    seeds: Sequence[SeedSpec],
    weights=None,
    budgets: Budgets | None = None,
) -> np.ndarray:
    """Y_r(n, omega) for many seeds at one n; bitwise equal to path entries."""
    budgets = budgets or default_budgets()
    _check_terms(n, r, budgets)
    w = _resolve_weights(table, weights, n)
    support = np.flatnonzero(w)
    return signed_sums(_prefixes(seeds, r), support, w, r, n - 1, n)[:, 0]


def sample_coefficient(
    table: MangoldtTable, r: int, n: int, seed: SeedSpec, weights=None, budgets: Budgets | None = None
) -> float:
    """One draw of Y_r(n, omega): signed sum over the compositions of n."""
    return float(sample_coefficients(table, r, n, [seed], weights, budgets)[0])


# ---------------------------------------------------------------------------
# paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SignedPath:
    """One realisation {Y_r(n, omega)}_{n <= n_max}; ``y[0]`` is unused."""

    r: int
    n_max: int
    seed: SeedSpec
    y: np.ndarray
    mode: str


def gaussian_normals(seed: SeedSpec, r: int, n: np.ndarray) -> np.ndarray:
    """Counter-based standard normals, one per n (Box-Muller, cosine branch)."""
    n = np.asarray(n, dtype=np.uint64)
    base = absorb(seed.prefix(r), SURROGATE_TAG)
    h = absorb_array(np.full(n.shape, base, dtype=np.uint64), n)
    h1 = absorb_array(h.copy(), np.uint64(0))
    h2 = absorb_array(h, np.uint64(1))
    scale = 2.0**-53
    u1 = ((h1 >> _S11).astype(np.float64) + 0.5) * scale
    u2 = ((h2 >> _S11).astype(np.float64) + 0.5) * scale
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def sample_path(
    table: MangoldtTable,
    r: int,
    n_max: int,
    seed: SeedSpec,
    mode: Mode = EXACT,
    coeffs: CoefficientArrays | None = None,
    weights=None,
    threads: int = 1,
    budgets: Budgets | None = None,
) -> SignedPath:
    """Sample Y_r(n, omega) for 1 <= n <= n_max.

    In exact mode every coefficient is enumerated. The surrogate mode draws
    y[n] ~ N(0, W_r(n)) independently, which matches the variance of the
    exact model but not its distribution; it needs ``coeffs`` for W_r.
    """
    mode = normalize_mode(mode)
    if mode == EXACT:
        y = sample_signed_sums(table, r, n_max, [seed], weights, threads, budgets)[0]
    else:
        if coeffs is None:
            raise ValueError("surrogate mode needs CoefficientArrays for W_r")
        if coeffs.r != r or coeffs.n_max < n_max:
            raise ValueError("coefficient arrays do not cover (r, n_max)")
        y = np.zeros(n_max + 1)
        n = np.arange(1, n_max + 1)
        y[1:] = np.sqrt(np.maximum(coeffs.w[1 : n_max + 1], 0.0)) * gaussian_normals(seed, r, n)
    return SignedPath(r=r, n_max=n_max, seed=seed, y=y, mode=mode)


# ---------------------------------------------------------------------------
# exact distribution
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ExactDistribution:
    """pmf of Y_r(n, .) as integer counts over 2**denominator_log2.

    ``support`` is sorted. When built by enumeration, ``coefficients[i]``
    holds the exact integer coefficient of each weight monomial (a product
    of log p factors, listed in ``monomials``) behind ``support[i]``.
    """

    n: int
    r: int
    support: np.ndarray
    counts: np.ndarray
    denominator_log2: int
    coefficients: np.ndarray | None = None
    monomials: tuple[tuple[int, ...], ...] = ()

    @property
    def mass(self) -> np.ndarray:
        return self.counts / float(2**self.denominator_log2)

    def exact_masses(self) -> list[Fraction]:
        den = 2**self.denominator_log2
        return [Fraction(int(c), den) for c in self.counts]

    def total_count(self) -> int:
        return sum(int(c) for c in self.counts)


def _compositions(n: int, r: int) -> Iterator[tuple[int, ...]]:
    if r == 1:
        yield (n,)
        return
    for m in range(1, n - r + 2):
        for rest in _compositions(n - m, r - 1):
            yield (m,) + rest


def exact_distribution(
    table: MangoldtTable, r: int, n: int, budgets: Budgets | None = None
) -> ExactDistribution:
    """Enumerate all 2**L(n) sign vectors and tabulate Y_r(n, .) exactly.

    A sign vector maps to a vector of integer coefficients, one per distinct
    weight monomial; its value is their combination with the monomial values.
    Sign vectors are enumerated as integer keys (one bit per composition),
    so the counts are exact.
    """
    budgets = budgets or default_budgets()
    if n > table.n_max:
        raise ValueError(f"n={n} exceeds table bound {table.n_max}")
    L = composition_count(n, r)
    if L > budgets.exact_pmf_bits:
        raise BudgetError(f"L({n}) = {L} exceeds the exact pmf budget of {budgets.exact_pmf_bits} bits")

    base = table.prime_power_base
    monomial_index: dict[tuple[int, ...], int] = {}
    members: list[int] = []  # monomial index per composition, -1 for zero weight
    for parts in _compositions(n, r):
        bases = [int(base[m]) for m in parts]
        if 0 in bases:
            members.append(-1)
            continue
        mono = tuple(sorted(bases))
        members.append(monomial_index.setdefault(mono, len(monomial_index)))

    monomials = tuple(sorted(monomial_index, key=monomial_index.get))
    sizes = np.bincount([m for m in members if m >= 0], minlength=len(monomials)).astype(np.int64)
    radix = np.cumprod(np.concatenate(([1], sizes + 1)))[:-1] if len(monomials) else np.zeros(0, np.int64)

    # doubling enumeration: bit j set means epsilon_j = +1
    keys = np.zeros(1, dtype=np.int64)
    for m in members:
        step = int(radix[m]) if m >= 0 else 0
        keys = np.concatenate((keys, keys + step))
    uniq, counts = np.unique(keys, return_counts=True)

    if len(monomials):
        plus = (uniq[:, None] // radix[None, :]) % (sizes + 1)[None, :]
        coeff = 2 * plus - sizes[None, :]
    else:
        coeff = np.zeros((uniq.size, 0), dtype=np.int64)
    mono_vals = [math.prod(float(table.lam[p]) for p in mono) for mono in monomials]
    values = np.array(
        [math.fsum(int(c) * v for c, v in zip(row, mono_vals)) for row in coeff.tolist()]
    )
    order = np.argsort(values, kind="stable")
    return ExactDistribution(
        n=n,
        r=r,
        support=values[order],
        counts=counts[order].astype(np.int64),
        denominator_log2=L,
        coefficients=coeff[order],
        monomials=monomials,
    )


def symmetry_check(dist: ExactDistribution) -> bool:
    """True iff mass(v) == mass(-v) for every support point, in exact arithmetic.

    Compares integer counts on the real values, and additionally on the exact
    monomial coefficients when the distribution carries them.
    """
    by_value: dict[float, int] = {}
    for v, c in zip(dist.support.tolist(), dist.counts.tolist()):
        v = v + 0.0  # fold -0.0 into 0.0
        by_value[v] = by_value.get(v, 0) + int(c)
    for v, c in by_value.items():
        if by_value.get(-v + 0.0, 0) != c:
            return False
    if dist.coefficients is not None:
        by_coeff = {tuple(row): int(c) for row, c in zip(dist.coefficients.tolist(), dist.counts.tolist())}
        for row, c in by_coeff.items():
            if by_coeff.get(tuple(-x for x in row), 0) != c:
                return False
    return True
