"""Von Mangoldt table: Lambda(n), primality and prime-power provenance.

Lambda(n) = log p when n = p**k for a prime p and k >= 1, and 0 otherwise.
All arrays are indexed directly by n, with slot 0 unused (always zero).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import CapacityError, DEFAULT_MEMORY_BYTES

SEGMENT_THRESHOLD = 10**7
SEGMENT_SIZE = 1 << 22
MAX_N = 2**31

DUMP_MAGIC = b"RMDL"
DUMP_VERSION = 1
_HEADER = struct.Struct("<4sIQ")

# lambda (f64) + prime_flag (bool) + prime_power_base (i64)
BYTES_PER_ENTRY = 8 + 1 + 8


@dataclass(frozen=True, eq=False)
class MangoldtTable:
    """Immutable sieve output up to ``n_max``.

    Attributes:
        n_max: Table bound (inclusive).
        lam: float64 array of length n_max + 1, ``lam[n] = Lambda(n)``.
        prime_flag: bool array, ``prime_flag[n]`` iff n is prime.
        prime_power_base: int64 array, p if n = p**k, else 0.
    """

    n_max: int
    lam: np.ndarray = field(repr=False)
    prime_flag: np.ndarray = field(repr=False)
    prime_power_base: np.ndarray = field(repr=False)

    def __post_init__(self):
        for arr in (self.lam, self.prime_flag, self.prime_power_base):
            arr.setflags(write=False)

    @property
    def primes(self) -> np.ndarray:
        return np.flatnonzero(self.prime_flag)

    @property
    def prime_powers(self) -> np.ndarray:
        """Sorted support of Lambda."""
        return np.flatnonzero(self.prime_power_base)

    @property
    def lam_squared(self) -> np.ndarray:
        return self.lam * self.lam

    def psi(self, x: int) -> float:
        """Chebyshev psi(x) = sum of Lambda(n) for n <= x."""
        _check_range(self, x)
        return math.fsum(self.lam[1 : x + 1].tolist())


def _check_range(table: MangoldtTable, n: int) -> None:
    if not 1 <= n <= table.n_max:
        raise IndexError(f"n={n} outside table range [1, {table.n_max}]")


def _base_sieve(limit: int) -> np.ndarray:
    """Boolean primality array for 0..limit (plain Eratosthenes)."""
    flag = np.ones(limit + 1, dtype=bool)
    flag[: min(2, limit + 1)] = False
    for p in range(2, math.isqrt(limit) + 1):
        if flag[p]:
            flag[p * p :: p] = False
    return flag


def _segmented_sieve(limit: int, segment: int = SEGMENT_SIZE) -> np.ndarray:
    """Primality flags for 0..limit, sieving one bounded segment at a time."""
    root = math.isqrt(limit)
    base = np.flatnonzero(_base_sieve(root))
    flag = np.zeros(limit + 1, dtype=bool)
    flag[: root + 1] = _base_sieve(root)
    low = root + 1
    while low <= limit:
        high = min(low + segment, limit + 1)
        seg = np.ones(high - low, dtype=bool)
        for p in base.tolist():
            start = max(p * p, -(-low // p) * p)
            if start >= high:
                continue
            seg[start - low :: p] = False
        flag[low:high] = seg
        low = high
    return flag


def build_mangoldt_table(
    n_max: int, memory_bytes: int = DEFAULT_MEMORY_BYTES
) -> MangoldtTable:
    """Sieve Lambda(n), primality and prime-power bases for 1 <= n <= n_max.

    Above ``SEGMENT_THRESHOLD`` the primality sieve runs segment by segment so
    that the working set stays bounded; the returned arrays are still dense.

    Raises:
        ValueError: if n_max is outside [1, 2**31].
        CapacityError: if the table would exceed ``memory_bytes``.
    """
    n_max = int(n_max)
    if not 1 <= n_max <= MAX_N:
        raise ValueError(f"n_max must lie in [1, 2**31], got {n_max}")
    need = (n_max + 1) * BYTES_PER_ENTRY
    if need > memory_bytes:
        raise CapacityError(
            f"table for n_max={n_max} needs {need} bytes, budget is {memory_bytes}"
        )

    if n_max > SEGMENT_THRESHOLD:
        prime_flag = _segmented_sieve(n_max)
    else:
        prime_flag = _base_sieve(n_max)

    primes = np.flatnonzero(prime_flag)
    lam = np.zeros(n_max + 1, dtype=np.float64)
    base = np.zeros(n_max + 1, dtype=np.int64)
    lam[primes] = np.log(primes.astype(np.float64))
    base[primes] = primes

    # higher powers reuse the stored log p so lam[p**k] == lam[p] bitwise
    for p in primes[: np.searchsorted(primes, math.isqrt(n_max), side="right")].tolist():
        q = p * p
        while q <= n_max:
            lam[q] = lam[p]
            base[q] = p
            q *= p

    return MangoldtTable(n_max=n_max, lam=lam, prime_flag=prime_flag, prime_power_base=base)


def mangoldt(table: MangoldtTable, n: int) -> float:
    """Lambda(n) read from the table."""
    _check_range(table, n)
    return float(table.lam[n])


def is_prime(table: MangoldtTable, n: int) -> bool:
    _check_range(table, n)
    return bool(table.prime_flag[n])


def write_dump(table: MangoldtTable, path: str | Path) -> None:
    """Binary dump: header (magic, u32 version, u64 n_max) then f64 Lambda(1..n_max), little-endian."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(DUMP_MAGIC, DUMP_VERSION, table.n_max))
        fh.write(table.lam[1:].astype("<f8").tobytes())


def read_dump(path: str | Path) -> tuple[int, np.ndarray]:
    """Inverse of :func:`write_dump`; returns (n_max, lam) with lam[0] = 0."""
    with open(path, "rb") as fh:
        magic, version, n_max = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != DUMP_MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        if version != DUMP_VERSION:
            raise ValueError(f"unsupported dump version {version}")
        body = np.frombuffer(fh.read(), dtype="<f8")
    if body.size != n_max:
        raise ValueError(f"truncated dump: expected {n_max} values, got {body.size}")
    lam = np.zeros(n_max + 1, dtype=np.float64)
    lam[1:] = body
    return int(n_max), lam
