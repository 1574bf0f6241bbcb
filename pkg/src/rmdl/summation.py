"""Compensated summation helpers with a fixed reduction order."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np


def checkpoint_sums(terms: np.ndarray, checkpoints: Sequence[int]) -> np.ndarray:
    """Partial sums ``sum(terms[1:N+1])`` at each checkpoint N.

    ``terms`` is indexed from 0 with ``terms[0]`` ignored. Each block between
    consecutive checkpoints is summed with ``math.fsum`` (correctly rounded),
    and the block sums are accumulated with ``math.fsum`` again, always in
    ascending n.
    """
    cps = np.asarray(checkpoints, dtype=np.int64)
    out = np.empty(len(cps), dtype=np.float64)
    blocks: list[float] = []
    prev = 0
    for k, N in enumerate(cps):
        blocks.append(math.fsum(terms[prev + 1 : N + 1].tolist()))
        out[k] = math.fsum(blocks)
        prev = int(N)
    return out


def block_sums(terms: np.ndarray, checkpoints: Sequence[int]) -> np.ndarray:
    """Correctly rounded sums over (N_{k-1}, N_k], with N_{-1} = 0."""
    out = []
    prev = 0
    for N in checkpoints:
        out.append(math.fsum(terms[prev + 1 : int(N) + 1].tolist()))
        prev = int(N)
    return np.asarray(out)
