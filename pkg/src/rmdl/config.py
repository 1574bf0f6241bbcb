"""Enumeration budgets, memory caps and the exception hierarchy."""

from __future__ import annotations

import os
from dataclasses import dataclass

DEFAULT_TERMS_PER_COEFFICIENT = 10**7
DEFAULT_PATH_TERMS = 4 * 10**8
DEFAULT_EXACT_PMF_BITS = 24
DEFAULT_DIRECT_CAP = 10**4
DEFAULT_MEMORY_BYTES = 4 * 2**30


class RmdlError(Exception):
    """Base class for library errors."""


class BudgetError(RmdlError):
    """An enumeration exceeded a configured budget."""


class CapacityError(BudgetError):
    """A table would not fit in the configured memory budget."""


class PrecisionError(RmdlError):
    """A certified error bound is too large to be useful."""


class DegenerateError(RmdlError, ValueError):
    """Not enough usable data to fit a statistic."""


@dataclass(frozen=True)
class Budgets:
    """Explicit caps on combinatorial work.

    ``terms_per_coefficient`` bounds L(n), the number of compositions behind a
    single sampled coefficient. ``path_terms`` bounds the number of nonzero
    weighted compositions enumerated for one exact path. ``exact_pmf_bits``
    bounds L(n) for exhaustive pmf enumeration (2**bits sign vectors).
    """

    terms_per_coefficient: int = DEFAULT_TERMS_PER_COEFFICIENT
    path_terms: int = DEFAULT_PATH_TERMS
    exact_pmf_bits: int = DEFAULT_EXACT_PMF_BITS
    direct_cap: int = DEFAULT_DIRECT_CAP
    memory_bytes: int = DEFAULT_MEMORY_BYTES

    @classmethod
    def from_env(cls) -> "Budgets":
        terms = os.environ.get("RMDL_BUDGET_TERMS")
        if terms is None:
            return cls()
        return cls(terms_per_coefficient=int(float(terms)))


def default_budgets() -> Budgets:
    return Budgets.from_env()
