"""Runtime limits.

Settings are read from the environment on every call so that no module keeps
mutable global state.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

from .errors import ParseError

TERM_BUDGET_ENV = "FROBSPLIT_TERM_BUDGET"


@dataclass(frozen=True)
class Settings:
    term_budget: int = 50_000_000
    # ceiling on p**e for every operation taking a Frobenius level
    power_ceiling: int = 2**63 - 1
    max_extension_degree: int = 2
    # exhaustive searches over F_{p^m} run only below these sizes
    exhaustive_root_limit: int = 10**6
    brute_force_field_limit: int = 10**4
    splitting_iterations: int = 200

    def with_overrides(self, **kwargs) -> Settings:
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


def get_settings() -> Settings:
    raw = os.environ.get(TERM_BUDGET_ENV)
    if raw is None or raw.strip() == "":
        return Settings()
    try:
        budget = int(raw)
    except ValueError as exc:
        raise ParseError(f"{TERM_BUDGET_ENV} must be an integer, got {raw!r}") from exc
    if budget <= 0:
        raise ParseError(f"{TERM_BUDGET_ENV} must be positive")
    return Settings(term_budget=budget)
