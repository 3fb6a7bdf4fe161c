import os
import typing

from .errors import BudgetExceeded, InvalidParameter


class Budget(typing.TypedDict, total=False):
    max_points: int
    max_pairs: int
    max_span: int
    max_elements: int
    exhaustive_subsets: int
    exhaustive_removal: int
    table_pairs: int


DEFAULT_BUDGET: Budget = {
    "max_points": 1_000_000,
    "max_pairs": 100_000_000,
    "max_span": 100_000_000,
    "max_elements": 2_000_000,
    "exhaustive_subsets": 10_000_000,
    "exhaustive_removal": 30,
    "table_pairs": 600_000_000,
}

BUDGET_ENV = "BSGLAB_BUDGET"
VERSION = "0.1.0"


def parse_budget(text: str) -> Budget:
    budget = Budget()
    for item in filter(None, (part.strip() for part in text.split(","))):
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or key not in DEFAULT_BUDGET:
            raise InvalidParameter(f"Unknown budget entry '{item}'")
        try:
            budget[key] = int(float(value))
        except ValueError:
            raise InvalidParameter(f"Budget entry '{key}' is not a number: '{value}'") from None
    return budget


def get_budget(overrides: str | Budget | None = None) -> Budget:
    budget = Budget(**DEFAULT_BUDGET)
    budget.update(parse_budget(os.getenv(BUDGET_ENV, "")))
    if isinstance(overrides, str):
        budget.update(parse_budget(overrides))
    elif overrides:
        budget.update(overrides)
    return budget


def ensure_within(budget: Budget | None, key: str, needed: int | float, what: str):
    cap = (budget or DEFAULT_BUDGET).get(key, DEFAULT_BUDGET[key])
    if needed > cap:
        raise BudgetExceeded(what, needed, cap)
