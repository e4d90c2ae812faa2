"""Size caps for exhaustive enumerations.

Every exhaustive routine takes an optional ``budget`` argument; when it is
``None`` the default below is used. The CLI overrides these through
``--budget-<name>`` flags.
"""

from __future__ import annotations

from .errors import BudgetExceeded

DEFAULTS: dict[str, int] = {
    "points": 3**10,  # points of a subspace or coset
    "u2_direct": 729,  # |H| for the O(|H|^3) direct U^2 sum
    "u3": 3**8,  # |H| for U^3
    "lambda": 3**7,  # p^d for the tuple-rank pencil search
    "brauer": 3**12,  # |H|^2 for Brauer double sums
    "census": 3**12,  # tuples in a generic-codimension census
    "density": 5 * 10**8,  # cell evaluations for max_level_density
    "quadratic_search": 2 * 10**6,  # candidate quadratics in witness/increment search
}


def check(name: str, size: int, budget: int | None = None) -> None:
    limit = DEFAULTS[name] if budget is None else budget
    if size > limit:
        raise BudgetExceeded(name, size, limit)
