"""Category evaluators: one pure pass/fail predicate per test category."""

from lineval.checks.table import LogicalGrid, TableRelationTest, check_table, extract_tables
from lineval.checks.text import (
    MatchResult,
    check_absence,
    check_baseline,
    check_order,
    check_presence,
    fuzzy_find,
)

__all__ = [
    "MatchResult",
    "fuzzy_find",
    "check_presence",
    "check_absence",
    "check_order",
    "check_baseline",
    "LogicalGrid",
    "TableRelationTest",
    "extract_tables",
    "check_table",
]
