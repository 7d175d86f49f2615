#!/usr/bin/env python3  src/blowup_solver/core/codes.py
"""
Blow-up Solver Code Tables
==========================
Every discrete outcome the solver reports is an integer code with a stable
name. Summaries, CLI flags and log events all use the same translation, so a
termination reason reads "derivative-decay" everywhere.

Range Overview:
- 0-9:   Process exit codes
- 10-19: Integration termination reasons
- 20-29: Transform kinds
- 30-39: Blow-up point estimation methods
- 40-49: Admissibility ratio trends
- 50-59: Regularizing function (g) kinds
"""

from enum import IntEnum
from typing import Dict, Type, TypeVar

E = TypeVar("E", bound=IntEnum)


class ExitCode(IntEnum):
    """Process exit codes - Range: 0-9"""

    OK = 0
    CONFIG = 1
    PARSE = 2
    SINGULAR_TRANSFORM = 3
    ESTIMATION = 4
    IO = 5
    # Reserved: 6-9


class TerminationReason(IntEnum):
    """Why an integration stopped - Range: 10-19"""

    STEP_BUDGET = 10
    PARAMETER_BOUND = 11
    DERIVATIVE_DECAY = 12
    RHS_ERROR = 13
    # Reserved: 14-19


class TransformKind(IntEnum):
    """Change of independent variable - Range: 20-29"""

    DIFFERENTIAL = 20  # parameter t = y'
    NONLOCAL = 21  # parameter xi = integral of g dx


class EstimateMethod(IntEnum):
    """How x* was extracted from a trajectory tail - Range: 30-39"""

    LAST_VALUE = 30
    AITKEN = 31
    AITKEN_LOG = 32  # Aitken in ln(parameter)


class RatioTrend(IntEnum):
    """Behaviour of f/g as y grows - Range: 40-49"""

    BOUNDED = 40
    DIVERGING = 41
    VANISHING = 42
    INCONCLUSIVE = 43


class GKind(IntEnum):
    """Regularizing function choices - Range: 50-59"""

    ARC_LENGTH = 50
    F_OVER_Y = 51
    F_OVER_T = 52
    T_OVER_Y = 53
    CUSTOM = 54


_ALL_TABLES = (ExitCode, TerminationReason, TransformKind, EstimateMethod, RatioTrend, GKind)


def _build_translation_map() -> Dict[int, str]:
    translation_map = {}
    for table in _ALL_TABLES:
        for item in table:
            translation_map[int(item)] = item.name.lower().replace("_", "-")
    return translation_map


_TRANSLATIONS = _build_translation_map()


def translate_code(code: int) -> str:
    """Translate an integer code to its dash-separated name."""
    return _TRANSLATIONS.get(int(code), f"unknown-{int(code)}")


def code_from_name(table: Type[E], text: str) -> E:
    """Look up a member by name, accepting dashes, underscores and any case.

    Raises:
        KeyError: if ``text`` names no member of ``table``.
    """
    key = text.strip().upper().replace("-", "_")
    try:
        return table[key]
    except KeyError:
        choices = ", ".join(translate_code(item) for item in table)
        raise KeyError(f"'{text}' is not one of: {choices}") from None


def choices_for(table: Type[IntEnum]) -> list:
    """CLI-friendly names of every member of ``table``."""
    return [translate_code(item) for item in table]
