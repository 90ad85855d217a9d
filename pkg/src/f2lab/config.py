"""Resource caps and the error types shared across the package.

Every potentially explosive enumeration (truth tables, exact distributions,
family scans, weight-ordered searches) is guarded by one cap from a single
``Caps`` record so the limits live in one place and can be overridden per call
or from the command line.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

__all__ = [
    "Caps",
    "DEFAULT_CAPS",
    "CapExceeded",
    "SearchCapExceeded",
    "UnsatisfiableSystemError",
    "check_cap",
]


class CapExceeded(Exception):
    """An enumeration or materialization would exceed a configured cap."""


class SearchCapExceeded(CapExceeded):
    """A weight-ordered search hit its candidate budget before an answer.

    Distinct from a ``None`` result, which means the searched space was
    provably exhausted.
    """

    def __init__(self, message: str, candidates_tried: int):
        super().__init__(message)
        self.candidates_tried = candidates_tried


class UnsatisfiableSystemError(ValueError):
    """A polynomial system contains the constant 1 and has no solutions at all."""


@dataclass(frozen=True)
class Caps:
    """Resource limits. Exponent-style fields bound variable counts, the rest bound counts.

    table:  max n_vars for any materialized truth table (2**table bits).
    dist:   max variable count for materializing an exact distribution (2**dist points).
    family: max number of enumerated descriptors (sources, codewords, subspaces, tuples).
    weight: max candidates examined by a weight-ordered or branch-and-bound search.
    """

    table: int = 24
    dist: int = 22
    family: int = 1 << 22
    weight: int = 10**7

    def __post_init__(self) -> None:
        for name in ("table", "dist", "family", "weight"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 0:
                raise ValueError(f"cap {name!r} must be a non-negative integer, got {v!r}")

    def with_overrides(self, **kwargs: int | None) -> "Caps":
        """Return a copy with the non-None keyword values replaced."""
        updates = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **updates) if updates else self


DEFAULT_CAPS = Caps()


def check_cap(kind: str, needed: int, limit: int) -> None:
    """Raise ``CapExceeded`` with a uniform message when ``needed > limit``."""
    if needed > limit:
        raise CapExceeded(f"{kind} requires {needed}, exceeding the cap of {limit}")
