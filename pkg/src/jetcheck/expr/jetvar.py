"""Jet coordinates: a state name together with a number of time derivatives."""

from __future__ import annotations

from typing import NamedTuple


class JetVar(NamedTuple):
    """The ``order``-th time derivative of the coordinate ``name``.

    Tuple ordering gives the canonical total order: name first, then order.
    """

    name: str
    order: int = 0

    def prime(self, k: int = 1) -> "JetVar":
        return JetVar(self.name, self.order + k)

    def lower(self) -> "JetVar | None":
        """The variable one derivative down, or None at order 0."""
        if self.order == 0:
            return None
        return JetVar(self.name, self.order - 1)

    def __str__(self) -> str:
        if self.order == 0:
            return self.name
        if self.order == 1:
            return f"D({self.name})"
        if self.order == 2:
            return f"D2({self.name})"
        return f"D({self.name}, {self.order})"

    def __repr__(self) -> str:
        return f"JetVar({self.name!r}, {self.order})"


def jets(name: str, upto: int) -> list[JetVar]:
    return [JetVar(name, k) for k in range(upto + 1)]
