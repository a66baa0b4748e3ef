"""Typed labels for irreducible representations.

A label renders as ``<namespace>:<reference>``, e.g. ``torus:1,-2``, ``su2:3/2`` or ``so3:2``,
and parses back with :func:`parse_label`.
"""
from abc import ABC, abstractmethod
from typing import Tuple

__all__ = ["IrrepLabel", "TorusLabel", "SU2Label", "SO3Label", "parse_label"]


class IrrepLabel(ABC):
    namespace: str = ""

    @property
    @abstractmethod
    def reference(self) -> str: ...

    @classmethod
    @abstractmethod
    def from_reference(cls, reference: str) -> "IrrepLabel": ...

    @property
    @abstractmethod
    def is_trivial(self) -> bool: ...

    def __str__(self) -> str:
        return f"{self.namespace}:{self.reference}"

    def __eq__(self, other) -> bool:
        return isinstance(other, IrrepLabel) and str(self) == str(other)

    def __hash__(self) -> int:
        return hash(str(self))

    def __lt__(self, other: "IrrepLabel") -> bool:
        return self.sort_key() < other.sort_key()

    @abstractmethod
    def sort_key(self): ...


class TorusLabel(IrrepLabel):
    namespace = "torus"

    def __init__(self, modes: Tuple[int, ...]):
        self.modes = tuple(int(m) for m in modes)

    @property
    def reference(self) -> str:
        return ",".join(str(m) for m in self.modes)

    @property
    def is_trivial(self) -> bool:
        return all(m == 0 for m in self.modes)

    def sort_key(self):
        return (sum(m * m for m in self.modes), tuple(-m for m in self.modes))

    @classmethod
    def from_reference(cls, reference: str) -> "TorusLabel":
        try:
            return cls(tuple(int(part) for part in reference.split(",")))
        except ValueError:
            raise ValueError(f"Invalid torus label reference: {reference}. Expected 'm1,m2,...'.")

    def __repr__(self):
        return f"<TorusLabel: {str(self)}>"


class SU2Label(IrrepLabel):
    """Spin j stored as the integer 2j."""
    namespace = "su2"

    def __init__(self, two_j: int):
        if two_j < 0:
            raise ValueError(f"Spin must be nonnegative, got 2j={two_j}")
        self.two_j = int(two_j)

    @property
    def spin(self) -> float:
        return self.two_j / 2

    @property
    def reference(self) -> str:
        if self.two_j % 2 == 0:
            return str(self.two_j // 2)
        return f"{self.two_j}/2"

    @property
    def is_trivial(self) -> bool:
        return self.two_j == 0

    def sort_key(self):
        return (self.two_j,)

    @classmethod
    def from_reference(cls, reference: str) -> "SU2Label":
        try:
            if "/" in reference:
                num, den = reference.split("/")
                if int(den) != 2:
                    raise ValueError
                return cls(int(num))
            return cls(2 * int(reference))
        except ValueError:
            raise ValueError(f"Invalid {cls.namespace} label reference: {reference}. Expected 'j' or 'n/2'.")

    def __repr__(self):
        return f"<{type(self).__name__}: {str(self)}>"


class SO3Label(SU2Label):
    namespace = "so3"

    def __init__(self, two_j: int):
        if two_j % 2:
            raise ValueError(f"SO(3) irreps have integer spin, got 2j={two_j}")
        super().__init__(two_j)


_NAMESPACES = {cls.namespace: cls for cls in (TorusLabel, SU2Label, SO3Label)}


def parse_label(text: str) -> IrrepLabel:
    namespace, _, reference = text.partition(":")
    if namespace not in _NAMESPACES or not reference:
        raise ValueError(f"Invalid irrep label: {text}. Expected one of {sorted(_NAMESPACES)} prefixes.")
    return _NAMESPACES[namespace].from_reference(reference)
