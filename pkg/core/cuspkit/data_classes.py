from enum import Enum


class EnumLiteral(str, Enum):
    """
    A general base class for string-based enums that behave like literals.
    Members compare equal to their string value and print as it.
    """
    def __new__(cls, value, *args, **kwargs):
        obj = str.__new__(cls, value)
        obj._value_ = value
        return obj

    def __str__(self):
        return self.value

    def __eq__(self, other):
        if isinstance(other, str):
            return self.value == other
        return super().__eq__(other)

    def __hash__(self):
        return hash(self.value)

    def __repr__(self):
        return self.value


class ShortRangeTag(EnumLiteral):
    """Short-range class of a pair potential at the 2-particle coalescence point."""
    free = "F"
    gc = "SR-GC"
    alcd = "SR-alCD"
    rvdw = "SR-rVdW"
    alimts = "SR-alImtS"
    avdw = "NONPHYSICAL-aVdW"
    npcd = "NONPHYSICAL-npCD"

    @property
    def is_physical(self) -> bool:
        return not self.value.startswith("NONPHYSICAL")


class CuspFamily(EnumLiteral):
    """Analytic family of single-term cusp functions (alImtS maps onto its dominant term)."""
    free = "free"
    gc = "gc"
    alcd = "alcd"
    rvdw = "rvdw"
