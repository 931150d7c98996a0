"""Itineraries of addresses relative to a base address.

The preimages of a base address r under the shift are the addresses
j,r for integer j; they cut the address space into strips.  The
itinerary of s relative to r records, entry by entry, which strip the
successive shifts of s fall into: entry k is the integer j with
j,r < shifted < (j+1),r, the boundary symbol (j|j-1) when the shift
hits j,r exactly, and the terminal star for the far end of an
intermediate address.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .addresses import (
    ExternalAddress,
    Kind,
    Ordering,
    compare_lex,
    first_difference,
    shift,
    surrounds,
)
from .exceptions import (
    DepthCapExhausted,
    PreconditionError,
    UndecidedComparison,
)


@dataclass(frozen=True)
class Boundary:
    """The symbol (j|j-1): the shift sits exactly on the strip boundary j,r."""

    upper: int

    @property
    def lower(self) -> int:
        return self.upper - 1


@dataclass(frozen=True)
class Star:
    """Terminal symbol of the itinerary of an intermediate address."""


STAR = Star()

ItineraryEntry = Union[int, Boundary, Star]


def format_entry(u: ItineraryEntry) -> str:
    if isinstance(u, Boundary):
        return f"({u.upper}|{u.lower})"
    if isinstance(u, Star):
        return "*"
    return str(u)


@dataclass(frozen=True)
class Itinerary:
    """A finite run of itinerary entries; depth counts resolved entries."""

    entries: tuple

    @property
    def depth(self) -> int:
        return len(self.entries)

    @property
    def has_star(self) -> bool:
        return bool(self.entries) and isinstance(self.entries[-1], Star)

    def entry(self, k: int) -> ItineraryEntry:
        if not 1 <= k <= len(self.entries):
            raise PreconditionError(f"itinerary entry index {k} out of range")
        return self.entries[k - 1]

    def text(self) -> str:
        return ",".join(format_entry(u) for u in self.entries)

    def __iter__(self):
        return iter(self.entries)


def itinerary(s: ExternalAddress, base: ExternalAddress, depth: int) -> Itinerary:
    """Itinerary of s relative to base, resolved to at most depth entries.

    An intermediate s yields floor(h) at its half-integer entry h and
    then the star, ending the itinerary early.  Raises
    UndecidedComparison (with the unresolved position and the partial
    entries attached) when a generator-backed comparison hits its cap.
    """
    if depth < 1:
        raise PreconditionError("itinerary depth must be >= 1")
    if base.kind is Kind.TERMINATOR:
        raise PreconditionError("the terminator cannot serve as an itinerary base")
    entries: list = []
    x = s
    for k in range(1, depth + 1):
        if x.kind is Kind.TERMINATOR:
            entries.append(STAR)
            break
        try:
            x1 = x.entry(1)
            if isinstance(x1, Fraction):
                entries.append(math.floor(x1))
                x = shift(x)
                continue
            sx = shift(x)
            side = compare_lex(sx, base)
        except DepthCapExhausted as err:
            exc = UndecidedComparison(k, f"itinerary entry {k}: {err}")
            exc.partial = tuple(entries)
            raise exc from err
        if side is Ordering.UNDECIDED:
            exc = UndecidedComparison(
                k, f"itinerary entry {k} undecided at the comparison depth cap"
            )
            exc.partial = tuple(entries)
            raise exc
        if side is Ordering.GT:
            entries.append(x1)
        elif side is Ordering.LT:
            entries.append(x1 - 1)
        else:
            entries.append(Boundary(x1))
        x = sx
    return Itinerary(tuple(entries))


def kneading(s: ExternalAddress, depth: int) -> Itinerary:
    """Itinerary of s relative to itself."""
    if s.kind is Kind.TERMINATOR:
        raise PreconditionError("the terminator has no kneading sequence")
    return itinerary(s, s, depth)


def adjacent(m: int, u: ItineraryEntry) -> bool:
    """Whether integer m matches entry u, boundary symbols matching both sides."""
    if not isinstance(m, int):
        raise PreconditionError("adjacency is defined for integer entries")
    if isinstance(u, Boundary):
        return m in (u.lower, u.upper)
    if isinstance(u, Star):
        return False
    return m == u


# -- the shared-itinerary consequence --------------------------------------


@dataclass(frozen=True)
class ConsequenceCheck:
    """One position of the consequence report.

    At offset k past the first difference, the shifts of the two
    addresses must surround some shift of the base (witness_j, at most
    k); for k >= 1 the shared itinerary entry there must be among the
    first k kneading entries of the base.
    """

    k: int
    witness_j: Optional[int]
    surround_ok: bool
    membership_ok: Optional[bool]


@dataclass(frozen=True)
class ConsequenceReport:
    first_difference: int
    depth: int
    checks: tuple
    all_pass: bool
    vacuous: bool


def shared_itinerary_consequence(
    r: ExternalAddress,
    r_tilde: ExternalAddress,
    s: ExternalAddress,
    depth: int,
) -> ConsequenceReport:
    """Check the structural consequence of two addresses sharing an itinerary.

    For distinct r, r_tilde whose itineraries relative to s agree to
    depth, with first difference at m: for every k <= depth - m the
    shifts of r and r_tilde by m + k surround a shift of s by some
    j <= k, and (for k >= 1) the shared entry at position m + k occurs
    among the first k kneading entries of s.
    """
    for a, label in ((r, "r"), (r_tilde, "r_tilde"), (s, "s")):
        if a.kind is not Kind.INFINITE:
            raise PreconditionError(f"consequence report needs infinite {label}")
    if depth < 1:
        raise PreconditionError("consequence depth must be >= 1")
    m = first_difference(r, r_tilde)
    if m is None:
        raise PreconditionError("the two addresses must be distinct")
    it_r = itinerary(r, s, depth)
    it_rt = itinerary(r_tilde, s, depth)
    if it_r != it_rt:
        bad = next(
            k for k in range(depth) if it_r.entries[k] != it_rt.entries[k]
        )
        raise PreconditionError(
            f"itineraries relative to the base differ at position {bad + 1}"
        )
    kn = kneading(s, depth)

    if m > depth:
        return ConsequenceReport(m, depth, (), True, True)

    # successive shifts, computed once
    shifts_r = [r]
    shifts_rt = [r_tilde]
    shifts_s = [s]
    for _ in range(depth):
        shifts_r.append(shift(shifts_r[-1]))
        shifts_rt.append(shift(shifts_rt[-1]))
        shifts_s.append(shift(shifts_s[-1]))

    checks = []
    for k in range(0, depth - m + 1):
        witness = None
        for j in range(0, k + 1):
            if surrounds(shifts_r[m + k], shifts_rt[m + k], shifts_s[j]):
                witness = j
                break
        member: Optional[bool] = None
        if k >= 1:
            member = it_r.entries[m + k - 1] in kn.entries[:k]
        checks.append(ConsequenceCheck(k, witness, witness is not None, member))
    all_pass = all(c.surround_ok and c.membership_ok is not False for c in checks)
    return ConsequenceReport(m, depth, tuple(checks), all_pass, False)
