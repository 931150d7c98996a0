"""External addresses: integer symbol sequences indexing dynamic rays.

An address is one of

* an infinite integer sequence, stored either as an explicit eventually
  periodic word (finite prefix plus a repeating cycle, kept canonical:
  minimal cycle, shortest prefix) or as a generator-backed sequence with
  a depth cap,
* an intermediate (finite) address: integers, then one half-integer,
  then the terminator, or
* the lone terminator itself, which arises as the shift of a length-two
  intermediate address.

Entries are ordered numerically with the terminator greater than every
integer and half-integer; with that convention the lexicographic order
on addresses is total and the terminator closes the circular order.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Optional

from .config import DEFAULT
from .exceptions import (
    AddressStructureError,
    AddressSyntaxError,
    DepthCapExhausted,
    PreconditionError,
    UndecidedComparison,
)

TWO_PI = 2.0 * math.pi


class Kind(Enum):
    INFINITE = "infinite"
    INTERMEDIATE = "intermediate"
    TERMINATOR = "terminator"


class Ordering(Enum):
    LT = -1
    EQ = 0
    GT = 1
    UNDECIDED = 2

    def reversed(self) -> "Ordering":
        if self is Ordering.LT:
            return Ordering.GT
        if self is Ordering.GT:
            return Ordering.LT
        return self


@dataclass(frozen=True)
class ExternalAddress:
    """A point of the address space; build via the module constructors."""

    kind: Kind
    prefix: tuple = ()
    cycle: tuple = ()
    half: Optional[Fraction] = None
    gen: Optional[Callable[[int], int]] = field(default=None, compare=True)
    gen_offset: int = 0
    cap: int = 0
    entry_bound: Optional[int] = None
    gen_name: Optional[str] = None

    # -- structure ---------------------------------------------------------

    @property
    def is_infinite(self) -> bool:
        return self.kind is Kind.INFINITE

    @property
    def is_generator_backed(self) -> bool:
        return self.gen is not None

    @property
    def length(self) -> Optional[int]:
        """Total symbol count for finite addresses (terminator included)."""
        if self.kind is Kind.INTERMEDIATE:
            return len(self.prefix) + 2
        if self.kind is Kind.TERMINATOR:
            return 1
        return None

    def entry(self, k: int):
        """k-th entry (1-based): int, Fraction, math.inf, or None past the end.

        Raises DepthCapExhausted when a generator-backed address cannot
        produce entry k.
        """
        if k < 1:
            raise PreconditionError("entry index must be >= 1")
        if self.kind is Kind.TERMINATOR:
            return math.inf if k == 1 else None
        if self.kind is Kind.INTERMEDIATE:
            n_ints = len(self.prefix)
            if k <= n_ints:
                return self.prefix[k - 1]
            if k == n_ints + 1:
                return self.half
            if k == n_ints + 2:
                return math.inf
            return None
        # infinite
        if k <= len(self.prefix):
            return self.prefix[k - 1]
        if self.gen is not None:
            j = k - len(self.prefix) + self.gen_offset
            if j > self.cap:
                raise DepthCapExhausted(
                    f"generator-backed address exhausted at entry {k} (cap {self.cap})"
                )
            return self.gen(j)
        return self.cycle[(k - 1 - len(self.prefix)) % len(self.cycle)]

    def entries(self, n: int) -> list:
        """First n entries as a list (None-padded past a finite end)."""
        return [self.entry(k) for k in range(1, n + 1)]

    def __repr__(self):
        try:
            return f"ExternalAddress({format_address(self)!r})"
        except ExprayFormatFallback:
            head = ",".join(str(e) for e in self.prefix)
            name = self.gen_name or "generator"
            return f"ExternalAddress(<{head + ',' if head else ''}{name}+{self.gen_offset}; cap={self.cap}>)"


class ExprayFormatFallback(AddressStructureError):
    """Internal: address has no grammar text form."""


TERMINATOR = ExternalAddress(kind=Kind.TERMINATOR)


# -- constructors ----------------------------------------------------------


def _minimal_cycle(cycle):
    n = len(cycle)
    for d in range(1, n + 1):
        if n % d == 0 and cycle == cycle[:d] * (n // d):
            return cycle[:d]
    return cycle


def infinite_address(prefix=(), cycle=()) -> ExternalAddress:
    """Eventually periodic address, stored canonically.

    The cycle is reduced to its minimal period and trailing prefix
    entries equal to the incoming cycle end are absorbed by rotating the
    cycle, so equal sequences get equal representations.
    """
    prefix = tuple(int(e) for e in prefix)
    cycle = tuple(int(e) for e in cycle)
    if not cycle:
        raise AddressStructureError("an infinite address needs a nonempty cycle")
    cycle = _minimal_cycle(cycle)
    pre = list(prefix)
    while pre and pre[-1] == cycle[-1]:
        cycle = (cycle[-1],) + cycle[:-1]
        pre.pop()
    return ExternalAddress(kind=Kind.INFINITE, prefix=tuple(pre), cycle=cycle)


def intermediate_address(prefix, half) -> ExternalAddress:
    """Finite address: integer entries, one half-integer, then the terminator."""
    prefix = tuple(int(e) for e in prefix)
    half = Fraction(half)
    if half.denominator != 2:
        raise AddressStructureError(
            f"last finite entry must be a half-integer, got {half}"
        )
    return ExternalAddress(kind=Kind.INTERMEDIATE, prefix=prefix, half=half)


def generator_address(gen, cap, entry_bound=None, name=None, prefix=()) -> ExternalAddress:
    """Infinite address whose tail entries come from gen(1), gen(2), ...

    ``entry_bound`` is an optional declared bound on |entries|; growth
    bounds are decided exactly only when it is present.
    """
    if cap < 1:
        raise AddressStructureError("generator cap must be >= 1")
    return ExternalAddress(
        kind=Kind.INFINITE,
        prefix=tuple(int(e) for e in prefix),
        gen=gen,
        cap=int(cap),
        entry_bound=entry_bound,
        gen_name=name,
    )


_GOLDEN_THETA = (math.sqrt(5.0) - 1.0) / 2.0


def golden_mean_address(cap: int = 4096) -> ExternalAddress:
    """Binary address with golden-mean rotation combinatorics.

    Entry k is floor((k+1)*theta) - floor(k*theta) with theta the golden
    mean conjugate; the resulting word has all-zero kneading entries, the
    normalisation used by the accessibility material.
    """

    def fib_entry(k: int) -> int:
        return int(math.floor((k + 1) * _GOLDEN_THETA) - math.floor(k * _GOLDEN_THETA))

    return generator_address(fib_entry, cap=cap, entry_bound=1, name="golden")


# -- parsing and formatting ------------------------------------------------

_INT_RE = re.compile(r"-?\d+$")
_HALF_RE = re.compile(r"(-?\d+)/2$")


def _parse_int_list(text: str, base_pos: int) -> list:
    out = []
    pos = base_pos
    if text == "":
        raise AddressSyntaxError("empty entry list", base_pos)
    for tok in text.split(","):
        if not _INT_RE.match(tok):
            raise AddressSyntaxError(f"expected integer, got {tok!r}", pos)
        out.append(int(tok))
        pos += len(tok) + 1
    return out


def parse_address(text: str) -> ExternalAddress:
    """Parse the textual address grammar.

    Accepted forms (whitespace ignored): ``"(c1,...,ck)"``,
    ``"p1,...,pm,(c1,...,ck)"``, ``"p1,...,pm,h/2,inf"``, ``"h/2,inf"``
    and ``"inf"``.  Bare integer lists denote no address and are
    rejected.
    """
    raw = text
    text = re.sub(r"\s+", "", text)
    if text == "":
        raise AddressSyntaxError("empty address", 0)
    if text == "inf":
        return TERMINATOR
    if "(" in text:
        i = text.index("(")
        if not text.endswith(")"):
            raise AddressSyntaxError("cycle must close with ')'", len(text) - 1)
        if ")" in text[:-1]:
            raise AddressSyntaxError("unexpected ')'", text.index(")"))
        if i == 0:
            prefix = []
        else:
            if text[i - 1] != ",":
                raise AddressSyntaxError("expected ',' before cycle", i - 1)
            prefix = _parse_int_list(text[: i - 1], 0)
        cycle = _parse_int_list(text[i + 1 : -1], i + 1)
        return infinite_address(prefix, cycle)
    if text.endswith(",inf"):
        body = text[: -len(",inf")]
        toks = body.split(",")
        m = _HALF_RE.match(toks[-1])
        if not m:
            raise AddressSyntaxError(
                f"expected odd/2 half-integer before 'inf', got {toks[-1]!r}",
                len(body) - len(toks[-1]),
            )
        num = int(m.group(1))
        if num % 2 == 0:
            raise AddressSyntaxError(
                f"half-integer numerator must be odd, got {num}",
                len(body) - len(toks[-1]),
            )
        prefix = _parse_int_list(",".join(toks[:-1]), 0) if len(toks) > 1 else []
        return intermediate_address(prefix, Fraction(num, 2))
    if all(_INT_RE.match(tok) for tok in text.split(",")):
        raise AddressSyntaxError(
            "finite integer list is not an address; expected a '(cycle)' tail, "
            "a half-integer plus 'inf', or 'inf'",
            len(text),
        )
    raise AddressSyntaxError(f"unrecognised address syntax {raw!r}", 0)


def format_address(a: ExternalAddress) -> str:
    """Canonical text for an address; inverse of parse_address.

    Generator-backed addresses have no grammar form; named ones (e.g. the
    golden-mean address) format as their name, anonymous ones raise.
    """
    if a.kind is Kind.TERMINATOR:
        return "inf"
    if a.kind is Kind.INTERMEDIATE:
        parts = [str(e) for e in a.prefix]
        parts.append(f"{a.half.numerator}/2")
        parts.append("inf")
        return ",".join(parts)
    if a.gen is not None:
        if a.gen_name and not a.prefix and a.gen_offset == 0:
            return a.gen_name
        raise ExprayFormatFallback(
            "generator-backed address has no textual form"
        )
    body = ",".join(str(e) for e in a.prefix)
    cyc = "(" + ",".join(str(e) for e in a.cycle) + ")"
    return body + "," + cyc if body else cyc


# -- order -----------------------------------------------------------------


def _decidable_horizon(a: ExternalAddress, b: ExternalAddress) -> int:
    """Entry count after which two generator-free addresses must have
    revealed any difference."""
    if a.kind is Kind.INFINITE and b.kind is Kind.INFINITE:
        return max(len(a.prefix), len(b.prefix)) + math.lcm(
            len(a.cycle), len(b.cycle)
        )
    la = a.length or (len(a.prefix) + len(a.cycle))
    lb = b.length or (len(b.prefix) + len(b.cycle))
    return max(la, lb) + 1


def compare_lex(a: ExternalAddress, b: ExternalAddress, depth_cap: Optional[int] = None) -> Ordering:
    """Lexicographic comparison; exact for generator-free pairs.

    Pairs involving a generator-backed address walk entries up to the
    cap and report Undecided if no difference appears.
    """
    if a == b:
        # structurally identical (same generator object and offsets
        # included), so the sequences agree even past any cap
        return Ordering.EQ
    gen_involved = a.is_generator_backed or b.is_generator_backed
    if gen_involved:
        horizon = depth_cap if depth_cap is not None else DEFAULT.depth_cap
    else:
        horizon = _decidable_horizon(a, b)
    for k in range(1, horizon + 1):
        try:
            ea = a.entry(k)
            eb = b.entry(k)
        except DepthCapExhausted:
            return Ordering.UNDECIDED
        if ea is None and eb is None:
            return Ordering.EQ
        # a finite address never runs out strictly before a difference:
        # its terminator entry differs from any integer first
        if ea is None or eb is None:
            raise AddressStructureError("entry walk passed a terminator")
        if ea < eb:
            return Ordering.LT
        if ea > eb:
            return Ordering.GT
    return Ordering.UNDECIDED if gen_involved else Ordering.EQ


def first_difference(a: ExternalAddress, b: ExternalAddress, depth_cap: Optional[int] = None) -> Optional[int]:
    """Index of the first differing entry, or None if equal (exact case).

    Raises UndecidedComparison when generator caps run out first.
    """
    if a == b:
        return None
    gen_involved = a.is_generator_backed or b.is_generator_backed
    horizon = (
        (depth_cap if depth_cap is not None else DEFAULT.depth_cap)
        if gen_involved
        else _decidable_horizon(a, b)
    )
    for k in range(1, horizon + 1):
        try:
            ea, eb = a.entry(k), b.entry(k)
        except DepthCapExhausted:
            raise UndecidedComparison(k)
        if ea is None and eb is None:
            return None
        if ea != eb:
            return k
    if gen_involved:
        raise UndecidedComparison(horizon + 1)
    return None


def circular_order(a: ExternalAddress, b: ExternalAddress, c: ExternalAddress) -> bool:
    """True iff (a, b, c) is positively oriented on the address circle.

    The linear order is closed into a circle through the terminator
    point; the triple must be pairwise distinct.
    """
    cab = compare_lex(a, b)
    cbc = compare_lex(b, c)
    cca = compare_lex(c, a)
    for o in (cab, cbc, cca):
        if o is Ordering.EQ:
            raise PreconditionError("circular order needs pairwise distinct points")
        if o is Ordering.UNDECIDED:
            raise UndecidedComparison(-1, "circular order undecided at depth cap")
    lt = Ordering.LT
    return (
        (cab is lt and cbc is lt)
        or (cbc is lt and cca is lt)
        or (cca is lt and cab is lt)
    )


# -- shift and prepend -----------------------------------------------------


def shift(a: ExternalAddress) -> ExternalAddress:
    """Drop the first entry (the symbol dynamics on address space)."""
    if a.kind is Kind.TERMINATOR:
        raise PreconditionError("the terminator has no shift")
    if a.kind is Kind.INTERMEDIATE:
        if a.prefix:
            return ExternalAddress(
                kind=Kind.INTERMEDIATE, prefix=a.prefix[1:], half=a.half
            )
        return TERMINATOR
    if a.prefix:
        return ExternalAddress(
            kind=Kind.INFINITE,
            prefix=a.prefix[1:],
            cycle=a.cycle,
            gen=a.gen,
            gen_offset=a.gen_offset,
            cap=a.cap,
            entry_bound=a.entry_bound,
            gen_name=a.gen_name,
        )
    if a.gen is not None:
        if a.cap - a.gen_offset < 2:
            raise DepthCapExhausted("cannot shift: generator cap exhausted")
        return ExternalAddress(
            kind=Kind.INFINITE,
            gen=a.gen,
            gen_offset=a.gen_offset + 1,
            cap=a.cap,
            entry_bound=a.entry_bound,
            gen_name=a.gen_name,
        )
    return infinite_address((), a.cycle[1:] + a.cycle[:1])


def prepend(j: int, a: ExternalAddress) -> ExternalAddress:
    """Left-inverse of shift: the address j followed by a."""
    if not isinstance(j, int):
        raise PreconditionError("prepended entry must be an integer")
    if a.kind is Kind.TERMINATOR:
        raise PreconditionError(
            "cannot prepend to the bare terminator (an integer cannot precede it)"
        )
    if a.kind is Kind.INTERMEDIATE:
        return ExternalAddress(
            kind=Kind.INTERMEDIATE, prefix=(j,) + a.prefix, half=a.half
        )
    if a.gen is not None:
        return ExternalAddress(
            kind=Kind.INFINITE,
            prefix=(j,) + a.prefix,
            gen=a.gen,
            gen_offset=a.gen_offset,
            cap=a.cap,
            entry_bound=a.entry_bound,
            gen_name=a.gen_name,
        )
    return infinite_address((j,) + a.prefix, a.cycle)


def surrounds(r1: ExternalAddress, r2: ExternalAddress, s: ExternalAddress) -> bool:
    """True iff s lies strictly between r1 and r2 in the linear order."""
    if compare_lex(r1, r2) is Ordering.EQ:
        raise PreconditionError("surrounds needs two distinct bounding addresses")
    c1 = compare_lex(r1, s)
    c2 = compare_lex(r2, s)
    if Ordering.UNDECIDED in (c1, c2):
        raise UndecidedComparison(-1, "surrounds undecided at depth cap")
    return {c1, c2} == {Ordering.LT, Ordering.GT}


# -- growth bounds ---------------------------------------------------------


@dataclass(frozen=True)
class GrowthBounds:
    t_star: float
    t_limsup: float
    exp_bounded: bool
    terms_computed: int


def _pulled_term(abs_entry, k: int) -> float:
    """The k-th growth term: (k-1)-fold inverse growth map of 2*pi*|entry|.

    The k = 1 term is the raw 2*pi*|entry| (no pullback).  Huge integer
    entries are handled in the log domain where a pullback applies.
    """
    if k == 1:
        try:
            return TWO_PI * float(abs_entry)
        except OverflowError:
            return math.inf
    if abs_entry == 0:
        v = 0.0
    elif abs_entry < 1e300:
        v = math.log1p(TWO_PI * float(abs_entry))
    else:
        # beyond float range: log(2*pi*|e|) with the +1 negligible
        v = math.log(TWO_PI) + math.log(abs_entry)
    for _ in range(k - 2):
        v = math.log1p(v)
    return v


def growth_bounds(a: ExternalAddress, depth_cap: Optional[int] = None) -> GrowthBounds:
    """Supremum and limsup of the pulled-back entry sizes.

    For eventually periodic addresses both are exact: entries are
    bounded, so the terms tend to 0 (t_limsup = 0) and the supremum is
    attained before the decreasing envelope drops below the running
    maximum.  The same envelope argument applies to generator-backed
    addresses with a declared entry bound.  Without a bound the
    supremum cannot be decided from finitely many entries and
    DepthCapExhausted is raised, unless a term overflows to +inf (then
    the address is certainly not exponentially bounded).
    """
    if a.kind is not Kind.INFINITE:
        raise AddressStructureError("growth bounds are defined for infinite addresses")
    cap = depth_cap if depth_cap is not None else DEFAULT.depth_cap

    if a.gen is not None and a.entry_bound is None:
        best = 0.0
        limit = min(cap, a.cap + len(a.prefix) - a.gen_offset)
        for k in range(1, limit + 1):
            term = _pulled_term(abs(a.entry(k)), k)
            best = max(best, term)
            if math.isinf(term):
                return GrowthBounds(math.inf, math.inf, False, k)
        raise DepthCapExhausted(
            "growth supremum undecided: generator-backed address with no "
            f"declared entry bound (looked at {limit} entries)"
        )

    if a.gen is not None:
        bound = abs(a.entry_bound)
        available = a.cap + len(a.prefix) - a.gen_offset
    else:
        bound = max((abs(e) for e in a.prefix + a.cycle), default=0)
        available = None

    best = 0.0
    k = 0
    while True:
        k += 1
        if available is not None and k > available:
            raise DepthCapExhausted(
                "growth supremum needs more entries than the generator cap allows"
            )
        if k > max(cap, 1):
            raise DepthCapExhausted("growth bound loop exceeded the depth cap")
        term = _pulled_term(abs(a.entry(k)), k)
        if term > best:
            best = term
        # no term past position k can exceed the pulled bound at k + 1,
        # and that ceiling decreases with k, so this terminates within one
        # period for explicit addresses (where the bound is attained)
        envelope = _pulled_term(bound, k + 1)
        if envelope <= best:
            return GrowthBounds(best, 0.0, True, k)
