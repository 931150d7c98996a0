"""Rays that accumulate at infinity without landing.

Builds the candidate address family obtained by splicing escape markers
T_n = 2 + max_{k<=n} s_k into the singular address s, checks the
combinatorial separation properties of that family, and runs the staged
construction that certifies accumulation numerically: each stage picks a
potential t_j with |g(t_j)| > j on a preimage-stage ray and then a block
length n_j so the spliced candidate keeps |g| >= j there.
"""

import dataclasses
import math
from enum import Enum
from typing import Optional

from .addresses import (
    ExternalAddress,
    format_address,
    generator_address,
    growth_bounds,
    infinite_address,
)
from .config import DEFAULT, Tolerances
from .exceptions import (
    ExprayError,
    PreconditionError,
    StageSearchError,
)
from .itineraries import Boundary, Itinerary, itinerary, kneading
from .rays import Parameter, big_tee, trace_point, trace_ray

TWO_PI = 2.0 * math.pi

# grid points whose certified error bound exceeds this are not trusted as
# evidence in stage selection
RELIABLE_ERR = 1e-3


# -- the T_n sequence ------------------------------------------------------


class TeeSequence:
    """Running escape markers 2 + max of the first n base entries."""

    def __init__(self, base: ExternalAddress):
        if not base.is_infinite:
            raise PreconditionError("the T sequence needs an infinite base")
        self.base = base
        self._maxes: list = []

    def value(self, n: int) -> int:
        if n < 1:
            raise PreconditionError("T index must be >= 1")
        while len(self._maxes) < n:
            k = len(self._maxes) + 1
            e = self.base.entry(k)
            best = e if k == 1 else max(self._maxes[-1], e)
            self._maxes.append(best)
        return 2 + self._maxes[n - 1]


def tee_sequence(s: ExternalAddress, n: int) -> int:
    return TeeSequence(s).value(n)


# -- candidate addresses ---------------------------------------------------


class Tail(Enum):
    """How a finite stage plan is closed off into an address."""

    CONTINUE_FAMILY = "continue-family"
    LOOP_TO_BASE = "loop-to-base"


@dataclasses.dataclass(frozen=True)
class StagePlan:
    """Chosen block lengths (n_1, ..., n_J) over a fixed base address."""

    ns: tuple
    base: ExternalAddress

    def __post_init__(self):
        object.__setattr__(self, "ns", tuple(int(n) for n in self.ns))
        if any(n < 1 for n in self.ns):
            raise PreconditionError("stage block lengths must be >= 1")
        if not self.base.is_infinite:
            raise PreconditionError("stage plans need an infinite base")

    def extended(self, n: int) -> "StagePlan":
        return StagePlan(self.ns + (n,), self.base)


def _block(base: ExternalAddress, tee: TeeSequence, n: int) -> list:
    """Entries s_1 ... s_{n-1} T_n contributed by one stage."""
    out = [base.entry(k) for k in range(1, n)]
    out.append(tee.value(n))
    return out


def _entry_bounds(base: ExternalAddress):
    """(lo, hi) bounds for candidate entries, or None when unknowable."""
    if base.is_generator_backed:
        if base.entry_bound is None:
            return None
        b = base.entry_bound
        return -b, 2 + b
    coeffs = base.prefix + base.cycle
    return min(coeffs), 2 + max(coeffs)


def candidate_address(plan: StagePlan, tail: Tail, cap: int = 4096) -> ExternalAddress:
    """Address spelled T_1 s_1..s_{n_1-1} T_{n_1} s_1..s_{n_2-1} T_{n_2} ...

    LOOP_TO_BASE closes the plan with a full copy of the base: the
    preimage-stage address, which lands at infinity.  CONTINUE_FAMILY
    keeps splicing blocks forever, repeating the last block length; this
    is the family member actually tested during stage selection.
    """
    base = plan.base
    tee = TeeSequence(base)
    if tail is Tail.LOOP_TO_BASE:
        pre = [tee.value(1)]
        for n in plan.ns:
            pre.extend(_block(base, tee, n))
        if not base.is_generator_backed:
            return infinite_address(tuple(pre) + base.prefix, base.cycle)
        bounds = _entry_bounds(base)
        bound = None if bounds is None else max(abs(bounds[0]), abs(bounds[1]))
        return generator_address(
            base.entry,
            cap=base.cap + len(base.prefix),
            entry_bound=bound,
            name=base.gen_name,
            prefix=tuple(pre),
        )
    if not plan.ns:
        raise PreconditionError(
            "continuing the family needs at least one chosen block length"
        )
    if not base.is_generator_backed:
        pre = [tee.value(1)]
        for n in plan.ns[:-1]:
            pre.extend(_block(base, tee, n))
        return infinite_address(tuple(pre), tuple(_block(base, tee, plan.ns[-1])))
    cache: list = [tee.value(1)]
    consumed = {"blocks": 0}

    def entry_stream(j: int) -> int:
        while len(cache) < j:
            consumed["blocks"] += 1
            n = plan.ns[min(consumed["blocks"], len(plan.ns)) - 1]
            cache.extend(_block(base, tee, n))
        return cache[j - 1]

    bounds = _entry_bounds(base)
    bound = None if bounds is None else max(abs(bounds[0]), abs(bounds[1]))
    return generator_address(entry_stream, cap=cap, entry_bound=bound,
                             name="family")


# -- escape-threshold bookkeeping (claim-style reports) --------------------


def default_t0(s: ExternalAddress, kappa: complex) -> float:
    """Upper potential bound 2 t* + log+|kappa| + 8 used by the staged search."""
    return big_tee(s, kappa) + 4.0


@dataclasses.dataclass(frozen=True)
class Claim1Report:
    """Both sides of the family's potential bounds, asserted nowhere.

    The literal sup-based inequality t_r* <= t_s* + 2 fails already at
    the leading term 2 pi T_1 whenever the base entries are small, so
    this report only states the numbers; see the repository notes.
    ``t_reached`` is the lowest potential a trace of the family member
    actually attained, a practical stand-in for the minimal potential.
    """

    t_r_star: float
    t_s_star: float
    first_bound: float
    first_holds: bool
    leading_term: float
    existence_threshold: float
    t0: float
    t_reached: float
    second_holds: bool


def claim1_report(r: ExternalAddress, s: ExternalAddress,
                  kappa: complex) -> Claim1Report:
    if not (r.is_infinite and s.is_infinite):
        raise PreconditionError("claim reports need infinite addresses")
    t_r = growth_bounds(r).t_star
    t_s = growth_bounds(s).t_star
    t0 = default_t0(s, kappa)
    trace = trace_ray(Parameter(kappa), r, t0, DEFAULT.t_min_hint, 120)
    reached = trace.samples[-1].t
    return Claim1Report(
        t_r_star=t_r,
        t_s_star=t_s,
        first_bound=t_s + 2.0,
        first_holds=t_r <= t_s + 2.0,
        leading_term=TWO_PI * abs(r.entry(1)),
        existence_threshold=big_tee(r, kappa),
        t0=t0,
        t_reached=reached,
        second_holds=reached <= t0,
    )


@dataclasses.dataclass(frozen=True)
class Witness:
    """Mismatch witness for one shift offset m of the family member."""

    m: int
    k: int
    k_prime: int
    marker: int
    base_entry: int
    ok: bool


@dataclasses.dataclass(frozen=True)
class Claim2Report:
    plan: StagePlan
    depth: int
    witnesses: tuple
    all_ok: bool


def _tee_positions(plan: StagePlan, up_to: int):
    """Yield (position, index) pairs for the T markers in the family member."""
    pos = 1
    yield pos, 1
    j = 0
    while pos <= up_to:
        j += 1
        n = plan.ns[min(j, len(plan.ns)) - 1]
        pos += n
        yield pos, n


def claim2_check(plan: StagePlan, depth: int) -> Claim2Report:
    """Scan every shift offset m <= depth for an itinerary-mismatch witness.

    The family member carries a marker T_{k'} within each block; whenever
    that marker sits k steps past m with k' >= k, its value dominates
    2 + s_k, which forces the itineraries of the shifted candidate and of
    the base apart at position k.
    """
    if depth < 1:
        raise PreconditionError("witness scan depth must be >= 1")
    if not plan.ns:
        raise PreconditionError("witness scan needs a nonempty plan")
    base = plan.base
    tee = TeeSequence(base)
    markers = dict(_tee_positions(plan, 2 * depth + 1))
    witnesses = []
    for m in range(1, depth + 1):
        found = None
        for k in range(1, depth + 1):
            idx = markers.get(m + k)
            if idx is None or idx < k:
                continue
            marker = tee.value(idx)
            ok = marker >= 2 + base.entry(k)
            found = Witness(m, k, idx, marker, base.entry(k), ok)
            break
        if found is None:
            found = Witness(m, 0, 0, 0, 0, False)
        witnesses.append(found)
    return Claim2Report(plan, depth, tuple(witnesses),
                        all(w.ok for w in witnesses))


@dataclasses.dataclass(frozen=True)
class DistinctItinerariesReport:
    """Pairwise first itinerary differences for a family of plans."""

    pairs: tuple
    all_distinct: bool


def distinct_itineraries(plans, depth: int) -> DistinctItinerariesReport:
    plans = tuple(plans)
    if len(plans) < 2:
        raise PreconditionError("pairwise check needs at least two plans")
    base = plans[0].base
    if any(p.base != base for p in plans):
        raise PreconditionError("pairwise check needs a shared base")
    for i, a in enumerate(plans):
        for b in plans[i + 1:]:
            if a.ns == b.ns:
                raise PreconditionError("plans must be pairwise distinct")
    its = [
        itinerary(candidate_address(p, Tail.CONTINUE_FAMILY), base, depth)
        for p in plans
    ]
    pairs = []
    distinct = True
    for i in range(len(plans)):
        for j in range(i + 1, len(plans)):
            where = None
            for k in range(depth):
                if its[i].entries[k] != its[j].entries[k]:
                    where = k + 1
                    break
            pairs.append((i, j, where))
            if where is None:
                distinct = False
    return DistinctItinerariesReport(tuple(pairs), distinct)


# -- staged accumulation construction --------------------------------------


@dataclasses.dataclass(frozen=True)
class StageRecord:
    """Outcome of one stage: chosen block length and its potential witness."""

    j: int
    n: int
    t: float
    abs_g: float
    attempts: int
    tried: tuple = dataclasses.field(default=(), repr=False)


@dataclasses.dataclass(frozen=True)
class AccumulationCertificate:
    kappa: complex
    base: ExternalAddress
    t0: float
    grid: int
    stages: tuple
    final_prefix: tuple

    def __post_init__(self):
        last = math.inf
        for rec in self.stages:
            if rec.abs_g < rec.j:
                raise PreconditionError(
                    f"stage {rec.j} certifies only |g| = {rec.abs_g} < {rec.j}"
                )
            if not rec.t < last:
                raise PreconditionError("stage potentials must strictly decrease")
            if rec.t > self.t0:
                raise PreconditionError("stage potential exceeds the t0 bound")
            last = rec.t


def _grid_points(t0: float, t_min: float, grid: int) -> list:
    step = (t0 - t_min) / grid
    return [t0 - step * i for i in range(grid)]


def _reliable_modulus(p: Parameter, addr: ExternalAddress, t: float,
                      tol: Tolerances) -> Optional[float]:
    try:
        sample = trace_point(p, addr, t, tolerances=tol)
    except ExprayError:
        return None
    if sample.err_bound > RELIABLE_ERR:
        return None
    return abs(sample.z)


def select_next_stage(p: Parameter, s: ExternalAddress, prefix_plan: StagePlan,
                      j: int, t0: Optional[float] = None,
                      grid: Optional[int] = None, *,
                      t_upper: Optional[float] = None,
                      tolerances: Tolerances = DEFAULT) -> StageRecord:
    """Pick (t_j, n_j) for stage j over the already-fixed plan prefix.

    The preimage-stage ray is scanned on a fixed descending grid for the
    largest potential strictly below ``t_upper`` with |g| > j; the grid
    doubles a few times if none qualifies.  Block lengths are then tried
    upward from just past the previous stage's choice until the family
    member keeps |g| >= j at that potential.
    """
    if j < 1:
        raise PreconditionError("stage index must be >= 1")
    if t0 is None:
        t0 = default_t0(s, p.kappa)
    if grid is None:
        grid = tolerances.stage_grid
    if grid < 1:
        raise PreconditionError("stage grid must have at least one point")
    if t0 <= tolerances.t_min_hint:
        raise PreconditionError("t0 bound sits below the minimal potential hint")
    stage_addr = candidate_address(prefix_plan, Tail.LOOP_TO_BASE)

    t_j = None
    g = grid
    for _ in range(4):
        for t in _grid_points(t0, tolerances.t_min_hint, g):
            if t_upper is not None and t >= t_upper:
                continue
            value = _reliable_modulus(p, stage_addr, t, tolerances)
            if value is not None and value > j:
                t_j = t
                break
        if t_j is not None:
            break
        g *= 2
    if t_j is None:
        raise StageSearchError(
            f"stage {j}: no reliable grid potential achieves |g| > {j}"
        )

    start = prefix_plan.ns[-1] + 1 if prefix_plan.ns else 1
    tried = []
    for attempt in range(1, tolerances.stage_attempts + 1):
        n = start + attempt - 1
        member = candidate_address(prefix_plan.extended(n),
                                   Tail.CONTINUE_FAMILY)
        value = _reliable_modulus(p, member, t_j, tolerances)
        ok = value is not None and value >= j
        tried.append((n, value, ok))
        if ok:
            return StageRecord(j, n, t_j, value, attempt, tuple(tried))
    raise StageSearchError(
        f"stage {j}: no block length in {tolerances.stage_attempts} attempts "
        f"keeps |g| >= {j} at t = {t_j}"
    )


def build_certificate(p: Parameter, s: Optional[ExternalAddress] = None,
                      J: int = 4, grid: Optional[int] = None,
                      t0: Optional[float] = None,
                      tolerances: Tolerances = DEFAULT) -> AccumulationCertificate:
    """Run the staged construction for J stages and certify the outcome."""
    if s is None:
        s = p.address
    if s is None:
        raise PreconditionError("no base address given and none on the parameter")
    if J < 1:
        raise PreconditionError("a certificate needs at least one stage")
    if t0 is None:
        t0 = default_t0(s, p.kappa)
    if grid is None:
        grid = tolerances.stage_grid
    plan = StagePlan((), s)
    stages: list = []
    t_prev = None
    for j in range(1, J + 1):
        try:
            rec = select_next_stage(p, s, plan, j, t0, grid,
                                    t_upper=t_prev, tolerances=tolerances)
        except StageSearchError as err:
            err.partial = _certify(p.kappa, s, t0, grid, stages, plan)
            raise
        stages.append(rec)
        plan = plan.extended(rec.n)
        t_prev = rec.t
    return _certify(p.kappa, s, t0, grid, stages, plan)


def _certify(kappa, s, t0, grid, stages, plan) -> AccumulationCertificate:
    if plan.ns:
        member = candidate_address(plan, Tail.CONTINUE_FAMILY)
        prefix = tuple(member.entries(1 + sum(plan.ns)))
    else:
        prefix = ()
    return AccumulationCertificate(kappa, s, t0, grid, tuple(stages), prefix)


def certificate_to_json(cert: AccumulationCertificate) -> dict:
    try:
        base = format_address(cert.base)
    except ExprayError:
        base = cert.base.gen_name or "<generator>"
    return {
        "kappa": [cert.kappa.real, cert.kappa.imag],
        "baseAddress": base,
        "T0": cert.t0,
        "grid": cert.grid,
        "stages": [
            {"j": r.j, "n": r.n, "t": r.t, "absG": r.abs_g,
             "attempts": r.attempts}
            for r in cert.stages
        ],
        "finalPrefix": [int(e) for e in cert.final_prefix],
    }


# -- combinatorial membership for the rotation-domain variant --------------


def _nonperiodic_to_depth(s: ExternalAddress, depth: int) -> bool:
    for p in range(1, depth + 1):
        if all(s.entry(k) == s.entry(k + p) for k in range(1, depth + 1)):
            return False
    return True


def x_set_member(r: ExternalAddress, s: ExternalAddress, depth: int) -> bool:
    """Whether itin_s(r) stays adjacent to the all-zero kneading to depth.

    The base must be non-periodic with all-zero kneading entries (the
    normalised rotation setup); membership asks every resolved itinerary
    entry of r to be 0 or a boundary symbol containing 0.
    """
    if depth < 1:
        raise PreconditionError("membership depth must be >= 1")
    if not (r.is_infinite and s.is_infinite):
        raise PreconditionError("membership applies to infinite addresses")
    if not _nonperiodic_to_depth(s, depth):
        raise PreconditionError("base address is periodic within the depth")
    knead = kneading(s, depth)
    for e in knead.entries:
        if e != 0:
            raise PreconditionError(
                "base kneading is not normalised to the zero sequence"
            )
    it: Itinerary = itinerary(r, s, depth)
    for e in it.entries:
        if isinstance(e, Boundary):
            if 0 not in (e.upper, e.lower):
                return False
        elif e != 0:
            return False
    return True
